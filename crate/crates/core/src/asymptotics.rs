//! Rate sweeps: `ln|μ| / φ(r·t)` along a grid of dilations, the tail rate,
//! and the comparison harness pairing a measure inequality with the
//! geometric inclusion `R·L ⊆ K`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies2d::{inradius, Angle, SupportBody2D};
use crate::densities::{MeasureSpec, PhiFunction, PhiKind};
use crate::error::{Error, Result};
use crate::log_value::LogValue;
use crate::mixed::{gaussian_second, mixed_first, mixed_second, MixedValue};
use crate::oracles::body_tail_mass;
use crate::quadrature::circle_minimize;

/// Smallest tail probability the log-domain pipeline reports.
const TAIL_FLOOR_LOG10: f64 = -290.0;
const INCLUSION_NODES: usize = 4096;
const INCLUSION_TOL: f64 = 1e-9;
const COMPARISON_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    First,
    Second,
    GaussianSecond,
    Tail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateSweep {
    pub kind: SweepKind,
    pub t_grid: Vec<f64>,
    pub log_values: Vec<LogValue>,
    /// `ln|value| / φ(r t)`; `None` where the sign is not the expected one.
    pub ratios: Vec<Option<f64>>,
    pub phi_rt: Vec<f64>,
    pub nodes: Vec<usize>,
    pub rate_r: f64,
    pub warnings: Vec<String>,
}

impl RateSweep {
    fn build(kind: SweepKind, t_grid: &[f64], values: Vec<(LogValue, usize)>, rate_r: f64, phi_rt: Vec<f64>) -> Self {
        let expected = match kind {
            SweepKind::First | SweepKind::Tail => 1,
            SweepKind::Second | SweepKind::GaussianSecond => -1,
        };
        let ratios = values
            .iter()
            .zip(&phi_rt)
            .map(|((v, _), p)| (v.sign() == expected).then(|| v.log_abs() / p))
            .collect();
        let mut sweep = RateSweep {
            kind,
            t_grid: t_grid.to_vec(),
            log_values: values.iter().map(|v| v.0).collect(),
            ratios,
            phi_rt,
            nodes: values.iter().map(|v| v.1).collect(),
            rate_r,
            warnings: Vec::new(),
        };
        if sweep.t_grid.len() >= 2 && !sweep.trends_to_minus_one() {
            sweep
                .warnings
                .push("ratio at the largest t is not closer to -1 than at the smallest".into());
        }
        sweep
    }

    /// Ratio at the last grid point.
    pub fn last_ratio(&self) -> Option<f64> {
        self.ratios.last().copied().flatten()
    }

    /// Ratio at the grid point nearest `t`.
    pub fn ratio_near(&self, t: f64) -> Option<f64> {
        let i = self
            .t_grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.ratios[i]
    }

    /// `|ratio(t_max) + 1| < |ratio(t_min) + 1|`.
    pub fn trends_to_minus_one(&self) -> bool {
        match (self.ratios.first().copied().flatten(), self.last_ratio()) {
            (Some(a), Some(b)) => (b + 1.0).abs() < (a + 1.0).abs(),
            _ => false,
        }
    }
}

/// `points` log-spaced values in `[t_min, t_max]`.
pub fn log_grid(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || points < 2 {
        return Err(Error::Domain(format!(
            "grid needs 0 < t_min < t_max and at least two points, got [{t_min}, {t_max}] with {points}"
        )));
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..points)
        .map(|i| {
            if i == 0 {
                t_min
            } else if i + 1 == points {
                t_max
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

/// 16 log-spaced points: `[2.5, 14]` for power profiles, `[2.5, 40]` for
/// linear ones and `[1, 4]` for the doubly exponential profile.
pub fn default_t_grid(phi: &PhiFunction) -> Vec<f64> {
    let (lo, hi) = match phi.kind() {
        PhiKind::Linear { .. } => (2.5, 40.0),
        PhiKind::Expm1 { .. } => (1.0, 4.0),
        _ => (2.5, 14.0),
    };
    log_grid(lo, hi, 16).expect("valid default grid")
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("t grid must be nonempty and positive".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t grid must be increasing".into()));
    }
    Ok(())
}

fn phi_at(phi: &PhiFunction, r: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    t_grid.iter().map(|&t| phi.eval(r * t)).collect()
}

fn evaluate<F>(t_grid: &[f64], f: F) -> Result<Vec<MixedValue>>
where
    F: Fn(f64) -> Result<MixedValue> + Sync,
{
    t_grid.par_iter().map(|&t| f(t)).collect()
}

/// `ln μ(tK; M) / φ(r(K, L) t)`, which tends to −1.
pub fn rate_sweep_first(k: &SupportBody2D, m: &SupportBody2D, measure: &MeasureSpec, t_grid: &[f64]) -> Result<RateSweep> {
    check_grid(t_grid)?;
    let r = inradius(k, &measure.gauge_body)?.r;
    let values = evaluate(t_grid, |t| mixed_first(k, m, measure, t))?;
    if let Some(v) = values.iter().find(|v| v.value.sign() != 1) {
        return Err(Error::InvariantViolation(format!(
            "first-order mixed measure has sign {} at t = {}",
            v.value.sign(),
            v.t
        )));
    }
    let pairs = values.iter().map(|v| (v.value, v.quad.nodes_used)).collect();
    Ok(RateSweep::build(SweepKind::First, t_grid, pairs, r, phi_at(&measure.phi, r, t_grid)?))
}

fn require_negative(values: &[MixedValue]) -> Result<()> {
    match values.iter().find(|v| v.value.sign() >= 0) {
        Some(v) => Err(Error::SignThreshold { t: v.t }),
        None => Ok(()),
    }
}

/// `ln[−μ(tA; B, C)] / φ(r(A, L) t)`, which tends to −1 under the growth
/// hypothesis `ln φ′/φ → 0`.
pub fn rate_sweep_second(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    t_grid: &[f64],
) -> Result<RateSweep> {
    check_grid(t_grid)?;
    let r = inradius(a, &measure.gauge_body)?.r;
    let growth = measure.phi.growth_condition_report(t_grid)?;
    let values = evaluate(t_grid, |t| mixed_second(a, b, c, measure, t))?;
    require_negative(&values)?;
    let pairs = values.iter().map(|v| (v.value, v.quad.nodes_used)).collect();
    let mut sweep = RateSweep::build(SweepKind::Second, t_grid, pairs, r, phi_at(&measure.phi, r, t_grid)?);
    if !growth.decreasing_to_zero {
        sweep
            .warnings
            .push("ln φ'/φ is not decreasing to zero on the grid; a limit of −1 is not guaranteed".into());
    }
    Ok(sweep)
}

/// Gaussian second-order rate: `ln[−γ₂(tA; B, C)] / (r² t²/2)` with
/// `r = r(A, B₂)`.
pub fn rate_sweep_gaussian_second(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    t_grid: &[f64],
) -> Result<RateSweep> {
    check_grid(t_grid)?;
    let r = inradius(a, &SupportBody2D::disk(1.0)?)?.r;
    let values = evaluate(t_grid, |t| gaussian_second(a, b, c, t))?;
    require_negative(&values)?;
    let pairs = values.iter().map(|v| (v.value, v.quad.nodes_used)).collect();
    let phi_rt = t_grid.iter().map(|t| 0.5 * (r * t).powi(2)).collect();
    Ok(RateSweep::build(SweepKind::GaussianSecond, t_grid, pairs, r, phi_rt))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMinimum {
    pub min_value: f64,
    pub argmin: Vec<Angle>,
}

/// `min_θ h_A² + h_A′² = min |x_A(θ)|²`, the Gaussian rate constant.
pub fn min_energy(a: &SupportBody2D) -> Result<EnergyMinimum> {
    if !a.is_c2plus() {
        return Err(Error::UnsupportedSmoothness);
    }
    let m = circle_minimize(|th| {
        let j = a.support_eval(th);
        j.h * j.h + j.dh * j.dh
    });
    Ok(EnergyMinimum {
        min_value: m.min_value,
        argmin: m.argmin_set,
    })
}

/// Largest `t` whose tail `≈ e^{-φ(r t)}` stays above the reporting floor.
fn max_tail_t(phi: &PhiFunction, r: f64) -> f64 {
    let target = -TAIL_FLOOR_LOG10 * std::f64::consts::LN_10;
    let (mut lo, mut hi) = (0.0, 1.0);
    if phi.is_debug_zero() {
        return f64::INFINITY;
    }
    while phi.value(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi.value(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi / r
}

/// `ln μ((tK)^c) / φ(r(K, L) t)` for a probability measure.
pub fn tail_rate(k: &SupportBody2D, measure: &MeasureSpec, t_grid: &[f64]) -> Result<RateSweep> {
    if !measure.normalized {
        return Err(Error::Precondition("tail rates need a normalized measure".into()));
    }
    check_grid(t_grid)?;
    let r = inradius(k, &measure.gauge_body)?.r;
    let tails: Vec<LogValue> = t_grid
        .par_iter()
        .map(|&t| body_tail_mass(k, measure, t))
        .collect::<Result<_>>()?;
    let floor = TAIL_FLOOR_LOG10 * std::f64::consts::LN_10;
    for (&t, v) in t_grid.iter().zip(&tails) {
        if v.is_zero() || v.log_abs() < floor {
            return Err(Error::TailRange {
                t,
                max_t: max_tail_t(&measure.phi, r),
            });
        }
        if v.sign() != 1 {
            return Err(Error::InvariantViolation(format!("negative tail at t = {t}")));
        }
    }
    let pairs = tails.into_iter().map(|v| (v, 0)).collect();
    Ok(RateSweep::build(SweepKind::Tail, t_grid, pairs, r, phi_at(&measure.phi, r, t_grid)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InclusionCheck {
    /// `r(K, L)`
    pub r: f64,
    /// `R·h_L ≤ h_K` on the check grid.
    pub inclusion_holds: bool,
    /// `max(R·h_L − h_K)` on the check grid.
    pub max_excess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// The measure inequality held and `R·L ⊆ K`.
    Consistent,
    /// The inequality failed and `R > r(K, L)`, so `R·L ⊄ K`: as expected.
    Violated,
    /// The inequality held on the grid although `R > r(K, L)`: a larger
    /// grid is needed.
    Inconclusive { max_t: f64 },
    /// The inequality failed although `R·L ⊆ K`; the inclusion alone does
    /// not imply the inequality.
    NotImplied,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    #[serde(rename = "R")]
    pub r_factor: f64,
    pub holds_on_grid: bool,
    pub first_violation_t: Option<f64>,
    pub inradius_check: InclusionCheck,
    pub verdict: Verdict,
    pub t_grid: Vec<f64>,
    /// `ln μ(tRL; M)` per grid point
    pub log_scaled_l: Vec<f64>,
    /// `ln μ(tK; M)` per grid point
    pub log_k: Vec<f64>,
}

/// Tests `μ(tRL; M) ≥ μ(tK; M)` on the grid and pairs the outcome with the
/// support-function check of `R·L ⊆ K`.
pub fn comparison_check(
    k: &SupportBody2D,
    l: &SupportBody2D,
    r_factor: f64,
    m: &SupportBody2D,
    measure: &MeasureSpec,
    t_grid: &[f64],
) -> Result<ComparisonReport> {
    check_grid(t_grid)?;
    let rl = l.scaled(r_factor)?;
    let lhs = evaluate(t_grid, |t| mixed_first(&rl, m, measure, t))?;
    let rhs = evaluate(t_grid, |t| mixed_first(k, m, measure, t))?;
    let slack = (1.0 - COMPARISON_TOL).ln();
    let first_violation_t = lhs
        .iter()
        .zip(&rhs)
        .find(|(a, b)| a.value.log_abs() < b.value.log_abs() + slack)
        .map(|(a, _)| a.t);

    let r = inradius(k, l)?.r;
    let scale = (0..INCLUSION_NODES)
        .map(|i| k.support(Angle::new(std::f64::consts::TAU * i as f64 / INCLUSION_NODES as f64)))
        .fold(0.0, f64::max);
    let max_excess = (0..INCLUSION_NODES)
        .map(|i| {
            let th = Angle::new(std::f64::consts::TAU * i as f64 / INCLUSION_NODES as f64);
            r_factor * l.support(th) - k.support(th)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let inclusion_holds = max_excess <= INCLUSION_TOL * scale;
    let within = r_factor <= r * (1.0 + INCLUSION_TOL);
    if within && !inclusion_holds {
        return Err(Error::InvariantViolation(format!(
            "R = {r_factor} ≤ r(K, L) = {r} but the support check finds R·h_L exceeding h_K by {max_excess:e}"
        )));
    }
    let holds = first_violation_t.is_none();
    let verdict = match (holds, within) {
        (true, true) => Verdict::Consistent,
        (true, false) => Verdict::Inconclusive {
            max_t: *t_grid.last().expect("nonempty grid"),
        },
        (false, false) => Verdict::Violated,
        (false, true) => Verdict::NotImplied,
    };
    Ok(ComparisonReport {
        r_factor,
        holds_on_grid: holds,
        first_violation_t,
        inradius_check: InclusionCheck {
            r,
            inclusion_holds,
            max_excess,
        },
        verdict,
        t_grid: t_grid.to_vec(),
        log_scaled_l: lhs.iter().map(|v| v.value.log_abs()).collect(),
        log_k: rhs.iter().map(|v| v.value.log_abs()).collect(),
    })
}
