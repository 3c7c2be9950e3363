//! Deterministic 1-D integration and minimization on the circle and the line.
//!
//! Periodic integrals use the equispaced trapezoid rule with node doubling,
//! accumulated by signed log-sum-exp. Line integrals use adaptive bisection
//! with a 7-point Gauss–Lobatto–Kronrod panel rule.

use std::f64::consts::TAU;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::bodies2d::Angle;
use crate::error::{Error, Result};
use crate::log_value::{LogSum, LogValue};

pub const DEFAULT_MAX_NODES: usize = 1 << 16;
const START_NODES: usize = 64;
const MIN_CONVERGED_NODES: usize = 128;
const MINIMIZE_SCAN_NODES: usize = 4096;
const ARGMIN_REL_TOL: f64 = 1e-6;
const GOLDEN_WIDTH: f64 = 1e-12;
/// Integrands below this magnitude are treated as zero when truncating
/// infinite ranges.
pub const TRUNCATION_FLOOR: f64 = 1e-300;
const LINE_MAX_EVALS: usize = 2_000_000;
const ADAPTIVE_PANELS: usize = 8;
/// `ln(1e-15)`
const ROUNDING_LOG: f64 = -34.538_776_394_910_684;
/// Evaluations inside an arc stay this far from its endpoints, so one-sided
/// derivatives of piecewise bodies are taken on the correct side.
pub const KINK_SHIFT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: LogValue,
    pub nodes_used: usize,
    /// Relative change between the last two refinement levels.
    pub error_estimate: f64,
}

/// `∫₀^{2π} f(θ) dθ` by the trapezoid rule, doubling from 64 nodes until the
/// relative change drops below `tolerance`.
pub fn periodic_integrate<F>(f: F, tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> LogValue + Sync,
{
    periodic_integrate_scaled(
        |t| {
            let v = f(t);
            (v, v.abs())
        },
        tolerance,
        max_nodes,
    )
}

/// [`periodic_integrate`] for integrands that also report the magnitude of
/// the terms cancelled inside them. A change between refinements at
/// rounding level of that magnitude counts as converged.
pub fn periodic_integrate_scaled<F>(f: F, tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> (LogValue, LogValue) + Sync,
{
    assert!(tolerance > 0.0, "tolerance must be positive");
    let eval = |n: usize, range: std::ops::Range<usize>, step: usize| -> Vec<(LogValue, LogValue)> {
        range
            .into_par_iter()
            .step_by(step)
            .map(|j| f(Angle::new(TAU * j as f64 / n as f64)))
            .collect()
    };

    let mut n = START_NODES;
    let mut sum = LogSum::new();
    let mut abs_sum = LogSum::new();
    for (v, m) in eval(n, 0..n, 1) {
        sum.push(v);
        abs_sum.push(m.abs());
    }
    let mut estimate = sum.value() * LogValue::from_f64(TAU / n as f64);
    loop {
        if 2 * n > max_nodes.max(START_NODES) {
            return Err(Error::NumericalFailure {
                what: "periodic_integrate",
                detail: format!("no convergence to {tolerance:.1e} with {n} nodes"),
                last_estimate: Some(estimate),
            });
        }
        let fine = 2 * n;
        // new nodes are the odd indices of the refined grid
        for (v, m) in eval(fine, 1..fine, 2) {
            sum.push(v);
            abs_sum.push(m.abs());
        }
        let h = LogValue::from_f64(TAU / fine as f64);
        let refined = sum.value() * h;
        let absolute = abs_sum.value() * h;
        let change = refined - estimate;
        let rel = refined.relative_difference(estimate);
        // cancellation floor: the change is at rounding level of the absolute mass
        let at_rounding = change.is_zero() || change.log_abs() <= absolute.log_abs() + ROUNDING_LOG;
        n = fine;
        estimate = refined;
        if n >= MIN_CONVERGED_NODES && (rel < tolerance || at_rounding) {
            let error_estimate = if at_rounding && rel >= tolerance { 0.0 } else { rel };
            return Ok(QuadResult {
                value: estimate,
                nodes_used: n,
                error_estimate,
            });
        }
    }
}

/// Integral over the circle of an integrand that is smooth between the
/// given break angles. Without breaks this is [`periodic_integrate`];
/// otherwise each arc is integrated adaptively.
pub fn circle_integrate<F>(f: F, breaks: &[f64], tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> LogValue + Sync,
{
    circle_integrate_scaled(
        |t| {
            let v = f(t);
            (v, v.abs())
        },
        breaks,
        tolerance,
        max_nodes,
    )
}

/// [`circle_integrate`] with a cancellation magnitude, as in
/// [`periodic_integrate_scaled`].
pub fn circle_integrate_scaled<F>(f: F, breaks: &[f64], tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> (LogValue, LogValue) + Sync,
{
    if breaks.is_empty() {
        return periodic_integrate_scaled(f, tolerance, max_nodes);
    }
    let mut cuts: Vec<f64> = breaks.iter().map(|&b| Angle::new(b).radians()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let arcs: Vec<(f64, f64)> = (0..cuts.len())
        .map(|i| {
            let a = cuts[i];
            let b = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + TAU };
            (a, b)
        })
        .filter(|(a, b)| b - a > 2.0 * KINK_SHIFT)
        .collect();
    let parts: Vec<QuadResult> = arcs
        .par_iter()
        .map(|&(a, b)| {
            line_integrate_log_scaled(
                |t| f(Angle::new(t.clamp(a + KINK_SHIFT, b - KINK_SHIFT))),
                a,
                b,
                tolerance,
            )
        })
        .collect::<Result<_>>()?;
    Ok(QuadResult {
        value: LogValue::sum(parts.iter().map(|p| p.value)),
        nodes_used: parts.iter().map(|p| p.nodes_used).sum(),
        error_estimate: parts.iter().map(|p| p.error_estimate).fold(0.0, f64::max),
    })
}

/// [`circle_integrate`] for a fallible integrand. The integrand counts as
/// zero after a failure, and the first failure recorded is returned.
pub fn circle_integrate_fallible<F>(f: F, breaks: &[f64], tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> Result<LogValue> + Sync,
{
    circle_integrate_fallible_scaled(
        |t| {
            f(t).map(|v| (v, v.abs()))
        },
        breaks,
        tolerance,
        max_nodes,
    )
}

/// Fallible form of [`circle_integrate_scaled`].
pub fn circle_integrate_fallible_scaled<F>(f: F, breaks: &[f64], tolerance: f64, max_nodes: usize) -> Result<QuadResult>
where
    F: Fn(Angle) -> Result<(LogValue, LogValue)> + Sync,
{
    let failure = Mutex::new(None);
    let quad = circle_integrate_scaled(
        |th| {
            f(th).unwrap_or_else(|e| {
                failure.lock().expect("failure slot").get_or_insert(e);
                (LogValue::ZERO, LogValue::ZERO)
            })
        },
        breaks,
        tolerance,
        max_nodes,
    );
    match failure.into_inner().expect("failure slot") {
        Some(e) => Err(e),
        None => quad,
    }
}

/// `∫_a^b f(s) ds` with `b` possibly `+∞`. Infinite ranges are truncated
/// where `|f|` falls below `1e-300`.
pub fn line_integrate<F>(f: F, a: f64, b: f64, tolerance: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(Error::Domain(format!("line_integrate needs a < b, got [{a}, {b}]")));
    }
    let upper = if b.is_infinite() { truncation_point(&f, a)? } else { b };
    // panels of doubling width keep a peak near `a` from being undersampled
    // when the range is long
    let (mut value, mut evals, mut err) = (0.0f64, 0, 0.0);
    let mut lo = a;
    let mut step = 1.0f64.max(a.abs() * 1e-3);
    while lo < upper {
        let hi = if upper - lo <= 2.0 * step { upper } else { lo + step };
        let abs_tol = TRUNCATION_FLOOR.max(1e-3 * tolerance * value.abs());
        let (v, n, e) = adaptive_lobatto(&f, lo, hi, tolerance, abs_tol)?;
        value += v;
        evals += n;
        err += e;
        lo = hi;
        step *= 2.0;
    }
    Ok(QuadResult {
        value: LogValue::from_f64(value),
        nodes_used: evals,
        error_estimate: err,
    })
}

/// Finite-range integral of a log-domain integrand. The integrand is shifted
/// by the largest sampled log magnitude before integrating.
pub fn line_integrate_log<F>(f: F, a: f64, b: f64, tolerance: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> LogValue,
{
    line_integrate_log_scaled(
        |s| {
            let v = f(s);
            (v, v.abs())
        },
        a,
        b,
        tolerance,
    )
}

fn line_integrate_log_scaled<F>(f: F, a: f64, b: f64, tolerance: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> (LogValue, LogValue),
{
    if !(a < b) || !b.is_finite() {
        return Err(Error::Domain(format!("line_integrate_log needs finite a < b, got [{a}, {b}]")));
    }
    const SAMPLES: usize = 256;
    let shift = (0..=SAMPLES)
        .map(|i| {
            let (v, m) = f(a + (b - a) * i as f64 / SAMPLES as f64);
            v.log_abs().max(m.log_abs())
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok(QuadResult {
            value: LogValue::ZERO,
            nodes_used: SAMPLES + 1,
            error_estimate: 0.0,
        });
    }
    let shifted = |v: LogValue| match v.sign() {
        0 => 0.0,
        sg => f64::from(sg) * (v.log_abs() - shift).exp(),
    };
    let g = |s: f64| shifted(f(s).0);
    let magnitude = |s: f64| shifted(f(s).1.abs());
    // rounding floor from the cancelled magnitude over the initial panels
    let floor = 1e-15 * panel_sum(&magnitude, a, b);
    let (value, evals, err) = adaptive_lobatto(&g, a, b, tolerance, floor)?;
    Ok(QuadResult {
        value: LogValue::from_f64(value) * LogValue::from_log(shift),
        nodes_used: evals + 2 * SAMPLES + 1,
        error_estimate: err,
    })
}

fn panel_sum<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (0..ADAPTIVE_PANELS)
        .map(|i| {
            let w = (b - a) / ADAPTIVE_PANELS as f64;
            kronrod7(f, a + w * i as f64, a + w * (i + 1) as f64)
        })
        .sum()
}

/// First point of a doubling ladder from `a` where `|f|` is below `1e-300`.
pub(crate) fn truncation_point<F: Fn(f64) -> f64>(f: &F, a: f64) -> Result<f64> {
    let mut step = 1.0f64.max(a.abs() * 1e-3);
    let mut prev = f64::INFINITY;
    for _ in 0..1100 {
        let x = a + step;
        let v = f(x).abs();
        if v < TRUNCATION_FLOOR && prev < f64::INFINITY {
            return Ok(x);
        }
        prev = v;
        step *= 2.0;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::numerical("line_integrate", "integrand does not decay below 1e-300"))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "need at least one node");
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Fixed-order Gauss–Legendre rule on `[a, b]`. Unlike the adaptive rules
/// its value depends smoothly on the endpoints.
pub fn gauss_legendre_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * rule.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>()
}

const LOBATTO_ALPHA: f64 = 0.816_496_580_927_726; // sqrt(2/3)
const LOBATTO_BETA: f64 = 0.447_213_595_499_958; // 1/sqrt(5)

/// 7-point Gauss–Lobatto–Kronrod rule on `[a, b]` (exact for degree 9).
fn kronrod7<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let y = |x: f64| f(m + h * x);
    let ends = y(-1.0) + y(1.0);
    let alpha = y(-LOBATTO_ALPHA) + y(LOBATTO_ALPHA);
    let beta = y(-LOBATTO_BETA) + y(LOBATTO_BETA);
    let mid = y(0.0);
    h * (77.0 * ends + 432.0 * alpha + 625.0 * beta + 672.0 * mid) / 1470.0
}

/// Adaptive bisection. A panel is accepted when its rule value agrees with
/// the sum over its two halves to the panel's share of the tolerance.
/// Returns `(value, evaluations, relative error estimate)`.
fn adaptive_lobatto<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, usize, f64)> {
    const INITIAL: usize = ADAPTIVE_PANELS;
    let width = b - a;
    let mut stack: Vec<(f64, f64, f64)> = (0..INITIAL)
        .map(|i| {
            let lo = a + width * i as f64 / INITIAL as f64;
            let hi = a + width * (i + 1) as f64 / INITIAL as f64;
            (lo, hi, kronrod7(f, lo, hi))
        })
        .collect();
    let mut evals = 7 * INITIAL;
    let rough: f64 = stack.iter().map(|p| p.2).sum();
    let rough_abs: f64 = stack.iter().map(|p| p.2.abs()).sum();
    let target = (rel_tol * rough.abs()).max(1e-15 * rough_abs).max(abs_tol);

    let mut total = 0.0;
    let mut err_total = 0.0;
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = kronrod7(f, lo, mid);
        let right = kronrod7(f, mid, hi);
        evals += 14;
        let err = (whole - (left + right)).abs();
        let allowed = target * (hi - lo) / width;
        if err <= allowed || (hi - lo) <= 1e-13 * width.abs().max(lo.abs()) {
            total += left + right;
            err_total += err;
        } else {
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
        if evals > LINE_MAX_EVALS {
            return Err(Error::NumericalFailure {
                what: "line_integrate",
                detail: format!("no convergence on [{a}, {b}] after {evals} evaluations"),
                last_estimate: Some(LogValue::from_f64(total + stack.iter().map(|p| p.2).sum::<f64>())),
            });
        }
    }
    let rel = if total != 0.0 { err_total / total.abs() } else { 0.0 };
    Ok((total, evals, rel))
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `width`. Returns `(x, f(x))`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iters = 0;
    while (b - a) > width && iters < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// A run of grid nodes whose values lie within the argmin tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgminCluster {
    pub start: Angle,
    pub end: Angle,
    pub nodes: usize,
    pub best: Angle,
    pub best_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleMinimum {
    pub theta_star: Angle,
    pub min_value: f64,
    /// One refined minimizer per cluster.
    pub argmin_set: Vec<Angle>,
    pub clusters: Vec<ArgminCluster>,
}

/// Minimum of a continuous function on the circle: 4096-node scan,
/// golden-section refinement of each basin near the minimum, clustering.
pub fn circle_minimize<F: Fn(Angle) -> f64>(f: F) -> CircleMinimum {
    circle_minimize_with(f, MINIMIZE_SCAN_NODES)
}

pub fn circle_minimize_with<F: Fn(Angle) -> f64>(f: F, n: usize) -> CircleMinimum {
    assert!(n >= 8, "scan needs at least 8 nodes");
    let step = TAU / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| f(Angle::new(step * i as f64))).collect();
    let gmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = ARGMIN_REL_TOL * gmin.abs().max(f64::MIN_POSITIVE);
    let near: Vec<bool> = vals.iter().map(|&v| v <= gmin + tol).collect();

    let refine = |i: usize| -> (f64, f64) {
        let c = step * i as f64;
        let (t, v) = golden_section_min(|t| f(Angle::new(t)), c - step, c + step, GOLDEN_WIDTH);
        if v < vals[i] {
            (t, v)
        } else {
            (c, vals[i])
        }
    };

    let mut clusters = Vec::new();
    if near.iter().all(|&b| b) {
        let best = (0..n).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
        let (t, v) = refine(best);
        clusters.push(ArgminCluster {
            start: Angle::new(0.0),
            end: Angle::new(step * (n - 1) as f64),
            nodes: n,
            best: Angle::new(t),
            best_value: v,
        });
    } else {
        // start scanning right after a node outside the set so runs never wrap
        let origin = (0..n).find(|&i| !near[i]).expect("some node is outside the set");
        let mut i = 1;
        while i <= n {
            let idx = (origin + i) % n;
            if near[idx] {
                let first = idx;
                let mut len = 0;
                let mut best = idx;
                while i <= n && near[(origin + i) % n] {
                    let j = (origin + i) % n;
                    if vals[j] < vals[best] {
                        best = j;
                    }
                    len += 1;
                    i += 1;
                }
                let last = (first + len - 1) % n;
                let (t, v) = refine(best);
                clusters.push(ArgminCluster {
                    start: Angle::new(step * first as f64),
                    end: Angle::new(step * last as f64),
                    nodes: len,
                    best: Angle::new(t),
                    best_value: v,
                });
            } else {
                i += 1;
            }
        }
        // basins whose grid value misses the set but whose refined minimum may not
        let loose = 1e-3 * gmin.abs().max(f64::MIN_POSITIVE);
        for idx in 0..n {
            let (p, q) = (vals[(idx + n - 1) % n], vals[(idx + 1) % n]);
            if !near[idx] && vals[idx] <= p && vals[idx] <= q && vals[idx] <= gmin + loose {
                let (t, v) = refine(idx);
                if v <= gmin + tol {
                    clusters.push(ArgminCluster {
                        start: Angle::new(step * idx as f64),
                        end: Angle::new(step * idx as f64),
                        nodes: 1,
                        best: Angle::new(t),
                        best_value: v,
                    });
                }
            }
        }
    }
    let winner = clusters
        .iter()
        .min_by(|a, b| a.best_value.total_cmp(&b.best_value))
        .expect("at least one cluster")
        .clone();
    let argmin_set = clusters
        .iter()
        .filter(|c| c.best_value <= winner.best_value + tol)
        .map(|c| c.best)
        .collect();
    CircleMinimum {
        theta_star: winner.best,
        min_value: winner.best_value,
        argmin_set,
        clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    use crate::bodies2d::SupportBody2D;

    fn lv(x: f64) -> LogValue {
        LogValue::from_f64(x)
    }

    #[test]
    fn constant_integrand() {
        let r = periodic_integrate(|_| LogValue::ONE, 1e-12, DEFAULT_MAX_NODES).unwrap();
        assert_relative_eq!(r.value.to_f64(), TAU, max_relative = 1e-14);
    }

    #[test]
    fn cosine_cancels_with_sign() {
        let r = periodic_integrate(|t| lv(t.radians().cos()), 1e-12, DEFAULT_MAX_NODES).unwrap();
        assert!(r.value.to_f64().abs() < 1e-14);
    }

    fn peak_reference() -> f64 {
        let n = 1_000_000;
        let h = TAU / n as f64;
        (0..n)
            .map(|j| (-100.0 * (1.0 - (h * j as f64).cos())).exp())
            .sum::<f64>()
            * h
    }

    #[test]
    fn sharp_peak_matches_direct_sum() {
        let reference = peak_reference();
        let r = periodic_integrate(
            |t| LogValue::from_log(-100.0 * (1.0 - t.radians().cos())),
            1e-12,
            DEFAULT_MAX_NODES,
        )
        .unwrap();
        assert_relative_eq!(r.value.to_f64(), reference, max_relative = 1e-10);
    }

    #[test]
    fn trapezoid_converges_geometrically_on_the_peak() {
        let reference = peak_reference();
        let trap = |n: usize| {
            let h = TAU / n as f64;
            (0..n)
                .map(|j| (-100.0 * (1.0 - (h * j as f64).cos())).exp())
                .sum::<f64>()
                * h
        };
        let errs: Vec<f64> = [32, 48, 64].iter().map(|&n| (trap(n) - reference).abs()).collect();
        assert!(errs[1] < 1e-2 * errs[0]);
        assert!(errs[2] < 1e-2 * errs[1]);
    }

    #[test]
    fn log_domain_shift_is_exact() {
        let f = |t: Angle| LogValue::from_log(-5.0 * (1.0 - t.radians().cos()));
        let k = (1e-250f64).ln();
        let a = periodic_integrate(f, 1e-12, DEFAULT_MAX_NODES).unwrap();
        let b = periodic_integrate(|t| f(t) * LogValue::from_log(k), 1e-12, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(a.value.sign(), b.value.sign());
        assert!((b.value.log_abs() - a.value.log_abs() - k).abs() < 1e-12);
    }

    #[test]
    fn deeply_underflowed_integrand() {
        // ∫ e^{-3000} dθ = 2π e^{-3000}
        let r = periodic_integrate(|_| LogValue::from_log(-3000.0), 1e-12, 1024).unwrap();
        assert_relative_eq!(r.value.log_abs(), TAU.ln() - 3000.0, epsilon = 1e-12);
    }

    #[test]
    fn periodic_reports_nonconvergence() {
        // a cusp converges only algebraically
        let err = periodic_integrate(|t| lv((t.radians() - PI).abs().sqrt()), 1e-14, 256).unwrap_err();
        match err {
            Error::NumericalFailure { last_estimate, .. } => assert!(last_estimate.is_some()),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn arcs_handle_kinks() {
        let r = circle_integrate(|t| lv((t.radians() - PI).abs()), &[0.0, PI], 1e-12, 1024).unwrap();
        assert_relative_eq!(r.value.to_f64(), PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn gauss_legendre_rules() {
        let rule = gauss_legendre(20);
        assert_relative_eq!(rule.iter().map(|p| p.1).sum::<f64>(), 2.0, epsilon = 1e-14);
        let v = gauss_legendre_integrate(|x| x.powi(38), -1.0, 1.0, &rule);
        assert_relative_eq!(v, 2.0 / 39.0, max_relative = 1e-13);
        let v = gauss_legendre_integrate(f64::exp, 0.0, 1.0, &gauss_legendre(3));
        assert_relative_eq!(v, std::f64::consts::E - 1.0, max_relative = 1e-5);
    }

    #[test]
    fn line_integrals() {
        let r = line_integrate(|s| s, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(r.value.to_f64(), 0.5, epsilon = 1e-15);
        let r = line_integrate(|s| s * (-0.5 * s * s).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert_relative_eq!(r.value.to_f64(), 1.0, epsilon = 1e-10);
        // reference 1.4936482656248540 from a 2e6-node midpoint sum
        let r = line_integrate(|t| (-t * t).exp(), -1.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(r.value.to_f64(), 1.493_648_265_624_854, epsilon = 1e-9);
        assert!(line_integrate(|s| s, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn midpoint_reference_for_erf_integral() {
        let n = 2_000_000;
        let h = 2.0 / n as f64;
        let sum: f64 = (0..n)
            .map(|i| {
                let t = -1.0 + h * (i as f64 + 0.5);
                (-t * t).exp()
            })
            .sum::<f64>()
            * h;
        assert!((sum - 1.493_648_265_624_854).abs() < 1e-9);
    }

    #[test]
    fn log_line_integral_far_below_underflow() {
        let r = line_integrate_log(|s| LogValue::from_log(-2000.0 - s), 0.0, 1.0, 1e-12).unwrap();
        let expected = -2000.0 + (1.0 - (-1.0f64).exp()).ln();
        assert_relative_eq!(r.value.log_abs(), expected, epsilon = 1e-12);
    }

    #[test]
    fn minimize_examples() {
        let m = circle_minimize(|t| 2.0 + t.radians().cos());
        assert_relative_eq!(m.min_value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(m.theta_star.radians(), PI, epsilon = 1e-6);
        assert_eq!(m.argmin_set.len(), 1);

        let e = SupportBody2D::ellipse(2.0, 1.0).unwrap();
        let m = circle_minimize(|t| e.support(t));
        assert_relative_eq!(m.min_value, 1.0, epsilon = 1e-14);
        let mut got: Vec<f64> = m.argmin_set.iter().map(|a| a.radians()).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), 2);
        assert_relative_eq!(got[0], FRAC_PI_2, epsilon = 1e-6);
        assert_relative_eq!(got[1], 1.5 * PI, epsilon = 1e-6);

        let m = circle_minimize(|_| 3.5);
        assert_eq!(m.min_value, 3.5);
        assert_eq!(m.clusters.len(), 1);
        assert_eq!(m.clusters[0].nodes, MINIMIZE_SCAN_NODES);
    }

    #[test]
    fn minimize_is_deterministic() {
        let f = |t: Angle| (3.0 * t.radians()).sin() + 0.1 * t.radians().cos();
        assert_eq!(circle_minimize(f), circle_minimize(f));
        let g = |t: Angle| LogValue::from_log(-20.0 * (1.0 - t.radians().cos()));
        let a = periodic_integrate(g, 1e-12, DEFAULT_MAX_NODES).unwrap();
        let b = periodic_integrate(g, 1e-12, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(a, b);
    }
}
