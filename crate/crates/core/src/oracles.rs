//! Brute-force evaluations straight from the definitions, used to check the
//! closed-form paths.
//!
//! Finite differences of masses are formed pointwise in the polar angle:
//! each shell `Ψ(b) − Ψ(a)` is integrated directly over `[a, b]`, so the
//! difference of two large masses is never taken.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies2d::{minkowski_combine, Angle, SupportBody2D, Vec2};
use crate::densities::{partial_radial_mass, radial_mass_between, radial_tail_mass, MeasureSpec, PhiFunction};
use crate::error::{Error, Result};
use crate::log_value::LogValue;
use crate::quadrature::{circle_integrate_fallible, circle_integrate_fallible_scaled, QuadResult, DEFAULT_MAX_NODES};

const MASS_TOL: f64 = 1e-12;
const SIGNIFICANCE_FLOOR: f64 = 1e-280;
const MIN_STEP: f64 = 1e-6;

/// Finite-difference steps, largest first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepSchedule {
    steps: Vec<f64>,
    extrapolate: bool,
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>, extrapolate: bool) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("step schedule is empty".into()));
        }
        if steps.iter().any(|&s| !(s > MIN_STEP && s.is_finite())) {
            return Err(Error::Domain(format!("steps must exceed {MIN_STEP:e}")));
        }
        if steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("steps must be strictly decreasing".into()));
        }
        Ok(StepSchedule { steps, extrapolate })
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn extrapolate(&self) -> bool {
        self.extrapolate
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            steps: vec![1e-2, 5e-3, 2.5e-3],
            extrapolate: true,
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("scale must be positive, got {scale}")))
    }
}

fn union_kinks(bodies: &[&SupportBody2D]) -> Vec<f64> {
    bodies.iter().flat_map(|b| b.radial_kinks()).collect()
}

/// `μ(scale·C)` in polar coordinates: `c0 ∫ g⁻² Ψ(scale·ρ_C·g) dθ` with
/// `g(θ) = ‖u(θ)‖_L`.
pub fn body_mass(c: &SupportBody2D, measure: &MeasureSpec, scale: f64) -> Result<LogValue> {
    check_scale(scale)?;
    let l = &measure.gauge_body;
    let q = circle_integrate_fallible(
        |th| {
            let g = l.gauge(th.unit());
            let psi = partial_radial_mass(&measure.phi, scale * c.radial(th) * g)?;
            Ok(LogValue::from_f64(psi / (g * g)))
        },
        &union_kinks(&[c, l]),
        MASS_TOL,
        DEFAULT_MAX_NODES,
    )?;
    Ok(q.value * measure.log_c0())
}

/// `μ((scale·C)^c) = c0 ∫ g⁻² ∫_{scale·ρ·g}^∞ s e^{-φ(s)} ds dθ`, evaluated
/// directly rather than as `1 − μ(scale·C)`.
pub fn body_tail_mass(c: &SupportBody2D, measure: &MeasureSpec, scale: f64) -> Result<LogValue> {
    check_scale(scale)?;
    let l = &measure.gauge_body;
    let q = circle_integrate_fallible(
        |th| {
            let g = l.gauge(th.unit());
            let tail = radial_tail_mass(&measure.phi, scale * c.radial(th) * g)?;
            Ok(tail * LogValue::from_f64(1.0 / (g * g)))
        },
        &union_kinks(&[c, l]),
        MASS_TOL,
        DEFAULT_MAX_NODES,
    )?;
    Ok(q.value * measure.log_c0())
}

/// `c0 ∫ g⁻² Σ wᵢ [Ψ(ρ_{outerᵢ} g) − Ψ(ρ_{innerᵢ} g)] dθ` for signed weights.
fn shell_integral(shells: &[(f64, &SupportBody2D, &SupportBody2D)], measure: &MeasureSpec) -> Result<QuadResult> {
    let l = &measure.gauge_body;
    let phi: &PhiFunction = &measure.phi;
    let mut bodies: Vec<&SupportBody2D> = vec![l];
    for (_, inner, outer) in shells {
        bodies.push(inner);
        bodies.push(outer);
    }
    circle_integrate_fallible_scaled(
        |th| {
            let g = l.gauge(th.unit());
            let (mut total, mut magnitude) = (0.0, 0.0);
            for (w, inner, outer) in shells {
                let (a, b) = (inner.radial(th) * g, outer.radial(th) * g);
                total += w * radial_mass_between(phi, a, b)?;
                // rounding in the radii moves each shell by about ε·x²e^{-φ(x)}
                magnitude += w.abs() * (a * a * (-phi.value(a)).exp() + b * b * (-phi.value(b)).exp());
            }
            let g2 = g * g;
            Ok((LogValue::from_f64(total / g2), LogValue::from_f64(magnitude / g2)))
        },
        &union_kinks(&bodies),
        MASS_TOL,
        DEFAULT_MAX_NODES,
    )
}

/// Value at 0 of the polynomial through `(xs, ys)` (Neville's scheme).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

fn combine(xs: &[f64], values: Vec<LogValue>, schedule: &StepSchedule) -> Result<LogValue> {
    if let Some(v) = values.iter().find(|v| v.is_zero() || v.log_abs() < SIGNIFICANCE_FLOOR.ln()) {
        return Err(Error::Unreliable(format!(
            "finite difference {v} is below {SIGNIFICANCE_FLOOR:e} in magnitude"
        )));
    }
    if !schedule.extrapolate() || xs.len() == 1 {
        return Ok(*values.last().expect("nonempty schedule"));
    }
    // extrapolate relative to the last value so tiny magnitudes stay representable
    let anchor = values.last().expect("nonempty schedule").abs();
    let ys: Vec<f64> = values.iter().map(|v| (*v / anchor).to_f64()).collect();
    Ok(LogValue::from_f64(extrapolate_to_zero(xs, &ys)) * anchor)
}

/// `μ(tK; M)` as `[μ(tK + εM) − μ(tK)]/ε`, extrapolated to `ε → 0`.
pub fn fd_first(
    k: &SupportBody2D,
    m: &SupportBody2D,
    measure: &MeasureSpec,
    t: f64,
    schedule: &StepSchedule,
) -> Result<LogValue> {
    check_scale(t)?;
    let inner = k.scaled(t)?;
    let values = schedule
        .steps()
        .par_iter()
        .map(|&eps| {
            let outer = minkowski_combine(&[(t, k.clone()), (eps, m.clone())])?;
            let q = shell_integral(&[(1.0, &inner, &outer)], measure)?;
            Ok(q.value * measure.log_c0() * LogValue::from_f64(1.0 / eps))
        })
        .collect::<Result<Vec<_>>>()?;
    combine(schedule.steps(), values, schedule)
}

/// `μ(tA; B, C)` as the mixed second difference
/// `[μ(tA+sB+sC) − μ(tA+sB) − μ(tA+sC) + μ(tA)]/s²`, extrapolated.
pub fn fd_second(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    t: f64,
    schedule: &StepSchedule,
) -> Result<LogValue> {
    check_scale(t)?;
    let base = a.scaled(t)?;
    let values = schedule
        .steps()
        .par_iter()
        .map(|&s| {
            let with_b = minkowski_combine(&[(t, a.clone()), (s, b.clone())])?;
            let with_c = minkowski_combine(&[(t, a.clone()), (s, c.clone())])?;
            let with_bc = minkowski_combine(&[(t, a.clone()), (s, b.clone()), (s, c.clone())])?;
            let q = shell_integral(&[(1.0, &with_c, &with_bc), (-1.0, &base, &with_b)], measure)?;
            Ok(q.value * measure.log_c0() * LogValue::from_f64(1.0 / (s * s)))
        })
        .collect::<Result<Vec<_>>>()?;
    combine(schedule.steps(), values, schedule)
}

/// Central differences of `‖·‖_L` at steps `h` and `h/2`, Richardson-combined.
pub fn gauge_gradient_fd(l: &SupportBody2D, x: Vec2, h: f64) -> Result<Vec2> {
    if x == Vec2::ZERO {
        return Err(Error::Domain("gauge gradient at the origin".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let central = |e: Vec2, h: f64| (l.gauge(x + e * h) - l.gauge(x - e * h)) / (2.0 * h);
    let rich = |e: Vec2| (4.0 * central(e, 0.5 * h) - central(e, h)) / 3.0;
    Ok(Vec2::new(rich(Vec2::new(1.0, 0.0)), rich(Vec2::new(0.0, 1.0))))
}

/// `min h_K/h_L` over `n_grid` equispaced angles, without refinement.
pub fn inradius_bruteforce(k: &SupportBody2D, l: &SupportBody2D, n_grid: usize) -> Result<f64> {
    if n_grid < 10_000 {
        return Err(Error::Precondition(format!("brute-force grid needs at least 10⁴ angles, got {n_grid}")));
    }
    let step = std::f64::consts::TAU / n_grid as f64;
    Ok((0..n_grid)
        .map(|i| {
            let th = Angle::new(step * i as f64);
            k.support(th) / l.support(th)
        })
        .fold(f64::INFINITY, f64::min))
}

/// One configuration of the built-in cross-check matrix. First-order checks
/// use `(a, b)`, second-order checks `(a, b, c)`.
#[derive(Clone, Debug)]
pub struct TestCase {
    pub name: &'static str,
    pub a: SupportBody2D,
    pub b: SupportBody2D,
    pub c: SupportBody2D,
    pub measure: MeasureSpec,
    pub t: f64,
}

/// The six built-in configurations.
pub fn test_matrix() -> Vec<TestCase> {
    let disk = || SupportBody2D::disk(1.0).expect("disk");
    let ellipse = |a, b| SupportBody2D::ellipse(a, b).expect("ellipse");
    let fourier = |a0, c: &[f64], s: &[f64]| SupportBody2D::fourier(a0, c.to_vec(), s.to_vec()).expect("fourier");
    let spec = |phi: PhiFunction, l: SupportBody2D| MeasureSpec::new(phi, l, 1.0).expect("measure");
    vec![
        TestCase {
            name: "disks, gaussian",
            a: disk(),
            b: disk(),
            c: disk(),
            measure: MeasureSpec::gaussian(),
            t: 2.0,
        },
        TestCase {
            name: "ellipse against disks, gaussian",
            a: ellipse(2.0, 1.0),
            b: disk(),
            c: disk(),
            measure: MeasureSpec::gaussian(),
            t: 2.0,
        },
        TestCase {
            name: "ellipse, mixed smooth B and C, gaussian",
            a: ellipse(2.0, 1.0),
            b: ellipse(1.5, 0.7),
            c: fourier(1.0, &[0.3], &[]),
            measure: MeasureSpec::gaussian(),
            t: 1.5,
        },
        TestCase {
            name: "fourier body, linear profile",
            a: fourier(1.5, &[0.0, 0.1], &[0.0, 0.05]),
            b: disk(),
            c: ellipse(2.0, 1.0),
            measure: spec(PhiFunction::linear(1.0).expect("phi"), disk()),
            t: 2.0,
        },
        TestCase {
            name: "ellipse, power 3/2 profile, elliptic gauge",
            a: ellipse(1.5, 0.7),
            b: fourier(2.0, &[0.2, 0.1, 0.05], &[]),
            c: fourier(2.0, &[0.2, 0.1, 0.05], &[]),
            measure: spec(PhiFunction::power(1.0, 1.5).expect("phi"), ellipse(2.0, 1.0)),
            t: 3.0,
        },
        TestCase {
            name: "fourier body, exponential profile, square B",
            a: fourier(1.2, &[-0.1, 0.08], &[0.1, 0.0, 0.0, 0.01]),
            b: SupportBody2D::square(1.0).expect("square"),
            c: disk(),
            measure: spec(PhiFunction::expm1(1.0).expect("phi"), disk()),
            t: 1.5,
        },
    ]
}

/// Relative disagreement between closed forms and definition oracles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub first_rel: f64,
    pub second_rel: f64,
}

/// `mixed_first(A; B)` against `fd_first`, and `mixed_second(A; B, C)`
/// against `fd_second`.
pub fn cross_check(case: &TestCase, schedule: &StepSchedule) -> Result<CrossCheck> {
    let first = crate::mixed::mixed_first(&case.a, &case.b, &case.measure, case.t)?.value;
    let first_fd = fd_first(&case.a, &case.b, &case.measure, case.t, schedule)?;
    let second = crate::mixed::mixed_second(&case.a, &case.b, &case.c, &case.measure, case.t)?.value;
    let second_fd = fd_second(&case.a, &case.b, &case.c, &case.measure, case.t, schedule)?;
    Ok(CrossCheck {
        name: case.name.to_string(),
        first_rel: first.relative_difference(first_fd),
        second_rel: second.relative_difference(second_fd),
    })
}
