//! Density profiles `φ` and measures with density `c0 · e^{-φ(‖x‖_L)}`.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bodies2d::{SupportBody2D, Vec2};
use crate::error::{Error, Result};
use crate::log_value::LogValue;
use crate::quadrature::{
    circle_integrate, gauss_legendre, gauss_legendre_integrate, line_integrate, truncation_point, DEFAULT_MAX_NODES,
};

const RADIAL_TOL: f64 = 1e-13;
const SHELL_NODES: usize = 24;

/// Closed-form profiles. `Zero` is the Lebesgue debug profile and can only
/// be built through [`PhiFunction::debug_zero`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhiKind {
    /// `c r^p`, `p ≥ 1`
    Power { c: f64, p: f64 },
    /// `c r`
    Linear { c: f64 },
    /// `e^{a r} − 1`
    Expm1 { a: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiFunction {
    kind: PhiKind,
}

impl PhiFunction {
    pub fn power(c: f64, p: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidPhi(format!("power coefficient must be positive, got {c}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidPhi(format!("power exponent must be at least 1, got {p}")));
        }
        Self::checked(PhiKind::Power { c, p })
    }

    pub fn linear(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidPhi(format!("linear slope must be positive, got {c}")));
        }
        Self::checked(PhiKind::Linear { c })
    }

    pub fn expm1(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidPhi(format!("expm1 rate must be positive, got {a}")));
        }
        Self::checked(PhiKind::Expm1 { a })
    }

    /// `φ(r) = r²/2`
    pub fn gaussian() -> Self {
        PhiFunction {
            kind: PhiKind::Power { c: 0.5, p: 2.0 },
        }
    }

    /// `φ ≡ 0`: Lebesgue measure, for mixed-volume sanity checks only. It
    /// violates the non-constant hypothesis and skips validation.
    pub fn debug_zero() -> Self {
        PhiFunction { kind: PhiKind::Zero }
    }

    fn checked(kind: PhiKind) -> Result<Self> {
        let phi = PhiFunction { kind };
        phi.check_shape()?;
        Ok(phi)
    }

    /// Validated profile from its kind. `Zero` is refused; use
    /// [`PhiFunction::debug_zero`].
    pub fn from_kind(kind: PhiKind) -> Result<Self> {
        match kind {
            PhiKind::Power { c, p } => Self::power(c, p),
            PhiKind::Linear { c } => Self::linear(c),
            PhiKind::Expm1 { a } => Self::expm1(a),
            PhiKind::Zero => Err(Error::InvalidPhi("φ ≡ 0 is constant".into())),
        }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn is_debug_zero(&self) -> bool {
        self.kind == PhiKind::Zero
    }

    /// Convexity (midpoint test) and monotonicity on a log-spaced grid.
    fn check_shape(&self) -> Result<()> {
        let grid: Vec<f64> = (0..=60).map(|i| 10f64.powf(-3.0 + 0.1 * i as f64)).collect();
        if self.value(0.0) < 0.0 {
            return Err(Error::InvalidPhi("φ(0) is negative".into()));
        }
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.value(a), self.value(b));
            if !(fa.is_finite() && fb.is_finite()) {
                break;
            }
            if fa > fb {
                return Err(Error::InvalidPhi(format!("φ decreases between {a} and {b}")));
            }
            let fm = self.value(0.5 * (a + b));
            if fm > 0.5 * (fa + fb) + 1e-12 * (1.0 + fa.abs().max(fb.abs())) {
                return Err(Error::InvalidPhi(format!("φ fails the midpoint convexity test on [{a}, {b}]")));
            }
        }
        if self.value(grid[grid.len() - 1]) <= self.value(0.0) {
            return Err(Error::InvalidPhi("φ is constant".into()));
        }
        Ok(())
    }

    /// `φ(r)` without the domain check.
    pub(crate) fn value(&self, r: f64) -> f64 {
        match self.kind {
            PhiKind::Power { c, p } => c * r.powf(p),
            PhiKind::Linear { c } => c * r,
            PhiKind::Expm1 { a } => (a * r).exp_m1(),
            PhiKind::Zero => 0.0,
        }
    }

    /// `φ(r)` for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("φ is defined on [0, ∞), got r = {r}")));
        }
        Ok(self.value(r))
    }

    /// `φ'(r)`. At `r ≤ 0` the limit from the right is returned.
    pub fn prime(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match self.kind {
            PhiKind::Power { c, p } => {
                if p == 1.0 {
                    c
                } else {
                    c * p * r.powf(p - 1.0)
                }
            }
            PhiKind::Linear { c } => c,
            PhiKind::Expm1 { a } => a * (a * r).exp(),
            PhiKind::Zero => 0.0,
        }
    }

    /// Rate at which `e^{-φ}` varies near `r`: `φ'(r)` plus the scale of
    /// its own variation.
    pub(crate) fn curvature_scale(&self, r: f64) -> f64 {
        match self.kind {
            PhiKind::Expm1 { a } => self.prime(r) + a,
            _ => self.prime(r),
        }
    }

    /// `ln φ'(r)`, finite even where `φ'` overflows.
    pub fn ln_prime(&self, r: f64) -> f64 {
        match self.kind {
            PhiKind::Expm1 { a } => a.ln() + a * r.max(0.0),
            _ => self.prime(r).ln(),
        }
    }

    /// `φ(x + v) − φ(x)` without cancellation.
    pub(crate) fn increment(&self, x: f64, v: f64) -> f64 {
        match self.kind {
            PhiKind::Expm1 { a } => (a * x).exp() * (a * v).exp_m1(),
            PhiKind::Linear { c } => c * v,
            PhiKind::Power { c, p } if x > 0.0 => c * x.powf(p) * (p * (v / x).ln_1p()).exp_m1(),
            _ => self.value(x + v) - self.value(x),
        }
    }

    /// `ln φ'(t) / φ(t)` on `t_grid`. The growth hypothesis of the
    /// second-order rate requires this to tend to 0.
    pub fn growth_condition_report(&self, t_grid: &[f64]) -> Result<GrowthReport> {
        if t_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Domain("growth report needs a positive grid".into()));
        }
        let ratios: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                let phi = self.value(t);
                let lp = self.ln_prime(t);
                if lp == 0.0 {
                    0.0
                } else {
                    lp / phi
                }
            })
            .collect();
        let tail = &ratios[ratios.len() / 2..];
        let decreasing_to_zero = !ratios.is_empty()
            && tail.windows(2).all(|w| w[1].abs() <= w[0].abs() + 1e-15)
            && ratios.last().is_some_and(|r| r.is_finite());
        Ok(GrowthReport {
            t: t_grid.to_vec(),
            ratio: ratios,
            decreasing_to_zero,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub t: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `|ratio|` is nonincreasing over the upper half of the grid.
    pub decreasing_to_zero: bool,
}

/// `Ψ(x) = ∫₀^x s e^{-φ(s)} ds`; `x = ∞` gives the total radial mass.
pub fn partial_radial_mass(phi: &PhiFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("radial mass needs x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if phi.is_debug_zero() {
        if x.is_infinite() {
            return Err(Error::Domain("Lebesgue radial mass is infinite".into()));
        }
        return Ok(0.5 * x * x);
    }
    let kernel = |s: f64| s * (-phi.value(s)).exp();
    let upper = x.min(truncation_point(&kernel, 0.0)?);
    Ok(line_integrate(kernel, 0.0, upper, RADIAL_TOL)?.value.to_f64())
}

fn shell_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(SHELL_NODES))
}

/// `Ψ(b) − Ψ(a)` computed directly over `[a, b]`, without cancellation.
pub fn radial_mass_between(phi: &PhiFunction, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return radial_mass_between(phi, b, a).map(|v| -v);
    }
    if phi.is_debug_zero() {
        return Ok(0.5 * (b - a) * (b + a));
    }
    // factor out e^{-φ(a)} so the kernel is O(1) at the left end
    let base = phi.value(a);
    let kernel = |s: f64| s * (-phi.increment(a, s - a)).exp();
    let width = b - a;
    let inner = if width <= 0.5 * a && width * phi.curvature_scale(b) <= 2.0 {
        // thin shell: a fixed rule keeps the result smooth in (a, b)
        gauss_legendre_integrate(kernel, a, b, shell_rule())
    } else {
        line_integrate(kernel, a, b, RADIAL_TOL)?.value.to_f64()
    };
    Ok(inner * (-base).exp())
}

/// `∫_x^∞ s e^{-φ(s)} ds` in the log domain.
pub fn radial_tail_mass(phi: &PhiFunction, x: f64) -> Result<LogValue> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("radial tail needs x ≥ 0, got {x}")));
    }
    if phi.is_debug_zero() {
        return Err(Error::Domain("Lebesgue radial tail is infinite".into()));
    }
    let kernel = |v: f64| (x + v) * (-phi.increment(x, v)).exp();
    let inner = line_integrate(kernel, 0.0, f64::INFINITY, RADIAL_TOL)?.value;
    Ok(inner * LogValue::from_log(-phi.value(x)))
}

/// A measure with density `c0 · e^{-φ(‖x‖_L)}` on the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    pub phi: PhiFunction,
    pub gauge_body: SupportBody2D,
    pub c0: f64,
    /// `c0 = 1/Z` was set by [`MeasureSpec::normalized`].
    pub normalized: bool,
}

impl MeasureSpec {
    pub fn new(phi: PhiFunction, gauge_body: SupportBody2D, c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::Domain(format!("normalization constant must be positive, got {c0}")));
        }
        Ok(MeasureSpec {
            phi,
            gauge_body,
            c0,
            normalized: false,
        })
    }

    /// Probability measure: `c0 = 1/Z`.
    pub fn normalized(phi: PhiFunction, gauge_body: SupportBody2D) -> Result<Self> {
        let mut m = Self::new(phi, gauge_body, 1.0)?;
        let z = normalization_constant(&m)?;
        m.c0 = 1.0 / z;
        m.normalized = true;
        Ok(m)
    }

    /// Standard Gaussian on the plane, `(1/2π) e^{-|x|²/2}`.
    pub fn gaussian() -> Self {
        MeasureSpec {
            phi: PhiFunction::gaussian(),
            gauge_body: unit_disk(),
            c0: 1.0 / TAU,
            normalized: true,
        }
    }

    /// `e^{-|x|²/2}` without normalization.
    pub fn gaussian_unnormalized() -> Self {
        MeasureSpec {
            c0: 1.0,
            normalized: false,
            ..Self::gaussian()
        }
    }

    /// Lebesgue measure, for mixed-volume sanity checks.
    pub fn lebesgue() -> Self {
        MeasureSpec {
            phi: PhiFunction::debug_zero(),
            gauge_body: unit_disk(),
            c0: 1.0,
            normalized: false,
        }
    }

    pub fn with_c0(&self, c0: f64) -> Result<Self> {
        let mut m = Self::new(self.phi, self.gauge_body.clone(), c0)?;
        m.normalized = false;
        Ok(m)
    }

    /// `ln c0` as a log-domain factor.
    pub fn log_c0(&self) -> LogValue {
        LogValue::from_log(self.c0.ln())
    }

    /// `‖x‖_L`
    pub fn gauge(&self, x: Vec2) -> f64 {
        self.gauge_body.gauge(x)
    }
}

fn unit_disk() -> SupportBody2D {
    SupportBody2D::disk(1.0).expect("unit disk is valid")
}

/// Area of a body, `½ ∫ ρ(θ)² dθ`.
pub fn body_area(body: &SupportBody2D) -> Result<f64> {
    let r = circle_integrate(
        |t| LogValue::from_f64(0.5 * body.radial(t).powi(2)),
        &body.radial_kinks(),
        1e-13,
        DEFAULT_MAX_NODES,
    )?;
    Ok(r.value.to_f64())
}

/// `Z = ∫ e^{-φ(‖x‖_L)} dx = 2·area(L)·Ψ(∞)`.
pub fn normalization_constant(measure: &MeasureSpec) -> Result<f64> {
    let psi = partial_radial_mass(&measure.phi, f64::INFINITY)?;
    let z = 2.0 * body_area(&measure.gauge_body)? * psi;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::numerical("normalization_constant", format!("Z = {z}")));
    }
    Ok(z)
}
