//! First- and second-order mixed measures of dilated planar bodies.
//!
//! The dilation `t` enters analytically through `x_{tK} = t·x_K`; no scaled
//! body is ever built. All integrals accumulate in the log domain.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::bodies2d::{Angle, Side, SupportBody2D, Vec2};
use crate::error::{Error, Result};
use crate::densities::MeasureSpec;
use crate::log_value::LogValue;
use crate::oracles::body_mass;
use crate::quadrature::{circle_integrate, circle_integrate_fallible_scaled, line_integrate_log, QuadResult, DEFAULT_MAX_NODES};

const FIRST_TOL: f64 = 1e-9;
const SECOND_TOL: f64 = 1e-12;
const EDGE_TOL: f64 = 1e-11;
const PREIMAGE_SCAN: usize = 1024;
/// `ln(8ε)` for double precision.
const CANCELLATION_LOG: f64 = -34.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedValue {
    pub value: LogValue,
    pub t: f64,
    /// Set when a second-order input `B` or `C` is only piecewise smooth:
    /// the representation is evaluated, but its derivation assumes C².
    pub piecewise_inputs: bool,
    #[serde(skip)]
    pub quad: QuadResult,
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("dilation must be positive, got t = {t}")))
    }
}

/// `μ(tK; M)`.
pub fn mixed_first(k: &SupportBody2D, m: &SupportBody2D, measure: &MeasureSpec, t: f64) -> Result<MixedValue> {
    check_t(t)?;
    let quad = if k.is_c2plus() {
        first_smooth(k, m, measure, t)?
    } else if !k.edges().is_empty() {
        first_polygon(k, m, measure, t)?
    } else {
        return Err(Error::UnsupportedSmoothness);
    };
    Ok(MixedValue {
        value: quad.value,
        t,
        piecewise_inputs: false,
        quad,
    })
}

fn first_smooth(k: &SupportBody2D, m: &SupportBody2D, measure: &MeasureSpec, t: f64) -> Result<QuadResult> {
    let phi = &measure.phi;
    let fixed = measure.log_c0() * LogValue::from_f64(t);
    let mut breaks = m.support_kinks().to_vec();
    if !measure.gauge_body.is_c2plus() {
        breaks.extend(normals_toward(k, &measure.gauge_body.radial_kinks()));
    }
    circle_integrate(
        |th| {
            let j = k.support_eval(th);
            let f = j.h + j.d2h.unwrap_or(0.0);
            let x = th.unit() * j.h + th.unit_prime() * j.dh;
            let g = measure.gauge(x);
            fixed * LogValue::from_f64(m.support(th) * f) * LogValue::from_log(-phi.value(t * g))
        },
        &breaks,
        FIRST_TOL,
        DEFAULT_MAX_NODES,
    )
}

fn first_polygon(k: &SupportBody2D, m: &SupportBody2D, measure: &MeasureSpec, t: f64) -> Result<QuadResult> {
    let phi = &measure.phi;
    let rays: Vec<Vec2> = if measure.gauge_body.is_c2plus() {
        Vec::new()
    } else {
        measure.gauge_body.radial_kinks().iter().map(|&a| Angle::new(a).unit()).collect()
    };
    let mut total = Vec::new();
    let (mut nodes, mut err) = (0, 0.0f64);
    for e in k.edges() {
        let dir = (e.end - e.start) * (1.0 / e.length);
        let mut cuts = vec![0.0, e.length];
        for d in &rays {
            let denom = dir.cross(*d);
            if denom.abs() < 1e-15 {
                continue;
            }
            let s = -e.start.cross(*d) / denom;
            if s > 0.0 && s < e.length && (e.start + dir * s).dot(*d) > 0.0 {
                cuts.push(s);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let weight = m.support(e.normal.angle());
        for w in cuts.windows(2) {
            if w[1] - w[0] <= 1e-14 * e.length {
                continue;
            }
            let q = line_integrate_log(
                |s| LogValue::from_log(-phi.value(t * measure.gauge(e.start + dir * s))),
                w[0],
                w[1],
                EDGE_TOL,
            )?;
            nodes += q.nodes_used;
            err = err.max(q.error_estimate);
            total.push(q.value.scale(weight));
        }
    }
    Ok(QuadResult {
        value: LogValue::sum(total) * LogValue::from_f64(t) * measure.log_c0(),
        nodes_used: nodes,
        error_estimate: err,
    })
}

/// Normal angles of a C²₊ body whose boundary points lie in the given
/// directions. The boundary angle increases monotonically with the normal.
fn normals_toward(k: &SupportBody2D, directions: &[f64]) -> Vec<f64> {
    let psi = |th: f64| k.boundary_position(Angle::new(th), Side::Left).angle().radians();
    let step = TAU / PREIMAGE_SCAN as f64;
    let mut out = Vec::new();
    for &alpha in directions {
        // offset of the boundary angle from alpha, wrapped to (-π, π]
        let off = |th: f64| {
            let d = (psi(th) - alpha).rem_euclid(TAU);
            if d > std::f64::consts::PI {
                d - TAU
            } else {
                d
            }
        };
        for i in 0..PREIMAGE_SCAN {
            let (mut lo, mut hi) = (step * i as f64, step * (i + 1) as f64);
            let (flo, fhi) = (off(lo), off(hi));
            if !(flo <= 0.0 && fhi > 0.0 && fhi - flo < 1.0) {
                continue;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if off(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

/// Outer Minkowski content: `μ(tK; B)` with `B` the unit disk.
pub fn surface_content(k: &SupportBody2D, measure: &MeasureSpec, t: f64) -> Result<MixedValue> {
    mixed_first(k, &SupportBody2D::disk(1.0)?, measure, t)
}

/// Second-order mixed measure `μ(tA; B, C)`.
pub fn mixed_second(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    t: f64,
) -> Result<MixedValue> {
    check_t(t)?;
    if !a.is_c2plus() || !measure.gauge_body.is_c2plus() {
        return Err(Error::UnsupportedSmoothness);
    }
    let quad = circle_integrate_fallible_scaled(
        |th| second_terms(a, b, c, measure, t, th),
        &kink_union(b, c),
        SECOND_TOL,
        DEFAULT_MAX_NODES,
    )?;
    Ok(MixedValue {
        value: quad.value * measure.log_c0(),
        t,
        piecewise_inputs: !(b.is_c2plus() && c.is_c2plus()),
        quad,
    })
}

fn kink_union(b: &SupportBody2D, c: &SupportBody2D) -> Vec<f64> {
    let mut v = b.support_kinks().to_vec();
    v.extend_from_slice(c.support_kinks());
    v
}

/// `h_B h_C − h_B′ h_C′ − h_B h_C·X` where `X` is given by its log
/// magnitude and sign; avoids overflow of `φ′` for fast-growing profiles.
/// Returns the value and the magnitude of the cancelled terms.
fn bracket(b: &SupportBody2D, c: &SupportBody2D, th: Angle, x_sign: f64, x_log: f64) -> (LogValue, LogValue) {
    let jb = b.support_eval(th);
    let jc = c.support_eval(th);
    let hh = jb.h * jc.h;
    let dd = jb.dh * jc.dh;
    let plain = LogValue::from_f64(hh - dd);
    let scale = LogValue::from_f64(hh + dd.abs());
    if x_sign == 0.0 || x_log == f64::NEG_INFINITY {
        return (plain, scale);
    }
    let big = LogValue::from_parts(if x_sign > 0.0 { 1 } else { -1 }, x_log + hh.ln());
    let diff = plain - big;
    let scale = scale + big.abs();
    // a difference at rounding level of its terms carries no information
    if !diff.is_zero() && diff.log_abs() < scale.log_abs() + CANCELLATION_LOG {
        (LogValue::ZERO, scale)
    } else {
        (diff, scale)
    }
}

/// Integrand of [`mixed_second`] without `c0`.
pub fn second_integrand(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    t: f64,
    th: Angle,
) -> Result<LogValue> {
    second_terms(a, b, c, measure, t, th).map(|p| p.0)
}

fn second_terms(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    t: f64,
    th: Angle,
) -> Result<(LogValue, LogValue)> {
    let p = a.boundary_point(th)?;
    let g = measure.gauge(p.x);
    let grad = measure.gauge_body.gauge_gradient(p.x)?;
    let phi = &measure.phi;
    let tg = t * g;
    let proj = grad.dot(th.unit()) * t * p.f;
    let x_log = if phi.is_debug_zero() || proj == 0.0 {
        f64::NEG_INFINITY
    } else {
        phi.ln_prime(tg) + proj.abs().ln()
    };
    let weight = LogValue::from_log(-phi.value(tg));
    let (v, m) = bracket(b, c, th, proj.signum(), x_log);
    Ok((v * weight, m * weight))
}

/// Gaussian second-order measure `γ₂(tA; B, C)` from its explicit planar
/// representation.
pub fn gaussian_second(a: &SupportBody2D, b: &SupportBody2D, c: &SupportBody2D, t: f64) -> Result<MixedValue> {
    check_t(t)?;
    if !a.is_c2plus() {
        return Err(Error::UnsupportedSmoothness);
    }
    let quad = circle_integrate_fallible_scaled(
        |th| gaussian_terms(a, b, c, t, th),
        &kink_union(b, c),
        SECOND_TOL,
        DEFAULT_MAX_NODES,
    )?;
    Ok(MixedValue {
        value: quad.value * LogValue::from_f64(1.0 / TAU),
        t,
        piecewise_inputs: !(b.is_c2plus() && c.is_c2plus()),
        quad,
    })
}

/// Integrand of [`gaussian_second`] without the `1/2π`.
pub fn gaussian_integrand(a: &SupportBody2D, b: &SupportBody2D, c: &SupportBody2D, t: f64, th: Angle) -> Result<LogValue> {
    gaussian_terms(a, b, c, t, th).map(|p| p.0)
}

fn gaussian_terms(a: &SupportBody2D, b: &SupportBody2D, c: &SupportBody2D, t: f64, th: Angle) -> Result<(LogValue, LogValue)> {
    let p = a.boundary_point(th)?;
    let x = t * t * p.h * p.f;
    let x_log = if x == 0.0 { f64::NEG_INFINITY } else { x.abs().ln() };
    let energy = p.h * p.h + p.h_prime * p.h_prime;
    let weight = LogValue::from_log(-0.5 * t * t * energy);
    let (v, m) = bracket(b, c, th, x.signum(), x_log);
    Ok((v * weight, m * weight))
}

/// Smallest `t` in `[lo, hi]` where `μ(tA; B, C)` changes sign from
/// positive to negative, by bisection to `tol`.
pub fn sign_change_threshold(
    a: &SupportBody2D,
    b: &SupportBody2D,
    c: &SupportBody2D,
    measure: &MeasureSpec,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let sign = |t: f64| mixed_second(a, b, c, measure, t).map(|v| v.value.sign());
    let (mut lo, mut hi) = (lo, hi);
    if sign(lo)? <= 0 {
        return Err(Error::Precondition(format!("value at t = {lo} is not positive")));
    }
    if sign(hi)? >= 0 {
        return Err(Error::SignThreshold { t: hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sign(mid)? > 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Planar mixed area `V(K, M) = ½ ∫ h_M dS_K`.
pub fn lebesgue_mixed_area(k: &SupportBody2D, m: &SupportBody2D) -> Result<f64> {
    if k.is_c2plus() {
        let q = circle_integrate(
            |th| {
                let j = k.support_eval(th);
                LogValue::from_f64(0.5 * m.support(th) * (j.h + j.d2h.unwrap_or(0.0)))
            },
            m.support_kinks(),
            1e-13,
            DEFAULT_MAX_NODES,
        )?;
        Ok(q.value.to_f64())
    } else if !k.edges().is_empty() {
        Ok(0.5 * k.edges().iter().map(|e| m.support(e.normal.angle()) * e.length).sum::<f64>())
    } else {
        Err(Error::UnsupportedSmoothness)
    }
}

/// Largest deviation of `area(K + tM)` from the Steiner polynomial
/// `area(K) + 2t V(K, M) + t² area(M)` over `t_grid`.
pub fn steiner_check(k: &SupportBody2D, m: &SupportBody2D, t_grid: &[f64]) -> Result<f64> {
    let lebesgue = MeasureSpec::lebesgue();
    let area = |body: &SupportBody2D| body_mass(body, &lebesgue, 1.0).map(|v| v.to_f64());
    let (ak, am) = (area(k)?, area(m)?);
    let v = lebesgue_mixed_area(k, m)?;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("Steiner grid needs t ≥ 0, got {t}")));
        }
        let lhs = if t == 0.0 {
            ak
        } else {
            area(&crate::bodies2d::minkowski_combine(&[(1.0, k.clone()), (t, m.clone())])?)?
        };
        worst = worst.max((lhs - (ak + 2.0 * t * v + t * t * am)).abs());
    }
    Ok(worst)
}
