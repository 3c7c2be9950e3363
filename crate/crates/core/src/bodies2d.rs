//! Planar convex bodies containing the origin, described through their
//! support functions on the circle.
//!
//! Every body is parameterized by the angle `θ` of the outer normal
//! `u(θ) = (cos θ, sin θ)`. For C²₊ bodies the boundary point with normal
//! `u(θ)` is `x(θ) = h(θ) u(θ) + h'(θ) u'(θ)` and the curvature function
//! (radius of curvature) is `f(θ) = h''(θ) + h(θ)`.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{circle_minimize_with, golden_section_min};

/// Coarse scan resolution for gauges of bodies without a closed form.
pub const GAUGE_SCAN_NODES: usize = 512;
/// Grid used by the construction-time convexity certificate.
pub const VALIDATION_NODES: usize = 4096;
/// Truncation order of Fourier bodies.
pub const MAX_HARMONICS: usize = 64;
const CONVEXITY_MARGIN: f64 = 1e-10;
const GAUGE_ANGLE_WIDTH: f64 = 1e-12;
const INRADIUS_SCAN_NODES: usize = 4096;
const INRADIUS_REFINEMENT_TOL: f64 = 1e-9;

/// Normal angle, reduced into `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Self {
        let r = theta.rem_euclid(TAU);
        Angle(if r >= TAU { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `u(θ)`
    pub fn unit(self) -> Vec2 {
        let (s, c) = self.0.sin_cos();
        Vec2::new(c, s)
    }

    /// `u'(θ)`, the unit tangent obtained by a quarter turn of `u(θ)`.
    pub fn unit_prime(self) -> Vec2 {
        let (s, c) = self.0.sin_cos();
        Vec2::new(-s, c)
    }
}

impl From<f64> for Angle {
    fn from(theta: f64) -> Self {
        Angle::new(theta)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> Angle {
        Angle::new(self.y.atan2(self.x))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

/// One-sided derivative choice at kinks of a piecewise support function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `h`, `h'` and (when it exists) `h''` at one angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportJet {
    pub h: f64,
    pub dh: f64,
    pub d2h: Option<f64>,
}

impl SupportJet {
    pub fn second(&self) -> Result<f64> {
        self.d2h
            .ok_or(Error::NotC2("piecewise support function has no second derivative"))
    }

    /// `f = h'' + h`
    pub fn curvature(&self) -> Result<f64> {
        Ok(self.second()? + self.h)
    }

    fn scaled(self, k: f64) -> SupportJet {
        SupportJet {
            h: k * self.h,
            dh: k * self.dh,
            d2h: self.d2h.map(|v| k * v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C2Plus,
    Piecewise,
}

/// Shape description. Polygon vertices are counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
    Polygon { vertices: Vec<Vec2> },
    Combination { terms: Vec<(f64, SupportBody2D)> },
}

impl Descriptor {
    /// Support jet at `theta`, taking the `side` derivative at kinks.
    fn jet(&self, theta: f64, side: Side) -> SupportJet {
        match self {
            Descriptor::Disk { radius } => SupportJet {
                h: *radius,
                dh: 0.0,
                d2h: Some(0.0),
            },
            Descriptor::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                let q = a * a * c * c + b * b * s * s;
                let h = q.sqrt();
                let diff = b * b - a * a;
                // h² = q, so 2 h h' = q' and 2 h'² + 2 h h'' = q''
                let dh = diff * (2.0 * theta).sin() / (2.0 * h);
                let d2h = (diff * (2.0 * theta).cos() - dh * dh) / h;
                SupportJet {
                    h,
                    dh,
                    d2h: Some(d2h),
                }
            }
            Descriptor::Fourier { a0, cos, sin } => fourier_jet(*a0, cos, sin, theta),
            Descriptor::Polygon { vertices } => polygon_jet(vertices, theta, side),
            Descriptor::Combination { terms } => {
                let mut out = SupportJet {
                    h: 0.0,
                    dh: 0.0,
                    d2h: Some(0.0),
                };
                for (c, body) in terms {
                    let j = body.inner.descriptor.jet(theta, side).scaled(*c);
                    out.h += j.h;
                    out.dh += j.dh;
                    out.d2h = match (out.d2h, j.d2h) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                }
                out
            }
        }
    }
}

fn fourier_jet(a0: f64, cos: &[f64], sin: &[f64], theta: f64) -> SupportJet {
    let (s1, c1) = theta.sin_cos();
    let (mut sk, mut ck) = (s1, c1);
    let (mut h, mut dh, mut d2h) = (a0, 0.0, 0.0);
    let n = cos.len().max(sin.len());
    for k in 1..=n {
        let a = cos.get(k - 1).copied().unwrap_or(0.0);
        let b = sin.get(k - 1).copied().unwrap_or(0.0);
        let kf = k as f64;
        h += a * ck + b * sk;
        dh += kf * (b * ck - a * sk);
        d2h -= kf * kf * (a * ck + b * sk);
        let next_c = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = next_c;
    }
    SupportJet {
        h,
        dh,
        d2h: Some(d2h),
    }
}

fn polygon_jet(vertices: &[Vec2], theta: f64, side: Side) -> SupportJet {
    let u = Angle(theta).unit();
    let up = Angle(theta).unit_prime();
    let scale = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let h = vertices.iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-13 * scale;
    let slopes = vertices
        .iter()
        .filter(|v| v.dot(u) >= h - tol)
        .map(|v| v.dot(up));
    let dh = match side {
        Side::Left => slopes.fold(f64::INFINITY, f64::min),
        Side::Right => slopes.fold(f64::NEG_INFINITY, f64::max),
    };
    SupportJet { h, dh, d2h: None }
}

/// A polygon edge, oriented counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub start: Vec2,
    pub end: Vec2,
    /// Outer unit normal.
    pub normal: Vec2,
    /// Support value in the normal direction, `⟨start, normal⟩ > 0`.
    pub offset: f64,
    pub length: f64,
}

#[derive(Debug)]
struct ScanTable {
    dirs: Vec<Vec2>,
    h: Vec<f64>,
}

#[derive(Debug)]
struct Inner {
    descriptor: Descriptor,
    smoothness: Smoothness,
    edges: Vec<Edge>,
    support_kinks: Vec<f64>,
    scan: Option<ScanTable>,
}

/// An immutable planar convex body with the origin in its interior.
///
/// Cloning is cheap; bodies are shared behind an `Arc`.
#[derive(Clone, Debug)]
pub struct SupportBody2D {
    inner: Arc<Inner>,
}

impl PartialEq for SupportBody2D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.descriptor == other.inner.descriptor
    }
}

impl fmt::Display for SupportBody2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner.descriptor {
            Descriptor::Disk { radius } => write!(f, "disk({radius})"),
            Descriptor::Ellipse { a, b } => write!(f, "ellipse({a}, {b})"),
            Descriptor::Fourier { a0, cos, sin } => {
                write!(f, "fourier(a0={a0}, cos={cos:?}, sin={sin:?})")
            }
            Descriptor::Polygon { vertices } => {
                write!(f, "polygon(")?;
                for (i, v) in vertices.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({}, {})", v.x, v.y)?;
                }
                write!(f, ")")
            }
            Descriptor::Combination { terms } => {
                for (i, (c, b)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}·{b}")?;
                }
                Ok(())
            }
        }
    }
}

/// Grid diagnostics for a descriptor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub min_h: f64,
    /// Minimum of `h'' + h`; absent for piecewise descriptors.
    pub min_f: Option<f64>,
    pub origin_interior: bool,
    pub convex: bool,
    pub c2plus: bool,
    pub problems: Vec<String>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Report-only check of a descriptor on a dense grid. Constructors call this
/// and reject descriptors with problems.
pub fn validate(descriptor: &Descriptor) -> ValidationReport {
    let mut problems = Vec::new();
    let mut convex = true;
    match descriptor {
        Descriptor::Disk { radius } => {
            if !(radius.is_finite() && *radius > 0.0) {
                problems.push(format!("radius must be positive and finite, got {radius}"));
            }
        }
        Descriptor::Ellipse { a, b } => {
            if !(a.is_finite() && *a > 0.0 && b.is_finite() && *b > 0.0) {
                problems.push(format!("semi-axes must be positive and finite, got ({a}, {b})"));
            }
        }
        Descriptor::Fourier { a0, cos, sin } => {
            if cos.len() > MAX_HARMONICS || sin.len() > MAX_HARMONICS {
                problems.push(format!("at most {MAX_HARMONICS} harmonics are supported"));
            }
            if !a0.is_finite() || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                problems.push("coefficients must be finite".into());
            }
        }
        Descriptor::Polygon { vertices } => {
            if let Err(msg) = check_polygon(vertices) {
                convex = false;
                problems.push(msg);
            }
        }
        Descriptor::Combination { terms } => {
            if terms.is_empty() {
                problems.push("combination has no terms".into());
            }
            if terms.iter().any(|(c, _)| !(c.is_finite() && *c > 0.0)) {
                problems.push("combination coefficients must be positive".into());
            }
        }
    }
    if !problems.is_empty() {
        return ValidationReport {
            min_h: f64::NAN,
            min_f: None,
            origin_interior: false,
            convex,
            c2plus: false,
            problems,
        };
    }

    let piecewise = is_piecewise(descriptor);
    let mut min_h = f64::INFINITY;
    let mut min_f = f64::INFINITY;
    for i in 0..VALIDATION_NODES {
        let theta = TAU * i as f64 / VALIDATION_NODES as f64;
        let j = descriptor.jet(theta, Side::Left);
        min_h = min_h.min(j.h);
        if let Some(d2) = j.d2h {
            min_f = min_f.min(d2 + j.h);
        }
    }
    let origin_interior = min_h > 0.0;
    if !origin_interior {
        problems.push(format!("origin is not interior: min h = {min_h:.3e}"));
    }
    let min_f = (!piecewise).then_some(min_f);
    if let Some(mf) = min_f {
        if mf <= CONVEXITY_MARGIN {
            convex = false;
            problems.push(format!("curvature function h'' + h dips to {mf:.3e}"));
        }
    }
    ValidationReport {
        min_h,
        min_f,
        origin_interior,
        convex,
        c2plus: !piecewise && convex && origin_interior,
        problems,
    }
}

fn is_piecewise(descriptor: &Descriptor) -> bool {
    match descriptor {
        Descriptor::Polygon { .. } => true,
        Descriptor::Combination { terms } => terms
            .iter()
            .any(|(_, b)| b.inner.smoothness == Smoothness::Piecewise),
        _ => false,
    }
}

fn check_polygon(vertices: &[Vec2]) -> std::result::Result<(), String> {
    let n = vertices.len();
    if n < 3 {
        return Err(format!("polygon needs at least 3 vertices, got {n}"));
    }
    if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
        return Err("polygon vertices must be finite".into());
    }
    let mut turning = 0.0;
    let (mut left, mut right) = (0, 0);
    for i in 0..n {
        let e0 = vertices[(i + 1) % n] - vertices[i];
        let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
        let cr = e0.cross(e1);
        if cr > 0.0 {
            left += 1;
        } else if cr < 0.0 {
            right += 1;
        }
        turning += cr.atan2(e0.dot(e1));
    }
    if right == n {
        return Err("polygon vertices are in clockwise orientation; counterclockwise required".into());
    }
    if left != n {
        return Err("polygon is not strictly convex".into());
    }
    if (turning - TAU).abs() > 1e-9 {
        return Err("polygon boundary winds more than once".into());
    }
    for i in 0..n {
        let e = vertices[(i + 1) % n] - vertices[i];
        let normal = Vec2::new(e.y, -e.x);
        if vertices[i].dot(normal) <= 0.0 {
            return Err("origin is not interior to the polygon".into());
        }
    }
    Ok(())
}

impl SupportBody2D {
    /// Builds a body from a descriptor, rejecting invalid ones.
    pub fn new(descriptor: Descriptor) -> Result<Self> {
        let report = validate(&descriptor);
        if !report.accepted() {
            return Err(Error::InvalidBody(report.problems.join("; ")));
        }
        let smoothness = if report.c2plus {
            Smoothness::C2Plus
        } else {
            Smoothness::Piecewise
        };
        let edges = match &descriptor {
            Descriptor::Polygon { vertices } => polygon_edges(vertices),
            _ => Vec::new(),
        };
        let mut support_kinks = match &descriptor {
            Descriptor::Polygon { .. } => edges.iter().map(|e| e.normal.angle().0).collect(),
            Descriptor::Combination { terms } => terms
                .iter()
                .flat_map(|(_, b)| b.inner.support_kinks.iter().copied())
                .collect(),
            _ => Vec::new(),
        };
        sort_dedup_angles(&mut support_kinks);
        let scan = match &descriptor {
            Descriptor::Fourier { .. } | Descriptor::Combination { .. } => {
                let dirs: Vec<Vec2> = (0..GAUGE_SCAN_NODES)
                    .map(|i| Angle(TAU * i as f64 / GAUGE_SCAN_NODES as f64).unit())
                    .collect();
                let h = (0..GAUGE_SCAN_NODES)
                    .map(|i| {
                        descriptor
                            .jet(TAU * i as f64 / GAUGE_SCAN_NODES as f64, Side::Left)
                            .h
                    })
                    .collect();
                Some(ScanTable { dirs, h })
            }
            _ => None,
        };
        Ok(SupportBody2D {
            inner: Arc::new(Inner {
                descriptor,
                smoothness,
                edges,
                support_kinks,
                scan,
            }),
        })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(Descriptor::Disk { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(Descriptor::Ellipse { a, b })
    }

    pub fn fourier(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(Descriptor::Fourier { a0, cos, sin })
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self> {
        Self::new(Descriptor::Polygon { vertices })
    }

    /// `[-half, half]²`
    pub fn square(half: f64) -> Result<Self> {
        Self::polygon(vec![
            Vec2::new(-half, -half),
            Vec2::new(half, -half),
            Vec2::new(half, half),
            Vec2::new(-half, half),
        ])
    }

    /// Convex hull of `(±r, 0)` and `(0, ±r)`.
    pub fn diamond(r: f64) -> Result<Self> {
        Self::polygon(vec![
            Vec2::new(r, 0.0),
            Vec2::new(0.0, r),
            Vec2::new(-r, 0.0),
            Vec2::new(0.0, -r),
        ])
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.inner.descriptor
    }

    pub fn smoothness(&self) -> Smoothness {
        self.inner.smoothness
    }

    pub fn is_c2plus(&self) -> bool {
        self.inner.smoothness == Smoothness::C2Plus
    }

    /// Edges of a polygon body, counterclockwise; empty otherwise.
    pub fn edges(&self) -> &[Edge] {
        &self.inner.edges
    }

    /// Normal angles where `h'` jumps, sorted in `[0, 2π)`.
    pub fn support_kinks(&self) -> &[f64] {
        &self.inner.support_kinks
    }

    /// Directions where the radial function is not smooth: the two ends of
    /// each boundary segment sitting over a support kink.
    pub fn radial_kinks(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.inner.support_kinks.len());
        for &t in &self.inner.support_kinks {
            out.push(self.boundary_position(Angle(t), Side::Left).angle().0);
            out.push(self.boundary_position(Angle(t), Side::Right).angle().0);
        }
        sort_dedup_angles(&mut out);
        out
    }

    /// `(h, h', h'')` at `theta`. Polygons report `h''` as absent and use the
    /// left derivative at vertex-switch angles.
    pub fn support_eval(&self, theta: Angle) -> SupportJet {
        self.inner.descriptor.jet(theta.0, Side::Left)
    }

    pub fn support_eval_side(&self, theta: Angle, side: Side) -> SupportJet {
        self.inner.descriptor.jet(theta.0, side)
    }

    pub fn support(&self, theta: Angle) -> f64 {
        match &self.inner.descriptor {
            Descriptor::Disk { radius } => *radius,
            d => d.jet(theta.0, Side::Left).h,
        }
    }

    /// `h u + h' u'`; for piecewise bodies at a kink the `side` end of the
    /// face with that normal.
    pub fn boundary_position(&self, theta: Angle, side: Side) -> Vec2 {
        let j = self.support_eval_side(theta, side);
        theta.unit() * j.h + theta.unit_prime() * j.dh
    }

    pub fn boundary_point(&self, theta: Angle) -> Result<BoundaryPoint> {
        if !self.is_c2plus() {
            return Err(Error::UnsupportedSmoothness);
        }
        let j = self.support_eval(theta);
        let d2h = j.second()?;
        Ok(BoundaryPoint {
            x: theta.unit() * j.h + theta.unit_prime() * j.dh,
            theta,
            h: j.h,
            h_prime: j.dh,
            f: d2h + j.h,
        })
    }

    /// Minkowski functional `‖x‖ = inf{λ ≥ 0 : x ∈ λ·body}`.
    pub fn gauge(&self, x: Vec2) -> f64 {
        if x == Vec2::ZERO {
            return 0.0;
        }
        match &self.inner.descriptor {
            Descriptor::Disk { radius } => x.norm() / radius,
            Descriptor::Ellipse { a, b } => (x.x / a).hypot(x.y / b),
            Descriptor::Polygon { .. } => self
                .inner
                .edges
                .iter()
                .map(|e| x.dot(e.normal) / e.offset)
                .fold(f64::NEG_INFINITY, f64::max),
            _ => self.gauge_by_scan(x).0,
        }
    }

    /// `sup_θ ⟨x, u(θ)⟩ / h(θ)` by a grid scan and golden-section refinement.
    /// Returns the value and the maximizing normal angle.
    fn gauge_by_scan(&self, x: Vec2) -> (f64, f64) {
        let table = self.inner.scan.as_ref().expect("scan table for non-analytic body");
        let n = table.dirs.len();
        let (best, best_val) = table
            .dirs
            .iter()
            .zip(&table.h)
            .map(|(u, h)| x.dot(*u) / h)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let step = TAU / n as f64;
        let centre = step * best as f64;
        let ratio = |t: f64| {
            let a = Angle(t);
            x.dot(a.unit()) / self.inner.descriptor.jet(t, Side::Left).h
        };
        let (mut theta, neg) = golden_section_min(
            |t| -ratio(t),
            centre - step,
            centre + step,
            GAUGE_ANGLE_WIDTH,
        );
        let mut value = -neg;
        // the golden-section bracket only resolves the flat maximum to about
        // sqrt(eps); bisect on the sign of the derivative numerator, and try
        // the support kinks nearby, where a face-supported maximum sits
        let kinks = self
            .inner
            .support_kinks
            .iter()
            .flat_map(|&k| [k - TAU, k, k + TAU])
            .filter(|&k| (k - centre).abs() <= step);
        if let Some(t) = self.polish_gauge_maximizer(x, theta) {
            // at a flat maximum the values agree to rounding; keep the better angle
            theta = t;
            value = value.max(ratio(t));
        }
        for t in kinks {
            let v = ratio(t);
            if v > value {
                theta = t;
                value = v;
            }
        }
        if best_val > value {
            (best_val, centre)
        } else {
            (value, theta)
        }
    }

    fn polish_gauge_maximizer(&self, x: Vec2, theta: f64) -> Option<f64> {
        // d/dθ ⟨x,u⟩/h has the sign of ⟨x,u'⟩ h − ⟨x,u⟩ h'
        let slope = |t: f64| {
            let a = Angle(t);
            let j = self.inner.descriptor.jet(t, Side::Left);
            x.dot(a.unit_prime()) * j.h - x.dot(a.unit()) * j.dh
        };
        let (mut lo, mut hi) = (theta - 1e-6, theta + 1e-6);
        if !(slope(lo) > 0.0 && slope(hi) < 0.0) {
            return None;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Gradient of the gauge at `x ≠ 0`: `u*/h(u*)` at the maximizing normal.
    /// Satisfies `⟨∇‖x‖, x⟩ = ‖x‖`.
    pub fn gauge_gradient(&self, x: Vec2) -> Result<Vec2> {
        if x == Vec2::ZERO {
            return Err(Error::Domain("gauge gradient at the origin".into()));
        }
        if !self.is_c2plus() {
            return Err(Error::UnsupportedSmoothness);
        }
        match &self.inner.descriptor {
            Descriptor::Disk { radius } => Ok(x * (1.0 / (x.norm() * radius))),
            Descriptor::Ellipse { a, b } => {
                let g = self.gauge(x);
                Ok(Vec2::new(x.x / (a * a), x.y / (b * b)) * (1.0 / g))
            }
            _ => {
                self.check_unique_maximizer(x)?;
                let (_, theta) = self.gauge_by_scan(x);
                let h = self.inner.descriptor.jet(theta, Side::Left).h;
                Ok(Angle::new(theta).unit() * (1.0 / h))
            }
        }
    }

    fn check_unique_maximizer(&self, x: Vec2) -> Result<()> {
        let table = self.inner.scan.as_ref().expect("scan table");
        let vals: Vec<f64> = table.dirs.iter().zip(&table.h).map(|(u, h)| x.dot(*u) / h).collect();
        let n = vals.len();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let peaks = (0..n)
            .filter(|&i| {
                let (p, q) = (vals[(i + n - 1) % n], vals[(i + 1) % n]);
                vals[i] > p && vals[i] >= q && vals[i] >= max * (1.0 - 1e-9)
            })
            .count();
        if peaks > 1 {
            Err(Error::AmbiguousGradient { x: x.x, y: x.y })
        } else {
            Ok(())
        }
    }

    /// Radial function `ρ(θ) = 1/‖u(θ)‖`.
    pub fn radial(&self, theta: Angle) -> f64 {
        match &self.inner.descriptor {
            Descriptor::Disk { radius } => *radius,
            _ => 1.0 / self.gauge(theta.unit()),
        }
    }

    /// `λ·body` for `λ > 0`, keeping the closed-form descriptor kinds.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::DegenerateBody(format!("scale factor must be positive, got {lambda}")));
        }
        let d = match &self.inner.descriptor {
            Descriptor::Disk { radius } => Descriptor::Disk { radius: lambda * radius },
            Descriptor::Ellipse { a, b } => Descriptor::Ellipse {
                a: lambda * a,
                b: lambda * b,
            },
            Descriptor::Fourier { a0, cos, sin } => Descriptor::Fourier {
                a0: lambda * a0,
                cos: cos.iter().map(|c| lambda * c).collect(),
                sin: sin.iter().map(|c| lambda * c).collect(),
            },
            Descriptor::Polygon { vertices } => Descriptor::Polygon {
                vertices: vertices.iter().map(|v| *v * lambda).collect(),
            },
            Descriptor::Combination { terms } => Descriptor::Combination {
                terms: terms.iter().map(|(c, b)| (lambda * c, b.clone())).collect(),
            },
        };
        Self::new(d)
    }
}

fn polygon_edges(vertices: &[Vec2]) -> Vec<Edge> {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let (start, end) = (vertices[i], vertices[(i + 1) % n]);
            let e = end - start;
            let length = e.norm();
            let normal = Vec2::new(e.y / length, -e.x / length);
            Edge {
                start,
                end,
                normal,
                offset: start.dot(normal),
                length,
            }
        })
        .collect()
}

fn sort_dedup_angles(v: &mut Vec<f64>) {
    for t in v.iter_mut() {
        *t = Angle::new(*t).0;
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    if v.len() > 1 && (v[0] + TAU - v[v.len() - 1]).abs() < 1e-13 {
        v.pop();
    }
}

/// Positive combination `Σ cᵢ Kᵢ`; support functions add.
pub fn minkowski_combine(terms: &[(f64, SupportBody2D)]) -> Result<SupportBody2D> {
    if let Some((c, _)) = terms.iter().find(|(c, _)| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::DegenerateBody(format!("coefficient {c} is not a nonnegative real")));
    }
    let live: Vec<(f64, SupportBody2D)> = terms.iter().filter(|(c, _)| *c > 0.0).cloned().collect();
    match live.as_slice() {
        [] => Err(Error::DegenerateBody("all coefficients are zero".into())),
        [(c, body)] => body.scaled(*c),
        _ => {
            let all_disks: Option<f64> = live
                .iter()
                .map(|(c, b)| match b.descriptor() {
                    Descriptor::Disk { radius } => Some(c * radius),
                    _ => None,
                })
                .sum();
            match all_disks {
                Some(radius) => SupportBody2D::disk(radius),
                None => SupportBody2D::new(Descriptor::Combination { terms: live }),
            }
        }
    }
}

/// Boundary point of a C²₊ body with outer normal `u(theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub x: Vec2,
    pub theta: Angle,
    pub h: f64,
    pub h_prime: f64,
    /// Curvature function `h'' + h`.
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InradiusResult {
    pub r: f64,
    pub tangency_angles: Vec<Angle>,
    /// `(θ, h_K(θ)/h_L(θ))` on 256 equispaced angles.
    pub ratio_profile: Option<Vec<(f64, f64)>>,
    /// Largest change of `r` over two grid refinements.
    pub refinement_change: f64,
}

/// Largest `R` with `R·L ⊆ K` (homothety about the origin), computed as the
/// minimum of `h_K/h_L` over the circle.
pub fn inradius(k: &SupportBody2D, l: &SupportBody2D) -> Result<InradiusResult> {
    let ratio = |t: Angle| k.support(t) / l.support(t);
    let coarse = circle_minimize_with(ratio, INRADIUS_SCAN_NODES);
    let mut change: f64 = 0.0;
    for refine in [2, 4] {
        let fine = circle_minimize_with(ratio, INRADIUS_SCAN_NODES * refine);
        change = change.max((fine.min_value - coarse.min_value).abs());
    }
    if change > INRADIUS_REFINEMENT_TOL {
        return Err(Error::numerical(
            "inradius",
            format!("grid refinement moved r by {change:.3e}"),
        ));
    }
    if !(coarse.min_value > 0.0) {
        return Err(Error::InvalidBody("support ratio is not positive".into()));
    }
    let profile = (0..256)
        .map(|i| {
            let t = TAU * i as f64 / 256.0;
            (t, ratio(Angle(t)))
        })
        .collect();
    Ok(InradiusResult {
        r: coarse.min_value,
        tangency_angles: coarse.argmin_set,
        ratio_profile: Some(profile),
        refinement_change: change,
    })
}
