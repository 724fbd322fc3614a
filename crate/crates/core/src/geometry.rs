//! Corner domains, their macro-arc parametrizations and the decomposition of
//! every macro arc into two short corner pieces and one central piece.
//!
//! Sub-arcs are stored in the order `Gamma_1, Upsilon_1, C_1, Gamma_2, ...`.
//! `Gamma_k` runs backwards from the corner `P_k` along the end of arc `k-1`,
//! `Upsilon_k` runs forwards from `P_k` along the start of arc `k`, and `C_k`
//! is what remains of arc `k` in between.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn normalized(self) -> Vec2 {
        self * (1.0 / self.norm())
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Position and first two derivatives of a parametrized curve at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub point: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

/// A `C^2` parametrization `t in [0,1] -> R^2`.
pub trait MacroArc: Send + Sync + Debug {
    fn eval(&self, t: f64) -> CurvePoint;

    fn position(&self, t: f64) -> Vec2 {
        self.eval(t).point
    }

    fn first_derivative(&self, t: f64) -> Vec2 {
        self.eval(t).d1
    }

    fn second_derivative(&self, t: f64) -> Vec2 {
        self.eval(t).d2
    }

    /// `sigma(t0 + dt) - sigma(t0)` with `dt` given exactly.
    fn chord(&self, t0: f64, dt: f64) -> Vec2 {
        self.position(t0 + dt) - self.position(t0)
    }
}

/// `sin(w (t0 + dt)) - sin(w t0)` without cancellation.
fn sin_step(w: f64, t0: f64, dt: f64) -> f64 {
    2.0 * (w * (t0 + 0.5 * dt)).cos() * (0.5 * w * dt).sin()
}

/// `cos(w (t0 + dt)) - cos(w t0)` without cancellation.
fn cos_step(w: f64, t0: f64, dt: f64) -> f64 {
    -2.0 * (w * (t0 + 0.5 * dt)).sin() * (0.5 * w * dt).sin()
}

/// Straight segment from `a` to `b`.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl MacroArc for Segment {
    fn eval(&self, t: f64) -> CurvePoint {
        let d = self.b - self.a;
        CurvePoint {
            point: self.a + d * t,
            d1: d,
            d2: Vec2::default(),
        }
    }

    fn chord(&self, _t0: f64, dt: f64) -> Vec2 {
        (self.b - self.a) * dt
    }
}

/// Counterclockwise circle, starting at angle 0.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl MacroArc for Circle {
    fn eval(&self, t: f64) -> CurvePoint {
        let w = 2.0 * PI;
        let (s, c) = (w * t).sin_cos();
        let r = self.radius;
        CurvePoint {
            point: self.center + Vec2::new(r * c, r * s),
            d1: Vec2::new(-r * w * s, r * w * c),
            d2: Vec2::new(-r * w * w * c, -r * w * w * s),
        }
    }

    fn chord(&self, t0: f64, dt: f64) -> Vec2 {
        let w = 2.0 * PI;
        Vec2::new(cos_step(w, t0, dt), sin_step(w, t0, dt)) * self.radius
    }
}

/// Heart-shaped curve with one outward corner of interior angle `phi` at the
/// origin, `phi in (pi, 2 pi)`:
///
/// `sigma(t) = R(theta) (T, 1) - (T, cos(pi t))`, `theta = (pi + phi) t`,
/// `T = tan(phi/2)`, `R` the rotation matrix. Expanded:
/// `x = T cos(theta) - sin(theta) - T`, `y = T sin(theta) + cos(theta) - cos(pi t)`.
#[derive(Debug, Clone, Copy)]
pub struct Heart {
    pub phi: f64,
}

impl MacroArc for Heart {
    fn eval(&self, t: f64) -> CurvePoint {
        let tt = (0.5 * self.phi).tan();
        let w = PI + self.phi;
        let (s, c) = (w * t).sin_cos();
        let (sp, cp) = (PI * t).sin_cos();
        CurvePoint {
            point: Vec2::new(tt * c - s - tt, tt * s + c - cp),
            d1: Vec2::new(w * (-tt * s - c), w * (tt * c - s) + PI * sp),
            d2: Vec2::new(w * w * (-tt * c + s), w * w * (-tt * s - c) + PI * PI * cp),
        }
    }

    fn chord(&self, t0: f64, dt: f64) -> Vec2 {
        let tt = (0.5 * self.phi).tan();
        let w = PI + self.phi;
        let (ds, dc) = (sin_step(w, t0, dt), cos_step(w, t0, dt));
        Vec2::new(tt * dc - ds, tt * ds + dc - cos_step(PI, t0, dt))
    }
}

/// `sigma(t) = (2 sin(pi t), -tan(phi/2) sin(2 pi t))`, `phi in (0, pi)`.
#[derive(Debug, Clone, Copy)]
pub struct Teardrop {
    pub phi: f64,
}

impl MacroArc for Teardrop {
    fn eval(&self, t: f64) -> CurvePoint {
        let tt = (0.5 * self.phi).tan();
        let (s1, c1) = (PI * t).sin_cos();
        let (s2, c2) = (2.0 * PI * t).sin_cos();
        CurvePoint {
            point: Vec2::new(2.0 * s1, -tt * s2),
            d1: Vec2::new(2.0 * PI * c1, -tt * 2.0 * PI * c2),
            d2: Vec2::new(-2.0 * PI * PI * s1, tt * 4.0 * PI * PI * s2),
        }
    }

    fn chord(&self, t0: f64, dt: f64) -> Vec2 {
        let tt = (0.5 * self.phi).tan();
        Vec2::new(2.0 * sin_step(PI, t0, dt), -tt * sin_step(2.0 * PI, t0, dt))
    }
}

/// `sigma(t) = ((2/3) sin(3 pi t), -tan(phi/2) sin(2 pi t))`, `phi in (pi, 2 pi)`.
#[derive(Debug, Clone, Copy)]
pub struct Boomerang {
    pub phi: f64,
}

impl MacroArc for Boomerang {
    fn eval(&self, t: f64) -> CurvePoint {
        let tt = (0.5 * self.phi).tan();
        let (s3, c3) = (3.0 * PI * t).sin_cos();
        let (s2, c2) = (2.0 * PI * t).sin_cos();
        CurvePoint {
            point: Vec2::new(2.0 / 3.0 * s3, -tt * s2),
            d1: Vec2::new(2.0 * PI * c3, -tt * 2.0 * PI * c2),
            d2: Vec2::new(-6.0 * PI * PI * s3, tt * 4.0 * PI * PI * s2),
        }
    }

    fn chord(&self, t0: f64, dt: f64) -> Vec2 {
        let tt = (0.5 * self.phi).tan();
        Vec2::new(
            2.0 / 3.0 * sin_step(3.0 * PI, t0, dt),
            -tt * sin_step(2.0 * PI, t0, dt),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub index: usize,
    pub point: Vec2,
    /// Interior angle `omega = (1 - chi) pi`.
    pub interior_angle: f64,
    pub chi: f64,
    /// Hölder exponent of the density at the corner, `1 / (1 + |chi|)`.
    pub beta: f64,
}

impl Corner {
    pub fn new(index: usize, point: Vec2, interior_angle: f64) -> Result<Self> {
        let chi = 1.0 - interior_angle / PI;
        if !(chi.abs() < 1.0) || chi == 0.0 || chi.abs() < 1e-12 {
            return Err(Error::Boundary(format!(
                "corner {index}: interior angle {interior_angle} gives chi = {chi}, need 0 < |chi| < 1"
            )));
        }
        Ok(Self {
            index,
            point,
            interior_angle,
            chi,
            beta: 1.0 / (1.0 + chi.abs()),
        })
    }
}

/// Counterclockwise piecewise smooth closed curve.
///
/// With corners, arc `k` runs from `P_k` to `P_{k+1}`. A boundary without
/// corners consists of a single smooth closed arc.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub arcs: Vec<Arc<dyn MacroArc>>,
    pub corners: Vec<Corner>,
}

const CLOSURE_TOL: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-8;

/// Counterclockwise angle from `from` to `to`, in `(0, 2 pi)`.
pub fn ccw_angle(from: Vec2, to: Vec2) -> f64 {
    let a = from.cross(to).atan2(from.dot(to));
    if a <= 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

impl Boundary {
    /// Validated boundary from head-to-tail arcs and the declared interior
    /// angles at their starting points.
    pub fn new(arcs: Vec<Arc<dyn MacroArc>>, corner_angles: &[f64]) -> Result<Self> {
        let n = arcs.len();
        if n == 0 {
            return Err(Error::Boundary("at least one arc is required".into()));
        }
        if corner_angles.len() != n {
            return Err(Error::Boundary(format!(
                "{n} arcs but {} corner angles",
                corner_angles.len()
            )));
        }
        let mut corners = Vec::with_capacity(n);
        for k in 0..n {
            let prev = &arcs[(k + n - 1) % n];
            let cur = &arcs[k];
            let end_prev = prev.position(1.0);
            let start = cur.position(0.0);
            let scale = 1.0 + start.norm();
            if (end_prev - start).norm() > CLOSURE_TOL * scale {
                return Err(Error::Boundary(format!(
                    "arc {} ends at ({}, {}) but arc {k} starts at ({}, {})",
                    (k + n - 1) % n,
                    end_prev.x,
                    end_prev.y,
                    start.x,
                    start.y
                )));
            }
            let out_dir = cur.first_derivative(0.0);
            let in_dir = prev.first_derivative(1.0);
            if out_dir.norm() == 0.0 || in_dir.norm() == 0.0 {
                return Err(Error::Boundary(format!("degenerate tangent at corner {k}")));
            }
            let measured = ccw_angle(out_dir, -in_dir);
            let declared = corner_angles[k];
            if (measured - declared).abs() > ANGLE_TOL {
                return Err(Error::Boundary(format!(
                    "corner {k}: declared angle {declared} but tangents give {measured}"
                )));
            }
            corners.push(Corner::new(k, start, declared)?);
        }
        let b = Self { arcs, corners };
        b.check_regular()?;
        b.check_orientation()?;
        Ok(b)
    }

    /// Boundary whose interior angles are taken from the one-sided tangents.
    pub fn from_arcs(arcs: Vec<Arc<dyn MacroArc>>) -> Result<Self> {
        let n = arcs.len();
        let angles: Vec<f64> = (0..n)
            .map(|k| {
                let out_dir = arcs[k].first_derivative(0.0);
                let in_dir = arcs[(k + n - 1) % n].first_derivative(1.0);
                ccw_angle(out_dir, -in_dir)
            })
            .collect();
        Self::new(arcs, &angles)
    }

    /// Closed polygon through `vertices` (counterclockwise).
    pub fn polygon(vertices: &[Vec2]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Boundary(
                "a polygon needs at least 3 vertices".into(),
            ));
        }
        let n = vertices.len();
        let arcs: Vec<Arc<dyn MacroArc>> = (0..n)
            .map(|k| {
                Arc::new(Segment {
                    a: vertices[k],
                    b: vertices[(k + 1) % n],
                }) as Arc<dyn MacroArc>
            })
            .collect();
        Self::from_arcs(arcs)
    }

    /// Smooth closed curve without corners.
    pub fn smooth_closed(arc: Arc<dyn MacroArc>) -> Result<Self> {
        let p0 = arc.position(0.0);
        let p1 = arc.position(1.0);
        if (p0 - p1).norm() > CLOSURE_TOL * (1.0 + p0.norm()) {
            return Err(Error::Boundary("curve is not closed".into()));
        }
        let t0 = arc.first_derivative(0.0);
        let t1 = arc.first_derivative(1.0);
        if (t0 - t1).norm() > 1e-10 * t0.norm() {
            return Err(Error::Boundary(
                "curve has a corner at its start point; declare it".into(),
            ));
        }
        let b = Self {
            arcs: vec![arc],
            corners: Vec::new(),
        };
        b.check_regular()?;
        b.check_orientation()?;
        Ok(b)
    }

    pub fn n_corners(&self) -> usize {
        self.corners.len()
    }

    fn check_regular(&self) -> Result<()> {
        for (k, arc) in self.arcs.iter().enumerate() {
            for j in 0..=1000 {
                let t = j as f64 / 1000.0;
                let cp = arc.eval(t);
                if !(cp.point.is_finite() && cp.d1.is_finite() && cp.d2.is_finite()) {
                    return Err(Error::Boundary(format!("arc {k} not finite at t={t}")));
                }
                if cp.d1.norm() <= 0.0 {
                    return Err(Error::Boundary(format!("arc {k} has zero speed at t={t}")));
                }
            }
        }
        Ok(())
    }

    fn check_orientation(&self) -> Result<()> {
        let area = self.signed_area();
        if !(area > 0.0) {
            return Err(Error::Boundary(format!(
                "boundary must be counterclockwise (signed area {area})"
            )));
        }
        Ok(())
    }

    /// `1/2 oint (x dy - y dx)` by Gauss-Legendre per arc.
    pub fn signed_area(&self) -> f64 {
        let rule = gauss_legendre(128).expect("fixed order");
        self.arcs
            .iter()
            .map(|arc| {
                rule.integrate(|t| {
                    let cp = arc.eval(t);
                    0.5 * cp.point.cross(cp.d1)
                })
            })
            .sum()
    }

    /// Dense polyline through the boundary, closed (first point repeated).
    pub fn sample(&self, total: usize) -> Vec<Vec2> {
        let per = (total / self.arcs.len()).max(2);
        let mut pts = Vec::with_capacity(per * self.arcs.len() + 1);
        for arc in &self.arcs {
            for j in 0..per {
                pts.push(arc.position(j as f64 / per as f64));
            }
        }
        pts.push(pts[0]);
        pts
    }

    /// Winding number of the sampled boundary about `p`.
    pub fn winding_number(&self, p: Vec2, samples: usize) -> f64 {
        let pts = self.sample(samples);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let a = w[0] - p;
            let b = w[1] - p;
            total += a.cross(b).atan2(a.dot(b));
        }
        total / (2.0 * PI)
    }

    /// Distance from `p` to the sampled boundary polyline.
    pub fn distance(&self, p: Vec2, samples: usize) -> f64 {
        let pts = self.sample(samples);
        pts.windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                let len2 = d.norm_sq();
                let t = if len2 > 0.0 {
                    ((p - w[0]).dot(d) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (p - (w[0] + d * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `p` is outside the closed region and farther than
    /// `min_distance` from the boundary.
    pub fn is_exterior(&self, p: Vec2, min_distance: f64) -> bool {
        self.winding_number(p, 4096).abs() < 0.5 && self.distance(p, 4096) > min_distance
    }
}

/// Built-in benchmark domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainFamily {
    Heart,
    Teardrop,
    Boomerang,
    Triangle,
}

impl DomainFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "heart" => Ok(Self::Heart),
            "teardrop" => Ok(Self::Teardrop),
            "boomerang" => Ok(Self::Boomerang),
            "triangle" => Ok(Self::Triangle),
            other => Err(Error::Config(format!("unknown domain '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Heart => "heart",
            Self::Teardrop => "teardrop",
            Self::Boomerang => "boomerang",
            Self::Triangle => "triangle",
        }
    }

    /// Open range of admissible corner angles.
    pub fn phi_range(self) -> Option<(f64, f64)> {
        match self {
            Self::Heart | Self::Boomerang => Some((PI, 2.0 * PI)),
            Self::Teardrop => Some((0.0, PI)),
            Self::Triangle => None,
        }
    }
}

pub const TRIANGLE_VERTICES: [Vec2; 3] = [
    Vec2::new(-1.25, -0.75),
    Vec2::new(0.75, -0.75),
    Vec2::new(0.75, 1.25),
];

/// Builds one of the benchmark boundaries. `phi` is ignored for the triangle.
pub fn make_example_domain(family: DomainFamily, phi: f64) -> Result<Boundary> {
    if let Some((lo, hi)) = family.phi_range() {
        if !(phi > lo && phi < hi) {
            return Err(Error::Parameter(format!(
                "{} angle {phi} outside ({lo}, {hi})",
                family.name()
            )));
        }
    }
    let arc: Arc<dyn MacroArc> = match family {
        DomainFamily::Heart => Arc::new(Heart { phi }),
        DomainFamily::Teardrop => Arc::new(Teardrop { phi }),
        DomainFamily::Boomerang => Arc::new(Boomerang { phi }),
        DomainFamily::Triangle => return Boundary::polygon(&TRIANGLE_VERTICES),
    };
    Boundary::new(vec![arc], &[phi])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubArcKind {
    Gamma,
    Upsilon,
    C,
}

/// One of the `3n` pieces, as an affine window `[a, b]` of a macro arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubArc {
    pub index: usize,
    pub kind: SubArcKind,
    /// Corner index `k` this piece belongs to (Gamma/Upsilon), or the arc
    /// index for C pieces.
    pub corner: usize,
    pub macro_index: usize,
    pub a: f64,
    pub b: f64,
    pub reversed: bool,
}

impl SubArc {
    /// Macro-arc parameter of the sub-arc parameter `s`.
    pub fn macro_param(&self, s: f64) -> f64 {
        if self.reversed {
            self.b - s * (self.b - self.a)
        } else {
            self.a + s * (self.b - self.a)
        }
    }

    /// `+1` for pieces running counterclockwise, `-1` for reversed ones.
    pub fn orientation(&self) -> f64 {
        if self.reversed {
            -1.0
        } else {
            1.0
        }
    }

    pub fn is_corner_piece(&self) -> bool {
        self.kind != SubArcKind::C
    }
}

/// Default cap on a corner piece as a fraction of its macro interval.
pub const DEFAULT_FRACTION_CAP: f64 = 0.25;
const DEVIATION_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerCut {
    /// Fraction of arc `k` taken by `Upsilon_k`.
    pub upsilon_fraction: f64,
    /// Fraction of arc `k-1` taken by `Gamma_k`.
    pub gamma_fraction: f64,
    /// Common corner speed `|sigma_Gamma'(0)| = |sigma_Upsilon'(0)|`.
    pub matched_speed: f64,
    /// Largest sampled distance from either piece to its tangent line.
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub boundary: Boundary,
    pub subarcs: Vec<SubArc>,
    pub cuts: Vec<CornerCut>,
    pub delta: f64,
}

/// Largest perpendicular distance from `arc` on the parameter window to the
/// tangent line through `origin` with direction `dir`.
fn tangent_deviation(arc: &dyn MacroArc, from: f64, to: f64, origin: Vec2, dir: Vec2) -> f64 {
    let unit = dir.normalized();
    (0..=DEVIATION_SAMPLES)
        .map(|j| {
            let t = from + (to - from) * j as f64 / DEVIATION_SAMPLES as f64;
            (arc.position(t) - origin).cross(unit).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest fraction `e <= cap` whose window deviates at most `delta` from the
/// tangent; `at_start` selects `[0, e]` versus `[1-e, 1]`.
fn largest_fraction(arc: &dyn MacroArc, at_start: bool, delta: f64, cap: f64) -> f64 {
    let (origin, dir) = if at_start {
        (arc.position(0.0), arc.first_derivative(0.0))
    } else {
        (arc.position(1.0), arc.first_derivative(1.0))
    };
    let dev = |e: f64| {
        if at_start {
            tangent_deviation(arc, 0.0, e, origin, dir)
        } else {
            tangent_deviation(arc, 1.0 - e, 1.0, origin, dir)
        }
    };
    if dev(cap) <= delta {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if dev(mid) <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

impl Decomposition {
    pub fn new(boundary: Boundary, delta: f64) -> Result<Self> {
        Self::with_cap(boundary, delta, DEFAULT_FRACTION_CAP)
    }

    pub fn with_cap(boundary: Boundary, delta: f64, cap: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Decomposition(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !(cap > 0.0 && cap < 0.5) {
            return Err(Error::Decomposition(format!(
                "fraction cap {cap} must lie in (0, 1/2)"
            )));
        }
        let n = boundary.n_corners();
        if n == 0 {
            let subarcs = vec![SubArc {
                index: 0,
                kind: SubArcKind::C,
                corner: 0,
                macro_index: 0,
                a: 0.0,
                b: 1.0,
                reversed: false,
            }];
            return Ok(Self {
                boundary,
                subarcs,
                cuts: Vec::new(),
                delta,
            });
        }
        let mut cuts = Vec::with_capacity(n);
        for k in 0..n {
            let prev = (k + n - 1) % n;
            let arc_k = boundary.arcs[k].as_ref();
            let arc_prev = boundary.arcs[prev].as_ref();
            let speed_u = arc_k.first_derivative(0.0).norm();
            let speed_g = arc_prev.first_derivative(1.0).norm();
            if !(speed_u > 0.0 && speed_g > 0.0) {
                return Err(Error::Decomposition(format!(
                    "degenerate tangent at corner {k}"
                )));
            }
            let mut e_u = largest_fraction(arc_k, true, delta, cap);
            let mut e_g = largest_fraction(arc_prev, false, delta, cap);
            if e_u <= 0.0 || e_g <= 0.0 {
                return Err(Error::Decomposition(format!(
                    "corner {k}: no admissible corner piece for delta = {delta}"
                )));
            }
            // Match corner speeds: e_g |sigma'_{k-1}(1)| = e_u |sigma'_k(0)|.
            let su = e_u * speed_u;
            let sg = e_g * speed_g;
            if su > sg {
                e_u = sg / speed_u;
            } else {
                e_g = su / speed_g;
            }
            let deviation = |e_u: f64, e_g: f64| {
                let dev_u = tangent_deviation(
                    arc_k,
                    0.0,
                    e_u,
                    arc_k.position(0.0),
                    arc_k.first_derivative(0.0),
                );
                let dev_g = tangent_deviation(
                    arc_prev,
                    1.0 - e_g,
                    1.0,
                    arc_prev.position(1.0),
                    arc_prev.first_derivative(1.0),
                );
                dev_u.max(dev_g)
            };
            // The sampled deviation is not exactly monotone in the window
            // when the curve bends back toward its tangent; shrinking both
            // pieces by the same factor keeps the speeds matched.
            let mut dev = deviation(e_u, e_g);
            while dev > delta {
                e_u *= 0.999;
                e_g *= 0.999;
                dev = deviation(e_u, e_g);
            }
            cuts.push(CornerCut {
                upsilon_fraction: e_u,
                gamma_fraction: e_g,
                matched_speed: e_u * speed_u,
                deviation: dev,
            });
        }
        for k in 0..n {
            let next = (k + 1) % n;
            if cuts[k].upsilon_fraction + cuts[next].gamma_fraction >= 1.0 {
                return Err(Error::Decomposition(format!(
                    "arc {k}: corner pieces overlap"
                )));
            }
        }
        let mut subarcs = Vec::with_capacity(3 * n);
        for k in 0..n {
            let prev = (k + n - 1) % n;
            let next = (k + 1) % n;
            let eg = cuts[k].gamma_fraction;
            let eu = cuts[k].upsilon_fraction;
            subarcs.push(SubArc {
                index: 3 * k,
                kind: SubArcKind::Gamma,
                corner: k,
                macro_index: prev,
                a: 1.0 - eg,
                b: 1.0,
                reversed: true,
            });
            subarcs.push(SubArc {
                index: 3 * k + 1,
                kind: SubArcKind::Upsilon,
                corner: k,
                macro_index: k,
                a: 0.0,
                b: eu,
                reversed: false,
            });
            subarcs.push(SubArc {
                index: 3 * k + 2,
                kind: SubArcKind::C,
                corner: k,
                macro_index: k,
                a: eu,
                b: 1.0 - cuts[next].gamma_fraction,
                reversed: false,
            });
        }
        Ok(Self {
            boundary,
            subarcs,
            cuts,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.subarcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subarcs.is_empty()
    }

    pub fn n_corners(&self) -> usize {
        self.boundary.n_corners()
    }

    /// Point and chain-rule derivatives of sub-arc `i` at `s`.
    pub fn subarc_eval(&self, i: usize, s: f64) -> CurvePoint {
        let sa = &self.subarcs[i];
        let len = sa.b - sa.a;
        let cp = self.boundary.arcs[sa.macro_index].eval(sa.macro_param(s));
        let sign = sa.orientation();
        CurvePoint {
            point: cp.point,
            d1: cp.d1 * (sign * len),
            d2: cp.d2 * (len * len),
        }
    }

    /// Signed macro-parameter offset of sub-arc `i` at `s` from its start.
    fn param_offset(&self, i: usize, s: f64) -> f64 {
        let sa = &self.subarcs[i];
        sa.orientation() * s * (sa.b - sa.a)
    }

    /// `sigma_i(s) - sigma_j(t)`, avoiding cancellation between nearby points
    /// of the same macro arc or of the two pieces at one corner.
    pub fn displacement(&self, i: usize, s: f64, j: usize, t: f64) -> Vec2 {
        let (si, sj) = (&self.subarcs[i], &self.subarcs[j]);
        if si.is_corner_piece() && sj.is_corner_piece() && si.corner == sj.corner {
            let from_corner = |k: usize, u: f64| {
                let sa = &self.subarcs[k];
                let start = if sa.reversed { 1.0 } else { 0.0 };
                self.boundary.arcs[sa.macro_index].chord(start, self.param_offset(k, u))
            };
            return from_corner(i, s) - from_corner(j, t);
        }
        if si.macro_index == sj.macro_index {
            let start_i = if si.reversed { si.b } else { si.a };
            let start_j = if sj.reversed { sj.b } else { sj.a };
            let ut = start_j + self.param_offset(j, t);
            let du = (start_i - start_j) + (self.param_offset(i, s) - self.param_offset(j, t));
            return self.boundary.arcs[si.macro_index].chord(ut, du);
        }
        self.subarc_eval(i, s).point - self.subarc_eval(j, t).point
    }

    /// Interior angle seen from sub-arc `i` at parameter `s`.
    pub fn omega_bar(&self, i: usize, s: f64) -> f64 {
        let sa = &self.subarcs[i];
        if sa.is_corner_piece() && s == 0.0 {
            self.boundary.corners[sa.corner].interior_angle
        } else {
            PI
        }
    }

    /// `(macro arc, macro parameter)` of sub-arc `i` at `s`.
    pub fn macro_param_of(&self, i: usize, s: f64) -> (usize, f64) {
        let sa = &self.subarcs[i];
        (sa.macro_index, sa.macro_param(s))
    }

    /// Index of the Mellin partner of a corner piece.
    pub fn mellin_partner(&self, i: usize) -> Option<usize> {
        match self.subarcs[i].kind {
            SubArcKind::Gamma => Some(i + 1),
            SubArcKind::Upsilon => Some(i - 1),
            SubArcKind::C => None,
        }
    }

    pub fn chi_of(&self, i: usize) -> Option<f64> {
        let sa = &self.subarcs[i];
        sa.is_corner_piece()
            .then(|| self.boundary.corners[sa.corner].chi)
    }
}
