//! Double-layer kernels on the decomposed boundary.
//!
//! All kernels use the physical normal, the left normal of the
//! counterclockwise boundary. Reversed pieces (`Gamma_k`) have their tangent
//! flipped, so their raw double-layer expression is multiplied by `-1`. With
//! that convention both Mellin pairs of a straight corner reduce exactly to
//! the kernel `L` below.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{Decomposition, Vec2};

/// Squared distance below which distinct sub-arcs are treated as touching.
const COINCIDENCE_SQ: f64 = 1e-28;

/// How a pair of sub-arcs interacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Smooth,
    MellinAdjacent,
    Diagonal,
}

/// Raw double-layer expression with the tangent `d1` of the source point `q`:
/// `[d1.y (p.x - q.x) - d1.x (p.y - q.y)] / |p - q|^2`.
pub fn double_layer_raw(p: Vec2, q: Vec2, d1: Vec2) -> f64 {
    let diff = p - q;
    -d1.cross(diff) / diff.norm_sq()
}

/// Mellin kernel `-s sin(chi pi) / (s^2 + 2 t s cos(chi pi) + t^2)`.
pub fn kernel_l(chi: f64, t: f64, s: f64) -> Result<f64> {
    if t == 0.0 && s == 0.0 {
        return Err(Error::KernelDomain(
            "Mellin kernel undefined at (0,0)".into(),
        ));
    }
    let (sn, cs) = (chi * PI).sin_cos();
    Ok(-s * sn / (s * s + 2.0 * t * s * cs + t * t))
}

/// Value of the corner block row per unit corner density: `-chi pi`.
pub fn mellin_corner_coefficient(chi: f64) -> Result<f64> {
    if !(chi.abs() < 1.0) || chi == 0.0 {
        return Err(Error::Parameter(format!(
            "chi = {chi} must satisfy 0 < |chi| < 1"
        )));
    }
    Ok(-chi * PI)
}

/// Kernel evaluation context over one decomposition, with the corner limits
/// of `M` cached per Mellin pair.
#[derive(Debug)]
pub struct KernelContext<'a> {
    pub dec: &'a Decomposition,
    corner_limits: Vec<OnceLock<f64>>,
}

impl<'a> KernelContext<'a> {
    pub fn new(dec: &'a Decomposition) -> Self {
        let corner_limits = (0..dec.len()).map(|_| OnceLock::new()).collect();
        Self { dec, corner_limits }
    }

    pub fn classify(&self, i: usize, j: usize) -> PairClass {
        if i == j {
            PairClass::Diagonal
        } else if self.dec.mellin_partner(i) == Some(j) {
            PairClass::MellinAdjacent
        } else {
            PairClass::Smooth
        }
    }

    /// Double-layer kernel `K^{i,j}(t, s)`: field point on sub-arc `i` at `s`,
    /// source point on sub-arc `j` at `t`.
    pub fn kernel_k(&self, i: usize, j: usize, t: f64, s: f64) -> Result<f64> {
        let src = self.dec.subarc_eval(j, t);
        let orient = self.dec.subarcs[j].orientation();
        if i == j && t == s {
            let d1 = src.d1;
            return Ok(orient * 0.5 * (-d1.cross(src.d2)) / d1.norm_sq());
        }
        let diff = self.dec.displacement(i, s, j, t);
        let scale = 1.0 + src.point.norm_sq();
        if diff.norm_sq() < COINCIDENCE_SQ * scale {
            return Err(Error::Coincidence { i, j, t, s });
        }
        Ok(orient * -src.d1.cross(diff) / diff.norm_sq())
    }

    /// Smooth remainder `M = K - L` of a Mellin pair.
    pub fn kernel_m(&self, i: usize, j: usize, t: f64, s: f64) -> Result<f64> {
        if self.classify(i, j) != PairClass::MellinAdjacent {
            return Err(Error::Parameter(format!(
                "sub-arcs ({i}, {j}) are not a Mellin pair"
            )));
        }
        if t == 0.0 && s == 0.0 {
            return self.corner_limit(i, j);
        }
        let chi = self.dec.chi_of(i).expect("corner piece");
        Ok(self.kernel_k(i, j, t, s)? - kernel_l(chi, t, s)?)
    }

    /// `lim_{h -> 0+} M(h, h)` from the second-order expansion of both pieces
    /// at the corner. The `1/h` parts of `K` and `L` cancel exactly once the
    /// corner speeds are matched, leaving this closed form.
    fn corner_limit(&self, i: usize, j: usize) -> Result<f64> {
        if let Some(v) = self.corner_limits[i].get() {
            return Ok(*v);
        }
        let field = self.dec.subarc_eval(i, 0.0);
        let src = self.dec.subarc_eval(j, 0.0);
        let (a, aa, b, bb) = (field.d1, field.d2, src.d1, src.d2);
        let (d, dd) = (a - b, aa - bb);
        let n2 = d.norm_sq();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::KernelDomain(format!(
                "degenerate corner between sub-arcs {i} and {j}"
            )));
        }
        let first = b.cross(dd) * 0.5 + bb.cross(d);
        let limit =
            self.dec.subarcs[j].orientation() * (-first / n2 + b.cross(a) * d.dot(dd) / (n2 * n2));
        Ok(*self.corner_limits[i].get_or_init(|| limit))
    }

    /// Exterior-field kernel `H_i(x, y, t)`.
    pub fn kernel_h(&self, i: usize, x: f64, y: f64, t: f64) -> Result<f64> {
        let src = self.dec.subarc_eval(i, t);
        let field = Vec2::new(x, y);
        if (field - src.point).norm() < 1e-12 {
            return Err(Error::KernelDomain(format!(
                "field point ({x}, {y}) lies on sub-arc {i}"
            )));
        }
        Ok(self.dec.subarcs[i].orientation() * double_layer_raw(field, src.point, src.d1))
    }
}
