//! Right-hand side `g(P) = int_Sigma f(Q) log|P - Q| dSigma_Q`.
//!
//! On the macro arc carrying `P` the logarithm is split as
//! `log|t - s| + delta(t, s)`. The first part is integrated by a product
//! rule on logarithmic Legendre moments, the second (smooth) part and the
//! other arcs by plain Gauss-Legendre.

use std::fmt;
use std::sync::Arc;

use crate::assembly::RhsProvider;
use crate::error::{Error, Result};
use crate::geometry::{Boundary, Decomposition, MacroArc, Vec2};
use crate::quadrature::{
    cached_rule, legendre_orthonormal_all, log_moments, QuadratureRule, RuleKind, MAX_MOMENTS,
};

/// Gauss-Legendre order of the compatibility check.
pub const COMPATIBILITY_ORDER: usize = 256;
/// Largest acceptable `|int_Sigma f|`.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// Below this parameter gap `delta` switches to the tangent form.
pub const DELTA_SWITCH: f64 = 8.0 * f64::EPSILON;

type BoundaryFn = dyn Fn(Vec2, Vec2) -> f64 + Send + Sync;

/// Neumann datum `f` on the boundary, a function of the point and the
/// inward unit normal there.
#[derive(Clone)]
pub struct NeumannDatum {
    f: Arc<BoundaryFn>,
}

impl fmt::Debug for NeumannDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NeumannDatum")
    }
}

impl NeumannDatum {
    /// Datum given directly as a function of the boundary point.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(Vec2) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(move |p, _| f(p)),
        }
    }

    /// `f = grad u . n` for an exterior harmonic `u`.
    pub fn from_gradient<G>(grad: G) -> Self
    where
        G: Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(move |p, n| grad(p).dot(n)),
        }
    }

    /// `f` at parameter `t` of macro arc `k`.
    pub fn value(&self, boundary: &Boundary, k: usize, t: f64) -> f64 {
        let cp = boundary.arcs[k].eval(t);
        (self.f)(cp.point, inward_normal(cp.d1))
    }

    /// Density `phi_k(t) = f(sigma_k(t)) |sigma_k'(t)|`.
    pub fn phi(&self, boundary: &Boundary, k: usize, t: f64) -> f64 {
        let cp = boundary.arcs[k].eval(t);
        (self.f)(cp.point, inward_normal(cp.d1)) * cp.d1.norm()
    }

    /// `int_Sigma f dSigma` by Gauss-Legendre on every macro arc.
    pub fn flux(&self, boundary: &Boundary) -> Result<f64> {
        let rule = cached_rule(RuleKind::Legendre, COMPATIBILITY_ORDER)?;
        Ok((0..boundary.arcs.len())
            .map(|k| rule.integrate(|t| self.phi(boundary, k, t)))
            .sum())
    }

    /// Rejects data violating `int_Sigma f = 0`.
    pub fn check_compatibility(&self, boundary: &Boundary) -> Result<f64> {
        let flux = self.flux(boundary)?;
        if !(flux.abs() <= COMPATIBILITY_TOL) {
            return Err(Error::Config(format!(
                "Neumann datum has net flux {flux:e}, the exterior problem needs zero"
            )));
        }
        Ok(flux)
    }
}

/// Left unit normal, inward for a counterclockwise boundary.
fn inward_normal(d1: Vec2) -> Vec2 {
    d1.perp().normalized()
}

/// `grad u . n` at parameter `t` of macro arc `k`, `n` the inward normal.
pub fn normal_derivative<G>(grad: G, boundary: &Boundary, k: usize, t: f64) -> f64
where
    G: Fn(Vec2) -> Vec2,
{
    let cp = boundary.arcs[k].eval(t);
    grad(cp.point).dot(inward_normal(cp.d1))
}

/// Smooth part `log(|sigma(s) - sigma(t)| / |t - s|)` of the logarithm on one
/// arc, replaced by `log|sigma'(t)|` when `t` and `s` are too close.
pub fn delta_l(arc: &dyn MacroArc, t: f64, s: f64) -> f64 {
    let gap = s - t;
    if gap.abs() < DELTA_SWITCH {
        arc.first_derivative(t).norm().ln()
    } else {
        (arc.chord(t, gap).norm() / gap.abs()).ln()
    }
}

/// Product-integration approximation of `g` with `M`-point rules.
#[derive(Debug, Clone)]
pub struct ProductRuleRhs<'a> {
    dec: &'a Decomposition,
    m: usize,
    rule: Arc<QuadratureRule>,
    /// `sigma_k` at the nodes, per macro arc.
    points: Vec<Vec<Vec2>>,
    /// `lambda_h phi_k(x_h)`, per macro arc.
    weighted_phi: Vec<Vec<f64>>,
    /// `sum_h lambda_h phi_k(x_h) p_nu(x_h)`, per macro arc.
    legendre_coeffs: Vec<Vec<f64>>,
}

impl<'a> ProductRuleRhs<'a> {
    pub fn new(dec: &'a Decomposition, datum: &NeumannDatum, m: usize) -> Result<Self> {
        if m == 0 || m > MAX_MOMENTS {
            return Err(Error::Parameter(format!(
                "RHS rule size M={m} outside 1..={MAX_MOMENTS}"
            )));
        }
        let rule = cached_rule(RuleKind::Legendre, m)?;
        let boundary = &dec.boundary;
        let n_arcs = boundary.arcs.len();
        let mut points = Vec::with_capacity(n_arcs);
        let mut weighted_phi = Vec::with_capacity(n_arcs);
        let mut legendre_coeffs = Vec::with_capacity(n_arcs);
        for k in 0..n_arcs {
            let pts: Vec<Vec2> = rule
                .nodes
                .iter()
                .map(|&x| boundary.arcs[k].position(x))
                .collect();
            let wphi: Vec<f64> = rule
                .iter()
                .map(|(x, w)| w * datum.phi(boundary, k, x))
                .collect();
            let mut coeffs = vec![0.0; m];
            for (&x, &wp) in rule.nodes.iter().zip(&wphi) {
                for (c, p) in coeffs.iter_mut().zip(legendre_orthonormal_all(m, x)) {
                    *c += wp * p;
                }
            }
            points.push(pts);
            weighted_phi.push(wphi);
            legendre_coeffs.push(coeffs);
        }
        if weighted_phi.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "Neumann datum is not finite on the boundary".into(),
            ));
        }
        Ok(Self {
            dec,
            m,
            rule,
            points,
            weighted_phi,
            legendre_coeffs,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `g(sigma_l(s))` on macro arc `l`.
    pub fn on_macro_arc(&self, l: usize, s: f64) -> Result<f64> {
        let arc = self.dec.boundary.arcs[l].as_ref();
        let field = arc.position(s);
        let mut total = 0.0;
        for (k, (pts, wphi)) in self.points.iter().zip(&self.weighted_phi).enumerate() {
            if k != l {
                total += pts
                    .iter()
                    .zip(wphi)
                    .map(|(&q, &wp)| wp * (field - q).norm().ln())
                    .sum::<f64>();
            }
        }
        let moments = log_moments(s, self.m)?;
        total += moments
            .iter()
            .zip(&self.legendre_coeffs[l])
            .map(|(c, a)| c * a)
            .sum::<f64>();
        total += self
            .rule
            .nodes
            .iter()
            .zip(&self.weighted_phi[l])
            .map(|(&x, &wp)| wp * delta_l(arc, x, s))
            .sum::<f64>();
        Ok(total)
    }

    /// `g_i(s)` on sub-arc `i`.
    pub fn value(&self, i: usize, s: f64) -> Result<f64> {
        let (l, t) = self.dec.macro_param_of(i, s);
        self.on_macro_arc(l, t.clamp(0.0, 1.0))
    }
}

impl RhsProvider for ProductRuleRhs<'_> {
    fn rhs(&self, i: usize, s: f64) -> Result<f64> {
        self.value(i, s)
    }
}
