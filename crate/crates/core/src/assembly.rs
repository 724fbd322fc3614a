//! Collocation system for `-pi I + L~_m + K_m`.
//!
//! Unknowns are the density values at the left-Radau nodes of every
//! sub-arc. The two corner-node unknowns of each corner are one value, so
//! their columns are merged and the second of the two identical corner rows
//! is dropped, which leaves a square system of size `n (2 mu + nu + 3) - n`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Decomposition, SubArcKind};
use crate::kernels::{kernel_l, mellin_corner_coefficient, KernelContext, PairClass};
use crate::linalg::DenseMatrix;
use crate::quadrature::{cached_rule, QuadratureRule, RuleKind, MAX_RULE_ORDER};

/// Rule orders and blend constants of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationParams {
    /// Radau order on corner pieces.
    pub mu: usize,
    /// Radau order on central pieces.
    pub nu: usize,
    /// Blend constant `c`.
    pub c: f64,
    /// Blend exponent `eps`.
    pub eps: f64,
}

impl DiscretizationParams {
    pub fn new(mu: usize, nu: usize, c: f64, eps: f64) -> Result<Self> {
        let p = Self { mu, nu, c, eps };
        p.validate()?;
        Ok(p)
    }

    /// Range checks that do not depend on the domain. `mu < nu` is only
    /// required once corners are present, see [`Self::validate_for`].
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 || self.nu == 0 || self.mu > MAX_RULE_ORDER || self.nu > MAX_RULE_ORDER {
            return Err(Error::Parameter(format!(
                "rule orders must lie in 1..={MAX_RULE_ORDER}, got mu={} nu={}",
                self.mu, self.nu
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Parameter(format!(
                "blend constant c={} must be positive",
                self.c
            )));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Parameter(format!(
                "blend exponent eps={} must lie in (0, 1/2)",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, dec: &Decomposition) -> Result<()> {
        self.validate()?;
        if dec.n_corners() > 0 && self.mu >= self.nu {
            return Err(Error::Parameter(format!(
                "corner rule order mu={} must be below nu={}",
                self.mu, self.nu
            )));
        }
        Ok(())
    }

    /// Blend threshold `min(1, c / nu^(2 - 2 eps))`.
    pub fn tau(&self) -> f64 {
        (self.c / (self.nu as f64).powf(2.0 - 2.0 * self.eps)).min(1.0)
    }
}

/// Indexing of unknowns and collocation rows.
#[derive(Debug, Clone)]
pub struct UnknownMap {
    rules: Vec<Arc<QuadratureRule>>,
    offsets: Vec<usize>,
    full_len: usize,
    /// Reduced column of every full unknown.
    column: Vec<usize>,
    /// Full unknowns whose row is dropped (the second corner node).
    dropped: Vec<bool>,
    /// `(sub-arc, node)` of every reduced unknown.
    nodes: Vec<(usize, usize)>,
}

impl UnknownMap {
    pub fn new(dec: &Decomposition, params: &DiscretizationParams) -> Result<Self> {
        params.validate_for(dec)?;
        let rules = (0..dec.len())
            .map(|i| cached_rule(RuleKind::RadauLeft, rule_order(dec, params, i)))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(rules.len());
        let mut full_len = 0;
        for r in &rules {
            offsets.push(full_len);
            full_len += r.len();
        }
        let mut column = vec![0; full_len];
        let mut dropped = vec![false; full_len];
        let mut nodes = Vec::with_capacity(full_len);
        for (i, r) in rules.iter().enumerate() {
            for l in 0..r.len() {
                let f = offsets[i] + l;
                if l == 0 && dec.subarcs[i].kind == SubArcKind::Upsilon {
                    column[f] = column[offsets[i - 1]];
                    dropped[f] = true;
                } else {
                    column[f] = nodes.len();
                    nodes.push((i, l));
                }
            }
        }
        Ok(Self {
            rules,
            offsets,
            full_len,
            column,
            dropped,
            nodes,
        })
    }

    pub fn rule(&self, i: usize) -> &QuadratureRule {
        &self.rules[i]
    }

    pub fn n_subarcs(&self) -> usize {
        self.rules.len()
    }

    /// `M_m = n (2 mu + nu + 3)`, before merging.
    pub fn full_len(&self) -> usize {
        self.full_len
    }

    /// Size of the square reduced system.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Reduced column of node `l` on sub-arc `i`.
    pub fn column(&self, i: usize, l: usize) -> usize {
        self.column[self.offsets[i] + l]
    }

    /// Reduced row of node `l` on sub-arc `i`, `None` for dropped rows.
    pub fn row(&self, i: usize, l: usize) -> Option<usize> {
        let f = self.offsets[i] + l;
        (!self.dropped[f]).then_some(self.column[f])
    }

    pub fn node(&self, reduced: usize) -> (usize, usize) {
        self.nodes[reduced]
    }

    /// Spreads a reduced vector back to per-sub-arc nodal values.
    pub fn expand(&self, reduced: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_subarcs())
            .map(|i| {
                (0..self.rules[i].len())
                    .map(|l| reduced[self.column(i, l)])
                    .collect()
            })
            .collect()
    }
}

fn rule_order(dec: &Decomposition, params: &DiscretizationParams, i: usize) -> usize {
    if dec.subarcs[i].is_corner_piece() {
        params.mu
    } else {
        params.nu
    }
}

/// Collocation nodes of sub-arc `i`: the nodes of its Radau rule.
pub fn collocation_points(
    dec: &Decomposition,
    params: &DiscretizationParams,
    i: usize,
) -> Result<Vec<f64>> {
    if i >= dec.len() {
        return Err(Error::Parameter(format!("sub-arc {i} out of range")));
    }
    Ok(
        cached_rule(RuleKind::RadauLeft, rule_order(dec, params, i))?
            .nodes
            .clone(),
    )
}

/// Values `g_i(s)` of the right-hand side at collocation points.
pub trait RhsProvider: Sync {
    fn rhs(&self, i: usize, s: f64) -> Result<f64>;
}

impl<F> RhsProvider for F
where
    F: Fn(usize, f64) -> Result<f64> + Sync,
{
    fn rhs(&self, i: usize, s: f64) -> Result<f64> {
        self(i, s)
    }
}

/// The assembled reduced system `A a = b`.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub map: UnknownMap,
    pub params: DiscretizationParams,
}

/// Coefficients of the modified Mellin block `L~` in the row of sub-arc `i`
/// at `s`, as `(reduced column, value)` pairs. Empty for central pieces.
pub fn blended_mellin_coefficients(
    dec: &Decomposition,
    map: &UnknownMap,
    params: &DiscretizationParams,
    i: usize,
    s: f64,
) -> Result<Vec<(usize, f64)>> {
    let Some(j) = dec.mellin_partner(i) else {
        return Ok(Vec::new());
    };
    let chi = dec.chi_of(i).expect("corner piece");
    let rule = map.rule(j);
    let tau = params.tau();
    let mut out = Vec::with_capacity(rule.len() + 1);
    if s >= tau {
        for (h, (x, w)) in rule.iter().enumerate() {
            out.push((map.column(j, h), w * kernel_l(chi, x, s)?));
        }
    } else {
        let frac = s / tau;
        for (h, (x, w)) in rule.iter().enumerate() {
            out.push((map.column(j, h), frac * w * kernel_l(chi, x, tau)?));
        }
        out.push((
            map.column(i, 0),
            (1.0 - frac) * mellin_corner_coefficient(chi)?,
        ));
    }
    Ok(out)
}

/// Full matrix row for collocation node `l` of sub-arc `i`, over reduced
/// columns. Also defined for the dropped corner rows.
pub fn assemble_row(
    ctx: &KernelContext,
    map: &UnknownMap,
    params: &DiscretizationParams,
    i: usize,
    l: usize,
) -> Result<Vec<f64>> {
    let dec = ctx.dec;
    let s = map.rule(i).nodes[l];
    let mut row = vec![0.0; map.dim()];
    row[map.column(i, l)] -= PI;
    for j in 0..dec.len() {
        let class = ctx.classify(i, j);
        for (h, (x, w)) in map.rule(j).iter().enumerate() {
            let k = match class {
                PairClass::MellinAdjacent => ctx.kernel_m(i, j, x, s)?,
                _ => ctx.kernel_k(i, j, x, s)?,
            };
            let v = w * k;
            if !v.is_finite() {
                return Err(Error::Assembly {
                    i,
                    j,
                    row_node: l,
                    col_node: h,
                });
            }
            row[map.column(j, h)] += v;
        }
    }
    for (col, v) in blended_mellin_coefficients(dec, map, params, i, s)? {
        if !v.is_finite() {
            return Err(Error::Assembly {
                i,
                j: dec.mellin_partner(i).unwrap_or(i),
                row_node: l,
                col_node: col,
            });
        }
        row[col] += v;
    }
    Ok(row)
}

/// Assembles the reduced collocation system, rows in parallel.
pub fn build_system(
    dec: &Decomposition,
    params: &DiscretizationParams,
    rhs: &dyn RhsProvider,
) -> Result<DenseSystem> {
    let map = UnknownMap::new(dec, params)?;
    let ctx = KernelContext::new(dec);
    let rows = (0..map.dim())
        .into_par_iter()
        .map(|r| {
            let (i, l) = map.node(r);
            let row = assemble_row(&ctx, &map, params, i, l)?;
            let b = rhs.rhs(i, map.rule(i).nodes[l])?;
            Ok((row, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    if let Some(r) = b.iter().position(|v| !v.is_finite()) {
        let (i, l) = map.node(r);
        return Err(Error::KernelDomain(format!(
            "right-hand side is not finite at sub-arc {i}, node {l}"
        )));
    }
    Ok(DenseSystem {
        matrix: DenseMatrix::from_rows(rows)?,
        rhs: b,
        map,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_example_domain, Boundary, Circle, DomainFamily, Vec2};
    use approx::assert_abs_diff_eq;

    fn zero_rhs(_: usize, _: f64) -> Result<f64> {
        Ok(0.0)
    }

    fn triangle() -> Decomposition {
        Decomposition::new(
            make_example_domain(DomainFamily::Triangle, 0.0).unwrap(),
            1e-8,
        )
        .unwrap()
    }

    fn circle() -> Decomposition {
        let arc = Arc::new(Circle {
            center: Vec2::new(0.0, 0.0),
            radius: 1.0,
        });
        Decomposition::new(Boundary::smooth_closed(arc).unwrap(), 1e-8).unwrap()
    }

    #[test]
    fn params_validation_and_tau() {
        assert!(DiscretizationParams::new(0, 32, 100.0, 1e-3).is_err());
        assert!(DiscretizationParams::new(8, 32, -1.0, 1e-3).is_err());
        assert!(DiscretizationParams::new(8, 32, 100.0, 0.5).is_err());
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-3).unwrap();
        assert_abs_diff_eq!(p.tau(), 100.0 / 32f64.powf(1.998), epsilon = 1e-15);
        let big = DiscretizationParams::new(8, 4, 1e6, 1e-3).unwrap();
        assert_eq!(big.tau(), 1.0);
        assert!(big.validate_for(&triangle()).is_err());
        assert!(big.validate_for(&circle()).is_ok());
    }

    #[test]
    fn triangle_dimensions() {
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-6).unwrap();
        let map = UnknownMap::new(&triangle(), &p).unwrap();
        assert_eq!(map.full_len(), 153);
        assert_eq!(map.dim(), 150);
        for k in 0..3 {
            assert_eq!(map.column(3 * k, 0), map.column(3 * k + 1, 0));
            assert_eq!(map.row(3 * k + 1, 0), None);
            assert!(map.row(3 * k, 0).is_some());
        }
    }

    #[test]
    fn collocation_nodes() {
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-6).unwrap();
        let dec = triangle();
        let g = collocation_points(&dec, &p, 0).unwrap();
        let c = collocation_points(&dec, &p, 2).unwrap();
        assert_eq!((g.len(), c.len()), (9, 33));
        assert_eq!((g[0], c[0]), (0.0, 0.0));
        assert!(g.iter().chain(&c).all(|&x| x < 1.0));
        assert!(collocation_points(&dec, &p, 9).is_err());
    }

    #[test]
    fn circle_maps_constants_to_minus_two_pi() {
        let dec = circle();
        let p = DiscretizationParams::new(64, 64, 100.0, 1e-3).unwrap();
        let sys = build_system(&dec, &p, &zero_rhs).unwrap();
        let ones = vec![1.0; sys.map.dim()];
        for v in sys.matrix.mul_vec(&ones) {
            assert_abs_diff_eq!(v, -2.0 * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn blend_is_continuous_at_threshold() {
        let dec = triangle();
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-6).unwrap();
        let map = UnknownMap::new(&dec, &p).unwrap();
        let tau = p.tau();
        let above = blended_mellin_coefficients(&dec, &map, &p, 0, tau).unwrap();
        // Just below the threshold the corner weight vanishes linearly.
        let below = blended_mellin_coefficients(&dec, &map, &p, 0, tau * (1.0 - 1e-15)).unwrap();
        let mut dense_a = vec![0.0; map.dim()];
        let mut dense_b = vec![0.0; map.dim()];
        for (c, v) in above {
            dense_a[c] += v;
        }
        for (c, v) in below {
            dense_b[c] += v;
        }
        for (a, b) in dense_a.iter().zip(&dense_b) {
            assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn corner_row_is_pure_corner_value() {
        let dec = triangle();
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-6).unwrap();
        let map = UnknownMap::new(&dec, &p).unwrap();
        let coeffs = blended_mellin_coefficients(&dec, &map, &p, 3, 0.0).unwrap();
        let chi = dec.chi_of(3).unwrap();
        let corner = map.column(3, 0);
        let mut dense = vec![0.0; map.dim()];
        for (c, v) in coeffs {
            dense[c] += v;
        }
        for (c, v) in dense.into_iter().enumerate() {
            let want = if c == corner { -chi * PI } else { 0.0 };
            assert_abs_diff_eq!(v, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn straight_corner_rows_coincide() {
        let dec = triangle();
        let p = DiscretizationParams::new(8, 32, 100.0, 1e-6).unwrap();
        let map = UnknownMap::new(&dec, &p).unwrap();
        let ctx = KernelContext::new(&dec);
        for k in 0..3 {
            let a = assemble_row(&ctx, &map, &p, 3 * k, 0).unwrap();
            let b = assemble_row(&ctx, &map, &p, 3 * k + 1, 0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn rhs_lands_in_row_order() {
        let dec = triangle();
        let p = DiscretizationParams::new(4, 8, 100.0, 1e-6).unwrap();
        let rhs = |i: usize, s: f64| -> Result<f64> { Ok(i as f64 + s) };
        let sys = build_system(&dec, &p, &rhs).unwrap();
        for r in 0..sys.map.dim() {
            let (i, l) = sys.map.node(r);
            assert_eq!(sys.rhs[r], i as f64 + sys.map.rule(i).nodes[l]);
        }
        let failing = |_: usize, _: f64| -> Result<f64> { Err(Error::Config("no data".into())) };
        assert!(build_system(&dec, &p, &failing).is_err());
    }
}
