//! Dense solve, condition number and evaluation of the exterior field.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::assembly::{DenseSystem, DiscretizationParams, UnknownMap};
use crate::error::{Error, Result};
use crate::geometry::{Decomposition, Vec2};
use crate::kernels::double_layer_raw;
use crate::linalg::{DenseMatrix, LuFactors};
use crate::quadrature::{cached_rule, RuleKind, MAX_RULE_ORDER};
use crate::rhs::NeumannDatum;

/// Relative residual bound every solve must meet.
pub const RESIDUAL_RATIO: f64 = 1e-10;
/// Points closer than this to the boundary are rejected.
pub const MIN_BOUNDARY_DISTANCE: f64 = 1e-9;

/// Solution of one dense system.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub x: Vec<f64>,
    /// `||A x - b||_inf`.
    pub residual: f64,
    lu: LuFactors,
    norm_a: f64,
}

impl DenseSolution {
    /// `||A||_inf ||A^{-1}||_inf` from the stored factors.
    pub fn condition(&self) -> f64 {
        self.norm_a * self.lu.inverse_norm_inf()
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// LU solve of `A x = b` with the residual check
/// `||A x - b|| <= 1e-10 (||A|| ||x|| + ||b||)`.
pub fn solve_matrix(a: &DenseMatrix, b: &[f64]) -> Result<DenseSolution> {
    if b.len() != a.rows() {
        return Err(Error::Parameter(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            a.rows()
        )));
    }
    let lu = LuFactors::factor(a)?;
    let x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let residual = norm_inf(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    let norm_a = a.norm_inf();
    let bound = RESIDUAL_RATIO * (norm_a * norm_inf(&x) + norm_inf(b));
    if !(residual <= bound) {
        return Err(Error::Residual { residual, bound });
    }
    Ok(DenseSolution {
        x,
        residual,
        lu,
        norm_a,
    })
}

/// Solves an assembled system, returning the solution and its residual.
pub fn solve_dense(system: &DenseSystem) -> Result<(Vec<f64>, f64)> {
    let sol = solve_matrix(&system.matrix, &system.rhs)?;
    Ok((sol.x, sol.residual))
}

/// Infinity-norm condition number with the exact inverse.
pub fn cond_inf(a: &DenseMatrix) -> Result<f64> {
    let lu = LuFactors::factor(a)?;
    Ok(a.norm_inf() * lu.inverse_norm_inf())
}

/// Boundary values of the density plus what the representation formula
/// needs to evaluate the harmonic field off the boundary.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub dec: Decomposition,
    pub params: DiscretizationParams,
    pub map: UnknownMap,
    /// Density at every Radau node of every sub-arc; corner values repeated.
    pub values: Vec<Vec<f64>>,
    pub datum: NeumannDatum,
    /// Gauss-Legendre order of the single-layer term.
    pub outer_n: usize,
    single: Vec<(Vec2, f64)>,
    double: Vec<(Vec2, Vec2, f64)>,
}

impl SolutionField {
    pub fn new(
        system: &DenseSystem,
        dec: &Decomposition,
        x: &[f64],
        datum: NeumannDatum,
        outer_n: usize,
    ) -> Result<Self> {
        if outer_n == 0 || outer_n > MAX_RULE_ORDER {
            return Err(Error::Parameter(format!(
                "outer rule size N={outer_n} outside 1..={MAX_RULE_ORDER}"
            )));
        }
        if x.len() != system.map.dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(
                "density vector has the wrong size or is not finite".into(),
            ));
        }
        let values = system.map.expand(x);
        let rule = cached_rule(RuleKind::Legendre, outer_n)?;
        let boundary = &dec.boundary;
        let mut single = Vec::with_capacity(outer_n * boundary.arcs.len());
        for k in 0..boundary.arcs.len() {
            for (t, w) in rule.iter() {
                single.push((boundary.arcs[k].position(t), w * datum.phi(boundary, k, t)));
            }
        }
        let mut double = Vec::new();
        for (i, vals) in values.iter().enumerate() {
            let orient = dec.subarcs[i].orientation();
            for ((t, w), u) in system.map.rule(i).iter().zip(vals) {
                let cp = dec.subarc_eval(i, t);
                double.push((cp.point, cp.d1 * orient, w * u));
            }
        }
        Ok(Self {
            dec: dec.clone(),
            params: system.params,
            map: system.map.clone(),
            values,
            datum,
            outer_n,
            single,
            double,
        })
    }

    /// Approximate solution at an exterior point.
    pub fn eval_exterior(&self, x: f64, y: f64) -> Result<f64> {
        let p = Vec2::new(x, y);
        if !p.is_finite() || !self.dec.boundary.is_exterior(p, MIN_BOUNDARY_DISTANCE) {
            return Err(Error::NotExterior { x, y });
        }
        let single: f64 = self
            .single
            .iter()
            .map(|&(q, wphi)| wphi * (q - p).norm().ln())
            .sum();
        let double: f64 = self
            .double
            .iter()
            .map(|&(q, d1, wu)| wu * double_layer_raw(p, q, d1))
            .sum();
        Ok(-(single - double) / (2.0 * PI))
    }

    pub fn eval_many(&self, points: &[Vec2]) -> Vec<Result<f64>> {
        points
            .par_iter()
            .map(|p| self.eval_exterior(p.x, p.y))
            .collect()
    }
}
