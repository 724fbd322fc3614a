//! Benchmark problems with known solutions, parameter sweeps and CSV output.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::assembly::{build_system, DiscretizationParams};
use crate::error::{Error, Result};
use crate::geometry::{make_example_domain, Boundary, Decomposition, DomainFamily, Vec2};
use crate::quadrature::{MAX_MOMENTS, MAX_RULE_ORDER};
use crate::rhs::{NeumannDatum, ProductRuleRhs};
use crate::solve::{solve_matrix, SolutionField, MIN_BOUNDARY_DISTANCE};

/// Harmonic functions in the exterior used as manufactured solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ExactSolution {
    /// `log|P - q1| - log|P - q2|`.
    LogPair { q1: [f64; 2], q2: [f64; 2] },
    /// `atan((y - y1)/(x - x0)) - atan((y - y2)/(x - x0))`.
    ArctanPair { x0: f64, y1: f64, y2: f64 },
    /// `Re (z - c)^-2 = (x^2 - y^2) / (x^2 + y^2)^2` about `center`.
    Dipole { center: [f64; 2] },
}

impl ExactSolution {
    pub fn u(&self, p: Vec2) -> f64 {
        match *self {
            Self::LogPair { q1, q2 } => (p - v(q1)).norm().ln() - (p - v(q2)).norm().ln(),
            Self::ArctanPair { x0, y1, y2 } => {
                let dx = p.x - x0;
                ((p.y - y1) / dx).atan() - ((p.y - y2) / dx).atan()
            }
            Self::Dipole { center } => {
                let d = p - v(center);
                let r2 = d.norm_sq();
                (d.x * d.x - d.y * d.y) / (r2 * r2)
            }
        }
    }

    pub fn grad(&self, p: Vec2) -> Vec2 {
        match *self {
            Self::LogPair { q1, q2 } => {
                let (a, b) = (p - v(q1), p - v(q2));
                a * (1.0 / a.norm_sq()) - b * (1.0 / b.norm_sq())
            }
            Self::ArctanPair { x0, y1, y2 } => {
                let angle_grad = |yc: f64| {
                    let d = Vec2::new(p.x - x0, p.y - yc);
                    Vec2::new(-d.y, d.x) * (1.0 / d.norm_sq())
                };
                angle_grad(y1) - angle_grad(y2)
            }
            Self::Dipole { center } => {
                let d = p - v(center);
                let r2 = d.norm_sq();
                let (r4, r6) = (r2 * r2, r2 * r2 * r2);
                let q = d.x * d.x - d.y * d.y;
                Vec2::new(
                    2.0 * d.x / r4 - 4.0 * d.x * q / r6,
                    -2.0 * d.y / r4 - 4.0 * d.y * q / r6,
                )
            }
        }
    }

    /// Points where the function is singular; they must lie inside the domain.
    pub fn singular_points(&self) -> Vec<Vec2> {
        match *self {
            Self::LogPair { q1, q2 } => vec![v(q1), v(q2)],
            Self::ArctanPair { x0, y1, y2 } => (0..=8)
                .map(|j| Vec2::new(x0, y2 + (y1 - y2) * j as f64 / 8.0))
                .collect(),
            Self::Dipole { center } => vec![v(center)],
        }
    }

    /// The Neumann datum `grad u . n`.
    pub fn datum(&self) -> NeumannDatum {
        let sol = *self;
        NeumannDatum::from_gradient(move |p| sol.grad(p))
    }
}

fn v(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

/// Boundary description: a built-in family or a polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Family {
        family: DomainFamily,
        #[serde(default)]
        phi: Option<f64>,
    },
    Polygon {
        polygon: Vec<[f64; 2]>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Boundary> {
        match self {
            Self::Family { family, phi } => {
                let phi = match (family, phi) {
                    (DomainFamily::Triangle, _) => 0.0,
                    (_, Some(p)) => *p,
                    (f, None) => {
                        return Err(Error::Config(format!(
                            "domain '{}' needs an angle phi",
                            f.name()
                        )))
                    }
                };
                make_example_domain(*family, phi)
            }
            Self::Polygon { polygon } => {
                Boundary::polygon(&polygon.iter().map(|&p| v(p)).collect::<Vec<_>>())
            }
        }
    }
}

/// Gauss-Legendre order of the right-hand side or of the exterior single layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSize {
    HalfNu,
    Nu,
    Fixed(usize),
}

impl RuleSize {
    pub fn resolve(self, nu: usize) -> usize {
        match self {
            Self::HalfNu => (nu / 2).max(1),
            Self::Nu => nu,
            Self::Fixed(n) => n,
        }
    }
}

/// One `(mu, nu)` pair of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulePair {
    pub mu: usize,
    pub nu: usize,
}

/// Full description of a table run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub solution: ExactSolution,
    pub rows: Vec<RulePair>,
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
    pub rhs_m: RuleSize,
    pub outer_n: RuleSize,
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// The standard sweep `(8, 32), (16, 64), ..., (128, 512)`.
pub fn standard_rows() -> Vec<RulePair> {
    (0..5)
        .map(|k| RulePair {
            mu: 8 << k,
            nu: 32 << k,
        })
        .collect()
}

impl RunConfig {
    /// Benchmark setup for one of the built-in families.
    pub fn preset(family: DomainFamily) -> Self {
        let near_far = |near: [f64; 2]| vec![near, [3.0, 3.0], [-40.0, -50.0], [100.0, -100.0]];
        let (phi, solution, c, eps, delta, outer_n, points) = match family {
            DomainFamily::Heart => (
                Some(5.0 * PI / 3.0),
                ExactSolution::LogPair {
                    q1: [0.5, 0.0],
                    q2: [0.2, 0.0],
                },
                300.0,
                1e-3,
                3.87e-7,
                RuleSize::HalfNu,
                near_far([-0.1, 0.0]),
            ),
            DomainFamily::Teardrop => (
                Some(2.0 * PI / 3.0),
                ExactSolution::ArctanPair {
                    x0: 0.8,
                    y1: 0.2,
                    y2: 0.0,
                },
                100.0,
                1e-3,
                5.37e-11,
                RuleSize::HalfNu,
                near_far([-0.1, 0.0]),
            ),
            DomainFamily::Boomerang => (
                Some(3.0 * PI / 2.0),
                ExactSolution::LogPair {
                    q1: [-0.1, 0.0],
                    q2: [-0.2, 0.0],
                },
                100.0,
                1e-3,
                5.16e-8,
                RuleSize::Nu,
                near_far([0.2, 0.0]),
            ),
            DomainFamily::Triangle => (
                None,
                ExactSolution::Dipole { center: [0.0, 0.0] },
                100.0,
                1e-6,
                1e-8,
                RuleSize::HalfNu,
                vec![[-1.5, 1.5], [2.0, 2.0], [10.0, 20.0], [100.0, 100.0]],
            ),
        };
        Self {
            domain: DomainSpec::Family { family, phi },
            solution,
            rows: standard_rows(),
            c,
            eps,
            delta,
            rhs_m: RuleSize::HalfNu,
            outer_n,
            points,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn eval_points(&self) -> Vec<Vec2> {
        self.points.iter().map(|&p| v(p)).collect()
    }

    /// Checks everything that does not require a solve. Returns the
    /// decomposed boundary.
    pub fn validate(&self) -> Result<Decomposition> {
        if self.rows.is_empty() {
            return Err(Error::Config("no (mu, nu) rows requested".into()));
        }
        for r in &self.rows {
            DiscretizationParams::new(r.mu, r.nu, self.c, self.eps)?;
            let (m, n) = (self.rhs_m.resolve(r.nu), self.outer_n.resolve(r.nu));
            if m == 0 || m > MAX_MOMENTS {
                return Err(Error::Config(format!(
                    "rhs rule size M={m} outside 1..={MAX_MOMENTS}"
                )));
            }
            if n == 0 || n > MAX_RULE_ORDER {
                return Err(Error::Config(format!(
                    "outer rule size N={n} outside 1..={MAX_RULE_ORDER}"
                )));
            }
        }
        let dec = Decomposition::new(self.domain.build()?, self.delta)?;
        for r in &self.rows {
            DiscretizationParams::new(r.mu, r.nu, self.c, self.eps)?.validate_for(&dec)?;
        }
        for q in self.solution.singular_points() {
            if dec.boundary.winding_number(q, 4096).abs() < 0.5 {
                return Err(Error::Config(format!(
                    "singular point ({}, {}) of the exact solution lies outside the domain",
                    q.x, q.y
                )));
            }
        }
        for p in self.eval_points() {
            if !dec.boundary.is_exterior(p, MIN_BOUNDARY_DISTANCE) {
                return Err(Error::Config(format!(
                    "evaluation point ({}, {}) is not exterior",
                    p.x, p.y
                )));
            }
        }
        self.solution.datum().check_compatibility(&dec.boundary)?;
        Ok(dec)
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub mu: usize,
    pub nu: usize,
    /// `|u - u_{m,N}|` per evaluation point.
    pub errors: Vec<f64>,
    pub cond: f64,
    pub dim: usize,
    pub residual: f64,
    /// Diagnostic of a failed row; the numeric fields are NaN then.
    pub failure: Option<String>,
}

impl TableRow {
    fn failed(pair: RulePair, n_points: usize, err: &Error) -> Self {
        Self {
            mu: pair.mu,
            nu: pair.nu,
            errors: vec![f64::NAN; n_points],
            cond: f64::NAN,
            dim: 0,
            residual: f64::NAN,
            failure: Some(err.to_string()),
        }
    }
}

/// Everything produced by one `(mu, nu)` solve.
#[derive(Debug, Clone)]
pub struct RowOutcome {
    pub row: TableRow,
    pub field: SolutionField,
}

/// Runs the full pipeline for one rule pair.
pub fn solve_row(cfg: &RunConfig, dec: &Decomposition, pair: RulePair) -> Result<RowOutcome> {
    let params = DiscretizationParams::new(pair.mu, pair.nu, cfg.c, cfg.eps)?;
    let datum = cfg.solution.datum();
    let rhs = ProductRuleRhs::new(dec, &datum, cfg.rhs_m.resolve(pair.nu))?;
    let system = build_system(dec, &params, &rhs)?;
    let sol = solve_matrix(&system.matrix, &system.rhs)?;
    let cond = sol.condition();
    let field = SolutionField::new(&system, dec, &sol.x, datum, cfg.outer_n.resolve(pair.nu))?;
    let errors = cfg
        .eval_points()
        .iter()
        .map(|&p| Ok((cfg.solution.u(p) - field.eval_exterior(p.x, p.y)?).abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RowOutcome {
        row: TableRow {
            mu: pair.mu,
            nu: pair.nu,
            errors,
            cond,
            dim: system.map.dim(),
            residual: sol.residual,
            failure: None,
        },
        field,
    })
}

/// Runs every row of a configuration. A failing row is recorded and the
/// sweep continues; configuration errors abort.
pub fn run_example(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    let dec = cfg.validate()?;
    let n_points = cfg.points.len();
    Ok(cfg
        .rows
        .iter()
        .map(|&pair| match solve_row(cfg, &dec, pair) {
            Ok(outcome) => outcome.row,
            Err(e) => TableRow::failed(pair, n_points, &e),
        })
        .collect())
}

/// Writes `mu,nu,err_p1,...,err_pK,cond`.
pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow]) -> Result<()> {
    let n_points = rows.first().map_or(0, |r| r.errors.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["mu".to_string(), "nu".to_string()];
    header.extend((1..=n_points).map(|k| format!("err_p{k}")));
    header.push("cond".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.mu.to_string(), r.nu.to_string()];
        rec.extend(r.errors.iter().map(|e| format!("{e:.6e}")));
        rec.push(format!("{:.6}", r.cond));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Condition number of the collocation matrix at one angle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub phi: f64,
    pub cond: f64,
    pub failure: Option<String>,
}

/// Settings of an angle sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub mu: usize,
    pub nu: usize,
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
}

fn sweep_one(family: DomainFamily, phi: f64, s: &SweepSettings) -> Result<f64> {
    let params = DiscretizationParams::new(s.mu, s.nu, s.c, s.eps)?;
    let dec = Decomposition::new(make_example_domain(family, phi)?, s.delta)?;
    let zero = |_: usize, _: f64| -> Result<f64> { Ok(0.0) };
    let system = build_system(&dec, &params, &zero)?;
    crate::solve::cond_inf(&system.matrix)
}

/// `cond(A_m)` over a grid of corner angles; failures are recorded per angle.
pub fn angle_sweep(
    family: DomainFamily,
    phis: &[f64],
    settings: &SweepSettings,
) -> Vec<SweepPoint> {
    phis.iter()
        .map(|&phi| match sweep_one(family, phi, settings) {
            Ok(cond) => SweepPoint {
                phi,
                cond,
                failure: None,
            },
            Err(e) => SweepPoint {
                phi,
                cond: f64::NAN,
                failure: Some(e.to_string()),
            },
        })
        .collect()
}

/// Writes `phi,cond`.
pub fn write_sweep_csv<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "cond"])?;
    for p in points {
        w.write_record([format!("{:.10}", p.phi), format!("{:.6}", p.cond)])?;
    }
    w.flush()?;
    Ok(())
}

/// Evenly spaced angles `lo, ..., hi` in units of `pi`.
pub fn pi_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo * PI];
    }
    (0..steps)
        .map(|j| (lo + (hi - lo) * j as f64 / (steps - 1) as f64) * PI)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn all_solutions() -> [ExactSolution; 3] {
        [
            RunConfig::preset(DomainFamily::Heart).solution,
            RunConfig::preset(DomainFamily::Teardrop).solution,
            RunConfig::preset(DomainFamily::Triangle).solution,
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-5;
        for sol in all_solutions() {
            for p in [
                Vec2::new(3.0, 3.0),
                Vec2::new(-1.5, 1.5),
                Vec2::new(2.0, -0.7),
            ] {
                let g = sol.grad(p);
                let fx = (sol.u(p + Vec2::new(h, 0.0)) - sol.u(p - Vec2::new(h, 0.0))) / (2.0 * h);
                let fy = (sol.u(p + Vec2::new(0.0, h)) - sol.u(p - Vec2::new(0.0, h))) / (2.0 * h);
                assert_abs_diff_eq!(g.x, fx, epsilon = 1e-8);
                assert_abs_diff_eq!(g.y, fy, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn presets_validate() {
        for f in [
            DomainFamily::Heart,
            DomainFamily::Teardrop,
            DomainFamily::Boomerang,
            DomainFamily::Triangle,
        ] {
            let cfg = RunConfig::preset(f);
            cfg.validate().unwrap_or_else(|e| panic!("{f:?}: {e}"));
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::preset(DomainFamily::Boomerang);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        let poly = r#"{"polygon": [[0,0],[1,0],[0,1]]}"#;
        let spec: DomainSpec = serde_json::from_str(poly).unwrap();
        assert_eq!(spec.build().unwrap().n_corners(), 3);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.points.push([0.5, 0.0]);
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.solution = ExactSolution::LogPair {
            q1: [0.5, 0.0],
            q2: [5.0, 5.0],
        };
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.rows = vec![RulePair { mu: 32, nu: 32 }];
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.outer_n = RuleSize::Fixed(0);
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.rhs_m = RuleSize::Fixed(513);
        assert!(cfg.validate().unwrap_err().is_config());
        let mut cfg = RunConfig::preset(DomainFamily::Heart);
        cfg.domain = DomainSpec::Family {
            family: DomainFamily::Heart,
            phi: Some(PI),
        };
        assert!(cfg.validate().unwrap_err().is_config());
    }

    #[test]
    fn csv_layout() {
        let rows = vec![TableRow {
            mu: 8,
            nu: 32,
            errors: vec![1e-3, 2e-4, 3e-5, 4e-6],
            cond: 18.5,
            dim: 10,
            residual: 0.0,
            failure: None,
        }];
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mu,nu,err_p1,err_p2,err_p3,err_p4,cond"
        );
        assert_eq!(
            lines.next().unwrap(),
            "8,32,1.000000e-3,2.000000e-4,3.000000e-5,4.000000e-6,18.500000"
        );
    }

    #[test]
    fn rule_sizes() {
        assert_eq!(RuleSize::HalfNu.resolve(64), 32);
        assert_eq!(RuleSize::Nu.resolve(64), 64);
        assert_eq!(RuleSize::Fixed(10).resolve(64), 10);
        assert_eq!(standard_rows().last(), Some(&RulePair { mu: 128, nu: 512 }));
    }

    #[test]
    fn pi_grid_endpoints() {
        let g = pi_grid(1.1, 1.9, 9);
        assert_eq!(g.len(), 9);
        assert_abs_diff_eq!(g[0], 1.1 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(g[8], 1.9 * PI, epsilon = 1e-15);
    }
}
