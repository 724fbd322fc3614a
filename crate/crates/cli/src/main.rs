//! Command-line driver: single solves, convergence tables and angle sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cornerbie::harness::{
    angle_sweep, pi_grid, run_example, solve_row, write_sweep_csv, write_table_csv, DomainSpec,
    RulePair, RuleSize, RunConfig, SweepSettings,
};
use cornerbie::{DomainFamily, Error};

#[derive(Parser, Debug)]
#[command(
    name = "cornerbie",
    version,
    about = "Exterior Neumann solver for planar domains with corners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once and report the field at the evaluation points.
    Solve(RunArgs),
    /// Run the (mu, nu) sweep and write the error/condition table.
    Table(RunArgs),
    /// Condition number of the collocation matrix over a grid of corner angles.
    AngleSweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Built-in domain.
    #[arg(long, value_parser = ["heart", "teardrop", "boomerang", "triangle"])]
    example: Option<String>,
    /// Corner angle in radians.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    nu: Option<usize>,
    /// Blend constant.
    #[arg(long)]
    c: Option<f64>,
    /// Blend exponent.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Tangent tolerance of the corner pieces.
    #[arg(long)]
    delta: Option<f64>,
    /// Gauss-Legendre size of the right-hand side rule.
    #[arg(long = "rhs-M")]
    rhs_m: Option<usize>,
    /// Gauss-Legendre size of the exterior single-layer rule.
    #[arg(long = "outer-N")]
    outer_n: Option<usize>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Evaluation points, one `x y` or `x,y` pair per line.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Smallest angle, in units of pi.
    #[arg(long)]
    phi_min: Option<f64>,
    /// Largest angle, in units of pi.
    #[arg(long)]
    phi_max: Option<f64>,
    /// Number of angles.
    #[arg(long, default_value_t = 9)]
    steps: usize,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_points(path: &Path) -> Result<Vec<[f64; 2]>, Error> {
    let text = fs::read_to_string(path)?;
    let mut pts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Vec<f64> = fields.iter().filter_map(|f| f.parse().ok()).collect();
        if fields.len() != 2 || parsed.len() != 2 {
            return Err(config_error(format!(
                "{}:{}: expected two numbers",
                path.display(),
                n + 1
            )));
        }
        pts.push([parsed[0], parsed[1]]);
    }
    if pts.is_empty() {
        return Err(config_error(format!("{} holds no points", path.display())));
    }
    Ok(pts)
}

/// Base configuration from `--config` or `--example`, with flag overrides.
fn resolve_config(args: &ProblemArgs) -> Result<RunConfig, Error> {
    let mut cfg = match (&args.config, &args.example) {
        (Some(path), _) => RunConfig::from_json(&fs::read_to_string(path)?)?,
        (None, Some(name)) => RunConfig::preset(DomainFamily::parse(name)?),
        (None, None) => return Err(config_error("either --example or --config is required")),
    };
    if let Some(name) = &args.example {
        if args.config.is_some() {
            let family = DomainFamily::parse(name)?;
            let phi = match &cfg.domain {
                DomainSpec::Family { phi, .. } => *phi,
                DomainSpec::Polygon { .. } => None,
            };
            cfg.domain = DomainSpec::Family { family, phi };
        }
    }
    if let Some(p) = args.phi {
        match &mut cfg.domain {
            DomainSpec::Family { phi, .. } => *phi = Some(p),
            DomainSpec::Polygon { .. } => {
                return Err(config_error("--phi does not apply to a polygon"))
            }
        }
    }
    match (args.mu, args.nu) {
        (Some(mu), Some(nu)) => cfg.rows = vec![RulePair { mu, nu }],
        (None, None) => {}
        _ => return Err(config_error("--mu and --nu must be given together")),
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    if let Some(e) = args.epsilon {
        cfg.eps = e;
    }
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    if let Some(m) = args.rhs_m {
        cfg.rhs_m = RuleSize::Fixed(m);
    }
    if let Some(n) = args.outer_n {
        cfg.outer_n = RuleSize::Fixed(n);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout()),
    })
}

fn cmd_solve(args: &RunArgs) -> Result<(), Error> {
    let mut cfg = resolve_config(&args.problem)?;
    if let Some(p) = &args.points {
        cfg.points = parse_points(p)?;
    }
    let pair = cfg.rows[cfg.rows.len() - 1];
    cfg.rows = vec![pair];
    let dec = cfg.validate()?;
    let outcome = solve_row(&cfg, &dec, pair)?;
    eprintln!(
        "mu={} nu={} unknowns={} cond={:.4} residual={:.2e}",
        pair.mu, pair.nu, outcome.row.dim, outcome.row.cond, outcome.row.residual
    );
    for (p, err) in cfg.eval_points().iter().zip(&outcome.row.errors) {
        let approx = outcome.field.eval_exterior(p.x, p.y)?;
        eprintln!(
            "  ({:>10}, {:>10})  u_m={:+.15e}  u={:+.15e}  err={:.3e}",
            p.x,
            p.y,
            approx,
            cfg.solution.u(*p),
            err
        );
    }
    write_table_csv(
        output(cfg.out.as_deref())?,
        std::slice::from_ref(&outcome.row),
    )
}

fn cmd_table(args: &RunArgs) -> Result<(), Error> {
    let mut cfg = resolve_config(&args.problem)?;
    if let Some(p) = &args.points {
        cfg.points = parse_points(p)?;
    }
    let rows = run_example(&cfg)?;
    write_table_csv(output(cfg.out.as_deref())?, &rows)?;
    let failures: Vec<_> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| (r.mu, r.nu, f)))
        .collect();
    for (mu, nu, f) in &failures {
        eprintln!("row mu={mu} nu={nu} failed: {f}");
    }
    match failures.first() {
        Some((_, _, f)) => Err(Error::KernelDomain(format!(
            "{} row(s) failed, first: {f}",
            failures.len()
        ))),
        None => Ok(()),
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let cfg = resolve_config(&args.problem)?;
    let family = match cfg.domain {
        DomainSpec::Family { family, .. } => family,
        DomainSpec::Polygon { .. } => {
            return Err(config_error("angle sweeps need a domain family"))
        }
    };
    let Some((lo, hi)) = family.phi_range() else {
        return Err(config_error(format!(
            "domain '{}' has no angle parameter",
            family.name()
        )));
    };
    let pair = match (args.problem.mu, args.problem.nu) {
        (Some(_), Some(_)) => cfg.rows[0],
        _ => RulePair { mu: 16, nu: 64 },
    };
    let (pi_lo, pi_hi) = (lo / std::f64::consts::PI, hi / std::f64::consts::PI);
    let default_lo = pi_lo + 0.1;
    let default_hi = pi_hi - 0.1;
    let from = args.phi_min.unwrap_or(default_lo);
    let to = args.phi_max.unwrap_or(default_hi);
    if args.steps == 0 {
        return Err(config_error("--steps must be positive"));
    }
    let settings = SweepSettings {
        mu: pair.mu,
        nu: pair.nu,
        c: cfg.c,
        eps: cfg.eps,
        delta: cfg.delta,
    };
    let grid = pi_grid(from, to, args.steps);
    if let Some(bad) = grid.iter().find(|&&phi| !(phi > lo && phi < hi)) {
        return Err(config_error(format!(
            "angle {bad} outside the admissible range ({lo}, {hi}) of '{}'",
            family.name()
        )));
    }
    let points = angle_sweep(family, &grid, &settings);
    write_sweep_csv(output(cfg.out.as_deref())?, &points)?;
    let failures: Vec<_> = points.iter().filter(|p| p.failure.is_some()).collect();
    for p in &failures {
        eprintln!(
            "phi={} failed: {}",
            p.phi,
            p.failure.as_deref().unwrap_or("")
        );
    }
    match failures.len() {
        0 => Ok(()),
        n => Err(Error::KernelDomain(format!("{n} angle(s) failed"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Table(a) => cmd_table(a),
        Command::AngleSweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
