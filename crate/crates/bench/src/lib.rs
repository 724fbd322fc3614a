//! Fixtures shared by the criterion benches in `benches/`.

use cornerbie::harness::RunConfig;
use cornerbie::{DenseSystem, DiscretizationParams, DomainFamily, ProductRuleRhs, Result};

/// Assembled collocation system for a preset example at one `(mu, nu)` row.
pub fn preset_system(family: DomainFamily, mu: usize, nu: usize) -> Result<DenseSystem> {
    let cfg = RunConfig::preset(family);
    let dec = cfg.validate()?;
    let params = DiscretizationParams::new(mu, nu, cfg.c, cfg.eps)?;
    let datum = cfg.solution.datum();
    let rhs = ProductRuleRhs::new(&dec, &datum, nu / 2)?;
    cornerbie::build_system(&dec, &params, &rhs)
}
