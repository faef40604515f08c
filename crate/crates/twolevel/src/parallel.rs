use rayon::prelude::*;
use twolevel_core::risk::{assemble_reports, run_replicate, EstimatorSpec, RiskReport, Scenario};
use twolevel_core::sim::{ModelConfig, SeedTree};
use twolevel_core::{Error, Result};

/// Replicates run on the rayon pool; output equals the sequential runner's.
pub fn run_monte_carlo_par(
    cfg: &ModelConfig,
    plan: &[EstimatorSpec],
    scenario: Scenario<'_>,
    replicates: u64,
    seed: u64,
) -> Result<Vec<RiskReport>> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    cfg.validate()?;
    let seeds = SeedTree::new(seed);
    let outcomes: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|r| (r, run_replicate(cfg, plan, scenario, &seeds, r)))
        .collect();
    Ok(assemble_reports(cfg, plan, seed, replicates, outcomes))
}
