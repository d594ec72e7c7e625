//! Mixture weights over the reliance grid, round by round, as tidy CSV.
//!
//! `cargo run --example weight_heatmap > weights.csv`

use std::io::Write;

use reval::simulate::{weight_trajectory, ScenarioConfig};
use reval::{BettingConfig, EvaluatorConfig, EvaluatorKind, RelianceGrid, RiskSpec, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = RiskSpec::new(0.12, 0.1, 500)?;
    let evaluator = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::wsr())
        .with_grid(RelianceGrid::uniform(10)?);
    let mut out = std::io::stdout().lock();
    writeln!(out, "gamma,round,rho,weight")?;
    for gamma in [0.7, 0.9, 0.99] {
        let cfg = ScenarioConfig::new(World::new(0.1, gamma, 10)?, spec.alpha, 1, 11);
        let mixture = weight_trajectory(&cfg, &evaluator, &spec, 0)?;
        let rhos = evaluator.grid.rhos();
        for (t, w) in mixture.weight_history().unwrap_or_default().iter().enumerate() {
            for (rho, weight) in rhos.iter().zip(w) {
                writeln!(out, "{gamma},{},{rho},{weight}", t + 1)?;
            }
        }
        eprintln!("gamma {gamma}: heaviest rho after {} rounds = {:.3}", spec.horizon_n, mixture.argmax_rho());
    }
    Ok(())
}
