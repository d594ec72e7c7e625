//! Rounds needed to certify, by evaluator and judge quality.

use reval::simulate::{estimate_sample_complexity, ScenarioConfig};
use reval::{BettingConfig, EvaluatorConfig, EvaluatorKind, RiskSpec, World};

fn main() -> reval::Result<()> {
    for gamma in [0.7, 0.99] {
        let mut cfg = ScenarioConfig::new(World::new(0.1, gamma, 10)?, 0.12, 50, 2024);
        cfg.max_rounds = 30_000;
        let spec = RiskSpec::new(cfg.alpha, 0.1, cfg.max_rounds)?;
        for kind in EvaluatorKind::ALL {
            let sc = estimate_sample_complexity(&cfg, &EvaluatorConfig::new(kind, BettingConfig::up()), &spec)?;
            println!(
                "gamma {gamma:<4} {kind:<16} mean {:>7.0} +- {:<5.0} censored {}",
                sc.mean, sc.se, sc.censored
            );
        }
    }
    Ok(())
}
