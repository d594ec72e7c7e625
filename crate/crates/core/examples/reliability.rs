//! False-certification rate and mean e-value when the model is not good enough.

use reval::simulate::{estimate_reliability, ScenarioConfig};
use reval::{BettingConfig, EvaluatorConfig, EvaluatorKind, RiskSpec, World};

fn main() -> reval::Result<()> {
    let spec = RiskSpec::new(0.12, 0.1, 500)?;
    // True risk sits exactly at the target, the hardest null.
    let cfg = ScenarioConfig::new(World::new(0.12, 0.9, 10)?, spec.alpha, 400, 77);
    for betting in [BettingConfig::wsr(), BettingConfig::up()] {
        for kind in EvaluatorKind::ALL {
            let est = estimate_reliability(&cfg, &EvaluatorConfig::new(kind, betting), &spec)?;
            println!(
                "{:<4} {kind:<16} rejections {:.4} (delta {}) mean E {:.3}",
                betting.strategy, est.rejection_rate, spec.delta, est.mean_e
            );
        }
    }
    Ok(())
}
