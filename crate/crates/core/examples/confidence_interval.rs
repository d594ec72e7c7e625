//! Two-sided anytime-valid interval for the risk, per evaluator.

use reval::simulate::gen_stream;
use reval::{interval, BettingConfig, CiSpec, EvaluatorConfig, EvaluatorKind, World};

fn main() -> reval::Result<()> {
    let world = World::new(0.1, 0.99, 10)?;
    let samples: Vec<_> = gen_stream(&world, 5).take(1000).collect();
    let spec = CiSpec::new(0.05)?;

    println!("true risk 0.1, n = {}, 95% intervals", samples.len());
    for kind in EvaluatorKind::ALL {
        let ci = interval(&EvaluatorConfig::new(kind, BettingConfig::wsr()), &samples, &spec)?;
        println!("{kind:<16} [{:.4}, {:.4}] width {:.4}", ci.lower, ci.upper, ci.width);
    }
    Ok(())
}
