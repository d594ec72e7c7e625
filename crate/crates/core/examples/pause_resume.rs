//! Snapshot a running evaluator to JSON and resume it later.

use reval::simulate::gen_stream;
use reval::{decide, BettingConfig, EProcess, EvaluatorConfig, EvaluatorKind, RiskSpec, World};

fn main() -> reval::Result<()> {
    let spec = RiskSpec::new(0.12, 0.1, 2000)?;
    let samples: Vec<_> = gen_stream(&World::new(0.1, 0.99, 10)?, 8).take(spec.horizon_n).collect();
    let evaluator = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::up());

    let mut straight = evaluator.build(&spec)?;
    for s in &samples {
        straight.observe(s)?;
    }

    let mut first = evaluator.build(&spec)?;
    for s in &samples[..700] {
        first.observe(s)?;
    }
    let snapshot = first.to_json()?;
    println!("snapshot after {} rounds: {} bytes", first.rounds(), snapshot.len());
    let mut resumed = EProcess::from_json(&snapshot)?;
    for s in &samples[700..] {
        resumed.observe(s)?;
    }

    let (a, b) = (decide(&straight, &spec), decide(&resumed, &spec));
    println!("straight: T={} log E = {}", a.t(), a.final_log_e);
    println!("resumed:  T={} log E = {}", b.t(), b.final_log_e);
    assert_eq!(straight, resumed);
    Ok(())
}
