//! Write paired and unlabeled loss files, read them back, and test.

use reval::data::{write_paired_csv, write_unlabeled_csv};
use reval::evalue::run_test;
use reval::simulate::gen_stream;
use reval::{load_samples, BettingConfig, EvaluatorConfig, EvaluatorKind, RiskSpec, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("reval-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (paired, unlabeled) = (dir.join("paired.csv"), dir.join("unlabeled.csv"));

    let generated: Vec<_> = gen_stream(&World::new(0.08, 0.95, 4)?, 3).take(1500).collect();
    write_paired_csv(&paired, &generated)?;
    write_unlabeled_csv(&unlabeled, &generated)?;

    let samples = load_samples(&paired, Some(&unlabeled))?;
    println!("loaded {} paired samples with {} synthetic losses each", samples.len(), samples[0].ratio());
    let spec = RiskSpec::new(0.12, 0.1, samples.len())?;
    let out = run_test(&EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::up()), &spec, &samples)?;
    println!("T={} stopping round {:?}", out.t(), out.stopping_round);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
