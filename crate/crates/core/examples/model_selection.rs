//! Pick the smallest model that meets the risk target, with FST and Bonferroni.

use reval::selection::{select, Procedure};
use reval::simulate::gen_stream;
use reval::{BettingConfig, Candidate, CandidateList, EvaluatorConfig, EvaluatorKind, RiskSpec, World};

fn main() -> reval::Result<()> {
    let spec = RiskSpec::new(0.2, 0.1, 800)?;
    // Ordered from most to least likely to pass, as FST expects.
    let models = [("large", 8.0, 0.05), ("medium", 3.0, 0.12), ("small", 1.0, 0.18), ("tiny", 0.5, 0.3)];
    let list = CandidateList::new(
        models
            .iter()
            .enumerate()
            .map(|(i, &(name, size, risk))| {
                let world = World::new(risk, 0.95, 5).unwrap();
                Candidate::new(name, gen_stream(&world, 100 + i as u64).take(spec.horizon_n).collect()).with_size(size)
            })
            .collect(),
    )
    .with_fallback("large");
    let evaluator = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::wsr());

    for procedure in [Procedure::Fst, Procedure::Bonferroni] {
        let sel = select(procedure, &list, &spec, &evaluator)?;
        println!("{procedure}: accepted {:?}, chosen {:?}", sel.accepted, sel.chosen);
        for o in &sel.outcomes {
            println!("  {:<7} tested={:<5} level={:.4} T={}", o.name, o.tested, o.level, u8::from(o.decision));
        }
    }
    Ok(())
}
