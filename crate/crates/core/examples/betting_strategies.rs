//! WSR, universal-portfolio and constant bets on the same observations.

use reval::evalue::SimpleEProcess;
use reval::simulate::gen_stream;
use reval::{BetContext, BettingConfig, RiskSpec, World};

fn main() -> reval::Result<()> {
    let world = World::new(0.1, 0.9, 10)?;
    let spec = RiskSpec::new(0.15, 0.1, 1000)?;
    let ctx = BetContext::new(&spec, 0.0, 1.0);
    let losses: Vec<f64> = gen_stream(&world, 1).take(spec.horizon_n).map(|s| s.real_loss()).collect();

    let strategies = [
        ("wsr", BettingConfig::wsr()),
        ("up", BettingConfig::up()),
        ("fixed 0.5", BettingConfig::fixed(0.5)),
        ("fixed 1.0", BettingConfig::fixed(1.0)),
    ];
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}", "strategy", "n=100", "n=300", "n=1000", "last bet");
    for (name, betting) in strategies {
        let mut p = SimpleEProcess::new(ctx, &betting)?;
        let mut at = Vec::new();
        for (i, &q) in losses.iter().enumerate() {
            p.step(q)?;
            if matches!(i + 1, 100 | 300 | 1000) {
                at.push(p.log_wealth());
            }
        }
        println!("{name:<10} {:>8.2} {:>8.2} {:>8.2} {:>8.3}", at[0], at[1], at[2], p.bet());
    }
    Ok(())
}
