//! Exact optimal growth rate as a function of the reliance factor.

use reval::simulate::{g_star_profile, taylor_inverse_g, ScenarioConfig};
use reval::World;

fn main() -> reval::Result<()> {
    let rhos: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for gamma in [0.7, 0.9, 0.99] {
        let cfg = ScenarioConfig::new(World::new(0.1, gamma, 10)?, 0.12, 1, 0);
        let profile = g_star_profile(&cfg, &rhos)?;
        println!("gamma {gamma}");
        for arm in &profile.arms {
            let bar = "#".repeat((arm.g_star * 5e3) as usize);
            println!(
                "  rho {:.1}  g* {:.3e}  1/g* {:>7.0}  taylor {:>7.0}  {bar}",
                arm.rho,
                arm.g_star,
                1.0 / arm.g_star,
                taylor_inverse_g(&cfg, arm.rho)?
            );
        }
        println!("  best rho {:.1}", profile.arms[profile.best].rho);
    }
    Ok(())
}
