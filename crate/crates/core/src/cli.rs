//! Command-line front end. Every subcommand reads an optional JSON config and
//! lets flags override it; CSV and JSON artifacts go to `--output` (stdout
//! when absent) and a one-line summary is returned to the caller.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::betting::{BettingConfig, StrategyKind};
use crate::confint::{interval, CiSpec, Search};
use crate::data::{load_samples, RelianceGrid, RiskSpec};
use crate::error::{Error, Result};
use crate::evalue::{run_test_with, DecisionRule, EvaluatorConfig, EvaluatorKind};
use crate::selection::{select, Manifest, Procedure};
use crate::simulate::{
    estimate_reliability, estimate_sample_complexity, g_star_profile, taylor_inverse_g, weight_trajectory,
    ScenarioConfig, World,
};

#[derive(Debug, Parser)]
#[command(name = "reval", version, about = "Anytime-valid reliable model evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long, global = true)]
    pub config_file: Option<PathBuf>,
    /// Worker threads for parallel replications.
    #[arg(long, global = true, env = "REVAL_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run one test on a labeled stream.
    Test,
    /// Hedged two-sided confidence interval for the risk.
    Ci,
    /// Model selection over a candidate manifest.
    Select,
    /// Monte Carlo false-certification rate and mean e-value.
    SimulateReliability,
    /// Monte Carlo sample complexity.
    SimulateSc,
    /// Mixture weight trajectories.
    SimulateWeights,
    /// Exact optimal growth rate per reliance factor.
    Gstar,
}

/// Every tunable of every subcommand. Field names double as JSON keys.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// r-eval, r-autoeval or r-autoeval-plus [default: r-autoeval-plus].
    #[arg(long, global = true)]
    pub evaluator: Option<EvaluatorKind>,
    /// wsr, up or fixed [default: up; wsr for `ci`].
    #[arg(long, global = true)]
    pub strategy: Option<StrategyKind>,
    /// WSR cap constant [default: 0.75].
    #[arg(long, global = true)]
    pub wsr_c: Option<f64>,
    /// Points in the universal-portfolio grid [default: 10000].
    #[arg(long, global = true)]
    pub up_grid: Option<usize>,
    #[arg(long, global = true)]
    pub fixed_bet: Option<f64>,
    /// Number of reliance factors, uniformly spaced on [0, 1].
    #[arg(long, global = true)]
    pub arms: Option<usize>,
    /// Risk target [default: 0.12].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Error level [default: 0.1].
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Labeled rounds to use.
    #[arg(short = 'n', long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub rule: Option<DecisionRule>,
    /// CSV with real_loss,autoeval_loss_on_real.
    #[arg(long, global = true)]
    pub paired: Option<PathBuf>,
    /// CSV with autoeval_loss, batched evenly across labeled rounds.
    #[arg(long, global = true)]
    pub unlabeled: Option<PathBuf>,
    /// Artifact path; stdout when absent.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Share of delta spent on the upper bound [default: 0.5].
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Size of the alpha grid for interval inversion.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub search: Option<Search>,
    /// JSON candidate manifest for `select`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// fst or bonferroni [default: fst].
    #[arg(long, global = true)]
    pub procedure: Option<Procedure>,
    /// True risk of the synthetic world.
    #[arg(long, global = true)]
    pub risk: Option<f64>,
    /// Agreement probability of the synthetic autoevaluator.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Synthetic samples per labeled sample.
    #[arg(long, global = true)]
    pub ratio: Option<usize>,
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// Required by every simulate command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Censoring point for `simulate-sc`.
    #[arg(long, global = true)]
    pub max_rounds: Option<usize>,
    /// Number of reliance factors for `gstar`.
    #[arg(long, global = true)]
    pub sweep_rho: Option<usize>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        RunConfig { $($field: $flags.$field.clone().or($file.$field.clone())),* }
    };
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Flags in `self` win over `file`.
    pub fn over(&self, file: &RunConfig) -> RunConfig {
        overlay!(
            self, file, evaluator, strategy, wsr_c, up_grid, fixed_bet, arms, alpha, delta, horizon, rule, paired,
            unlabeled, output, epsilon, grid, search, manifest, procedure, risk, gamma, ratio, replications, seed,
            max_rounds, sweep_rho
        )
    }

    pub fn betting(&self) -> BettingConfig {
        let d = BettingConfig::default();
        BettingConfig {
            strategy: self.strategy.unwrap_or(d.strategy),
            wsr_c: self.wsr_c.unwrap_or(d.wsr_c),
            up_grid: self.up_grid.unwrap_or(d.up_grid),
            fixed_bet: self.fixed_bet.unwrap_or(d.fixed_bet),
            cap: d.cap,
        }
    }

    pub fn evaluator_config(&self) -> Result<EvaluatorConfig> {
        let grid = match self.arms {
            Some(s) => RelianceGrid::uniform(s)?,
            None => RelianceGrid::default(),
        };
        Ok(EvaluatorConfig::new(self.evaluator.unwrap_or(EvaluatorKind::RAutoEvalPlus), self.betting()).with_grid(grid))
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.12)
    }

    fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.1)
    }

    pub fn risk_spec(&self, default_horizon: usize) -> Result<RiskSpec> {
        RiskSpec::new(self.alpha(), self.delta(), self.horizon.unwrap_or(default_horizon))
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let seed = self
            .seed
            .ok_or_else(|| Error::invalid("seed", "simulations need an explicit --seed"))?;
        let world = World::new(self.risk.unwrap_or(0.1), self.gamma.unwrap_or(0.9), self.ratio.unwrap_or(10))?;
        let mut cfg = ScenarioConfig::new(world, self.alpha(), self.replications.unwrap_or(100), seed);
        if let Some(m) = self.max_rounds {
            cfg.max_rounds = m;
        }
        Ok(cfg)
    }

    fn samples(&self) -> Result<Vec<crate::data::PairedSample>> {
        let paired = self
            .paired
            .as_ref()
            .ok_or_else(|| Error::invalid("paired", "a labeled CSV is required (--paired)"))?;
        load_samples(paired, self.unlabeled.as_deref())
    }
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(std::io::stdout()),
    })
}

fn write_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(output)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io(output.unwrap_or(Path::new("<stdout>")), e))
}

fn write_csv<T: Serialize>(output: Option<&Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(output)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(output.unwrap_or(Path::new("<stdout>")), e))
}

fn where_to(output: Option<&Path>) -> String {
    output.map_or_else(|| "stdout".to_string(), |p| p.display().to_string())
}

#[derive(Serialize)]
struct TestReport<'a> {
    evaluator: EvaluatorKind,
    alpha: f64,
    delta: f64,
    #[serde(flatten)]
    outcome: &'a crate::evalue::TestOutcome,
}

#[derive(Serialize)]
struct CiReport {
    lower: f64,
    upper: f64,
    width: f64,
    evaluator: EvaluatorKind,
}

#[derive(Serialize)]
struct SelectRow<'a> {
    name: &'a str,
    tested: bool,
    level: f64,
    decision: u8,
    stopping_round: Option<usize>,
    final_log_e: f64,
    rounds: usize,
}

#[derive(Serialize)]
struct ScenarioCols {
    evaluator: EvaluatorKind,
    strategy: StrategyKind,
    true_risk: f64,
    agreement: f64,
    ratio: usize,
    alpha: f64,
    delta: f64,
}

#[derive(Serialize)]
struct ReliabilityRow {
    evaluator: EvaluatorKind,
    strategy: StrategyKind,
    true_risk: f64,
    agreement: f64,
    ratio: usize,
    alpha: f64,
    delta: f64,
    horizon: usize,
    replication: usize,
    seed: u64,
    decision: u8,
    final_log_e: f64,
}

#[derive(Serialize)]
struct SampleComplexityRow {
    evaluator: EvaluatorKind,
    strategy: StrategyKind,
    true_risk: f64,
    agreement: f64,
    ratio: usize,
    alpha: f64,
    delta: f64,
    max_rounds: usize,
    replication: usize,
    seed: u64,
    stopping_round: Option<usize>,
}

#[derive(Serialize)]
struct WeightRow {
    true_risk: f64,
    agreement: f64,
    ratio: usize,
    alpha: f64,
    delta: f64,
    replication: usize,
    round: usize,
    arm: usize,
    rho: f64,
    weight: f64,
}

#[derive(Serialize)]
struct GStarRow {
    true_risk: f64,
    agreement: f64,
    ratio: usize,
    alpha: f64,
    rho: f64,
    g_star: f64,
    lambda_star: f64,
    inverse_g_star: f64,
    taylor_inverse_g: f64,
}

fn cols(cfg: &ScenarioConfig, ev: &EvaluatorConfig, delta: f64) -> ScenarioCols {
    ScenarioCols {
        evaluator: ev.kind,
        strategy: ev.betting.strategy,
        true_risk: cfg.world.true_risk,
        agreement: cfg.world.agreement,
        ratio: cfg.world.ratio,
        alpha: cfg.alpha,
        delta,
    }
}

/// Runs one subcommand and returns its summary line.
pub fn run(command: Command, config: &RunConfig) -> Result<String> {
    let out = config.output.as_deref();
    match command {
        Command::Test => {
            let samples = config.samples()?;
            let spec = config.risk_spec(samples.len())?;
            let ev = config.evaluator_config()?;
            let outcome = run_test_with(&ev, &spec, &samples, config.rule.unwrap_or_default())?;
            if out.is_some() {
                let report = TestReport {
                    evaluator: ev.kind,
                    alpha: spec.alpha,
                    delta: spec.delta,
                    outcome: &outcome,
                };
                write_json(out, &report)?;
            }
            Ok(format!(
                "T={} {} alpha={} delta={} rounds={} stop={} log_e={:.6} max_log_e={:.6}",
                outcome.t(),
                ev.kind,
                spec.alpha,
                spec.delta,
                outcome.rounds,
                outcome.stopping_round.map_or_else(|| "-".into(), |r| r.to_string()),
                outcome.final_log_e,
                outcome.max_log_e
            ))
        }
        Command::Ci => {
            let samples = config.samples()?;
            let n = config.horizon.unwrap_or(samples.len()).min(samples.len());
            let d = CiSpec::default();
            let ci_spec = CiSpec {
                delta: config.delta(),
                epsilon: config.epsilon.unwrap_or(d.epsilon),
                grid_size: config.grid.unwrap_or(d.grid_size),
                search: config.search.unwrap_or(d.search),
            };
            let mut ev = config.evaluator_config()?;
            if config.strategy.is_none() {
                ev.betting.strategy = StrategyKind::Wsr;
            }
            let ci = interval(&ev, &samples[..n], &ci_spec)?;
            let report = CiReport {
                lower: ci.lower,
                upper: ci.upper,
                width: ci.width,
                evaluator: ev.kind,
            };
            write_json(out, &report)?;
            Ok(format!(
                "{} [{:.4}, {:.4}] width={:.4} n={n}",
                ev.kind, ci.lower, ci.upper, ci.width
            ))
        }
        Command::Select => {
            let path = config
                .manifest
                .as_ref()
                .ok_or_else(|| Error::invalid("manifest", "a candidate manifest is required (--manifest)"))?;
            let manifest = Manifest::load(path)?;
            let spec = config.risk_spec(config.horizon.unwrap_or(usize::MAX))?;
            let list = manifest.materialize(spec.horizon_n.min(1_000_000))?;
            let procedure = config.procedure.unwrap_or_default();
            let sel = select(procedure, &list, &spec, &config.evaluator_config()?)?;
            let rows: Vec<SelectRow> = sel
                .outcomes
                .iter()
                .map(|o| SelectRow {
                    name: &o.name,
                    tested: o.tested,
                    level: o.level,
                    decision: u8::from(o.decision),
                    stopping_round: o.stopping_round,
                    final_log_e: o.final_log_e,
                    rounds: o.rounds,
                })
                .collect();
            write_csv(out, &rows)?;
            Ok(format!(
                "{procedure}: accepted {}/{} chosen={}{}",
                sel.accepted.len(),
                sel.outcomes.len(),
                sel.chosen.as_deref().unwrap_or("none"),
                if sel.used_fallback { " (fallback)" } else { "" }
            ))
        }
        Command::SimulateReliability => {
            let cfg = config.scenario()?;
            let spec = config.risk_spec(200)?;
            let ev = config.evaluator_config()?;
            let est = estimate_reliability(&cfg, &ev, &spec)?;
            let c = cols(&cfg, &ev, spec.delta);
            let rows: Vec<ReliabilityRow> = est
                .runs
                .iter()
                .map(|r| ReliabilityRow {
                    evaluator: c.evaluator,
                    strategy: c.strategy,
                    true_risk: c.true_risk,
                    agreement: c.agreement,
                    ratio: c.ratio,
                    alpha: c.alpha,
                    delta: c.delta,
                    horizon: spec.horizon_n,
                    replication: r.replication,
                    seed: cfg.replication_seed(r.replication),
                    decision: u8::from(r.decision),
                    final_log_e: r.final_log_e,
                })
                .collect();
            write_csv(out, &rows)?;
            Ok(format!(
                "{} rejection rate {:.4} (se {:.4}), mean E {:.4} over {} replications -> {}",
                ev.kind,
                est.rejection_rate,
                est.rejection_se,
                est.mean_e,
                rows.len(),
                where_to(out)
            ))
        }
        Command::SimulateSc => {
            let cfg = config.scenario()?;
            let spec = config.risk_spec(cfg.max_rounds)?;
            let ev = config.evaluator_config()?;
            let sc = estimate_sample_complexity(&cfg, &ev, &spec)?;
            let c = cols(&cfg, &ev, spec.delta);
            let rows: Vec<SampleComplexityRow> = sc
                .stopping_rounds
                .iter()
                .enumerate()
                .map(|(rep, &stop)| SampleComplexityRow {
                    evaluator: c.evaluator,
                    strategy: c.strategy,
                    true_risk: c.true_risk,
                    agreement: c.agreement,
                    ratio: c.ratio,
                    alpha: c.alpha,
                    delta: c.delta,
                    max_rounds: cfg.max_rounds,
                    replication: rep,
                    seed: cfg.replication_seed(rep),
                    stopping_round: stop,
                })
                .collect();
            write_csv(out, &rows)?;
            Ok(format!(
                "{} sample complexity {:.1} (se {:.1}), {} censored of {} -> {}",
                ev.kind,
                sc.mean,
                sc.se,
                sc.censored,
                rows.len(),
                where_to(out)
            ))
        }
        Command::SimulateWeights => {
            let cfg = config.scenario()?;
            let spec = config.risk_spec(200)?;
            let mut ev = config.evaluator_config()?;
            ev.kind = EvaluatorKind::RAutoEvalPlus;
            let mut rows = Vec::new();
            let mut argmax = Vec::with_capacity(cfg.replications);
            for rep in 0..cfg.replications {
                let mixture = weight_trajectory(&cfg, &ev, &spec, rep)?;
                argmax.push(mixture.argmax_rho());
                let rhos: Vec<f64> = mixture.arms().iter().map(|a| a.rho()).collect();
                for (i, weights) in mixture.weight_history().unwrap_or_default().iter().enumerate() {
                    for (s, (&rho, &weight)) in rhos.iter().zip(weights).enumerate() {
                        rows.push(WeightRow {
                            true_risk: cfg.world.true_risk,
                            agreement: cfg.world.agreement,
                            ratio: cfg.world.ratio,
                            alpha: cfg.alpha,
                            delta: spec.delta,
                            replication: rep,
                            round: i + 1,
                            arm: s,
                            rho,
                            weight,
                        });
                    }
                }
            }
            write_csv(out, &rows)?;
            let mean_argmax = argmax.iter().sum::<f64>() / argmax.len().max(1) as f64;
            Ok(format!(
                "weights for {} rounds x {} arms x {} replications, mean final argmax rho {:.3} -> {}",
                spec.horizon_n,
                ev.grid.len(),
                cfg.replications,
                mean_argmax,
                where_to(out)
            ))
        }
        Command::Gstar => {
            let world = World::new(config.risk.unwrap_or(0.1), config.gamma.unwrap_or(0.9), config.ratio.unwrap_or(10))?;
            let cfg = ScenarioConfig::new(world, config.alpha(), 0, 0);
            let s = config.sweep_rho.unwrap_or(10);
            let rhos = RelianceGrid::uniform(s)?.rhos().to_vec();
            let profile = g_star_profile(&cfg, &rhos)?;
            let rows = profile
                .arms
                .iter()
                .map(|a| {
                    Ok(GStarRow {
                        true_risk: world.true_risk,
                        agreement: world.agreement,
                        ratio: world.ratio,
                        alpha: cfg.alpha,
                        rho: a.rho,
                        g_star: a.g_star,
                        lambda_star: a.lambda_star,
                        inverse_g_star: 1.0 / a.g_star,
                        taylor_inverse_g: taylor_inverse_g(&cfg, a.rho)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_csv(out, &rows)?;
            let best = &profile.arms[profile.best];
            Ok(format!(
                "g* peaks at rho={:.3} (g*={:.3e}, 1/g*={:.1}) over {s} reliance factors -> {}",
                best.rho,
                best.g_star,
                1.0 / best.g_star,
                where_to(out)
            ))
        }
    }
}

pub struct Finished {
    pub summary: String,
    /// The artifact went to stdout, so the summary belongs on stderr.
    pub artifact_on_stdout: bool,
}

/// Sets up the thread pool, merges the config file, runs.
pub fn main_with(cli: Cli) -> Result<Finished> {
    if let Some(threads) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let file = match &cli.config_file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let config = cli.config.over(&file);
    let summary = run(cli.command, &config)?;
    Ok(Finished {
        summary,
        artifact_on_stdout: config.output.is_none() && cli.command != Command::Test,
    })
}
