//! Synthetic world with a noisy autoevaluator, Monte Carlo harnesses, and
//! exact oracles for the optimal growth rate of each betting game.
//!
//! In the world, the human loss is `Bernoulli(R)` and the autoevaluator
//! reports the same loss with probability `gamma` (it flips it otherwise).
//! Every round also carries `r` synthetic losses, each an independent flipped
//! `Bernoulli(R)` draw.
//!
//! Replication `k` of a study draws from its own generator seeded with
//! `seed + k`, so aggregates do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{PairedSample, RiskSpec};
use crate::error::{Error, Result};
use crate::evalue::{decide, EProcess, EvaluatorConfig, MixtureEProcess};
use crate::math::mean_and_se;

/// Parameters of the synthetic data-generating process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub true_risk: f64,
    /// Probability that the autoevaluator agrees with the human label.
    pub agreement: f64,
    /// Synthetic samples per labeled sample.
    pub ratio: usize,
}

impl World {
    pub fn new(true_risk: f64, agreement: f64, ratio: usize) -> Result<Self> {
        let w = World {
            true_risk,
            agreement,
            ratio,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.true_risk > 0.0 && self.true_risk < 1.0) {
            return Err(Error::invalid("true_risk", format!("{} not in (0, 1)", self.true_risk)));
        }
        if !(0.0..=1.0).contains(&self.agreement) {
            return Err(Error::invalid("agreement", format!("{} not in [0, 1]", self.agreement)));
        }
        Ok(())
    }

    /// Marginal mean of an autoevaluated loss.
    pub fn autoeval_mean(&self) -> f64 {
        self.true_risk * self.agreement + (1.0 - self.true_risk) * (1.0 - self.agreement)
    }
}

/// Everything a Monte Carlo study needs besides the evaluator and the
/// risk specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub world: World,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    /// Censoring horizon for sample-complexity runs.
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
}

fn default_max_rounds() -> usize {
    100_000
}

impl ScenarioConfig {
    pub fn new(world: World, alpha: f64, replications: usize, seed: u64) -> Self {
        ScenarioConfig {
            world,
            alpha,
            replications,
            seed,
            max_rounds: default_max_rounds(),
        }
    }

    /// Seed of replication `rep`.
    pub fn replication_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }
}

/// Endless stream of paired samples from a [`World`].
#[derive(Clone, Debug)]
pub struct SampleStream {
    world: World,
    rng: ChaCha8Rng,
}

impl SampleStream {
    fn flip(&mut self, loss: bool) -> bool {
        if self.rng.gen_bool(1.0 - self.world.agreement) {
            !loss
        } else {
            loss
        }
    }
}

impl Iterator for SampleStream {
    type Item = PairedSample;

    fn next(&mut self) -> Option<PairedSample> {
        let real = self.rng.gen_bool(self.world.true_risk);
        let auto = self.flip(real);
        let synthetic = (0..self.world.ratio)
            .map(|_| {
                let underlying = self.rng.gen_bool(self.world.true_risk);
                f64::from(u8::from(self.flip(underlying)))
            })
            .collect();
        let sample = PairedSample::new(f64::from(u8::from(real)), f64::from(u8::from(auto)), synthetic)
            .expect("binary losses are valid");
        Some(sample)
    }
}

/// Deterministic sample stream for `(world, seed)`.
pub fn gen_stream(world: &World, seed: u64) -> SampleStream {
    SampleStream {
        world: *world,
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

fn replicate<T, F>(replications: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..replications).into_par_iter().map(f).collect()
}

/// Outcome of one replication under the null.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullRun {
    pub replication: usize,
    pub decision: bool,
    pub final_log_e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityEstimate {
    pub runs: Vec<NullRun>,
    pub rejection_rate: f64,
    pub rejection_se: f64,
    pub mean_e: f64,
    pub mean_e_se: f64,
}

/// Fraction of replications that (wrongly, when `R > alpha`) certify, plus
/// the Monte Carlo mean of the final e-value.
pub fn estimate_reliability(
    cfg: &ScenarioConfig,
    evaluator: &EvaluatorConfig,
    spec: &RiskSpec,
) -> Result<ReliabilityEstimate> {
    cfg.world.validate()?;
    let runs = replicate(cfg.replications, |rep| {
        let mut process = evaluator.build(spec)?;
        for sample in gen_stream(&cfg.world, cfg.replication_seed(rep)).take(spec.horizon_n) {
            process.observe(&sample)?;
        }
        let out = decide(&process, spec);
        Ok(NullRun {
            replication: rep,
            decision: out.decision,
            final_log_e: out.final_log_e,
        })
    })?;
    let decisions: Vec<f64> = runs.iter().map(|r| f64::from(u8::from(r.decision))).collect();
    let e_values: Vec<f64> = runs.iter().map(|r| r.final_log_e.exp()).collect();
    let (rejection_rate, _) = mean_and_se(&decisions);
    let (mean_e, mean_e_se) = mean_and_se(&e_values);
    let n = runs.len() as f64;
    Ok(ReliabilityEstimate {
        rejection_se: (rejection_rate * (1.0 - rejection_rate) / n).sqrt(),
        runs,
        rejection_rate,
        mean_e,
        mean_e_se,
    })
}

/// Feeds `stream` until the running maximum reaches `1/delta`; `None` if that
/// does not happen within `max_rounds`.
pub fn run_until_certified(
    process: &mut EProcess,
    spec: &RiskSpec,
    stream: impl Iterator<Item = PairedSample>,
    max_rounds: usize,
) -> Result<Option<usize>> {
    let threshold = spec.log_threshold();
    for (i, sample) in stream.take(max_rounds).enumerate() {
        process.observe(&sample)?;
        if process.max_log_wealth() >= threshold {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexity {
    /// Stopping round per replication; `None` when censored.
    pub stopping_rounds: Vec<Option<usize>>,
    /// Mean over the uncensored replications.
    pub mean: f64,
    pub se: f64,
    pub completed: usize,
    pub censored: usize,
}

impl SampleComplexity {
    pub fn from_rounds(stopping_rounds: Vec<Option<usize>>) -> Self {
        let done: Vec<f64> = stopping_rounds.iter().flatten().map(|&n| n as f64).collect();
        let (mean, se) = mean_and_se(&done);
        SampleComplexity {
            completed: done.len(),
            censored: stopping_rounds.len() - done.len(),
            stopping_rounds,
            mean,
            se,
        }
    }
}

/// Mean first certification round when `R <= alpha`, censored at
/// `cfg.max_rounds`.
pub fn estimate_sample_complexity(
    cfg: &ScenarioConfig,
    evaluator: &EvaluatorConfig,
    spec: &RiskSpec,
) -> Result<SampleComplexity> {
    cfg.world.validate()?;
    let rounds = replicate(cfg.replications, |rep| {
        let mut process = evaluator.build(spec)?;
        run_until_certified(
            &mut process,
            spec,
            gen_stream(&cfg.world, cfg.replication_seed(rep)),
            cfg.max_rounds,
        )
    })?;
    Ok(SampleComplexity::from_rounds(rounds))
}

/// Runs one replication of the mixture evaluator for `spec.horizon_n` rounds
/// with weight recording on.
pub fn weight_trajectory(
    cfg: &ScenarioConfig,
    evaluator: &EvaluatorConfig,
    spec: &RiskSpec,
    rep: usize,
) -> Result<MixtureEProcess> {
    let mut process = evaluator.build(spec)?;
    let mixture = process
        .as_mixture_mut()
        .ok_or_else(|| Error::invalid("evaluator", "weight trajectories need r-autoeval-plus"))?;
    mixture.record_weights(true);
    for sample in gen_stream(&cfg.world, cfg.replication_seed(rep)).take(spec.horizon_n) {
        mixture.step(&sample)?;
    }
    Ok(mixture.clone())
}

/// Reliance factor of the heaviest arm after `spec.horizon_n` rounds, one per
/// replication.
pub fn final_weight_argmax(cfg: &ScenarioConfig, evaluator: &EvaluatorConfig, spec: &RiskSpec) -> Result<Vec<f64>> {
    replicate(cfg.replications, |rep| {
        let mut process = evaluator.build(spec)?;
        for sample in gen_stream(&cfg.world, cfg.replication_seed(rep)).take(spec.horizon_n) {
            process.observe(&sample)?;
        }
        process
            .as_mixture()
            .map(MixtureEProcess::argmax_rho)
            .ok_or_else(|| Error::invalid("evaluator", "weight concentration needs r-autoeval-plus"))
    })
}

/// One support point of the effective-observation distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

fn binomial_pmf(r: usize, k: usize, p: f64) -> f64 {
    let mut coeff = 1.0;
    for j in 0..k {
        coeff *= (r - j) as f64 / (j + 1) as f64;
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((r - k) as i32)
}

/// Exact distribution of the effective observation at reliance `rho`:
/// `(rho/r) k + a - rho b` with `k ~ Binomial(r, p_auto)` independent of the
/// human/autoevaluator pair `(a, b)`.
pub fn effective_atoms(world: &World, rho: f64) -> Result<Vec<Atom>> {
    world.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", format!("{rho} not in [0, 1]")));
    }
    let (risk, agree) = (world.true_risk, world.agreement);
    let pairs = [
        (1.0, 1.0, risk * agree),
        (1.0, 0.0, risk * (1.0 - agree)),
        (0.0, 1.0, (1.0 - risk) * (1.0 - agree)),
        (0.0, 0.0, (1.0 - risk) * agree),
    ];
    if world.ratio == 0 {
        if rho != 0.0 {
            return Err(Error::NoSyntheticData { rho });
        }
        return Ok(pairs.iter().map(|&(a, _, p)| Atom { value: a, prob: p }).collect());
    }
    let r = world.ratio;
    let p_auto = world.autoeval_mean();
    let mut atoms = Vec::with_capacity((r + 1) * 4);
    for k in 0..=r {
        let pk = binomial_pmf(r, k, p_auto);
        for &(a, b, pab) in &pairs {
            atoms.push(Atom {
                value: rho / r as f64 * k as f64 + a - rho * b,
                prob: pk * pab,
            });
        }
    }
    Ok(atoms)
}

/// Optimal constant bet and the growth rate it achieves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GStar {
    pub rho: f64,
    pub g_star: f64,
    pub lambda_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GStarResult {
    pub arms: Vec<GStar>,
    /// Index of the arm with the largest growth rate.
    pub best: usize,
}

/// Number of bets scanned by [`g_star_oracle`].
pub const G_STAR_GRID: usize = 100_001;

fn expected_log_growth(atoms: &[Atom], alpha: f64, lambda: f64) -> f64 {
    atoms
        .iter()
        .filter(|a| a.prob > 0.0)
        .map(|a| a.prob * (-lambda * (a.value - alpha)).ln_1p())
        .sum()
}

/// `max_lambda E[ln(1 - lambda (q - alpha))]` over a uniform grid of
/// [`G_STAR_GRID`] bets on `[0, (1 - 1e-9) / (1 + rho - alpha)]`, with the
/// expectation taken exactly over [`effective_atoms`].
pub fn g_star_oracle(cfg: &ScenarioConfig, rho: f64) -> Result<GStar> {
    let atoms = effective_atoms(&cfg.world, rho)?;
    let top = (1.0 - 1e-9) / (1.0 + rho - cfg.alpha);
    let mut best = GStar {
        rho,
        g_star: f64::NEG_INFINITY,
        lambda_star: 0.0,
    };
    for j in 0..G_STAR_GRID {
        let lambda = top * j as f64 / (G_STAR_GRID - 1) as f64;
        let g = expected_log_growth(&atoms, cfg.alpha, lambda);
        if g > best.g_star {
            best.g_star = g;
            best.lambda_star = lambda;
        }
    }
    Ok(best)
}

pub fn g_star_profile(cfg: &ScenarioConfig, rhos: &[f64]) -> Result<GStarResult> {
    let arms = rhos
        .par_iter()
        .map(|&rho| g_star_oracle(cfg, rho))
        .collect::<Result<Vec<_>>>()?;
    let best = arms
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, a)| if a.g_star > acc.1 { (i, a.g_star) } else { acc })
        .0;
    Ok(GStarResult { arms, best })
}

/// Second-order approximation `2 (1 + Var(q) / (alpha - R)^2)` of `1/g*`.
pub fn taylor_inverse_g(cfg: &ScenarioConfig, rho: f64) -> Result<f64> {
    let atoms = effective_atoms(&cfg.world, rho)?;
    let mean: f64 = atoms.iter().map(|a| a.prob * a.value).sum();
    let var: f64 = atoms.iter().map(|a| a.prob * (a.value - mean).powi(2)).sum();
    let gap = cfg.alpha - cfg.world.true_risk;
    Ok(2.0 * (1.0 + var / (gap * gap)))
}
