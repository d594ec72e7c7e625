//! Wealth processes and test decisions.
//!
//! [`SimpleEProcess`] is a single betting game on one observation stream.
//! [`MixtureEProcess`] runs one game per reliance factor and combines them
//! with exponential weights; its log-wealth is built round by round from the
//! weighted average of the per-arm wealth factors, so the identity
//! `E_i = sum_s w_{s,0} E_{s,i}` holds up to rounding and can be checked.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::betting::{BetContext, Bettor, BettingConfig};
use crate::data::{effective_value, PairedSample, RelianceGrid, RiskSpec};
use crate::error::{Error, Result};
use crate::math::{log_sum_exp, log_wealth_factor};

/// Record-breaking values of a running maximum, starting from `E_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningMax {
    records: Vec<(usize, f64)>,
}

impl Default for RunningMax {
    fn default() -> Self {
        RunningMax {
            records: vec![(0, 0.0)],
        }
    }
}

impl RunningMax {
    pub fn update(&mut self, round: usize, value: f64) {
        if value > self.value() {
            self.records.push((round, value));
        }
    }

    pub fn value(&self) -> f64 {
        self.records.last().map_or(f64::NEG_INFINITY, |r| r.1)
    }

    /// First round whose value reached `threshold`.
    pub fn first_at_least(&self, threshold: f64) -> Option<usize> {
        let idx = self.records.partition_point(|r| r.1 < threshold);
        self.records.get(idx).map(|r| r.0)
    }
}

/// Product-form e-value `prod_i (1 - bet_i (q_i - alpha))`, kept in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleEProcess {
    alpha: f64,
    lower: f64,
    upper: f64,
    bettor: Bettor,
    log_wealth: f64,
    max: RunningMax,
    round: usize,
}

impl SimpleEProcess {
    pub fn new(ctx: BetContext, betting: &BettingConfig) -> Result<Self> {
        Ok(SimpleEProcess::with_bettor(betting.build(ctx)?))
    }

    pub fn with_bettor(bettor: Bettor) -> Self {
        let ctx = *bettor.context();
        SimpleEProcess {
            alpha: ctx.alpha,
            lower: ctx.lower,
            upper: ctx.upper,
            bettor,
            log_wealth: 0.0,
            max: RunningMax::default(),
            round: 0,
        }
    }

    /// Bet that the next call to [`step`](Self::step) will use.
    pub fn bet(&self) -> f64 {
        self.bettor.next_bet()
    }

    /// Consumes one observation and returns the log wealth factor it earned.
    #[inline]
    pub fn step(&mut self, q: f64) -> Result<f64> {
        if !(q >= self.lower && q <= self.upper) {
            return Err(Error::OutOfSupport {
                value: q,
                lower: self.lower,
                upper: self.upper,
            });
        }
        let bet = self.bettor.next_bet();
        let log_factor = log_wealth_factor(bet, q, self.alpha).ok_or(Error::NegativeFactor {
            factor: 1.0 - bet * (q - self.alpha),
            bet,
            observation: q,
        })?;
        self.bettor.observe(q)?;
        self.log_wealth += log_factor;
        self.round += 1;
        self.max.update(self.round, self.log_wealth);
        Ok(log_factor)
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    pub fn max_log_wealth(&self) -> f64 {
        self.max.value()
    }

    pub fn running_max(&self) -> &RunningMax {
        &self.max
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn bettor(&self) -> &Bettor {
        &self.bettor
    }
}

/// One betting game at a fixed reliance factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    rho: f64,
    /// Bet on `lower + upper - q` instead of `q` (lower confidence bounds).
    reflect: bool,
    process: SimpleEProcess,
}

impl Arm {
    fn new(rho: f64, reflect: bool, spec: &RiskSpec, betting: &BettingConfig) -> Result<Self> {
        let ctx = BetContext::new(spec, -rho, 1.0 + rho);
        Ok(Arm {
            rho,
            reflect,
            process: SimpleEProcess::new(ctx, betting)?,
        })
    }

    #[inline]
    fn observation(&self, sample: &PairedSample, synthetic_mean: Option<f64>) -> Result<f64> {
        let q = effective_value(sample, synthetic_mean, self.rho)?;
        // reflection can round a hair outside the support
        Ok(if self.reflect { (1.0 - q).clamp(-self.rho, 1.0 + self.rho) } else { q })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn process(&self) -> &SimpleEProcess {
        &self.process
    }
}

/// Exponentially weighted mixture of per-reliance betting games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureEProcess {
    arms: Vec<Arm>,
    log_initial_weights: Vec<f64>,
    /// `ln w_{s,i}`: the weights the next round will use.
    log_weights: Vec<f64>,
    log_wealth: f64,
    max: RunningMax,
    round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight_history: Option<Vec<Vec<f64>>>,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl MixtureEProcess {
    pub fn new(grid: &RelianceGrid, spec: &RiskSpec, betting: &BettingConfig) -> Result<Self> {
        MixtureEProcess::build(grid, spec, betting, false)
    }

    fn build(grid: &RelianceGrid, spec: &RiskSpec, betting: &BettingConfig, reflect: bool) -> Result<Self> {
        let arms = grid
            .rhos()
            .iter()
            .map(|&rho| Arm::new(rho, reflect, spec, betting))
            .collect::<Result<Vec<_>>>()?;
        let log_initial_weights: Vec<f64> = grid.initial_weights().iter().map(|w| w.ln()).collect();
        Ok(MixtureEProcess {
            log_weights: log_initial_weights.clone(),
            scratch: Vec::with_capacity(arms.len()),
            arms,
            log_initial_weights,
            log_wealth: 0.0,
            max: RunningMax::default(),
            round: 0,
            weight_history: None,
        })
    }

    /// Keep a copy of the weight vector after every round.
    pub fn record_weights(&mut self, on: bool) {
        self.weight_history = on.then(Vec::new);
    }

    pub fn weight_history(&self) -> Option<&[Vec<f64>]> {
        self.weight_history.as_deref()
    }

    pub fn step(&mut self, sample: &PairedSample) -> Result<()> {
        let mean = sample.synthetic_mean();
        if mean.is_none() {
            if let Some(arm) = self.arms.iter().find(|a| a.rho != 0.0) {
                return Err(Error::NoSyntheticData { rho: arm.rho });
            }
        }
        self.scratch.clear();
        for (arm, log_w) in self.arms.iter_mut().zip(&self.log_weights) {
            let q = arm.observation(sample, mean)?;
            let log_factor = arm.process.step(q)?;
            self.scratch.push(log_w + log_factor);
        }
        // E_i = E_{i-1} * sum_s w_{s,i} e_{s,i}, normalised by the rounded sum_s w_{s,i}
        self.log_wealth += log_sum_exp(&self.scratch) - log_sum_exp(&self.log_weights);
        self.round += 1;
        self.max.update(self.round, self.log_wealth);

        self.scratch.clear();
        self.scratch.extend(
            self.arms
                .iter()
                .zip(&self.log_initial_weights)
                .map(|(arm, lw0)| lw0 + arm.process.log_wealth),
        );
        let norm = log_sum_exp(&self.scratch);
        // every arm bankrupt: keep the previous weights
        if norm.is_finite() {
            for (lw, x) in self.log_weights.iter_mut().zip(&self.scratch) {
                *lw = x - norm;
            }
        }
        if let Some(history) = self.weight_history.as_mut() {
            history.push(self.log_weights.iter().map(|lw| lw.exp()).collect());
        }
        Ok(())
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    pub fn max_log_wealth(&self) -> f64 {
        self.max.value()
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    pub fn arm_log_wealths(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.process.log_wealth).collect()
    }

    /// `ln sum_s w_{s,0} E_{s,i}`, computed directly from the arms.
    pub fn initial_weighted_log_wealth(&self) -> f64 {
        let terms: Vec<f64> = self
            .arms
            .iter()
            .zip(&self.log_initial_weights)
            .map(|(a, lw0)| lw0 + a.process.log_wealth)
            .collect();
        log_sum_exp(&terms)
    }

    /// `max_s ln E_{s,i} - ln E_i`; bounded by `max_s ln(1/w_{s,0})`.
    pub fn weight_regret(&self) -> f64 {
        self.arm_log_wealths().into_iter().fold(f64::NEG_INFINITY, f64::max) - self.log_wealth
    }

    pub fn regret_bound(&self) -> f64 {
        self.log_initial_weights.iter().map(|lw| -lw).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Reliance factor of the currently heaviest arm.
    pub fn argmax_rho(&self) -> f64 {
        let (best, _) = self
            .log_weights
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
        self.arms[best].rho
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvaluatorKind {
    #[serde(rename = "r-eval")]
    REval,
    #[serde(rename = "r-autoeval")]
    RAutoEval,
    #[serde(rename = "r-autoeval-plus")]
    RAutoEvalPlus,
}

impl EvaluatorKind {
    pub const ALL: [EvaluatorKind; 3] = [EvaluatorKind::REval, EvaluatorKind::RAutoEval, EvaluatorKind::RAutoEvalPlus];
}

impl FromStr for EvaluatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r-eval" => Ok(EvaluatorKind::REval),
            "r-autoeval" => Ok(EvaluatorKind::RAutoEval),
            "r-autoeval-plus" | "r-autoeval+" => Ok(EvaluatorKind::RAutoEvalPlus),
            other => Err(Error::invalid("evaluator", format!("unknown evaluator `{other}`"))),
        }
    }
}

impl fmt::Display for EvaluatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            EvaluatorKind::REval => "r-eval",
            EvaluatorKind::RAutoEval => "r-autoeval",
            EvaluatorKind::RAutoEvalPlus => "r-autoeval-plus",
        })
    }
}

/// Which evaluator to run and how it bets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorConfig {
    pub kind: EvaluatorKind,
    #[serde(default)]
    pub betting: BettingConfig,
    /// Only used by `r-autoeval-plus`.
    #[serde(default)]
    pub grid: RelianceGrid,
}

impl EvaluatorConfig {
    pub fn new(kind: EvaluatorKind, betting: BettingConfig) -> Self {
        EvaluatorConfig {
            kind,
            betting,
            grid: RelianceGrid::default(),
        }
    }

    pub fn with_grid(self, grid: RelianceGrid) -> Self {
        EvaluatorConfig { grid, ..self }
    }

    pub fn build(&self, spec: &RiskSpec) -> Result<EProcess> {
        self.build_oriented(spec, false)
    }

    /// Same process on reflected observations `lower + upper - q`.
    pub fn build_reflected(&self, spec: &RiskSpec) -> Result<EProcess> {
        self.build_oriented(spec, true)
    }

    fn build_oriented(&self, spec: &RiskSpec, reflect: bool) -> Result<EProcess> {
        Ok(match self.kind {
            EvaluatorKind::REval => EProcess::Simple(Arm::new(0.0, reflect, spec, &self.betting)?),
            EvaluatorKind::RAutoEval => EProcess::Simple(Arm::new(1.0, reflect, spec, &self.betting)?),
            EvaluatorKind::RAutoEvalPlus => {
                EProcess::Mixture(MixtureEProcess::build(&self.grid, spec, &self.betting, reflect)?)
            }
        })
    }
}

/// A running evaluator, consumed strictly in stream order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EProcess {
    Simple(Arm),
    Mixture(MixtureEProcess),
}

impl EProcess {
    pub fn observe(&mut self, sample: &PairedSample) -> Result<()> {
        match self {
            EProcess::Simple(arm) => {
                let q = arm.observation(sample, sample.synthetic_mean())?;
                arm.process.step(q).map(|_| ())
            }
            EProcess::Mixture(m) => m.step(sample),
        }
    }

    pub fn log_wealth(&self) -> f64 {
        match self {
            EProcess::Simple(a) => a.process.log_wealth(),
            EProcess::Mixture(m) => m.log_wealth(),
        }
    }

    pub fn max_log_wealth(&self) -> f64 {
        match self {
            EProcess::Simple(a) => a.process.max_log_wealth(),
            EProcess::Mixture(m) => m.max_log_wealth(),
        }
    }

    pub fn running_max(&self) -> &RunningMax {
        match self {
            EProcess::Simple(a) => &a.process.max,
            EProcess::Mixture(m) => &m.max,
        }
    }

    pub fn rounds(&self) -> usize {
        match self {
            EProcess::Simple(a) => a.process.rounds(),
            EProcess::Mixture(m) => m.rounds(),
        }
    }

    pub fn as_mixture(&self) -> Option<&MixtureEProcess> {
        match self {
            EProcess::Mixture(m) => Some(m),
            EProcess::Simple(_) => None,
        }
    }

    pub fn as_mixture_mut(&mut self) -> Option<&mut MixtureEProcess> {
        match self {
            EProcess::Mixture(m) => Some(m),
            EProcess::Simple(_) => None,
        }
    }

    /// Pause/resume snapshot.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// How the wealth trajectory is turned into a decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    /// Certify once the running maximum of `E_i` reaches `1/delta`.
    #[default]
    RunningMax,
    /// Only look at the final `E_n`.
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub decision: bool,
    pub stopping_round: Option<usize>,
    pub final_log_e: f64,
    pub max_log_e: f64,
    pub rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
}

impl TestOutcome {
    /// `T_n` as 0/1.
    pub fn t(&self) -> u8 {
        u8::from(self.decision)
    }
}

pub fn decide(process: &EProcess, spec: &RiskSpec) -> TestOutcome {
    decide_with(process, spec, DecisionRule::RunningMax)
}

pub fn decide_with(process: &EProcess, spec: &RiskSpec, rule: DecisionRule) -> TestOutcome {
    let threshold = spec.log_threshold();
    let stopping_round = match rule {
        DecisionRule::RunningMax => process.running_max().first_at_least(threshold),
        DecisionRule::Final => (process.log_wealth() >= threshold).then_some(process.rounds()),
    };
    TestOutcome {
        decision: stopping_round.is_some(),
        stopping_round,
        final_log_e: process.log_wealth(),
        max_log_e: process.max_log_wealth(),
        rounds: process.rounds(),
        weights: process
            .as_mixture()
            .and_then(|m| m.weight_history().map(<[Vec<f64>]>::to_vec)),
    }
}

/// Runs a fresh evaluator over the first `spec.horizon_n` samples.
pub fn run_test(evaluator: &EvaluatorConfig, spec: &RiskSpec, samples: &[PairedSample]) -> Result<TestOutcome> {
    run_test_with(evaluator, spec, samples, DecisionRule::RunningMax)
}

pub fn run_test_with(
    evaluator: &EvaluatorConfig,
    spec: &RiskSpec,
    samples: &[PairedSample],
    rule: DecisionRule,
) -> Result<TestOutcome> {
    let mut process = evaluator.build(spec)?;
    for s in samples.iter().take(spec.horizon_n) {
        process.observe(s)?;
    }
    Ok(decide_with(&process, spec, rule))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alpha: f64) -> RiskSpec {
        RiskSpec::new(alpha, 0.1, 100).unwrap()
    }

    fn bernoulli_stream(n: usize, seed: u64, p: f64) -> Vec<PairedSample> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let real = f64::from(u8::from(rng.gen_bool(p)));
                let auto = if rng.gen_bool(0.2) { 1.0 - real } else { real };
                let syn = (0..3).map(|_| f64::from(u8::from(rng.gen_bool(p)))).collect();
                PairedSample::new(real, auto, syn).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_bets_keep_unit_wealth() {
        let ev = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, BettingConfig::fixed(0.0));
        let s = spec(0.1);
        let out = run_test(&ev, &s, &bernoulli_stream(100, 1, 0.3)).unwrap();
        assert_eq!(out.final_log_e, 0.0);
        assert!(!out.decision);
        assert_eq!(out.stopping_round, None);
    }

    #[test]
    fn single_factor_by_hand() {
        let ctx = BetContext::new(&spec(0.12), 0.0, 1.0);
        let mut p = SimpleEProcess::new(ctx, &BettingConfig::fixed(0.5)).unwrap();
        let lf = p.step(0.0).unwrap();
        assert!((lf - 1.06f64.ln()).abs() < 1e-15);
        assert!((p.log_wealth() - 1.06f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn observations_at_alpha_leave_wealth_unchanged() {
        let ctx = BetContext::new(&spec(0.25), 0.0, 1.0);
        for betting in [BettingConfig::wsr(), BettingConfig::up(), BettingConfig::fixed(1.2)] {
            let mut p = SimpleEProcess::new(ctx, &betting).unwrap();
            for _ in 0..50 {
                p.step(0.25).unwrap();
            }
            assert_eq!(p.log_wealth(), 0.0);
        }
    }

    #[test]
    fn out_of_support_is_rejected() {
        let ctx = BetContext::new(&spec(0.12), 0.0, 1.0);
        let mut p = SimpleEProcess::new(ctx, &BettingConfig::wsr()).unwrap();
        assert!(matches!(p.step(1.1), Err(Error::OutOfSupport { .. })));
        assert_eq!(p.rounds(), 0);
    }

    #[test]
    fn running_max_never_decreases() {
        let ctx = BetContext::new(&spec(0.3), 0.0, 1.0);
        let mut p = SimpleEProcess::new(ctx, &BettingConfig::wsr()).unwrap();
        let mut prev = p.max_log_wealth();
        for s in bernoulli_stream(300, 3, 0.2) {
            p.step(s.real_loss()).unwrap();
            assert!(p.max_log_wealth() >= prev);
            assert!(p.max_log_wealth() >= p.log_wealth());
            prev = p.max_log_wealth();
        }
    }

    #[test]
    fn weights_follow_arm_wealth() {
        // after one round the arms hold E_1 = 2 and E_2 = 1
        let s = RiskSpec::new(0.75, 0.1, 10).unwrap();
        let grid = RelianceGrid::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let mut m = MixtureEProcess::new(&grid, &s, &BettingConfig::fixed(0.0)).unwrap();
        let doubling = BettingConfig::fixed(4.0 / 3.0);
        m.arms[0].process = SimpleEProcess::new(BetContext::new(&s, 0.0, 1.0), &doubling).unwrap();
        m.step(&PairedSample::new(0.0, 0.0, vec![0.0]).unwrap()).unwrap();
        let w = m.weights();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.log_wealth() - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_arms_keep_initial_weights() {
        let s = spec(0.2);
        let grid = RelianceGrid::new(vec![0.0, 0.5, 1.0], vec![0.2, 0.3, 0.5]).unwrap();
        let mut m = MixtureEProcess::new(&grid, &s, &BettingConfig::fixed(0.5)).unwrap();
        // real == autoeval == every synthetic loss: all arms see the same value
        for i in 0..200 {
            let l = f64::from(u8::from(i % 7 == 0));
            m.step(&PairedSample::new(l, l, vec![l]).unwrap()).unwrap();
        }
        for (w, w0) in m.weights().iter().zip([0.2, 0.3, 0.5]) {
            assert!((w - w0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_identity_and_regret_bound_hold_each_round() {
        let s = spec(0.15);
        let grid = RelianceGrid::uniform(5).unwrap();
        let mut m = MixtureEProcess::new(&grid, &s, &BettingConfig::up()).unwrap();
        for sample in bernoulli_stream(200, 9, 0.1) {
            m.step(&sample).unwrap();
            assert!((m.log_wealth() - m.initial_weighted_log_wealth()).abs() < 1e-9);
            assert!(m.weight_regret() <= m.regret_bound());
            assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_mixture_equals_simple_process() {
        let s = spec(0.15);
        for (kind, rho) in [(EvaluatorKind::REval, 0.0), (EvaluatorKind::RAutoEval, 1.0)] {
            for betting in [BettingConfig::wsr(), BettingConfig::up()] {
                let simple_cfg = EvaluatorConfig::new(kind, betting);
                let mix_cfg = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, betting)
                    .with_grid(RelianceGrid::single(rho).unwrap());
                let mut a = simple_cfg.build(&s).unwrap();
                let mut b = mix_cfg.build(&s).unwrap();
                for sample in bernoulli_stream(150, 4, 0.1) {
                    a.observe(&sample).unwrap();
                    b.observe(&sample).unwrap();
                    assert_eq!(a.log_wealth().to_bits(), b.log_wealth().to_bits());
                }
            }
        }
    }

    #[test]
    fn decision_ties_certify() {
        let s = RiskSpec::new(0.1, 0.1, 10).unwrap();
        let mut max = RunningMax::default();
        max.update(3, s.log_threshold());
        assert_eq!(max.first_at_least(s.log_threshold()), Some(3));
        let mut max = RunningMax::default();
        max.update(2, 1.0);
        max.update(4, s.log_threshold() + 1e-12);
        max.update(9, 5.0);
        assert_eq!(max.first_at_least(s.log_threshold()), Some(4));
        assert_eq!(max.first_at_least(6.0), None);
    }

    #[test]
    fn stopping_round_is_first_crossing() {
        let s = RiskSpec::new(0.5, 0.1, 100).unwrap();
        // q = 0 with bet 1.5 multiplies wealth by 1.75 per round; 1.75^5 > 10 > 1.75^4
        let ev = EvaluatorConfig::new(EvaluatorKind::REval, BettingConfig::fixed(1.5));
        let stream: Vec<_> = (0..20).map(|_| PairedSample::new(0.0, 0.0, vec![]).unwrap()).collect();
        let out = run_test(&ev, &s, &stream).unwrap();
        assert!(out.decision);
        assert_eq!(out.stopping_round, Some(5));
        let fin = run_test_with(&ev, &s, &stream, DecisionRule::Final).unwrap();
        assert_eq!(fin.stopping_round, Some(20));
    }

    #[test]
    fn final_rule_can_disagree_with_running_max() {
        // wealth rises above 1/delta and then falls back
        let s = RiskSpec::new(0.5, 0.1, 100).unwrap();
        let ev = EvaluatorConfig::new(EvaluatorKind::REval, BettingConfig::fixed(1.5));
        let mut stream: Vec<_> = (0..5).map(|_| PairedSample::new(0.0, 0.0, vec![]).unwrap()).collect();
        stream.extend((0..5).map(|_| PairedSample::new(1.0, 1.0, vec![]).unwrap()));
        assert!(run_test(&ev, &s, &stream).unwrap().decision);
        assert!(!run_test_with(&ev, &s, &stream, DecisionRule::Final).unwrap().decision);
    }

    #[test]
    fn snapshot_resume_is_seamless() {
        let s = spec(0.15);
        for betting in [BettingConfig::wsr(), BettingConfig::up()] {
            let ev = EvaluatorConfig::new(EvaluatorKind::RAutoEvalPlus, betting).with_grid(RelianceGrid::uniform(3).unwrap());
            let stream = bernoulli_stream(80, 11, 0.1);
            let mut full = ev.build(&s).unwrap();
            let mut first = ev.build(&s).unwrap();
            for x in &stream[..40] {
                full.observe(x).unwrap();
                first.observe(x).unwrap();
            }
            let mut resumed = EProcess::from_json(&first.to_json().unwrap()).unwrap();
            for x in &stream[40..] {
                full.observe(x).unwrap();
                resumed.observe(x).unwrap();
            }
            assert_eq!(full.log_wealth().to_bits(), resumed.log_wealth().to_bits());
        }
    }

    #[test]
    fn evaluator_names_round_trip() {
        for k in EvaluatorKind::ALL {
            assert_eq!(k.to_string().parse::<EvaluatorKind>().unwrap(), k);
        }
        assert!("r-magic".parse::<EvaluatorKind>().is_err());
    }
}
