//! Anytime-valid reliable model evaluation by testing-by-betting.
//!
//! Three evaluators decide whether a model's risk `R = E[loss]` is at most a
//! target `alpha`, with false-certification probability at most `delta`:
//!
//! * `r-eval` bets on human-labeled losses only;
//! * `r-autoeval` bets on prediction-powered observations that mix a batch of
//!   autoevaluator losses with a bias correction from the labeled sample;
//! * `r-autoeval-plus` runs one betting process per reliance factor `rho` on a
//!   grid and mixes their wealth with exponential weights, so it tracks the
//!   best reliance on synthetic data as evidence accumulates.
//!
//! On top of the tests the crate provides hedged two-sided confidence
//! intervals, fixed-sequence and Bonferroni model selection, and a synthetic
//! simulation harness with exact oracles for the growth rate of each process.

pub mod betting;
pub mod cli;
pub mod confint;
pub mod data;
pub mod error;
pub mod evalue;
pub mod math;
pub mod selection;
pub mod simulate;

pub use betting::{BetCap, BetContext, Bettor, BettingConfig, StrategyKind, UpState, WsrState};
pub use confint::{interval, lower_bound, upper_bound, CiSpec, ConfidenceInterval};
pub use data::{
    batch_unlabeled, effective_observation, load_samples, EffectiveObservation, PairedSample, RelianceGrid,
    RiskSpec,
};
pub use error::{Error, Result};
pub use evalue::{
    decide, DecisionRule, EProcess, EvaluatorConfig, EvaluatorKind, MixtureEProcess, SimpleEProcess, TestOutcome,
};
pub use selection::{select_bonferroni, select_fst, Candidate, CandidateList, Selection};
pub use simulate::{ScenarioConfig, World};
