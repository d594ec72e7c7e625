//! Two-sided confidence intervals for the risk by inverting the betting test
//! over a uniform grid of targets `alpha_k = k / (G - 1)`.
//!
//! The upper bound is the largest grid `alpha` at which the test does not
//! certify at level `delta * epsilon`; the lower bound is the same
//! construction on the reflected stream `1 - q` at level
//! `delta * (1 - epsilon)`, mapped back.
//!
//! Every bettor is run with [`BetCap::SupportWidth`]. Under that cap a WSR bet
//! ignores `alpha`, and a UP grid point bets `lambda_g (q - alpha) / (M - alpha)`,
//! which is nonincreasing in `alpha` for `q <= M`. Either way each per-arm wealth
//! is nondecreasing in `alpha`, and so is the mixture (it equals the
//! initial-weighted sum of arm wealths), which is why bisection is exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betting::BetCap;
use crate::data::{PairedSample, RiskSpec};
use crate::error::{Error, Result};
use crate::evalue::EvaluatorConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Search {
    /// Walk the grid from the top down.
    Scan,
    #[default]
    Bisect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CiSpec {
    pub delta: f64,
    pub epsilon: f64,
    pub grid_size: usize,
    pub search: Search,
}

impl Default for CiSpec {
    fn default() -> Self {
        CiSpec {
            delta: 0.1,
            epsilon: 0.5,
            grid_size: 10_000,
            search: Search::Bisect,
        }
    }
}

impl CiSpec {
    pub fn new(delta: f64) -> Result<Self> {
        let spec = CiSpec {
            delta,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("{} not in (0, 1)", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("grid_size", "need at least the two endpoints"));
        }
        Ok(())
    }

    fn grid_point(&self, k: usize) -> f64 {
        k as f64 / (self.grid_size - 1) as f64
    }

    /// Distance between neighbouring grid points.
    pub fn step(&self) -> f64 {
        1.0 / (self.grid_size - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

fn ci_evaluator(evaluator: &EvaluatorConfig) -> EvaluatorConfig {
    let mut ev = evaluator.clone();
    ev.betting = ev.betting.with_cap(BetCap::SupportWidth);
    ev
}

/// `T_n(alpha)` at level `delta`, stopping as soon as the running maximum
/// crosses.
fn certifies(ev: &EvaluatorConfig, samples: &[PairedSample], alpha: f64, delta: f64, reflect: bool) -> Result<bool> {
    let spec = RiskSpec::for_inversion(alpha, delta, samples.len());
    let mut process = if reflect {
        ev.build_reflected(&spec)?
    } else {
        ev.build(&spec)?
    };
    let threshold = spec.log_threshold();
    for sample in samples {
        process.observe(sample)?;
        if process.max_log_wealth() >= threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

const SCAN_CHUNK: usize = 64;

/// Largest grid `alpha` with `T_n(alpha) = 0`. The top grid point `1` is never
/// tested: the bound is `1` whenever the point just below it fails to certify.
fn invert(ev: &EvaluatorConfig, samples: &[PairedSample], spec: &CiSpec, delta: f64, reflect: bool) -> Result<f64> {
    spec.validate()?;
    let ev = ci_evaluator(ev);
    let test = |k: usize| certifies(&ev, samples, spec.grid_point(k), delta, reflect);
    let top = spec.grid_size - 2;
    match spec.search {
        Search::Scan => {
            let mut hi = top + 1;
            while hi > 0 {
                let lo = hi.saturating_sub(SCAN_CHUNK);
                let results = (lo..hi).into_par_iter().map(|k| test(k).map(|t| (k, t))).collect::<Result<Vec<_>>>()?;
                if let Some(&(k, _)) = results.iter().rev().find(|(_, t)| !t) {
                    return Ok(if k == top { 1.0 } else { spec.grid_point(k) });
                }
                hi = lo;
            }
            Ok(0.0)
        }
        Search::Bisect => {
            if !test(top)? {
                return Ok(1.0);
            }
            if test(0)? {
                return Ok(0.0);
            }
            let (mut lo, mut hi) = (0, top);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if test(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(spec.grid_point(lo))
        }
    }
}

/// Upper confidence bound at level `1 - delta * epsilon`.
pub fn upper_bound(evaluator: &EvaluatorConfig, samples: &[PairedSample], spec: &CiSpec) -> Result<f64> {
    invert(evaluator, samples, spec, spec.delta * spec.epsilon, false)
}

/// Lower confidence bound at level `1 - delta * (1 - epsilon)`.
pub fn lower_bound(evaluator: &EvaluatorConfig, samples: &[PairedSample], spec: &CiSpec) -> Result<f64> {
    let reflected_upper = invert(evaluator, samples, spec, spec.delta * (1.0 - spec.epsilon), true)?;
    Ok(1.0 - reflected_upper)
}

pub fn interval(evaluator: &EvaluatorConfig, samples: &[PairedSample], spec: &CiSpec) -> Result<ConfidenceInterval> {
    let (lo, hi) = rayon::join(
        || lower_bound(evaluator, samples, spec),
        || upper_bound(evaluator, samples, spec),
    );
    let (lo, hi) = (lo?, hi?);
    let (lower, upper) = (lo.min(hi), lo.max(hi));
    Ok(ConfidenceInterval {
        lower,
        upper,
        width: upper - lower,
    })
}
