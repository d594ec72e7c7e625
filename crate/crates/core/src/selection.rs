//! Risk-controlling model selection over a declared list of candidates.
//!
//! Each candidate carries its own loss stream. Fixed-sequence testing walks
//! the list at full level `delta` and stops at the first failure; Bonferroni
//! tests every candidate at `delta / K`. Both bound the probability of
//! certifying any candidate whose risk exceeds `alpha` by `delta`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_samples, PairedSample, RiskSpec};
use crate::error::{Error, Result};
use crate::evalue::{run_test, EvaluatorConfig};
use crate::simulate::{gen_stream, World};

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub name: String,
    /// Free-form description (model size, prompt length, ...).
    pub payload: serde_json::Value,
    /// Used to pick the reported model among the accepted ones; smaller wins.
    pub size: Option<f64>,
    pub samples: Vec<PairedSample>,
}

impl Candidate {
    pub fn new(name: impl Into<String>, samples: Vec<PairedSample>) -> Self {
        Candidate {
            name: name.into(),
            payload: serde_json::Value::Null,
            size: None,
            samples,
        }
    }

    pub fn with_size(self, size: f64) -> Self {
        Candidate {
            size: Some(size),
            ..self
        }
    }
}

/// Candidates in the user-declared test order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateList {
    pub candidates: Vec<Candidate>,
    /// Reported when nothing is accepted.
    pub fallback: Option<String>,
}

impl CandidateList {
    pub fn new(candidates: Vec<Candidate>) -> Self {
        CandidateList {
            candidates,
            fallback: None,
        }
    }

    pub fn with_fallback(self, name: impl Into<String>) -> Self {
        CandidateList {
            fallback: Some(name.into()),
            ..self
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CandidateSource {
    Files {
        paired: PathBuf,
        #[serde(default)]
        unlabeled: Option<PathBuf>,
    },
    /// `horizon_n` rounds drawn from a synthetic world.
    Synthetic {
        #[serde(flatten)]
        world: World,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    #[serde(default)]
    pub payload: serde_json::Value,
    #[serde(default)]
    pub size: Option<f64>,
    pub source: CandidateSource,
}

/// JSON description of a candidate list. Relative file paths are resolved
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub candidates: Vec<ManifestEntry>,
    #[serde(default)]
    pub fallback: Option<String>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Manifest::from_json(&text)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn materialize(&self, horizon_n: usize) -> Result<CandidateList> {
        let candidates = self
            .candidates
            .iter()
            .map(|entry| {
                let samples = match &entry.source {
                    CandidateSource::Files { paired, unlabeled } => {
                        let unl = unlabeled.as_ref().map(|p| self.base_dir.join(p));
                        load_samples(self.base_dir.join(paired), unl.as_deref())?
                    }
                    CandidateSource::Synthetic { world, seed } => {
                        world.validate()?;
                        gen_stream(world, *seed).take(horizon_n).collect()
                    }
                };
                Ok(Candidate {
                    name: entry.name.clone(),
                    payload: entry.payload.clone(),
                    size: entry.size,
                    samples,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateList {
            candidates,
            fallback: self.fallback.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    #[default]
    Fst,
    Bonferroni,
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fst" => Ok(Procedure::Fst),
            "bonferroni" => Ok(Procedure::Bonferroni),
            other => Err(Error::invalid("procedure", format!("unknown procedure `{other}`"))),
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Procedure::Fst => "fst",
            Procedure::Bonferroni => "bonferroni",
        })
    }
}

/// Per-candidate row of a selection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub name: String,
    /// False for candidates after the first FST failure.
    pub tested: bool,
    pub level: f64,
    pub decision: bool,
    pub stopping_round: Option<usize>,
    pub final_log_e: f64,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub procedure: Procedure,
    pub outcomes: Vec<CandidateOutcome>,
    /// Names of the certified candidates, in list order.
    pub accepted: Vec<String>,
    /// Smallest accepted candidate, or the fallback when nothing passed.
    pub chosen: Option<String>,
    pub used_fallback: bool,
}

/// Length of the passing prefix.
pub fn fst_prefix(decisions: &[bool]) -> usize {
    decisions.iter().take_while(|&&d| d).count()
}

pub fn bonferroni_level(delta: f64, k: usize) -> f64 {
    delta / k.max(1) as f64
}

fn test_candidate(
    c: &Candidate,
    evaluator: &EvaluatorConfig,
    spec: &RiskSpec,
    level: f64,
) -> Result<CandidateOutcome> {
    let out = run_test(evaluator, &spec.with_delta(level), &c.samples)?;
    Ok(CandidateOutcome {
        name: c.name.clone(),
        tested: true,
        level,
        decision: out.decision,
        stopping_round: out.stopping_round,
        final_log_e: out.final_log_e,
        rounds: out.rounds,
    })
}

fn untested(c: &Candidate, level: f64) -> CandidateOutcome {
    CandidateOutcome {
        name: c.name.clone(),
        tested: false,
        level,
        decision: false,
        stopping_round: None,
        final_log_e: 0.0,
        rounds: 0,
    }
}

fn finish(list: &CandidateList, procedure: Procedure, outcomes: Vec<CandidateOutcome>) -> Selection {
    let accepted_idx: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].decision).collect();
    let smallest = accepted_idx.iter().copied().reduce(|best, i| {
        match (list.candidates[i].size, list.candidates[best].size) {
            (Some(a), Some(b)) if a < b => i,
            (Some(_), None) => i,
            _ => best,
        }
    });
    let (chosen, used_fallback) = match smallest {
        Some(i) => (Some(list.candidates[i].name.clone()), false),
        None => (list.fallback.clone(), list.fallback.is_some()),
    };
    Selection {
        procedure,
        accepted: accepted_idx.iter().map(|&i| outcomes[i].name.clone()).collect(),
        outcomes,
        chosen,
        used_fallback,
    }
}

/// Fixed-sequence testing at full level `spec.delta`.
pub fn select_fst(list: &CandidateList, spec: &RiskSpec, evaluator: &EvaluatorConfig) -> Result<Selection> {
    let mut outcomes = Vec::with_capacity(list.len());
    let mut failed = false;
    for c in &list.candidates {
        if failed {
            outcomes.push(untested(c, spec.delta));
            continue;
        }
        let out = test_candidate(c, evaluator, spec, spec.delta)?;
        failed = !out.decision;
        outcomes.push(out);
    }
    Ok(finish(list, Procedure::Fst, outcomes))
}

/// Every candidate at level `spec.delta / K`.
pub fn select_bonferroni(list: &CandidateList, spec: &RiskSpec, evaluator: &EvaluatorConfig) -> Result<Selection> {
    let level = bonferroni_level(spec.delta, list.len());
    let outcomes = list
        .candidates
        .par_iter()
        .map(|c| test_candidate(c, evaluator, spec, level))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(list, Procedure::Bonferroni, outcomes))
}

pub fn select(
    procedure: Procedure,
    list: &CandidateList,
    spec: &RiskSpec,
    evaluator: &EvaluatorConfig,
) -> Result<Selection> {
    match procedure {
        Procedure::Fst => select_fst(list, spec, evaluator),
        Procedure::Bonferroni => select_bonferroni(list, spec, evaluator),
    }
}
