//! Domain types, loss-stream ingestion, and construction of effective
//! observations from paired real / synthetic data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target risk, tolerated unreliability and planned number of labeled rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub alpha: f64,
    pub delta: f64,
    pub horizon_n: usize,
}

impl RiskSpec {
    pub fn new(alpha: f64, delta: f64, horizon_n: usize) -> Result<Self> {
        let spec = RiskSpec {
            alpha,
            delta,
            horizon_n,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Skips the `0 < alpha < 1` check. Confidence-interval inversion scans
    /// the closed interval `[0, 1]`, including both endpoints.
    pub(crate) fn for_inversion(alpha: f64, delta: f64, horizon_n: usize) -> Self {
        RiskSpec {
            alpha,
            delta,
            horizon_n: horizon_n.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("{} not in (0, 1)", self.delta)));
        }
        if self.horizon_n == 0 {
            return Err(Error::invalid("horizon_n", "must be at least 1"));
        }
        Ok(())
    }

    /// `ln(1/delta)`, the log-wealth a test must reach to certify `R <= alpha`.
    pub fn log_threshold(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        RiskSpec { delta, ..*self }
    }
}

fn check_loss(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::LossOutOfRange { what, value })
    }
}

/// One labeled loss, the autoevaluator's loss on the same input, and the
/// batch of autoevaluator-only losses attached to this round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    real_loss: f64,
    autoeval_loss_on_real: f64,
    synthetic_losses: Vec<f64>,
}

impl PairedSample {
    pub fn new(real_loss: f64, autoeval_loss_on_real: f64, synthetic_losses: Vec<f64>) -> Result<Self> {
        check_loss("real_loss", real_loss)?;
        check_loss("autoeval_loss_on_real", autoeval_loss_on_real)?;
        for &l in &synthetic_losses {
            check_loss("synthetic loss", l)?;
        }
        Ok(PairedSample {
            real_loss,
            autoeval_loss_on_real,
            synthetic_losses,
        })
    }

    pub fn real_loss(&self) -> f64 {
        self.real_loss
    }

    pub fn autoeval_loss_on_real(&self) -> f64 {
        self.autoeval_loss_on_real
    }

    pub fn synthetic_losses(&self) -> &[f64] {
        &self.synthetic_losses
    }

    /// Synthetic-to-real ratio `r` for this round.
    pub fn ratio(&self) -> usize {
        self.synthetic_losses.len()
    }

    /// Mean of the synthetic batch, `None` when the batch is empty.
    pub fn synthetic_mean(&self) -> Option<f64> {
        if self.synthetic_losses.is_empty() {
            None
        } else {
            Some(self.synthetic_losses.iter().sum::<f64>() / self.synthetic_losses.len() as f64)
        }
    }

    /// The sample with every loss replaced by `1 - loss`.
    pub fn reflected(&self) -> PairedSample {
        PairedSample {
            real_loss: 1.0 - self.real_loss,
            autoeval_loss_on_real: 1.0 - self.autoeval_loss_on_real,
            synthetic_losses: self.synthetic_losses.iter().map(|l| 1.0 - l).collect(),
        }
    }
}

/// Candidate reliance factors `0 = rho_1 < ... < rho_S = 1` with strictly
/// positive prior weights.
///
/// A single-point grid (`S = 1`) may sit anywhere in `[0, 1]`; `{0}` and
/// `{1}` are how the mixture process degenerates to the two baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelianceGrid {
    rhos: Vec<f64>,
    initial_weights: Vec<f64>,
}

impl RelianceGrid {
    pub fn new(rhos: Vec<f64>, initial_weights: Vec<f64>) -> Result<Self> {
        if rhos.is_empty() {
            return Err(Error::invalid("reliance grid", "empty"));
        }
        if rhos.len() != initial_weights.len() {
            return Err(Error::invalid(
                "reliance grid",
                format!("{} factors but {} weights", rhos.len(), initial_weights.len()),
            ));
        }
        if rhos.len() == 1 {
            if !(0.0..=1.0).contains(&rhos[0]) {
                return Err(Error::invalid("reliance grid", format!("rho {} not in [0, 1]", rhos[0])));
            }
        } else {
            if rhos[0] != 0.0 || *rhos.last().unwrap() != 1.0 {
                return Err(Error::invalid("reliance grid", "must start at 0 and end at 1"));
            }
            if rhos.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("reliance grid", "factors must be strictly increasing"));
            }
        }
        if initial_weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("reliance grid", "initial weights must be positive"));
        }
        let total: f64 = initial_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("reliance grid", format!("weights sum to {total}, not 1")));
        }
        Ok(RelianceGrid {
            rhos,
            initial_weights,
        })
    }

    /// `S` factors uniformly spaced on `[0, 1]` with weights `1/S`.
    pub fn uniform(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid("reliance grid", "a uniform grid needs at least 2 points"));
        }
        let last = (size - 1) as f64;
        let rhos = (0..size).map(|s| s as f64 / last).collect();
        RelianceGrid::new(rhos, vec![1.0 / size as f64; size])
    }

    pub fn single(rho: f64) -> Result<Self> {
        RelianceGrid::new(vec![rho], vec![1.0])
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rhos
    }

    pub fn initial_weights(&self) -> &[f64] {
        &self.initial_weights
    }

    pub fn len(&self) -> usize {
        self.rhos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhos.is_empty()
    }
}

impl Default for RelianceGrid {
    fn default() -> Self {
        RelianceGrid::uniform(10).expect("10-point grid is valid")
    }
}

/// Bounded unbiased risk estimate built from one round of data at reliance
/// `rho`; it lies in `[-rho, 1 + rho]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveObservation {
    pub value: f64,
    pub rho: f64,
    pub arm_index: usize,
}

impl EffectiveObservation {
    pub fn lower(&self) -> f64 {
        -self.rho
    }

    pub fn upper(&self) -> f64 {
        1.0 + self.rho
    }
}

/// `rho * mean(synthetic) + real - rho * autoeval_on_real`, with the synthetic
/// term absent when `rho == 0`.
#[inline]
pub(crate) fn effective_value(sample: &PairedSample, synthetic_mean: Option<f64>, rho: f64) -> Result<f64> {
    let synthetic = match synthetic_mean {
        Some(mean) => rho * mean,
        None if rho == 0.0 => 0.0,
        None => return Err(Error::NoSyntheticData { rho }),
    };
    Ok(synthetic + sample.real_loss - rho * sample.autoeval_loss_on_real)
}

/// Reliance-weighted effective observation for a single round.
pub fn effective_observation(sample: &PairedSample, rho: f64) -> Result<EffectiveObservation> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", format!("{rho} not in [0, 1]")));
    }
    let value = effective_value(sample, sample.synthetic_mean(), rho)?;
    Ok(EffectiveObservation {
        value,
        rho,
        arm_index: 0,
    })
}

/// One effective observation per grid point, in grid order.
pub fn effective_observations(sample: &PairedSample, grid: &RelianceGrid) -> Result<Vec<EffectiveObservation>> {
    let mean = sample.synthetic_mean();
    grid.rhos()
        .iter()
        .enumerate()
        .map(|(arm_index, &rho)| {
            Ok(EffectiveObservation {
                value: effective_value(sample, mean, rho)?,
                rho,
                arm_index,
            })
        })
        .collect()
}

/// Unweighted prediction-powered observation: synthetic mean plus the bias
/// correction `real - autoeval_on_real`.
pub fn ppi_observation(sample: &PairedSample) -> Result<f64> {
    match sample.synthetic_mean() {
        Some(mean) => Ok(mean + sample.real_loss - sample.autoeval_loss_on_real),
        None => Err(Error::NoSyntheticData { rho: 1.0 }),
    }
}

/// Splits `unlabeled` into `n_real` consecutive batches of `floor(N / n_real)`
/// losses. The trailing `N mod n_real` losses are dropped.
pub fn batch_unlabeled(n_real: usize, unlabeled: &[f64]) -> Result<Vec<Vec<f64>>> {
    if n_real == 0 {
        return Err(Error::invalid("n_real", "must be at least 1"));
    }
    let r = unlabeled.len() / n_real;
    if r == 0 {
        return Ok(vec![Vec::new(); n_real]);
    }
    Ok(unlabeled.chunks_exact(r).take(n_real).map(<[f64]>::to_vec).collect())
}

/// Zips labeled pairs with their synthetic batches.
pub fn pair_streams(paired: &[(f64, f64)], unlabeled: &[f64]) -> Result<Vec<PairedSample>> {
    if paired.is_empty() {
        return Ok(Vec::new());
    }
    let batches = batch_unlabeled(paired.len(), unlabeled)?;
    paired
        .iter()
        .zip(batches)
        .map(|(&(real, auto), batch)| PairedSample::new(real, auto, batch))
        .collect()
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Reads the named float columns from a CSV file, validating each value as a
/// loss in `[0, 1]`. Rows are numbered from 1 after the header.
fn read_loss_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, 0, "<header>", e.to_string()))?
        .clone();
    let mut indices = Vec::with_capacity(columns.len());
    for &col in columns {
        match headers.iter().position(|h| h == col) {
            Some(i) => indices.push(i),
            None => return Err(csv_error(path, 0, col, "missing column in header")),
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, row, "<record>", e.to_string()))?;
        let mut values = Vec::with_capacity(columns.len());
        for (&col, &idx) in columns.iter().zip(&indices) {
            let raw = record
                .get(idx)
                .ok_or_else(|| csv_error(path, row, col, "missing field"))?;
            let value: f64 = raw
                .parse()
                .map_err(|_| csv_error(path, row, col, format!("`{raw}` is not a number")))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(csv_error(path, row, col, format!("loss {value} outside [0, 1]")));
            }
            values.push(value);
        }
        rows.push(values);
    }
    Ok(rows)
}

/// Reads `real_loss,autoeval_loss_on_real` rows in stream order.
pub fn read_paired_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let rows = read_loss_columns(path.as_ref(), &["real_loss", "autoeval_loss_on_real"])?;
    Ok(rows.into_iter().map(|r| (r[0], r[1])).collect())
}

/// Reads the `autoeval_loss` column in stream order.
pub fn read_unlabeled_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let rows = read_loss_columns(path.as_ref(), &["autoeval_loss"])?;
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// Loads and pairs both files. Without an unlabeled file every round has an
/// empty synthetic batch.
pub fn load_samples(paired: impl AsRef<Path>, unlabeled: Option<&Path>) -> Result<Vec<PairedSample>> {
    let pairs = read_paired_csv(paired)?;
    let unl = match unlabeled {
        Some(p) => read_unlabeled_csv(p)?,
        None => Vec::new(),
    };
    pair_streams(&pairs, &unl)
}

pub fn write_paired_csv(path: impl AsRef<Path>, samples: &[PairedSample]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["real_loss", "autoeval_loss_on_real"])?;
    for s in samples {
        w.write_record([s.real_loss.to_string(), s.autoeval_loss_on_real.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_unlabeled_csv(path: impl AsRef<Path>, samples: &[PairedSample]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["autoeval_loss"])?;
    for l in samples.iter().flat_map(|s| s.synthetic_losses.iter()) {
        w.write_record([l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
