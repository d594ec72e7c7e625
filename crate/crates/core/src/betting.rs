//! Betting strategies: maps from past observations to the next bet.
//!
//! A bettor is built for one observation stream with a fixed support
//! `[lower, upper]` and target `alpha`; every bet it emits lies in
//! `[0, 1 / (upper - alpha))` so the wealth factor `1 - bet * (q - alpha)`
//! stays positive for any legal observation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::RiskSpec;
use crate::error::{Error, Result};

/// What a bettor needs to know about the stream it bets on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetContext {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
    pub horizon_n: usize,
}

impl BetContext {
    pub fn new(spec: &RiskSpec, lower: f64, upper: f64) -> Self {
        BetContext {
            alpha: spec.alpha,
            lower,
            upper,
            delta: spec.delta,
            horizon_n: spec.horizon_n,
        }
    }

    /// Supremum of the legal bet range, `1 / (upper - alpha)`.
    pub fn max_bet(&self) -> f64 {
        1.0 / (self.upper - self.alpha)
    }

    fn check(&self) -> Result<()> {
        if !(self.lower < self.upper) || !(self.alpha < self.upper) || !(self.alpha >= self.lower) {
            return Err(Error::invalid(
                "bet context",
                format!(
                    "need lower <= alpha < upper, got [{}, {}] with alpha {}",
                    self.lower, self.upper, self.alpha
                ),
            ));
        }
        Ok(())
    }

    fn check_observation(&self, q: f64) -> Result<()> {
        if q >= self.lower && q <= self.upper {
            Ok(())
        } else {
            Err(Error::OutOfSupport {
                value: q,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Wsr,
    Up,
    /// Constant bet; mostly useful as a control.
    Fixed,
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wsr" => Ok(StrategyKind::Wsr),
            "up" => Ok(StrategyKind::Up),
            "fixed" => Ok(StrategyKind::Fixed),
            other => Err(Error::invalid("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            StrategyKind::Wsr => "wsr",
            StrategyKind::Up => "up",
            StrategyKind::Fixed => "fixed",
        })
    }
}

/// How the WSR bet is capped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetCap {
    /// `c / (upper - alpha)`, used for testing.
    #[default]
    Scaled,
    /// `1 / (upper - lower)`. Makes the bets independent of `alpha`, which
    /// makes wealth monotone in `alpha` and the test invertible by bisection.
    SupportWidth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BettingConfig {
    pub strategy: StrategyKind,
    pub wsr_c: f64,
    pub up_grid: usize,
    pub fixed_bet: f64,
    pub cap: BetCap,
}

impl Default for BettingConfig {
    fn default() -> Self {
        BettingConfig {
            strategy: StrategyKind::Up,
            wsr_c: 0.75,
            up_grid: 10_000,
            fixed_bet: 0.0,
            cap: BetCap::Scaled,
        }
    }
}

impl BettingConfig {
    pub fn wsr() -> Self {
        BettingConfig {
            strategy: StrategyKind::Wsr,
            ..Default::default()
        }
    }

    pub fn up() -> Self {
        BettingConfig::default()
    }

    pub fn fixed(bet: f64) -> Self {
        BettingConfig {
            strategy: StrategyKind::Fixed,
            fixed_bet: bet,
            ..Default::default()
        }
    }

    pub fn with_cap(self, cap: BetCap) -> Self {
        BettingConfig { cap, ..self }
    }

    pub fn build(&self, ctx: BetContext) -> Result<Bettor> {
        ctx.check()?;
        Ok(match self.strategy {
            StrategyKind::Wsr => {
                let cap = match self.cap {
                    BetCap::Scaled => self.wsr_c / (ctx.upper - ctx.alpha),
                    BetCap::SupportWidth => 1.0 / (ctx.upper - ctx.lower),
                };
                Bettor::Wsr(WsrState::with_cap(ctx, cap)?)
            }
            StrategyKind::Up => Bettor::Up(UpState::uniform(ctx, self.up_grid)?),
            StrategyKind::Fixed => {
                if !(self.fixed_bet >= 0.0 && self.fixed_bet < ctx.max_bet()) {
                    return Err(Error::invalid(
                        "fixed bet",
                        format!("{} not in [0, {})", self.fixed_bet, ctx.max_bet()),
                    ));
                }
                Bettor::Fixed(FixedBet {
                    ctx,
                    bet: self.fixed_bet,
                })
            }
        })
    }
}

/// Any betting strategy, behind one type so processes can be snapshotted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bettor {
    Wsr(WsrState),
    Up(UpState),
    Fixed(FixedBet),
}

impl Bettor {
    /// The bet for the upcoming round.
    #[inline]
    pub fn next_bet(&self) -> f64 {
        match self {
            Bettor::Wsr(s) => s.next_bet(),
            Bettor::Up(s) => s.next_bet(),
            Bettor::Fixed(s) => s.bet,
        }
    }

    /// Feeds one observation; rejects anything outside the declared support.
    #[inline]
    pub fn observe(&mut self, q: f64) -> Result<()> {
        match self {
            Bettor::Wsr(s) => s.observe(q),
            Bettor::Up(s) => s.observe(q),
            Bettor::Fixed(s) => s.ctx.check_observation(q),
        }
    }

    pub fn context(&self) -> &BetContext {
        match self {
            Bettor::Wsr(s) => &s.ctx,
            Bettor::Up(s) => &s.ctx,
            Bettor::Fixed(s) => &s.ctx,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedBet {
    ctx: BetContext,
    bet: f64,
}

/// Variance-adaptive predictable plug-in bet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsrState {
    ctx: BetContext,
    mu_hat_0: f64,
    sigma_sq_hat_0: f64,
    cap: f64,
    /// `2 ln(1/delta) / n`, frozen at creation.
    scale: f64,
    count: usize,
    sum: f64,
    sum_sq_dev: f64,
}

impl WsrState {
    pub const MU_HAT_0: f64 = 0.5;
    pub const SIGMA_SQ_HAT_0: f64 = 0.25;

    /// Bets capped at `c / (upper - alpha)`.
    pub fn new(ctx: BetContext, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid("wsr c", format!("{c} not in (0, 1)")));
        }
        WsrState::with_cap(ctx, c / (ctx.upper - ctx.alpha))
    }

    pub fn with_cap(ctx: BetContext, cap: f64) -> Result<Self> {
        ctx.check()?;
        if !(cap > 0.0 && cap <= ctx.max_bet()) {
            return Err(Error::invalid("wsr cap", format!("{cap} not in (0, {}]", ctx.max_bet())));
        }
        Ok(WsrState {
            ctx,
            mu_hat_0: Self::MU_HAT_0,
            sigma_sq_hat_0: Self::SIGMA_SQ_HAT_0,
            cap,
            scale: 2.0 * (1.0 / ctx.delta).ln() / ctx.horizon_n.max(1) as f64,
            count: 0,
            sum: 0.0,
            sum_sq_dev: 0.0,
        })
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Regularized empirical variance after `count` observations.
    pub fn variance(&self) -> f64 {
        (self.sigma_sq_hat_0 + self.sum_sq_dev) / (self.count + 1) as f64
    }

    #[inline]
    pub fn next_bet(&self) -> f64 {
        self.cap.min((self.scale / self.variance()).sqrt())
    }

    pub fn observe(&mut self, q: f64) -> Result<()> {
        self.ctx.check_observation(q)?;
        self.count += 1;
        self.sum += q;
        // the running mean includes q itself
        let mu = (self.mu_hat_0 + self.sum) / (self.count + 1) as f64;
        self.sum_sq_dev += (q - mu) * (q - mu);
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn force_variance_sum(&mut self, sum_sq_dev: f64) {
        self.sum_sq_dev = sum_sq_dev;
    }
}

/// Universal portfolio over constant bets `lambda / (upper - alpha)`,
/// `lambda` on a grid in `[0, 1)`, with a uniform prior.
///
/// The per-grid wealth `E_i(lambda_g)` is stored as a relative weight times a
/// shared scale `exp(log_scale)`. A weight that falls below `2^-900` of the
/// scale is multiplied up by `2^900` and its exponent counter bumped, so every
/// grid log-wealth stays finite and exactly recoverable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpState {
    ctx: BetContext,
    lambdas: Vec<f64>,
    top: f64,
    /// Uniform prior mass of one grid point.
    prior: f64,
    weights: Vec<f64>,
    /// 1.0 where `shifts == 0`, else 0.0; keeps the hot loop branch-free.
    active: Vec<f64>,
    shifts: Vec<u32>,
    /// Number of points with `shifts > 0`.
    shifted: usize,
    log_scale: f64,
    /// `sum_g weights_g` over unshifted points, i.e. the UP wealth divided by
    /// `prior * exp(log_scale)`.
    total: f64,
    bet: f64,
}

const SHIFT_BITS: i32 = 900;
/// A shifted weight above this is moved back down (`2^100` hysteresis).
const UNSHIFT_BITS: i32 = 100;
const LANES: usize = 4;

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

#[derive(Clone, Copy)]
struct Sweep {
    total: f64,
    num: f64,
    min: f64,
    max_shifted: f64,
}

/// Multiplies every weight by `1 - lambda_g * t`; returns the total weight and
/// the `lambda`-weighted total. Four independent accumulators let the loop
/// vectorize.
fn sweep_plain(weights: &mut [f64], lambdas: &[f64], t: f64) -> (f64, f64) {
    let mut total = [0.0; LANES];
    let mut num = [0.0; LANES];
    let split = weights.len() / LANES * LANES;
    let (w_main, w_rest) = weights.split_at_mut(split);
    for (w4, l4) in w_main.chunks_exact_mut(LANES).zip(lambdas.chunks_exact(LANES)) {
        for k in 0..LANES {
            let w = w4[k] * (1.0 - l4[k] * t);
            w4[k] = w;
            total[k] += w;
            num[k] += l4[k] * w;
        }
    }
    for (w, &l) in w_rest.iter_mut().zip(&lambdas[split..]) {
        *w *= 1.0 - l * t;
        total[0] += *w;
        num[0] += l * *w;
    }
    (total.iter().sum(), num.iter().sum())
}

/// Same as [`sweep_plain`] but skips shifted points in the sums and reports
/// the extremes [`UpState::fixup_shifts`] looks for.
fn sweep(weights: &mut [f64], lambdas: &[f64], active: &[f64], t: f64) -> Sweep {
    let mut total = [0.0; LANES];
    let mut num = [0.0; LANES];
    let mut min = [f64::INFINITY; LANES];
    let mut max_shifted = [0.0f64; LANES];
    let split = weights.len() / LANES * LANES;
    let (w_main, w_rest) = weights.split_at_mut(split);
    for ((w4, l4), a4) in w_main
        .chunks_exact_mut(LANES)
        .zip(lambdas.chunks_exact(LANES))
        .zip(active.chunks_exact(LANES))
    {
        for k in 0..LANES {
            let w = w4[k] * (1.0 - l4[k] * t);
            w4[k] = w;
            let m = a4[k] * w;
            total[k] += m;
            num[k] += l4[k] * m;
            // plain selects vectorize; f64::min/max carry NaN handling that does not
            min[k] = if w < min[k] { w } else { min[k] };
            let s = w - m;
            max_shifted[k] = if s > max_shifted[k] { s } else { max_shifted[k] };
        }
    }
    for (k, w) in w_rest.iter_mut().enumerate() {
        let g = split + k;
        *w *= 1.0 - lambdas[g] * t;
        let m = active[g] * *w;
        total[0] += m;
        num[0] += lambdas[g] * m;
        min[0] = min[0].min(*w);
        max_shifted[0] = max_shifted[0].max(*w - m);
    }
    Sweep {
        total: total.iter().sum(),
        num: num.iter().sum(),
        min: min.iter().copied().fold(f64::INFINITY, f64::min),
        max_shifted: max_shifted.iter().copied().fold(0.0, f64::max),
    }
}

impl UpState {
    /// Largest unscaled grid value; the open end of `[0, 1)` is never reached.
    pub const GRID_TOP: f64 = 1.0 - 1e-6;

    /// Midpoints of `size` equal cells covering `[0, 1 - 1e-6]`.
    pub fn uniform(ctx: BetContext, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("up grid", "size must be positive"));
        }
        let step = Self::GRID_TOP / size as f64;
        let points = (0..size).map(|g| (g as f64 + 0.5) * step).collect();
        UpState::with_points(ctx, points)
    }

    /// Arbitrary grid points in `[0, 1)`, uniform prior. Points are kept
    /// sorted: `ln E(lambda)` is concave, so the smallest weight is always at
    /// one end of the grid.
    pub fn with_points(ctx: BetContext, mut points: Vec<f64>) -> Result<Self> {
        ctx.check()?;
        if points.is_empty() || points.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return Err(Error::invalid("up grid", "points must be non-empty and in [0, 1)"));
        }
        points.sort_by(f64::total_cmp);
        let size = points.len();
        let top = points[size - 1];
        let mut state = UpState {
            top,
            ctx,
            prior: 1.0 / size as f64,
            weights: vec![1.0; size],
            active: vec![1.0; size],
            shifts: vec![0; size],
            shifted: 0,
            lambdas: points,
            log_scale: 0.0,
            total: 0.0,
            bet: 0.0,
        };
        let (total, num) = state.sums();
        state.total = total;
        state.bet = num / total * ctx.max_bet();
        Ok(state)
    }

    fn sums(&self) -> (f64, f64) {
        let mut total = [0.0; LANES];
        let mut num = [0.0; LANES];
        for (g, (&w, &a)) in self.weights.iter().zip(&self.active).enumerate() {
            let m = a * w;
            total[g % LANES] += m;
            num[g % LANES] += self.lambdas[g] * m;
        }
        (total.iter().sum(), num.iter().sum())
    }

    pub fn grid(&self) -> &[f64] {
        &self.lambdas
    }

    #[inline]
    pub fn next_bet(&self) -> f64 {
        self.bet
    }

    pub fn observe(&mut self, q: f64) -> Result<()> {
        self.ctx.check_observation(q)?;
        let t = (q - self.ctx.alpha) * self.ctx.max_bet();
        if 1.0 - self.top * t < 0.0 {
            return Err(Error::OutOfSupport {
                value: q,
                lower: self.ctx.lower,
                upper: self.ctx.upper,
            });
        }

        let (mut total, mut num, needs_fixup) = if self.shifted == 0 {
            let (total, num) = sweep_plain(&mut self.weights, &self.lambdas, t);
            let last = self.weights.len() - 1;
            (total, num, self.weights[0].min(self.weights[last]) < pow2(-SHIFT_BITS))
        } else {
            let s = sweep(&mut self.weights, &self.lambdas, &self.active, t);
            (s.total, s.num, s.min < pow2(-SHIFT_BITS) || s.max_shifted > pow2(UNSHIFT_BITS))
        };
        if needs_fixup {
            self.fixup_shifts();
            (total, num) = self.sums();
        }
        if !(total > 0.0) {
            return Err(Error::invalid("up state", "all grid wealth vanished"));
        }
        if !(1e-100..=1e100).contains(&total) {
            let inv = 1.0 / total;
            self.weights.iter_mut().for_each(|w| *w *= inv);
            self.log_scale += total.ln();
            num *= inv;
            total = 1.0;
        }
        self.total = total;
        self.bet = num / total * self.ctx.max_bet();
        Ok(())
    }

    fn fixup_shifts(&mut self) {
        let tiny = pow2(-SHIFT_BITS);
        let up = pow2(SHIFT_BITS);
        for g in 0..self.lambdas.len() {
            let w = self.weights[g];
            if w == 0.0 {
                continue;
            }
            if self.shifts[g] > 0 && w > pow2(UNSHIFT_BITS) {
                // true value is w * 2^(-900 * shifts)
                self.weights[g] = w * tiny;
                self.shifts[g] -= 1;
            } else if w < tiny {
                self.weights[g] = w * up;
                self.shifts[g] += 1;
            }
            self.active[g] = if self.shifts[g] == 0 { 1.0 } else { 0.0 };
        }
        self.shifted = self.shifts.iter().filter(|&&k| k > 0).count();
    }

    /// `ln E_i(lambda_g / (upper - alpha))` for grid point `g`.
    pub fn grid_log_wealth(&self, g: usize) -> f64 {
        self.log_scale + self.weights[g].ln()
            - f64::from(self.shifts[g]) * f64::from(SHIFT_BITS) * std::f64::consts::LN_2
    }

    /// Best constant-bet log-wealth over the grid.
    pub fn max_grid_log_wealth(&self) -> f64 {
        (0..self.lambdas.len())
            .map(|g| self.grid_log_wealth(g))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Log of the prior-weighted average of grid wealths, which equals the
    /// log-wealth earned by betting the UP bets themselves.
    pub fn mixture_log_wealth(&self) -> f64 {
        self.log_scale + (self.prior * self.total).ln()
    }
}
