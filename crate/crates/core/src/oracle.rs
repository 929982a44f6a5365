//! Monte Carlo pricing oracle for correlated geometric Brownian motions.
//!
//! Used to check the closed forms in [`crate::lending`] independently.
//! Paths are generated in fixed-size chunks; chunk `i` draws from a
//! `ChaCha8Rng` seeded with `seed` on stream `i`, and chunk results are
//! combined in chunk order. Estimates are therefore bit-identical for a given
//! seed whatever the number of rayon worker threads.
//!
//! The generator crates are pinned to exact versions in the manifest so the
//! frozen numbers in the acceptance suite stay stable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Paths per RNG stream.
pub const CHUNK: u64 = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("initial values must be positive")]
    NonPositiveSpot,
    #[error("volatility {0} must be finite and non-negative")]
    BadVol(f64),
    #[error("correlation {0} outside [-1, 1]")]
    BadCorrelation(f64),
    #[error("maturity must be positive")]
    BadMaturity,
    #[error("steps and paths must be at least 1")]
    BadCount,
    #[error("barrier {barrier} must be positive and not above the initial value {spot}")]
    BadBarrier { barrier: f64, spot: f64 },
    #[error("payoff produced a non-finite value")]
    NonFinite,
}

/// Two correlated GBMs, `dS/S = drift dt + sigma dW`, `d<W_a, W_b> = rho dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmSpec {
    pub s0_a: f64,
    pub s0_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub rho: f64,
    pub drift_a: f64,
    pub drift_b: f64,
    /// Years.
    pub maturity: f64,
    /// Time steps per path; only path-dependent estimators use it.
    pub steps: u32,
    /// Independent draws. With antithetic sampling each draw is a pair.
    pub paths: u64,
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
}

fn yes() -> bool {
    true
}

impl GbmSpec {
    /// A single process, carried as asset A (asset B is a flat unit).
    pub fn single(s0: f64, sigma: f64, drift: f64, maturity: f64, steps: u32, paths: u64, seed: u64) -> Self {
        Self {
            s0_a: s0,
            s0_b: 1.0,
            sigma_a: sigma,
            sigma_b: 0.0,
            rho: 0.0,
            drift_a: drift,
            drift_b: 0.0,
            maturity,
            steps,
            paths,
            seed,
            antithetic: true,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.s0_a > 0.0 && self.s0_b > 0.0 && self.s0_a.is_finite() && self.s0_b.is_finite()) {
            return Err(OracleError::NonPositiveSpot);
        }
        for s in [self.sigma_a, self.sigma_b] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(OracleError::BadVol(s));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(OracleError::BadCorrelation(self.rho));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(OracleError::BadMaturity);
        }
        if self.steps == 0 || self.paths == 0 {
            return Err(OracleError::BadCount);
        }
        Ok(())
    }

    fn chunks(&self) -> u64 {
        self.paths.div_ceil(CHUNK)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        CHUNK.min(self.paths - chunk * CHUNK)
    }
}

fn stream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Exact lognormal transition over the whole horizon.
struct Terminal {
    a0: f64,
    b0: f64,
    mu_a: f64,
    mu_b: f64,
    sd_a: f64,
    sd_b: f64,
    rho: f64,
    rho_c: f64,
}

impl Terminal {
    fn new(s: &GbmSpec) -> Self {
        let t = s.maturity;
        Self {
            a0: s.s0_a,
            b0: s.s0_b,
            mu_a: (s.drift_a - 0.5 * s.sigma_a * s.sigma_a) * t,
            mu_b: (s.drift_b - 0.5 * s.sigma_b * s.sigma_b) * t,
            sd_a: s.sigma_a * t.sqrt(),
            sd_b: s.sigma_b * t.sqrt(),
            rho: s.rho,
            rho_c: (1.0 - s.rho * s.rho).max(0.0).sqrt(),
        }
    }

    fn pair(&self, z1: f64, z2: f64) -> (f64, f64) {
        let zb = self.rho * z1 + self.rho_c * z2;
        (self.a0 * (self.mu_a + self.sd_a * z1).exp(), self.b0 * (self.mu_b + self.sd_b * zb).exp())
    }
}

/// Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Independent samples behind the estimate.
    pub paths: u64,
}

impl McEstimate {
    /// Distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.mean - value;
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    fn estimate(self, scale: f64) -> Result<McEstimate, OracleError> {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        if !mean.is_finite() || !var.is_finite() {
            return Err(OracleError::NonFinite);
        }
        Ok(McEstimate { mean: scale * mean, std_error: scale * (var / n).sqrt(), paths: self.n })
    }
}

/// Runs `per_chunk` over every chunk in parallel and merges in chunk order.
fn reduce<F>(spec: &GbmSpec, per_chunk: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, u64) -> Moments + Sync,
{
    let parts: Vec<Moments> =
        (0..spec.chunks()).into_par_iter().map(|c| per_chunk(&mut stream(spec.seed, c), spec.chunk_len(c))).collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

/// `spec.paths` independent terminal pairs `(A_T, B_T)`, no antithetics.
pub fn simulate_terminal(spec: &GbmSpec) -> Result<Vec<(f64, f64)>, OracleError> {
    spec.validate()?;
    let term = Terminal::new(spec);
    let chunks: Vec<Vec<(f64, f64)>> = (0..spec.chunks())
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(spec.seed, c);
            (0..spec.chunk_len(c))
                .map(|_| {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    term.pair(z1, z2)
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// `e^{-r T} E[payoff(A_T, B_T)]`.
pub fn price_payoff<F>(spec: &GbmSpec, payoff: F, discount_rate: f64) -> Result<McEstimate, OracleError>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    spec.validate()?;
    let term = Terminal::new(spec);
    let moments = reduce(spec, |rng, n| {
        let mut m = Moments::default();
        for _ in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (a, b) = term.pair(z1, z2);
            let x = if spec.antithetic {
                let (a2, b2) = term.pair(-z1, -z2);
                0.5 * (payoff(a, b) + payoff(a2, b2))
            } else {
                payoff(a, b)
            };
            m.push(x);
        }
        m
    });
    moments.estimate((-discount_rate * spec.maturity).exp())
}

/// How crossings between monitoring dates are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monitoring {
    /// Only the simulated grid points are checked; hits are dated at the
    /// end of the step.
    Discrete,
    /// Each step also counts the Brownian-bridge probability
    /// `exp(-2 x_i x_{i+1} / (σ² dt))` of crossing between grid points
    /// (log distances to the barrier); hits are dated mid-step.
    BrownianBridge,
}

/// Present value of `payout` paid when asset A of `spec` first falls to
/// `barrier`, discounted at `rate`. Asset B is ignored.
///
/// With the bridge, each path contributes the expected discounted payout
/// given its grid values rather than a 0/1 draw, which also lowers variance.
pub fn first_passage_value(
    spec: &GbmSpec,
    barrier: f64,
    payout: f64,
    rate: f64,
    monitoring: Monitoring,
) -> Result<McEstimate, OracleError> {
    spec.validate()?;
    if !(barrier > 0.0 && barrier <= spec.s0_a) {
        return Err(OracleError::BadBarrier { barrier, spot: spec.s0_a });
    }
    if barrier == spec.s0_a {
        return Ok(McEstimate { mean: payout, std_error: 0.0, paths: spec.paths });
    }
    let steps = spec.steps as usize;
    let dt = spec.maturity / steps as f64;
    let sigma = spec.sigma_a;
    let nu_dt = (spec.drift_a - 0.5 * sigma * sigma) * dt;
    let sd = sigma * dt.sqrt();
    let x_start = (spec.s0_a / barrier).ln();
    let bridge = monitoring == Monitoring::BrownianBridge && sigma > 0.0;
    let inv_var = if bridge { 2.0 / (sigma * sigma * dt) } else { 0.0 };
    let step_df = (-rate * dt).exp();
    let half_df = (-rate * 0.5 * dt).exp();

    let path_value = |zs: &mut dyn FnMut() -> f64| -> f64 {
        let mut x = x_start;
        let mut alive = 1.0;
        let mut df = 1.0;
        let mut value = 0.0;
        for _ in 0..steps {
            let next = x + nu_dt + sd * zs();
            if next <= 0.0 {
                let when = if bridge { half_df } else { step_df };
                return value + alive * df * when;
            }
            if bridge {
                let p = (-x * next * inv_var).exp();
                value += alive * p * df * half_df;
                alive *= 1.0 - p;
            }
            df *= step_df;
            x = next;
        }
        value
    };

    let moments = reduce(spec, |rng, n| {
        let mut m = Moments::default();
        let mut buf = vec![0.0; steps];
        for _ in 0..n {
            for z in buf.iter_mut() {
                *z = rng.sample(StandardNormal);
            }
            let mut i = 0;
            let v = path_value(&mut || {
                i += 1;
                buf[i - 1]
            });
            let x = if spec.antithetic {
                let mut j = 0;
                let w = path_value(&mut || {
                    j += 1;
                    -buf[j - 1]
                });
                0.5 * (v + w)
            } else {
                v
            };
            m.push(x);
        }
        m
    });
    moments.estimate(payout)
}
