//! Small statistical helpers shared by every pricing and reporting module.

use libm::erfc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("percentile of an empty list")]
    Empty,
    #[error("percentile level {0} outside [0, 100]")]
    Level(f64),
    #[error("non-finite value in input")]
    NonFinite,
}

/// Standard normal cumulative distribution function.
///
/// Evaluated through the complementary error function, whose implementation
/// is accurate to roughly machine precision over the whole real line, well
/// inside the 1e-12 absolute budget the closed-form pricers need.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Linear-interpolation percentile between closest ranks.
///
/// For sorted data `v[0..n]` the rank of level `p` is `h = (n - 1) p / 100`
/// and the result is `v[floor h] + (h - floor h) (v[ceil h] - v[floor h])`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, StatsError> {
    let mut sorted = values.to_vec();
    sort_checked(&mut sorted)?;
    percentile_sorted(&sorted, p)
}

/// Same as [`percentile`] for several levels, sorting once.
pub fn percentiles(values: &[f64], levels: &[f64]) -> Result<Vec<f64>, StatsError> {
    let mut sorted = values.to_vec();
    sort_checked(&mut sorted)?;
    levels.iter().map(|&p| percentile_sorted(&sorted, p)).collect()
}

fn sort_checked(v: &mut [f64]) -> Result<(), StatsError> {
    if v.is_empty() {
        return Err(StatsError::Empty);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    v.sort_by(f64::total_cmp);
    Ok(())
}

fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if !(0.0..=100.0).contains(&p) {
        return Err(StatsError::Level(p));
    }
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}
