//! Independent predictions and the histogram comparator.

use serde::Serialize;

use crate::error::{config_err, Error, Result};
use crate::histogram::Histogram;
use crate::rotation::AngleSchedule;
use crate::statevector::ArraySpec;

/// Closed-form counter distribution after one rotation pass over distinct elements:
///
/// `P(j) = (1/M)·[cos²(φ_j/2) + Σ_{k≠j} sin²(φ_k/2)/(M−1)]`, `φ_k` the total angle of `A_k`.
///
/// Distinct elements occupy orthogonal data states, so their counter
/// columns never interfere and the result does not depend on the sign pattern.
pub fn closed_form_single_call(array: &ArraySpec, schedule: &AngleSchedule) -> Result<Vec<f64>> {
    if !array.is_distinct() {
        return Err(Error::Precondition(
            "closed form needs distinct elements; duplicates interfere".to_string(),
        ));
    }
    schedule.check_width(array.n_bits())?;
    let m = array.len() as f64;
    let halves: Vec<(f64, f64)> = array
        .elements()
        .iter()
        .map(|&v| {
            let half = schedule
                .total_angle(v, array.target())
                .map(|a| a.radians() / 2.0)?;
            Ok((half.cos().powi(2), half.sin().powi(2)))
        })
        .collect::<Result<_>>()?;
    let spread: f64 = halves.iter().map(|(_, s)| s).sum();
    Ok(halves
        .iter()
        .map(|(c, s)| (c + (spread - s) / (m - 1.0)) / m)
        .collect())
}

/// Success probability of drawing distinct elements uniformly without replacement:
/// `t/M` after `t` draws, clamped to 1.
pub fn brute_force_curve(m: usize, t: usize) -> f64 {
    if t > m {
        log::warn!("brute-force curve evaluated at t = {t} > M = {m}; clamping to 1");
        return 1.0;
    }
    t as f64 / m as f64
}

/// Total variation distance `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Outcome of [`compare_histogram`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub tv_distance: f64,
    /// Per-bin `(count − N p) / √(N p (1−p))`; infinite when an impossible
    /// outcome was observed (serialized as `null`).
    pub per_bin_z: Vec<f64>,
    pub worst_bin: usize,
    pub pass: bool,
    pub tolerance_policy: String,
}

/// Bin-wise z-test of a histogram against an expected distribution.
///
/// Passes iff every `|z| ≤ sigma`. A bin with zero expected probability and
/// a nonzero count fails regardless of `sigma`.
pub fn compare_histogram(
    hist: &Histogram,
    expected: &[f64],
    sigma: f64,
) -> Result<ComparisonReport> {
    if hist.len() != expected.len() {
        return config_err(format!(
            "histogram has {} bins, expected distribution {}",
            hist.len(),
            expected.len()
        ));
    }
    if hist.shots() < 100 {
        return config_err(format!(
            "comparison needs at least 100 shots, got {}",
            hist.shots()
        ));
    }
    let n = hist.shots() as f64;
    let per_bin_z: Vec<f64> = expected
        .iter()
        .zip(hist.counts())
        .map(|(&p, &count)| {
            let mean = n * p;
            let var = n * p * (1.0 - p);
            let dev = count as f64 - mean;
            if var > 0.0 {
                dev / var.sqrt()
            } else if dev.abs() < 0.5 {
                0.0
            } else {
                dev.signum() * f64::INFINITY
            }
        })
        .collect();
    let worst_bin = per_bin_z.iter().enumerate().fold(0, |best, (i, z)| {
        if z.abs() > per_bin_z[best].abs() {
            i
        } else {
            best
        }
    });
    let pass = per_bin_z.iter().all(|z| z.abs() <= sigma);
    Ok(ComparisonReport {
        tv_distance: tv_distance(&hist.frequencies(), expected),
        per_bin_z,
        worst_bin,
        pass,
        tolerance_policy: format!(
            "bin-wise |z| <= {sigma} under multinomial variance; zero-probability bins must stay empty"
        ),
    })
}
