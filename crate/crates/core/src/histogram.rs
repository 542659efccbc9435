//! Seeded sampling of measurement outcomes.
//!
//! Shots are cut into chunks of [`SHOTS_PER_STREAM`]. Chunk `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, so the result is
//! identical whether chunks run sequentially or on the rayon pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config_err, Error, Result};
use crate::statevector::{draw, PureState, Register};

pub const SHOTS_PER_STREAM: u64 = 8192;

/// Generator for chunk `stream` of a run seeded with `seed`.
pub fn shot_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Outcome counts of a sampled register, optionally with the exact probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    counts: Vec<u64>,
    shots: u64,
    exact_probs: Option<Vec<f64>>,
    seed: u64,
}

impl Histogram {
    pub fn new(counts: Vec<u64>, seed: u64, exact_probs: Option<Vec<f64>>) -> Result<Self> {
        let shots = counts.iter().sum();
        if let Some(p) = &exact_probs {
            if p.len() != counts.len() {
                return config_err("exact probabilities and counts differ in length");
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Invariant(format!(
                    "exact probabilities sum to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            counts,
            shots,
            exact_probs,
            seed,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn exact_probs(&self) -> Option<&[f64]> {
        self.exact_probs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.shots as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.frequency(i)).collect()
    }

    /// Most frequent outcome (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

/// Runs `shots` independent trajectories. Each call of `shot` returns one outcome
/// per stage; the result holds one count vector of length `dim` per stage.
pub fn sample_shots<F>(
    shots: u64,
    seed: u64,
    stages: usize,
    dim: usize,
    shot: F,
) -> Result<Vec<Vec<u64>>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<usize>> + Sync,
{
    if shots == 0 {
        return config_err("at least one shot is required");
    }
    let chunks = shots.div_ceil(SHOTS_PER_STREAM);
    let partials: Vec<Vec<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = shot_rng(seed, chunk);
            let n = SHOTS_PER_STREAM.min(shots - chunk * SHOTS_PER_STREAM);
            let mut counts = vec![vec![0u64; dim]; stages];
            for _ in 0..n {
                let outcomes = shot(&mut rng)?;
                for (stage, &o) in outcomes.iter().enumerate() {
                    counts[stage][o] += 1;
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![vec![0u64; dim]; stages];
    for part in partials {
        for (acc, stage) in total.iter_mut().zip(part) {
            for (a, c) in acc.iter_mut().zip(stage) {
                *a += c;
            }
        }
    }
    Ok(total)
}

/// Draws `shots` outcomes from `probs` and attaches `probs` as the exact reference.
pub fn sample_distribution(probs: &[f64], shots: u64, seed: u64) -> Result<Histogram> {
    let counts = sample_shots(shots, seed, 1, probs.len(), |rng| {
        Ok(vec![draw(probs, rng)])
    })?;
    Histogram::new(
        counts.into_iter().next().unwrap_or_default(),
        seed,
        Some(probs.to_vec()),
    )
}

/// Non-collapsing sampling of one register of `state`.
pub fn sample_histogram(
    state: &PureState,
    register: Register,
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    sample_distribution(&state.marginal(register), shots, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::RegisterLayout;

    #[test]
    fn zero_shots_is_a_config_error() {
        assert!(matches!(
            sample_distribution(&[0.5, 0.5], 0, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn basis_state_fills_one_bin() {
        let layout = RegisterLayout::new(2, 2, 0).unwrap();
        let state = PureState::basis(layout, 1, 3, 0).unwrap();
        let h = sample_histogram(&state, Register::Counter, 12_345, 9).unwrap();
        assert_eq!(h.counts(), &[0, 0, 0, 12_345]);
        assert_eq!(h.shots(), 12_345);
    }

    #[test]
    fn same_seed_same_counts() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let a = sample_distribution(&probs, 50_000, 77).unwrap();
        let b = sample_distribution(&probs, 50_000, 77).unwrap();
        let c = sample_distribution(&probs, 50_000, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts(), c.counts());
    }

    #[test]
    fn chunking_matches_a_sequential_pass() {
        let probs = [0.25, 0.25, 0.5];
        let shots = 3 * SHOTS_PER_STREAM + 17;
        let h = sample_distribution(&probs, shots, 5).unwrap();
        let mut seq = [0u64; 3];
        for chunk in 0..4 {
            let mut rng = shot_rng(5, chunk);
            let n = SHOTS_PER_STREAM.min(shots - chunk * SHOTS_PER_STREAM);
            for _ in 0..n {
                seq[draw(&probs, &mut rng)] += 1;
            }
        }
        assert_eq!(h.counts(), &seq[..]);
    }

    #[test]
    fn uniform_bins_concentrate() {
        // Bernstein plus a union bound: all four bins land within ±0.02 of 0.25
        // with probability above 0.9997.
        let h = sample_distribution(&[0.25; 4], 10_000, 2024).unwrap();
        for f in h.frequencies() {
            assert!((f - 0.25).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn exact_probs_must_be_normalized() {
        assert!(matches!(
            Histogram::new(vec![1, 1], 0, Some(vec![0.5, 0.6])),
            Err(Error::Invariant(_))
        ));
    }
}
