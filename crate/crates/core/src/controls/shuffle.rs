use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par::{self, derive_seed};
use crate::probe::{cross_validate, ProbeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleBaseline {
    pub n_permutations: usize,
    pub per_perm_acc: Vec<f64>,
    pub mean_shuffled_acc: f64,
    pub seed: u64,
}

/// `n_perms` label permutations of `0..n`; permutation `p` is drawn from
/// its own stream seeded by `(seed, p)`.
pub fn permutations(n: usize, n_perms: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..n_perms)
        .map(|p| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, p as u64)));
            perm
        })
        .collect()
}

/// Shuffled-label control: retrain and cross-validate under `n_perms` random
/// permutations of `y`, with the same CV protocol as the real probe.
pub fn shuffled_baseline(
    x: &Matrix,
    y: &[usize],
    class_order: &[String],
    config: &ProbeConfig,
    n_perms: usize,
    seed: u64,
) -> Result<ShuffleBaseline> {
    if n_perms < 1 {
        return Err(Error::Config("shuffled baseline needs at least one permutation".into()));
    }
    let perms = permutations(y.len(), n_perms, seed);
    shuffled_baseline_with(x, y, class_order, config, &perms, seed)
}

/// Shuffled baseline over explicit permutations; label `i` becomes `y[perm[i]]`.
pub fn shuffled_baseline_with(
    x: &Matrix,
    y: &[usize],
    class_order: &[String],
    config: &ProbeConfig,
    perms: &[Vec<usize>],
    seed: u64,
) -> Result<ShuffleBaseline> {
    if perms.is_empty() {
        return Err(Error::Config("shuffled baseline needs at least one permutation".into()));
    }
    let per_perm_acc = par::try_map_range(perms.len(), |p| {
        let perm = &perms[p];
        if perm.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: perm.len(),
            });
        }
        let shuffled: Vec<usize> = perm.iter().map(|&j| y[j]).collect();
        Ok(cross_validate(x, &shuffled, class_order, config)?.mean_acc)
    })?;
    let mean_shuffled_acc = per_perm_acc.iter().sum::<f64>() / per_perm_acc.len() as f64;
    Ok(ShuffleBaseline {
        n_permutations: perms.len(),
        per_perm_acc,
        mean_shuffled_acc,
        seed,
    })
}

/// Real minus shuffled accuracy, unrounded.
pub fn selectivity(real_cv_acc: f64, mean_shuffled_acc: f64) -> f64 {
    real_cv_acc - mean_shuffled_acc
}
