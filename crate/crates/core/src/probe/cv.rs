use serde::{Deserialize, Serialize};

use super::linear::{train_probe, ProbeConfig};
use crate::corpus::split::stratified_folds;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Per-fold accuracies with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub per_fold_acc: Vec<f64>,
    pub mean_acc: f64,
    pub std_acc: f64,
}

impl CvResult {
    pub fn from_folds(per_fold_acc: Vec<f64>) -> Self {
        let k = per_fold_acc.len() as f64;
        let mean_acc = per_fold_acc.iter().sum::<f64>() / k;
        let var = per_fold_acc.iter().map(|a| (a - mean_acc).powi(2)).sum::<f64>() / k;
        Self {
            per_fold_acc,
            mean_acc,
            std_acc: var.sqrt(),
        }
    }
}

/// Stratified k-fold CV. Each fold fits its own standardiser and probe on the
/// training portion and scores the held-out portion.
pub fn cross_validate(x: &Matrix, y: &[usize], class_order: &[String], config: &ProbeConfig) -> Result<CvResult> {
    config.validate()?;
    let folds = stratified_folds(y, config.k_folds, config.seed)?;
    cross_validate_with_folds(x, y, class_order, config, &folds)
}

/// CV over a precomputed fold assignment (`folds[i]` is row i's fold).
pub fn cross_validate_with_folds(
    x: &Matrix,
    y: &[usize],
    class_order: &[String],
    config: &ProbeConfig,
    folds: &[usize],
) -> Result<CvResult> {
    if x.rows() != y.len() || folds.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len().min(folds.len()),
        });
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    let accs = par::try_map_range(k, |f| {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let val: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let overlap = train.iter().filter(|i| folds[**i] == f).count();
        if overlap > 0 {
            return Err(Error::Leakage(overlap));
        }
        let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let y_val: Vec<usize> = val.iter().map(|&i| y[i]).collect();
        let probe = train_probe(&x.select_rows(&train), &y_train, class_order, config)?;
        probe.accuracy(&x.select_rows(&val), &y_val)
    })?;
    Ok(CvResult::from_folds(accs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn separable_data_is_perfect() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [if i % 2 == 0 { -2.0 } else { 2.0 }, (i as f64).sin()]).collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let r = cross_validate(&x, &y, &classes(), &ProbeConfig::default()).unwrap();
        assert_eq!(r.mean_acc, 1.0);
        assert_eq!(r.per_fold_acc.len(), 5);
    }

    #[test]
    fn null_labels_near_chance_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..5).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        let y: Vec<usize> = (0..120).map(|i| i % 2).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = ProbeConfig { seed: 9, ..Default::default() };
        let r = cross_validate(&x, &y, &classes(), &cfg).unwrap();
        assert!((0.35..=0.65).contains(&r.mean_acc), "{r:?}");
        let again = cross_validate(&x, &y, &classes(), &cfg).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn too_few_per_class() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        assert!(cross_validate(&x, &[0, 0, 1, 1], &classes(), &ProbeConfig::default()).is_err());
    }

    #[test]
    fn summary_recomputable() {
        let r = CvResult::from_folds(vec![1.0, 0.5, 0.75, 0.75]);
        assert_eq!(r.mean_acc, 0.75);
        assert!((r.std_acc - (0.125f64 / 4.0).sqrt()).abs() < 1e-15);
    }
}
