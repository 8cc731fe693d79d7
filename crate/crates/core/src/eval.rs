//! 1-nearest-neighbor evaluation, dimension sweeps and the robustness angle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{solve_l1blda, AdmmConfig, IterationRecord};
use crate::dataset::{LabeledDataset, NoiseSpec};
use crate::error::{check_dim, Error, Result};
use crate::projection::{Method, ProjectionMatrix};
use crate::scatter::{adaptive_weights, class_stats, l2blda_matrix, scatter_matrices};
use crate::spectral::{solve_l2blda, solve_lda, solve_pca_from_scatter};

/// Fits `method` on `data` at dimension `d`. `admm` is only read by L1BLDA.
pub fn fit(
    method: Method,
    data: &LabeledDataset,
    d: usize,
    admm: &AdmmConfig,
) -> Result<ProjectionMatrix> {
    data.check_trainable()?;
    check_dim(d, data.num_features())?;
    match method {
        Method::L1blda => Ok(solve_l1blda(data, d, admm)?.projection),
        spectral => {
            let stats = class_stats(data)?;
            match spectral {
                Method::L2blda => {
                    let weights = adaptive_weights(&stats);
                    solve_l2blda(&l2blda_matrix(data, &stats, &weights)?, d)
                }
                Method::Lda => solve_lda(&scatter_matrices(data, &stats)?, d),
                _ => solve_pca_from_scatter(&scatter_matrices(data, &stats)?.s_t, d),
            }
        }
    }
}

fn nearest(train: &DMatrix<f64>, x: &DVector<f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, col) in train.column_iter().enumerate() {
        let dist = (col - x).norm_squared();
        // Strict comparison keeps the lowest index on ties.
        if dist < best.0 {
            best = (dist, k);
        }
    }
    best.1
}

/// Nearest-training-sample labels for already projected samples (`d x N`).
pub fn knn1_predict(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    test: &DMatrix<f64>,
) -> Result<Vec<usize>> {
    if train.ncols() == 0 || test.ncols() == 0 {
        return Err(Error::EmptyInput(
            "1-NN needs nonempty train and test sets".into(),
        ));
    }
    if train.nrows() != test.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "train projected to {} dims, test to {}",
            train.nrows(),
            test.nrows()
        )));
    }
    Ok((0..test.ncols())
        .into_par_iter()
        .map(|l| train_labels[nearest(train, &test.column(l).into_owned())])
        .collect())
}

/// Number of correctly classified test samples.
pub fn knn1_correct(
    train: &LabeledDataset,
    test: &LabeledDataset,
    w: &ProjectionMatrix,
) -> Result<usize> {
    if train.num_classes() != test.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} classes, test {}",
            train.num_classes(),
            test.num_classes()
        )));
    }
    let predicted = knn1_predict(&w.project(train)?, train.labels(), &w.project(test)?)?;
    Ok(predicted
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p == y)
        .count())
}

/// 1-NN accuracy in percent.
pub fn knn1_accuracy(
    train: &LabeledDataset,
    test: &LabeledDataset,
    w: &ProjectionMatrix,
) -> Result<f64> {
    let correct = knn1_correct(train, test, w)?;
    Ok(100.0 * correct as f64 / test.num_samples() as f64)
}

/// Leave-one-out 1-NN accuracy on the projected data itself, in percent.
pub fn loo_accuracy(data: &LabeledDataset, w: &ProjectionMatrix) -> Result<f64> {
    let proj = w.project(data)?;
    let n = proj.ncols();
    if n < 2 {
        return Err(Error::EmptyInput(
            "leave-one-out needs at least two samples".into(),
        ));
    }
    let labels = data.labels();
    let correct = (0..n)
        .into_par_iter()
        .filter(|&l| {
            let x = proj.column(l);
            let mut best = (f64::INFINITY, 0);
            for (k, col) in proj.column_iter().enumerate() {
                if k == l {
                    continue;
                }
                let dist = (col - x).norm_squared();
                if dist < best.0 {
                    best = (dist, k);
                }
            }
            labels[best.1] == labels[l]
        })
        .count();
    Ok(100.0 * correct as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimAccuracy {
    pub dim: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub per_dim: Vec<DimAccuracy>,
    /// Highest accuracy, smallest dimension on ties.
    pub best: DimAccuracy,
    pub dataset: String,
    pub noise: Option<String>,
    pub seed: u64,
}

/// Best entry of a curve; ties go to the smallest dimension.
pub fn best_of(per_dim: &[DimAccuracy]) -> Option<DimAccuracy> {
    per_dim
        .iter()
        .copied()
        .fold(None, |best: Option<DimAccuracy>, e| match best {
            Some(b) if b.accuracy > e.accuracy || (b.accuracy == e.accuracy && b.dim <= e.dim) => {
                Some(b)
            }
            _ => Some(e),
        })
}

/// Accuracy for every `d` in `1..=d_max`. Spectral methods are fitted once
/// at `d_max` and evaluated on column prefixes; L1BLDA is refitted per `d`.
pub fn dim_sweep(
    train: &LabeledDataset,
    test: &LabeledDataset,
    method: Method,
    d_max: usize,
    admm: &AdmmConfig,
) -> Result<ExperimentReport> {
    Ok(dim_sweep_traced(train, test, method, d_max, admm)?.0)
}

/// ADMM iteration traces of an L1BLDA sweep, one per dimension.
pub type SweepTraces = Vec<(usize, Vec<IterationRecord>)>;

/// [`dim_sweep`], also returning the ADMM traces (empty for spectral methods).
pub fn dim_sweep_traced(
    train: &LabeledDataset,
    test: &LabeledDataset,
    method: Method,
    d_max: usize,
    admm: &AdmmConfig,
) -> Result<(ExperimentReport, SweepTraces)> {
    check_dim(d_max, train.num_features())?;
    let mut traces = Vec::new();
    let mut per_dim = Vec::with_capacity(d_max);
    if method.is_nested() {
        let full = fit(method, train, d_max, admm)?;
        for d in 1..=d_max {
            per_dim.push(DimAccuracy {
                dim: d,
                accuracy: knn1_accuracy(train, test, &full.prefix(d))?,
            });
        }
    } else {
        train.check_trainable()?;
        for d in 1..=d_max {
            let fitted = solve_l1blda(train, d, admm)?;
            per_dim.push(DimAccuracy {
                dim: d,
                accuracy: knn1_accuracy(train, test, &fitted.projection)?,
            });
            traces.push((d, fitted.trace));
        }
    }
    let report = ExperimentReport {
        method,
        best: best_of(&per_dim).expect("d_max >= 1"),
        per_dim,
        dataset: train.name().to_string(),
        noise: None,
        seed: admm.seed,
    };
    Ok((report, traces))
}

impl ExperimentReport {
    pub fn with_noise(mut self, noise: Option<&NoiseSpec>) -> Self {
        self.noise = noise.map(NoiseSpec::label);
        self
    }
}

/// Acute angle between two directions, in degrees, ignoring sign.
pub fn acute_angle_deg(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let cos = (u.dot(v) / (u.norm() * v.norm())).abs().min(1.0);
    cos.acos().to_degrees()
}

/// Angle between the 1-D directions fitted on `clean` and on `dirty`.
pub fn robustness_angle_with(
    clean: &LabeledDataset,
    dirty: &LabeledDataset,
    method: Method,
    admm: &AdmmConfig,
) -> Result<f64> {
    for data in [clean, dirty] {
        if data.num_features() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "robustness angle is defined for 2-D data, {} has {} features",
                data.name(),
                data.num_features()
            )));
        }
    }
    let a = fit(method, clean, 1, admm)?;
    let b = fit(method, dirty, 1, admm)?;
    Ok(acute_angle_deg(
        &a.w.column(0).into_owned(),
        &b.w.column(0).into_owned(),
    ))
}

/// [`robustness_angle_with`] under the default ADMM settings and `seed`.
pub fn robustness_angle(
    clean: &LabeledDataset,
    dirty: &LabeledDataset,
    method: Method,
    seed: u64,
) -> Result<f64> {
    let admm = AdmmConfig {
        seed,
        ..AdmmConfig::default()
    };
    robustness_angle_with(clean, dirty, method, &admm)
}
