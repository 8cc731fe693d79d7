//! Class statistics, scatter matrices, the adaptive weights and the matrices
//! handed to the solvers.
//!
//! Summation order is fixed everywhere: classes ascending, pairs `(i, j)` with
//! `i < j` in lexicographic order, samples by column index.

use nalgebra::{DMatrix, DVector};

use crate::admm::AdmmState;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::symmetrize;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub global_mean: DVector<f64>,
    pub class_means: Vec<DVector<f64>>,
    pub counts: Vec<usize>,
    pub priors: Vec<f64>,
    pub n: usize,
    pub total: usize,
    pub c: usize,
}

impl ClassStats {
    /// Class pairs `(i, j)`, `i < j`, 0-based, lexicographic.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        class_pairs(self.c)
    }

    /// `sqrt(N_i N_j) / N` for a pair.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        ((self.counts[i] * self.counts[j]) as f64).sqrt() / self.total as f64
    }

    pub fn mean_difference(&self, i: usize, j: usize) -> DVector<f64> {
        &self.class_means[i] - &self.class_means[j]
    }

    /// Columns `x̄_i - x̄_j` for every pair, `n x P`.
    pub fn pair_differences(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .pairs()
            .iter()
            .map(|&(i, j)| self.mean_difference(i, j))
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(self.n, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}

pub fn class_pairs(c: usize) -> Vec<(usize, usize)> {
    (0..c)
        .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSet {
    pub s_b: DMatrix<f64>,
    pub s_w: DMatrix<f64>,
    pub s_t: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveWeights {
    pub delta: f64,
    pub omega: f64,
}

pub fn class_stats(data: &LabeledDataset) -> Result<ClassStats> {
    data.check_trainable()?;
    let x = data.features();
    let n = data.num_features();
    let total = data.num_samples();
    let mut global = DVector::zeros(n);
    for col in x.column_iter() {
        global += col;
    }
    global /= total as f64;
    let mut class_means = Vec::with_capacity(data.num_classes());
    let mut counts = Vec::with_capacity(data.num_classes());
    for members in data.class_index() {
        let mut m = DVector::zeros(n);
        for &l in members {
            m += x.column(l);
        }
        m /= members.len() as f64;
        class_means.push(m);
        counts.push(members.len());
    }
    let priors = counts.iter().map(|&k| k as f64 / total as f64).collect();
    Ok(ClassStats {
        global_mean: global,
        class_means,
        counts,
        priors,
        n,
        total,
        c: data.num_classes(),
    })
}

/// Within-class deviations `x_l - x̄_{y_l}`, one column per sample.
pub fn centered_within(data: &LabeledDataset, stats: &ClassStats) -> DMatrix<f64> {
    let mut e = data.features().clone();
    for (l, mut col) in e.column_iter_mut().enumerate() {
        col -= &stats.class_means[data.labels()[l] - 1];
    }
    e
}

/// `sum_l e_l e_l^T` without normalization.
pub fn within_outer_sum(data: &LabeledDataset, stats: &ClassStats) -> DMatrix<f64> {
    let e = centered_within(data, stats);
    symmetrize(&(&e * e.transpose()))
}

fn check_stats(data: &LabeledDataset, stats: &ClassStats) -> Result<()> {
    if stats.n != data.num_features()
        || stats.total != data.num_samples()
        || stats.c != data.num_classes()
    {
        return Err(Error::DimensionMismatch(
            "class statistics do not belong to this dataset".into(),
        ));
    }
    Ok(())
}

pub fn scatter_matrices(data: &LabeledDataset, stats: &ClassStats) -> Result<ScatterSet> {
    check_stats(data, stats)?;
    let n = stats.n;
    let total = stats.total as f64;
    let mut s_b = DMatrix::zeros(n, n);
    for (m, &count) in stats.class_means.iter().zip(&stats.counts) {
        let dev = m - &stats.global_mean;
        s_b.ger(count as f64 / total, &dev, &dev, 1.0);
    }
    let s_w = within_outer_sum(data, stats) / total;
    let mut t = data.features().clone();
    for mut col in t.column_iter_mut() {
        col -= &stats.global_mean;
    }
    let s_t = symmetrize(&(&t * t.transpose())) / total;
    Ok(ScatterSet {
        s_b: symmetrize(&s_b),
        s_w,
        s_t,
    })
}

pub fn adaptive_weights(stats: &ClassStats) -> AdaptiveWeights {
    let mut delta = 0.0;
    let mut l1 = 0.0;
    for (i, j) in stats.pairs() {
        let w = (stats.priors[i] * stats.priors[j]).sqrt();
        let diff = stats.mean_difference(i, j);
        delta += w * diff.norm_squared();
        l1 += w * diff.lp_norm(1);
    }
    AdaptiveWeights {
        delta: delta / 4.0,
        omega: (stats.n as f64).sqrt() / 4.0 * l1,
    }
}

/// The L2BLDA matrix
/// `S = -(1/N) sum_{i<j} sqrt(N_i N_j) d_ij d_ij^T + delta * sum_l e_l e_l^T`.
/// The within-class term carries no `1/N`.
pub fn l2blda_matrix(
    data: &LabeledDataset,
    stats: &ClassStats,
    weights: &AdaptiveWeights,
) -> Result<DMatrix<f64>> {
    check_stats(data, stats)?;
    let mut s = within_outer_sum(data, stats) * weights.delta;
    for (i, j) in stats.pairs() {
        let diff = stats.mean_difference(i, j);
        s.ger(-stats.pair_weight(i, j), &diff, &diff, 1.0);
    }
    Ok(symmetrize(&s))
}

/// `G = sum_{i<j} (N_i N_j / N^2) d_ij d_ij^T + sum_l e_l e_l^T + I`.
pub fn admm_g_matrix(data: &LabeledDataset, stats: &ClassStats) -> Result<DMatrix<f64>> {
    check_stats(data, stats)?;
    let mut g = within_outer_sum(data, stats);
    for (i, j) in stats.pairs() {
        let diff = stats.mean_difference(i, j);
        let w = stats.pair_weight(i, j);
        g.ger(w * w, &diff, &diff, 1.0);
    }
    for k in 0..stats.n {
        g[(k, k)] += 1.0;
    }
    Ok(symmetrize(&g))
}

/// The linear-term matrix `A` of the W-subproblem, as printed:
/// `A = sum_{i<j} (sqrt(N_i N_j)/N) d_ij (B_ij - α_ij)^T + sum_l e_l (Z_l - β_l)^T + (D + Γ)`.
///
/// With this sign the scaled Lagrangian in `W` reads
/// `(ρ/2) [tr(W^T G W) - 2 tr(A^T W)] + const`.
pub fn admm_a_matrix(
    data: &LabeledDataset,
    stats: &ClassStats,
    state: &AdmmState,
) -> Result<DMatrix<f64>> {
    check_stats(data, stats)?;
    let n = stats.n;
    let d = state.w.ncols();
    let pairs = stats.pairs();
    if state.b_blocks.shape() != (d, pairs.len())
        || state.alpha.shape() != (d, pairs.len())
        || state.z_blocks.shape() != (d, stats.total)
        || state.beta.shape() != (d, stats.total)
        || state.dmat.shape() != (n, d)
        || state.gamma.shape() != (n, d)
        || state.w.nrows() != n
    {
        return Err(Error::DimensionMismatch(
            "ADMM state does not match the dataset".into(),
        ));
    }
    let mut a = &state.dmat + &state.gamma;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let diff = stats.mean_difference(i, j);
        let target = state.b_blocks.column(p) - state.alpha.column(p);
        a.ger(stats.pair_weight(i, j), &diff, &target, 1.0);
    }
    let e = centered_within(data, stats);
    a += e * (&state.z_blocks - &state.beta).transpose();
    Ok(a)
}

/// Both matrices of the W-subproblem for the current iterate.
pub fn admm_w_matrices(
    data: &LabeledDataset,
    stats: &ClassStats,
    current: &AdmmState,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((
        admm_g_matrix(data, stats)?,
        admm_a_matrix(data, stats, current)?,
    ))
}
