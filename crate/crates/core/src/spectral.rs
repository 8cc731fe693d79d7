//! Eigendecomposition-based solvers: L2BLDA, classical LDA and PCA.

use nalgebra::{DMatrix, DVector};

use crate::dataset::LabeledDataset;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{canonicalize_signs, orthonormalize_columns, sym_eigen_ascending};
use crate::projection::{Method, ProjectionMatrix};
use crate::scatter::{class_stats, scatter_matrices, ScatterSet};

/// Relative cutoff below which an eigenvalue of `S_w` counts as zero.
pub const PINV_RTOL: f64 = 1e-10;

fn check_square(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            iteration: 0,
            what: "input matrix".into(),
        });
    }
    Ok(())
}

/// Minimizes `tr(W^T S W)` over column-orthonormal `W`: the eigenvectors of
/// the `d` algebraically smallest eigenvalues, ascending.
pub fn solve_l2blda(s: &DMatrix<f64>, d: usize) -> Result<ProjectionMatrix> {
    check_square(s)?;
    check_dim(d, s.nrows())?;
    let (values, vectors) = sym_eigen_ascending(s);
    let mut w = vectors.columns(0, d).into_owned();
    canonicalize_signs(&mut w);
    let spectrum: Vec<f64> = values.iter().take(d).copied().collect();
    Ok(ProjectionMatrix {
        objective: (w.transpose() * s * &w).trace(),
        w,
        method: Method::L2blda,
        spectrum,
    })
}

/// Generalized eigenpairs of `S_b w = λ S_w w`, largest first.
///
/// On the range of `S_w` the pencil is reduced through the whitening
/// `T = V_r Λ_r^{-1/2}`, which matches the eigenvectors of `pinv(S_w) S_b`
/// with nonzero eigenvalue. Directions in the null space of `S_w` are
/// appended with eigenvalue 0. Vectors are `S_w`-orthonormal on the range.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Numerical rank of `S_w`.
    pub rank: usize,
}

pub fn lda_generalized_eigen(scatters: &ScatterSet) -> Result<GeneralizedEigen> {
    check_square(&scatters.s_b)?;
    check_square(&scatters.s_w)?;
    let n = scatters.s_w.nrows();
    let (w_vals, w_vecs) = sym_eigen_ascending(&scatters.s_w);
    let top = w_vals.iter().copied().fold(0.0f64, f64::max);
    if top <= 0.0 {
        // No within-class spread at all: fall back to the between-class axes.
        let (_, b_vecs) = sym_eigen_ascending(&scatters.s_b);
        let order: Vec<usize> = (0..n).rev().collect();
        return Ok(GeneralizedEigen {
            values: vec![0.0; n],
            vectors: b_vecs.select_columns(&order),
            rank: 0,
        });
    }
    let tol = PINV_RTOL * top;
    let range: Vec<usize> = (0..n).filter(|&k| w_vals[k] > tol).collect();
    let null: Vec<usize> = (0..n).filter(|&k| w_vals[k] <= tol).rev().collect();
    let scale = DVector::from_iterator(range.len(), range.iter().map(|&k| 1.0 / w_vals[k].sqrt()));
    let t = w_vecs.select_columns(&range) * DMatrix::from_diagonal(&scale);
    let reduced = t.transpose() * &scatters.s_b * &t;
    let (r_vals, r_vecs) = sym_eigen_ascending(&reduced);
    let r = range.len();
    let mut columns = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in (0..r).rev() {
        values.push(r_vals[k]);
        columns.push(&t * r_vecs.column(k));
    }
    for &k in &null {
        values.push(0.0);
        columns.push(w_vecs.column(k).into_owned());
    }
    Ok(GeneralizedEigen {
        values,
        vectors: DMatrix::from_columns(&columns),
        rank: r,
    })
}

/// Classical LDA: the leading `d` generalized eigenvectors of `(S_b, S_w)`,
/// orthonormalized in order. The objective is the trace ratio at `W`.
pub fn solve_lda(scatters: &ScatterSet, d: usize) -> Result<ProjectionMatrix> {
    let n = scatters.s_b.nrows();
    check_dim(d, n)?;
    let eig = lda_generalized_eigen(scatters)?;
    let mut w = orthonormalize_columns(&eig.vectors.columns(0, d).into_owned());
    canonicalize_signs(&mut w);
    let num = (w.transpose() * &scatters.s_b * &w).trace();
    let den = (w.transpose() * &scatters.s_w * &w).trace();
    let objective = if den > f64::MIN_POSITIVE {
        num / den
    } else {
        f64::INFINITY
    };
    Ok(ProjectionMatrix {
        w,
        method: Method::Lda,
        objective,
        spectrum: eig.values.into_iter().take(d).collect(),
    })
}

/// PCA from the total scatter `S_t` (1/N convention), eigenvalues descending.
pub fn solve_pca_from_scatter(s_t: &DMatrix<f64>, d: usize) -> Result<ProjectionMatrix> {
    check_square(s_t)?;
    let n = s_t.nrows();
    check_dim(d, n)?;
    let (values, vectors) = sym_eigen_ascending(s_t);
    let order: Vec<usize> = (0..n).rev().take(d).collect();
    let mut w = vectors.select_columns(&order);
    canonicalize_signs(&mut w);
    Ok(ProjectionMatrix {
        objective: (w.transpose() * s_t * &w).trace(),
        w,
        method: Method::Pca,
        spectrum: order.iter().map(|&k| values[k]).collect(),
    })
}

pub fn solve_pca(data: &LabeledDataset, d: usize) -> Result<ProjectionMatrix> {
    let stats = class_stats(data)?;
    let scatters = scatter_matrices(data, &stats)?;
    solve_pca_from_scatter(&scatters.s_t, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_error;

    #[test]
    fn l2blda_diagonal_case() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, -2.0, 1.0]));
        let p = solve_l2blda(&s, 1).unwrap();
        assert_eq!(
            p.w.column(0).iter().map(|v| v.abs()).collect::<Vec<_>>(),
            vec![0.0, 1.0, 0.0]
        );
        assert!((p.objective + 2.0).abs() < 1e-12);
        let s = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0]);
        let p = solve_l2blda(&s, 1).unwrap();
        assert_eq!(p.w[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn d_larger_than_n_is_an_error() {
        let s = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            solve_l2blda(&s, 3),
            Err(Error::DimensionTooLarge { d: 3, n: 2 })
        ));
        assert!(matches!(
            solve_pca_from_scatter(&s, 3),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn lda_whitened_case_follows_mean_difference() {
        let dvec = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let scatters = ScatterSet {
            s_b: &dvec * dvec.transpose() * 0.25,
            s_w: DMatrix::identity(3, 3) * 0.3,
            s_t: DMatrix::zeros(3, 3),
        };
        let p = solve_lda(&scatters, 1).unwrap();
        let cos = p.w.column(0).dot(&dvec).abs() / dvec.norm();
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lda_singular_within_scatter_uses_pseudo_inverse() {
        let scatters = ScatterSet {
            s_b: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            s_w: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            s_t: DMatrix::zeros(2, 2),
        };
        let eig = lda_generalized_eigen(&scatters).unwrap();
        assert_eq!(eig.rank, 1);
        let p = solve_lda(&scatters, 2).unwrap();
        assert!(orthonormality_error(&p.w) < 1e-12);
    }

    #[test]
    fn pca_on_a_line() {
        let x = DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 2.0, 3.0, 0.0, 2.0, 4.0, 6.0]);
        let d = LabeledDataset::new("line", x, vec![1, 1, 2, 2], 2).unwrap();
        let p = solve_pca(&d, 1).unwrap();
        let dir = DVector::from_vec(vec![1.0, 2.0]).normalize();
        assert!((p.w.column(0).dot(&dir).abs() - 1.0).abs() < 1e-12);
    }
}
