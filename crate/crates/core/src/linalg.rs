//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvector columns in the same order.
pub fn sym_eigen_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn canonicalize_signs(w: &mut DMatrix<f64>) {
    for mut col in w.column_iter_mut() {
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// `U V^T` from the thin SVD `M = U S V^T`: the maximizer of `tr(W^T M)`
/// over column-orthonormal `W`.
pub fn polar_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    u * v_t
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().sum()
}

/// `||W^T W - I||_F`.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    (gram - DMatrix::identity(w.ncols(), w.ncols())).norm()
}

/// Modified Gram-Schmidt on the columns, in order, so that every prefix of
/// the output spans the same subspace as the matching prefix of the input.
/// Columns that are numerically dependent on earlier ones are replaced by
/// the first standard basis vector that is not.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    let project_out = |v: &mut DVector<f64>, q: &[DVector<f64>]| {
        for _ in 0..2 {
            for b in q {
                let c = b.dot(v);
                v.axpy(-c, b, 1.0);
            }
        }
    };
    for col in m.column_iter() {
        let mut v = col.into_owned();
        let scale = v.norm();
        project_out(&mut v, &q);
        let mut norm = v.norm();
        if !(norm > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
            for e in 0..n {
                let mut cand = DVector::zeros(n);
                cand[e] = 1.0;
                project_out(&mut cand, &q);
                if cand.norm() > 1e-6 {
                    v = cand;
                    norm = v.norm();
                    break;
                }
            }
        }
        q.push(v / norm);
    }
    DMatrix::from_columns(&q)
}
