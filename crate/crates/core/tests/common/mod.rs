//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use blda::dataset::LabeledDataset;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * a.norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Column-orthonormal matrix by classical Gram-Schmidt of Gaussian columns.
pub fn random_orthonormal<R: Rng>(rng: &mut R, n: usize, d: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        for c in &cols {
            let proj = c.dot(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// Random labeled data; every class gets at least one sample.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, big_n: usize, c: usize) -> LabeledDataset {
    assert!(big_n >= c);
    let mut labels: Vec<usize> = (1..=c).collect();
    labels.extend((c..big_n).map(|_| rng.random_range(1..=c)));
    let shift: Vec<f64> = (0..c * n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let x = DMatrix::from_fn(n, big_n, |r, l| {
        shift[(labels[l] - 1) * n + r] + rng.random_range(-1.0..1.0)
    });
    LabeledDataset::new("random", x, labels, c).unwrap()
}

/// Class means, global mean and priors straight from the definitions.
pub struct NaiveStats {
    pub means: Vec<DVector<f64>>,
    pub global: DVector<f64>,
    pub priors: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn naive_stats(data: &LabeledDataset) -> NaiveStats {
    let n = data.num_features();
    let c = data.num_classes();
    let big_n = data.num_samples();
    let mut means = vec![DVector::zeros(n); c];
    let mut counts = vec![0usize; c];
    let mut global = DVector::zeros(n);
    for l in 0..big_n {
        let y = data.labels()[l] - 1;
        let x = data.sample(l);
        means[y] += &x;
        counts[y] += 1;
        global += x;
    }
    for (m, &k) in means.iter_mut().zip(&counts) {
        *m /= k as f64;
    }
    global /= big_n as f64;
    let priors = counts.iter().map(|&k| k as f64 / big_n as f64).collect();
    NaiveStats {
        means,
        global,
        priors,
        counts,
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
