mod common;

use blda::admm::AdmmConfig;
use blda::bench::{
    read_runs_csv, run_bench, summarize, DatasetEntry, DatasetSource, RunConfig, SplitConfig, CLEAN,
};
use blda::dataset::{iris, normalize_minmax, split, LabeledDataset};
use blda::eval::{dim_sweep, fit, knn1_correct};
use blda::linalg::{nuclear_norm, orthonormality_error, polar_factor};
use blda::procrustes::{solve_unbalanced, WSubproblem};
use blda::scatter::{
    adaptive_weights, admm_g_matrix, class_stats, l2blda_matrix, scatter_matrices,
};
use blda::spectral::{lda_generalized_eigen, solve_l2blda, solve_pca};
use blda::{Method, ProjectionMatrix};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn class_stats_match_definitions() {
    let mut r = rng(1);
    for _ in 0..20 {
        let data = random_dataset(&mut r, 5, 60, 4);
        let stats = class_stats(&data).unwrap();
        let naive = naive_stats(&data);
        assert_eq!(stats.counts, naive.counts);
        assert!((stats.priors.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((&stats.global_mean - &naive.global).amax() < 1e-12);
        for (a, b) in stats.class_means.iter().zip(&naive.means) {
            assert!((a - b).amax() < 1e-12);
        }
    }
}

#[test]
fn scatter_matrices_match_definitions() {
    let mut r = rng(2);
    for _ in 0..20 {
        let data = random_dataset(&mut r, 4, 50, 3);
        let naive = naive_stats(&data);
        let big_n = data.num_samples() as f64;
        let n = data.num_features();
        let mut s_b = DMatrix::zeros(n, n);
        for (m, p) in naive.means.iter().zip(&naive.priors) {
            let d = m - &naive.global;
            s_b += &d * d.transpose() * *p;
        }
        let mut s_w = DMatrix::zeros(n, n);
        let mut s_t = DMatrix::zeros(n, n);
        for l in 0..data.num_samples() {
            let x = data.sample(l);
            let e = &x - &naive.means[data.labels()[l] - 1];
            s_w += &e * e.transpose() / big_n;
            let t = &x - &naive.global;
            s_t += &t * t.transpose() / big_n;
        }
        let got = scatter_matrices(&data, &class_stats(&data).unwrap()).unwrap();
        assert!(max_abs_diff(&got.s_b, &s_b) < 1e-10);
        assert!(max_abs_diff(&got.s_w, &s_w) < 1e-10);
        assert!(max_abs_diff(&got.s_t, &s_t) < 1e-10);
    }
}

fn naive_l2blda(data: &LabeledDataset) -> DMatrix<f64> {
    let naive = naive_stats(data);
    let n = data.num_features();
    let c = data.num_classes();
    let big_n = data.num_samples() as f64;
    let mut delta = 0.0;
    let mut between = DMatrix::zeros(n, n);
    for i in 0..c {
        for j in i + 1..c {
            let d = &naive.means[i] - &naive.means[j];
            delta += (naive.priors[i] * naive.priors[j]).sqrt() * d.norm_squared() / 4.0;
            let w = ((naive.counts[i] * naive.counts[j]) as f64).sqrt() / big_n;
            between += &d * d.transpose() * w;
        }
    }
    let mut within = DMatrix::zeros(n, n);
    for l in 0..data.num_samples() {
        let e = data.sample(l) - &naive.means[data.labels()[l] - 1];
        within += &e * e.transpose();
    }
    within * delta - between
}

#[test]
fn l2blda_matrix_matches_loop() {
    let mut r = rng(3);
    for _ in 0..20 {
        let data = random_dataset(&mut r, 5, 40, 4);
        let stats = class_stats(&data).unwrap();
        let s = l2blda_matrix(&data, &stats, &adaptive_weights(&stats)).unwrap();
        let expect = naive_l2blda(&data);
        assert!(max_abs_diff(&s, &expect) < 1e-10 * expect.amax().max(1.0));
    }
}

#[test]
fn admm_g_dominates_identity() {
    let mut r = rng(4);
    for _ in 0..20 {
        let data = random_dataset(&mut r, 6, 40, 3);
        let g = admm_g_matrix(&data, &class_stats(&data).unwrap()).unwrap();
        let mut shifted = g.clone();
        for k in 0..g.nrows() {
            shifted[(k, k)] -= 1.0;
        }
        assert!(jacobi_eigenvalues(&shifted)[0] >= -1e-10);
        assert!(max_abs_diff(&g, &g.transpose()) == 0.0);
    }
}

#[test]
fn sample_order_does_not_change_scatters() {
    let mut r = rng(5);
    for _ in 0..10 {
        let data = random_dataset(&mut r, 4, 30, 3);
        let mut order: Vec<usize> = (0..data.num_samples()).collect();
        order.shuffle(&mut r);
        let shuffled = data.subset(&order);
        let a = scatter_matrices(&data, &class_stats(&data).unwrap()).unwrap();
        let b = scatter_matrices(&shuffled, &class_stats(&shuffled).unwrap()).unwrap();
        assert!(max_abs_diff(&a.s_b, &b.s_b) < 1e-12);
        assert!(max_abs_diff(&a.s_w, &b.s_w) < 1e-12);
        let sa = class_stats(&data).unwrap();
        let sb = class_stats(&shuffled).unwrap();
        let (wa, wb) = (adaptive_weights(&sa), adaptive_weights(&sb));
        assert!((wa.delta - wb.delta).abs() < 1e-12 && (wa.omega - wb.omega).abs() < 1e-12);
    }
}

#[test]
fn relabeling_classes_changes_nothing() {
    let mut r = rng(6);
    for _ in 0..10 {
        let data = random_dataset(&mut r, 4, 40, 4);
        let perm = [3usize, 1, 4, 2];
        let labels: Vec<usize> = data.labels().iter().map(|&y| perm[y - 1]).collect();
        let relabeled =
            LabeledDataset::new("relabeled", data.features().clone(), labels, 4).unwrap();
        let a = naive_l2blda(&data);
        let sa = class_stats(&data).unwrap();
        let sb = class_stats(&relabeled).unwrap();
        let b = l2blda_matrix(&relabeled, &sb, &adaptive_weights(&sb)).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-10 * a.amax().max(1.0));
        let (wa, wb) = (adaptive_weights(&sa), adaptive_weights(&sb));
        assert!((wa.omega - wb.omega).abs() < 1e-12);

        let w = fit(Method::L2blda, &data, 2, &AdmmConfig::default()).unwrap();
        assert_eq!(
            knn1_correct(&data, &data, &w).unwrap(),
            knn1_correct(&relabeled, &relabeled, &w).unwrap()
        );
    }
}

proptest! {
    #[test]
    fn weights_scale_with_data(seed in 0u64..1000, t in 0.1f64..10.0) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, 3, 20, 3);
        let scaled = data.map_features(data.features() * t);
        let a = adaptive_weights(&class_stats(&data).unwrap());
        let b = adaptive_weights(&class_stats(&scaled).unwrap());
        prop_assert!((b.delta - t * t * a.delta).abs() <= 1e-10 * b.delta.max(1.0));
        prop_assert!((b.omega - t * a.omega).abs() <= 1e-10 * b.omega.max(1.0));
    }

    #[test]
    fn nearest_neighbor_ignores_rotations(seed in 0u64..1000) {
        let mut r = rng(seed);
        let train = random_dataset(&mut r, 4, 30, 3);
        let test = random_dataset(&mut r, 4, 20, 3);
        let w = fit(Method::Pca, &train, 3, &AdmmConfig::default()).unwrap();
        let q = random_orthonormal(&mut r, 3, 3);
        let rotated = ProjectionMatrix { w: &w.w * q, ..w.clone() };
        prop_assert_eq!(knn1_correct(&train, &test, &w).unwrap(), knn1_correct(&train, &test, &rotated).unwrap());
    }
}

#[test]
fn l2blda_beats_random_frames_and_is_an_eigenbasis() {
    let mut r = rng(7);
    for _ in 0..5 {
        let s = random_symmetric(&mut r, 6);
        let fitted = solve_l2blda(&s, 3).unwrap();
        let w = &fitted.w;
        assert!(orthonormality_error(w) < 1e-10);
        let residual =
            &s * w - w * DMatrix::from_diagonal(&DVector::from_vec(fitted.spectrum.clone()));
        assert!(residual.norm() <= 1e-8 * s.norm().max(1.0));
        let expect: f64 = jacobi_eigenvalues(&s)[..3].iter().sum();
        assert!((fitted.objective - expect).abs() < 1e-8);
        for _ in 0..2000 {
            let v = random_orthonormal(&mut r, 6, 3);
            assert!(fitted.objective <= (v.transpose() * &s * &v).trace() + 1e-9);
        }
    }
}

#[test]
fn lda_pencil_residuals_are_small() {
    let mut r = rng(8);
    for _ in 0..10 {
        let data = random_dataset(&mut r, 5, 60, 4);
        let sc = scatter_matrices(&data, &class_stats(&data).unwrap()).unwrap();
        let eig = lda_generalized_eigen(&sc).unwrap();
        assert_eq!(eig.rank, 5);
        for (k, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(k);
            let res = &sc.s_b * v - &sc.s_w * v * lambda;
            assert!(res.norm() / v.norm() <= 1e-6, "column {k}: {}", res.norm());
        }
        // Rank of S_b is c - 1 = 3.
        assert!(eig.values[3..].iter().all(|v| v.abs() <= 1e-8));
    }
}

#[test]
fn pca_at_full_dimension_reconstructs_data() {
    let mut r = rng(9);
    let data = random_dataset(&mut r, 5, 30, 2);
    let w = solve_pca(&data, 5).unwrap().w;
    let x = data.features();
    assert!((&w * w.transpose() * x - x).amax() < 1e-10);
}

#[test]
fn polar_factor_maximizes_trace_with_nuclear_norm() {
    let mut r = rng(10);
    for _ in 0..5 {
        let m = DMatrix::from_fn(5, 2, |_, _| r.random_range(-1.0..1.0));
        let w = polar_factor(&m);
        let best = (w.transpose() * &m).trace();
        assert!((best - nuclear_norm(&m)).abs() < 1e-10);
        for _ in 0..2000 {
            let v = random_orthonormal(&mut r, 5, 2);
            assert!((v.transpose() * &m).trace() <= best + 1e-12);
        }
    }
}

/// Algorithm 2 is a local method: the 2-D, d=1 result must be a local
/// minimum on the circle, and the global one when the objective is unimodal.
#[test]
fn unbalanced_solution_is_a_circle_minimum() {
    let mut r = rng(11);
    let at = |p: &WSubproblem, t: f64| {
        p.objective(&DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]))
    };
    let mut unimodal = 0;
    for seed in 0..100 {
        let base = DMatrix::from_fn(2, 2, |_, _| r.random_range(-1.0..1.0));
        let g = DMatrix::identity(2, 2) + &base * base.transpose();
        let a = DMatrix::from_fn(2, 1, |_, _| r.random_range(-1.0..1.0));
        let p = WSubproblem::new(blda::linalg::symmetrize(&g), a).unwrap();
        let sol = solve_unbalanced(&p, 1e-15, 100_000, seed).unwrap();
        let f = p.objective(&sol.w);
        let theta = sol.w[(1, 0)].atan2(sol.w[(0, 0)]);
        for k in 1..=10 {
            let h = 1e-3 * k as f64;
            assert!(
                f <= at(&p, theta + h) + 1e-9 && f <= at(&p, theta - h) + 1e-9,
                "seed {seed}"
            );
        }
        let grid: Vec<f64> = (0..3600)
            .map(|k| at(&p, std::f64::consts::TAU * k as f64 / 3600.0))
            .collect();
        let minima = (0..3600)
            .filter(|&k| grid[k] < grid[(k + 1) % 3600] && grid[k] < grid[(k + 3599) % 3600])
            .count();
        if minima == 1 {
            unimodal += 1;
            let best = grid.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(f <= best + 1e-6, "seed {seed}: {f} vs {best}");
        }
    }
    assert!(unimodal > 0);
}

#[test]
fn prefix_sweep_equals_direct_fits() {
    let data = normalize_minmax(&iris());
    let (train, test) = split(&data, 0.7, 4, true).unwrap();
    let admm = AdmmConfig::default();
    for method in [Method::Pca, Method::Lda, Method::L2blda] {
        let report = dim_sweep(&train, &test, method, 4, &admm).unwrap();
        for e in &report.per_dim {
            let direct = fit(method, &train, e.dim, &admm).unwrap();
            let correct = knn1_correct(&train, &test, &direct).unwrap();
            assert_eq!(
                e.accuracy,
                100.0 * correct as f64 / test.num_samples() as f64,
                "{method} d={}",
                e.dim
            );
        }
    }
}

#[test]
fn summaries_reaggregate_from_runs_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        datasets: vec![DatasetEntry {
            name: "iris".into(),
            source: DatasetSource::Iris,
            d_max: Some(2),
            normalize: true,
        }],
        methods: vec![Method::Pca, Method::L2blda, Method::L1blda],
        d_max: None,
        splits: SplitConfig {
            n_seeds: 3,
            ..SplitConfig::default()
        },
        noise: Vec::new(),
        admm: AdmmConfig {
            it_max: 20,
            ..AdmmConfig::default()
        },
        output: dir.path().to_path_buf(),
        emit_trace: false,
        workers: Some(2),
    };
    let outcome = run_bench(&cfg).unwrap();
    let reread = read_runs_csv(&dir.path().join("runs.csv")).unwrap();
    assert_eq!(reread.len(), outcome.reports.len());
    let names = vec!["iris".to_string()];
    let noises = vec![CLEAN.to_string()];
    assert_eq!(
        summarize(&reread, &names, &noises, &cfg.methods),
        summarize(&outcome.reports, &names, &noises, &cfg.methods)
    );
}
