//! L1BLDA by scaled ADMM.
//!
//! The problem
//!
//! ```text
//! min  -(1/N) sum_{i<j} sqrt(N_i N_j) ||W^T (x̄_i - x̄_j)||_1 + Ω sum_l ||W^T (x_l - x̄_{y_l})||_1
//! s.t. W^T W = I
//! ```
//!
//! is split with one block `B_ij` per class pair, one block `Z_l` per sample
//! and a copy `D` of `W`. Each iteration runs, in order:
//!
//! 1. W-step: an orthogonality-constrained quadratic solved by
//!    [`crate::procrustes`] (closed form when `d = n`, majorization otherwise);
//! 2. the pair blocks `B`, in closed form;
//! 3. the sample blocks `Z`, by soft thresholding;
//! 4. `D = W - Γ`;
//! 5. dual ascent on `α`, `β`, `Γ` with unit step.
//!
//! Iteration stops once both the primal and dual residual norms are below
//! their tolerances, or after `it_max` iterations.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{check_dim, Error, Result};
use crate::procrustes::{
    orthonormal_init, solve_balanced, solve_unbalanced_from, InnerOptions, WSubproblem,
};
use crate::projection::{Method, ProjectionMatrix};
use crate::scatter::{adaptive_weights, admm_g_matrix, centered_within, class_stats, ClassStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    pub rho: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub it_max: usize,
    pub seed: u64,
    pub inner_tol: f64,
    pub inner_max: usize,
    /// Start each unbalanced W-solve from the current iterate instead of a
    /// fresh random orthonormal matrix.
    pub warm_start_inner: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            eps_pri: 1e-4,
            eps_dual: 1e-4,
            it_max: 500,
            seed: 0,
            inner_tol: 1e-8,
            inner_max: 200,
            warm_start_inner: true,
        }
    }
}

pub const DEFAULT_RHO: f64 = 100.0;

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("eps_pri", self.eps_pri),
            ("eps_dual", self.eps_dual),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.it_max == 0 || self.inner_max == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Full ADMM iterate. Pair blocks are the columns of `b_blocks`/`alpha`
/// (`d x P`, pairs in lexicographic order); sample blocks are the columns of
/// `z_blocks`/`beta` (`d x N`, by sample index).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub w: DMatrix<f64>,
    pub dmat: DMatrix<f64>,
    pub b_blocks: DMatrix<f64>,
    pub z_blocks: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub iter: usize,
    pub r_norm: f64,
    pub s_norm: f64,
}

impl AdmmState {
    /// `W = D = w0`, every block and dual zero.
    pub fn initial(w0: DMatrix<f64>, num_pairs: usize, num_samples: usize) -> Self {
        let (n, d) = w0.shape();
        Self {
            dmat: w0.clone(),
            w: w0,
            b_blocks: DMatrix::zeros(d, num_pairs),
            z_blocks: DMatrix::zeros(d, num_samples),
            alpha: DMatrix::zeros(d, num_pairs),
            beta: DMatrix::zeros(d, num_samples),
            gamma: DMatrix::zeros(n, d),
            iter: 0,
            r_norm: f64::INFINITY,
            s_norm: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1bldaObjective {
    pub between_term: f64,
    pub within_term: f64,
    pub total: f64,
}

/// Data-dependent pieces shared by every iteration.
#[derive(Debug, Clone)]
pub struct L1bldaProblem {
    pub stats: ClassStats,
    pub omega: f64,
    /// `sqrt(N_i N_j)/N * (x̄_i - x̄_j)` per pair, `n x P`.
    pub pair_scaled: DMatrix<f64>,
    /// `x̄_i - x̄_j` per pair, `n x P`.
    pub pair_raw: DMatrix<f64>,
    /// `x_l - x̄_{y_l}` per sample, `n x N`.
    pub centered: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl L1bldaProblem {
    pub fn new(data: &LabeledDataset) -> Result<Self> {
        let stats = class_stats(data)?;
        let omega = adaptive_weights(&stats).omega;
        let pair_raw = stats.pair_differences();
        let mut pair_scaled = pair_raw.clone();
        for (p, (i, j)) in stats.pairs().into_iter().enumerate() {
            pair_scaled.column_mut(p).scale_mut(stats.pair_weight(i, j));
        }
        Ok(Self {
            centered: centered_within(data, &stats),
            g: admm_g_matrix(data, &stats)?,
            stats,
            omega,
            pair_scaled,
            pair_raw,
        })
    }

    pub fn n(&self) -> usize {
        self.stats.n
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_raw.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.centered.ncols()
    }

    pub fn objective(&self, w: &DMatrix<f64>) -> L1bldaObjective {
        let between_term = (w.transpose() * &self.pair_scaled).lp_norm(1);
        let within_term = (w.transpose() * &self.centered).lp_norm(1);
        L1bldaObjective {
            between_term,
            within_term,
            total: -between_term + self.omega * within_term,
        }
    }

    /// The printed linear-term matrix `A` for the current blocks and duals.
    pub fn a_matrix(&self, state: &AdmmState) -> DMatrix<f64> {
        &state.dmat
            + &state.gamma
            + &self.pair_scaled * (&state.b_blocks - &state.alpha).transpose()
            + &self.centered * (&state.z_blocks - &state.beta).transpose()
    }

    /// The W-subproblem in `tr(W^T G W) + 2 tr(A'^T W)` form. The scaled
    /// Lagrangian has linear term `-2 tr(A^T W)` for the printed `A`, so the
    /// subproblem carries `A' = -A`.
    pub fn w_subproblem(&self, state: &AdmmState) -> Result<WSubproblem> {
        WSubproblem::new(self.g.clone(), -self.a_matrix(state))
    }
}

/// Evaluates the L1BLDA objective at `w`.
pub fn objective_l1blda(
    w: &DMatrix<f64>,
    data: &LabeledDataset,
    stats: &ClassStats,
    omega: f64,
) -> L1bldaObjective {
    let mut between_term = 0.0;
    for (i, j) in stats.pairs() {
        let proj = w.transpose() * stats.mean_difference(i, j);
        between_term += stats.pair_weight(i, j) * proj.lp_norm(1);
    }
    let centered = centered_within(data, stats);
    let within_term = (w.transpose() * centered).lp_norm(1);
    L1bldaObjective {
        between_term,
        within_term,
        total: -between_term + omega * within_term,
    }
}

/// `Φ_κ(a)`: shrinks `a` toward zero by `κ`, zero inside `[-κ, κ]`.
pub fn soft_threshold(a: f64, kappa: f64) -> f64 {
    if a > kappa {
        a - kappa
    } else if a < -kappa {
        a + kappa
    } else {
        0.0
    }
}

/// Pair-block step. With `v = sqrt(N_i N_j)/N W^T (x̄_i - x̄_j) + α_ij`,
/// componentwise `B = v + 1/ρ` where `v >= 0` and `B = v - 1/ρ` where `v < 0`.
pub fn update_b(
    w: &DMatrix<f64>,
    problem: &L1bldaProblem,
    alpha: &DMatrix<f64>,
    rho: f64,
) -> DMatrix<f64> {
    let mut v = w.transpose() * &problem.pair_scaled + alpha;
    let step = 1.0 / rho;
    v.apply(|x| *x += if *x >= 0.0 { step } else { -step });
    v
}

/// Sample-block step: `Z_l = Φ_{Ω/ρ}(W^T (x_l - x̄_{y_l}) + β_l)`.
pub fn update_z(
    w: &DMatrix<f64>,
    problem: &L1bldaProblem,
    beta: &DMatrix<f64>,
    omega: f64,
    rho: f64,
) -> DMatrix<f64> {
    let kappa = omega / rho;
    (w.transpose() * &problem.centered + beta).map(|x| soft_threshold(x, kappa))
}

/// `D = W - Γ`.
pub fn update_d(w: &DMatrix<f64>, gamma: &DMatrix<f64>) -> DMatrix<f64> {
    w - gamma
}

/// Adds each constraint residual to its scaled dual.
pub fn update_duals(mut state: AdmmState, problem: &L1bldaProblem) -> AdmmState {
    let wt = state.w.transpose();
    state.alpha += &wt * &problem.pair_scaled - &state.b_blocks;
    state.beta += &wt * &problem.centered - &state.z_blocks;
    state.gamma += &state.dmat - &state.w;
    state
}

/// Split variables from the previous iteration, needed for the dual residual.
#[derive(Debug, Clone)]
pub struct PrimalSnapshot {
    pub b_blocks: DMatrix<f64>,
    pub z_blocks: DMatrix<f64>,
    pub dmat: DMatrix<f64>,
}

impl PrimalSnapshot {
    pub fn of(state: &AdmmState) -> Self {
        Self {
            b_blocks: state.b_blocks.clone(),
            z_blocks: state.z_blocks.clone(),
            dmat: state.dmat.clone(),
        }
    }
}

fn max_column_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Primal and dual residual norms.
///
/// Primal: the largest 2-norm over pair and sample constraint blocks, and the
/// Frobenius norm of `W - D`. Dual: the largest of
/// `||ρ (x̄_i - x̄_j)(ΔB_ij)^T||_2`, `||ρ (x_l - x̄_{y_l})(ΔZ_l)^T||_2` and
/// `||ρ ΔD||_F`; each outer product has spectral norm equal to the product of
/// the two vector norms.
pub fn residuals(
    state: &AdmmState,
    previous: &PrimalSnapshot,
    problem: &L1bldaProblem,
    rho: f64,
) -> (f64, f64) {
    let wt = state.w.transpose();
    let r_pair = max_column_norm(&(&wt * &problem.pair_scaled - &state.b_blocks));
    let r_sample = max_column_norm(&(&wt * &problem.centered - &state.z_blocks));
    let r_copy = (&state.w - &state.dmat).norm();
    let r_norm = r_pair.max(r_sample).max(r_copy);

    let db = &state.b_blocks - &previous.b_blocks;
    let s_pair = problem
        .pair_raw
        .column_iter()
        .zip(db.column_iter())
        .map(|(x, b)| rho * x.norm() * b.norm())
        .fold(0.0, f64::max);
    let dz = &state.z_blocks - &previous.z_blocks;
    let s_sample = problem
        .centered
        .column_iter()
        .zip(dz.column_iter())
        .map(|(x, z)| rho * x.norm() * z.norm())
        .fold(0.0, f64::max);
    let s_copy = rho * (&state.dmat - &previous.dmat).norm();
    (r_norm, s_pair.max(s_sample).max(s_copy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub r_norm: f64,
    pub s_norm: f64,
}

#[derive(Debug, Clone)]
pub struct L1bldaFit {
    pub projection: ProjectionMatrix,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub state: AdmmState,
}

fn ensure_finite(m: &DMatrix<f64>, iteration: usize, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            iteration,
            what: what.to_string(),
        })
    }
}

/// One full pass of steps (a)-(g).
pub fn admm_step(state: AdmmState, problem: &L1bldaProblem, cfg: &AdmmConfig) -> Result<AdmmState> {
    let k = state.iter;
    let n = problem.n();
    let d = state.w.ncols();
    let previous = PrimalSnapshot::of(&state);

    let sub = problem.w_subproblem(&state).map_err(|e| match e {
        Error::NonFinite { .. } => Error::NonFinite {
            iteration: k,
            what: "W-subproblem".into(),
        },
        other => other,
    })?;
    let w = if d == n {
        solve_balanced(&sub)?
    } else {
        let init = if cfg.warm_start_inner {
            state.w.clone()
        } else {
            orthonormal_init(n, d, cfg.seed.wrapping_add(k as u64 + 1))?
        };
        let inner = InnerOptions {
            tol: cfg.inner_tol,
            max_iter: cfg.inner_max,
        };
        solve_unbalanced_from(&sub, init, &inner)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite {
                    iteration: k,
                    what: "unbalanced W-step".into(),
                },
                other => other,
            })?
            .w
    };
    ensure_finite(&w, k, "W")?;

    let b_blocks = update_b(&w, problem, &state.alpha, cfg.rho);
    let z_blocks = update_z(&w, problem, &state.beta, problem.omega, cfg.rho);
    let dmat = update_d(&w, &state.gamma);
    ensure_finite(&b_blocks, k, "B blocks")?;
    ensure_finite(&z_blocks, k, "Z blocks")?;

    let next = AdmmState {
        w,
        dmat,
        b_blocks,
        z_blocks,
        iter: k + 1,
        ..state
    };
    let mut next = update_duals(next, problem);
    let (r_norm, s_norm) = residuals(&next, &previous, problem, cfg.rho);
    if !(r_norm.is_finite() && s_norm.is_finite()) {
        return Err(Error::NonFinite {
            iteration: k,
            what: "residual norms".into(),
        });
    }
    next.r_norm = r_norm;
    next.s_norm = s_norm;
    Ok(next)
}

/// Runs ADMM from `W = D = orthonormal_init(seed)` with zero blocks and duals.
pub fn solve_l1blda(data: &LabeledDataset, d: usize, cfg: &AdmmConfig) -> Result<L1bldaFit> {
    cfg.validate()?;
    check_dim(d, data.num_features())?;
    let problem = L1bldaProblem::new(data)?;
    let w0 = orthonormal_init(problem.n(), d, cfg.seed)?;
    let mut state = AdmmState::initial(w0, problem.num_pairs(), problem.num_samples());
    let mut trace = Vec::new();
    let mut converged = false;
    while state.iter < cfg.it_max {
        state = admm_step(state, &problem, cfg)?;
        let objective = problem.objective(&state.w).total;
        trace.push(IterationRecord {
            iter: state.iter,
            objective,
            r_norm: state.r_norm,
            s_norm: state.s_norm,
        });
        if state.r_norm <= cfg.eps_pri && state.s_norm <= cfg.eps_dual {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "l1blda: d={d} stopped at it_max={} with r={:e} s={:e}",
            cfg.it_max,
            state.r_norm,
            state.s_norm
        );
    }
    let objective = problem.objective(&state.w).total;
    Ok(L1bldaFit {
        projection: ProjectionMatrix {
            w: state.w.clone(),
            method: Method::L1blda,
            objective,
            spectrum: Vec::new(),
        },
        trace,
        converged,
        state,
    })
}

/// Writes the iteration trace as CSV: `iter,objective,r_norm,s_norm`.
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[IterationRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
    for rec in trace {
        wtr.serialize(rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Same as [`write_trace_csv`] into any writer.
pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for rec in trace {
        wtr.serialize(rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}
