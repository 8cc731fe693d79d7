//! The orthogonality-constrained W-subproblem
//!
//! ```text
//! min  tr(W^T G W) + 2 tr(A^T W)   s.t.  W^T W = I
//! ```
//!
//! with `G` symmetric positive definite. For square `W` the quadratic term is
//! constant and the problem is a balanced Procrustes problem with a closed
//! form. For tall `W` it is solved by the majorization iteration
//! `W <- polar(2(aI - G)W - 2A)`, where `a` bounds the spectrum of `G`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::polar_factor;

#[derive(Debug, Clone, PartialEq)]
pub struct WSubproblem {
    pub g: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub d: usize,
}

impl WSubproblem {
    pub fn new(g: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if !g.is_square() || a.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "G is {}x{}, A is {}x{}",
                g.nrows(),
                g.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        let d = a.ncols();
        check_dim(d, n)?;
        if g.iter().chain(a.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: 0,
                what: "W-subproblem input".into(),
            });
        }
        let asym = (&g - g.transpose()).amax();
        if asym > 1e-12 * g.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "G is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self { g, a, d })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// `tr(W^T G W) + 2 tr(A^T W)`.
    pub fn objective(&self, w: &DMatrix<f64>) -> f64 {
        let gw = &self.g * w;
        w.dot(&gw) + 2.0 * self.a.dot(w)
    }
}

/// Closed-form solution for `d = n`. Minimizing `2 tr(A^T W)` over orthogonal
/// `W` gives `W = polar(-A)`; both `±polar(-A)` are evaluated and the lower
/// objective wins.
pub fn solve_balanced(p: &WSubproblem) -> Result<DMatrix<f64>> {
    if p.d != p.n() {
        return Err(Error::InvalidParameter(format!(
            "balanced solve needs d = n, got d={} n={}",
            p.d,
            p.n()
        )));
    }
    let w = polar_factor(&(-&p.a));
    let flipped = -&w;
    Ok(if p.objective(&flipped) < p.objective(&w) {
        flipped
    } else {
        w
    })
}

/// Seeded Gaussian matrix orthonormalized by QR, with the signs fixed so that
/// `R` has a nonnegative diagonal.
pub fn orthonormal_init(n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_dim(d, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(q)
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 100_000;
/// Multiplicative margin so that `aI - G` stays positive semidefinite.
pub const POWER_MARGIN: f64 = 1e-6;

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration on the Rayleigh quotient, inflated by `POWER_MARGIN`.
pub fn dominant_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut v = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        1.0 + 0.1 * z
    });
    v.normalize_mut();
    let mut lambda = v.dot(&(g * &v));
    for _ in 0..POWER_MAX_ITER {
        let gv = g * &v;
        let norm = gv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = gv / norm;
        let next = v.dot(&(g * &v));
        let done = (next - lambda).abs() <= POWER_TOL * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda * (1.0 + POWER_MARGIN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnbalancedSolution {
    pub w: DMatrix<f64>,
    /// Objective at the initial point followed by one entry per iteration.
    pub objectives: Vec<f64>,
    pub dominant_eigenvalue: f64,
}

/// The majorization iteration from a given column-orthonormal start.
pub fn solve_unbalanced_from(
    p: &WSubproblem,
    init: DMatrix<f64>,
    opts: &InnerOptions,
) -> Result<UnbalancedSolution> {
    let n = p.n();
    if p.d >= n {
        return Err(Error::InvalidParameter(format!(
            "unbalanced solve needs d < n, got d={} n={n}",
            p.d
        )));
    }
    if init.shape() != (n, p.d) {
        return Err(Error::DimensionMismatch(format!(
            "initial W is {}x{}, expected {n}x{}",
            init.nrows(),
            init.ncols(),
            p.d
        )));
    }
    let a = dominant_eigenvalue(&p.g);
    let mut shifted = -&p.g;
    for k in 0..n {
        shifted[(k, k)] += a;
    }
    let mut w = init;
    let mut f = p.objective(&w);
    let mut objectives = vec![f];
    for it in 0..opts.max_iter {
        let m = (&shifted * &w - &p.a) * 2.0;
        let next = polar_factor(&m);
        let f_next = p.objective(&next);
        if !f_next.is_finite() {
            return Err(Error::NonFinite {
                iteration: it,
                what: "unbalanced Procrustes objective".into(),
            });
        }
        objectives.push(f_next);
        let decrease = f - f_next;
        w = next;
        f = f_next;
        if decrease < opts.tol * f.abs().max(1e-12) {
            break;
        }
    }
    Ok(UnbalancedSolution {
        w,
        objectives,
        dominant_eigenvalue: a,
    })
}

/// The majorization iteration from a seeded random orthonormal start.
pub fn solve_unbalanced(
    p: &WSubproblem,
    inner_tol: f64,
    inner_max: usize,
    seed: u64,
) -> Result<UnbalancedSolution> {
    if p.d >= p.n() {
        return Err(Error::InvalidParameter(format!(
            "unbalanced solve needs d < n, got d={} n={}",
            p.d,
            p.n()
        )));
    }
    let init = orthonormal_init(p.n(), p.d, seed)?;
    solve_unbalanced_from(
        p,
        init,
        &InnerOptions {
            tol: inner_tol,
            max_iter: inner_max,
        },
    )
}
