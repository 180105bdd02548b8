//! Low-lying eigenpairs of [`SparseHermitian`] operators.
//!
//! [`lowest_k`] runs Lanczos with full (twice-iterated Gram-Schmidt)
//! reorthogonalization. Further eigenpairs are found by deflation: each
//! subsequent run starts orthogonal to the already locked vectors and is kept
//! there, so exactly degenerate levels are returned with their multiplicity.
//! [`dense_spectrum`] is the direct oracle.
//!
//! # Scale hazard
//!
//! In the cavity problems of interest the on-site scale `g` is two to three
//! orders of magnitude above the effective spin couplings `J²/g`. Residual
//! tolerances are therefore *relative to an estimate of ‖H‖* (the maximum
//! absolute row sum). An absolute tolerance of `1e-10` would be a sizeable
//! fraction of the spin-model energies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseHermitian;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Residual tolerance relative to the operator-norm estimate.
    pub tol: f64,
    /// Maximum Krylov dimension per Lanczos run.
    pub max_iter: usize,
    /// Largest dimension accepted by the dense solver.
    pub dense_cap: usize,
    /// Seed of the start-vector generator.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 3000,
            dense_cap: 4096,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Lanczos, falling back to the dense solver on non-convergence when the
    /// dimension allows it.
    Auto,
    Lanczos,
    Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    /// `‖H v − E v‖` for each pair.
    pub residuals: Vec<f64>,
    /// Total matrix-vector products (Lanczos) or zero (dense).
    pub iterations: usize,
    pub seed: u64,
    /// Norm estimate used to scale the tolerance.
    pub scale: f64,
    /// Some returned neighbours are closer than `10·tol·scale`.
    pub degenerate: bool,
}

impl EigenResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> &[C64] {
        &self.eigenvectors[0]
    }

    /// Gap between the two lowest returned levels.
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    fn truncate(mut self, k: usize) -> Self {
        self.eigenvalues.truncate(k);
        self.eigenvectors.truncate(k);
        self.residuals.truncate(k);
        self
    }

    fn flag_degeneracy(&mut self, threshold: f64) {
        self.degenerate = self.eigenvalues.windows(2).any(|w| w[1] - w[0] < threshold);
    }
}

/// Eigen-decomposition of a small real symmetric matrix, eigenvalues ascending
/// and eigenvectors as matching columns.
pub fn symmetric_eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Complex Hermitian counterpart of [`symmetric_eigh`].
pub fn hermitian_eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale_in_place(v: &mut [C64], a: f64) {
    for x in v {
        *x *= a;
    }
}

fn residual(h: &SparseHermitian, v: &[C64], e: f64) -> f64 {
    let hv = h.matvec_unchecked(v);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// Twice-iterated classical Gram-Schmidt against every vector in `bases`.
fn orthogonalize(w: &mut [C64], bases: &[&[Vec<C64>]]) {
    for _ in 0..2 {
        for basis in bases {
            for u in basis.iter() {
                let c = dot(u, w);
                axpy(w, -c, u);
            }
        }
    }
}

fn norm_scale(h: &SparseHermitian) -> f64 {
    let s = h.norm_bound();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn random_start(h: &SparseHermitian, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let real = h.is_real_symmetric();
    (0..h.dim())
        .map(|_| {
            let re = rng.random::<f64>() - 0.5;
            let im = if real { 0.0 } else { rng.random::<f64>() - 0.5 };
            C64::new(re, im)
        })
        .collect()
}

/// Dense tridiagonal eigenproblem of the current Lanczos coefficients.
fn ritz(alpha: &[f64], beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    symmetric_eigh(&t)
}

struct Converged {
    value: f64,
    vector: Vec<C64>,
    residual: f64,
    matvecs: usize,
}

/// One Lanczos run for the lowest eigenpair in the complement of `locked`.
fn lanczos_lowest(
    h: &SparseHermitian,
    locked: &[Vec<C64>],
    tol_abs: f64,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Converged> {
    let n = h.dim();
    let avail = n - locked.len();
    let max_m = avail.min(max_iter.max(1));

    let mut q0 = Vec::new();
    for _ in 0..8 {
        let mut v = random_start(h, rng);
        orthogonalize(&mut v, &[locked]);
        let nv = norm(&v);
        if nv > 1e-8 {
            scale_in_place(&mut v, 1.0 / nv);
            q0 = v;
            break;
        }
    }
    if q0.is_empty() {
        return Err(Error::NotConverged {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }

    let mut basis: Vec<Vec<C64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut next_check = 4usize;
    let mut best = f64::INFINITY;
    // Breakdown threshold: the Krylov space has become invariant.
    let tiny = 1e-14 * norm_scale(h);

    for j in 0..max_m {
        let mut w = h.matvec_unchecked(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        axpy(&mut w, C64::new(-a, 0.0), &basis[j]);
        if j > 0 {
            axpy(&mut w, C64::new(-beta[j - 1], 0.0), &basis[j - 1]);
        }
        orthogonalize(&mut w, &[locked, &basis]);
        let b = norm(&w);
        let m = j + 1;
        let last = m == max_m || b <= tiny;

        if last || m >= next_check {
            next_check = (m + 4).max(m + m / 8);
            let (_, vecs) = ritz(&alpha, &beta);
            let estimate = b * vecs[(m - 1, 0)].abs();
            if estimate <= tol_abs || last {
                let mut v = vec![C64::new(0.0, 0.0); n];
                for (i, q) in basis.iter().enumerate() {
                    axpy(&mut v, C64::new(vecs[(i, 0)], 0.0), q);
                }
                let nv = norm(&v);
                scale_in_place(&mut v, 1.0 / nv);
                let theta = dot(&v, &h.matvec_unchecked(&v)).re;
                let r = residual(h, &v, theta);
                best = best.min(r);
                if r <= tol_abs {
                    return Ok(Converged {
                        value: theta,
                        vector: v,
                        residual: r,
                        matvecs: m,
                    });
                }
                if last {
                    break;
                }
            }
        }
        if b <= tiny {
            break;
        }
        scale_in_place(&mut w, 1.0 / b);
        basis.push(w);
        beta.push(b);
    }
    Err(Error::NotConverged {
        iterations: alpha.len(),
        residual: best,
    })
}

/// The `k` lowest eigenpairs by Lanczos with full reorthogonalization and deflation.
pub fn lowest_k(h: &SparseHermitian, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    if k == 0 || k > h.dim() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {}-dimensional operator",
            h.dim()
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let scale = norm_scale(h);
    let tol_abs = opts.tol * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut matvecs = 0;
    for _ in 0..k {
        let c = lanczos_lowest(h, &locked, tol_abs, opts.max_iter, &mut rng).map_err(|e| match e {
            Error::NotConverged { iterations, residual } => Error::NotConverged {
                iterations: iterations + matvecs,
                residual,
            },
            other => other,
        })?;
        matvecs += c.matvecs;
        values.push(c.value);
        residuals.push(c.residual);
        locked.push(c.vector);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = EigenResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: order.iter().map(|&i| locked[i].clone()).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        iterations: matvecs,
        seed: opts.seed,
        scale,
        degenerate: false,
    };
    out.flag_degeneracy(10.0 * tol_abs);
    Ok(out)
}

/// Full spectrum by direct Hermitian diagonalization.
pub fn dense_spectrum(h: &SparseHermitian, cap: usize) -> Result<EigenResult> {
    let n = h.dim();
    if n > cap {
        return Err(Error::DimensionCap { dim: n as u128, cap });
    }
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if h.is_real_symmetric() {
        let (vals, vecs) = symmetric_eigh(&h.to_dense_real());
        let vectors = (0..n)
            .map(|c| vecs.column(c).iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        (vals.iter().copied().collect(), vectors)
    } else {
        let (vals, vecs) = hermitian_eigh(&h.to_dense());
        let vectors = (0..n).map(|c| vecs.column(c).iter().copied().collect()).collect();
        (vals, vectors)
    };
    let residuals = values.iter().zip(&vectors).map(|(&e, v)| residual(h, v, e)).collect();
    Ok(EigenResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        iterations: 0,
        seed: 0,
        scale: norm_scale(h),
        degenerate: false,
    })
}

/// Lowest `k` pairs with the requested method.
pub fn solve(h: &SparseHermitian, k: usize, opts: &SolverOptions, method: Method) -> Result<EigenResult> {
    let k = k.min(h.dim());
    let dense = |h: &SparseHermitian| -> Result<EigenResult> {
        let mut r = dense_spectrum(h, opts.dense_cap)?.truncate(k);
        r.flag_degeneracy(10.0 * opts.tol * r.scale);
        Ok(r)
    };
    match method {
        Method::Dense => dense(h),
        Method::Lanczos => lowest_k(h, k, opts),
        Method::Auto => match lowest_k(h, k, opts) {
            Err(Error::NotConverged { .. }) if h.dim() <= opts.dense_cap => dense(h),
            other => other,
        },
    }
}

/// Orthonormal Krylov basis built by `steps` Lanczos iterations from the
/// seeded start vector. Exposed for diagnostics of the reorthogonalization.
pub fn krylov_basis(h: &SparseHermitian, steps: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = random_start(h, &mut rng);
    let nq = norm(&q);
    scale_in_place(&mut q, 1.0 / nq);
    let mut basis = vec![q];
    let mut prev_beta = 0.0;
    for j in 0..steps.min(h.dim()).saturating_sub(1) {
        let mut w = h.matvec_unchecked(&basis[j]);
        let a = dot(&basis[j], &w).re;
        axpy(&mut w, C64::new(-a, 0.0), &basis[j]);
        if j > 0 {
            axpy(&mut w, C64::new(-prev_beta, 0.0), &basis[j - 1]);
        }
        orthogonalize(&mut w, &[&basis]);
        let b = norm(&w);
        if b <= 1e-14 * norm_scale(h) {
            break;
        }
        scale_in_place(&mut w, 1.0 / b);
        basis.push(w);
        prev_beta = b;
    }
    basis
}
