//! Direct and iterative linear solvers.
//!
//! Symmetric positive definite matrices arising from the P1 discretization on
//! the row-major vertex ordering have bandwidth `n + 2`, so an in-band
//! Cholesky factorization is an exact sparse factorization with no fill
//! outside the band. The preconditioner blocks are handled this way.
//!
//! Pure stiffness systems with constant diffusion reduce to the classical
//! five-point stencil on this mesh, which the sine-transform solver
//! diagonalizes exactly in `O(N log N)`; it carries the large reference-mesh
//! solves.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::assembly::SparseMatrix;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("iterative solver broke down at iteration {0}")]
    Breakdown(usize),
    #[error("no convergence within {iters} iterations (relative residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
}

/// Cholesky factorization of a symmetric positive definite matrix stored by
/// its lower band.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row-contiguous band storage: entry `(i, j)` with `i - bw <= j <= i`
    /// lives at `i * (bw + 1) + (j + bw - i)`.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self, SolveError> {
        let n = a.dim();
        let bw = a.bandwidth();
        let stride = bw + 1;
        let mut l = vec![0.0; n * stride];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if *c <= r {
                    l[r * stride + (c + bw - r)] = *v;
                }
            }
        }
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                let kmin = jmin.max(j.saturating_sub(bw));
                let oi = i * stride + bw - i;
                let oj = j * stride + bw - j;
                let mut sum = 0.0;
                // Contiguous dot product over the overlapping band segment.
                for k in kmin..j {
                    sum += l[oi + k] * l[oj + k];
                }
                if j < i {
                    let d = l[oj + j];
                    l[oi + j] = (l[oi + j] - sum) / d;
                } else {
                    let d = l[oi + i] - sum;
                    if d <= 0.0 || !d.is_finite() {
                        return Err(SolveError::NotPositiveDefinite { row: i, pivot: d });
                    }
                    l[oi + i] = d.sqrt();
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        // Forward substitution L y = b.
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let oi = i * stride + bw - i;
            let mut sum = b[i];
            for j in jmin..i {
                sum -= self.l[oi + j] * b[j];
            }
            b[i] = sum / self.l[oi + i];
        }
        // Back substitution L^T x = y, row-oriented over L.
        for i in (0..n).rev() {
            let jmin = i.saturating_sub(bw);
            let oi = i * stride + bw - i;
            let xi = b[i] / self.l[oi + i];
            b[i] = xi;
            for j in jmin..i {
                b[j] -= self.l[oi + j] * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Stopping control for MINRES.
#[derive(Debug, Clone, Copy)]
pub enum Stopping {
    /// Relative preconditioned residual reduction.
    RelTol { tol: f64, max_iter: usize },
    /// Exactly this many iterations, no residual test.
    FixedIters(usize),
}

pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norms, starting with the initial one.
    pub residual_history: Vec<f64>,
}

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator with
/// a symmetric positive definite preconditioner, starting from zero.
///
/// `apply_a` computes `y = A x`; `apply_p` computes `y = P^{-1} x`. The
/// residual tracked and tested is `||r||` in the `P^{-1}` inner product,
/// which is monotonically nonincreasing.
pub fn minres<A, P>(
    apply_a: A,
    apply_p: P,
    b: &[f64],
    stop: Stopping,
) -> Result<MinresOutcome, SolveError>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let (tol, max_iter) = match stop {
        Stopping::RelTol { tol, max_iter } => (tol, max_iter),
        Stopping::FixedIters(k) => (0.0, k),
    };
    let fixed = matches!(stop, Stopping::FixedIters(_));

    let mut x = vec![0.0; n];
    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = vec![0.0; n];
    apply_p(&v, &mut z);
    let gamma0sq: f64 = dot(&z, &v);
    if gamma0sq < 0.0 {
        return Err(SolveError::Breakdown(0));
    }
    let mut gamma = gamma0sq.sqrt();
    let gamma_init = gamma;
    let mut history = vec![gamma];
    if gamma == 0.0 {
        // Zero right-hand side: zero solution in zero iterations.
        return Ok(MinresOutcome {
            x,
            iterations: 0,
            converged: true,
            residual_history: history,
        });
    }

    let mut eta = gamma;
    let (mut s_old, mut s) = (0.0f64, 0.0f64);
    let (mut c_old, mut c) = (1.0f64, 1.0f64);
    let mut gamma_old = 1.0f64;
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut q = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=max_iter {
        // Lanczos step on P^{-1} A in the P inner product.
        let zt: Vec<f64> = z.iter().map(|v| v / gamma).collect();
        apply_a(&zt, &mut q);
        let delta = dot(&zt, &q);
        let mut v_next = vec![0.0; n];
        for i in 0..n {
            v_next[i] = q[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_prev[i];
        }
        let mut z_next = vec![0.0; n];
        apply_p(&v_next, &mut z_next);
        let g2 = dot(&z_next, &v_next);
        if g2 < -1e-14 * gamma_init * gamma_init || !g2.is_finite() {
            return Err(SolveError::Breakdown(it));
        }
        let gamma_next = g2.max(0.0).sqrt();

        // Givens rotations updating the tridiagonal QR factorization.
        let a0 = c * delta - c_old * s * gamma;
        let a1 = (a0 * a0 + gamma_next * gamma_next).sqrt();
        let a2 = s * delta + c_old * c * gamma;
        let a3 = s_old * gamma;
        if a1 == 0.0 {
            return Err(SolveError::Breakdown(it));
        }
        c_old = c;
        c = a0 / a1;
        s_old = s;
        s = gamma_next / a1;

        let mut w_next = vec![0.0; n];
        for i in 0..n {
            w_next[i] = (zt[i] - a3 * w_old[i] - a2 * w[i]) / a1;
        }
        for i in 0..n {
            x[i] += c * eta * w_next[i];
        }
        eta = -s * eta;
        history.push(eta.abs());
        iterations = it;

        w_old = w;
        w = w_next;
        v_prev = v;
        v = v_next;
        z = z_next;
        gamma_old = gamma;
        gamma = gamma_next;

        if !fixed && eta.abs() <= tol * gamma_init {
            converged = true;
            break;
        }
        if gamma == 0.0 {
            converged = true;
            break;
        }
    }
    if fixed {
        converged = true;
    }
    Ok(MinresOutcome {
        x,
        iterations,
        converged,
        residual_history: history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fast direct solver for the Dirichlet stiffness system with constant
/// diffusion on the uniform mesh, where the interior equations reduce to the
/// five-point stencil `nu (4 y_ij - y_W - y_E - y_S - y_N) = b_ij`. The
/// stencil is diagonalized by the two-dimensional type-I sine transform.
pub struct SineSolver {
    n: usize,
    nu: f64,
    fft: Arc<dyn Fft<f64>>,
    /// 1D stencil eigenvalue parts `2 - 2 cos(k pi / n)`, k = 1..n-1.
    eig: Vec<f64>,
}

impl SineSolver {
    pub fn new(n: usize, nu: f64) -> Self {
        let m = n - 1;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (m + 1));
        let eig = (1..n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos())
            .collect();
        SineSolver { n, nu, fft, eig }
    }

    /// DST-I along one axis of the interior m x m array.
    fn dst_lines(&self, data: &mut [f64], m: usize, transpose: bool) {
        let len = 2 * (m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for line in 0..m {
            for k in 0..len {
                buf[k] = Complex::new(0.0, 0.0);
            }
            for j in 0..m {
                let v = if transpose {
                    data[j * m + line]
                } else {
                    data[line * m + j]
                };
                buf[j + 1] = Complex::new(v, 0.0);
                buf[len - 1 - j] = Complex::new(-v, 0.0);
            }
            self.fft.process(&mut buf);
            for k in 0..m {
                let v = -0.5 * buf[k + 1].im;
                if transpose {
                    data[k * m + line] = v;
                } else {
                    data[line * m + k] = v;
                }
            }
        }
    }

    /// Solves `K y = b` where `b` is given on all vertices (boundary entries
    /// ignored) and the solution carries zero boundary values.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let m = n - 1;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut interior = vec![0.0; m * m];
        for j in 1..n {
            for i in 1..n {
                interior[(j - 1) * m + (i - 1)] = b[vid(i, j)];
            }
        }
        self.dst_lines(&mut interior, m, false);
        self.dst_lines(&mut interior, m, true);
        for j in 0..m {
            for i in 0..m {
                let lam = self.nu * (self.eig[i] + self.eig[j]);
                interior[j * m + i] /= lam;
            }
        }
        self.dst_lines(&mut interior, m, false);
        self.dst_lines(&mut interior, m, true);
        let scale = (2.0 / n as f64) * (2.0 / n as f64);
        let mut y = vec![0.0; (n + 1) * (n + 1)];
        for j in 1..n {
            for i in 1..n {
                y[vid(i, j)] = interior[(j - 1) * m + (i - 1)] * scale;
            }
        }
        y
    }
}
