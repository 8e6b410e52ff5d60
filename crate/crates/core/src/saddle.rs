//! Discrete KKT saddle-point systems and their preconditioned MINRES solver.
//!
//! Eliminating the control from the discretized optimality system leaves a
//! symmetric indefinite 2x2-block system
//!
//! ```text
//!   [  M   -K ] [y]   [ y_d moments            ]
//!   [ -K   -C ] [p] = [ -(f + u_d) moments ... ]
//! ```
//!
//! with `C = M/lambda` in the unconstrained case and `C = M_I/lambda` (mass
//! restricted to the inactive set) inside the active set loop. Dirichlet
//! conditions are imposed by identity-row substitution so both blocks keep
//! the full vertex dimension. The block-diagonal preconditioner pairs
//! `M + sqrt(lambda) K` with `C + K/sqrt(lambda)`; both blocks are symmetric
//! positive definite and are applied through exact banded Cholesky
//! factorizations rather than the inexact multilevel inner solver the
//! original construction was reported with.

use std::sync::Arc;

use crate::assembly::{
    apply_dirichlet_matrix, apply_dirichlet_vector, assemble_load, assemble_mass,
    assemble_stiffness, zero_dirichlet_matrix, SparseMatrix,
};
use crate::fields::{AnalyticScalar, PointScalar, ScalarField};
use crate::linalg::{minres, BandCholesky, MinresOutcome, SineSolver, SolveError, Stopping};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

/// Dirichlet-reduced blocks and right-hand side of one KKT solve.
pub struct SaddleSystem {
    /// Mass block with identity boundary rows (top-left).
    pub mass: SparseMatrix,
    /// Stiffness coupling with zeroed boundary rows/columns (off-diagonal,
    /// entering with a negative sign).
    pub coupling: SparseMatrix,
    /// Unscaled bottom-right base: `M` or the inactive-set restricted mass,
    /// with identity boundary rows. The block itself is `-base/lambda`.
    pub control_mass: SparseMatrix,
    pub lambda: f64,
    /// Concatenated right-hand side `(b_y, b_p)`, boundary entries zero.
    pub rhs: Vec<f64>,
    pub mesh_id: u64,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    /// Applies the full 2x2-block operator.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let (y, p) = x.split_at(n);
        let (oy, op) = out.split_at_mut(n);
        let mut tmp = vec![0.0; n];
        self.mass.matvec(y, oy);
        self.coupling.matvec(p, &mut tmp);
        for i in 0..n {
            oy[i] -= tmp[i];
        }
        self.coupling.matvec(y, op);
        self.control_mass.matvec(p, &mut tmp);
        for i in 0..n {
            op[i] = -op[i] - tmp[i] / self.lambda;
        }
    }

    /// Euclidean norm of `rhs - A x`.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; 2 * self.dim()];
        self.apply(x, &mut ax);
        self.rhs
            .iter()
            .zip(&ax)
            .map(|(b, a)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Which bottom-right block the system carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerVariant {
    Unconstrained,
    ActiveSet,
}

/// Factorized block-diagonal preconditioner.
pub struct PreconditionerSpec {
    pub variant: PreconditionerVariant,
    state_block: BandCholesky,
    adjoint_block: BandCholesky,
    dim: usize,
}

impl PreconditionerSpec {
    /// Applies `P^{-1}`.
    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let n = self.dim;
        out[..n].copy_from_slice(&r[..n]);
        out[n..].copy_from_slice(&r[n..]);
        self.state_block.solve_in_place(&mut out[..n]);
        self.adjoint_block.solve_in_place(&mut out[n..]);
    }
}

/// Assembles the unconstrained KKT system for the given problem.
pub fn build_saddle_system_unconstrained(mesh: &Mesh, spec: &ProblemSpec) -> SaddleSystem {
    let mass_raw = assemble_mass(mesh);
    let stiff_raw = assemble_stiffness(mesh, spec);
    let mass = apply_dirichlet_matrix(&mass_raw, mesh);
    let coupling = zero_dirichlet_matrix(&stiff_raw, mesh);

    let n = mesh.num_vertices();
    let mut rhs = vec![0.0; 2 * n];
    let yd = AnalyticScalar::new(spec.desired_state.clone());
    let mut b_y = assemble_load(mesh, &yd);
    apply_dirichlet_vector(&mut b_y, mesh);
    rhs[..n].copy_from_slice(&b_y);

    let f = spec.source.clone();
    let ud = spec.desired_control.clone();
    let fu = AnalyticScalar::new(Arc::new(move |x, y| f(x, y) + ud(x, y)));
    let mut b_p = assemble_load(mesh, &fu);
    apply_dirichlet_vector(&mut b_p, mesh);
    for i in 0..n {
        rhs[n + i] = -b_p[i];
    }

    SaddleSystem {
        control_mass: mass.clone(),
        mass,
        coupling,
        lambda: spec.lambda,
        rhs,
        mesh_id: mesh.id(),
    }
}

/// Builds and factorizes the block-diagonal preconditioner for `system`.
///
/// The state block is `M + sqrt(lambda) K`; the adjoint block is
/// `C/lambda + K/sqrt(lambda)` with `C` the system's bottom-right mass base,
/// so the unconstrained and active-set variants differ only through `C`.
pub fn build_preconditioner(
    system: &SaddleSystem,
    variant: PreconditionerVariant,
) -> Result<PreconditionerSpec, SolveError> {
    let sl = system.lambda.sqrt();
    let p1 = SparseMatrix::add_scaled(&system.mass, 1.0, &system.coupling, sl);
    let p2 = SparseMatrix::add_scaled(
        &system.control_mass,
        1.0 / system.lambda,
        &system.coupling,
        1.0 / sl,
    );
    Ok(PreconditionerSpec {
        variant,
        state_block: BandCholesky::factor(&p1)?,
        adjoint_block: BandCholesky::factor(&p2)?,
        dim: system.dim(),
    })
}

pub struct SaddleSolution {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// Runs preconditioned MINRES on the saddle system from a zero initial guess.
pub fn minres_solve(
    system: &SaddleSystem,
    precond: &PreconditionerSpec,
    stop: Stopping,
) -> Result<SaddleSolution, SolveError> {
    let out: MinresOutcome = minres(
        |x, y| system.apply(x, y),
        |r, z| precond.apply(r, z),
        &system.rhs,
        stop,
    )?;
    if let Stopping::RelTol { tol, .. } = stop {
        if !out.converged {
            let rel = out.residual_history.last().unwrap()
                / out.residual_history.first().unwrap().max(f64::MIN_POSITIVE);
            let _ = tol;
            return Err(SolveError::NoConvergence {
                iters: out.iterations,
                residual: rel,
            });
        }
    }
    let n = system.dim();
    let (y, p) = out.x.split_at(n);
    Ok(SaddleSolution {
        y: y.to_vec(),
        p: p.to_vec(),
        iterations: out.iterations,
        converged: out.converged,
        residual_history: out.residual_history,
    })
}

/// Solves the unconstrained problem end to end, returning the discrete state
/// and adjoint as Dirichlet fields.
pub fn solve_unconstrained(
    mesh: &Arc<Mesh>,
    spec: &ProblemSpec,
    stop: Stopping,
) -> Result<(ScalarField, ScalarField, SaddleSolution), SolveError> {
    let system = build_saddle_system_unconstrained(mesh, spec);
    let precond = build_preconditioner(&system, PreconditionerVariant::Unconstrained)?;
    let sol = minres_solve(&system, &precond, stop)?;
    let y = ScalarField::new(mesh.clone(), sol.y.clone(), true);
    let p = ScalarField::new(mesh.clone(), sol.p.clone(), true);
    Ok((y, p, sol))
}

/// Solves the single Dirichlet diffusion equation `-div(nu grad y) = rhs`
/// with the P1 discretization: by the sine-transform solver when `nu` is
/// constant, otherwise by banded Cholesky.
pub fn solve_diffusion(
    mesh: &Arc<Mesh>,
    spec: &ProblemSpec,
    rhs: &dyn PointScalar,
) -> Result<ScalarField, SolveError> {
    let mut b = assemble_load(mesh, rhs);
    apply_dirichlet_vector(&mut b, mesh);
    let values = match spec.nu {
        crate::problem::Diffusion::Constant(nu) => {
            SineSolver::new(mesh.subdivisions(), nu).solve(&b)
        }
        _ => {
            let k = apply_dirichlet_matrix(&assemble_stiffness(mesh, spec), mesh);
            BandCholesky::factor(&k)?.solve(&b)
        }
    };
    Ok(ScalarField::new(mesh.clone(), values, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use std::sync::Arc;

    fn dense_system(system: &SaddleSystem) -> DMatrix<f64> {
        let n2 = 2 * system.dim();
        let mut dense = DMatrix::zeros(n2, n2);
        let mut e = vec![0.0; n2];
        let mut col = vec![0.0; n2];
        for j in 0..n2 {
            e[j] = 1.0;
            system.apply(&e, &mut col);
            for i in 0..n2 {
                dense[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        dense
    }

    #[test]
    fn zero_data_gives_zero_rhs_and_solution() {
        let mesh = Arc::new(build_uniform_mesh(3).unwrap());
        let mut spec = ProblemSpec::sine_preset(0.01);
        spec.source = Arc::new(|_, _| 0.0);
        spec.desired_control = Arc::new(|_, _| 0.0);
        spec.desired_state = Arc::new(|_, _| 0.0);
        spec.exact = None;
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        assert!(system.rhs.iter().all(|&v| v == 0.0));
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let sol = minres_solve(
            &system,
            &pre,
            Stopping::RelTol {
                tol: 1e-10,
                max_iter: 100,
            },
        )
        .unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_rhs_block_zero_when_f_and_ud_vanish() {
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let n = system.dim();
        assert!(system.rhs[n..].iter().all(|&v| v == 0.0));
        assert!(system.rhs[..n].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn system_matrix_is_symmetric_indefinite() {
        let mesh = Arc::new(build_uniform_mesh(2).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let dense = dense_system(&system);
        let defect = (&dense - dense.transpose()).abs().max();
        assert!(defect < 1e-13, "symmetry defect {defect}");
        // Dense eigensolve oracle: eigenvalues split into both signs.
        let eig = nalgebra::SymmetricEigen::new(dense);
        let pos = eig.eigenvalues.iter().filter(|&&l| l > 1e-12).count();
        let neg = eig.eigenvalues.iter().filter(|&&l| l < -1e-12).count();
        assert!(pos > 0 && neg > 0);
        assert_eq!(pos + neg, eig.eigenvalues.len());
    }

    #[test]
    fn preconditioner_blocks_at_lambda_one() {
        let mesh = Arc::new(build_uniform_mesh(3).unwrap());
        let mut spec = ProblemSpec::sine_preset(0.01);
        spec.lambda = 1.0;
        spec.exact = None;
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        // Both blocks are M + K: applying the preconditioner to a vector
        // replicated in both halves gives identical halves.
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let n = system.dim();
        let mut r = vec![0.0; 2 * n];
        for i in 0..n {
            let v = (i as f64 * 0.17).sin();
            r[i] = v;
            r[n + i] = v;
        }
        let mut z = vec![0.0; 2 * n];
        pre.apply(&r, &mut z);
        for i in 0..n {
            assert_relative_eq!(z[i], z[n + i], epsilon = 1e-12);
        }
    }

    #[test]
    fn preconditioner_application_is_linear() {
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let n2 = 2 * system.dim();
        let r: Vec<f64> = (0..n2).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let mut z = vec![0.0; n2];
        pre.apply(&r, &mut z);
        let scaled: Vec<f64> = r.iter().map(|v| 3.5 * v).collect();
        let mut z2 = vec![0.0; n2];
        pre.apply(&scaled, &mut z2);
        for i in 0..n2 {
            assert_relative_eq!(z2[i], 3.5 * z[i], max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn minres_matches_dense_lu_on_4x4() {
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let sol = minres_solve(
            &system,
            &pre,
            Stopping::RelTol {
                tol: 1e-10,
                max_iter: 300,
            },
        )
        .unwrap();
        let dense = dense_system(&system);
        let xd = dense
            .lu()
            .solve(&DVector::from_vec(system.rhs.clone()))
            .unwrap();
        let n = system.dim();
        for i in 0..n {
            assert!((sol.y[i] - xd[i]).abs() <= 1e-8, "y component {i}");
            assert!((sol.p[i] - xd[n + i]).abs() <= 1e-8, "p component {i}");
        }
    }

    #[test]
    fn converged_solve_has_small_block_residual() {
        let mesh = Arc::new(build_uniform_mesh(8).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let sol = minres_solve(
            &system,
            &pre,
            Stopping::RelTol {
                tol: 1e-12,
                max_iter: 300,
            },
        )
        .unwrap();
        let mut x = sol.y.clone();
        x.extend_from_slice(&sol.p);
        let rhs_norm: f64 = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        // The stopping test controls the preconditioned residual; allow for
        // the conditioning of P when checking the Euclidean one.
        assert!(system.residual_norm(&x) <= 1e-9 * rhs_norm);
    }

    #[test]
    fn solve_is_deterministic() {
        let mesh = Arc::new(build_uniform_mesh(8).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let run = || {
            let system = build_saddle_system_unconstrained(&mesh, &spec);
            let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
            minres_solve(
                &system,
                &pre,
                Stopping::RelTol {
                    tol: 1e-10,
                    max_iter: 300,
                },
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.y, b.y);
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn iteration_counts_robust_in_h_and_lambda() {
        let count = |n: usize, lambda: f64| {
            let mesh = Arc::new(build_uniform_mesh(n).unwrap());
            let spec = ProblemSpec::sine_preset(lambda);
            let system = build_saddle_system_unconstrained(&mesh, &spec);
            let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
            minres_solve(
                &system,
                &pre,
                Stopping::RelTol {
                    tol: 1e-8,
                    max_iter: 300,
                },
            )
            .unwrap()
            .iterations as i64
        };
        // Mesh robustness at fixed lambda.
        let c16 = count(16, 0.01);
        let c128 = count(128, 0.01);
        assert!((c16 - c128).abs() <= 2, "16x16: {c16}, 128x128: {c128}");
        // Lambda robustness at fixed mesh: counts stay uniformly small as the
        // preconditioned spectrum moves inside [-1,-1/sqrt(2)] u [1/sqrt(2),1].
        // lambda = 1 clusters the spectrum at +-1 and converges markedly
        // faster, so the spread is larger than between neighboring lambdas.
        let counts: Vec<i64> = [1.0, 1e-2, 1e-4].iter().map(|&l| count(32, l)).collect();
        assert!(counts.iter().all(|&c| c <= 16), "counts {counts:?}");
        for pair in counts.windows(2) {
            assert!((pair[1] - pair[0]).abs() <= 4, "counts {counts:?}");
        }
    }

    #[test]
    fn non_convergence_is_reported_not_silent() {
        let mesh = Arc::new(build_uniform_mesh(8).unwrap());
        let spec = ProblemSpec::sine_preset(0.01);
        let system = build_saddle_system_unconstrained(&mesh, &spec);
        let pre = build_preconditioner(&system, PreconditionerVariant::Unconstrained).unwrap();
        let result = minres_solve(
            &system,
            &pre,
            Stopping::RelTol {
                tol: 1e-14,
                max_iter: 2,
            },
        );
        assert!(matches!(
            result,
            Err(crate::linalg::SolveError::NoConvergence { iters: 2, .. })
        ));
    }

    #[test]
    fn diffusion_solver_handles_variable_nu() {
        // Cross-check sine-transform and banded paths on a constant
        // coefficient declared as varying.
        let mesh = Arc::new(build_uniform_mesh(6).unwrap());
        let mut spec = ProblemSpec::sine_preset(0.01);
        let rhs = AnalyticScalar::new(Arc::new(|x: f64, y: f64| x + y));
        let fast = solve_diffusion(&mesh, &spec, &rhs).unwrap();
        spec.nu = crate::problem::Diffusion::Varying {
            value: Arc::new(|_, _| 1.0),
            lower: 1.0,
            upper: 1.0,
        };
        let banded = solve_diffusion(&mesh, &spec, &rhs).unwrap();
        for v in 0..mesh.num_vertices() {
            assert_relative_eq!(fast.values()[v], banded.values()[v], epsilon = 1e-11);
        }
    }
}
