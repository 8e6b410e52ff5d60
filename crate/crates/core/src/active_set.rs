//! Primal-dual active set method for box-constrained controls.
//!
//! Node classifications are decided pointwise at mesh vertices from
//! `u + mu = u_d - p/lambda`: strictly below the lower bound is lower-active,
//! strictly above the upper bound is upper-active, ties count as inactive so
//! the unconstrained limit is exact. Set integrals like the restricted mass
//! `integral_I phi_i phi_j` are assembled elementwise with the integrand
//! multiplied by the P1 interpolant of the set indicator, which is symmetric
//! and reduces to the exact mass matrix on fully inactive regions.

use std::sync::Arc;

use thiserror::Error;

use crate::assembly::{
    apply_dirichlet_matrix, apply_dirichlet_vector, assemble_load, assemble_mass,
    assemble_stiffness, zero_dirichlet_matrix, SparseMatrix,
};
use crate::fields::{AnalyticScalar, ScalarField};
use crate::linalg::{SolveError, Stopping};
use crate::mesh::{Mesh, QuadRule};
use crate::problem::ProblemSpec;
use crate::saddle::{build_preconditioner, minres_solve, PreconditionerVariant, SaddleSystem};

#[derive(Debug, Error)]
pub enum ActiveSetError {
    #[error("problem has no control bounds; use the unconstrained solver")]
    Unconstrained,
    #[error("active set loop did not settle within {0} outer iterations")]
    NoTermination(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Nodewise classification of the control constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    LowerActive,
    UpperActive,
    Inactive,
}

/// One iterate of the active set loop.
pub struct ActiveSetState {
    pub iteration: usize,
    pub masks: Vec<NodeClass>,
    pub y: ScalarField,
    pub p: ScalarField,
    /// Nodal control values.
    pub u: Vec<f64>,
    /// Nodal multiplier `mu = -p/lambda + u_d - u`.
    pub mu: Vec<f64>,
}

/// Classifies every vertex from the current nodal control and multiplier.
pub fn update_active_sets(
    mesh: &Mesh,
    spec: &ProblemSpec,
    u: &[f64],
    mu: &[f64],
) -> Vec<NodeClass> {
    let bounds = spec.bounds.as_ref();
    (0..mesh.num_vertices())
        .map(|v| {
            let [x, y] = mesh.vertex(v);
            let w = u[v] + mu[v];
            match bounds {
                None => NodeClass::Inactive,
                Some(b) => {
                    if w < (b.lower)(x, y) {
                        NodeClass::LowerActive
                    } else if w > (b.upper)(x, y) {
                        NodeClass::UpperActive
                    } else {
                        NodeClass::Inactive
                    }
                }
            }
        })
        .collect()
}

/// Mass matrix restricted to the inactive set: the element integrand is
/// multiplied by the P1 interpolant of the inactive indicator, using the
/// exact formulas for products of three nodal basis functions.
pub fn assemble_restricted_mass(mesh: &Mesh, masks: &[NodeClass]) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let area = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    if masks[tri[k]] != NodeClass::Inactive {
                        continue;
                    }
                    // integral of phi_k phi_i phi_j over the element
                    let same = (k == i) as u8 + (k == j) as u8 + (i == j) as u8;
                    v += match same {
                        3 => area / 10.0,
                        1 => area / 30.0,
                        _ => area / 60.0,
                    };
                }
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), triplets, true)
}

/// Moment vector `integral(I_h[chi_S] g phi_j)` over the marked set.
fn restricted_moments(
    mesh: &Mesh,
    masks: &[NodeClass],
    class: NodeClass,
    g: &dyn Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    let pts = QuadRule::SevenPoint.points();
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        if tri.iter().all(|&v| masks[v] != class) {
            continue;
        }
        let coords = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        for &(bary, w) in pts {
            let x = [
                bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
            ];
            let mut indicator = 0.0;
            for k in 0..3 {
                if masks[tri[k]] == class {
                    indicator += bary[k];
                }
            }
            let gv = indicator * g(x[0], x[1]) * w * area;
            for i in 0..3 {
                b[tri[i]] += gv * bary[i];
            }
        }
    }
    b
}

/// Assembles the KKT system with the bottom-right mass restricted to the
/// inactive set and the active-set moment vectors on the right-hand side.
pub fn build_saddle_system_active(
    mesh: &Mesh,
    spec: &ProblemSpec,
    masks: &[NodeClass],
) -> SaddleSystem {
    let mass = apply_dirichlet_matrix(&assemble_mass(mesh), mesh);
    let coupling = zero_dirichlet_matrix(&assemble_stiffness(mesh, spec), mesh);
    let control_mass = apply_dirichlet_matrix(&assemble_restricted_mass(mesh, masks), mesh);

    let n = mesh.num_vertices();
    let mut rhs = vec![0.0; 2 * n];
    let yd = AnalyticScalar::new(spec.desired_state.clone());
    let mut b_y = assemble_load(mesh, &yd);
    apply_dirichlet_vector(&mut b_y, mesh);
    rhs[..n].copy_from_slice(&b_y);

    let f = AnalyticScalar::new(spec.source.clone());
    let mut b_p = assemble_load(mesh, &f);
    let ud = spec.desired_control.clone();
    let m_ud = restricted_moments(mesh, masks, NodeClass::Inactive, &|x, y| ud(x, y));
    let bounds = spec.bounds.as_ref().expect("constrained problem");
    let la = bounds.lower.clone();
    let lb = bounds.upper.clone();
    let m_ua = restricted_moments(mesh, masks, NodeClass::LowerActive, &|x, y| la(x, y));
    let m_ub = restricted_moments(mesh, masks, NodeClass::UpperActive, &|x, y| lb(x, y));
    for i in 0..n {
        b_p[i] += m_ud[i] + m_ua[i] + m_ub[i];
    }
    apply_dirichlet_vector(&mut b_p, mesh);
    for i in 0..n {
        rhs[n + i] = -b_p[i];
    }

    SaddleSystem {
        mass,
        coupling,
        control_mass,
        lambda: spec.lambda,
        rhs,
        mesh_id: mesh.id(),
    }
}

pub struct ConstrainedSolution {
    pub y: ScalarField,
    pub p: ScalarField,
    pub u: ScalarField,
    pub mu: Vec<f64>,
    pub masks: Vec<NodeClass>,
    pub outer_iterations: usize,
    pub minres_iterations: usize,
}

/// Nodal elimination of the control from adjoint values and masks.
fn eliminate_control(
    mesh: &Mesh,
    spec: &ProblemSpec,
    p: &[f64],
    masks: &[NodeClass],
) -> Vec<f64> {
    let bounds = spec.bounds.as_ref().expect("constrained problem");
    (0..mesh.num_vertices())
        .map(|v| {
            let [x, y] = mesh.vertex(v);
            match masks[v] {
                NodeClass::LowerActive => (bounds.lower)(x, y),
                NodeClass::UpperActive => (bounds.upper)(x, y),
                NodeClass::Inactive => {
                    (spec.desired_control)(x, y) - p[v] / spec.lambda
                }
            }
        })
        .collect()
}

/// Runs the primal-dual active set loop: warm start from the clipped
/// unconstrained solve, then re-solve with updated masks until two
/// consecutive active sets coincide.
pub fn solve_constrained(
    mesh: &Arc<Mesh>,
    spec: &ProblemSpec,
    stop: Stopping,
    max_outer: usize,
) -> Result<ConstrainedSolution, ActiveSetError> {
    if spec.bounds.is_none() {
        return Err(ActiveSetError::Unconstrained);
    }
    let mut minres_total = 0;
    let (_, p0, sol0) = crate::saddle::solve_unconstrained(mesh, spec, stop)?;
    minres_total += sol0.iterations;

    // Initial classification from the clipped unconstrained iterate; the
    // combination u + mu equals u_d - p/lambda regardless of the clipping.
    let u0: Vec<f64> = (0..mesh.num_vertices())
        .map(|v| {
            let [x, y] = mesh.vertex(v);
            let raw = (spec.desired_control)(x, y) - p0.values()[v] / spec.lambda;
            spec.project_control_value(x, y, raw)
        })
        .collect();
    let mu0: Vec<f64> = (0..mesh.num_vertices())
        .map(|v| {
            let [x, y] = mesh.vertex(v);
            -p0.values()[v] / spec.lambda + (spec.desired_control)(x, y) - u0[v]
        })
        .collect();
    let mut masks = update_active_sets(mesh, spec, &u0, &mu0);

    for outer in 1..=max_outer {
        let system = build_saddle_system_active(mesh, spec, &masks);
        let precond = build_preconditioner(&system, PreconditionerVariant::ActiveSet)
            .map_err(ActiveSetError::Solve)?;
        let sol = minres_solve(&system, &precond, stop).map_err(ActiveSetError::Solve)?;
        minres_total += sol.iterations;

        let u = eliminate_control(mesh, spec, &sol.p, &masks);
        let mu: Vec<f64> = (0..mesh.num_vertices())
            .map(|v| {
                let [x, y] = mesh.vertex(v);
                -sol.p[v] / spec.lambda + (spec.desired_control)(x, y) - u[v]
            })
            .collect();
        let new_masks = update_active_sets(mesh, spec, &u, &mu);
        if new_masks == masks {
            return Ok(ConstrainedSolution {
                y: ScalarField::new(mesh.clone(), sol.y, true),
                p: ScalarField::new(mesh.clone(), sol.p, true),
                u: ScalarField::new(mesh.clone(), u, false),
                mu,
                masks,
                outer_iterations: outer,
                minres_iterations: minres_total,
            });
        }
        masks = new_masks;
    }
    Err(ActiveSetError::NoTermination(max_outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;
    use crate::problem::ControlBounds;
    use crate::saddle::build_saddle_system_unconstrained;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn stop() -> Stopping {
        Stopping::RelTol {
            tol: 1e-12,
            max_iter: 400,
        }
    }

    #[test]
    fn classification_cases() {
        let mesh = build_uniform_mesh(2).unwrap();
        let n = mesh.num_vertices();

        // Unbounded problem: everything inactive.
        let free = ProblemSpec::sine_preset(0.01);
        let masks = update_active_sets(&mesh, &free, &vec![0.0; n], &vec![0.0; n]);
        assert!(masks.iter().all(|&m| m == NodeClass::Inactive));

        let spec = ProblemSpec::sine_preset(0.01).with_constant_bounds(-1.0, 1.0);
        // u + mu below the lower bound everywhere: all lower-active.
        let masks = update_active_sets(&mesh, &spec, &vec![-3.0; n], &vec![0.0; n]);
        assert!(masks.iter().all(|&m| m == NodeClass::LowerActive));

        // Exact tie with the bound counts as inactive.
        let masks = update_active_sets(&mesh, &spec, &vec![-1.0; n], &vec![0.0; n]);
        assert!(masks.iter().all(|&m| m == NodeClass::Inactive));
    }

    #[test]
    fn restricted_mass_reduces_to_mass_when_all_inactive() {
        let mesh = build_uniform_mesh(3).unwrap();
        let masks = vec![NodeClass::Inactive; mesh.num_vertices()];
        let mi = assemble_restricted_mass(&mesh, &masks);
        let m = assemble_mass(&mesh);
        for r in 0..m.dim() {
            let (cols, vals) = m.row(r);
            for (c, v) in cols.iter().zip(vals) {
                assert_relative_eq!(mi.get(r, *c), *v, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn restricted_mass_is_symmetric_positive_semidefinite() {
        let mesh = build_uniform_mesh(3).unwrap();
        let n = mesh.num_vertices();
        let masks: Vec<NodeClass> = (0..n)
            .map(|v| {
                if v % 3 == 0 {
                    NodeClass::UpperActive
                } else {
                    NodeClass::Inactive
                }
            })
            .collect();
        let mi = assemble_restricted_mass(&mesh, &masks);
        assert_eq!(mi.symmetry_defect(), 0.0);
        let dense = nalgebra::DMatrix::from_fn(n, n, |r, c| mi.get(r, c));
        let eig = nalgebra::SymmetricEigen::new(dense);
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn all_inactive_system_matches_unconstrained() {
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let spec = ProblemSpec::sine_preset(0.01).with_constant_bounds(-1e6, 1e6);
        let masks = vec![NodeClass::Inactive; mesh.num_vertices()];
        let active = build_saddle_system_active(&mesh, &spec, &masks);
        let free = build_saddle_system_unconstrained(&mesh, &spec);
        let n = free.dim();
        for r in 0..n {
            let (cols, vals) = free.control_mass.row(r);
            for (c, v) in cols.iter().zip(vals) {
                assert_relative_eq!(active.control_mass.get(r, *c), *v, max_relative = 1e-13);
            }
        }
        for i in 0..2 * n {
            assert_relative_eq!(active.rhs[i], free.rhs[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn fully_active_zero_bounds_reduce_to_plain_state_equation() {
        // u_a = u_b = 0 with u_d = 0 pins the control to zero; the state then
        // solves the plain diffusion problem with the source alone.
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let mut spec = ProblemSpec::sine_preset(0.01);
        spec.source = Arc::new(|x, y| x + y);
        spec.exact = None;
        let spec = spec.with_constant_bounds(0.0, 0.0);

        // Force every node lower-active (u + mu strictly below u_a = 0 is
        // impossible with a tie, so mark explicitly).
        let masks = vec![NodeClass::LowerActive; mesh.num_vertices()];
        let system = build_saddle_system_active(&mesh, &spec, &masks);
        let pre = build_preconditioner(&system, PreconditionerVariant::ActiveSet).unwrap();
        let sol = minres_solve(&system, &pre, stop()).unwrap();

        let rhs = crate::fields::AnalyticScalar::new(spec.source.clone());
        let direct = crate::saddle::solve_diffusion(&mesh, &spec, &rhs).unwrap();
        for v in 0..mesh.num_vertices() {
            assert_relative_eq!(sol.y[v], direct.values()[v], epsilon = 1e-9);
        }
    }

    #[test]
    fn wide_bounds_give_one_outer_iteration_matching_unconstrained() {
        let mesh = Arc::new(build_uniform_mesh(8).unwrap());
        let spec = ProblemSpec::sine_preset(0.01).with_constant_bounds(-1e4, 1e4);
        let sol = solve_constrained(&mesh, &spec, stop(), 50).unwrap();
        assert_eq!(sol.outer_iterations, 1);
        let (yu, pu, _) = crate::saddle::solve_unconstrained(&mesh, &spec, stop()).unwrap();
        for v in 0..mesh.num_vertices() {
            assert_relative_eq!(sol.y.values()[v], yu.values()[v], epsilon = 1e-9);
            assert_relative_eq!(sol.p.values()[v], pu.values()[v], epsilon = 1e-9);
        }
    }

    #[test]
    fn benchmark_bounds_converge_with_stable_masks() {
        let mesh = Arc::new(build_uniform_mesh(8).unwrap());
        let spec = ProblemSpec::sine_preset(0.01).with_constant_bounds(0.0, 15.0);
        let sol = solve_constrained(&mesh, &spec, stop(), 50).unwrap();
        assert!(sol.outer_iterations <= 10, "took {}", sol.outer_iterations);
        // The unconstrained control peaks near 2 pi^2 > 15, so an upper-active
        // region must exist.
        assert!(sol.masks.iter().any(|&m| m == NodeClass::UpperActive));

        // Nodal projection identity at convergence.
        for v in 0..mesh.num_vertices() {
            let [x, y] = mesh.vertex(v);
            let raw = -sol.p.values()[v] / spec.lambda;
            let clipped = spec.project_control_value(x, y, raw);
            assert!(
                (sol.u.values()[v] - clipped).abs() <= 1e-8,
                "projection identity violated at node {v}"
            );
        }

        // Elimination consistency: reconstruct u from (p, masks).
        let rebuilt = eliminate_control(&mesh, &spec, sol.p.values(), &sol.masks);
        for v in 0..mesh.num_vertices() {
            assert!((rebuilt[v] - sol.u.values()[v]).abs() <= 1e-10);
        }
    }

    #[test]
    fn constrained_and_unconstrained_paths_agree_when_bounds_slack() {
        let mesh = Arc::new(build_uniform_mesh(4).unwrap());
        let mut spec = ProblemSpec::sine_preset(0.01);
        spec.bounds = Some(ControlBounds::constant(-1e9, 1e9));
        let sol = solve_constrained(&mesh, &spec, stop(), 50).unwrap();
        let free = ProblemSpec::sine_preset(0.01);
        let (yu, _, _) = crate::saddle::solve_unconstrained(&mesh, &free, stop()).unwrap();
        for v in 0..mesh.num_vertices() {
            assert_relative_eq!(sol.y.values()[v], yu.values()[v], epsilon = 1e-9);
        }
    }
}
