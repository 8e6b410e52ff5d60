//! Guaranteed bounds for the cost functional and the discretization error.
//!
//! For arbitrary admissible inputs — a state-like function `eta`, an
//! adjoint-like function `zeta`, H(div) fluxes `tau`, `rho` and the control
//! `v_zeta` induced by `zeta` through the projection formula — the module
//! evaluates
//!
//! * the majorant `J_plus(alpha, beta; eta, tau, v)`, an upper bound for the
//!   optimal cost for every positive `alpha`, `beta`,
//! * the minorant `J_minus(eta, zeta, tau, rho, v_zeta)`, a lower bound,
//! * the error majorants `M_plus = J_plus - J_minus` and `M_plus_1`, which
//!   bound the control/state discretization error in the combined L2 norm
//!   and its gradient-weighted variant,
//! * the closed-form alternating optimization of `alpha`, `beta`,
//! * efficiency indices against the exact optimal cost and reference-mesh
//!   combined norms.
//!
//! All bounds hold for arbitrary inputs; feeding the exact solution with its
//! exact fluxes and `alpha -> 0` makes every residual vanish and both bounds
//! collapse onto the exact cost.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{check_meshes, AssemblyError};
use crate::fields::{CrossMesh, PointFlux, PointScalar, ProjectedControl, ScalarField};
use crate::linalg::SolveError;
use crate::mesh::{build_uniform_mesh, integrate, Mesh, MeshError, QuadRule};
use crate::problem::ProblemSpec;
use crate::saddle::solve_diffusion;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("majorant parameters must be positive (alpha = {alpha}, beta = {beta})")]
    NonPositiveParams { alpha: f64, beta: f64 },
    #[error("efficiency indices need a positive minorant, got {0}")]
    NonPositiveMinorant(f64),
    #[error("combined norms need the exact solution of the problem")]
    MissingExactSolution,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Young-inequality weights of the majorant plus optimizer controls.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorParams {
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            alpha: 1.0,
            beta: 1.0,
            tol: 1e-10,
            max_sweeps: 100,
        }
    }
}

impl EstimatorParams {
    fn check(&self) -> Result<(), EstimatorError> {
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(EstimatorError::NonPositiveParams {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        Ok(())
    }
}

/// Picks the cheapest exact rule: degree-2 for piecewise-polynomial
/// integrands, degree-5 once analytic data enters.
fn rule_for(piecewise_polynomial: bool) -> QuadRule {
    if piecewise_polynomial {
        QuadRule::EdgeMidpoint
    } else {
        QuadRule::SevenPoint
    }
}

/// The control induced by `zeta` via the projection formula; entry point for
/// the projection operation.
pub fn project_control<'a>(
    zeta: &'a dyn PointScalar,
    spec: &'a ProblemSpec,
) -> ProjectedControl<'a> {
    ProjectedControl::new(zeta, spec)
}

/// All residual norms entering the bounds. Names follow the report columns:
/// `r1` are equation residuals, `r2` flux gaps, `r3` data misfits.
#[derive(Debug, Clone, Copy)]
pub struct ResidualNorms {
    /// `|| f + v + div tau ||`
    pub r1_eta: f64,
    /// `|| eta - y_d + div rho ||`
    pub r1_zeta: f64,
    /// `|| tau - nu grad eta ||`
    pub r2_eta: f64,
    /// `|| rho - nu grad zeta ||`
    pub r2_zeta: f64,
    /// `|| eta - y_d ||`
    pub r3_eta: f64,
    /// `|| zeta ||`
    pub r3_zeta: f64,
    /// `integral (f + v + div tau) zeta`
    pub r4: f64,
    /// `integral (tau - nu grad eta) . grad zeta`
    pub r5: f64,
    /// `|| v - u_d ||`
    pub control_misfit: f64,
}

struct FieldsPP {
    eta_pp: bool,
    zeta_pp: bool,
    tau_pp: bool,
    rho_pp: bool,
}

fn pp_of(
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    tau: &dyn PointFlux,
    rho: &dyn PointFlux,
) -> FieldsPP {
    FieldsPP {
        eta_pp: eta.mesh_id().is_some(),
        zeta_pp: zeta.mesh_id().is_some(),
        tau_pp: tau.mesh_id().is_some(),
        rho_pp: rho.mesh_id().is_some(),
    }
}

fn residual_norms(
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    tau: &dyn PointFlux,
    rho: &dyn PointFlux,
    pp: &FieldsPP,
) -> Result<ResidualNorms, EstimatorError> {
    check_meshes(
        mesh,
        &[eta.mesh_id(), zeta.mesh_id(), tau.mesh_id(), rho.mesh_id()],
    )?;
    let v = ProjectedControl::new(zeta, spec);
    let nu_const = spec.nu.is_constant();
    let yd = &spec.desired_state;
    let ud = &spec.desired_control;
    let f = &spec.source;

    let sq = |x: f64| x * x;
    let nu_at = |x: [f64; 2]| spec.nu.eval(x[0], x[1]);

    let r1_eta = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(f(x[0], x[1]) + v.value(t, x) + tau.divergence(t, x))
    })
    .max(0.0)
    .sqrt();
    let r1_zeta = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(eta.value(t, x) - yd(x[0], x[1]) + rho.divergence(t, x))
    })
    .max(0.0)
    .sqrt();
    let r2_eta = integrate(mesh, rule_for(pp.eta_pp && pp.tau_pp && nu_const), |t, x| {
        let tv = tau.value(t, x);
        let g = eta.gradient(t, x);
        let nu = nu_at(x);
        sq(tv[0] - nu * g[0]) + sq(tv[1] - nu * g[1])
    })
    .max(0.0)
    .sqrt();
    let r2_zeta = integrate(mesh, rule_for(pp.zeta_pp && pp.rho_pp && nu_const), |t, x| {
        let rv = rho.value(t, x);
        let g = zeta.gradient(t, x);
        let nu = nu_at(x);
        sq(rv[0] - nu * g[0]) + sq(rv[1] - nu * g[1])
    })
    .max(0.0)
    .sqrt();
    let r3_eta = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(eta.value(t, x) - yd(x[0], x[1]))
    })
    .max(0.0)
    .sqrt();
    let r3_zeta = integrate(mesh, rule_for(pp.zeta_pp), |t, x| sq(zeta.value(t, x)))
        .max(0.0)
        .sqrt();
    let r4 = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        (f(x[0], x[1]) + v.value(t, x) + tau.divergence(t, x)) * zeta.value(t, x)
    });
    let r5 = integrate(
        mesh,
        rule_for(pp.eta_pp && pp.tau_pp && pp.zeta_pp && nu_const),
        |t, x| {
            let tv = tau.value(t, x);
            let ge = eta.gradient(t, x);
            let gz = zeta.gradient(t, x);
            let nu = nu_at(x);
            (tv[0] - nu * ge[0]) * gz[0] + (tv[1] - nu * ge[1]) * gz[1]
        },
    );
    let control_misfit = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(v.value(t, x) - ud(x[0], x[1]))
    })
    .max(0.0)
    .sqrt();

    Ok(ResidualNorms {
        r1_eta,
        r1_zeta,
        r2_eta,
        r2_zeta,
        r3_eta,
        r3_zeta,
        r4,
        r5,
        control_misfit,
    })
}

/// Majorant value assembled from precomputed residual norms.
fn majorant_from_norms(params: &EstimatorParams, spec: &ProblemSpec, n: &ResidualNorms) -> f64 {
    let (alpha, beta) = (params.alpha, params.beta);
    let cf = spec.friedrichs;
    let nu_low = spec.nu_lower();
    let c1 = (1.0 + alpha) * (1.0 + beta) * cf * cf / (2.0 * alpha * nu_low * nu_low);
    let c2 = (1.0 + alpha) * (1.0 + beta) * cf.powi(4) / (2.0 * alpha * beta * nu_low * nu_low);
    0.5 * (1.0 + alpha) * n.r3_eta * n.r3_eta
        + c1 * n.r2_eta * n.r2_eta
        + c2 * n.r1_eta * n.r1_eta
        + 0.5 * spec.lambda * n.control_misfit * n.control_misfit
}

/// Minorant value assembled from precomputed residual norms.
fn minorant_from_norms(spec: &ProblemSpec, n: &ResidualNorms) -> f64 {
    let cf = spec.friedrichs;
    let nu_low = spec.nu_lower();
    let first = cf * n.r1_zeta + n.r2_zeta;
    let second = cf.powi(3) / (spec.lambda * nu_low) * n.r1_zeta
        + cf * cf / (spec.lambda * nu_low) * n.r2_zeta
        + cf * n.r1_eta
        + n.r2_eta;
    0.5 * n.r3_eta * n.r3_eta
        + 0.5 * spec.lambda * n.control_misfit * n.control_misfit
        + n.r4
        + n.r5
        - first * second / nu_low
}

/// Guaranteed upper bound for the optimal cost, evaluated with the control
/// induced by `zeta` (the projection formula, or plainly `u_d - zeta/lambda`
/// without bounds). Also returns the residual norms it was built from.
pub fn majorant(
    params: &EstimatorParams,
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    tau: &dyn PointFlux,
    zeta: &dyn PointScalar,
) -> Result<(f64, ResidualNorms), EstimatorError> {
    params.check()?;
    let pp = pp_of(eta, zeta, tau, tau);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, tau, &pp)?;
    Ok((majorant_from_norms(params, spec, &norms), norms))
}

/// Guaranteed lower bound for the optimal cost; the control is computed
/// internally from `zeta` by the projection formula.
pub fn minorant(
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    tau: &dyn PointFlux,
    rho: &dyn PointFlux,
) -> Result<(f64, ResidualNorms), EstimatorError> {
    let pp = pp_of(eta, zeta, tau, rho);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, rho, &pp)?;
    Ok((minorant_from_norms(spec, &norms), norms))
}

/// Quadratic coefficients of the majorant in `(alpha, beta)`:
/// `J = (1+a) A1 + (1+a)(1+b)/a A2 + (1+a)(1+b)/(a b) A3 + const`.
#[derive(Debug, Clone, Copy)]
pub struct MajorantTerms {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// alpha/beta-independent tail `lambda/2 ||v - u_d||^2`.
    pub constant: f64,
}

impl MajorantTerms {
    pub fn from_norms(spec: &ProblemSpec, n: &ResidualNorms) -> Self {
        let cf = spec.friedrichs;
        let nu_low = spec.nu_lower();
        MajorantTerms {
            a1: 0.5 * n.r3_eta * n.r3_eta,
            a2: cf * cf / (2.0 * nu_low * nu_low) * n.r2_eta * n.r2_eta,
            a3: cf.powi(4) / (2.0 * nu_low * nu_low) * n.r1_eta * n.r1_eta,
            constant: 0.5 * spec.lambda * n.control_misfit * n.control_misfit,
        }
    }

    pub fn value(&self, alpha: f64, beta: f64) -> f64 {
        (1.0 + alpha) * self.a1
            + (1.0 + alpha) * (1.0 + beta) / alpha * self.a2
            + (1.0 + alpha) * (1.0 + beta) / (alpha * beta) * self.a3
            + self.constant
    }
}

/// Alternating closed-form minimization of the majorant over its two Young
/// parameters: `beta = sqrt(A3/A2)`, then `alpha = sqrt(B/A1)` with
/// `B = (1+beta)(A2 + A3/beta)`, iterated until the relative change drops
/// below `tol`. Degenerate coefficients take pinned fallback values.
pub fn optimize_terms(terms: &MajorantTerms, tol: f64, max_sweeps: usize) -> (f64, f64) {
    const ALPHA_FLOOR: f64 = 1e-8;
    const BETA_FLOOR: f64 = 1e-8;
    const BETA_CAP: f64 = 1e8;
    let (a1, a2, a3) = (terms.a1, terms.a2, terms.a3);
    let mut alpha = 1.0;
    let mut beta = 1.0;
    let mut value = terms.value(alpha, beta);
    for _ in 0..max_sweeps.max(1) {
        beta = if a2 == 0.0 {
            BETA_CAP
        } else if a3 == 0.0 {
            BETA_FLOOR
        } else {
            (a3 / a2).sqrt()
        };
        let b = (1.0 + beta) * (a2 + a3 / beta);
        alpha = if a1 == 0.0 || b == 0.0 {
            ALPHA_FLOOR
        } else {
            (b / a1).sqrt()
        };
        let new_value = terms.value(alpha, beta);
        let change = (value - new_value).abs();
        value = new_value;
        if change <= tol * value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (alpha, beta)
}

/// Optimizes the Young parameters for the given inputs and returns them
/// together with the optimized majorant value.
pub fn optimize_params(
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    tau: &dyn PointFlux,
    zeta: &dyn PointScalar,
    tol: f64,
    max_sweeps: usize,
) -> Result<(EstimatorParams, f64), EstimatorError> {
    let pp = pp_of(eta, zeta, tau, tau);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, tau, &pp)?;
    let terms = MajorantTerms::from_norms(spec, &norms);
    let (alpha, beta) = optimize_terms(&terms, tol, max_sweeps);
    let params = EstimatorParams {
        alpha,
        beta,
        tol,
        max_sweeps,
    };
    Ok((params, terms.value(alpha, beta)))
}

/// Error majorant for the combined L2 norm: `M_plus = J_plus - J_minus`, a
/// guaranteed upper bound for `|||u - v_zeta|||^2`.
pub fn error_majorant(
    params: &EstimatorParams,
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    tau: &dyn PointFlux,
    rho: &dyn PointFlux,
) -> Result<f64, EstimatorError> {
    params.check()?;
    let pp = pp_of(eta, zeta, tau, rho);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, rho, &pp)?;
    Ok(majorant_from_norms(params, spec, &norms) - minorant_from_norms(spec, &norms))
}

fn h1_penalty(spec: &ProblemSpec, n: &ResidualNorms) -> f64 {
    let cf = spec.friedrichs;
    let s = n.r2_eta + cf * n.r1_eta;
    1.5 * spec.lambda / (cf * cf) * s * s
}

/// Error majorant for the gradient-weighted combined norm:
/// `M_plus_1 = M_plus + 3 lambda/(2 C_F^2) (||tau - nu grad eta|| + C_F ||f + v + div tau||)^2`.
pub fn error_majorant_h1(
    params: &EstimatorParams,
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    tau: &dyn PointFlux,
    rho: &dyn PointFlux,
) -> Result<f64, EstimatorError> {
    params.check()?;
    let pp = pp_of(eta, zeta, tau, rho);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, rho, &pp)?;
    let m = majorant_from_norms(params, spec, &norms) - minorant_from_norms(spec, &norms);
    Ok(m + h1_penalty(spec, &norms))
}

/// Reference-mesh evaluation of the combined error norms
/// `|||u - v_zeta|||^2 = 1/2 ||y(u) - y(v_zeta)||^2 + lambda/2 ||u - v_zeta||^2`
/// and the gradient-weighted variant
/// `1/2 ||y(u) - y(v_zeta)||^2 + 2 lambda nu_low^2 / C_F^2 ||grad(y(u) - y(v_zeta))||^2`.
/// The unknown state `y(v_zeta)` is approximated by a diffusion solve on a
/// `ref_factor` times finer mesh.
pub fn combined_norms(
    mesh: &Mesh,
    spec: &ProblemSpec,
    zeta: &ScalarField,
    ref_factor: usize,
) -> Result<(f64, f64), EstimatorError> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or(EstimatorError::MissingExactSolution)?;
    check_meshes(mesh, &[Some(zeta.mesh().id())])?;
    assert!(ref_factor >= 2, "reference factor must be at least 2");
    let ref_mesh = Arc::new(build_uniform_mesh(mesh.subdivisions() * ref_factor)?);

    // State solve with the projected control on the reference mesh.
    let zeta_ref = CrossMesh(zeta);
    let v_ref = ProjectedControl::new(&zeta_ref, spec);
    struct Rhs<'a> {
        f: &'a crate::problem::ScalarFn,
        v: &'a ProjectedControl<'a>,
    }
    impl PointScalar for Rhs<'_> {
        fn value(&self, tri: usize, x: [f64; 2]) -> f64 {
            (self.f)(x[0], x[1]) + self.v.value(tri, x)
        }
    }
    let rhs = Rhs {
        f: &spec.source,
        v: &v_ref,
    };
    let y_ref = solve_diffusion(&ref_mesh, spec, &rhs)?;

    let sq = |x: f64| x * x;
    let state_l2 = integrate(&ref_mesh, QuadRule::SevenPoint, |t, x| {
        sq((exact.state)(x[0], x[1]) - y_ref.eval_in(t, x))
    })
    .max(0.0);
    let control_l2 = integrate(&ref_mesh, QuadRule::SevenPoint, |t, x| {
        sq((exact.control)(x[0], x[1]) - v_ref.value(t, x))
    })
    .max(0.0);
    let state_h1 = integrate(&ref_mesh, QuadRule::SevenPoint, |t, x| {
        let ge = (exact.state_grad)(x[0], x[1]);
        let gr = y_ref.gradient_in(t);
        sq(ge[0] - gr[0]) + sq(ge[1] - gr[1])
    })
    .max(0.0);

    let norm_sq = 0.5 * state_l2 + 0.5 * spec.lambda * control_l2;
    let nu_low = spec.nu_lower();
    let cf = spec.friedrichs;
    let norm_h1_sq = 0.5 * state_l2 + 2.0 * spec.lambda * nu_low * nu_low / (cf * cf) * state_h1;
    Ok((norm_sq, norm_h1_sq))
}

/// Efficiency indices of the two-sided bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EfficiencyIndices {
    pub i_plus: f64,
    pub i_minus: f64,
    pub i_two_sided: f64,
    pub i_m1: Option<f64>,
}

/// `I+ = J+/J`, `I- = J/J-`, `I+/- = J+/J-` and, when a reference norm is
/// supplied, `I_M1 = sqrt(M_plus_1 / |||u - v|||_1^2)`.
pub fn efficiency_indices(
    j_plus: f64,
    j_minus: f64,
    exact_cost: f64,
    m_plus_1: f64,
    combined_norm_h1_sq: Option<f64>,
) -> Result<EfficiencyIndices, EstimatorError> {
    if j_minus <= 0.0 {
        return Err(EstimatorError::NonPositiveMinorant(j_minus));
    }
    Ok(EfficiencyIndices {
        i_plus: j_plus / exact_cost,
        i_minus: exact_cost / j_minus,
        i_two_sided: j_plus / j_minus,
        i_m1: combined_norm_h1_sq.map(|n| (m_plus_1 / n).sqrt()),
    })
}

/// Two sides of the control-gap estimate
/// `||v_{p_eta} - v_zeta|| <= (1/lambda) ||p_eta - zeta||`.
pub fn control_gap_bound(
    mesh: &Mesh,
    spec: &ProblemSpec,
    p_eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
) -> Result<(f64, f64), EstimatorError> {
    check_meshes(mesh, &[p_eta.mesh_id(), zeta.mesh_id()])?;
    let va = ProjectedControl::new(p_eta, spec);
    let vb = ProjectedControl::new(zeta, spec);
    let sq = |x: f64| x * x;
    let lhs = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(va.value(t, x) - vb.value(t, x))
    })
    .max(0.0)
    .sqrt();
    let rhs = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(p_eta.value(t, x) - zeta.value(t, x))
    })
    .max(0.0)
    .sqrt()
        / spec.lambda;
    Ok((lhs, rhs))
}

/// Computable upper bound for the adjoint-state gradient error:
/// `||grad(p_eta - zeta)|| <= (C_F ||eta - y_d + div rho|| + ||rho - nu grad zeta||) / nu_low`.
pub fn adjoint_error_bound(
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &dyn PointScalar,
    zeta: &dyn PointScalar,
    rho: &dyn PointFlux,
) -> Result<f64, EstimatorError> {
    check_meshes(mesh, &[eta.mesh_id(), zeta.mesh_id(), rho.mesh_id()])?;
    let sq = |x: f64| x * x;
    let div_residual = integrate(mesh, QuadRule::SevenPoint, |t, x| {
        sq(eta.value(t, x) - (spec.desired_state)(x[0], x[1]) + rho.divergence(t, x))
    })
    .max(0.0)
    .sqrt();
    let nu_const = spec.nu.is_constant();
    let flux_gap = integrate(
        mesh,
        rule_for(zeta.mesh_id().is_some() && rho.mesh_id().is_some() && nu_const),
        |t, x| {
            let rv = rho.value(t, x);
            let g = zeta.gradient(t, x);
            let nu = spec.nu.eval(x[0], x[1]);
            sq(rv[0] - nu * g[0]) + sq(rv[1] - nu * g[1])
        },
    )
    .max(0.0)
    .sqrt();
    Ok((spec.friedrichs * div_residual + flux_gap) / spec.nu_lower())
}

/// Full certificate for one set of inputs: both bounds, error majorants,
/// residual components, optimized parameters, and (when the exact solution
/// and a reference factor are available) combined norms and indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub j_plus: f64,
    pub j_minus: f64,
    pub m_plus: f64,
    pub m_plus_1: f64,
    pub r1_eta: f64,
    pub r1_zeta: f64,
    pub r2_eta: f64,
    pub r2_zeta: f64,
    pub r3_eta: f64,
    pub r3_zeta: f64,
    pub r4: f64,
    pub r5: f64,
    pub alpha: f64,
    pub beta: f64,
    pub i_plus: Option<f64>,
    pub i_minus: Option<f64>,
    pub i_two_sided: Option<f64>,
    pub i_m1: Option<f64>,
    pub combined_norm_sq: Option<f64>,
    pub combined_norm_h1_sq: Option<f64>,
}

/// Evaluates every bound for P1 inputs with their reconstructed fluxes.
/// `ref_factor`, when set and the exact solution is known, triggers the
/// reference-mesh combined norms and all efficiency indices.
pub fn evaluate_bounds(
    mesh: &Mesh,
    spec: &ProblemSpec,
    eta: &ScalarField,
    zeta: &ScalarField,
    tau: &crate::flux::FluxField,
    rho: &crate::flux::FluxField,
    ref_factor: Option<usize>,
) -> Result<BoundsReport, EstimatorError> {
    let pp = pp_of(eta, zeta, tau, rho);
    let norms = residual_norms(mesh, spec, eta, zeta, tau, rho, &pp)?;
    let terms = MajorantTerms::from_norms(spec, &norms);
    let (alpha, beta) = optimize_terms(&terms, 1e-10, 100);
    let j_plus = terms.value(alpha, beta);
    let j_minus = minorant_from_norms(spec, &norms);
    let m_plus = j_plus - j_minus;
    let m_plus_1 = m_plus + h1_penalty(spec, &norms);

    let mut report = BoundsReport {
        j_plus,
        j_minus,
        m_plus,
        m_plus_1,
        r1_eta: norms.r1_eta,
        r1_zeta: norms.r1_zeta,
        r2_eta: norms.r2_eta,
        r2_zeta: norms.r2_zeta,
        r3_eta: norms.r3_eta,
        r3_zeta: norms.r3_zeta,
        r4: norms.r4,
        r5: norms.r5,
        alpha,
        beta,
        i_plus: None,
        i_minus: None,
        i_two_sided: None,
        i_m1: None,
        combined_norm_sq: None,
        combined_norm_h1_sq: None,
    };

    if let (Some(exact), Some(factor)) = (spec.exact.as_ref(), ref_factor) {
        let (n_sq, n1_sq) = combined_norms(mesh, spec, zeta, factor)?;
        report.combined_norm_sq = Some(n_sq);
        report.combined_norm_h1_sq = Some(n1_sq);
        let idx = efficiency_indices(j_plus, j_minus, exact.cost, m_plus_1, Some(n1_sq))?;
        report.i_plus = Some(idx.i_plus);
        report.i_minus = Some(idx.i_minus);
        report.i_two_sided = Some(idx.i_two_sided);
        report.i_m1 = idx.i_m1;
    }
    Ok(report)
}
