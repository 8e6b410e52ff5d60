//! Continuous problem data.
//!
//! A [`ProblemSpec`] carries everything that defines the control problem on
//! the unit square: the diffusion coefficient with its bounds, the
//! regularization weight, the source / desired-state / desired-control
//! functions, optional box constraints on the control, and the Friedrichs
//! constant. When the exact optimum is known (manufactured data) it is
//! attached so efficiency indices and reference norms can be computed.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{integrate, Mesh, QuadRule};

/// Scalar function of position.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Gradient field of position.
pub type GradFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Friedrichs constant of the unit square: `||w|| <= C_F ||grad w||` for
/// functions vanishing on the boundary.
pub const UNIT_SQUARE_FRIEDRICHS: f64 = 0.225_079_079_039_276_5; // 1/(sqrt(2) pi)

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("regularization weight lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("diffusion coefficient out of its declared bounds at ({0}, {1})")]
    DiffusionOutOfBounds(f64, f64),
    #[error("diffusion lower bound must be positive")]
    NonPositiveDiffusion,
    #[error("control bounds cross (lower > upper) at ({0}, {1})")]
    CrossedControlBounds(f64, f64),
}

/// Diffusion coefficient with known positive lower/upper bounds.
#[derive(Clone)]
pub enum Diffusion {
    Constant(f64),
    Varying {
        value: ScalarFn,
        lower: f64,
        upper: f64,
    },
}

impl Diffusion {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Diffusion::Constant(c) => *c,
            Diffusion::Varying { value, .. } => value(x, y),
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            Diffusion::Constant(c) => *c,
            Diffusion::Varying { lower, .. } => *lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            Diffusion::Constant(c) => *c,
            Diffusion::Varying { upper, .. } => *upper,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Diffusion::Constant(_))
    }
}

/// Pointwise box constraints on the control.
#[derive(Clone)]
pub struct ControlBounds {
    pub lower: ScalarFn,
    pub upper: ScalarFn,
}

impl ControlBounds {
    pub fn constant(lower: f64, upper: f64) -> Self {
        ControlBounds {
            lower: Arc::new(move |_, _| lower),
            upper: Arc::new(move |_, _| upper),
        }
    }

    pub fn clip(&self, x: f64, y: f64, v: f64) -> f64 {
        v.max((self.lower)(x, y)).min((self.upper)(x, y))
    }
}

/// Known exact optimum of a manufactured problem.
#[derive(Clone)]
pub struct ExactSolution {
    pub state: ScalarFn,
    pub state_grad: GradFn,
    pub adjoint: ScalarFn,
    pub adjoint_grad: GradFn,
    pub control: ScalarFn,
    /// Exact optimal value of the cost functional.
    pub cost: f64,
}

/// All continuous data of one optimal control problem on the unit square.
#[derive(Clone)]
pub struct ProblemSpec {
    pub nu: Diffusion,
    pub lambda: f64,
    /// Source term `f`.
    pub source: ScalarFn,
    /// Desired state `y_d`.
    pub desired_state: ScalarFn,
    /// Desired control `u_d`.
    pub desired_control: ScalarFn,
    /// Present iff the control is box constrained.
    pub bounds: Option<ControlBounds>,
    /// Friedrichs constant of the domain.
    pub friedrichs: f64,
    pub exact: Option<ExactSolution>,
}

impl ProblemSpec {
    /// Lower diffusion bound, the constant written under the square roots of
    /// all estimator terms.
    pub fn nu_lower(&self) -> f64 {
        self.nu.lower()
    }

    /// Projects `raw` onto the admissible interval at a point; the identity
    /// map for unconstrained problems.
    pub fn project_control_value(&self, x: f64, y: f64, raw: f64) -> f64 {
        match &self.bounds {
            Some(b) => b.clip(x, y, raw),
            None => raw,
        }
    }

    /// Checks positivity/ordering assumptions at the quadrature points of the
    /// given mesh.
    pub fn validate(&self, mesh: &Mesh) -> Result<(), ProblemError> {
        if self.lambda <= 0.0 {
            return Err(ProblemError::NonPositiveLambda(self.lambda));
        }
        if self.nu.lower() <= 0.0 {
            return Err(ProblemError::NonPositiveDiffusion);
        }
        let mut bad: Option<(f64, f64)> = None;
        integrate(mesh, QuadRule::SevenPoint, |_, p| {
            let v = self.nu.eval(p[0], p[1]);
            if !(self.nu.lower() <= v && v <= self.nu.upper()) && bad.is_none() {
                bad = Some((p[0], p[1]));
            }
            0.0
        });
        if let Some((x, y)) = bad {
            return Err(ProblemError::DiffusionOutOfBounds(x, y));
        }
        if let Some(b) = &self.bounds {
            let mut crossed: Option<(f64, f64)> = None;
            integrate(mesh, QuadRule::SevenPoint, |_, p| {
                if (b.lower)(p[0], p[1]) > (b.upper)(p[0], p[1]) && crossed.is_none() {
                    crossed = Some((p[0], p[1]));
                }
                0.0
            });
            if let Some((x, y)) = crossed {
                return Err(ProblemError::CrossedControlBounds(x, y));
            }
        }
        Ok(())
    }

    /// The sine benchmark: `y_d = (1 + 0.04 pi^4) sin(pi x1) sin(pi x2)`,
    /// `u_d = 0`, `f = 0`, `nu = 1` on the unit square.
    ///
    /// Because the data lives in a single sine mode, the exact optimum is
    /// available in closed form for every `lambda > 0`: with
    /// `s = sin(pi x1) sin(pi x2)` and `c = 1 + 0.04 pi^4`, the optimal
    /// control is `b s` where `b = c / (2 pi^2 lambda + 1/(2 pi^2))`, the
    /// state is `a s` with `a = b/(2 pi^2)` and the adjoint is `-lambda b s`.
    /// At `lambda = 0.01` this reduces to `y = s`, `u = 2 pi^2 s`.
    pub fn sine_preset(lambda: f64) -> Self {
        let c = 1.0 + 0.04 * PI.powi(4);
        let b = c / (2.0 * PI * PI * lambda + 1.0 / (2.0 * PI * PI));
        let a = b / (2.0 * PI * PI);
        let q = -lambda * b;
        let s = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let grad_s = |x: f64, y: f64| {
            [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        // ||s||^2 = 1/4 on the unit square.
        let cost = 0.125 * (a - c) * (a - c) + 0.125 * lambda * b * b;
        ProblemSpec {
            nu: Diffusion::Constant(1.0),
            lambda,
            source: Arc::new(|_, _| 0.0),
            desired_state: Arc::new(move |x, y| c * s(x, y)),
            desired_control: Arc::new(|_, _| 0.0),
            bounds: None,
            friedrichs: UNIT_SQUARE_FRIEDRICHS,
            exact: Some(ExactSolution {
                state: Arc::new(move |x, y| a * s(x, y)),
                state_grad: Arc::new(move |x, y| {
                    let g = grad_s(x, y);
                    [a * g[0], a * g[1]]
                }),
                adjoint: Arc::new(move |x, y| q * s(x, y)),
                adjoint_grad: Arc::new(move |x, y| {
                    let g = grad_s(x, y);
                    [q * g[0], q * g[1]]
                }),
                control: Arc::new(move |x, y| b * s(x, y)),
                cost,
            }),
        }
    }

    /// Same data with constant box constraints added. The closed-form optimum
    /// no longer applies, so the exact solution is dropped.
    pub fn with_constant_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = Some(ControlBounds::constant(lower, upper));
        self.exact = None;
        self
    }
}
