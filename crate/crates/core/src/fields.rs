//! Piecewise-linear fields and pointwise evaluation.
//!
//! Everything the estimator integrates is driven through two small traits:
//! [`PointScalar`] for scalar quantities and [`PointFlux`] for vector fields
//! with a divergence. Nodal finite element functions, analytic data, and the
//! pointwise-projected control all implement them, so every bound accepts an
//! arbitrary admissible input, not just the discrete solution.

use std::sync::Arc;

use crate::mesh::Mesh;
use crate::problem::{GradFn, ProblemSpec, ScalarFn};

/// Continuous piecewise-linear function given by one value per vertex.
#[derive(Clone)]
pub struct ScalarField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    dirichlet: bool,
}

impl ScalarField {
    /// Wraps nodal values; `dirichlet` asserts that boundary values are zero
    /// and pins them to exactly zero.
    pub fn new(mesh: Arc<Mesh>, mut values: Vec<f64>, dirichlet: bool) -> Self {
        assert_eq!(values.len(), mesh.num_vertices(), "one value per vertex");
        if dirichlet {
            for (v, val) in values.iter_mut().enumerate() {
                if mesh.is_boundary_vertex(v) {
                    *val = 0.0;
                }
            }
        }
        ScalarField {
            mesh,
            values,
            dirichlet,
        }
    }

    pub fn zeros(mesh: Arc<Mesh>, dirichlet: bool) -> Self {
        let n = mesh.num_vertices();
        ScalarField::new(mesh, vec![0.0; n], dirichlet)
    }

    /// Nodal interpolant of an analytic function.
    pub fn interpolate<F: Fn(f64, f64) -> f64>(mesh: Arc<Mesh>, f: F, dirichlet: bool) -> Self {
        let values = mesh.vertices().iter().map(|p| f(p[0], p[1])).collect();
        ScalarField::new(mesh, values, dirichlet)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    /// Value inside triangle `tri` at point `x` (barycentric interpolation).
    pub fn eval_in(&self, tri: usize, x: [f64; 2]) -> f64 {
        let bary = self.mesh.barycentric(tri, x);
        let [a, b, c] = self.mesh.triangle(tri);
        bary[0] * self.values[a] + bary[1] * self.values[b] + bary[2] * self.values[c]
    }

    /// Value at an arbitrary point of the unit square (structured location,
    /// exact on nested meshes).
    pub fn eval_at(&self, x: [f64; 2]) -> f64 {
        self.eval_in(self.mesh.locate(x), x)
    }

    /// Elementwise-constant gradient on triangle `tri`.
    pub fn gradient_in(&self, tri: usize) -> [f64; 2] {
        let grads = self.mesh.p1_gradients(tri);
        let [a, b, c] = self.mesh.triangle(tri);
        [
            self.values[a] * grads[0][0] + self.values[b] * grads[1][0] + self.values[c] * grads[2][0],
            self.values[a] * grads[0][1] + self.values[b] * grads[1][1] + self.values[c] * grads[2][1],
        ]
    }
}

/// Scalar quantity evaluable at quadrature points. The triangle index refers
/// to the mesh the quadrature runs over; implementations tied to a specific
/// mesh report it through `mesh_id` so mismatches are caught early.
pub trait PointScalar {
    fn value(&self, tri: usize, x: [f64; 2]) -> f64;

    /// Gradient where defined; quantities without one (e.g. clipped controls)
    /// must not be asked for it.
    fn gradient(&self, tri: usize, x: [f64; 2]) -> [f64; 2] {
        let _ = (tri, x);
        unimplemented!("gradient not defined for this quantity")
    }

    fn mesh_id(&self) -> Option<u64> {
        None
    }
}

impl PointScalar for ScalarField {
    fn value(&self, tri: usize, x: [f64; 2]) -> f64 {
        self.eval_in(tri, x)
    }

    fn gradient(&self, tri: usize, _x: [f64; 2]) -> [f64; 2] {
        self.gradient_in(tri)
    }

    fn mesh_id(&self) -> Option<u64> {
        Some(self.mesh.id())
    }
}

/// Analytic scalar with an optional analytic gradient.
pub struct AnalyticScalar {
    pub value: ScalarFn,
    pub gradient: Option<GradFn>,
}

impl AnalyticScalar {
    pub fn new(value: ScalarFn) -> Self {
        AnalyticScalar {
            value,
            gradient: None,
        }
    }

    pub fn with_gradient(value: ScalarFn, gradient: GradFn) -> Self {
        AnalyticScalar {
            value,
            gradient: Some(gradient),
        }
    }
}

impl PointScalar for AnalyticScalar {
    fn value(&self, _tri: usize, x: [f64; 2]) -> f64 {
        (self.value)(x[0], x[1])
    }

    fn gradient(&self, _tri: usize, x: [f64; 2]) -> [f64; 2] {
        match &self.gradient {
            Some(g) => g(x[0], x[1]),
            None => unimplemented!("analytic gradient not provided"),
        }
    }
}

/// Adapter that evaluates a field living on one mesh at quadrature points of
/// another by position lookup. Exact for nested uniform meshes.
pub struct CrossMesh<'a>(pub &'a ScalarField);

impl PointScalar for CrossMesh<'_> {
    fn value(&self, _tri: usize, x: [f64; 2]) -> f64 {
        self.0.eval_at(x)
    }

    fn gradient(&self, _tri: usize, x: [f64; 2]) -> [f64; 2] {
        self.0.gradient_in(self.0.mesh().locate(x))
    }
}

/// The control induced by an adjoint-like function `zeta` through the
/// projection formula `v = clip(u_d - zeta/lambda)`, evaluated pointwise at
/// quadrature nodes. Without bounds this is plainly `u_d - zeta/lambda`.
pub struct ProjectedControl<'a> {
    pub zeta: &'a dyn PointScalar,
    pub spec: &'a ProblemSpec,
}

impl<'a> ProjectedControl<'a> {
    pub fn new(zeta: &'a dyn PointScalar, spec: &'a ProblemSpec) -> Self {
        ProjectedControl { zeta, spec }
    }
}

impl PointScalar for ProjectedControl<'_> {
    fn value(&self, tri: usize, x: [f64; 2]) -> f64 {
        let raw = (self.spec.desired_control)(x[0], x[1])
            - self.zeta.value(tri, x) / self.spec.lambda;
        self.spec.project_control_value(x[0], x[1], raw)
    }

    fn mesh_id(&self) -> Option<u64> {
        self.zeta.mesh_id()
    }
}

/// Vector field with a divergence, evaluable inside elements.
pub trait PointFlux {
    fn value(&self, tri: usize, x: [f64; 2]) -> [f64; 2];
    fn divergence(&self, tri: usize, x: [f64; 2]) -> f64;
    fn mesh_id(&self) -> Option<u64> {
        None
    }
}

/// Analytic flux with analytic divergence.
pub struct AnalyticFlux {
    pub value: GradFn,
    pub divergence: ScalarFn,
}

impl PointFlux for AnalyticFlux {
    fn value(&self, _tri: usize, x: [f64; 2]) -> [f64; 2] {
        (self.value)(x[0], x[1])
    }

    fn divergence(&self, _tri: usize, x: [f64; 2]) -> f64 {
        (self.divergence)(x[0], x[1])
    }
}
