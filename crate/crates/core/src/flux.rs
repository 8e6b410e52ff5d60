//! Lowest-order Raviart-Thomas flux reconstruction.
//!
//! A [`FluxField`] stores one normal-flux value per edge, oriented by the
//! edge's fixed global normal. Interior edges receive the average of the two
//! incident elementwise fluxes (weight 1/2 on the uniform mesh), boundary
//! edges the only existing one. Inside each element the field is the unique
//! `(a,b) + c x` extension of its three edge fluxes, so normal continuity
//! holds exactly by data sharing and the divergence is constant per element
//! and satisfies the divergence theorem identically.

use std::sync::Arc;

use thiserror::Error;

use crate::fields::{PointFlux, ScalarField};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("point ({0}, {1}) lies outside triangle {2}")]
    PointOutsideElement(f64, f64, usize),
}

/// H(div)-conforming field with one normal-flux degree of freedom per edge.
#[derive(Clone)]
pub struct FluxField {
    mesh: Arc<Mesh>,
    edge_flux: Vec<f64>,
}

impl FluxField {
    pub fn new(mesh: Arc<Mesh>, edge_flux: Vec<f64>) -> Self {
        assert_eq!(edge_flux.len(), mesh.num_edges(), "one flux per edge");
        FluxField { mesh, edge_flux }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn edge_fluxes(&self) -> &[f64] {
        &self.edge_flux
    }

    /// Sign turning the globally oriented edge flux into the outward flux of
    /// triangle `t` on its local edge `k`.
    fn outward_sign(&self, t: usize, edge: usize) -> f64 {
        if self.mesh.edge(edge).tris[0] == Some(t) {
            1.0
        } else {
            -1.0
        }
    }

    /// Field value inside triangle `t`; the caller guarantees containment.
    pub fn eval_unchecked(&self, t: usize, x: [f64; 2]) -> [f64; 2] {
        let tri = self.mesh.triangle(t);
        let inv2a = 1.0 / (2.0 * self.mesh.triangle_area(t));
        let mut out = [0.0, 0.0];
        let edges = self.mesh.triangle_edges(t);
        for k in 0..3 {
            let e = edges[k];
            let len = self.mesh.edge(e).length;
            let s = self.outward_sign(t, e);
            let p = self.mesh.vertex(tri[k]);
            let coeff = s * self.edge_flux[e] * len * inv2a;
            out[0] += coeff * (x[0] - p[0]);
            out[1] += coeff * (x[1] - p[1]);
        }
        out
    }

    /// Constant divergence on triangle `t`: outward flux sum over the element
    /// boundary divided by the area.
    pub fn divergence_on(&self, t: usize) -> f64 {
        let edges = self.mesh.triangle_edges(t);
        let mut total = 0.0;
        for &e in &edges {
            total += self.outward_sign(t, e) * self.edge_flux[e] * self.mesh.edge(e).length;
        }
        total / self.mesh.triangle_area(t)
    }
}

impl PointFlux for FluxField {
    fn value(&self, tri: usize, x: [f64; 2]) -> [f64; 2] {
        self.eval_unchecked(tri, x)
    }

    fn divergence(&self, tri: usize, _x: [f64; 2]) -> f64 {
        self.divergence_on(tri)
    }

    fn mesh_id(&self) -> Option<u64> {
        Some(self.mesh.id())
    }
}

/// Averages the elementwise flux `nu grad w` into edge normal fluxes and
/// returns the Raviart-Thomas interpolant of those edge data.
pub fn reconstruct_flux(field: &ScalarField, spec: &ProblemSpec) -> FluxField {
    let mesh = field.mesh().clone();
    let elem_flux: Vec<[f64; 2]> = (0..mesh.num_triangles())
        .map(|t| {
            let g = field.gradient_in(t);
            let c = mesh.triangle_centroid(t);
            let nu = spec.nu.eval(c[0], c[1]);
            [nu * g[0], nu * g[1]]
        })
        .collect();
    let edge_flux = mesh
        .edges()
        .iter()
        .map(|e| match e.tris {
            [Some(t0), Some(t1)] => {
                let a = elem_flux[t0][0] * e.normal[0] + elem_flux[t0][1] * e.normal[1];
                let b = elem_flux[t1][0] * e.normal[0] + elem_flux[t1][1] * e.normal[1];
                0.5 * (a + b)
            }
            [Some(t0), None] => elem_flux[t0][0] * e.normal[0] + elem_flux[t0][1] * e.normal[1],
            _ => unreachable!("edge without incident triangle"),
        })
        .collect();
    FluxField::new(mesh, edge_flux)
}

/// Per-element constant divergence of the flux field.
pub fn flux_divergence(flux: &FluxField) -> Vec<f64> {
    (0..flux.mesh().num_triangles())
        .map(|t| flux.divergence_on(t))
        .collect()
}

/// Field value at a point of an element, rejecting points outside it.
pub fn flux_eval(flux: &FluxField, t: usize, x: [f64; 2]) -> Result<[f64; 2], FluxError> {
    let bary = flux.mesh().barycentric(t, x);
    let tol = 1e-12;
    if bary.iter().any(|&b| b < -tol || b > 1.0 + tol) {
        return Err(FluxError::PointOutsideElement(x[0], x[1], t));
    }
    Ok(flux.eval_unchecked(t, x))
}
