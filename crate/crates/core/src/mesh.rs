//! Uniform triangulation of the unit square.
//!
//! The square `(0,1) x (0,1)` is divided into `n x n` cells and every cell is
//! split along the diagonal from its lower-left to its upper-right corner, so
//! all triangles are congruent right triangles of area `1/(2 n^2)`. The mesh
//! stores vertex/triangle/edge connectivity plus a globally fixed unit normal
//! per edge, which is what the lowest-order Raviart-Thomas reconstruction and
//! the per-element divergence identities key on.
//!
//! The mesh is immutable after construction and safe to share across threads.

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

static MESH_ID: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision count must be at least 1")]
    ZeroSubdivision,
    #[error("unknown quadrature rule id `{0}`")]
    UnknownRule(String),
}

/// One edge of the triangulation.
///
/// `tris[0]` is the first triangle (in global traversal order) incident to the
/// edge; `normal` is the unit normal pointing out of that triangle, i.e. from
/// the lower-indexed incident triangle into the higher-indexed one, and out of
/// the domain on boundary edges.
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub tris: [Option<usize>; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1].is_none()
    }
}

#[derive(Debug)]
pub struct Mesh {
    id: u64,
    n: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Per triangle, the edge opposite each local vertex: `tri_edges[t][k]` is
    /// the global edge not containing local vertex `k`.
    tri_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
}

/// Builds the uniform `n x n` triangulation of the unit square.
pub fn build_uniform_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroSubdivision);
    }
    let h = 1.0 / n as f64;
    let nv = (n + 1) * (n + 1);
    let vid = |i: usize, j: usize| j * (n + 1) + i;

    let mut vertices = Vec::with_capacity(nv);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (ll, lr) = (vid(i, j), vid(i + 1, j));
            let (ur, ul) = (vid(i + 1, j + 1), vid(i, j + 1));
            // Both triangles are counterclockwise; the shared diagonal runs
            // lower-left to upper-right.
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }

    // Edges are numbered in first-visit order over triangles, which makes the
    // construction deterministic. The local edge k of a triangle is the one
    // opposite local vertex k.
    let mut edges: Vec<Edge> = Vec::new();
    let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                Some(&e) => {
                    edges[e].tris[1] = Some(t);
                    tri_edges[t][k] = e;
                }
                None => {
                    let e = edges.len();
                    let pa = vertices[a];
                    let pb = vertices[b];
                    let d = [pb[0] - pa[0], pb[1] - pa[1]];
                    let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    // Normal pointing out of triangle t: rotate the edge vector
                    // and orient it away from the opposite vertex.
                    let mut normal = [d[1] / length, -d[0] / length];
                    let popp = vertices[tri[k]];
                    let to_opp = [popp[0] - pa[0], popp[1] - pa[1]];
                    if normal[0] * to_opp[0] + normal[1] * to_opp[1] > 0.0 {
                        normal = [-normal[0], -normal[1]];
                    }
                    edges.push(Edge {
                        vertices: [a, b],
                        tris: [Some(t), None],
                        normal,
                        length,
                    });
                    lookup.insert(key, e);
                    tri_edges[t][k] = e;
                }
            }
        }
    }

    let boundary_vertex = (0..nv)
        .map(|v| {
            let (i, j) = (v % (n + 1), v / (n + 1));
            i == 0 || i == n || j == 0 || j == n
        })
        .collect();

    Ok(Mesh {
        id: MESH_ID.fetch_add(1, Ordering::Relaxed),
        n,
        vertices,
        triangles,
        edges,
        tri_edges,
        boundary_vertex,
    })
}

impl Mesh {
    /// Unique id used for cheap "same mesh" checks between fields.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    /// Mesh size `h = 1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area; positive for all triangles by construction.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn triangle_centroid(&self, t: usize) -> [f64; 2] {
        let [p0, p1, p2] = self.triangle_coords(t);
        [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]
    }

    /// Gradients of the three nodal basis functions on triangle `t`
    /// (constant per element).
    pub fn p1_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_coords(t);
        let inv2a = 1.0 / (2.0 * self.triangle_area(t));
        [
            [(p1[1] - p2[1]) * inv2a, (p2[0] - p1[0]) * inv2a],
            [(p2[1] - p0[1]) * inv2a, (p0[0] - p2[0]) * inv2a],
            [(p0[1] - p1[1]) * inv2a, (p1[0] - p0[0]) * inv2a],
        ]
    }

    /// Barycentric coordinates of `x` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let [p0, p1, p2] = self.triangle_coords(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Index of the triangle containing `x` (points on shared edges resolve to
    /// either side; values of continuous fields agree there). `x` is clamped
    /// to the closed unit square first.
    pub fn locate(&self, x: [f64; 2]) -> usize {
        let n = self.n;
        let h = self.h();
        let cx = x[0].clamp(0.0, 1.0);
        let cy = x[1].clamp(0.0, 1.0);
        let i = ((cx / h) as usize).min(n - 1);
        let j = ((cy / h) as usize).min(n - 1);
        let fx = cx / h - i as f64;
        let fy = cy / h - j as f64;
        let cell = j * n + i;
        if fy <= fx {
            2 * cell
        } else {
            2 * cell + 1
        }
    }

    /// Plain-text dump for debugging: `v x y` lines then `t i j k` lines.
    pub fn write_text<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Quadrature rules on triangles, given in barycentric coordinates with
/// weights that sum to one (scaled by the element area when applied).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    /// Three edge midpoints, exact for polynomials up to degree 2.
    EdgeMidpoint,
    /// Seven-point rule, exact up to degree 5.
    SevenPoint,
}

impl QuadRule {
    pub fn from_id(id: &str) -> Result<Self, MeshError> {
        match id {
            "edge-midpoint" | "midpoint" | "degree2" => Ok(QuadRule::EdgeMidpoint),
            "seven-point" | "7-point" | "degree5" => Ok(QuadRule::SevenPoint),
            other => Err(MeshError::UnknownRule(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            QuadRule::EdgeMidpoint => "edge-midpoint",
            QuadRule::SevenPoint => "seven-point",
        }
    }

    /// Barycentric points and normalized weights.
    pub fn points(&self) -> &'static [([f64; 3], f64)] {
        const THIRD: f64 = 1.0 / 3.0;
        match self {
            QuadRule::EdgeMidpoint => {
                const P: [([f64; 3], f64); 3] = [
                    ([0.5, 0.5, 0.0], THIRD),
                    ([0.0, 0.5, 0.5], THIRD),
                    ([0.5, 0.0, 0.5], THIRD),
                ];
                &P
            }
            QuadRule::SevenPoint => {
                const A1: f64 = 0.059_715_871_789_770;
                const B1: f64 = 0.470_142_064_105_115;
                const W1: f64 = 0.132_394_152_788_506;
                const A2: f64 = 0.797_426_985_353_087;
                const B2: f64 = 0.101_286_507_323_456;
                const W2: f64 = 0.125_939_180_544_827;
                const P: [([f64; 3], f64); 7] = [
                    ([THIRD, THIRD, THIRD], 0.225),
                    ([A1, B1, B1], W1),
                    ([B1, A1, B1], W1),
                    ([B1, B1, A1], W1),
                    ([A2, B2, B2], W2),
                    ([B2, A2, B2], W2),
                    ([B2, B2, A2], W2),
                ];
                &P
            }
        }
    }
}

/// Physical quadrature points and weights for one triangle.
#[derive(Debug, Clone)]
pub struct TriangleQuadrature {
    pub triangle: usize,
    pub points: Vec<([f64; 2], f64)>,
}

/// Materializes the quadrature points of `rule` on every triangle; weights on
/// each triangle sum to its area.
pub fn locate_quadrature_points(mesh: &Mesh, rule: QuadRule) -> Vec<TriangleQuadrature> {
    (0..mesh.num_triangles())
        .map(|t| {
            let coords = mesh.triangle_coords(t);
            let area = mesh.triangle_area(t);
            let points = rule
                .points()
                .iter()
                .map(|&(bary, w)| {
                    let x = [
                        bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                        bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
                    ];
                    (x, w * area)
                })
                .collect();
            TriangleQuadrature {
                triangle: t,
                points,
            }
        })
        .collect()
}

/// Integrates `f(triangle, point)` over the whole mesh with the given rule.
pub fn integrate<F: FnMut(usize, [f64; 2]) -> f64>(mesh: &Mesh, rule: QuadRule, mut f: F) -> f64 {
    let pts = rule.points();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let coords = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        let mut local = 0.0;
        for &(bary, w) in pts {
            let x = [
                bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
            ];
            local += w * f(t, x);
        }
        total += local * area;
    }
    total
}
