//! Assembly of the stabilized weak Galerkin system and the energy norms.
//!
//! The bilinear form couples weak gradients element by element and penalizes
//! jumps across every edge with weight `1/|e|`; together with the one-sided
//! boundary jumps this enforces the Dirichlet condition weakly, so no degree
//! of freedom is eliminated and the matrix is positive definite on the whole
//! space. All edge integrands are quadratics in the arc-length parameter and
//! are integrated exactly from endpoint values; volume data terms use the
//! degree-four triangle rule.

use crate::mesh::TriMesh;
use crate::problems::ProblemSpec;
use crate::quadrature::{integrate_tri_refined, EDGE_DEGREE5, TRI_DEGREE4};
use crate::space::{edge_jump_scalar, weak_gradient, DgField};
use crate::sparse::CscMatrix;
use crate::{Scalar, VecField};

/// Mass matrix of the two endpoint-linear shape functions on an edge,
/// already divided by the edge length (the `1/|e|` stabilization weight
/// cancels it).
const EDGE_MASS: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];

/// Assembled discrete obstacle problem: matrix, load, and the per-element
/// constraint data `c_T(v) = (|T|/3) sum_k v_k >= g_T`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub ndof: usize,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub tri_area: Vec<f64>,
    /// Right-hand sides `g_T`, the obstacle integrated over each element.
    pub constraint_rhs: Vec<f64>,
}

impl SparseSystem {
    /// Linear functional `c_T(v)`, the integral of the linear field over
    /// triangle `t`.
    pub fn constraint_value(&self, v: &DgField, t: usize) -> f64 {
        self.tri_area[t] / 3.0 * (v.value(t, 0) + v.value(t, 1) + v.value(t, 2))
    }
}

/// Per-element weak gradient of each coupled degree of freedom: entries
/// `(dof, w)` meaning the field value at `dof` contributes `w` to the weak
/// gradient on `t`. Three own corners plus two corners per interior edge.
fn weak_gradient_map(mesh: &TriMesh, t: usize) -> Vec<(usize, [f64; 2])> {
    let mut raw: Vec<(usize, [f64; 2])> = Vec::with_capacity(12);
    for k in 0..3 {
        let e = mesh.tri_edges[t][k];
        let edge = &mesh.edges[e];
        let n = mesh.outward_normal(t, e);
        let w = [edge.length * n[0] / mesh.area[t], edge.length * n[1] / mesh.area[t]];
        let other = mesh.other_tri(e, t);
        // Average of the midpoint traces; each endpoint value carries half a
        // trace, and interior edges average over the two sides.
        let own = if other.is_some() { 0.25 } else { 0.5 };
        for &v in &edge.verts {
            raw.push((3 * t + mesh.local_index(t, v), [own * w[0], own * w[1]]));
            if let Some(s) = other {
                raw.push((3 * s + mesh.local_index(s, v), [0.25 * w[0], 0.25 * w[1]]));
            }
        }
    }
    raw.sort_unstable_by_key(|&(d, _)| d);
    let mut map: Vec<(usize, [f64; 2])> = Vec::with_capacity(9);
    for (d, g) in raw {
        match map.last_mut() {
            Some((last, acc)) if *last == d => {
                acc[0] += g[0];
                acc[1] += g[1];
            }
            _ => map.push((d, g)),
        }
    }
    map
}

/// Assembles the matrix, load vector, and constraint data on a mesh, with an
/// optional Dirichlet boundary value entering the load through the boundary
/// stabilization terms. `None` means homogeneous boundary values.
pub fn assemble_with_dirichlet(
    mesh: &TriMesh,
    f: &Scalar,
    psi: &Scalar,
    dirichlet: Option<&Scalar>,
) -> SparseSystem {
    let ntri = mesh.ntri();
    let ndof = 3 * ntri;
    let mut triplets: Vec<(u32, u32, f64)> =
        Vec::with_capacity(81 * ntri + 16 * mesh.edges.len());
    let mut b = vec![0.0; ndof];
    let mut constraint_rhs = Vec::with_capacity(ntri);

    for t in 0..ntri {
        let map = weak_gradient_map(mesh, t);
        let area = mesh.area[t];
        for &(di, gi) in &map {
            for &(dj, gj) in &map {
                triplets.push((di as u32, dj as u32, area * (gi[0] * gj[0] + gi[1] * gj[1])));
            }
        }
        let coords = mesh.tri_coords(t);
        for &(bary, w) in TRI_DEGREE4.points {
            let x = bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0];
            let y = bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1];
            let fv = f(x, y);
            for k in 0..3 {
                b[3 * t + k] += area * w * fv * bary[k];
            }
        }
        constraint_rhs.push(crate::quadrature::integrate_tri(
            &coords,
            &TRI_DEGREE4,
            |x, y| psi(x, y),
        ));
    }

    for edge in &mesh.edges {
        let [a, v_b] = edge.verts;
        let t0 = edge.tris[0];
        let d0 = [3 * t0 + mesh.local_index(t0, a), 3 * t0 + mesh.local_index(t0, v_b)];
        if edge.boundary {
            for i in 0..2 {
                for j in 0..2 {
                    triplets.push((d0[i] as u32, d0[j] as u32, EDGE_MASS[i][j]));
                }
            }
            if let Some(g) = dirichlet {
                // 1/|e| times the edge integral of g against each endpoint
                // hat; the length factors cancel.
                let pa = mesh.vertices[a];
                let pb = mesh.vertices[v_b];
                for &(s, w) in EDGE_DEGREE5.points {
                    let gv = g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]));
                    b[d0[0]] += w * gv * (1.0 - s);
                    b[d0[1]] += w * gv * s;
                }
            }
        } else {
            let t1 = edge.tris[1];
            let d1 = [3 * t1 + mesh.local_index(t1, a), 3 * t1 + mesh.local_index(t1, v_b)];
            // Jump coefficients carry +1 on the first triangle's trace and
            // -1 on the second's.
            let dofs = [d0[0], d0[1], d1[0], d1[1]];
            let signs = [1.0, 1.0, -1.0, -1.0];
            let ends = [0usize, 1, 0, 1];
            for i in 0..4 {
                for j in 0..4 {
                    triplets.push((
                        dofs[i] as u32,
                        dofs[j] as u32,
                        signs[i] * signs[j] * EDGE_MASS[ends[i]][ends[j]],
                    ));
                }
            }
        }
    }

    SparseSystem {
        ndof,
        a: CscMatrix::from_triplets(ndof, triplets),
        b,
        tri_area: mesh.area.clone(),
        constraint_rhs,
    }
}

/// [`assemble_with_dirichlet`] with homogeneous boundary values.
pub fn assemble(mesh: &TriMesh, f: &Scalar, psi: &Scalar) -> SparseSystem {
    assemble_with_dirichlet(mesh, f, psi, None)
}

/// Assembles the system for a packaged benchmark problem.
pub fn assemble_problem(mesh: &TriMesh, prob: &ProblemSpec) -> SparseSystem {
    assemble_with_dirichlet(
        mesh,
        prob.f.as_ref(),
        prob.psi.as_ref(),
        prob.dirichlet.as_deref(),
    )
}

/// Energy norm `sqrt(a_h(v, v))` of a field under an assembled system.
pub fn energy_norm(sys: &SparseSystem, v: &DgField) -> f64 {
    sys.a.quadratic(&v.values).max(0.0).sqrt()
}

/// The bilinear form evaluated directly from mesh quantities, without the
/// assembled matrix. Used to cross-check assembly.
pub fn ah_direct(mesh: &TriMesh, u: &DgField, v: &DgField) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.ntri() {
        let gu = weak_gradient(mesh, u, t);
        let gv = weak_gradient(mesh, v, t);
        acc += mesh.area[t] * (gu[0] * gv[0] + gu[1] * gv[1]);
    }
    for e in 0..mesh.edges.len() {
        let ju = edge_jump_scalar(mesh, u, e);
        let jv = edge_jump_scalar(mesh, v, e);
        for i in 0..2 {
            for j in 0..2 {
                acc += ju[i] * EDGE_MASS[i][j] * jv[j];
            }
        }
    }
    acc
}

/// The load functional evaluated directly: volume term plus the Dirichlet
/// boundary contribution.
pub fn load_direct(mesh: &TriMesh, f: &Scalar, dirichlet: Option<&Scalar>, v: &DgField) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.ntri() {
        let coords = mesh.tri_coords(t);
        let area = mesh.area[t];
        for &(bary, w) in TRI_DEGREE4.points {
            let x = bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0];
            let y = bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1];
            acc += area * w * f(x, y) * v.value_at(t, bary);
        }
    }
    if let Some(g) = dirichlet {
        for edge in mesh.edges.iter().filter(|e| e.boundary) {
            let [a, b] = edge.verts;
            let t0 = edge.tris[0];
            let va = v.value(t0, mesh.local_index(t0, a));
            let vb = v.value(t0, mesh.local_index(t0, b));
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            for &(s, w) in EDGE_DEGREE5.points {
                let gv = g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]));
                acc += w * gv * (va * (1.0 - s) + vb * s);
            }
        }
    }
    acc
}

/// Distance between a discrete solution and an exact solution in the energy
/// norm: elementwise volume misfit of the gradients plus all jump terms, with
/// the boundary jumps measured against the Dirichlet data. The volume
/// integrand is generally only piecewise smooth, so it is integrated on each
/// triangle with `depth` rounds of quadrature subdivision.
pub fn energy_error(
    mesh: &TriMesh,
    grad_u: &VecField,
    u_h: &DgField,
    dirichlet: Option<&Scalar>,
    depth: u32,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.ntri() {
        let gw = weak_gradient(mesh, u_h, t);
        let coords = mesh.tri_coords(t);
        acc += integrate_tri_refined(&coords, depth, &TRI_DEGREE4, |x, y| {
            let g = grad_u(x, y);
            (g[0] - gw[0]).powi(2) + (g[1] - gw[1]).powi(2)
        });
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.boundary {
            let [a, b] = edge.verts;
            let t0 = edge.tris[0];
            let va = u_h.value(t0, mesh.local_index(t0, a));
            let vb = u_h.value(t0, mesh.local_index(t0, b));
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            for &(s, w) in EDGE_DEGREE5.points {
                let trace = va * (1.0 - s) + vb * s;
                let gv = dirichlet
                    .map(|g| g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])))
                    .unwrap_or(0.0);
                acc += w * (trace - gv).powi(2);
            }
        } else {
            let j = edge_jump_scalar(mesh, u_h, e);
            for i in 0..2 {
                for k in 0..2 {
                    acc += j[i] * EDGE_MASS[i][k] * j[k];
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}
