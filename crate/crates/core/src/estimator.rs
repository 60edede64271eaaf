//! Residual a posteriori error estimator for the discrete obstacle problem.
//!
//! Five ingredients: the interior residual against the multiplier, normal
//! jumps of the discrete weak gradient, scaled jumps of the solution values
//! (the nonconformity), the part of the obstacle sticking above the
//! conforming companion of the solution, and a contact consistency term.
//! Each piece is also distributed to elements (edge terms split evenly
//! between their two sides) so the sum of the local indicators reproduces
//! the squared total exactly and marking can act on elements.

use crate::mesh::TriMesh;
use crate::quadrature::{integrate_tri, EDGE_DEGREE5, TRI_DEGREE4};
use crate::solver::ViSolution;
use crate::space::{
    conforming_part, edge_jump_scalar, p1_gradient, weak_gradient, ElementConstants, FieldTag,
};
use crate::{Scalar, VecField};

/// Edge mass of endpoint-linear functions divided by the edge length.
const EDGE_MASS: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];

/// All parts of the estimator, squared, plus the per-element distribution.
#[derive(Debug, Clone)]
pub struct EstimatorBreakdown {
    /// Interior residual `sum_T h_T^2 int (f - lambda_T)^2`.
    pub eta1_sq: f64,
    /// Weak-gradient normal jumps over interior edges.
    pub eta2_sq: f64,
    /// Scaled solution jumps over all edges (boundary jumps against the
    /// Dirichlet data).
    pub eta3_sq: f64,
    /// Obstacle excess `| grad (psi - u_c)^+ |^2` over the mesh.
    pub pospart_sq: f64,
    /// Contact consistency `- sum_{T active} lambda_T int (u_c - psi)^+`.
    pub contact_term: f64,
    /// Square root of the sum of the five parts.
    pub eta_total: f64,
    /// Per-element squared indicators; they sum to `eta_total^2`.
    pub local: ElementConstants,
    /// Per-element data oscillation of the load.
    pub osc: ElementConstants,
}

/// Squared weak-gradient jump term of one interior edge: the integrand is
/// constant along the edge, so the scaled integral is the edge length squared
/// times the squared normal jump.
fn eta2_edge(g_lo: [f64; 2], g_hi: [f64; 2], normal: [f64; 2], length: f64) -> f64 {
    let jn = (g_lo[0] - g_hi[0]) * normal[0] + (g_lo[1] - g_hi[1]) * normal[1];
    length * length * jn * jn
}

/// Evaluates the residual estimator for a computed solution.
pub fn estimate(
    mesh: &TriMesh,
    f: &Scalar,
    psi: &Scalar,
    grad_psi: &VecField,
    dirichlet: Option<&Scalar>,
    sol: &ViSolution,
) -> EstimatorBreakdown {
    let ntri = mesh.ntri();
    let u_h = &sol.u_h;
    let uc = conforming_part(mesh, u_h);
    let grads: Vec<[f64; 2]> = (0..ntri).map(|t| weak_gradient(mesh, u_h, t)).collect();

    let mut local = vec![0.0; ntri];
    let (mut eta1_sq, mut eta2_sq, mut eta3_sq) = (0.0, 0.0, 0.0);
    let (mut pospart_sq, mut contact_term) = (0.0, 0.0);

    for t in 0..ntri {
        let coords = mesh.tri_coords(t);
        let area = mesh.area[t];
        let lam = sol.lambda_h.values[t];
        let h = mesh.diameter[t];
        let e1 = h * h * integrate_tri(&coords, &TRI_DEGREE4, |x, y| (f(x, y) - lam).powi(2));

        // The conforming companion is linear on t with these corner values.
        let ucv = [
            uc[mesh.tris[t][0]],
            uc[mesh.tris[t][1]],
            uc[mesh.tris[t][2]],
        ];
        let guc = p1_gradient(&coords, &ucv);
        let mut pos = 0.0;
        let mut contact = 0.0;
        for &(bary, w) in TRI_DEGREE4.points {
            let x = bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0];
            let y = bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1];
            let uc_val = bary[0] * ucv[0] + bary[1] * ucv[1] + bary[2] * ucv[2];
            let gap = psi(x, y) - uc_val;
            if gap > 0.0 {
                let gp = grad_psi(x, y);
                pos += w * ((gp[0] - guc[0]).powi(2) + (gp[1] - guc[1]).powi(2));
            } else if sol.active[t] {
                contact += w * -gap;
            }
        }
        pos *= area;
        let contact_t = if sol.active[t] { -lam * area * contact } else { 0.0 };

        eta1_sq += e1;
        pospart_sq += pos;
        contact_term += contact_t;
        local[t] += e1 + pos + contact_t;
    }

    for (e, edge) in mesh.edges.iter().enumerate() {
        let t0 = edge.tris[0];
        if edge.boundary {
            // One-sided jump against the Dirichlet trace, fully assigned to
            // the owning element.
            let [a, b] = edge.verts;
            let va = u_h.value(t0, mesh.local_index(t0, a));
            let vb = u_h.value(t0, mesh.local_index(t0, b));
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let mut e3 = 0.0;
            for &(s, w) in EDGE_DEGREE5.points {
                let g = dirichlet
                    .map(|g| g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])))
                    .unwrap_or(0.0);
                e3 += w * (va * (1.0 - s) + vb * s - g).powi(2);
            }
            eta3_sq += e3;
            local[t0] += e3;
        } else {
            let t1 = edge.tris[1];
            let e2 = eta2_edge(grads[t0], grads[t1], edge.normal, edge.length);
            let j = edge_jump_scalar(mesh, u_h, e);
            let mut e3 = 0.0;
            for i in 0..2 {
                for k in 0..2 {
                    e3 += j[i] * EDGE_MASS[i][k] * j[k];
                }
            }
            eta2_sq += e2;
            eta3_sq += e3;
            local[t0] += 0.5 * (e2 + e3);
            local[t1] += 0.5 * (e2 + e3);
        }
    }

    let eta_total = (eta1_sq + eta2_sq + eta3_sq + pospart_sq + contact_term).max(0.0).sqrt();
    EstimatorBreakdown {
        eta1_sq,
        eta2_sq,
        eta3_sq,
        pospart_sq,
        contact_term,
        eta_total,
        local: ElementConstants::new(local, FieldTag::Indicator),
        osc: oscillation(mesh, f),
    }
}

/// Per-element data oscillation `h_T || f - mean(f) ||_T` of the load.
pub fn oscillation(mesh: &TriMesh, f: &Scalar) -> ElementConstants {
    let values = (0..mesh.ntri())
        .map(|t| {
            let coords = mesh.tri_coords(t);
            let mean = integrate_tri(&coords, &TRI_DEGREE4, |x, y| f(x, y)) / mesh.area[t];
            let h = mesh.diameter[t];
            (h * h * integrate_tri(&coords, &TRI_DEGREE4, |x, y| (f(x, y) - mean).powi(2)))
                .max(0.0)
                .sqrt()
        })
        .collect();
    ElementConstants::new(values, FieldTag::Oscillation)
}
