//! Piecewise-linear discontinuous fields and the weak-function calculus.
//!
//! A field stores one value per triangle corner (three per triangle, nothing
//! shared), so a mesh with `n` triangles carries `3n` degrees of freedom. The
//! edge values of the corresponding weak function are never stored: they are
//! the average of the traces from the two sides, or the single trace on a
//! boundary edge. The discrete weak gradient of a field is constant per
//! triangle and is recovered from edge averages alone.

use crate::mesh::TriMesh;

/// Discontinuous piecewise-linear field; entry `3 t + k` is the value at the
/// local vertex `k` of triangle `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    pub values: Vec<f64>,
}

impl DgField {
    pub fn zeros(ntri: usize) -> Self {
        DgField { values: vec![0.0; 3 * ntri] }
    }

    /// Corner-wise interpolation of a smooth function.
    pub fn interpolate<F: Fn(f64, f64) -> f64>(mesh: &TriMesh, f: F) -> Self {
        let mut values = Vec::with_capacity(3 * mesh.ntri());
        for tri in &mesh.tris {
            for &v in tri {
                values.push(f(mesh.vertices[v][0], mesh.vertices[v][1]));
            }
        }
        DgField { values }
    }

    pub fn ndof(&self) -> usize {
        self.values.len()
    }

    /// Value at local vertex `k` of triangle `t`.
    pub fn value(&self, t: usize, k: usize) -> f64 {
        self.values[3 * t + k]
    }

    /// Value at a barycentric point of triangle `t`.
    pub fn value_at(&self, t: usize, bary: [f64; 3]) -> f64 {
        bary[0] * self.value(t, 0) + bary[1] * self.value(t, 1) + bary[2] * self.value(t, 2)
    }
}

/// What a per-element constant vector means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    /// Discrete Lagrange multiplier.
    Multiplier,
    /// Element means of a field.
    Projection,
    /// Local error indicator.
    Indicator,
    /// Data oscillation.
    Oscillation,
}

/// One number per triangle, tagged with its meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementConstants {
    pub values: Vec<f64>,
    pub tag: FieldTag,
}

impl ElementConstants {
    pub fn new(values: Vec<f64>, tag: FieldTag) -> Self {
        ElementConstants { values, tag }
    }
}

/// Discrete weak gradient of `field` on triangle `t`: the constant vector
/// whose moments against the outward normals reproduce the edge averages,
/// `(1/|T|) sum_e |e| {v}(mid_e) n_e`. Edge integrals of linear traces are
/// evaluated exactly through the midpoint value.
pub fn weak_gradient(mesh: &TriMesh, field: &DgField, t: usize) -> [f64; 2] {
    let mut acc = [0.0, 0.0];
    for k in 0..3 {
        let e = mesh.tri_edges[t][k];
        let edge = &mesh.edges[e];
        let [a, b] = edge.verts;
        let own =
            0.5 * (field.value(t, mesh.local_index(t, a)) + field.value(t, mesh.local_index(t, b)));
        let avg = match mesh.other_tri(e, t) {
            Some(s) => {
                let other = 0.5
                    * (field.value(s, mesh.local_index(s, a))
                        + field.value(s, mesh.local_index(s, b)));
                0.5 * (own + other)
            }
            None => own,
        };
        let n = mesh.outward_normal(t, e);
        acc[0] += edge.length * avg * n[0];
        acc[1] += edge.length * avg * n[1];
    }
    [acc[0] / mesh.area[t], acc[1] / mesh.area[t]]
}

/// Signed jump coefficients of `field` across edge `e` at its two endpoints
/// (in `edge.verts` order). The vector-valued jump at an endpoint is the
/// coefficient times the stored edge normal: on interior edges the trace from
/// the lower-numbered triangle minus the other trace, on boundary edges the
/// single trace itself.
pub fn edge_jump_scalar(mesh: &TriMesh, field: &DgField, e: usize) -> [f64; 2] {
    let edge = &mesh.edges[e];
    let [a, b] = edge.verts;
    let t0 = edge.tris[0];
    let mut ja = field.value(t0, mesh.local_index(t0, a));
    let mut jb = field.value(t0, mesh.local_index(t0, b));
    if let Some(t1) = mesh.other_tri(e, t0) {
        ja -= field.value(t1, mesh.local_index(t1, a));
        jb -= field.value(t1, mesh.local_index(t1, b));
    }
    [ja, jb]
}

/// Vector-valued jump of `field` across edge `e` at its two endpoints.
pub fn edge_jump(mesh: &TriMesh, field: &DgField, e: usize) -> [[f64; 2]; 2] {
    let [ja, jb] = edge_jump_scalar(mesh, field, e);
    let n = mesh.edges[e].normal;
    [[ja * n[0], ja * n[1]], [jb * n[0], jb * n[1]]]
}

/// Element means of a field. The mean is computed as `a + ((b-a) + (c-a))/3`,
/// which returns exactly `a` when all three corner values agree, so lifting a
/// constant and projecting it back is an exact round trip.
pub fn project_pi0(mesh: &TriMesh, field: &DgField) -> ElementConstants {
    let values = (0..mesh.ntri())
        .map(|t| {
            let a = field.value(t, 0);
            let b = field.value(t, 1);
            let c = field.value(t, 2);
            a + ((b - a) + (c - a)) / 3.0
        })
        .collect();
    ElementConstants::new(values, FieldTag::Projection)
}

/// Lifts per-element constants to the piecewise-linear field with those
/// values at all three corners.
pub fn lift_pi_inverse(mesh: &TriMesh, consts: &ElementConstants) -> DgField {
    debug_assert_eq!(consts.values.len(), mesh.ntri());
    let mut values = Vec::with_capacity(3 * mesh.ntri());
    for &c in &consts.values {
        values.extend([c, c, c]);
    }
    DgField { values }
}

/// Vertex values of the conforming companion of `field`: the average of the
/// corner values from all triangles meeting at an interior vertex, and zero
/// at boundary vertices (the conforming space carries homogeneous boundary
/// values).
pub fn conforming_part(mesh: &TriMesh, field: &DgField) -> Vec<f64> {
    let mut sum = vec![0.0; mesh.nvert()];
    let mut count = vec![0usize; mesh.nvert()];
    for (t, tri) in mesh.tris.iter().enumerate() {
        for (k, &v) in tri.iter().enumerate() {
            sum[v] += field.value(t, k);
            count[v] += 1;
        }
    }
    (0..mesh.nvert())
        .map(|v| {
            if mesh.boundary_vertex[v] || count[v] == 0 {
                0.0
            } else {
                sum[v] / count[v] as f64
            }
        })
        .collect()
}

/// Gradient of the linear function with the given corner values.
pub fn p1_gradient(coords: &[[f64; 2]; 3], values: &[f64; 3]) -> [f64; 2] {
    let area = crate::quadrature::signed_area(coords);
    let mut g = [0.0, 0.0];
    for k in 0..3 {
        let e = [
            coords[(k + 2) % 3][0] - coords[(k + 1) % 3][0],
            coords[(k + 2) % 3][1] - coords[(k + 1) % 3][1],
        ];
        // grad of the k-th barycentric coordinate is the rotated opposite
        // edge over twice the area.
        g[0] += values[k] * -e[1] / (2.0 * area);
        g[1] += values[k] * e[0] / (2.0 * area);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainSpec, TriMesh};

    fn reference_triangle() -> TriMesh {
        TriMesh::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap()
    }

    fn refined_square(rounds: usize) -> TriMesh {
        let mut mesh = build_initial_mesh(DomainSpec::Square { half: 1.0 }).unwrap();
        for _ in 0..rounds {
            let all: Vec<usize> = (0..mesh.ntri()).collect();
            mesh = mesh.bisect(&all).unwrap();
        }
        mesh
    }

    #[test]
    fn weak_gradient_of_a_constant_vanishes() {
        let mesh = reference_triangle();
        let field = DgField::interpolate(&mesh, |_, _| 1.0);
        let g = weak_gradient(&mesh, &field, 0);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn weak_gradient_reproduces_linear_functions() {
        // A continuous linear interpolant has exact traces, so its weak
        // gradient equals the true gradient on every element, boundary ones
        // included.
        let mesh = refined_square(3);
        let cases: [(fn(f64, f64) -> f64, [f64; 2]); 2] =
            [(|x, _| x, [1.0, 0.0]), (|x, y| y - x, [-1.0, 1.0])];
        for (f, want) in cases {
            let field = DgField::interpolate(&mesh, f);
            for t in 0..mesh.ntri() {
                let g = weak_gradient(&mesh, &field, t);
                assert!((g[0] - want[0]).abs() < 1e-13 && (g[1] - want[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jumps_of_a_continuous_field_vanish_inside() {
        let mesh = refined_square(2);
        let field = DgField::interpolate(&mesh, |x, y| 2.0 * x - 3.0 * y + 1.0);
        for (e, edge) in mesh.edges.iter().enumerate() {
            let [ja, jb] = edge_jump_scalar(&mesh, &field, e);
            if edge.boundary {
                // The one-sided jump is the trace itself.
                let [a, b] = edge.verts;
                let va = mesh.vertices[a];
                let vb = mesh.vertices[b];
                assert!((ja - (2.0 * va[0] - 3.0 * va[1] + 1.0)).abs() < 1e-14);
                assert!((jb - (2.0 * vb[0] - 3.0 * vb[1] + 1.0)).abs() < 1e-14);
            } else {
                assert!(ja.abs() < 1e-14 && jb.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jump_vectors_align_with_the_edge_normal() {
        let mesh = refined_square(1);
        let mut field = DgField::zeros(mesh.ntri());
        field.values[0] = 2.5;
        for e in 0..mesh.edges.len() {
            let [ja, jb] = edge_jump_scalar(&mesh, &field, e);
            let j = edge_jump(&mesh, &field, e);
            let n = mesh.edges[e].normal;
            assert_eq!(j[0], [ja * n[0], ja * n[1]]);
            assert_eq!(j[1], [jb * n[0], jb * n[1]]);
        }
    }

    #[test]
    fn projection_of_a_linear_field_is_the_centroid_value() {
        let mesh = reference_triangle();
        let field = DgField::interpolate(&mesh, |x, _| x);
        let means = project_pi0(&mesh, &field);
        assert!((means.values[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(means.tag, FieldTag::Projection);
    }

    #[test]
    fn lift_then_project_is_exact() {
        let mesh = refined_square(2);
        let mut vals: Vec<f64> = Vec::new();
        for t in 0..mesh.ntri() {
            // Mix signs, scales, and awkward values.
            vals.push(match t % 5 {
                0 => 0.1 + t as f64 * 1e-3,
                1 => -0.0,
                2 => 1e300,
                3 => -7.25e-300,
                _ => std::f64::consts::PI * (t as f64 - 3.0),
            });
        }
        let consts = ElementConstants::new(vals.clone(), FieldTag::Projection);
        let lifted = lift_pi_inverse(&mesh, &consts);
        let back = project_pi0(&mesh, &lifted);
        for t in 0..mesh.ntri() {
            assert!(back.values[t] == vals[t], "element {t} drifted");
        }
    }

    #[test]
    fn conforming_part_averages_inside_and_vanishes_on_the_boundary() {
        let mesh = refined_square(1);
        let f = |x: f64, y: f64| x + 2.0 * y + 0.5;
        let field = DgField::interpolate(&mesh, f);
        let nodal = conforming_part(&mesh, &field);
        let mut saw_interior = false;
        for v in 0..mesh.nvert() {
            let p = mesh.vertices[v];
            if mesh.boundary_vertex[v] {
                assert_eq!(nodal[v], 0.0);
            } else {
                saw_interior = true;
                // All incident traces agree, so the average is the value.
                assert!((nodal[v] - f(p[0], p[1])).abs() < 1e-14);
            }
        }
        assert!(saw_interior);
    }

    #[test]
    fn p1_gradient_matches_hand_values() {
        let coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let g = p1_gradient(&coords, &[0.0, 1.0, 0.0]);
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
        let g = p1_gradient(&coords, &[1.0, 0.0, 0.0]);
        assert!((g[0] + 1.0).abs() < 1e-15 && (g[1] + 1.0).abs() < 1e-15);
        // Linear reproduction on a skewed triangle.
        let coords = [[0.2, -0.1], [1.3, 0.4], [0.5, 2.0]];
        let f = |x: f64, y: f64| 3.0 * x - 2.0 * y + 7.0;
        let vals = [
            f(coords[0][0], coords[0][1]),
            f(coords[1][0], coords[1][1]),
            f(coords[2][0], coords[2][1]),
        ];
        let g = p1_gradient(&coords, &vals);
        assert!((g[0] - 3.0).abs() < 1e-13 && (g[1] + 2.0).abs() < 1e-13);
    }
}
