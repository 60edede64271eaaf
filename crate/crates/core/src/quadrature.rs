//! Fixed quadrature rules on triangles and edges.
//!
//! Triangle rules are stored in barycentric coordinates with weights that sum
//! to one, so an integral is the element area times the weighted sum of point
//! values. Edge rules use a parameter in [0, 1] along the segment and weights
//! that sum to one, so an integral is the segment length times the weighted
//! sum.

/// Quadrature rule on a triangle: (barycentric point, weight) pairs.
pub struct TriRule {
    pub points: &'static [([f64; 3], f64)],
}

/// Quadrature rule on a segment: (parameter in [0, 1], weight) pairs.
pub struct EdgeRule {
    pub points: &'static [(f64, f64)],
}

const D4_A: f64 = 0.091576213509771;
const D4_B: f64 = 0.445948490915965;
const D4_WA: f64 = 0.109951743655322;
const D4_WB: f64 = 0.223381589678011;

/// Six-point rule, exact for polynomials of total degree four.
pub const TRI_DEGREE4: TriRule = TriRule {
    points: &[
        ([1.0 - 2.0 * D4_A, D4_A, D4_A], D4_WA),
        ([D4_A, 1.0 - 2.0 * D4_A, D4_A], D4_WA),
        ([D4_A, D4_A, 1.0 - 2.0 * D4_A], D4_WA),
        ([1.0 - 2.0 * D4_B, D4_B, D4_B], D4_WB),
        ([D4_B, 1.0 - 2.0 * D4_B, D4_B], D4_WB),
        ([D4_B, D4_B, 1.0 - 2.0 * D4_B], D4_WB),
    ],
};

/// Edge-midpoint rule, exact for polynomials of total degree two.
pub const TRI_DEGREE2: TriRule = TriRule {
    points: &[
        ([0.5, 0.5, 0.0], 1.0 / 3.0),
        ([0.0, 0.5, 0.5], 1.0 / 3.0),
        ([0.5, 0.0, 0.5], 1.0 / 3.0),
    ],
};

const GAUSS3_OFF: f64 = 0.774596669241483377 / 2.0;

/// Three-point Gauss rule on a segment, exact for polynomials of degree five.
pub const EDGE_DEGREE5: EdgeRule = EdgeRule {
    points: &[
        (0.5 - GAUSS3_OFF, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + GAUSS3_OFF, 5.0 / 18.0),
    ],
};

/// Signed area of the triangle `(v0, v1, v2)`; positive when the vertices are
/// in counterclockwise order.
pub fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// Integrates `f` over the triangle with the given rule.
pub fn integrate_tri<F: FnMut(f64, f64) -> f64>(
    v: &[[f64; 2]; 3],
    rule: &TriRule,
    mut f: F,
) -> f64 {
    let area = signed_area(v).abs();
    let mut acc = 0.0;
    for &(bary, w) in rule.points {
        let x = bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0];
        let y = bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1];
        acc += w * f(x, y);
    }
    area * acc
}

/// Integrates `f` over the triangle after `depth` levels of uniform four-way
/// subdivision, applying the rule on each sub-triangle. Raising the depth
/// sharpens the rule on integrands that are only piecewise smooth.
pub fn integrate_tri_refined<F: FnMut(f64, f64) -> f64>(
    v: &[[f64; 2]; 3],
    depth: u32,
    rule: &TriRule,
    f: F,
) -> f64 {
    fn go(v: &[[f64; 2]; 3], depth: u32, rule: &TriRule, f: &mut dyn FnMut(f64, f64) -> f64) -> f64 {
        if depth == 0 {
            return integrate_tri(v, rule, f);
        }
        let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let m01 = mid(v[0], v[1]);
        let m12 = mid(v[1], v[2]);
        let m20 = mid(v[2], v[0]);
        go(&[v[0], m01, m20], depth - 1, rule, f)
            + go(&[m01, v[1], m12], depth - 1, rule, f)
            + go(&[m20, m12, v[2]], depth - 1, rule, f)
            + go(&[m01, m12, m20], depth - 1, rule, f)
    }
    let mut f = f;
    go(v, depth, rule, &mut f)
}

/// Integrates `f` along the segment from `a` to `b`.
pub fn integrate_edge<F: FnMut(f64, f64) -> f64>(
    a: [f64; 2],
    b: [f64; 2],
    rule: &EdgeRule,
    mut f: F,
) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut acc = 0.0;
    for &(t, w) in rule.points {
        acc += w * f(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
    }
    len * acc
}
