//! The energy error evaluator checked against quadrature written from
//! scratch: a composite midpoint rule on recursively split triangles for the
//! volume part and two point Gauss rules for the edge parts. For polynomial
//! data both sides integrate exactly, so they must agree to roundoff.

use mwg::mesh::{build_initial_mesh, DomainSpec, TriMesh};
use mwg::space::{weak_gradient, DgField};
use mwg::{assemble_problem, energy_error, example_2, solve_vi};

/// Composite midpoint rule after `depth` rounds of uniform four way splits.
fn midpoint_refined(v: &[[f64; 2]; 3], depth: u32, f: &mut dyn FnMut(f64, f64) -> f64) -> f64 {
    if depth == 0 {
        let area = 0.5
            * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
                - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
                .abs();
        let mut s = 0.0;
        for k in 0..3 {
            let a = v[k];
            let b = v[(k + 1) % 3];
            s += f(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
        }
        return area * s / 3.0;
    }
    let m01 = [0.5 * (v[0][0] + v[1][0]), 0.5 * (v[0][1] + v[1][1])];
    let m12 = [0.5 * (v[1][0] + v[2][0]), 0.5 * (v[1][1] + v[2][1])];
    let m20 = [0.5 * (v[2][0] + v[0][0]), 0.5 * (v[2][1] + v[0][1])];
    [
        [v[0], m01, m20],
        [m01, v[1], m12],
        [m20, m12, v[2]],
        [m01, m12, m20],
    ]
    .iter()
    .map(|sub| midpoint_refined(sub, depth - 1, f))
    .sum()
}

/// Three point Gauss rule, exact through quintics.
fn gauss3_edge(a: [f64; 2], b: [f64; 2], mut f: impl FnMut(f64) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    len * (5.0 * f(0.5 - d) + 8.0 * f(0.5) + 5.0 * f(0.5 + d)) / 18.0
}

fn trace_at(mesh: &TriMesh, u: &DgField, t: usize, e: usize, s: f64) -> f64 {
    let [a, b] = mesh.edges[e].verts;
    let va = u.value(t, mesh.local_index(t, a));
    let vb = u.value(t, mesh.local_index(t, b));
    va * (1.0 - s) + vb * s
}

fn oracle_energy_error(
    mesh: &TriMesh,
    grad_u: &dyn Fn(f64, f64) -> [f64; 2],
    u: &DgField,
    g: Option<&dyn Fn(f64, f64) -> f64>,
    depth: u32,
) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.ntri() {
        let gh = weak_gradient(mesh, u, t);
        total += midpoint_refined(&mesh.tri_coords(t), depth, &mut |x, y| {
            let gu = grad_u(x, y);
            (gu[0] - gh[0]).powi(2) + (gu[1] - gh[1]).powi(2)
        });
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        let [a, b] = edge.verts;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let jump = |s: f64| {
            if edge.boundary {
                let gval = g
                    .map(|g| g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])))
                    .unwrap_or(0.0);
                trace_at(mesh, u, edge.tris[0], e, s) - gval
            } else {
                trace_at(mesh, u, edge.tris[0], e, s) - trace_at(mesh, u, edge.tris[1], e, s)
            }
        };
        total += gauss3_edge(pa, pb, |s| jump(s).powi(2)) / edge.length;
    }
    total.sqrt()
}

#[test]
fn polynomial_data_reproduces_the_oracle_to_roundoff() {
    let mut mesh = build_initial_mesh(DomainSpec::Square { half: 1.0 }).unwrap();
    for _ in 0..2 {
        let all: Vec<usize> = (0..mesh.ntri()).collect();
        mesh = mesh.bisect(&all).unwrap();
    }
    // A deliberately discontinuous field against a smooth reference
    // gradient; every integrand is polynomial, so both quadratures are
    // exact and the two evaluations must coincide.
    let mut u = DgField::interpolate(&mesh, |x, y| x * x + 0.5 * y);
    for (i, v) in u.values.iter_mut().enumerate() {
        *v += 0.01 * ((i % 7) as f64 - 3.0);
    }
    let grad_u = |x: f64, _: f64| [2.0 * x, 0.5];
    let g = |x: f64, y: f64| x * x + 0.5 * y;

    let computed = energy_error(&mesh, &grad_u, &u, Some(&g), 2);
    let oracle = oracle_energy_error(&mesh, &grad_u, &u, Some(&g), 3);
    assert!(
        (computed - oracle).abs() <= 1e-11 * oracle,
        "computed {computed} vs oracle {oracle}"
    );

    // Homogeneous boundary comparison as well.
    let computed = energy_error(&mesh, &grad_u, &u, None, 2);
    let oracle = oracle_energy_error(&mesh, &grad_u, &u, None, 3);
    assert!((computed - oracle).abs() <= 1e-11 * oracle);
}

#[test]
fn radial_benchmark_error_is_stable_in_the_quadrature_depth() {
    let prob = example_2();
    let mut mesh = build_initial_mesh(prob.domain).unwrap();
    for _ in 0..3 {
        let all: Vec<usize> = (0..mesh.ntri()).collect();
        mesh = mesh.bisect(&all).unwrap();
    }
    let sys = assemble_problem(&mesh, &prob);
    let sol = solve_vi(&sys, None).unwrap();
    let exact = prob.exact.as_ref().unwrap();

    let coarse = energy_error(
        &mesh,
        exact.grad_u.as_ref(),
        &sol.u_h,
        prob.dirichlet.as_deref(),
        2,
    );
    let fine = energy_error(
        &mesh,
        exact.grad_u.as_ref(),
        &sol.u_h,
        prob.dirichlet.as_deref(),
        5,
    );
    assert!(coarse > 0.0);
    // The integrand has a kink along the contact circle; deeper subdivision
    // must not move the value materially.
    assert!(
        (coarse - fine).abs() <= 1e-3 * fine,
        "depth 2 gives {coarse}, depth 5 gives {fine}"
    );
    // And the oracle agrees on this transcendental case to quadrature
    // accuracy.
    let oracle = oracle_energy_error(
        &mesh,
        exact.grad_u.as_ref(),
        &sol.u_h,
        prob.dirichlet
            .as_deref()
            .map(|g| g as &dyn Fn(f64, f64) -> f64),
        6,
    );
    assert!((coarse - oracle).abs() <= 1e-3 * oracle);
}
