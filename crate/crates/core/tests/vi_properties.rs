//! The active set solver checked against first principles: the computed
//! solution must beat every feasible competitor in energy, and on meshes
//! small enough to enumerate, it must match the optimum found by trying
//! every active pattern with a dense factorization.

use mwg::mesh::{build_initial_mesh, DomainSpec, TriMesh};
use mwg::{assemble, solve_vi, SparseSystem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn refined_square(rounds: usize) -> TriMesh {
    let mut mesh = build_initial_mesh(DomainSpec::Square { half: 1.0 }).unwrap();
    for _ in 0..rounds {
        let all: Vec<usize> = (0..mesh.ntri()).collect();
        mesh = mesh.bisect(&all).unwrap();
    }
    mesh
}

fn objective(sys: &SparseSystem, u: &[f64]) -> f64 {
    let dot: f64 = sys.b.iter().zip(u).map(|(b, u)| b * u).sum();
    0.5 * sys.a.quadratic(u) - dot
}

#[test]
fn no_feasible_competitor_has_lower_energy() {
    let mesh = refined_square(4);
    let sys = assemble(&mesh, &|_, _| -10.0, &|_, _| -0.5);
    let sol = solve_vi(&sys, None).unwrap();
    let best = objective(&sys, &sol.u_h.values);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for probe in 0..20 {
        // Raising element means keeps every constraint satisfied; adding a
        // mean free wiggle leaves them untouched. Everything built this way
        // is feasible.
        let mut v = sol.u_h.values.clone();
        for t in 0..mesh.ntri() {
            let lift = rng.random_range(0.0..0.5);
            let a = rng.random_range(-0.5..0.5);
            let b = rng.random_range(-0.5..0.5);
            v[3 * t] += lift + a;
            v[3 * t + 1] += lift - a + b;
            v[3 * t + 2] += lift - b;
        }
        for t in 0..mesh.ntri() {
            let field = mwg::DgField { values: v.clone() };
            let slack = sys.constraint_value(&field, t) - sys.constraint_rhs[t];
            assert!(slack >= -1e-10, "probe {probe} infeasible on {t}");
        }
        let j = objective(&sys, &v);
        assert!(
            j >= best - 1e-12 * best.abs().max(1.0),
            "probe {probe} beats the solver: {j} < {best}"
        );
    }
}

/// Solves the equality constrained problem for one active pattern with a
/// dense KKT factorization and keeps it only if primal feasibility and the
/// multiplier signs hold.
fn try_pattern(sys: &SparseSystem, pattern: &[bool]) -> Option<(Vec<f64>, f64)> {
    let n = sys.ndof;
    let ntri = pattern.len();
    let active: Vec<usize> = (0..ntri).filter(|&t| pattern[t]).collect();
    let m = active.len();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    for j in 0..n {
        for p in sys.a.col_ptr[j]..sys.a.col_ptr[j + 1] {
            kkt[(sys.a.row_idx[p] as usize, j)] = sys.a.values[p];
        }
    }
    let mut rhs = DVector::zeros(n + m);
    for i in 0..n {
        rhs[i] = sys.b[i];
    }
    for (row, &t) in active.iter().enumerate() {
        let c = sys.tri_area[t] / 3.0;
        for k in 0..3 {
            kkt[(n + row, 3 * t + k)] = c;
            kkt[(3 * t + k, n + row)] = c;
        }
        rhs[n + row] = sys.constraint_rhs[t];
    }
    let x = kkt.lu().solve(&rhs)?;
    let u: Vec<f64> = x.as_slice()[..n].to_vec();
    let field = mwg::DgField { values: u.clone() };
    for t in 0..ntri {
        if sys.constraint_value(&field, t) - sys.constraint_rhs[t] < -1e-9 {
            return None;
        }
    }
    // With this block layout the stored multiplier is the negative of the
    // lower bound multiplier, so optimal patterns have nonpositive entries.
    for row in 0..m {
        if x[n + row] > 1e-9 {
            return None;
        }
    }
    Some((u, objective(sys, &x.as_slice()[..n])))
}

fn enumerate_optimum(sys: &SparseSystem, ntri: usize) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << ntri) {
        let pattern: Vec<bool> = (0..ntri).map(|t| mask >> t & 1 == 1).collect();
        if let Some((u, j)) = try_pattern(sys, &pattern) {
            if best.as_ref().is_none_or(|(_, jb)| j < *jb) {
                best = Some((u, j));
            }
        }
    }
    best.expect("some pattern must satisfy the optimality system")
}

#[test]
fn small_meshes_match_exhaustive_enumeration() {
    let reference = TriMesh::from_raw(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        None,
    )
    .unwrap();
    let cases: Vec<(TriMesh, fn(f64, f64) -> f64, fn(f64, f64) -> f64)> = vec![
        (reference, |_, _| 0.0, |_, _| 2.0),
        (refined_square(0), |_, _| -1.0, |_, _| -0.02),
        (refined_square(1), |x, _| x, |x, y| 0.3 - x * x - y * y),
        (refined_square(2), |_, _| -2.0, |_, _| -0.1),
    ];
    for (i, (mesh, f, psi)) in cases.into_iter().enumerate() {
        assert!(mesh.ntri() <= 8, "enumeration only stays cheap up to 8");
        let sys = assemble(&mesh, &f, &psi);
        let sol = solve_vi(&sys, None).unwrap();
        let (u_ref, j_ref) = enumerate_optimum(&sys, mesh.ntri());
        let dev = sol
            .u_h
            .values
            .iter()
            .zip(&u_ref)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-10, "case {i}: solution deviates by {dev}");
        let j = objective(&sys, &sol.u_h.values);
        assert!((j - j_ref).abs() <= 1e-10 * (1.0 + j_ref.abs()), "case {i}");
    }
}
