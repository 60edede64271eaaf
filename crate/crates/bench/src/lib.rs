//! Shared fixtures for the pipeline benchmarks.

use mwg::{build_initial_mesh, dorfler_mark, estimate, solve_vi, ProblemSpec, TriMesh};

/// Refines the problem's initial mesh adaptively until it holds at least
/// `min_tris` triangles, returning the mesh ready for benchmarking.
pub fn mesh_with_at_least(problem: &ProblemSpec, min_tris: usize) -> TriMesh {
    let mut mesh = build_initial_mesh(problem.domain).expect("domain");
    while mesh.ntri() < min_tris {
        let sys = mwg::assemble_problem(&mesh, problem);
        let sol = solve_vi(&sys, None).expect("solve");
        let bd = estimate(
            &mesh,
            problem.f.as_ref(),
            problem.psi.as_ref(),
            problem.grad_psi.as_ref(),
            problem.dirichlet.as_deref(),
            &sol,
        );
        let marked = dorfler_mark(&bd.local, 0.4);
        if marked.is_empty() {
            break;
        }
        mesh = mesh.bisect(&marked).expect("refine");
    }
    mesh
}
