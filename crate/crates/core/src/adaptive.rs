//! Adaptive solve / estimate / mark / refine loop.
//!
//! Each level assembles the discrete obstacle problem on the current mesh,
//! solves it (warm started from the parent level's activity), evaluates the
//! residual estimator, and records a summary row. Marking uses the Dorfler
//! bulk criterion on the squared element indicators; refinement is newest
//! vertex bisection of the marked elements.

use std::fmt;
use std::time::Instant;

use crate::assembly::{assemble_problem, energy_error, SparseSystem};
use crate::error::Error;
use crate::estimator::{estimate, EstimatorBreakdown};
use crate::mesh::{build_initial_mesh, TriMesh};
use crate::problems::ProblemSpec;
use crate::solver::{solve_vi, ViSolution};
use crate::space::ElementConstants;

/// Subdivision depth for the reference-solution quadrature in the energy
/// error; two rounds keep the oracle well below the discretization error on
/// the meshes the driver visits.
const ERROR_QUAD_DEPTH: u32 = 2;

/// The domain builders return the coarsest conforming meshes (2-6 triangles),
/// where the first marking rounds chase the discrete contact set instead of
/// the solution and the error can transiently grow. Level 0 therefore starts
/// from a uniform pre-refinement of the coarse mesh to at least this many
/// triangles.
const INITIAL_MIN_TRIS: usize = 1024;

/// When to stop the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once a level reaches at least this many degrees of freedom.
    MaxDof(usize),
    /// Run exactly this many levels.
    MaxLevels(usize),
    /// Stop once the total estimator drops to or below this value.
    EtaBelow(f64),
}

/// Summary of one level of the adaptive loop. The five estimator component
/// fields hold square roots, so squaring and summing them recovers
/// `eta_total^2`.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub level: usize,
    pub ndof: usize,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub pospart: f64,
    pub contact: f64,
    pub eta_total: f64,
    /// Energy distance to the exact solution, when the problem has one.
    pub energy_error: Option<f64>,
    /// `eta_total / energy_error`, present exactly when the error is.
    pub eff_index: Option<f64>,
    /// Number of elements in the discrete contact set.
    pub contact_count: usize,
    /// Active set iterations the solver needed on this level.
    pub pdas_iters: usize,
    /// Wall clock seconds spent on this level.
    pub wall_s: f64,
}

/// Everything a per-level observer may want to look at.
pub struct LevelContext<'a> {
    pub level: usize,
    pub mesh: &'a TriMesh,
    pub sys: &'a SparseSystem,
    pub solution: &'a ViSolution,
    pub breakdown: &'a EstimatorBreakdown,
    pub record: &'a RunRecord,
}

/// A failed adaptive run, carrying the levels that did complete.
#[derive(Debug)]
pub struct AdaptError {
    pub records: Vec<RunRecord>,
    pub source: Error,
}

impl fmt::Display for AdaptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "adaptive run failed after {} completed levels: {}",
            self.records.len(),
            self.source
        )
    }
}

impl std::error::Error for AdaptError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Smallest prefix of the elements, ordered by decreasing squared indicator,
/// whose indicator mass reaches the fraction `theta` of the total. Ties
/// prefer smaller element ids; a zero field marks nothing. The result is
/// sorted ascending.
pub fn dorfler_mark(local: &ElementConstants, theta: f64) -> Vec<usize> {
    let values = &local.values;
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        marked.push(t);
        acc += values[t];
        if acc >= target {
            break;
        }
    }
    marked.sort_unstable();
    marked
}

/// Least squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Runs the adaptive loop until the stop rule fires or marking is empty.
/// `uniform` refines every element instead of the marked set. The optional
/// callback sees each completed level, in order, before the next refinement;
/// on failure the records of the completed levels ride along in the error.
pub fn run_adaptive(
    problem: &ProblemSpec,
    theta: f64,
    stop: StopRule,
    uniform: bool,
    mut on_level: Option<&mut dyn FnMut(&LevelContext<'_>)>,
) -> Result<Vec<RunRecord>, AdaptError> {
    let mut records: Vec<RunRecord> = Vec::new();
    let fail = |records: Vec<RunRecord>, source: Error| AdaptError { records, source };

    let mut mesh = match build_initial_mesh(problem.domain) {
        Ok(m) => m,
        Err(e) => return Err(fail(records, e)),
    };
    while mesh.ntri() < INITIAL_MIN_TRIS {
        let all: Vec<usize> = (0..mesh.ntri()).collect();
        mesh = match mesh.bisect(&all) {
            Ok(m) => m,
            Err(e) => return Err(fail(records, e)),
        };
    }
    let mut warm: Option<Vec<bool>> = None;

    for level in 0.. {
        let started = Instant::now();
        let sys = assemble_problem(&mesh, problem);
        let sol = match solve_vi(&sys, warm.as_deref()) {
            Ok(s) => s,
            Err(e) => return Err(fail(records, e)),
        };
        let bd = estimate(
            &mesh,
            problem.f.as_ref(),
            problem.psi.as_ref(),
            problem.grad_psi.as_ref(),
            problem.dirichlet.as_deref(),
            &sol,
        );
        let err = problem.exact.as_ref().map(|ex| {
            energy_error(
                &mesh,
                ex.grad_u.as_ref(),
                &sol.u_h,
                problem.dirichlet.as_deref(),
                ERROR_QUAD_DEPTH,
            )
        });
        let record = RunRecord {
            level,
            ndof: sol.u_h.ndof(),
            eta1: bd.eta1_sq.sqrt(),
            eta2: bd.eta2_sq.sqrt(),
            eta3: bd.eta3_sq.sqrt(),
            pospart: bd.pospart_sq.sqrt(),
            contact: bd.contact_term.sqrt(),
            eta_total: bd.eta_total,
            energy_error: err,
            eff_index: err.map(|e| bd.eta_total / e),
            contact_count: sol.active.iter().filter(|&&a| a).count(),
            pdas_iters: sol.iterations,
            wall_s: started.elapsed().as_secs_f64(),
        };
        records.push(record);
        if let Some(cb) = on_level.as_mut() {
            cb(&LevelContext {
                level,
                mesh: &mesh,
                sys: &sys,
                solution: &sol,
                breakdown: &bd,
                record: records.last().unwrap(),
            });
        }

        let last = records.last().unwrap();
        let done = match stop {
            StopRule::MaxDof(n) => last.ndof >= n,
            StopRule::MaxLevels(n) => records.len() >= n,
            StopRule::EtaBelow(x) => last.eta_total <= x,
        };
        if done {
            break;
        }

        let marked: Vec<usize> = if uniform {
            (0..mesh.ntri()).collect()
        } else {
            dorfler_mark(&bd.local, theta)
        };
        if marked.is_empty() {
            break;
        }
        let outcome = match mesh.bisect_traced(&marked) {
            Ok(o) => o,
            Err(e) => return Err(fail(records, e)),
        };
        warm = Some(outcome.parent.iter().map(|&p| sol.active[p]).collect());
        mesh = outcome.mesh;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example_1, example_2, LoadCase};
    use crate::space::FieldTag;

    fn indicators(values: Vec<f64>) -> ElementConstants {
        ElementConstants::new(values, FieldTag::Indicator)
    }

    #[test]
    fn marking_takes_the_minimal_greedy_prefix() {
        let marked = dorfler_mark(&indicators(vec![2.0, 2.0, 1.0]), 0.5);
        assert_eq!(marked, vec![0, 1]);
        // A single dominant element suffices for a small fraction.
        let marked = dorfler_mark(&indicators(vec![0.1, 9.0, 0.1]), 0.5);
        assert_eq!(marked, vec![1]);
    }

    #[test]
    fn marking_edge_cases() {
        assert!(dorfler_mark(&indicators(vec![0.0, 0.0]), 0.5).is_empty());
        // Any positive mass marks at least one element.
        assert_eq!(dorfler_mark(&indicators(vec![0.0, 1e-30]), 0.3), vec![1]);
        // theta near one takes almost everything.
        let marked = dorfler_mark(&indicators(vec![1.0; 100]), 0.999);
        assert!(marked.len() >= 90);
        // Ties resolve toward smaller ids.
        let marked = dorfler_mark(&indicators(vec![1.0, 1.0, 1.0, 1.0]), 0.4);
        assert_eq!(marked, vec![0, 1]);
    }

    #[test]
    fn slope_of_an_exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        assert!((fit_slope(&pts) + 0.5).abs() < 1e-13);
    }

    #[test]
    fn adaptive_run_produces_consistent_records() {
        let prob = example_2();
        let mut seen = Vec::new();
        let mut cb = |ctx: &LevelContext<'_>| {
            assert_eq!(ctx.record.level, ctx.level);
            assert_eq!(ctx.mesh.ntri() * 3, ctx.record.ndof);
            assert_eq!(ctx.sys.ndof, ctx.record.ndof);
            seen.push(ctx.level);
        };
        let records = run_adaptive(&prob, 0.4, StopRule::MaxLevels(4), false, Some(&mut cb))
            .expect("run");
        assert_eq!(records.len(), 4);
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.level, i);
            assert!(r.eta_total > 0.0);
            assert!(r.energy_error.is_some());
            assert!(r.eff_index.is_some());
            assert!(r.wall_s >= 0.0);
            let parts = r.eta1 * r.eta1
                + r.eta2 * r.eta2
                + r.eta3 * r.eta3
                + r.pospart * r.pospart
                + r.contact * r.contact;
            assert!((parts - r.eta_total * r.eta_total).abs() <= 1e-12 * parts);
        }
        for w in records.windows(2) {
            assert!(w[1].ndof > w[0].ndof, "dof counts must grow");
        }
    }

    #[test]
    fn stop_rules_fire_where_stated() {
        let prob = example_1(LoadCase::Zero);
        let records = run_adaptive(&prob, 0.4, StopRule::MaxDof(4000), false, None).expect("run");
        assert!(records.len() >= 2);
        assert!(records.last().unwrap().ndof >= 4000);
        for r in &records[..records.len() - 1] {
            assert!(r.ndof < 4000);
        }
        // No exact solution for this problem, so no error columns.
        assert!(records.iter().all(|r| r.energy_error.is_none()));
        assert!(records.iter().all(|r| r.eff_index.is_none()));

        let records =
            run_adaptive(&example_2(), 0.4, StopRule::EtaBelow(1e9), false, None).expect("run");
        assert_eq!(records.len(), 1);
    }

    #[test]
    fn uniform_refinement_bisects_every_element() {
        let prob = example_2();
        let records = run_adaptive(&prob, 0.4, StopRule::MaxLevels(3), true, None).expect("run");
        assert_eq!(records.len(), 3);
        // Every element splits at least once per round, into at most four.
        for w in records.windows(2) {
            assert!(w[1].ndof >= 2 * w[0].ndof);
            assert!(w[1].ndof <= 4 * w[0].ndof);
        }
    }
}
