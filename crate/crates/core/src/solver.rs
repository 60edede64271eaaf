//! Primal-dual active set solver for the discrete obstacle problem, plus two
//! independent consistency checks on the computed multiplier.
//!
//! The discrete problem minimizes `u^T A u / 2 - b^T u` subject to one linear
//! constraint per triangle, `c_T(u) >= g_T` with `c_T` the element integral.
//! Each iteration guesses the contact set, solves the equality-constrained
//! problem by eliminating the constrained direction (on an active element the
//! solution moves only in the two directions with zero element mean), and
//! re-guesses from the signs of the resulting multipliers and violations.
//! The reduced matrix stays symmetric positive definite, so each step is one
//! sparse Cholesky solve on a nested-dissection ordering of the elements.

use std::collections::HashSet;

use crate::assembly::SparseSystem;
use crate::mesh::TriMesh;
use crate::quadrature::TRI_DEGREE4;
use crate::space::{weak_gradient, DgField, ElementConstants, FieldTag};
use crate::sparse::{cholesky, min_degree_order, CscMatrix};
use crate::{Error, Scalar};

const MAX_ITER: usize = 200;

/// Solution of the discrete variational inequality.
#[derive(Debug, Clone)]
pub struct ViSolution {
    pub u_h: DgField,
    /// Per-element multiplier; nonpositive, zero off the contact set.
    pub lambda_h: ElementConstants,
    /// Elements whose constraint is held as an equality.
    pub active: Vec<bool>,
    pub iterations: usize,
    /// Largest violation of the KKT identities by the returned point.
    pub kkt_residual: f64,
}

/// Orthonormal basis of the plane with zero component sum: the directions an
/// active element may still move in.
fn mean_free_basis() -> [[f64; 2]; 3] {
    let s6 = 6.0_f64.sqrt();
    [
        [std::f64::consts::FRAC_1_SQRT_2, 1.0 / s6],
        [-std::f64::consts::FRAC_1_SQRT_2, 1.0 / s6],
        [0.0, -2.0 / s6],
    ]
}

/// Entry `(i, q)` of the per-element reduction matrix: identity on inactive
/// elements, the mean-free basis on active ones.
fn z_entry(basis: &[[f64; 2]; 3], active: bool, i: usize, q: usize) -> f64 {
    if active {
        basis[i][q]
    } else {
        (i == q) as u8 as f64
    }
}

/// Block adjacency of the matrix: elements coupled by any scalar entry.
fn element_adjacency(a: &CscMatrix, ntri: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); ntri];
    for j in 0..a.n {
        let t = j / 3;
        for p in a.col_ptr[j]..a.col_ptr[j + 1] {
            let s = a.row_idx[p] as usize / 3;
            if s != t {
                adj[t].push(s);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

struct Reduction<'a> {
    sys: &'a SparseSystem,
    perm: Vec<usize>,
    pos: Vec<usize>,
    basis: [[f64; 2]; 3],
    // Scratch for gathering the blocks of one element column; the generation
    // counter never resets, so stale stamps from earlier solves cannot alias.
    stamp: Vec<usize>,
    slot_of: Vec<usize>,
    generation: usize,
}

impl<'a> Reduction<'a> {
    fn new(sys: &'a SparseSystem) -> Self {
        let ntri = sys.ndof / 3;
        let adj = element_adjacency(&sys.a, ntri);
        let perm = min_degree_order(&adj);
        let mut pos = vec![0usize; ntri];
        for (i, &t) in perm.iter().enumerate() {
            pos[t] = i;
        }
        Reduction {
            sys,
            perm,
            pos,
            basis: mean_free_basis(),
            stamp: vec![0; ntri],
            slot_of: vec![0; ntri],
            generation: 0,
        }
    }

    /// Solves the equality-constrained problem for the given active set:
    /// holds `c_T(u) = g_T` on active elements and returns the minimizer.
    fn solve(&mut self, active: &[bool]) -> Result<Vec<f64>, Error> {
        let sys = self.sys;
        let ntri = active.len();
        let width = |t: usize| if active[t] { 2 } else { 3 };

        let mut base = vec![0usize; ntri + 1];
        for i in 0..ntri {
            base[i + 1] = base[i] + width(self.perm[i]);
        }
        let nred = base[ntri];

        // Particular solution: the flat field meeting each active constraint.
        let mut u = vec![0.0; sys.ndof];
        let mut any_active = false;
        for t in 0..ntri {
            if active[t] {
                any_active = true;
                let s = sys.constraint_rhs[t] / sys.tri_area[t];
                u[3 * t..3 * t + 3].fill(s);
            }
        }
        let mut r0 = vec![0.0; sys.ndof];
        if any_active {
            sys.a.matvec(&u, &mut r0);
        }
        for i in 0..sys.ndof {
            r0[i] = sys.b[i] - r0[i];
        }

        // Reduced matrix, built column block by column block in permuted
        // order; slots sorted by permuted position keep rows ascending.
        let mut col_ptr = Vec::with_capacity(nred + 1);
        col_ptr.push(0usize);
        let mut row_idx: Vec<u32> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut rhs = vec![0.0; nred];
        let mut slots: Vec<(usize, [[f64; 3]; 3])> = Vec::new();

        for pt in 0..ntri {
            let t = self.perm[pt];
            slots.clear();
            self.generation += 1;
            for lj in 0..3 {
                let j = 3 * t + lj;
                for p in sys.a.col_ptr[j]..sys.a.col_ptr[j + 1] {
                    let i = sys.a.row_idx[p] as usize;
                    let s = i / 3;
                    if self.stamp[s] != self.generation {
                        self.stamp[s] = self.generation;
                        self.slot_of[s] = slots.len();
                        slots.push((s, [[0.0; 3]; 3]));
                    }
                    slots[self.slot_of[s]].1[i % 3][lj] = sys.a.values[p];
                }
            }
            slots.sort_unstable_by_key(|&(s, _)| self.pos[s]);

            for q in 0..width(t) {
                for (s, blk) in &slots {
                    let s = *s;
                    for li in 0..width(s) {
                        let mut m = 0.0;
                        for i in 0..3 {
                            let zi = z_entry(&self.basis, active[s], i, li);
                            if zi == 0.0 {
                                continue;
                            }
                            for jj in 0..3 {
                                m += zi * blk[i][jj] * z_entry(&self.basis, active[t], jj, q);
                            }
                        }
                        row_idx.push((base[self.pos[s]] + li) as u32);
                        values.push(m);
                    }
                }
                col_ptr.push(row_idx.len());
            }
            for q in 0..width(t) {
                let mut v = 0.0;
                for i in 0..3 {
                    v += z_entry(&self.basis, active[t], i, q) * r0[3 * t + i];
                }
                rhs[base[pt] + q] = v;
            }
        }

        let reduced = CscMatrix { n: nred, col_ptr, row_idx, values };
        let factor = cholesky(&reduced)?;
        let mut y = factor.solve(&rhs);
        // One refinement pass: the multiplier is the system residual divided
        // by element areas, so the digits the long substitutions lose on fine
        // meshes show up magnified there.
        let mut resid = vec![0.0; nred];
        reduced.matvec(&y, &mut resid);
        for i in 0..nred {
            resid[i] = rhs[i] - resid[i];
        }
        let correction = factor.solve(&resid);
        for i in 0..nred {
            y[i] += correction[i];
        }

        for pt in 0..ntri {
            let t = self.perm[pt];
            for i in 0..3 {
                let mut v = u[3 * t + i];
                for q in 0..width(t) {
                    v += z_entry(&self.basis, active[t], i, q) * y[base[pt] + q];
                }
                u[3 * t + i] = v;
            }
        }
        Ok(u)
    }
}

/// Stationarity and feasibility data of an iterate.
struct Iterate {
    u: Vec<f64>,
    /// Nonnegative-by-optimality multiplier per active element, zero
    /// elsewhere.
    mu: Vec<f64>,
    /// Constraint slack `c_T(u) - g_T`.
    slack: Vec<f64>,
    kkt: f64,
}

fn evaluate(sys: &SparseSystem, active: &[bool], u: Vec<f64>) -> Iterate {
    let ntri = active.len();
    let mut r = vec![0.0; sys.ndof];
    sys.a.matvec(&u, &mut r);
    for i in 0..sys.ndof {
        r[i] -= sys.b[i];
    }
    let field = DgField { values: u };
    let mut mu = vec![0.0; ntri];
    let mut slack = vec![0.0; ntri];
    let mut kkt = 0.0_f64;
    for t in 0..ntri {
        slack[t] = sys.constraint_value(&field, t) - sys.constraint_rhs[t];
        if active[t] {
            // On an active block the gradient of the Lagrangian vanishes
            // when the residual is mu_T times the constraint gradient,
            // which is (|T|/3) on each of the three entries.
            mu[t] = (r[3 * t] + r[3 * t + 1] + r[3 * t + 2]) / sys.tri_area[t];
            for k in 0..3 {
                kkt = kkt.max((r[3 * t + k] - mu[t] * sys.tri_area[t] / 3.0).abs());
            }
            kkt = kkt.max(slack[t].abs());
        } else {
            for k in 0..3 {
                kkt = kkt.max(r[3 * t + k].abs());
            }
        }
    }
    Iterate { u: field.values, mu, slack, kkt }
}

/// Solves the discrete obstacle problem by the primal-dual active set
/// iteration, optionally warm-started from a previous activity pattern.
///
/// The plain update sets the next active set to the elements with
/// `mu_T + (g_T - c_T(u)) > 0`. If an active set ever repeats, the iteration
/// switches to a conservative mode that first adds all violated constraints
/// and, once feasible, releases only the single most negative multiplier at a
/// time; this cannot cycle. Failing to settle within 200 iterations is an
/// error.
pub fn solve_vi(sys: &SparseSystem, warm: Option<&[bool]>) -> Result<ViSolution, Error> {
    let ntri = sys.ndof / 3;
    let mut active = match warm {
        Some(w) => {
            assert_eq!(w.len(), ntri);
            w.to_vec()
        }
        None => vec![false; ntri],
    };
    let mut reduction = Reduction::new(sys);
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    seen.insert(active.clone());
    let mut conservative = false;

    let mut last_kkt = f64::INFINITY;
    for iter in 1..=MAX_ITER {
        let u = reduction.solve(&active)?;
        let it = evaluate(sys, &active, u);
        last_kkt = it.kkt;

        let mut next = active.clone();
        if !conservative {
            for t in 0..ntri {
                next[t] = it.mu[t] - it.slack[t] > 0.0;
            }
        } else {
            let mut violated = false;
            for t in 0..ntri {
                if !active[t] && it.slack[t] < 0.0 {
                    next[t] = true;
                    violated = true;
                }
            }
            if !violated {
                // Feasible: release the worst wrong-signed multiplier only.
                let mut drop = None;
                let mut worst = 0.0;
                for t in 0..ntri {
                    if active[t] && it.mu[t] < worst {
                        worst = it.mu[t];
                        drop = Some(t);
                    }
                }
                if let Some(t) = drop {
                    next[t] = false;
                }
            }
        }

        if next == active {
            let lambda: Vec<f64> = it.mu.iter().map(|&m| -m).collect();
            return Ok(ViSolution {
                u_h: DgField { values: it.u },
                lambda_h: ElementConstants::new(lambda, FieldTag::Multiplier),
                active,
                iterations: iter,
                kkt_residual: it.kkt,
            });
        }
        if !seen.insert(next.clone()) && !conservative {
            conservative = true;
            // Re-enter from the current set; the conservative update will
            // pick a fresh direction next round.
            continue;
        }
        active = next;
    }
    Err(Error::SolverStalled { max_iter: MAX_ITER, kkt_residual: last_kkt })
}

/// Independent recovery of the multiplier on every element: tests the KKT
/// identity against the characteristic field of each element, evaluating the
/// load and the bilinear form patch-locally rather than through the
/// assembled matrix. Returns the largest deviation from `lambda`.
pub fn multiplier_crosscheck(
    mesh: &TriMesh,
    f: &Scalar,
    dirichlet: Option<&Scalar>,
    u_h: &DgField,
    lambda: &ElementConstants,
) -> f64 {
    let ntri = mesh.ntri();
    let grads: Vec<[f64; 2]> = (0..ntri).map(|t| weak_gradient(mesh, u_h, t)).collect();
    let mut worst = 0.0_f64;
    for t in 0..ntri {
        // L(q) for the indicator field q of element t.
        let coords = mesh.tri_coords(t);
        let mut lq = crate::quadrature::integrate_tri(&coords, &TRI_DEGREE4, |x, y| f(x, y));
        // a_h(u, q): the weak gradient of q lives on t and its neighbours.
        let mut ah = 0.0;
        let mut gq_t = [0.0, 0.0];
        for k in 0..3 {
            let e = mesh.tri_edges[t][k];
            let edge = &mesh.edges[e];
            let n = mesh.outward_normal(t, e);
            let other = mesh.other_tri(e, t);
            let c = if other.is_some() { 0.5 } else { 1.0 };
            gq_t[0] += c * edge.length * n[0];
            gq_t[1] += c * edge.length * n[1];
            if let Some(s) = other {
                // From the far side the trace average is one half and the
                // normal flips.
                let gq_s = [
                    -0.5 * edge.length * n[0] / mesh.area[s],
                    -0.5 * edge.length * n[1] / mesh.area[s],
                ];
                ah += mesh.area[s] * (grads[s][0] * gq_s[0] + grads[s][1] * gq_s[1]);
            }
            // Jump terms: q jumps by +-1 across every edge of t.
            let jq = if edge.tris[0] == t { 1.0 } else { -1.0 };
            let ju = crate::space::edge_jump_scalar(mesh, u_h, e);
            ah += jq * 0.5 * (ju[0] + ju[1]);
            if edge.boundary {
                if let Some(g) = dirichlet {
                    let pa = mesh.vertices[edge.verts[0]];
                    let pb = mesh.vertices[edge.verts[1]];
                    for &(s, w) in crate::quadrature::EDGE_DEGREE5.points {
                        lq += w * g(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]));
                    }
                }
            }
        }
        gq_t[0] /= mesh.area[t];
        gq_t[1] /= mesh.area[t];
        ah += mesh.area[t] * (grads[t][0] * gq_t[0] + grads[t][1] * gq_t[1]);
        let recovered = (lq - ah) / mesh.area[t];
        worst = worst.max((recovered - lambda.values[t]).abs());
    }
    worst
}

/// Residual of the KKT identity tested against the conforming hat function
/// of every interior vertex, evaluated star-locally and normalized by the hat
/// function's energy norm. Returns the largest normalized residual (zero on
/// meshes without interior vertices).
pub fn conforming_residual(
    mesh: &TriMesh,
    f: &Scalar,
    u_h: &DgField,
    lambda: &ElementConstants,
) -> f64 {
    let ntri = mesh.ntri();
    let mut star: Vec<Vec<(usize, usize)>> = vec![Vec::new(); mesh.nvert()];
    for (t, tri) in mesh.tris.iter().enumerate() {
        for (k, &v) in tri.iter().enumerate() {
            star[v].push((t, k));
        }
    }
    let grads: Vec<[f64; 2]> = (0..ntri).map(|t| weak_gradient(mesh, u_h, t)).collect();
    let mut worst = 0.0_f64;
    for v in 0..mesh.nvert() {
        if mesh.boundary_vertex[v] {
            continue;
        }
        let mut residual = 0.0;
        let mut energy = 0.0;
        for &(t, k) in &star[v] {
            // Weak gradient of the hat on t: only the two edges through v
            // see a nonzero trace average (one half on each side).
            let mut gh = [0.0, 0.0];
            for j in 0..3 {
                if j == k {
                    continue;
                }
                let e = mesh.tri_edges[t][j];
                let n = mesh.outward_normal(t, e);
                gh[0] += 0.5 * mesh.edges[e].length * n[0];
                gh[1] += 0.5 * mesh.edges[e].length * n[1];
            }
            gh[0] /= mesh.area[t];
            gh[1] /= mesh.area[t];
            energy += mesh.area[t] * (gh[0] * gh[0] + gh[1] * gh[1]);
            residual -= mesh.area[t] * (grads[t][0] * gh[0] + grads[t][1] * gh[1]);
            // L(hat) restricted to t, with the same rule the load uses.
            let coords = mesh.tri_coords(t);
            let area = mesh.area[t];
            for &(bary, w) in TRI_DEGREE4.points {
                let x = bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0];
                let y = bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1];
                residual += area * w * f(x, y) * bary[k];
            }
            // The multiplier term: the hat integrates to |T|/3 on t.
            residual -= lambda.values[t] * area / 3.0;
        }
        if energy > 0.0 {
            worst = worst.max(residual.abs() / energy.sqrt());
        }
    }
    worst
}
