//! Conforming triangle meshes with newest-vertex bisection.
//!
//! Triangles store their vertices counterclockwise. Each triangle carries a
//! refinement edge (as the local index of the opposite vertex); bisection
//! inserts the midpoint of that edge and the two children adopt the classical
//! newest-vertex pattern, which keeps the minimum angle bounded away from
//! zero over arbitrarily many refinement rounds. Marking an edge for
//! bisection forces neighbour triangles to split too, so the refined mesh is
//! conforming again without any smoothing pass.

use std::collections::{HashMap, VecDeque};

use crate::quadrature::signed_area;
use crate::Error;

/// Placeholder triangle id on the open side of a boundary edge.
pub const NO_TRI: usize = usize::MAX;

/// Initial domains the solver knows how to triangulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    /// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// Square `(-half, half)^2`.
    Square { half: f64 },
    /// L-shaped domain `(-half, half)^2` minus the closed fourth quadrant
    /// `[0, half] x [-half, 0]`, with the reentrant corner at the origin.
    LShape { half: f64 },
}

/// Undirected mesh edge.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex ids, smaller first.
    pub verts: [usize; 2],
    /// Adjacent triangles, smaller id first; `tris[1]` is `NO_TRI` on the
    /// boundary.
    pub tris: [usize; 2],
    pub length: f64,
    /// Unit normal. On interior edges it points from `tris[0]` into
    /// `tris[1]`; on boundary edges it points out of the domain.
    pub normal: [f64; 2],
    pub boundary: bool,
}

/// Conforming triangulation of a polygonal domain.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `tri_edges[t][k]` is the edge of triangle `t` opposite its local
    /// vertex `k`.
    pub tri_edges: Vec<[usize; 3]>,
    /// Local index (0..3) of the vertex opposite the refinement edge.
    pub refine_edge: Vec<usize>,
    pub area: Vec<f64>,
    /// Longest edge of each triangle.
    pub diameter: Vec<f64>,
    pub boundary_vertex: Vec<bool>,
}

/// Result of a traced bisection: the refined mesh plus, for every new
/// triangle, the id of the coarse triangle it came from.
#[derive(Debug, Clone)]
pub struct BisectOutcome {
    pub mesh: TriMesh,
    pub parent: Vec<usize>,
}

impl TriMesh {
    /// Builds a mesh from vertex coordinates and triangles, deriving edges,
    /// normals, and areas. When `refine` is `None` every triangle gets its
    /// longest edge as refinement edge (ties broken by the smallest global id
    /// of the opposite vertex).
    ///
    /// Fails if a triangle is degenerate or clockwise, an edge is shared by
    /// more than two triangles, a vertex is unused, or a boundary edge has a
    /// mesh vertex sitting at its midpoint (a hanging node).
    pub fn from_raw(
        vertices: Vec<[f64; 2]>,
        tris: Vec<[usize; 3]>,
        refine: Option<Vec<usize>>,
    ) -> Result<Self, Error> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in tris.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} out of {nv}"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any triangle")));
        }

        let mut area = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let a = signed_area(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive area {a} (vertices must be counterclockwise)"
                )));
            }
            area.push(a);
        }

        // Edge ids follow first appearance while scanning triangles in order,
        // so rebuilding the same mesh reproduces the same numbering.
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[0usize; 3]; tris.len()];
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_of.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        verts: [key.0, key.1],
                        tris: [t, NO_TRI],
                        length: 0.0,
                        normal: [0.0, 0.0],
                        boundary: true,
                    });
                    edges.len() - 1
                });
                tri_edges[t][k] = e;
                let slot = &mut edges[e];
                if slot.tris[0] != t {
                    if slot.tris[1] != NO_TRI {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) is shared by more than two triangles",
                            key.0, key.1
                        )));
                    }
                    slot.tris[1] = t;
                    slot.boundary = false;
                }
            }
        }

        for edge in &mut edges {
            let [a, b] = edge.verts;
            let dx = vertices[b][0] - vertices[a][0];
            let dy = vertices[b][1] - vertices[a][1];
            edge.length = dx.hypot(dy);
            // Rotate the edge vector and orient away from the first triangle.
            let mut n = [dy / edge.length, -dx / edge.length];
            let t0 = edge.tris[0];
            let w = tris[t0]
                .iter()
                .copied()
                .find(|&v| v != a && v != b)
                .expect("triangle has a vertex off the edge");
            let dot = n[0] * (vertices[w][0] - vertices[a][0])
                + n[1] * (vertices[w][1] - vertices[a][1]);
            if dot > 0.0 {
                n = [-n[0], -n[1]];
            }
            edge.normal = n;
        }

        // A hanging node shows up as a vertex at the midpoint of an edge that
        // looks like a boundary edge.
        let key_of = |p: [f64; 2]| (p[0].to_bits(), p[1].to_bits());
        let vertex_at: HashMap<(u64, u64), usize> =
            vertices.iter().enumerate().map(|(i, &p)| (key_of(p), i)).collect();
        for edge in edges.iter().filter(|e| e.boundary) {
            let [a, b] = edge.verts;
            let m = [
                0.5 * (vertices[a][0] + vertices[b][0]),
                0.5 * (vertices[a][1] + vertices[b][1]),
            ];
            if let Some(&v) = vertex_at.get(&key_of(m)) {
                return Err(Error::InvalidMesh(format!(
                    "vertex {v} hangs on the edge ({a}, {b})"
                )));
            }
        }

        let refine_edge = match refine {
            Some(r) => {
                if r.len() != tris.len() {
                    return Err(Error::InvalidMesh(format!(
                        "{} refinement edges for {} triangles",
                        r.len(),
                        tris.len()
                    )));
                }
                if let Some(t) = r.iter().position(|&k| k >= 3) {
                    return Err(Error::InvalidMesh(format!(
                        "refinement edge index {} of triangle {t} is not in 0..3",
                        r[t]
                    )));
                }
                r
            }
            None => tris
                .iter()
                .map(|tri| longest_edge_local(&vertices, tri))
                .collect(),
        };

        let diameter = tri_edges
            .iter()
            .map(|te| te.iter().map(|&e| edges[e].length).fold(0.0, f64::max))
            .collect();
        let mut boundary_vertex = vec![false; nv];
        for edge in edges.iter().filter(|e| e.boundary) {
            boundary_vertex[edge.verts[0]] = true;
            boundary_vertex[edge.verts[1]] = true;
        }

        Ok(TriMesh {
            vertices,
            tris,
            edges,
            tri_edges,
            refine_edge,
            area,
            diameter,
            boundary_vertex,
        })
    }

    pub fn ntri(&self) -> usize {
        self.tris.len()
    }

    pub fn nvert(&self) -> usize {
        self.vertices.len()
    }

    pub fn tri_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.tris[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let v = self.tri_coords(t);
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].verts;
        [
            0.5 * (self.vertices[a][0] + self.vertices[b][0]),
            0.5 * (self.vertices[a][1] + self.vertices[b][1]),
        ]
    }

    /// The triangle on the other side of edge `e`, if any.
    pub fn other_tri(&self, e: usize, t: usize) -> Option<usize> {
        let [t0, t1] = self.edges[e].tris;
        if t0 == t {
            (t1 != NO_TRI).then_some(t1)
        } else {
            Some(t0)
        }
    }

    /// Local index of vertex `v` within triangle `t`.
    pub fn local_index(&self, t: usize, v: usize) -> usize {
        self.tris[t]
            .iter()
            .position(|&w| w == v)
            .expect("vertex does not belong to the triangle")
    }

    /// Unit normal of edge `e` pointing out of triangle `t`.
    pub fn outward_normal(&self, t: usize, e: usize) -> [f64; 2] {
        let edge = &self.edges[e];
        if edge.tris[0] == t {
            edge.normal
        } else {
            [-edge.normal[0], -edge.normal[1]]
        }
    }

    /// Bisects the marked triangles (plus any neighbours needed to stay
    /// conforming) and returns the refined mesh.
    pub fn bisect(&self, marked: &[usize]) -> Result<TriMesh, Error> {
        self.bisect_traced(marked).map(|o| o.mesh)
    }

    /// Like [`bisect`](Self::bisect) but also reports which coarse triangle
    /// each new triangle came from.
    pub fn bisect_traced(&self, marked: &[usize]) -> Result<BisectOutcome, Error> {
        for &t in marked {
            if t >= self.tris.len() {
                return Err(Error::UnknownTriangle(t));
            }
        }
        if marked.is_empty() {
            return Ok(BisectOutcome {
                mesh: self.clone(),
                parent: (0..self.tris.len()).collect(),
            });
        }

        // Closure: once any edge of a triangle is marked, the triangle will
        // be split, so its refinement edge must be marked as well. Marking is
        // monotone, hence the fixpoint does not depend on the visit order.
        let mut edge_marked = vec![false; self.edges.len()];
        let mut queue = VecDeque::new();
        let mark = |e: usize, edge_marked: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
            if !edge_marked[e] {
                edge_marked[e] = true;
                for &s in &self.edges[e].tris {
                    if s != NO_TRI {
                        queue.push_back(s);
                    }
                }
            }
        };
        for &t in marked {
            mark(self.tri_edges[t][self.refine_edge[t]], &mut edge_marked, &mut queue);
        }
        while let Some(t) = queue.pop_front() {
            if (0..3).any(|k| edge_marked[self.tri_edges[t][k]]) {
                mark(self.tri_edges[t][self.refine_edge[t]], &mut edge_marked, &mut queue);
            }
        }

        let mut vertices = self.vertices.clone();
        let mut mid = vec![usize::MAX; self.edges.len()];
        for e in 0..self.edges.len() {
            if edge_marked[e] {
                mid[e] = vertices.len();
                vertices.push(self.edge_midpoint(e));
            }
        }

        // Canonical bisection of (v0, v1, v2) with refinement edge opposite
        // local j: with p, q the endpoints after j and r the peak, the
        // children are (p, m, r) and (m, q, r), both counterclockwise, with
        // the new vertex m opposite each child's share of the old edge. A
        // child whose inherited parent edge is also marked splits once more
        // by the same rule.
        let mut tris = Vec::with_capacity(self.tris.len() * 2);
        let mut refine = Vec::with_capacity(self.tris.len() * 2);
        let mut parent = Vec::with_capacity(self.tris.len() * 2);
        for t in 0..self.tris.len() {
            let j = self.refine_edge[t];
            if !edge_marked[self.tri_edges[t][j]] {
                tris.push(self.tris[t]);
                refine.push(j);
                parent.push(t);
                continue;
            }
            let v = self.tris[t];
            let (p, q, r) = (v[(j + 1) % 3], v[(j + 2) % 3], v[j]);
            let m = mid[self.tri_edges[t][j]];
            let e_rp = self.tri_edges[t][(j + 2) % 3];
            if edge_marked[e_rp] {
                let m2 = mid[e_rp];
                tris.push([r, m2, m]);
                refine.push(1);
                tris.push([m2, p, m]);
                refine.push(0);
                parent.extend([t, t]);
            } else {
                tris.push([p, m, r]);
                refine.push(1);
                parent.push(t);
            }
            let e_qr = self.tri_edges[t][(j + 1) % 3];
            if edge_marked[e_qr] {
                let m3 = mid[e_qr];
                tris.push([q, m3, m]);
                refine.push(1);
                tris.push([m3, r, m]);
                refine.push(0);
                parent.extend([t, t]);
            } else {
                tris.push([m, q, r]);
                refine.push(0);
                parent.push(t);
            }
        }

        let mesh = TriMesh::from_raw(vertices, tris, Some(refine))?;
        Ok(BisectOutcome { mesh, parent })
    }
}

fn longest_edge_local(vertices: &[[f64; 2]], tri: &[usize; 3]) -> usize {
    let mut best = 0;
    let mut best_len = f64::NEG_INFINITY;
    for k in 0..3 {
        let a = vertices[tri[(k + 1) % 3]];
        let b = vertices[tri[(k + 2) % 3]];
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        // Break exact ties towards the smaller opposite-vertex id so that
        // symmetric meshes refine the same way on every run.
        if len > best_len || (len == best_len && tri[k] < tri[best]) {
            best = k;
            best_len = len;
        }
    }
    best
}

/// Two- or six-triangle starting mesh for the supported domains. Rectangles
/// split along the diagonal; both triangles then share that hypotenuse as
/// refinement edge, so the first rounds of bisection stay compatible.
pub fn build_initial_mesh(domain: DomainSpec) -> Result<TriMesh, Error> {
    match domain {
        DomainSpec::Rectangle { x0, y0, x1, y1 } => {
            if !(x1 > x0 && y1 > y0) {
                return Err(Error::DegenerateDomain(format!(
                    "rectangle ({x0}, {x1}) x ({y0}, {y1}) has no interior"
                )));
            }
            let vertices = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
            let tris = vec![[0, 1, 2], [0, 2, 3]];
            TriMesh::from_raw(vertices, tris, None)
        }
        DomainSpec::Square { half } => build_initial_mesh(DomainSpec::Rectangle {
            x0: -half,
            y0: -half,
            x1: half,
            y1: half,
        }),
        DomainSpec::LShape { half } => {
            if !(half > 0.0) {
                return Err(Error::DegenerateDomain(format!(
                    "L-shape with half width {half} has no interior"
                )));
            }
            let s = half;
            let vertices = vec![
                [0.0, 0.0],
                [s, 0.0],
                [s, s],
                [0.0, s],
                [-s, s],
                [-s, 0.0],
                [-s, -s],
                [0.0, -s],
            ];
            let tris = (1..7).map(|i| [0, i, i + 1]).collect();
            TriMesh::from_raw(vertices, tris, None)
        }
    }
}

/// Smallest interior angle in the mesh, in radians. Newest-vertex bisection
/// produces only finitely many similarity classes, so this stays bounded
/// below across refinement rounds.
pub fn shape_regularity(mesh: &TriMesh) -> f64 {
    let mut min_angle = f64::INFINITY;
    for t in 0..mesh.ntri() {
        let v = mesh.tri_coords(t);
        for k in 0..3 {
            let a = v[k];
            let b = v[(k + 1) % 3];
            let c = v[(k + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let w = [c[0] - a[0], c[1] - a[1]];
            let cross = u[0] * w[1] - u[1] * w[0];
            let dot = u[0] * w[0] + u[1] * w[1];
            min_angle = min_angle.min(cross.abs().atan2(dot));
        }
    }
    min_angle
}
