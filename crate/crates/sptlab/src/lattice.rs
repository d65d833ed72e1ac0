//! Ordered-vertex triangulations of the sphere, torus and disk.
//!
//! Edges point from the larger vertex index (tail, `v⁺`) to the smaller one
//! (head, `v⁻`). Triangle corners are stored counterclockwise with respect to the
//! surface orientation. On the torus several edges may join the same pair of
//! vertices, so edges are always referred to by index.
//!
//! Torus(N, M): vertex `(i, j)` has index `i·M + j` and sits at `x = j`, `y = i`.
//! Each cell `(i, j)` owns the edges `h(i,j) = (i,j)–(i,j+1)`, `v(i,j) = (i,j)–(i+1,j)`
//! and `d(i,j) = (i,j)–(i+1,j+1)` and the triangles
//! `U(i,j) = [(i,j), (i,j+1), (i+1,j+1)]` and `L(i,j) = [(i,j), (i+1,j+1), (i+1,j)]`.
//! Corners record how often they wrap around the two cycles (`lift`), which fixes
//! where twists and seams sit.

use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Sphere,
    Torus { n: usize, m: usize },
    Disk { n: usize },
}

impl Surface {
    pub fn euler_characteristic(&self) -> i64 {
        match self {
            Surface::Sphere => 2,
            Surface::Torus { .. } => 0,
            Surface::Disk { .. } => 1,
        }
    }

    /// Parses `sphere`, `torus:N,M` or `disk:N`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Validation(format!("cannot parse lattice '{s}'"));
        if s == "sphere" {
            return Ok(Surface::Sphere);
        }
        if let Some(rest) = s.strip_prefix("torus:") {
            let parts: Vec<_> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(bad());
            }
            let n = parts[0].trim().parse().map_err(|_| bad())?;
            let m = parts[1].trim().parse().map_err(|_| bad())?;
            return Ok(Surface::Torus { n, m });
        }
        if let Some(rest) = s.strip_prefix("disk:") {
            return Ok(Surface::Disk {
                n: rest.trim().parse().map_err(|_| bad())?,
            });
        }
        Err(bad())
    }
}

impl std::fmt::Display for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Surface::Sphere => write!(f, "sphere"),
            Surface::Torus { n, m } => write!(f, "torus:{n},{m}"),
            Surface::Disk { n } => write!(f, "disk:{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Larger endpoint `v⁺`.
    pub tail: usize,
    /// Smaller endpoint `v⁻`.
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangle {
    /// Corners, counterclockwise.
    pub corners: [usize; 3],
    /// `edges[k]` joins `corners[k]` and `corners[(k+1)%3]`.
    pub edges: [usize; 3],
    /// Wrap counts `(a, b)` of each corner around the first and second cycle.
    pub lift: [(u8, u8); 3],
    /// Parity of the permutation sorting the corners by vertex index.
    pub sigma: i32,
}

impl Triangle {
    pub fn contains(&self, v: usize) -> bool {
        self.corners.contains(&v)
    }

    /// Position of `v` among the corners.
    pub fn slot(&self, v: usize) -> Option<usize> {
        self.corners.iter().position(|&c| c == v)
    }

    /// Corner slots in ascending vertex order.
    pub fn sorted_slots(&self) -> [usize; 3] {
        let mut o = [0, 1, 2];
        o.sort_by_key(|&k| self.corners[k]);
        o
    }
}

/// One step of a dual path: crossing `edge` from triangle `from` into triangle `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    /// `+1` when the edge points along the counterclockwise boundary of `from`,
    /// i.e. from the right of the path to its left.
    pub sigma: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPath {
    pub steps: Vec<Crossing>,
    pub closed: bool,
}

impl DualPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn triangles(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.steps.iter().map(|s| s.from).collect();
        if let Some(last) = self.steps.last() {
            if !self.closed {
                out.push(last.to);
            }
        }
        out
    }
}

/// A site of a symmetry MPO inserted on the virtual bond of an edge. The MPO runs
/// with triangle `b_side` on its left; that side carries the output values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpoSite {
    pub edge: usize,
    pub a_side: usize,
    pub b_side: usize,
    /// Endpoints in the order the MPO traverses them.
    pub pair: (usize, usize),
}

impl MpoSite {
    /// `+1` when the MPO runs against the edge direction.
    pub fn handedness(&self, lat: &TriLattice) -> i32 {
        if lat.edges[self.edge].head == self.pair.0 {
            1
        } else {
            -1
        }
    }
}

/// Open symmetry string along a primal edge path joining a corner of puncture `t0`
/// to a corner of puncture `t1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectString {
    pub t0: usize,
    pub t1: usize,
    /// Vertices visited, from the corner of `t0` to the corner of `t1`.
    pub path: Vec<usize>,
    pub sites: Vec<MpoSite>,
    /// `(triangle, vertex)` pairs on the left of the string: these corners see the
    /// shifted group element.
    pub shifted: Vec<(usize, usize)>,
}

impl DefectString {
    pub fn is_shifted(&self, t: usize, v: usize) -> bool {
        self.shifted.contains(&(t, v))
    }
}

#[derive(Debug, Clone)]
pub struct TriLattice {
    pub surface: Surface,
    pub num_vertices: usize,
    pub edges: Vec<Edge>,
    pub triangles: Vec<Triangle>,
    /// For each edge, the triangles containing it.
    pub edge_triangles: Vec<Vec<usize>>,
    /// Neighbor of each triangle across each of its edges.
    pub dual: Vec<[Option<usize>; 3]>,
}

fn sort_parity(v: [usize; 3]) -> i32 {
    let mut inv = 0;
    for a in 0..3 {
        for b in a + 1..3 {
            if v[a] > v[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

impl TriLattice {
    pub fn build(surface: Surface) -> Result<Self> {
        match surface {
            Surface::Sphere => Self::sphere(),
            Surface::Torus { n, m } => Self::torus(n, m),
            Surface::Disk { n } => Self::disk(n),
        }
    }

    /// Boundary of the tetrahedron.
    pub fn sphere() -> Result<Self> {
        let faces = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        for f in faces {
            let mut es = [0; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.max(b), a.min(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge { tail: key.0, head: key.1 });
                    edges.len() - 1
                });
                es[k] = id;
            }
            triangles.push(Triangle {
                corners: f,
                edges: es,
                lift: [(0, 0); 3],
                sigma: sort_parity(f),
            });
        }
        Self::finish(Surface::Sphere, 4, edges, triangles)
    }

    pub fn torus(n: usize, m: usize) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::Validation(format!(
                "torus({n},{m}) needs both dimensions at least 2 (smaller tori have self-loop edges)"
            )));
        }
        let vid = |i: usize, j: usize| (i % n) * m + (j % m);
        let mut edges = Vec::with_capacity(3 * n * m);
        for i in 0..n {
            for j in 0..m {
                for (a, b) in [(vid(i, j), vid(i, j + 1)), (vid(i, j), vid(i + 1, j)), (vid(i, j), vid(i + 1, j + 1))] {
                    edges.push(Edge {
                        tail: a.max(b),
                        head: a.min(b),
                    });
                }
            }
        }
        let eid = |i: usize, j: usize, k: usize| 3 * ((i % n) * m + (j % m)) + k;
        let mut triangles = Vec::with_capacity(2 * n * m);
        for i in 0..n {
            for j in 0..m {
                let lift = |a: usize, b: usize| ((a >= n) as u8, (b >= m) as u8);
                let up = [(i, j), (i, j + 1), (i + 1, j + 1)];
                let corners = up.map(|(a, b)| vid(a, b));
                triangles.push(Triangle {
                    corners,
                    edges: [eid(i, j, 0), eid(i, j + 1, 1), eid(i, j, 2)],
                    lift: up.map(|(a, b)| lift(a, b)),
                    sigma: sort_parity(corners),
                });
                let lo = [(i, j), (i + 1, j + 1), (i + 1, j)];
                let corners = lo.map(|(a, b)| vid(a, b));
                triangles.push(Triangle {
                    corners,
                    edges: [eid(i, j, 2), eid(i + 1, j, 0), eid(i, j, 1)],
                    lift: lo.map(|(a, b)| lift(a, b)),
                    sigma: sort_parity(corners),
                });
            }
        }
        Self::finish(Surface::Torus { n, m }, n * m, edges, triangles)
    }

    /// Square `N×N` grid of vertices, one diagonal per cell, no wrapping.
    pub fn disk(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation("disk needs at least 2×2 vertices".into()));
        }
        let vid = |i: usize, j: usize| i * n + j;
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        let mut add = |corners: [usize; 3], edges: &mut Vec<Edge>| -> Triangle {
            let mut es = [0; 3];
            for k in 0..3 {
                let (a, b) = (corners[k], corners[(k + 1) % 3]);
                let key = (a.max(b), a.min(b));
                es[k] = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge { tail: key.0, head: key.1 });
                    edges.len() - 1
                });
            }
            Triangle {
                corners,
                edges: es,
                lift: [(0, 0); 3],
                sigma: sort_parity(corners),
            }
        };
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let t = add([vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)], &mut edges);
                triangles.push(t);
                let t = add([vid(i, j), vid(i + 1, j + 1), vid(i + 1, j)], &mut edges);
                triangles.push(t);
            }
        }
        Self::finish(Surface::Disk { n }, n * n, edges, triangles)
    }

    fn finish(surface: Surface, nv: usize, edges: Vec<Edge>, triangles: Vec<Triangle>) -> Result<Self> {
        let mut edge_triangles = vec![Vec::new(); edges.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &e in &tri.edges {
                edge_triangles[e].push(t);
            }
        }
        let dual = triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| tri.edges.map(|e| edge_triangles[e].iter().copied().find(|&u| u != t)))
            .collect();
        let lat = TriLattice {
            surface,
            num_vertices: nv,
            edges,
            triangles,
            edge_triangles,
            dual,
        };
        lat.validate()?;
        Ok(lat)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self.surface, Surface::Disk { .. })
    }

    /// Direction of edge `e` inside triangle `t`: `+1` if it points along the
    /// counterclockwise boundary of `t`.
    pub fn edge_sign_in(&self, t: usize, e: usize) -> Option<i32> {
        let tri = &self.triangles[t];
        let k = tri.edges.iter().position(|&x| x == e)?;
        let (a, b) = (tri.corners[k], tri.corners[(k + 1) % 3]);
        let ed = &self.edges[e];
        Some(if ed.tail == a && ed.head == b { 1 } else { -1 })
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        for (k, e) in self.edges.iter().enumerate() {
            if e.head >= e.tail {
                return Err(Error::Validation(format!("edge {k} does not point from larger to smaller vertex")));
            }
            if e.tail >= self.num_vertices {
                return Err(Error::Validation(format!("edge {k} references a missing vertex")));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let c = tri.corners;
            if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::Validation(format!("triangle {t} has repeated vertices")));
            }
            for k in 0..3 {
                let e = self.edges[tri.edges[k]];
                let (a, b) = (c[k], c[(k + 1) % 3]);
                if !((e.tail == a && e.head == b) || (e.tail == b && e.head == a)) {
                    return Err(Error::Validation(format!("triangle {t} edge {k} has wrong endpoints")));
                }
            }
        }
        for (e, ts) in self.edge_triangles.iter().enumerate() {
            match ts.len() {
                2 => {
                    let s0 = self.edge_sign_in(ts[0], e).unwrap();
                    let s1 = self.edge_sign_in(ts[1], e).unwrap();
                    if s0 != -s1 {
                        return Err(Error::Validation(format!("edge {e} induces equal orientations")));
                    }
                }
                1 if !self.is_closed() => {}
                _ => {
                    return Err(Error::Validation(format!("edge {e} borders {} triangles", ts.len())));
                }
            }
        }
        if self.euler_characteristic() != self.surface.euler_characteristic() {
            return Err(Error::Validation(format!(
                "Euler characteristic {} does not match {}",
                self.euler_characteristic(),
                self.surface
            )));
        }
        Ok(())
    }

    fn torus_dims(&self) -> Result<(usize, usize)> {
        match self.surface {
            Surface::Torus { n, m } => Ok((n, m)),
            s => Err(Error::Validation(format!("operation needs a torus, got {s}"))),
        }
    }

    pub fn torus_vertex(&self, i: usize, j: usize) -> Result<usize> {
        let (n, m) = self.torus_dims()?;
        Ok((i % n) * m + (j % m))
    }

    fn cell_edge(&self, i: usize, j: usize, k: usize) -> usize {
        let (n, m) = self.torus_dims().unwrap();
        3 * ((i % n) * m + (j % m)) + k
    }

    fn upper(&self, i: usize, j: usize) -> usize {
        let (n, m) = self.torus_dims().unwrap();
        2 * ((i % n) * m + (j % m))
    }

    fn lower(&self, i: usize, j: usize) -> usize {
        self.upper(i, j) + 1
    }

    fn step(&self, from: usize, to: usize, edge: usize) -> Crossing {
        Crossing {
            edge,
            from,
            to,
            sigma: self.edge_sign_in(from, edge).unwrap(),
        }
    }

    /// The two non-contractible dual cycles used as twist seams.
    ///
    /// `p_x` runs through cell row `N−1` and crosses the edges joining row `N−1` to
    /// row 0; `p_y` runs through cell column `M−1` and crosses the edges joining
    /// column `M−1` to column 0. They share the cell `(N−1, M−1)`.
    pub fn dual_cycles(&self) -> Result<(DualPath, DualPath)> {
        let (n, m) = self.torus_dims()?;
        let i = n - 1;
        let mut px = Vec::new();
        for j in 0..m {
            // U(i,j-1) -> L(i,j) across v(i,j); L(i,j) -> U(i,j) across d(i,j).
            px.push(self.step(self.upper(i, j + m - 1), self.lower(i, j), self.cell_edge(i, j, 1)));
            px.push(self.step(self.lower(i, j), self.upper(i, j), self.cell_edge(i, j, 2)));
        }
        let j = m - 1;
        let mut py = Vec::new();
        for i in 0..n {
            // L(i-1,j) -> U(i,j) across h(i,j); U(i,j) -> L(i,j) across d(i,j).
            py.push(self.step(self.lower(i + n - 1, j), self.upper(i, j), self.cell_edge(i, j, 0)));
            py.push(self.step(self.upper(i, j), self.lower(i, j), self.cell_edge(i, j, 2)));
        }
        Ok((DualPath { steps: px, closed: true }, DualPath { steps: py, closed: true }))
    }

    /// Insertion sites of the twist MPOs: `V(x)` on the row-0 horizontal edges and
    /// `V(y)` on the column-0 vertical edges. The output side of each is the wrapped
    /// side (cell row `N−1`, cell column `M−1`).
    pub fn mpo_loops(&self) -> Result<(Vec<MpoSite>, Vec<MpoSite>)> {
        let (n, m) = self.torus_dims()?;
        let mut cx = Vec::new();
        for j in (0..m).rev() {
            cx.push(MpoSite {
                edge: self.cell_edge(0, j, 0),
                a_side: self.upper(0, j),
                b_side: self.lower(n - 1, j),
                pair: (self.torus_vertex(0, j + 1)?, self.torus_vertex(0, j)?),
            });
        }
        let mut cy = Vec::new();
        for i in 0..n {
            cy.push(MpoSite {
                edge: self.cell_edge(i, 0, 1),
                a_side: self.lower(i, 0),
                b_side: self.upper(i, m - 1),
                pair: (self.torus_vertex(i, 0)?, self.torus_vertex(i + 1, 0)?),
            });
        }
        Ok((cx, cy))
    }

    /// Number of separate stretches two closed dual paths share.
    pub fn intersection_count(&self, p: &DualPath, q: &DualPath) -> usize {
        let tq: std::collections::HashSet<usize> = q.triangles().into_iter().collect();
        let tp = p.triangles();
        let k = tp.len();
        if k == 0 {
            return 0;
        }
        let inside: Vec<bool> = tp.iter().map(|t| tq.contains(t)).collect();
        if inside.iter().all(|&b| b) {
            return 1;
        }
        (0..k).filter(|&a| inside[a] && !inside[(a + k - 1) % k]).count()
    }

    /// Boundary word of a triangle: edges visited against its orientation starting
    /// from the smallest vertex, each with `+1` if the edge points along the
    /// orientation of the triangle.
    pub fn plaquette_word(&self, t: usize) -> Vec<(usize, i32)> {
        self.plaquette_word_oriented(t, 1)
    }

    /// As [`plaquette_word`](Self::plaquette_word) for the triangle taken with
    /// orientation `orientation` (`-1` reverses it).
    pub fn plaquette_word_oriented(&self, t: usize, orientation: i32) -> Vec<(usize, i32)> {
        let tri = &self.triangles[t];
        let start = (0..3).min_by_key(|&k| tri.corners[k]).unwrap();
        // Against the counterclockwise order: corner k is followed by corner k-1,
        // through edges[k-1].
        let mut out = Vec::with_capacity(3);
        let mut k = start;
        for _ in 0..3 {
            let (next, e) = if orientation > 0 {
                ((k + 2) % 3, tri.edges[(k + 2) % 3])
            } else {
                ((k + 1) % 3, tri.edges[k])
            };
            let s = self.edge_sign_in(t, e).unwrap() * orientation;
            out.push((e, s));
            k = next;
        }
        out
    }

    /// Edges incident to `v`.
    pub fn star_edges(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].tail == v || self.edges[e].head == v)
            .collect()
    }

    /// Triangles containing `v`.
    pub fn star_triangles(&self, v: usize) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&t| self.triangles[t].contains(v)).collect()
    }

    fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.tail == a && e.head == b) || (e.tail == b && e.head == a))
    }

    /// Triangle containing the directed edge `a → b` counterclockwise.
    fn left_of(&self, e: usize, a: usize, b: usize) -> Option<usize> {
        self.edge_triangles[e].iter().copied().find(|&t| {
            let tri = &self.triangles[t];
            let k = tri.slot(a).unwrap();
            tri.corners[(k + 1) % 3] == b
        })
    }

    /// Neighbor of `t` around its corner `v`: across the edge entering `v`
    /// (`clockwise`) or the edge leaving `v`.
    fn rotate(&self, t: usize, v: usize, clockwise: bool) -> Option<usize> {
        let k = self.triangles[t].slot(v)?;
        let slot = if clockwise { (k + 2) % 3 } else { k };
        self.dual[t][slot]
    }

    /// Defect string between two vertex-disjoint punctures on a closed surface,
    /// along a shortest edge path that avoids both punctures except at its ends.
    pub fn defect_string(&self, t0: usize, t1: usize) -> Result<DefectString> {
        let nt = self.triangles.len();
        if t0 >= nt || t1 >= nt || t0 == t1 {
            return Err(Error::Validation("punctures must be two distinct triangles".into()));
        }
        if !self.is_closed() {
            return Err(Error::Validation("defect strings need a closed surface".into()));
        }
        let c0 = self.triangles[t0].corners;
        let c1 = self.triangles[t1].corners;
        if c0.iter().any(|v| c1.contains(v)) {
            return Err(Error::Validation("punctures share a vertex".into()));
        }
        let blocked = |e: usize| self.triangles[t0].edges.contains(&e) || self.triangles[t1].edges.contains(&e);
        let mut prev: Vec<Option<usize>> = vec![None; self.num_vertices];
        let mut seen = vec![false; self.num_vertices];
        let mut q = VecDeque::new();
        for &v in &c0 {
            seen[v] = true;
            q.push_back(v);
        }
        let mut end = None;
        while let Some(v) = q.pop_front() {
            if c1.contains(&v) {
                end = Some(v);
                break;
            }
            let mut nbrs: Vec<(usize, usize)> = self
                .star_edges(v)
                .into_iter()
                .filter(|&e| !blocked(e))
                .map(|e| {
                    let ed = self.edges[e];
                    (if ed.tail == v { ed.head } else { ed.tail }, e)
                })
                .collect();
            nbrs.sort();
            for (u, _) in nbrs {
                if !seen[u] && !c0.contains(&u) {
                    seen[u] = true;
                    prev[u] = Some(v);
                    q.push_back(u);
                }
            }
        }
        let end = end.ok_or_else(|| Error::Validation("punctures are not joined by an admissible path".into()))?;
        let mut path = vec![end];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        let len = path.len();
        let mut sites = Vec::with_capacity(len - 1);
        for w in path.windows(2) {
            let e = self.edge_between(w[0], w[1]).unwrap();
            let b_side = self.left_of(e, w[0], w[1]).unwrap();
            let a_side = self.left_of(e, w[1], w[0]).unwrap();
            sites.push(MpoSite {
                edge: e,
                a_side,
                b_side,
                pair: (w[0], w[1]),
            });
        }
        let mut shifted = Vec::new();
        for (i, &v) in path.iter().enumerate() {
            let (start, clockwise, stop_tri) = if i + 1 < len {
                (sites[i].b_side, true, if i == 0 { Some(t0) } else { None })
            } else {
                (sites[i - 1].b_side, false, Some(t1))
            };
            let stop_edge = if i > 0 && i + 1 < len { Some(sites[i - 1].edge) } else { None };
            let mut t = start;
            for _ in 0..nt {
                shifted.push((t, v));
                let k = self.triangles[t].slot(v).unwrap();
                let exit = self.triangles[t].edges[if clockwise { (k + 2) % 3 } else { k }];
                if Some(exit) == stop_edge {
                    break;
                }
                let next = self.rotate(t, v, clockwise).unwrap();
                if Some(next) == stop_tri {
                    break;
                }
                t = next;
            }
        }
        Ok(DefectString {
            t0,
            t1,
            path,
            sites,
            shifted,
        })
    }

    /// Shortest dual path between two triangles (breadth first, lowest indices first).
    pub fn dual_path_between(&self, from: usize, to: usize) -> Result<DualPath> {
        let nt = self.triangles.len();
        if from >= nt || to >= nt {
            return Err(Error::Validation("triangle index out of range".into()));
        }
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nt];
        let mut seen = vec![false; nt];
        seen[from] = true;
        let mut q = VecDeque::from([from]);
        while let Some(t) = q.pop_front() {
            if t == to {
                break;
            }
            for k in 0..3 {
                if let Some(u) = self.dual[t][k] {
                    if !seen[u] {
                        seen[u] = true;
                        prev[u] = Some((t, self.triangles[t].edges[k]));
                        q.push_back(u);
                    }
                }
            }
        }
        if !seen[to] {
            return Err(Error::Validation("triangles are not connected".into()));
        }
        let mut steps = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, e) = prev[cur].unwrap();
            steps.push(self.step(p, cur, e));
            cur = p;
        }
        steps.reverse();
        Ok(DualPath { steps, closed: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let s = TriLattice::sphere().unwrap();
        assert_eq!((s.num_vertices, s.num_edges(), s.num_triangles()), (4, 6, 4));
        let t = TriLattice::torus(2, 2).unwrap();
        assert_eq!((t.num_vertices, t.num_edges(), t.num_triangles()), (4, 12, 8));
        assert_eq!(t.euler_characteristic(), 0);
        assert!(TriLattice::torus(1, 2).is_err());
        let d = TriLattice::disk(3).unwrap();
        assert_eq!(d.euler_characteristic(), 1);
    }

    #[test]
    fn words_cancel_pairwise() {
        let t = TriLattice::torus(2, 2).unwrap();
        let mut total = vec![0i32; t.num_edges()];
        let mut count = vec![0usize; t.num_edges()];
        for k in 0..t.num_triangles() {
            let w = t.plaquette_word(k);
            assert_eq!(w.len(), 3);
            for (e, s) in w {
                total[e] += s;
                count[e] += 1;
            }
        }
        assert!(total.iter().all(|&s| s == 0));
        assert!(count.iter().all(|&c| c == 2));
    }

    #[test]
    fn reversed_word_negates() {
        let t = TriLattice::sphere().unwrap();
        let w = t.plaquette_word(0);
        let r = t.plaquette_word_oriented(0, -1);
        let sw: HashMap<usize, i32> = w.into_iter().collect();
        for (e, s) in r {
            assert_eq!(sw[&e], -s);
        }
    }

    #[test]
    fn dual_cycles_cross_once() {
        let t = TriLattice::torus(3, 2).unwrap();
        let (px, py) = t.dual_cycles().unwrap();
        assert_eq!(px.len(), 4);
        assert_eq!(py.len(), 6);
        for p in [&px, &py] {
            let k = p.len();
            for a in 0..k {
                assert_eq!(p.steps[a].to, p.steps[(a + 1) % k].from);
            }
        }
        assert_eq!(t.intersection_count(&px, &py), 1);
        assert!(TriLattice::sphere().unwrap().dual_cycles().is_err());
    }

    #[test]
    fn mpo_loop_pairs_chain() {
        let t = TriLattice::torus(2, 3).unwrap();
        let (cx, cy) = t.mpo_loops().unwrap();
        for l in [&cx, &cy] {
            let k = l.len();
            for a in 0..k {
                assert_eq!(l[a].pair.1, l[(a + 1) % k].pair.0);
                let e = t.edges[l[a].edge];
                assert!(e.tail == l[a].pair.0 || e.head == l[a].pair.0);
            }
        }
    }
}
