//! Thin ε-neighborhoods of planar embedded graphs: mesh construction,
//! 2D Neumann P1 assembly, embedding-regularity checks, and the pullback
//! metric of a curved tube together with its perturbation constants.

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::graph::{DensitySpec, MetricGraph, Vertex, EdgeRecord, EmbeddingJson};
use nalgebra::{DMatrix, Matrix2, Vector2};
use std::collections::HashMap;

fn rot90(u: [f64; 2]) -> [f64; 2] {
    [-u[1], u[0]]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn axpy(a: [f64; 2], t: f64, d: [f64; 2]) -> [f64; 2] {
    [a[0] + t * d[0], a[1] + t * d[1]]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

// ---------------------------------------------------------------------------
// Embedded graph
// ---------------------------------------------------------------------------

/// One edge of a planar embedded graph: an arclength-parameterized polyline
/// (two points = straight segment) with a cross-section radius profile.
#[derive(Debug, Clone)]
pub struct EmbeddedEdge {
    pub id: u64,
    pub tail: u64,
    pub head: u64,
    pub length: f64,
    pub points: Vec<[f64; 2]>,
    pub radius: DensitySpec,
}

impl EmbeddedEdge {
    pub fn is_straight(&self) -> bool {
        self.points.len() == 2
    }

    fn cumlen(&self) -> Vec<f64> {
        let mut c = vec![0.0];
        for w in self.points.windows(2) {
            c.push(c.last().unwrap() + norm(sub(w[1], w[0])));
        }
        c
    }

    /// Unit tangent at arclength x (piecewise constant on polyline segments).
    pub fn tangent(&self, x: f64) -> [f64; 2] {
        let c = self.cumlen();
        let i = match c.iter().position(|&s| s > x) {
            Some(i) => i.max(1) - 1,
            None => self.points.len() - 2,
        };
        let d = sub(self.points[i + 1], self.points[i]);
        let n = norm(d);
        [d[0] / n, d[1] / n]
    }

    /// Signed curvature at arclength x via polyline turning angles,
    /// linearly interpolated between interior polyline vertices.
    pub fn curvature(&self, x: f64) -> f64 {
        let np = self.points.len();
        if np == 2 {
            return 0.0;
        }
        let c = self.cumlen();
        // κ at interior polyline vertex i
        let kappa = |i: usize| -> f64 {
            let d0 = sub(self.points[i], self.points[i - 1]);
            let d1 = sub(self.points[i + 1], self.points[i]);
            let cross = d0[0] * d1[1] - d0[1] * d1[0];
            let theta = cross.atan2(dot(d0, d1));
            theta / (0.5 * (norm(d0) + norm(d1)))
        };
        if x <= c[1] {
            return kappa(1);
        }
        if x >= c[np - 2] {
            return kappa(np - 2);
        }
        for i in 1..np - 2 {
            if x <= c[i + 1] {
                let t = (x - c[i]) / (c[i + 1] - c[i]);
                return (1.0 - t) * kappa(i) + t * kappa(i + 1);
            }
        }
        kappa(np - 2)
    }

    /// dr/dx by central difference (exact enough for the sampled profiles).
    pub fn radius_slope(&self, x: f64) -> f64 {
        let h = 1e-6 * self.length.max(1.0);
        let a = (x - h).max(0.0);
        let b = (x + h).min(self.length);
        (self.radius.eval(b) - self.radius.eval(a)) / (b - a)
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddedGraph {
    pub vertex_ids: Vec<u64>,
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<EmbeddedEdge>,
}

impl EmbeddedGraph {
    /// Straight-segment embedding from vertex positions; the edge radius is
    /// the metric-graph density (1D cross-section, p_e = r_e).
    pub fn from_metric(g: &MetricGraph) -> Result<Self> {
        let mut vertex_ids = vec![];
        let mut positions = vec![];
        for v in &g.vertices {
            let pos = v.pos.ok_or_else(|| {
                Error::GraphFormat { field: "vertices".into(), msg: format!("vertex {} has no position", v.id) }
            })?;
            vertex_ids.push(v.id);
            positions.push(pos);
        }
        let mut edges = vec![];
        for e in &g.edges {
            let pa = positions[g.vertex_index(e.tail)?];
            let pb = positions[g.vertex_index(e.head)?];
            let chord = norm(sub(pb, pa));
            if (chord - e.length).abs() > 1e-6 {
                return Err(Error::GraphFormat {
                    field: "edges".into(),
                    msg: format!("edge {}: declared length {} vs chord {}", e.id, e.length, chord),
                });
            }
            edges.push(EmbeddedEdge {
                id: e.id,
                tail: e.tail,
                head: e.head,
                length: e.length,
                points: vec![pa, pb],
                radius: e.density.clone(),
            });
        }
        Ok(EmbeddedGraph { vertex_ids, positions, edges })
    }

    /// Embedding with explicit polyline curves; curves must run from the
    /// tail position to the head position and have matching arclength.
    pub fn from_metric_with_curves(g: &MetricGraph, emb: &EmbeddingJson) -> Result<Self> {
        let mut eg = Self::from_metric_positions_only(g)?;
        for e in eg.edges.iter_mut() {
            if let Some(c) = emb.curves.iter().find(|c| c.edge == e.id) {
                if c.points.len() < 2 {
                    return Err(Error::GraphFormat { field: "embedding".into(), msg: format!("edge {}: curve needs ≥ 2 points", e.id) });
                }
                let arclen: f64 = c.points.windows(2).map(|w| norm(sub(w[1], w[0]))).sum();
                if (arclen - e.length).abs() > 1e-6 {
                    return Err(Error::GraphFormat {
                        field: "embedding".into(),
                        msg: format!("edge {}: curve arclength {} vs declared {}", e.id, arclen, e.length),
                    });
                }
                e.points = c.points.clone();
            } else if !e.is_straight() || (norm(sub(e.points[1], e.points[0])) - e.length).abs() > 1e-6 {
                return Err(Error::GraphFormat { field: "embedding".into(), msg: format!("edge {}: no curve and chord ≠ length", e.id) });
            }
        }
        Ok(eg)
    }

    fn from_metric_positions_only(g: &MetricGraph) -> Result<Self> {
        let mut vertex_ids = vec![];
        let mut positions = vec![];
        for v in &g.vertices {
            let pos = v.pos.ok_or_else(|| {
                Error::GraphFormat { field: "vertices".into(), msg: format!("vertex {} has no position", v.id) }
            })?;
            vertex_ids.push(v.id);
            positions.push(pos);
        }
        let edges = g
            .edges
            .iter()
            .map(|e| {
                let pa = positions[vertex_ids.iter().position(|&i| i == e.tail).unwrap()];
                let pb = positions[vertex_ids.iter().position(|&i| i == e.head).unwrap()];
                EmbeddedEdge {
                    id: e.id,
                    tail: e.tail,
                    head: e.head,
                    length: e.length,
                    points: vec![pa, pb],
                    radius: e.density.clone(),
                }
            })
            .collect();
        Ok(EmbeddedGraph { vertex_ids, positions, edges })
    }

    pub fn vertex_index(&self, id: u64) -> Result<usize> {
        self.vertex_ids.iter().position(|&v| v == id).ok_or(Error::UnknownVertex(id))
    }

    /// The metric graph this embedding shrinks to (density = radius).
    pub fn to_metric(&self) -> Result<MetricGraph> {
        MetricGraph::new(
            self.vertex_ids
                .iter()
                .zip(&self.positions)
                .map(|(&id, &p)| Vertex { id, pos: Some(p) })
                .collect(),
            self.edges
                .iter()
                .map(|e| EdgeRecord { id: e.id, tail: e.tail, head: e.head, length: e.length, density: e.radius.clone() })
                .collect(),
        )
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// Embedding regularity report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct EmbeddingBounds {
    pub beta0: f64,
    pub kappa0: f64,
    pub ell0: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub rdot0: f64,
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub min_angle: f64,
    pub max_curvature: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub max_radius_slope: f64,
    pub min_length: f64,
    /// angles ≥ β₀ and tan(β₀/2) > r₊/ℓ₀
    pub angle_ok: bool,
    pub curvature_ok: bool,
    pub radius_ok: bool,
    pub radius_slope_ok: bool,
    pub length_ok: bool,
}

impl EmbeddingReport {
    pub fn all_ok(&self) -> bool {
        self.angle_ok && self.curvature_ok && self.radius_ok && self.radius_slope_ok && self.length_ok
    }
}

/// Check the uniform-geometry conditions of the embedding against declared
/// bounds: minimal angle between incident edges (with the wedge-fitting
/// inequality tan(β₀/2) > r₊/ℓ₀), curvature, radius range and slope, and
/// edge lengths ≥ ℓ₀.
pub fn check_embedding(eg: &EmbeddedGraph, bounds: &EmbeddingBounds) -> EmbeddingReport {
    let nsamp = 64;
    let mut min_angle = f64::INFINITY;
    let mut max_curv = 0.0f64;
    let mut min_r = f64::INFINITY;
    let mut max_r = 0.0f64;
    let mut max_rdot = 0.0f64;
    let mut min_len = f64::INFINITY;
    for e in &eg.edges {
        min_len = min_len.min(e.length);
        for i in 0..=nsamp {
            let x = e.length * i as f64 / nsamp as f64;
            max_curv = max_curv.max(e.curvature(x).abs());
            let r = e.radius.eval(x);
            min_r = min_r.min(r);
            max_r = max_r.max(r);
            max_rdot = max_rdot.max(e.radius_slope(x).abs());
        }
    }
    for (vi, &vid) in eg.vertex_ids.iter().enumerate() {
        let _ = vi;
        let mut dirs = vec![];
        for e in &eg.edges {
            if e.tail == vid {
                dirs.push(e.tangent(0.0));
            }
            if e.head == vid {
                let t = e.tangent(e.length);
                dirs.push([-t[0], -t[1]]);
            }
        }
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let ang = dot(dirs[i], dirs[j]).clamp(-1.0, 1.0).acos();
                min_angle = min_angle.min(ang);
            }
        }
    }
    EmbeddingReport {
        min_angle,
        max_curvature: max_curv,
        min_radius: min_r,
        max_radius: max_r,
        max_radius_slope: max_rdot,
        min_length: min_len,
        angle_ok: min_angle >= bounds.beta0 - 1e-12 && (bounds.beta0 / 2.0).tan() > bounds.r_plus / bounds.ell0,
        curvature_ok: max_curv <= bounds.kappa0 + 1e-12,
        radius_ok: min_r >= bounds.r_minus - 1e-12 && max_r <= bounds.r_plus + 1e-12,
        radius_slope_ok: max_rdot <= bounds.rdot0 + 1e-12,
        length_ok: min_len >= bounds.ell0 - 1e-12,
    }
}

// ---------------------------------------------------------------------------
// Thin mesh
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    /// tube strip of edge index k (over the shortened interval)
    Edge(usize),
    /// polygon around vertex index vi
    Vertex(usize),
    /// collar strip of the vertex region adjacent to edge k's tube end
    Collar { vertex: usize, edge: usize },
    /// degree-1 end cap of edge k
    Cap { edge: usize, at_head: bool },
}

impl RegionTag {
    /// vertex index if this triangle belongs to a vertex region (collars
    /// included)
    pub fn vertex_region(self) -> Option<usize> {
        match self {
            RegionTag::Vertex(v) | RegionTag::Collar { vertex: v, .. } => Some(v),
            _ => None,
        }
    }
}

/// Node ids of the transversal mesh columns of one edge strip, with their
/// arclength positions. Column node lists run across the width in a fixed
/// orientation; xs[0] = εℓ₀/2 and xs[last] = ℓ − εℓ₀/2.
#[derive(Debug, Clone, Default)]
pub struct EdgeColumns {
    pub xs: Vec<f64>,
    pub cols: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ThinMesh {
    pub nodes: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    pub tags: Vec<RegionTag>,
    pub eps: f64,
    pub ell0: f64,
    /// edge shortening at each end: εℓ₀/2
    pub offset: f64,
    pub h_rel: usize,
    pub edge_columns: Vec<EdgeColumns>,
}

impl ThinMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])).abs()
    }

    pub fn region_area(&self, pred: impl Fn(RegionTag) -> bool) -> f64 {
        (0..self.tris.len()).filter(|&t| pred(self.tags[t])).map(|t| self.triangle_area(t)).sum()
    }

    /// Plain text export: one `x y` line per node, a blank line, then one
    /// `i j k tag` line per triangle.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for p in &self.nodes {
            out.push_str(&format!("{:.12e} {:.12e}\n", p[0], p[1]));
        }
        out.push('\n');
        for (t, tag) in self.tris.iter().zip(&self.tags) {
            let label = match *tag {
                RegionTag::Edge(k) => format!("e{k}"),
                RegionTag::Vertex(v) => format!("v{v}"),
                RegionTag::Collar { vertex, edge } => format!("co{vertex}:{edge}"),
                RegionTag::Cap { edge, at_head } => format!("cap{edge}{}", if at_head { "h" } else { "t" }),
            };
            out.push_str(&format!("{} {} {} {}\n", t[0], t[1], t[2], label));
        }
        out
    }

    /// Nodal values sampled to CSV (x, y, value).
    pub fn sample_csv(&self, values: &[f64]) -> String {
        let mut out = String::from("x,y,value\n");
        for (p, v) in self.nodes.iter().zip(values) {
            out.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", p[0], p[1], v));
        }
        out
    }
}

struct MeshBuilder {
    nodes: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    tags: Vec<RegionTag>,
    lookup: HashMap<(i64, i64), usize>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder { nodes: vec![], tris: vec![], tags: vec![], lookup: HashMap::new() }
    }

    fn node(&mut self, p: [f64; 2]) -> usize {
        let key = ((p[0] * 1e10).round() as i64, (p[1] * 1e10).round() as i64);
        if let Some(&i) = self.lookup.get(&key) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(p);
        self.lookup.insert(key, i);
        i
    }

    fn tri(&mut self, a: usize, b: usize, c: usize, tag: RegionTag) {
        self.tris.push([a, b, c]);
        self.tags.push(tag);
    }
}

/// Column positions from x0 to x1 with target spacing hx and a thin layer
/// of width t at both ends.
fn graded_xgrid(x0: f64, x1: f64, hx: f64, t: f64) -> Vec<f64> {
    let (inner0, inner1) = (x0 + t, x1 - t);
    if inner1 - inner0 <= 0.0 {
        return vec![x0, 0.5 * (x0 + x1), x1];
    }
    let n = ((inner1 - inner0) / hx).ceil().max(1.0) as usize;
    let mut xs = vec![x0];
    for i in 0..=n {
        xs.push(inner0 + (inner1 - inner0) * i as f64 / n as f64);
    }
    xs.push(x1);
    xs
}

const ASPECT: f64 = 2.0;
const C_LAYER: f64 = 2.0;

/// Triangulate the ε-neighborhood of a straight-edge embedded graph:
/// structured strips of width ε·r_e over the shortened edges, bisector
/// polygons around vertices of degree ≥ 2 (fan-triangulated in concentric
/// rings, with a thin outermost ring so the interface layer shrinks with
/// ε), and end caps of depth εℓ₀/2 at degree-1 vertices (with a thin
/// column against the strip for the same reason). h_rel = cells across
/// the width.
pub fn build_thin_mesh(eg: &EmbeddedGraph, eps: f64, h_rel: usize) -> Result<ThinMesh> {
    if eps <= 0.0 {
        return Err(Error::InvalidParam("ε must be > 0".into()));
    }
    if h_rel < 2 {
        return Err(Error::InvalidParam("h_rel must be ≥ 2".into()));
    }
    for e in &eg.edges {
        if !e.is_straight() {
            return Err(Error::Unsupported(format!("edge {} is curved; meshing needs straight edges", e.id)));
        }
    }
    let ell0 = eg.min_edge_length().min(1.0);
    let d = eps * ell0 / 2.0;
    let mut mb = MeshBuilder::new();
    let mut edge_columns = vec![EdgeColumns::default(); eg.edges.len()];

    // edge strips
    for (k, e) in eg.edges.iter().enumerate() {
        if e.length - 2.0 * d <= 0.0 {
            return Err(Error::RegionOverlap(e.length - 2.0 * d));
        }
        let a = e.points[0];
        let u = e.tangent(0.0);
        let n = rot90(u);
        let r_mid = e.radius.eval(e.length / 2.0);
        let hy = eps * r_mid / h_rel as f64;
        let hx = ASPECT * hy;
        let nseg = ((e.length - 2.0 * d) / hx).ceil().max(1.0) as usize;
        let xs: Vec<f64> = (0..=nseg).map(|i| d + (e.length - 2.0 * d) * i as f64 / nseg as f64).collect();
        let mut cols = Vec::with_capacity(xs.len());
        for &x in &xs {
            let w = eps * e.radius.eval(x) / 2.0;
            let col: Vec<usize> = (0..=h_rel)
                .map(|j| {
                    let yf = j as f64 / h_rel as f64 - 0.5;
                    mb.node(axpy(axpy(a, x, u), 2.0 * w * yf, n))
                })
                .collect();
            cols.push(col);
        }
        for i in 0..xs.len() - 1 {
            for j in 0..h_rel {
                let (na, nb, nc, nd) = (cols[i][j], cols[i + 1][j], cols[i + 1][j + 1], cols[i][j + 1]);
                mb.tri(na, nb, nc, RegionTag::Edge(k));
                mb.tri(na, nc, nd, RegionTag::Edge(k));
            }
        }
        edge_columns[k] = EdgeColumns { xs, cols };
    }

    // vertex regions and caps
    struct Half {
        edge: usize,
        u: [f64; 2],
        w: f64,
        at_head: bool,
    }
    for (vi, &vid) in eg.vertex_ids.iter().enumerate() {
        let vpos = eg.positions[vi];
        let mut halves = vec![];
        for (k, e) in eg.edges.iter().enumerate() {
            if e.tail == vid {
                halves.push(Half { edge: k, u: e.tangent(0.0), w: eps * e.radius.eval(0.0) / 2.0, at_head: false });
            }
            if e.head == vid {
                let t = e.tangent(e.length);
                halves.push(Half { edge: k, u: [-t[0], -t[1]], w: eps * e.radius.eval(e.length) / 2.0, at_head: true });
            }
        }
        match halves.len() {
            0 => continue,
            1 => {
                // degree-1 cap: extend the strip to the vertex, thin column
                // against the strip interface
                let h = &halves[0];
                let e = &eg.edges[h.edge];
                let r_end = 2.0 * h.w / eps;
                let hy = eps * r_end / h_rel as f64;
                let hx = ASPECT * hy;
                let t_thin = C_LAYER * eps * hy;
                let (x0, x1) = if h.at_head { (e.length - d, e.length) } else { (0.0, d) };
                let mut xs = graded_xgrid(x0, x1, hx, t_thin);
                // keep the thin column only on the strip side; merge the
                // other one into its neighbor
                if h.at_head {
                    let m = xs.len();
                    xs.remove(m - 2);
                } else {
                    xs.remove(1);
                }
                let a = e.points[0];
                let u = e.tangent(0.0);
                let n = rot90(u);
                let ids: Vec<Vec<usize>> = xs
                    .iter()
                    .map(|&x| {
                        let w = eps * e.radius.eval(x.clamp(0.0, e.length)) / 2.0;
                        (0..=h_rel)
                            .map(|j| {
                                let yf = j as f64 / h_rel as f64 - 0.5;
                                mb.node(axpy(axpy(a, x, u), 2.0 * w * yf, n))
                            })
                            .collect()
                    })
                    .collect();
                let tag = RegionTag::Cap { edge: h.edge, at_head: h.at_head };
                for i in 0..xs.len() - 1 {
                    for j in 0..h_rel {
                        let (na, nb, nc, nd) = (ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]);
                        mb.tri(na, nb, nc, tag);
                        mb.tri(na, nc, nd, tag);
                    }
                }
            }
            _ => {
                halves.sort_by(|a, b| {
                    a.u[1].atan2(a.u[0]).partial_cmp(&b.u[1].atan2(b.u[0])).unwrap()
                });
                // boundary polyline: strip-end cross lines joined by the
                // wedge corner between consecutive edges
                let mut ring: Vec<[f64; 2]> = vec![];
                let push = |ring: &mut Vec<[f64; 2]>, p: [f64; 2]| {
                    if ring.last().map_or(true, |q| norm(sub(p, *q)) > 1e-12) {
                        ring.push(p);
                    }
                };
                for (i, h) in halves.iter().enumerate() {
                    let hn = &halves[(i + 1) % halves.len()];
                    let n = rot90(h.u);
                    let nn = rot90(hn.u);
                    let c_r = axpy(axpy(vpos, d, h.u), -h.w, n);
                    let c_l = axpy(axpy(vpos, d, h.u), h.w, n);
                    for j in 0..h_rel {
                        let t = j as f64 / h_rel as f64;
                        push(&mut ring, axpy(c_r, t * 2.0 * h.w, n));
                    }
                    push(&mut ring, c_l);
                    // corner: left boundary of h meets right boundary of hn
                    let det = h.u[0] * (-hn.u[1]) - h.u[1] * (-hn.u[0]);
                    let rhs = [-h.w * n[0] - hn.w * nn[0], -h.w * n[1] - hn.w * nn[1]];
                    if det.abs() < 1e-9 {
                        // collinear degree-2 junction: flat joint
                        let c_rn = axpy(axpy(vpos, d, hn.u), -hn.w, rot90(hn.u));
                        push(&mut ring, [(c_l[0] + c_rn[0]) / 2.0, (c_l[1] + c_rn[1]) / 2.0]);
                    } else {
                        let s0 = (rhs[0] * (-hn.u[1]) - rhs[1] * (-hn.u[0])) / det;
                        if s0 <= 0.0 || s0 >= d {
                            return Err(Error::RegionOverlap(s0));
                        }
                        push(&mut ring, axpy(axpy(vpos, s0, h.u), h.w, n));
                    }
                }
                if norm(sub(ring[0], *ring.last().unwrap())) < 1e-12 {
                    ring.pop();
                }
                let meand = ring.iter().map(|p| norm(sub(*p, vpos))).sum::<f64>() / ring.len() as f64;
                let w_mean = halves.iter().map(|h| h.w).sum::<f64>() / halves.len() as f64;
                let hy = 2.0 * w_mean / h_rel as f64;
                let nr = ((meand / hy).round() as usize).max(1);
                let mut tv: Vec<f64> = (1..=nr).map(|s| s as f64 / nr as f64).collect();
                let t_thin = C_LAYER * eps * hy;
                if t_thin / meand > 0.0 && t_thin / meand < 1.0 / nr as f64 {
                    tv.pop();
                    tv.push(1.0 - t_thin / meand);
                    tv.push(1.0);
                }
                let rings: Vec<Vec<usize>> = tv
                    .iter()
                    .map(|&s| ring.iter().map(|p| mb.node(axpy(vpos, s, sub(*p, vpos)))).collect())
                    .collect();
                let cid = mb.node(vpos);
                let nb = ring.len();
                for j in 0..nb {
                    mb.tri(cid, rings[0][j], rings[0][(j + 1) % nb], RegionTag::Vertex(vi));
                }
                for s in 0..rings.len() - 1 {
                    for j in 0..nb {
                        let (a, b) = (rings[s][j], rings[s][(j + 1) % nb]);
                        let (c, dd) = (rings[s + 1][j], rings[s + 1][(j + 1) % nb]);
                        mb.tri(a, c, dd, RegionTag::Vertex(vi));
                        mb.tri(a, dd, b, RegionTag::Vertex(vi));
                    }
                }
                // tag the collar strip behind each tube end
                let beta_v = halves
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        let hn = &halves[(i + 1) % halves.len()];
                        dot(h.u, hn.u).clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min);
                let r_plus_v = halves.iter().map(|h| 2.0 * h.w / eps).fold(0.0f64, f64::max);
                let ell_minus = 0.5 * (ell0 - r_plus_v / (beta_v / 2.0).tan());
                if ell_minus > 0.0 {
                    for t in 0..mb.tris.len() {
                        if mb.tags[t] != RegionTag::Vertex(vi) {
                            continue;
                        }
                        let [ta, tb, tc] = mb.tris[t];
                        let c = [
                            (mb.nodes[ta][0] + mb.nodes[tb][0] + mb.nodes[tc][0]) / 3.0,
                            (mb.nodes[ta][1] + mb.nodes[tb][1] + mb.nodes[tc][1]) / 3.0,
                        ];
                        let rel = sub(c, vpos);
                        for h in &halves {
                            let xi = dot(rel, h.u);
                            let eta = dot(rel, rot90(h.u));
                            if xi >= d - eps * ell_minus && xi <= d + 1e-12 && eta.abs() <= h.w + 1e-12 {
                                mb.tags[t] = RegionTag::Collar { vertex: vi, edge: h.edge };
                                break;
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(ThinMesh {
        nodes: mb.nodes,
        tris: mb.tris,
        tags: mb.tags,
        eps,
        ell0,
        offset: d,
        h_rel,
        edge_columns,
    })
}

/// Structured rectangle mesh with a single tag (test/synthetic domains).
pub fn structured_rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, tag: RegionTag) -> ThinMesh {
    let mut mb = MeshBuilder::new();
    let ids: Vec<Vec<usize>> = (0..=nx)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / nx as f64;
            (0..=ny).map(|j| mb.node([x, y0 + (y1 - y0) * j as f64 / ny as f64])).collect()
        })
        .collect();
    for i in 0..nx {
        for j in 0..ny {
            let (a, b, c, d) = (ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]);
            mb.tri(a, b, c, tag);
            mb.tri(a, c, d, tag);
        }
    }
    ThinMesh {
        nodes: mb.nodes,
        tris: mb.tris,
        tags: mb.tags,
        eps: 1.0,
        ell0: 1.0,
        offset: 0.0,
        h_rel: ny,
        edge_columns: vec![],
    }
}

/// P1 stiffness/mass on the flat triangulated domain; no essential boundary
/// conditions (Neumann is the natural condition of the form).
pub fn assemble_neumann(mesh: &ThinMesh) -> Result<FemSystem> {
    assemble_p1(&mesh.nodes, &mesh.tris)
}

fn assemble_p1(nodes: &[[f64; 2]], tris: &[[usize; 3]]) -> Result<FemSystem> {
    let n = nodes.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut max_h = 0.0f64;
    for t in tris {
        let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
        let b = Matrix2::new(p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
        let det = b.determinant();
        let area = det.abs() / 2.0;
        if area < 1e-14 {
            return Err(Error::DegenerateTriangle(area));
        }
        let ginv = b.try_inverse().unwrap().transpose();
        let g0 = Vector2::new(-ginv[(0, 0)] - ginv[(0, 1)], -ginv[(1, 0)] - ginv[(1, 1)]);
        let grads = [g0, ginv.column(0).into_owned(), ginv.column(1).into_owned()];
        for i in 0..3 {
            for j in 0..3 {
                k[(t[i], t[j])] += area * grads[i].dot(&grads[j]);
                m[(t[i], t[j])] += area / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
        for (a, b2) in [(0, 1), (1, 2), (2, 0)] {
            max_h = max_h.max(norm(sub(p[b2], p[a])));
        }
    }
    Ok(FemSystem::new(k, m, max_h))
}

// ---------------------------------------------------------------------------
// Pullback metric of the curved tube
// ---------------------------------------------------------------------------

/// G_ε(x,y) of the tube map ψ(x) + εr(x)·y·n(x) composed with the affine
/// reparameterization onto the shortened edge, its density det G^{1/2},
/// and the inverse component g^xx.
pub fn metric_at(edge: &EmbeddedEdge, ell0: f64, eps: f64, x: f64, y: f64) -> Result<(Matrix2<f64>, f64, f64)> {
    let f = 1.0 - eps * ell0 / edge.length;
    let r = edge.radius.eval(x);
    let rd = edge.radius_slope(x);
    let kap = edge.curvature(x);
    let a = 1.0 + eps * kap * r * y;
    if a <= 0.0 {
        return Err(Error::MetricNotPd { x, y, val: a });
    }
    let gxx = f * f * (a * a + eps * eps * rd * rd * y * y);
    let gxy = eps * eps * r * rd * y * f;
    let gyy = eps * eps * r * r;
    let g = Matrix2::new(gxx, gxy, gxy, gyy);
    let det_sqrt = eps * r * f * a;
    let ginv_xx = 1.0 / (f * f * a * a);
    Ok((g, det_sqrt, ginv_xx))
}

/// Worst-case deviation constants of G_ε from the product metric
/// diag(1, ε²r²) over a sample grid.
#[derive(Debug, Clone, Copy)]
pub struct MetricSample {
    /// max |det G^{1/2}/(εr) − 1| — relative density deviation
    pub o1: f64,
    /// max |g^xx − 1|
    pub o2: f64,
    /// max eigenvalue of the form comparison (upper constant)
    pub o3_upper: f64,
    /// max eigenvalue deviation |μ − 1| of the form comparison
    pub o4: f64,
    pub min_det_sqrt: f64,
}

pub fn metric_sample(edge: &EmbeddedEdge, ell0: f64, eps: f64, nx: usize, ny: usize) -> Result<MetricSample> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParam("metric sample grid needs ≥ 2 points per axis".into()));
    }
    let (mut o1, mut o2, mut o3, mut o4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut min_det = f64::INFINITY;
    for i in 0..nx {
        let x = edge.length * i as f64 / (nx - 1) as f64;
        let r = edge.radius.eval(x);
        for j in 0..ny {
            let y = -0.5 + j as f64 / (ny - 1) as f64;
            let (g, det_sqrt, ginv_xx) = metric_at(edge, ell0, eps, x, y)?;
            min_det = min_det.min(det_sqrt);
            o1 = o1.max((det_sqrt / (eps * r) - 1.0).abs());
            o2 = o2.max((ginv_xx - 1.0).abs());
            // eigenvalues of G₀^{1/2} G⁻¹ G₀^{1/2} with G₀ = diag(1, ε²r²)
            let ginv = g.try_inverse().ok_or(Error::MetricNotPd { x, y, val: g.determinant() })?;
            let m11 = ginv[(0, 0)];
            let m12 = ginv[(0, 1)] * eps * r;
            let m22 = ginv[(1, 1)] * eps * eps * r * r;
            let tr = m11 + m22;
            let disc = ((m11 - m22) * (m11 - m22) + 4.0 * m12 * m12).sqrt();
            let (mu1, mu2) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
            o3 = o3.max(mu2);
            o4 = o4.max((mu1 - 1.0).abs()).max((mu2 - 1.0).abs());
        }
    }
    Ok(MetricSample { o1, o2, o3_upper: o3, o4, min_det_sqrt: min_det })
}

// ---------------------------------------------------------------------------
// Vertex-region diagnostics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct VertexRegionReport {
    /// area of the region rescaled to unit scale (ε = 1)
    pub volume: f64,
    /// first nonzero Neumann eigenvalue of the unit-scale region
    pub lambda2: f64,
    pub n_triangles: usize,
}

/// Volume and Neumann spectral gap of the vertex region around vertex
/// index `vi`, rescaled by 1/ε to unit scale (the region geometry is
/// linear in ε, so this is exact).
pub fn vertex_region_checks(mesh: &ThinMesh, vpos: [f64; 2], vi: usize) -> Result<VertexRegionReport> {
    let tri_idx: Vec<usize> = (0..mesh.tris.len())
        .filter(|&t| mesh.tags[t].vertex_region() == Some(vi))
        .collect();
    if tri_idx.len() < 10 {
        return Err(Error::InvalidParam(format!(
            "vertex region has only {} triangles; increase h_rel for a meaningful local solve",
            tri_idx.len()
        )));
    }
    let mut renum: HashMap<usize, usize> = HashMap::new();
    let mut nodes = vec![];
    let mut tris = vec![];
    for &t in &tri_idx {
        let mut loc = [0usize; 3];
        for (s, &q) in mesh.tris[t].iter().enumerate() {
            let id = *renum.entry(q).or_insert_with(|| {
                let p = mesh.nodes[q];
                nodes.push([(p[0] - vpos[0]) / mesh.eps, (p[1] - vpos[1]) / mesh.eps]);
                nodes.len() - 1
            });
            loc[s] = id;
        }
        tris.push(loc);
    }
    let volume: f64 = tris
        .iter()
        .map(|t| {
            let (p, q, r) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])).abs()
        })
        .sum();
    let sys = assemble_p1(&nodes, &tris)?;
    let (w, _) = sys.lowest(2)?;
    Ok(VertexRegionReport { volume, lambda2: w[1], n_triangles: tri_idx.len() })
}
