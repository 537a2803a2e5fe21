//! Weighted metric graphs: data model, generators, uniformity checks,
//! and the JSON file format used by the CLI.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Edge density p_e: either constant or sampled on a grid with linear
/// interpolation. For the embedded 2D case (m = 1) the tube radius is
/// r_e = p_e.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Constant(f64),
    /// (x, p(x)) pairs with strictly increasing x and p > 0.
    Sampled(Vec<(f64, f64)>),
}

impl DensitySpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DensitySpec::Constant(c) => *c,
            DensitySpec::Sampled(pts) => {
                if pts.is_empty() {
                    return 1.0;
                }
                if x <= pts[0].0 {
                    return pts[0].1;
                }
                if x >= pts[pts.len() - 1].0 {
                    return pts[pts.len() - 1].1;
                }
                let i = pts.partition_point(|&(gx, _)| gx <= x) - 1;
                let (x0, p0) = pts[i];
                let (x1, p1) = pts[i + 1];
                p0 + (p1 - p0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Global maximum over [0, len].
    pub fn p_plus(&self, len: f64) -> f64 {
        match self {
            DensitySpec::Constant(c) => *c,
            DensitySpec::Sampled(pts) => pts
                .iter()
                .filter(|&&(x, _)| x >= 0.0 && x <= len)
                .map(|&(_, p)| p)
                .fold(self.eval(0.0).max(self.eval(len)), f64::max),
        }
    }

    /// Minimum over the near-vertex zones dist(x, {0, len}) ≤ min{1, len/2};
    /// no global lower bound is imposed away from the vertices.
    pub fn p_minus_near_vertex(&self, len: f64) -> f64 {
        match self {
            DensitySpec::Constant(c) => *c,
            DensitySpec::Sampled(pts) => {
                let zone = 1.0f64.min(len / 2.0);
                let mut lo = self.eval(0.0).min(self.eval(len)).min(self.eval(zone)).min(self.eval(len - zone));
                for &(x, p) in pts {
                    if (x >= 0.0 && x <= zone) || (x >= len - zone && x <= len) {
                        lo = lo.min(p);
                    }
                }
                lo
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::Constant(c) if *c > 0.0 => Ok(()),
            DensitySpec::Constant(c) => Err(Error::InvalidParam(format!("constant density {c} must be > 0"))),
            DensitySpec::Sampled(pts) => {
                if pts.is_empty() {
                    return Err(Error::InvalidParam("sampled density needs at least one point".into()));
                }
                for w in pts.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidParam("sampled density grid must be strictly increasing".into()));
                    }
                }
                if pts.iter().any(|&(_, p)| p <= 0.0) {
                    return Err(Error::InvalidParam("sampled density values must be > 0".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: u64,
    /// Planar position, present when the graph carries an embedding.
    pub pos: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct EdgeRecord {
    pub id: u64,
    /// ∂₋e
    pub tail: u64,
    /// ∂₊e
    pub head: u64,
    pub length: f64,
    pub density: DensitySpec,
}

/// Connected weighted metric graph. Loops and multi-edges are permitted;
/// a loop counts twice in the degree.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeRecord>,
}

impl MetricGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<EdgeRecord>) -> Result<Self> {
        let g = MetricGraph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let ids: std::collections::BTreeSet<u64> = self.vertices.iter().map(|v| v.id).collect();
        if ids.len() != self.vertices.len() {
            return Err(Error::InvalidParam("duplicate vertex id".into()));
        }
        for e in &self.edges {
            if !ids.contains(&e.tail) {
                return Err(Error::UnknownVertex(e.tail));
            }
            if !ids.contains(&e.head) {
                return Err(Error::UnknownVertex(e.head));
            }
            if !(e.length > 0.0) {
                return Err(Error::InvalidParam(format!("edge {} has non-positive length", e.id)));
            }
            e.density.validate()?;
        }
        Ok(())
    }

    pub fn vertex_index(&self, id: u64) -> Result<usize> {
        self.vertices.iter().position(|v| v.id == id).ok_or(Error::UnknownVertex(id))
    }

    /// deg v = |E_v⁺| + |E_v⁻|; a loop contributes 2.
    pub fn degree(&self, v: u64) -> Result<usize> {
        self.vertex_index(v)?;
        Ok(self
            .edges
            .iter()
            .map(|e| (e.tail == v) as usize + (e.head == v) as usize)
            .sum())
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let idx: BTreeMap<u64, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        let mut adj = vec![vec![]; self.vertices.len()];
        for e in &self.edges {
            let (a, b) = (idx[&e.tail], idx[&e.head]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Split every loop with one auxiliary degree-2 vertex at its midpoint.
    /// Kirchhoff at a degree-2 vertex is transparent, so spectra are
    /// unchanged; this keeps FEM DOF bookkeeping simple.
    pub fn split_loops(&self) -> MetricGraph {
        let mut next_vid = self.vertices.iter().map(|v| v.id).max().unwrap_or(0) + 1;
        let mut next_eid = self.edges.iter().map(|e| e.id).max().unwrap_or(0) + 1;
        let mut vertices = self.vertices.clone();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.tail == e.head {
                let mid = next_vid;
                next_vid += 1;
                vertices.push(Vertex { id: mid, pos: None });
                edges.push(EdgeRecord {
                    id: e.id,
                    tail: e.tail,
                    head: mid,
                    length: e.length / 2.0,
                    density: e.density.clone(),
                });
                edges.push(EdgeRecord {
                    id: next_eid,
                    tail: mid,
                    head: e.head,
                    length: e.length / 2.0,
                    density: e.density.clone(),
                });
                next_eid += 1;
            } else {
                edges.push(e.clone());
            }
        }
        MetricGraph { vertices, edges }
    }

    pub fn to_discrete(&self) -> DiscreteGraph {
        let idx: BTreeMap<u64, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        DiscreteGraph {
            n_vertices: self.vertices.len(),
            edges: self.edges.iter().map(|e| (idx[&e.tail], idx[&e.head])).collect(),
        }
    }

    pub fn check_uniform(&self, bounds: &UniformityBounds) -> UniformityReport {
        let d0 = self.vertices.iter().map(|v| self.degree(v.id).unwrap()).max().unwrap_or(0);
        let l0 = self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
        let p_plus = self
            .edges
            .iter()
            .map(|e| e.density.p_plus(e.length))
            .fold(0.0, f64::max);
        let p_minus = self
            .edges
            .iter()
            .map(|e| e.density.p_minus_near_vertex(e.length))
            .fold(f64::INFINITY, f64::min);
        UniformityReport {
            d0_observed: d0,
            l0_observed: l0,
            p_minus_observed: p_minus,
            p_plus_observed: p_plus,
            g1_pass: d0 <= bounds.d0,
            g2_pass: l0 >= bounds.l0,
            g3_pass: p_minus >= bounds.p_minus && p_plus <= bounds.p_plus,
        }
    }
}

/// Combinatorics only: vertex indices 0..n and an undirected edge multiset.
#[derive(Debug, Clone)]
pub struct DiscreteGraph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl DiscreteGraph {
    /// Loops count twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn has_loop(&self) -> bool {
        self.edges.iter().any(|&(a, b)| a == b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformityBounds {
    pub d0: usize,
    pub l0: f64,
    pub p_minus: f64,
    pub p_plus: f64,
}

/// Observed extrema and per-condition verdicts for the uniformity
/// requirements: bounded degree, edge lengths bounded below, density
/// bounded (below only near vertices).
#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub d0_observed: usize,
    pub l0_observed: f64,
    pub p_minus_observed: f64,
    pub p_plus_observed: f64,
    pub g1_pass: bool,
    pub g2_pass: bool,
    pub g3_pass: bool,
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum GraphKind {
    /// Single edge of length ℓ.
    Interval(f64),
    /// Circle of circumference ℓ realized with 3 vertices and 3 edges of
    /// length ℓ/3 (avoids a loop edge).
    Cycle(f64),
    /// n edges of length ℓ around one center vertex.
    Star(usize, f64),
    /// Complete graph on 4 vertices, all edges length ℓ.
    CompleteK4(f64),
    /// Rooted tree: root has d₀ children, interior vertices d₀−1 children,
    /// `depth` edge levels, all edges length ℓ.
    TreeTruncation(usize, usize, f64),
    /// Sierpiński gasket graph of generation n with all edges length ℓ.
    SierpinskiMetric(usize, f64),
}

pub fn generate_graph(kind: GraphKind) -> Result<MetricGraph> {
    let p1 = DensitySpec::Constant(1.0);
    match kind {
        GraphKind::Interval(l) => {
            if l <= 0.0 {
                return Err(Error::InvalidParam("interval length must be > 0".into()));
            }
            MetricGraph::new(
                vec![Vertex { id: 0, pos: Some([0.0, 0.0]) }, Vertex { id: 1, pos: Some([l, 0.0]) }],
                vec![EdgeRecord { id: 0, tail: 0, head: 1, length: l, density: p1 }],
            )
        }
        GraphKind::Cycle(l) => {
            if l <= 0.0 {
                return Err(Error::InvalidParam("circumference must be > 0".into()));
            }
            let vertices = (0..3).map(|i| Vertex { id: i, pos: None }).collect();
            let edges = (0..3u64)
                .map(|i| EdgeRecord { id: i, tail: i, head: (i + 1) % 3, length: l / 3.0, density: p1.clone() })
                .collect();
            MetricGraph::new(vertices, edges)
        }
        GraphKind::Star(n, l) => {
            if n < 1 || l <= 0.0 {
                return Err(Error::InvalidParam("star needs n ≥ 1 edges of positive length".into()));
            }
            let mut vertices = vec![Vertex { id: 0, pos: Some([0.0, 0.0]) }];
            let mut edges = vec![];
            for k in 0..n {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vertices.push(Vertex { id: (k + 1) as u64, pos: Some([l * ang.cos(), l * ang.sin()]) });
                edges.push(EdgeRecord { id: k as u64, tail: 0, head: (k + 1) as u64, length: l, density: p1.clone() });
            }
            MetricGraph::new(vertices, edges)
        }
        GraphKind::CompleteK4(l) => {
            if l <= 0.0 {
                return Err(Error::InvalidParam("edge length must be > 0".into()));
            }
            let vertices = (0..4).map(|i| Vertex { id: i, pos: None }).collect();
            let mut edges = vec![];
            let mut id = 0;
            for a in 0..4u64 {
                for b in (a + 1)..4 {
                    edges.push(EdgeRecord { id, tail: a, head: b, length: l, density: p1.clone() });
                    id += 1;
                }
            }
            MetricGraph::new(vertices, edges)
        }
        GraphKind::TreeTruncation(d0, depth, l) => {
            if d0 < 2 || depth < 1 || l <= 0.0 {
                return Err(Error::InvalidParam("tree needs d₀ ≥ 2, depth ≥ 1, ℓ > 0".into()));
            }
            let mut vertices = vec![Vertex { id: 0, pos: None }];
            let mut edges = vec![];
            let mut frontier = vec![0u64];
            let mut next = 1u64;
            for level in 0..depth {
                let children = if level == 0 { d0 } else { d0 - 1 };
                let mut new_frontier = vec![];
                for &parent in &frontier {
                    for _ in 0..children {
                        vertices.push(Vertex { id: next, pos: None });
                        edges.push(EdgeRecord { id: next - 1, tail: parent, head: next, length: l, density: p1.clone() });
                        new_frontier.push(next);
                        next += 1;
                    }
                }
                frontier = new_frontier;
            }
            MetricGraph::new(vertices, edges)
        }
        GraphKind::SierpinskiMetric(n, l) => {
            if n < 1 || l <= 0.0 {
                return Err(Error::InvalidParam("generation ≥ 1 and ℓ > 0 required".into()));
            }
            let (nv, edges, _corners) = sierpinski_combinatorics(n);
            let vertices = (0..nv).map(|i| Vertex { id: i as u64, pos: None }).collect();
            let edges = edges
                .into_iter()
                .enumerate()
                .map(|(i, (a, b))| EdgeRecord { id: i as u64, tail: a as u64, head: b as u64, length: l, density: p1.clone() })
                .collect();
            MetricGraph::new(vertices, edges)
        }
    }
}

/// Sierpiński gasket graph G_n: G_1 is a triangle; G_{n+1} takes three
/// copies of G_n and identifies corner v_j of copy i with corner v_i of
/// copy j for i < j. Returns (vertex count, edges, the 3 outer corners).
pub fn sierpinski_combinatorics(n: usize) -> (usize, Vec<(usize, usize)>, [usize; 3]) {
    if n == 1 {
        return (3, vec![(0, 1), (1, 2), (2, 0)], [0, 1, 2]);
    }
    let (sub_nv, sub_edges, sub_corners) = sierpinski_combinatorics(n - 1);
    // Assign global ids: copy c owns ids offset by c·sub_nv, then merge the
    // three glued corner pairs via a representative map.
    let raw = 3 * sub_nv;
    let mut rep: Vec<usize> = (0..raw).collect();
    let gid = |c: usize, v: usize| c * sub_nv + v;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let a = gid(i, sub_corners[j]);
            let b = gid(j, sub_corners[i]);
            rep[b] = a;
        }
    }
    // compress raw ids to 0..nv
    let mut compact = vec![usize::MAX; raw];
    let mut nv = 0;
    for v in 0..raw {
        if rep[v] == v {
            compact[v] = nv;
            nv += 1;
        }
    }
    for v in 0..raw {
        if rep[v] != v {
            compact[v] = compact[rep[v]];
        }
    }
    let mut edges = Vec::with_capacity(3 * sub_edges.len());
    for c in 0..3 {
        for &(a, b) in &sub_edges {
            edges.push((compact[gid(c, a)], compact[gid(c, b)]));
        }
    }
    let corners = [compact[gid(0, sub_corners[0])], compact[gid(1, sub_corners[1])], compact[gid(2, sub_corners[2])]];
    (nv, edges, corners)
}

// ---------------------------------------------------------------------------
// JSON file format (field names are normative for the CLI)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct VertexJson {
    id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DensityJson {
    Const { value: f64 },
    Sampled { points: Vec<(f64, f64)> },
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    id: u64,
    tail: u64,
    head: u64,
    length: f64,
    density: DensityJson,
}

/// Optional embedding data. Vertex positions live on the vertices
/// themselves (`x`, `y`); edges are straight unless a polyline is given
/// here. Polyline curves are consumed by the metric sampler only — the
/// mesher requires straight edges.
#[derive(Serialize, Deserialize, Default)]
pub struct EmbeddingJson {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveJson>,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct CurveJson {
    pub edge: u64,
    pub points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<VertexJson>,
    edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<EmbeddingJson>,
}

pub fn graph_to_json(g: &MetricGraph, embedding: Option<&EmbeddingJson>) -> Result<String> {
    let j = GraphJson {
        vertices: g
            .vertices
            .iter()
            .map(|v| VertexJson { id: v.id, x: v.pos.map(|p| p[0]), y: v.pos.map(|p| p[1]) })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeJson {
                id: e.id,
                tail: e.tail,
                head: e.head,
                length: e.length,
                density: match &e.density {
                    DensitySpec::Constant(c) => DensityJson::Const { value: *c },
                    DensitySpec::Sampled(pts) => DensityJson::Sampled { points: pts.clone() },
                },
            })
            .collect(),
        embedding: embedding.map(|e| EmbeddingJson { curves: e.curves.clone() }),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn graph_from_json(text: &str) -> Result<(MetricGraph, Option<EmbeddingJson>)> {
    let j: GraphJson = serde_json::from_str(text)?;
    let vertices = j
        .vertices
        .into_iter()
        .map(|v| {
            let pos = match (v.x, v.y) {
                (Some(x), Some(y)) => Some([x, y]),
                (None, None) => None,
                _ => {
                    return Err(Error::GraphFormat {
                        field: format!("vertices[id={}]", v.id),
                        msg: "x and y must both be present or both absent".into(),
                    })
                }
            };
            Ok(Vertex { id: v.id, pos })
        })
        .collect::<Result<Vec<_>>>()?;
    let edges = j
        .edges
        .into_iter()
        .map(|e| EdgeRecord {
            id: e.id,
            tail: e.tail,
            head: e.head,
            length: e.length,
            density: match e.density {
                DensityJson::Const { value } => DensitySpec::Constant(value),
                DensityJson::Sampled { points } => DensitySpec::Sampled(points),
            },
        })
        .collect();
    Ok((MetricGraph::new(vertices, edges)?, j.embedding))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_and_loops() {
        let star = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        assert_eq!(star.degree(0).unwrap(), 3);
        assert_eq!(star.degree(1).unwrap(), 1);

        let loop_graph = MetricGraph::new(
            vec![Vertex { id: 0, pos: None }],
            vec![EdgeRecord { id: 0, tail: 0, head: 0, length: 1.0, density: DensitySpec::Constant(1.0) }],
        )
        .unwrap();
        assert_eq!(loop_graph.degree(0).unwrap(), 2);

        let path = generate_graph(GraphKind::TreeTruncation(2, 1, 1.0)).unwrap();
        // root with 2 children = path of 2 edges, middle vertex is the root
        assert_eq!(path.degree(0).unwrap(), 2);
    }

    #[test]
    fn split_loops_preserves_length() {
        let g = MetricGraph::new(
            vec![Vertex { id: 0, pos: None }],
            vec![EdgeRecord { id: 0, tail: 0, head: 0, length: 2.0, density: DensitySpec::Constant(1.0) }],
        )
        .unwrap();
        let s = g.split_loops();
        assert_eq!(s.vertices.len(), 2);
        assert_eq!(s.edges.len(), 2);
        let total: f64 = s.edges.iter().map(|e| e.length).sum();
        assert_eq!(total, 2.0);
        assert_eq!(s.degree(0).unwrap(), 2);
        assert_eq!(s.degree(1).unwrap(), 2);
    }

    #[test]
    fn sierpinski_counts_and_degrees() {
        for n in 1..=4 {
            let g = generate_graph(GraphKind::SierpinskiMetric(n, 1.0)).unwrap();
            assert_eq!(g.edges.len(), 3usize.pow(n as u32));
            assert_eq!(g.vertices.len(), (3usize.pow(n as u32) + 3) / 2);
            assert!(g.is_connected());
            let mut deg2 = 0;
            for v in &g.vertices {
                let d = g.degree(v.id).unwrap();
                if d == 2 {
                    deg2 += 1;
                } else {
                    assert_eq!(d, 4, "generation {n}");
                }
            }
            assert_eq!(deg2, 3);
        }
    }

    #[test]
    fn tree_truncation_counts() {
        let g = generate_graph(GraphKind::TreeTruncation(3, 2, 1.0)).unwrap();
        assert_eq!(g.vertices.len(), 10); // 1 + 3 + 6
        assert_eq!(g.degree(0).unwrap(), 3);
        assert_eq!(g.degree(1).unwrap(), 3); // interior: 1 parent + 2 children
    }

    #[test]
    fn vertex_edge_sum_identities() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = rng.gen_range(2..8);
            let mut vertices: Vec<Vertex> = (0..n).map(|i| Vertex { id: i as u64, pos: None }).collect();
            let mut edges = vec![];
            // random connected-ish multigraph with loops
            for i in 1..n {
                edges.push(EdgeRecord {
                    id: edges.len() as u64,
                    tail: rng.gen_range(0..i) as u64,
                    head: i as u64,
                    length: 1.0,
                    density: DensitySpec::Constant(1.0),
                });
            }
            for _ in 0..rng.gen_range(0..4) {
                let a = rng.gen_range(0..n) as u64;
                let b = rng.gen_range(0..n) as u64;
                edges.push(EdgeRecord { id: edges.len() as u64, tail: a, head: b, length: 1.0, density: DensitySpec::Constant(1.0) });
            }
            vertices.truncate(n);
            let g = MetricGraph::new(vertices, edges).unwrap();
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            // Σ_e (a(∂₊e)+a(∂₋e)) = Σ_v deg v · a(v)
            let lhs: f64 = g.edges.iter().map(|e| a[e.tail as usize] + a[e.head as usize]).sum();
            let rhs: f64 = (0..n).map(|v| g.degree(v as u64).unwrap() as f64 * a[v]).sum();
            assert!((lhs - rhs).abs() < 1e-12, "trial {trial}");
            // Σ_v Σ_{e∈E_v} b_e = 2 Σ_e b_e with b_e = 1
            let lhs2: usize = (0..n).map(|v| g.degree(v as u64).unwrap()).sum();
            assert_eq!(lhs2, 2 * g.edges.len());
        }
    }

    #[test]
    fn uniformity_report() {
        let g = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        let r = g.check_uniform(&UniformityBounds { d0: 3, l0: 1.0, p_minus: 1.0, p_plus: 1.0 });
        assert!(r.g1_pass && r.g2_pass && r.g3_pass);
        let r2 = g.check_uniform(&UniformityBounds { d0: 3, l0: 2.0, p_minus: 1.0, p_plus: 1.0 });
        assert!(!r2.g2_pass);
    }

    #[test]
    fn density_lower_bound_near_vertex_only() {
        // decays to 0.05 mid-edge but stays ≥ 0.5 within the near-vertex zone
        let d = DensitySpec::Sampled(vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.05), (3.0, 0.5), (4.0, 1.0)]);
        assert!(d.p_minus_near_vertex(4.0) >= 0.5);
        assert!(d.p_plus(4.0) <= 1.0);
    }

    #[test]
    fn json_roundtrip() {
        let g = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        let text = graph_to_json(&g, None).unwrap();
        let (g2, emb) = graph_from_json(&text).unwrap();
        assert!(emb.is_none());
        assert_eq!(g2.vertices.len(), 4);
        assert_eq!(g2.edges.len(), 3);
        assert_eq!(g2.edges[0].length, 1.0);
        assert!(text.contains("\"tail\""));
        assert!(text.contains("\"density\""));
        assert!(text.contains("\"const\""));
    }

    #[test]
    fn json_rejects_half_position() {
        let bad = r#"{"vertices":[{"id":0,"x":1.0}],"edges":[]}"#;
        assert!(graph_from_json(bad).is_err());
    }

    #[test]
    fn cycle_is_three_edges() {
        let g = generate_graph(GraphKind::Cycle(1.0)).unwrap();
        assert_eq!(g.vertices.len(), 3);
        assert!(g.edges.iter().all(|e| (e.length - 1.0 / 3.0).abs() < 1e-15));
        let d = g.to_discrete();
        assert_eq!(d.degrees(), vec![2, 2, 2]);
    }

    #[test]
    fn k4_counts() {
        let g = generate_graph(GraphKind::CompleteK4(1.0)).unwrap();
        let d = g.to_discrete();
        assert_eq!(d.n_vertices, 4);
        assert_eq!(d.edges.len(), 6);
    }
}
