//! Weighted Kirchhoff Laplacian on a metric graph via 1D P1 finite
//! elements, plus the exact spectral maps relating it to the discrete
//! normalized Laplacian on equilateral graphs.

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::graph::MetricGraph;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Where each DOF of the assembled system lives.
#[derive(Debug, Clone)]
pub struct GraphDofMap {
    /// vertex id → DOF index
    pub vertex_dof: BTreeMap<u64, usize>,
    /// per edge (in graph order): DOF indices from tail to head, including
    /// the two vertex DOFs, with their edge coordinates
    pub edge_dofs: Vec<Vec<(usize, f64)>>,
    pub n_dofs: usize,
}

#[derive(Debug)]
pub struct GraphFem {
    pub system: FemSystem,
    pub dof_map: GraphDofMap,
    /// the (loop-split) graph that was assembled
    pub graph: MetricGraph,
}

#[derive(Debug, Clone)]
pub struct MetricEigenpair {
    pub lambda: f64,
    pub coeffs: DVector<f64>,
}

/// P1 assembly with vertex continuity via shared DOFs; the weighted
/// Kirchhoff condition is the natural condition of the form. Density
/// enters stiffness and mass through per-cell midpoint quadrature.
/// Loops are split at their midpoint first.
pub fn assemble_kirchhoff(g: &MetricGraph, h: f64) -> Result<GraphFem> {
    if h <= 0.0 {
        return Err(Error::InvalidParam("mesh width must be > 0".into()));
    }
    let nodes: Vec<Vec<f64>> = g
        .split_loops()
        .edges
        .iter()
        .map(|e| {
            let n = (e.length / h).ceil().max(1.0) as usize;
            (0..=n).map(|i| e.length * i as f64 / n as f64).collect()
        })
        .collect();
    assemble_kirchhoff_with_nodes(g, &nodes)
}

/// Same as [`assemble_kirchhoff`] but with caller-supplied node positions
/// per (loop-split) edge; each list must start at 0 and end at ℓ_e. Used
/// when the 1D mesh must align with a 2D mesh's cross-lines.
pub fn assemble_kirchhoff_with_nodes(g: &MetricGraph, nodes_per_edge: &[Vec<f64>]) -> Result<GraphFem> {
    let g = g.split_loops();
    if nodes_per_edge.len() != g.edges.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} node lists for {} edges",
            nodes_per_edge.len(),
            g.edges.len()
        )));
    }
    for e in &g.edges {
        if !e.length.is_finite() {
            return Err(Error::InfiniteEdge(e.id));
        }
    }
    let mut vertex_dof = BTreeMap::new();
    let mut n_dofs = 0usize;
    for v in &g.vertices {
        vertex_dof.insert(v.id, n_dofs);
        n_dofs += 1;
    }
    let mut edge_dofs = Vec::with_capacity(g.edges.len());
    let mut max_h: f64 = 0.0;
    for (e, nodes) in g.edges.iter().zip(nodes_per_edge) {
        if nodes.len() < 2 || nodes[0] != 0.0 || (nodes[nodes.len() - 1] - e.length).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!("edge {} node list must run from 0 to ℓ", e.id)));
        }
        let mut dofs = Vec::with_capacity(nodes.len());
        dofs.push((vertex_dof[&e.tail], 0.0));
        for &x in &nodes[1..nodes.len() - 1] {
            dofs.push((n_dofs, x));
            n_dofs += 1;
        }
        dofs.push((vertex_dof[&e.head], e.length));
        for w in dofs.windows(2) {
            max_h = max_h.max(w[1].1 - w[0].1);
        }
        edge_dofs.push(dofs);
    }
    let mut k = DMatrix::<f64>::zeros(n_dofs, n_dofs);
    let mut m = DMatrix::<f64>::zeros(n_dofs, n_dofs);
    for (e, dofs) in g.edges.iter().zip(&edge_dofs) {
        for w in dofs.windows(2) {
            let (d0, x0) = w[0];
            let (d1, x1) = w[1];
            let h = x1 - x0;
            let p = e.density.eval(0.5 * (x0 + x1));
            let ke = p / h;
            let me = p * h;
            k[(d0, d0)] += ke;
            k[(d1, d1)] += ke;
            k[(d0, d1)] -= ke;
            k[(d1, d0)] -= ke;
            m[(d0, d0)] += me / 3.0;
            m[(d1, d1)] += me / 3.0;
            m[(d0, d1)] += me / 6.0;
            m[(d1, d0)] += me / 6.0;
        }
    }
    Ok(GraphFem {
        system: FemSystem::new(k, m, max_h),
        dof_map: GraphDofMap { vertex_dof, edge_dofs, n_dofs },
        graph: g,
    })
}

pub fn eigenpairs(fem: &GraphFem, n: usize) -> Result<Vec<MetricEigenpair>> {
    let (w, v) = fem.system.lowest(n)?;
    Ok((0..w.len())
        .map(|i| MetricEigenpair { lambda: w[i], coeffs: v.column(i).into_owned() })
        .collect())
}

impl GraphFem {
    /// Evaluate an eigenfunction at edge coordinate x on edge index e
    /// (linear interpolation between DOF nodes).
    pub fn evaluate(&self, coeffs: &DVector<f64>, edge: usize, x: f64) -> f64 {
        let dofs = &self.dof_map.edge_dofs[edge];
        if x <= dofs[0].1 {
            return coeffs[dofs[0].0];
        }
        for w in dofs.windows(2) {
            let ((d0, x0), (d1, x1)) = (w[0], w[1]);
            if x <= x1 {
                let t = (x - x0) / (x1 - x0);
                return (1.0 - t) * coeffs[d0] + t * coeffs[d1];
            }
        }
        coeffs[dofs[dofs.len() - 1].0]
    }

    /// Weighted Kirchhoff flux residual Σ_{e∈E_v} p_e(v) f′_e(v) at a
    /// vertex, with one-sided P1 derivatives.
    pub fn kirchhoff_residual(&self, coeffs: &DVector<f64>, v: u64) -> f64 {
        let mut sum = 0.0;
        for (e, dofs) in self.graph.edges.iter().zip(&self.dof_map.edge_dofs) {
            if e.tail == v {
                let ((d0, x0), (d1, x1)) = (dofs[0], dofs[1]);
                sum += e.density.eval(0.0) * (coeffs[d1] - coeffs[d0]) / (x1 - x0);
            }
            if e.head == v {
                let n = dofs.len();
                let ((d0, x0), (d1, x1)) = (dofs[n - 2], dofs[n - 1]);
                // outgoing derivative at the head is the negative of f'
                sum -= e.density.eval(e.length) * (coeffs[d1] - coeffs[d0]) / (x1 - x0);
            }
        }
        sum
    }
}

// ---------------------------------------------------------------------------
// Exact spectral maps for equilateral graphs
// ---------------------------------------------------------------------------

/// Dirichlet spectrum of a single edge: {(kπ/ℓ)² : k ≥ 1} up to λmax.
pub fn dirichlet_spectrum(l: f64, lambda_max: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut k = 1.0;
    loop {
        let lam = (k * PI / l).powi(2);
        if lam > lambda_max {
            break;
        }
        out.push(lam);
        k += 1.0;
    }
    out
}

/// g(λ) = 1 − cos(ℓ√λ).
pub fn g_map(lambda: f64, l: f64) -> f64 {
    1.0 - (l * lambda.sqrt()).cos()
}

/// All λ ∈ (0, λmax] with g(λ) = μ, for μ strictly inside (0, 2):
/// √λ·ℓ ∈ {2kπ ± arccos(1−μ)}.
pub fn mu_preimages(mu: f64, l: f64, lambda_max: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0 && mu < 2.0) {
        return Err(Error::InvalidParam(format!("μ={mu} must lie strictly inside (0,2)")));
    }
    let theta = (1.0 - mu).acos(); // principal value in (0, π)
    let mut out = vec![];
    let mut k = 0i64;
    loop {
        let base = 2.0 * k as f64 * PI;
        let mut any = false;
        for omega in [base + theta, base + 2.0 * PI - theta] {
            let lam = (omega / l).powi(2);
            if lam <= lambda_max {
                out.push(lam);
                any = true;
            }
        }
        if !any && (base + theta) / l > lambda_max.sqrt() {
            break;
        }
        k += 1;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(out)
}

/// One metric eigenvalue produced by the discrete↔metric correspondence.
#[derive(Debug, Clone, Copy)]
pub struct CorrespondenceEigenvalue {
    pub lambda: f64,
    /// the discrete eigenvalue it comes from
    pub mu: f64,
    pub multiplicity: usize,
}

/// Metric spectrum away from the Dirichlet set via
/// spec(Δ_metric) \ Σ^Dir = g^{−1}(spec(Δ_discrete) \ {0, 2}),
/// multiplicities preserved. Requires deg v ≥ 2 and no self-loops.
pub fn metric_spectrum_via_correspondence(
    discrete_eigs: &[f64],
    degrees: &[usize],
    has_loop: bool,
    l: f64,
    lambda_max: f64,
) -> Result<Vec<CorrespondenceEigenvalue>> {
    if has_loop {
        return Err(Error::Unsupported("correspondence requires a graph without self-loops".into()));
    }
    if degrees.iter().any(|&d| d < 2) {
        return Err(Error::Unsupported("correspondence requires deg v ≥ 2 at every vertex".into()));
    }
    // cluster discrete eigenvalues into (value, multiplicity)
    let mut mus: Vec<(f64, usize)> = vec![];
    for &e in discrete_eigs {
        match mus.last_mut() {
            Some((v, m)) if (e - *v).abs() < 1e-9 => *m += 1,
            _ => mus.push((e, 1)),
        }
    }
    let mut out = vec![];
    for (mu, mult) in mus {
        if mu <= 1e-12 || mu >= 2.0 - 1e-12 {
            continue; // the excluded set {0, 2}
        }
        for lam in mu_preimages(mu, l, lambda_max)? {
            out.push(CorrespondenceEigenvalue { lambda: lam, mu, multiplicity: mult });
        }
    }
    out.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(out)
}

/// The eigenfunction lift for the correspondence:
/// (U_λ a)_e(x) = √ℓ/(√2 sin(ℓ√λ)) · (a(∂₋e) sin((ℓ−x)√λ) + a(∂₊e) sin(x√λ)).
pub struct Lift {
    pub lambda: f64,
    pub l: f64,
    scale: f64,
    omega: f64,
}

impl Lift {
    pub fn new(lambda: f64, l: f64) -> Result<Lift> {
        let omega = lambda.sqrt();
        let s = (l * omega).sin();
        if s.abs() < 1e-8 {
            return Err(Error::InvalidParam(format!("λ={lambda} lies in the Dirichlet set (sin ℓ√λ ≈ 0)")));
        }
        Ok(Lift { lambda, l, scale: l.sqrt() / (2.0f64.sqrt() * s), omega })
    }

    pub fn eval(&self, a_tail: f64, a_head: f64, x: f64) -> f64 {
        self.scale * (a_tail * ((self.l - x) * self.omega).sin() + a_head * (x * self.omega).sin())
    }

    /// Exact L² norm squared of the lifted function on one edge with unit
    /// density, from the closed-form sine integrals.
    pub fn edge_norm_sq(&self, a_tail: f64, a_head: f64) -> f64 {
        let (l, w) = (self.l, self.omega);
        let int_ss = l / 2.0 - (2.0 * l * w).sin() / (4.0 * w); // ∫ sin²((ℓ−x)ω) = ∫ sin²(xω)
        let int_cross = ((l * w).sin() - l * w * (l * w).cos()) / (2.0 * w); // ∫ sin((ℓ−x)ω) sin(xω)
        self.scale * self.scale * (a_tail * a_tail * int_ss + a_head * a_head * int_ss + 2.0 * a_tail * a_head * int_cross)
    }
}

/// Spectral gap intervals of the equilateral metric tree of degree d₀:
/// I₀ = (0, ω₀²) and I_k = ((kπ−ω₀)², (kπ)²) ∪ ((kπ)², (kπ+ω₀)²)
/// with ω₀ = arccos(2√(d₀−1)/d₀) (unit edge length).
pub fn gap_intervals_tree(d0: usize, lambda_max: f64) -> Result<Vec<(f64, f64)>> {
    if d0 < 3 {
        return Err(Error::InvalidParam("gap intervals need d₀ ≥ 3".into()));
    }
    let omega0 = (2.0 * ((d0 - 1) as f64).sqrt() / d0 as f64).acos();
    let mut out = vec![(0.0, omega0 * omega0)];
    let mut k = 1.0;
    loop {
        let lo = (k * PI - omega0).powi(2);
        if lo >= lambda_max {
            break;
        }
        let mid = (k * PI).powi(2);
        let hi = (k * PI + omega0).powi(2);
        out.push((lo, mid.min(lambda_max)));
        if mid < lambda_max {
            out.push((mid, hi.min(lambda_max)));
        }
        k += 1.0;
    }
    Ok(out)
}

pub fn tree_omega0(d0: usize) -> Result<f64> {
    if d0 < 3 {
        return Err(Error::InvalidParam("ω₀ needs d₀ ≥ 3".into()));
    }
    Ok((2.0 * ((d0 - 1) as f64).sqrt() / d0 as f64).acos())
}

/// Limit spectrum of the decoupled regime: {0 with multiplicity |V|}
/// joined with the Dirichlet values π²k²/ℓ_e² of every edge, multiplicities
/// merged across coinciding values. Returns (value, multiplicity) sorted.
pub fn decoupled_spectrum(lengths: &[f64], lambda_max: f64, n_vertices: usize) -> Vec<(f64, usize)> {
    let mut vals: Vec<f64> = vec![];
    for &l in lengths {
        vals.extend(dirichlet_spectrum(l, lambda_max));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, usize)> = vec![(0.0, n_vertices)];
    for v in vals {
        match out.last_mut() {
            Some((x, m)) if (v - *x).abs() < 1e-12 => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, GraphKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn interval_neumann_spectrum() {
        let g = generate_graph(GraphKind::Interval(1.0)).unwrap();
        let fem = assemble_kirchhoff(&g, 2e-3).unwrap();
        let eigs = eigenpairs(&fem, 4).unwrap();
        assert!(eigs[0].lambda.abs() < 1e-8);
        for k in 1..4 {
            let exact = (k as f64 * PI).powi(2);
            // consistent-mass P1 bias is ≈ λ²h²/12 from above
            let tol = exact * exact * 2e-3 * 2e-3 / 6.0 + 1e-8;
            let err = eigs[k].lambda - exact;
            assert!(err >= -1e-8 && err < tol, "k={k}: {} vs {exact}", eigs[k].lambda);
        }
    }

    #[test]
    fn fem_eigenvalues_decrease_under_refinement_and_o_h2() {
        let g = generate_graph(GraphKind::Interval(1.0)).unwrap();
        let exact = PI * PI;
        let mut errs = vec![];
        for h in [0.02, 0.01, 0.005] {
            let fem = assemble_kirchhoff(&g, h).unwrap();
            let eigs = eigenpairs(&fem, 2).unwrap();
            errs.push(eigs[1].lambda - exact);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "upper bounds decreasing: {errs:?}");
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "O(h²) rate, got ratio {ratio}");
        }
    }

    #[test]
    fn cycle_spectrum() {
        let g = generate_graph(GraphKind::Cycle(1.0)).unwrap();
        let fem = assemble_kirchhoff(&g, 1e-3).unwrap();
        let eigs = eigenpairs(&fem, 3).unwrap();
        let exact = (2.0 * PI).powi(2);
        assert!(eigs[0].lambda.abs() < 1e-8);
        for k in 1..3 {
            assert!((eigs[k].lambda - exact).abs() / exact < 1e-4);
        }
    }

    #[test]
    fn loop_graph_matches_cycle() {
        use crate::graph::{EdgeRecord, MetricGraph, Vertex, DensitySpec};
        let g = MetricGraph::new(
            vec![Vertex { id: 0, pos: None }],
            vec![EdgeRecord { id: 0, tail: 0, head: 0, length: 1.0, density: DensitySpec::Constant(1.0) }],
        )
        .unwrap();
        let fem = assemble_kirchhoff(&g, 1e-3).unwrap();
        let eigs = eigenpairs(&fem, 2).unwrap();
        assert!((eigs[1].lambda - (2.0 * PI).powi(2)).abs() / 39.0 < 1e-4);
    }

    #[test]
    fn star_degenerate_pair_and_kirchhoff_residual() {
        let g = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        let fem = assemble_kirchhoff(&g, 2e-3).unwrap();
        let eigs = eigenpairs(&fem, 4).unwrap();
        // antisymmetric modes at π²/4 are a degenerate pair
        assert!((eigs[1].lambda - eigs[2].lambda).abs() < 1e-6);
        assert!((eigs[1].lambda - PI * PI / 4.0).abs() < 1e-3);
        // Kirchhoff residual at the center vanishes like O(h)
        let r = fem.kirchhoff_residual(&eigs[3].coeffs, 0).abs();
        let scale = eigs[3].coeffs.amax();
        assert!(r <= 10.0 * fem.system.mesh_h * eigs[3].lambda * scale, "residual {r}");
    }

    #[test]
    fn nonuniform_density_sanity() {
        use crate::graph::DensitySpec;
        // doubling a constant density rescales nothing: p cancels in K M⁻¹
        let mut g = generate_graph(GraphKind::Interval(1.0)).unwrap();
        g.edges[0].density = DensitySpec::Constant(2.0);
        let fem = assemble_kirchhoff(&g, 1e-3).unwrap();
        let eigs = eigenpairs(&fem, 2).unwrap();
        assert!((eigs[1].lambda - PI * PI).abs() / (PI * PI) < 1e-5);
    }

    #[test]
    fn dirichlet_set() {
        let s = dirichlet_spectrum(1.0, 50.0);
        assert_eq!(s.len(), 2);
        assert_abs_diff_eq!(s[0], PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 4.0 * PI * PI, epsilon = 1e-12);
        let s2 = dirichlet_spectrum(2.0, 10.0);
        assert_abs_diff_eq!(s2[0], PI * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s2[1], PI * PI, epsilon = 1e-12);
        assert!(dirichlet_spectrum(1.0, 5.0).is_empty());
    }

    #[test]
    fn g_map_values() {
        assert_abs_diff_eq!(g_map(PI * PI / 4.0, 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g_map(0.0, 2.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g_map(PI * PI, 1.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn preimages_and_inverse_property() {
        let p = mu_preimages(4.0 / 3.0, 1.0, 10.0).unwrap();
        assert_eq!(p.len(), 1);
        assert_abs_diff_eq!(p[0], 3.650519363459398, epsilon = 1e-10); // arccos(−1/3)²
        let p2 = mu_preimages(1.0, 1.0, 30.0).unwrap();
        assert_abs_diff_eq!(p2[0], (PI / 2.0).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(p2[1], (3.0 * PI / 2.0).powi(2), epsilon = 1e-12);
        let p3 = mu_preimages(1.0, 2.0, 10.0).unwrap();
        assert_abs_diff_eq!(p3[0], (PI / 4.0).powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(p3[1], (3.0 * PI / 4.0).powi(2), epsilon = 1e-10);
        assert_eq!(p3.len(), 2);
        assert!(mu_preimages(0.0, 1.0, 10.0).is_err());
        // g ∘ preimage = id on (0,2)
        for mu in [0.1, 0.5, 1.0, 1.7, 1.99] {
            for lam in mu_preimages(mu, 1.3, 200.0).unwrap() {
                assert_abs_diff_eq!(g_map(lam, 1.3), mu, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn correspondence_k4_and_cycle() {
        let eigs = [0.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0];
        let out = metric_spectrum_via_correspondence(&eigs, &[3, 3, 3, 3], false, 1.0, 9.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out[0].lambda, 3.650519363459398, epsilon = 1e-10);
        assert_eq!(out[0].multiplicity, 3);

        let eigs = [0.0, 1.5, 1.5];
        let out = metric_spectrum_via_correspondence(&eigs, &[2, 2, 2], false, 1.0, 10.0).unwrap();
        assert_abs_diff_eq!(out[0].lambda, (2.0 * PI / 3.0).powi(2), epsilon = 1e-10);
        assert_eq!(out[0].multiplicity, 2);

        assert!(metric_spectrum_via_correspondence(&eigs, &[1, 2, 2], false, 1.0, 10.0).is_err());
        assert!(metric_spectrum_via_correspondence(&eigs, &[2, 2, 2], true, 1.0, 10.0).is_err());
    }

    #[test]
    fn lift_formula_and_dirichlet_rejection() {
        let lam = (PI / 2.0) * (PI / 2.0);
        let lift = Lift::new(lam, 1.0).unwrap();
        // a(∂₋e)=a(∂₊e)=1 → (U a)(x) = √(1/2)(sin((1−x)π/2)+sin(xπ/2))
        let x = 0.3;
        let want = 0.5f64.sqrt() * (((1.0 - x) * PI / 2.0).sin() + (x * PI / 2.0).sin());
        assert_abs_diff_eq!(lift.eval(1.0, 1.0, x), want, epsilon = 1e-12);
        assert!(Lift::new(PI * PI, 1.0).is_err());
    }

    #[test]
    fn gap_intervals_and_omega0() {
        let om = tree_omega0(3).unwrap();
        assert_abs_diff_eq!(om, 0.33983690945412165, epsilon = 1e-10);
        assert_abs_diff_eq!(tree_omega0(4).unwrap(), PI / 6.0, epsilon = 1e-12);
        let gaps = gap_intervals_tree(3, 13.0).unwrap();
        assert_abs_diff_eq!(gaps[0].0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gaps[0].1, 0.11548912502732887, epsilon = 1e-10);
        // k=1 halves around π²
        assert_abs_diff_eq!(gaps[1].0, (PI - om).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[1].1, PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[2].0, PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[2].1, (PI + om).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn decoupled_spectrum_merging() {
        let s = decoupled_spectrum(&[1.0, 2.0], 10.0, 3);
        assert_eq!(s[0], (0.0, 3));
        assert_abs_diff_eq!(s[1].0, PI * PI / 4.0, epsilon = 1e-12);
        assert_eq!(s[1].1, 1);
        assert_abs_diff_eq!(s[2].0, PI * PI, epsilon = 1e-12);
        assert_eq!(s[2].1, 2); // ℓ=1 k=1 and ℓ=2 k=2 coincide
        assert_eq!(s.len(), 3);

        let s2 = decoupled_spectrum(&[1.0, 1.0], 10.0, 2);
        assert_eq!(s2[1].1, 2);
    }

    #[test]
    fn trace_bound_random_h1_functions() {
        use rand::{Rng, SeedableRng};
        // Σ_v |f(v)|² ≤ (4/(ℓ₀ p₋)) ‖f‖₁² on a uniform graph
        let g = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        let fem = assemble_kirchhoff(&g, 0.02).unwrap();
        let n = fem.dof_map.n_dofs;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let norm1_sq = (f.transpose() * (&fem.system.stiffness + &fem.system.mass) * &f)[(0, 0)];
            let vertex_sq: f64 = fem.dof_map.vertex_dof.values().map(|&d| f[d] * f[d]).sum();
            assert!(vertex_sq <= 4.0 / (1.0 * 1.0) * norm1_sq + 1e-9);
        }
    }

    #[test]
    fn cutoff_function_bounds() {
        // ρ is 1 at the vertex, affine down to 0 at min{1, ℓ/2}: check
        // ‖ρ‖² ≤ p₊ and ‖ρ′‖² ≤ 2p₊/ℓ₀ by quadrature (p ≡ 1, ℓ = 1, ℓ₀ = 1)
        let lcut = 1.0f64.min(1.0 / 2.0);
        let n = 10_000;
        let (mut nsq, mut dsq) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - x / lcut).max(0.0);
            let drho = if x < lcut { -1.0 / lcut } else { 0.0 };
            nsq += rho * rho / n as f64;
            dsq += drho * drho / n as f64;
        }
        assert!(nsq <= 1.0 + 1e-9);
        assert!(dsq <= 2.0 / 1.0 + 1e-9);
    }
}
