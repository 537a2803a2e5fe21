//! Degree-normalized discrete graph Laplacian and the analytic spectral
//! sets for homogeneous trees and Sierpiński decimation.

use crate::error::{Error, Result};
use crate::graph::DiscreteGraph;
use crate::linalg;
use nalgebra::DMatrix;

pub const DENSE_LIMIT: usize = 4000;

/// S = I − D^{−1/2} A D^{−1/2}, similar to the degree-normalized Laplacian;
/// symmetric with spectrum in [0, 2].
#[derive(Debug, Clone)]
pub struct SymmetrizedLaplacian {
    pub matrix: DMatrix<f64>,
    pub degrees: Vec<usize>,
}

pub fn discrete_laplacian(g: &DiscreteGraph) -> Result<SymmetrizedLaplacian> {
    let n = g.n_vertices;
    let degrees = g.degrees();
    if degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParam("isolated vertex (degree 0)".into()));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(u, v) in &g.edges {
        if u == v {
            // a loop contributes 2 to both the degree and the diagonal count
            a[(u, u)] += 2.0;
        } else {
            a[(u, v)] += 1.0;
            a[(v, u)] += 1.0;
        }
    }
    let dinv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut s = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] -= dinv_sqrt[i] * a[(i, j)] * dinv_sqrt[j];
        }
    }
    Ok(SymmetrizedLaplacian { matrix: s, degrees })
}

/// Ascending eigenvalues (dense solve).
pub fn discrete_spectrum(lap: &SymmetrizedLaplacian) -> Result<Vec<f64>> {
    let n = lap.matrix.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit(n, DENSE_LIMIT));
    }
    let (w, _) = linalg::sym_eigen(&lap.matrix)?;
    Ok(w.iter().copied().collect())
}

/// Eigenvalues with eigenvectors of the symmetrized Laplacian.
pub fn discrete_eigenpairs(lap: &SymmetrizedLaplacian) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = lap.matrix.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit(n, DENSE_LIMIT));
    }
    let (w, v) = linalg::sym_eigen(&lap.matrix)?;
    Ok((w.iter().copied().collect(), v))
}

/// Spectral band of the degree-d₀ homogeneous tree:
/// [1 − 2√(d₀−1)/d₀, 1 + 2√(d₀−1)/d₀].
pub fn tree_band(d0: usize) -> Result<(f64, f64)> {
    if d0 < 3 {
        return Err(Error::InvalidParam("tree band needs d₀ ≥ 3".into()));
    }
    let half = 2.0 * ((d0 - 1) as f64).sqrt() / d0 as f64;
    Ok((1.0 - half, 1.0 + half))
}

/// Decimation polynomial p(z) = z(5 − 4z).
pub fn decimation_poly(z: f64) -> f64 {
    z * (5.0 - 4.0 * z)
}

/// Real preimages of t under p, i.e. roots of 4z² − 5z + t = 0, kept only
/// when real and in [0, 2].
pub fn decimation_preimages(t: f64) -> Vec<f64> {
    let disc = 25.0 - 16.0 * t;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let mut roots = vec![(5.0 - sq) / 8.0, (5.0 + sq) / 8.0];
    roots.retain(|z| (0.0..=2.0).contains(z));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    roots
}

/// D_n = {3/2} ∪ ⋃_{j ≤ n_levels} p^{−j}{3/4}, sorted and deduplicated.
pub fn sierpinski_levels(n_levels: usize) -> Vec<f64> {
    let mut out = vec![1.5];
    let mut level = vec![0.75];
    out.extend_from_slice(&level);
    for _ in 0..n_levels {
        let mut next = vec![];
        for &t in &level {
            next.extend(decimation_preimages(t));
        }
        out.extend_from_slice(&next);
        level = next;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// Level of a value in D_n: smallest j with p^{∘j}(z) = 3/4 (or None for 3/2).
pub fn decimation_level(z: f64, max_level: usize) -> Option<usize> {
    let mut v = z;
    for j in 0..=max_level {
        if (v - 0.75).abs() < 1e-9 {
            return Some(j);
        }
        v = decimation_poly(v);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, GraphKind};
    use approx::assert_abs_diff_eq;

    fn spectrum_of(kind: GraphKind) -> Vec<f64> {
        let g = generate_graph(kind).unwrap().to_discrete();
        discrete_spectrum(&discrete_laplacian(&g).unwrap()).unwrap()
    }

    #[test]
    fn k4_spectrum() {
        let s = spectrum_of(GraphKind::CompleteK4(1.0));
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-12);
        for i in 1..4 {
            assert_abs_diff_eq!(s[i], 4.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_cycle_spectrum() {
        let s = spectrum_of(GraphKind::Cycle(1.0));
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s[2], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn single_edge_and_path() {
        let g = DiscreteGraph { n_vertices: 2, edges: vec![(0, 1)] };
        let s = discrete_spectrum(&discrete_laplacian(&g).unwrap()).unwrap();
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 2.0, epsilon = 1e-12);

        let p = DiscreteGraph { n_vertices: 3, edges: vec![(0, 1), (1, 2)] };
        let s = discrete_spectrum(&discrete_laplacian(&p).unwrap()).unwrap();
        for (got, want) in s.iter().zip([0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn loop_counts_double() {
        // one vertex with a loop: deg 2, A_vv = 2 → S = 1 − 2/2 = 0
        let g = DiscreteGraph { n_vertices: 1, edges: vec![(0, 0)] };
        let l = discrete_laplacian(&g).unwrap();
        assert_eq!(l.degrees, vec![2]);
        assert_abs_diff_eq!(l.matrix[(0, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_in_unit_band_and_kernel() {
        let g = generate_graph(GraphKind::SierpinskiMetric(3, 1.0)).unwrap().to_discrete();
        let l = discrete_laplacian(&g).unwrap();
        let s = discrete_spectrum(&l).unwrap();
        assert!(s.iter().all(|&x| x >= -1e-9 && x <= 2.0 + 1e-9));
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-9);
        assert!(s[1] > 1e-9, "0 simple for connected graphs");
        // S·(D^{1/2}·1) = 0
        let d_half = nalgebra::DVector::from_iterator(
            l.degrees.len(),
            l.degrees.iter().map(|&d| (d as f64).sqrt()),
        );
        assert!((&l.matrix * d_half).norm() < 1e-10);
    }

    #[test]
    fn symmetrized_isospectral_to_random_walk_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(3..8);
            let mut edges = vec![];
            for i in 1..n {
                edges.push((rng.gen_range(0..i), i));
            }
            edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
            let g = DiscreteGraph { n_vertices: n, edges };
            let l = discrete_laplacian(&g).unwrap();
            let s_sym = discrete_spectrum(&l).unwrap();
            // non-symmetric form D^{-1}L_adj: build and take eigenvalues via
            // the similarity D^{1/2} S D^{-1/2} — check matrix similarity
            // numerically by comparing characteristic action on random vectors
            let nn = l.matrix.nrows();
            let mut dinv = DMatrix::<f64>::zeros(nn, nn);
            let mut dsq = DMatrix::<f64>::zeros(nn, nn);
            for i in 0..nn {
                dinv[(i, i)] = 1.0 / (l.degrees[i] as f64).sqrt();
                dsq[(i, i)] = (l.degrees[i] as f64).sqrt();
            }
            let walk = &dinv * &l.matrix * &dsq; // = D^{-1} L_adjacency
            // eigenvalues of a (generally nonsymmetric but similar) matrix:
            // compare via symmetric eigensolve of S against trace powers
            let tr1: f64 = walk.trace();
            let s1: f64 = s_sym.iter().sum();
            assert_abs_diff_eq!(tr1, s1, epsilon = 1e-9);
            let tr2: f64 = (&walk * &walk).trace();
            let s2: f64 = s_sym.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(tr2, s2, epsilon = 1e-9);
        }
    }

    #[test]
    fn tree_band_values() {
        let (a, b) = tree_band(3).unwrap();
        assert_abs_diff_eq!(a, 0.05719095841793653, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.9428090415820636, epsilon = 1e-12);
        let (a4, b4) = tree_band(4).unwrap();
        assert_abs_diff_eq!(a4, 0.1339745962155614, epsilon = 1e-12);
        assert_abs_diff_eq!(b4, 1.8660254037844386, epsilon = 1e-12);
        assert!(tree_band(2).is_err());
        // strictly inside (0,2)
        for d0 in 3..20 {
            let (lo, hi) = tree_band(d0).unwrap();
            assert!(lo > 0.0 && hi < 2.0);
        }
    }

    #[test]
    fn sierpinski_level_sets() {
        let d0 = sierpinski_levels(0);
        assert_eq!(d0.len(), 2);
        assert_abs_diff_eq!(d0[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d0[1], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(decimation_poly(0.75), 1.5, epsilon = 1e-15);

        let d1 = sierpinski_levels(1);
        // adds (5±√13)/8
        let lo = (5.0 - 13.0f64.sqrt()) / 8.0;
        let hi = (5.0 + 13.0f64.sqrt()) / 8.0;
        assert!(d1.iter().any(|&z| (z - lo).abs() < 1e-12));
        assert!(d1.iter().any(|&z| (z - hi).abs() < 1e-12));
        assert_abs_diff_eq!(lo, 0.17430609056700136, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0756939094329987, epsilon = 1e-12);

        // nesting and residual property
        let d3 = sierpinski_levels(3);
        for &z in &d1 {
            assert!(d3.iter().any(|&w| (w - z).abs() < 1e-12));
        }
        for &z in &d3 {
            if (z - 1.5).abs() < 1e-12 {
                continue;
            }
            let j = decimation_level(z, 3).expect("every level value maps back to 3/4");
            let mut v = z;
            for _ in 0..j {
                v = decimation_poly(v);
            }
            assert!((v - 0.75).abs() < 1e-10);
        }
    }
}
