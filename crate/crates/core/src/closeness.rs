//! Quantitative closeness of two self-adjoint operators living on
//! different Hilbert spaces, measured through quasi-unitary identification
//! maps: scales of spaces, weighted operator norms, the six defect
//! quantities whose maximum is δ, and numeric verification of the bounds
//! that follow (resolvent comparison, functional calculus, spectral
//! projections, eigenvector transfer, spectral distance). Also constructs
//! the concrete identification maps between a metric-graph P1 space and
//! the P1 space of its thin 2D neighborhood.

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::graph::MetricGraph;
use crate::linalg;
use crate::manifold::{assemble_neumann, build_thin_mesh, EmbeddedGraph, RegionTag, ThinMesh};
use crate::quantum::{assemble_kirchhoff_with_nodes, GraphFem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};

// ---------------------------------------------------------------------------
// Scale of spaces and weighted norms
// ---------------------------------------------------------------------------

/// A FEM pair (K, M) with its full spectral decomposition, giving access
/// to the whole scale of norms ‖u‖_k = ‖(H+1)^{k/2}u‖ for any real k.
#[derive(Debug)]
pub struct ScaledSpace {
    pub sys: FemSystem,
}

impl ScaledSpace {
    pub fn new(sys: FemSystem) -> Result<Self> {
        sys.spectral()?;
        Ok(ScaledSpace { sys })
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.sys.spectral().unwrap().0
    }

    /// M-orthonormal eigenvector basis V (columns), VᵀMV = I.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.sys.spectral().unwrap().1
    }

    /// Spectral coefficients c = VᵀMu.
    pub fn coeffs(&self, u: &DVector<f64>) -> DVector<f64> {
        self.basis().transpose() * (&self.sys.mass * u)
    }

    pub fn norm_k(&self, u: &DVector<f64>, k: f64) -> f64 {
        let c = self.coeffs(u);
        let w = self.eigenvalues();
        (0..c.len()).map(|i| (1.0 + w[i]).powf(k) * c[i] * c[i]).sum::<f64>().sqrt()
    }

    /// f(H) as a matrix, f applied to the eigenvalues.
    pub fn func_calc(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = self.basis();
        let w = self.eigenvalues();
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(w[j]);
        }
        scaled * v.transpose() * &self.sys.mass
    }

    /// (H+1)⁻¹.
    pub fn resolvent(&self) -> DMatrix<f64> {
        self.func_calc(|l| 1.0 / (1.0 + l))
    }
}

fn weighted_sigma_max(c: &DMatrix<f64>, row_w: &[f64], col_w: &[f64]) -> Result<f64> {
    let mut b = c.clone();
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            b[(i, j)] *= row_w[i] * col_w[j];
        }
    }
    linalg::spectral_norm(&b)
}

fn weights(eigs: &DVector<f64>, k: f64) -> Vec<f64> {
    eigs.iter().map(|&l| (1.0 + l).powf(k / 2.0)).collect()
}

/// ‖A‖_{k_source → k_target} = sup ‖Au‖_{k_target}/‖u‖_{k_source}, computed
/// spectrally as the largest singular value of the doubly weighted
/// coefficient matrix of A.
pub fn op_norm(a: &DMatrix<f64>, src: &ScaledSpace, dst: &ScaledSpace, ks: f64, kt: f64) -> Result<f64> {
    if a.ncols() != src.dim() || a.nrows() != dst.dim() {
        return Err(Error::DimensionMismatch(format!(
            "op_norm: A is {}×{}, spaces are {} → {}",
            a.nrows(),
            a.ncols(),
            src.dim(),
            dst.dim()
        )));
    }
    let c = dst.basis().transpose() * (&dst.sys.mass * a) * src.basis();
    weighted_sigma_max(&c, &weights(dst.eigenvalues(), kt), &weights(src.eigenvalues(), -ks))
}

/// Norm of a bilinear defect D (rows indexed by the source space, columns
/// by the target space): sup |fᵀDu| / (‖f‖_{ks}‖u‖_{kt}).
pub fn form_norm(d: &DMatrix<f64>, src: &ScaledSpace, dst: &ScaledSpace, ks: f64, kt: f64) -> Result<f64> {
    if d.nrows() != src.dim() || d.ncols() != dst.dim() {
        return Err(Error::DimensionMismatch(format!(
            "form_norm: D is {}×{}, spaces are {} / {}",
            d.nrows(),
            d.ncols(),
            src.dim(),
            dst.dim()
        )));
    }
    let c = src.basis().transpose() * d * dst.basis();
    weighted_sigma_max(&c, &weights(src.eigenvalues(), -ks), &weights(dst.eigenvalues(), -kt))
}

// ---------------------------------------------------------------------------
// Identification maps and δ measurement
// ---------------------------------------------------------------------------

/// Quasi-unitary identification maps: J, J₁ map the source (graph) space
/// into the target (manifold) space, J′, J₁′ map back.
#[derive(Debug, Clone)]
pub struct IdentificationSet {
    pub j: DMatrix<f64>,
    pub j1: DMatrix<f64>,
    pub jp: DMatrix<f64>,
    pub j1p: DMatrix<f64>,
    /// order of the closeness (source-side norm index)
    pub k: f64,
    pub eps: f64,
    /// max |J′J − I| (quadrature defect of the one-sided inverse)
    pub jpj_defect: f64,
}

impl IdentificationSet {
    pub fn exact_unitary(n: usize, k: f64) -> Self {
        let id = DMatrix::identity(n, n);
        IdentificationSet { j: id.clone(), j1: id.clone(), jp: id.clone(), j1p: id, k, eps: 0.0, jpj_defect: 0.0 }
    }
}

/// The six measured defect quantities whose maximum is δ.
#[derive(Debug, Clone, Copy)]
pub struct DeltaReport {
    pub d_scale: f64,
    pub d_scale_p: f64,
    pub d_adj: f64,
    pub d_comm: f64,
    pub d_inv: f64,
    pub d_inv_p: f64,
    pub norm_j: f64,
    pub norm_jp: f64,
    pub k: f64,
    pub m: f64,
}

impl DeltaReport {
    pub fn delta(&self) -> f64 {
        [self.d_scale, self.d_scale_p, self.d_adj, self.d_comm, self.d_inv, self.d_inv_p]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// boundedness requirement ‖J‖, ‖J′‖ ≤ 2
    pub fn bounded(&self) -> bool {
        self.norm_j <= 2.0 && self.norm_jp <= 2.0
    }

    pub fn to_text(&self) -> String {
        format!(
            "delta_scale   = {:.12e}\ndelta_scale'  = {:.12e}\ndelta_adj     = {:.12e}\n\
             delta_comm    = {:.12e}\ndelta_inv     = {:.12e}\ndelta_inv'    = {:.12e}\n\
             norm_J        = {:.12e}\nnorm_J'       = {:.12e}\ndelta         = {:.12e}\n\
             order k = {}, m = {}\n",
            self.d_scale,
            self.d_scale_p,
            self.d_adj,
            self.d_comm,
            self.d_inv,
            self.d_inv_p,
            self.norm_j,
            self.norm_jp,
            self.delta(),
            self.k,
            self.m
        )
    }
}

/// Coefficient matrices of the identification maps in the two eigenbases;
/// everything downstream (δ, resolvent defects, projections) reduces to
/// cheap diagonal manipulations of these.
struct CoeffMats {
    e_j: DMatrix<f64>,
    e_j1: DMatrix<f64>,
    e_jp: DMatrix<f64>,
    e_j1p: DMatrix<f64>,
}

fn coeff_mats(src: &ScaledSpace, dst: &ScaledSpace, ids: &IdentificationSet) -> Result<CoeffMats> {
    if ids.j.ncols() != src.dim() || ids.j.nrows() != dst.dim() {
        return Err(Error::DimensionMismatch("identification maps do not match the spaces".into()));
    }
    let vt_m = dst.basis().transpose() * &dst.sys.mass; // Ṽᵀ M̃ = Ṽ⁻¹
    let v_m = src.basis().transpose() * &src.sys.mass;
    Ok(CoeffMats {
        e_j: &vt_m * &ids.j * src.basis(),
        e_j1: &vt_m * &ids.j1 * src.basis(),
        e_jp: &v_m * &ids.jp * dst.basis(),
        e_j1p: &v_m * &ids.j1p * dst.basis(),
    })
}

/// Measure the six closeness conditions for the pair, each as an exact
/// weighted operator/form norm of the corresponding defect matrix.
pub fn measure_closeness(src: &ScaledSpace, dst: &ScaledSpace, ids: &IdentificationSet) -> Result<DeltaReport> {
    let k = ids.k;
    let m = (k - 2.0).max(0.0);
    let c = coeff_mats(src, dst, ids)?;
    let lg = src.eigenvalues();
    let lt = dst.eigenvalues();
    let w0g = vec![1.0; src.dim()];
    let w0t = vec![1.0; dst.dim()];
    let d_scale = weighted_sigma_max(&(&c.e_j - &c.e_j1), &w0t, &weights(lg, -k))?;
    let d_scale_p = weighted_sigma_max(&(&c.e_jp - &c.e_j1p), &w0g, &weights(lt, -1.0))?;
    // adjointness defect ⟨Jf,u⟩ − ⟨f,J′u⟩ in the plain norms
    let d_adj = linalg::spectral_norm(&(c.e_j.transpose() - &c.e_jp))?;
    // form-commutator h̃(J₁f,u) − h(f,J₁′u) with weights ‖f‖_k, ‖u‖₁
    let mut comm = c.e_j1.transpose();
    for (q, mut col) in comm.column_iter_mut().enumerate() {
        col *= lt[q];
    }
    let mut kj1p = c.e_j1p.clone();
    for (i, mut row) in kj1p.row_iter_mut().enumerate() {
        row *= lg[i];
    }
    let d_comm = weighted_sigma_max(&(comm - kj1p), &weights(lg, -k), &weights(lt, -1.0))?;
    let d_inv = weighted_sigma_max(
        &(DMatrix::identity(src.dim(), src.dim()) - &c.e_jp * &c.e_j),
        &w0g,
        &weights(lg, -k),
    )?;
    let d_inv_p = weighted_sigma_max(
        &(DMatrix::identity(dst.dim(), dst.dim()) - &c.e_j * &c.e_jp),
        &w0t,
        &weights(lt, -1.0),
    )?;
    Ok(DeltaReport {
        d_scale,
        d_scale_p,
        d_adj,
        d_comm,
        d_inv,
        d_inv_p,
        norm_j: linalg::spectral_norm(&c.e_j)?,
        norm_jp: linalg::spectral_norm(&c.e_jp)?,
        k,
        m,
    })
}

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ResolventReport {
    /// ‖R̃^j J − J R^j‖_{m→0} for j = 1..=powers
    pub defects: Vec<f64>,
    /// 4jδ
    pub bounds: Vec<f64>,
    pub pass: bool,
}

/// Resolvent comparison: the defect of intertwining the two resolvents
/// through J is at most 4δ, and 4jδ for the j-th powers.
pub fn verify_resolvent(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    delta: f64,
    powers: usize,
) -> Result<ResolventReport> {
    let m = (ids.k - 2.0).max(0.0);
    let c = coeff_mats(src, dst, ids)?;
    let rg: Vec<f64> = src.eigenvalues().iter().map(|&l| 1.0 / (1.0 + l)).collect();
    let rt: Vec<f64> = dst.eigenvalues().iter().map(|&l| 1.0 / (1.0 + l)).collect();
    let mut defects = vec![];
    let mut bounds = vec![];
    for j in 1..=powers {
        let mut d = c.e_j.clone();
        for (q, mut row) in d.row_iter_mut().enumerate() {
            row *= rt[q].powi(j as i32);
        }
        let mut e = c.e_j.clone();
        for (i, mut col) in e.column_iter_mut().enumerate() {
            col *= rg[i].powi(j as i32);
        }
        defects.push(weighted_sigma_max(&(d - e), &vec![1.0; dst.dim()], &weights(src.eigenvalues(), -m))?);
        bounds.push(4.0 * j as f64 * delta);
    }
    let pass = defects.iter().zip(&bounds).all(|(d, b)| *d <= b + BOUND_SLACK);
    Ok(ResolventReport { defects, bounds, pass })
}

/// Near-isometry of J: |‖Jf‖ − ‖f‖| ≤ √(3δ)·‖f‖₁, checked on random
/// vectors. Returns (worst excess over the bound, pass).
pub fn quasi_isometry_gap(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    delta: f64,
    rng: &mut ChaCha8Rng,
    trials: usize,
) -> Result<(f64, bool)> {
    let dp = (3.0 * delta).sqrt();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let f = DVector::from_fn(src.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let n0 = src.norm_k(&f, 0.0);
        let n1 = src.norm_k(&f, 1.0);
        let nj = dst.norm_k(&(&ids.j * &f), 0.0);
        worst = worst.max((nj - n0).abs() - dp * n1);
    }
    Ok((worst, worst <= BOUND_SLACK))
}

/// p(H̃)J − Jp(H) for a polynomial p in the resolvent, p(λ) = Σ aⱼ(λ+1)⁻ʲ,
/// against the triangle-inequality bound Σ|aⱼ|·4jδ.
pub fn functional_calculus_gap(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    coeffs: &[f64],
    delta: f64,
) -> Result<(f64, f64, bool)> {
    let m = (ids.k - 2.0).max(0.0);
    let c = coeff_mats(src, dst, ids)?;
    let rg: Vec<f64> = src.eigenvalues().iter().map(|&l| 1.0 / (1.0 + l)).collect();
    let rt: Vec<f64> = dst.eigenvalues().iter().map(|&l| 1.0 / (1.0 + l)).collect();
    let mut defect = DMatrix::<f64>::zeros(dst.dim(), src.dim());
    let mut bound = 0.0;
    for (j, &a) in coeffs.iter().enumerate() {
        for q in 0..dst.dim() {
            for i in 0..src.dim() {
                defect[(q, i)] += a * (rt[q].powi(j as i32) - rg[i].powi(j as i32)) * c.e_j[(q, i)];
            }
        }
        bound += a.abs() * 4.0 * j as f64 * delta;
    }
    let measured = weighted_sigma_max(&defect, &vec![1.0; dst.dim()], &weights(src.eigenvalues(), -m))?;
    Ok((measured, bound, measured <= bound + BOUND_SLACK))
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionReport {
    pub dim_src: usize,
    pub dim_dst: usize,
    /// min over an M-orthonormal eigenbasis of ran 𝟙_I(H) of ‖P̃Jf‖/‖f‖
    /// (expected ≥ ½ only for small δ; reported, not asserted)
    pub min_ratio: f64,
    pub pass: bool,
}

/// Compare the ranks of the two spectral projections on an interval whose
/// endpoints avoid both spectra by `margin`.
pub fn projection_check(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    interval: (f64, f64),
    margin: f64,
) -> Result<ProjectionReport> {
    let (lo, hi) = interval;
    for l in src.eigenvalues().iter().chain(dst.eigenvalues().iter()) {
        if (l - lo).abs() < margin || (l - hi).abs() < margin {
            return Err(Error::InvalidParam(format!(
                "interval endpoint within margin {margin} of spectrum point {l}"
            )));
        }
    }
    let in_i = |l: f64| l > lo && l < hi;
    let src_idx: Vec<usize> = (0..src.dim()).filter(|&i| in_i(src.eigenvalues()[i])).collect();
    let dst_sel: Vec<bool> = dst.eigenvalues().iter().map(|&l| in_i(l)).collect();
    let dim_dst = dst_sel.iter().filter(|&&b| b).count();
    let mut min_ratio = 1.0f64;
    if !src_idx.is_empty() {
        let c = coeff_mats(src, dst, ids)?;
        for &i in &src_idx {
            let norm_pj: f64 = (0..dst.dim())
                .filter(|&q| dst_sel[q])
                .map(|q| c.e_j[(q, i)] * c.e_j[(q, i)])
                .sum::<f64>()
                .sqrt();
            min_ratio = min_ratio.min(norm_pj); // ‖f‖ = 1 in the eigenbasis
        }
    }
    Ok(ProjectionReport { dim_src: src_idx.len(), dim_dst, min_ratio, pass: src_idx.len() == dim_dst })
}

#[derive(Debug, Clone, Copy)]
pub struct EigenvectorReport {
    pub lambda: f64,
    /// ⟨P̃Jφ, Jφ⟩ — the transfer is valid when this is ≥ ¼
    pub ip: f64,
    pub valid: bool,
    /// ‖Jφ − φ̃‖
    pub distance: f64,
    /// measured ‖𝟙_I(H̃)J − J𝟙_I(H)‖_{m→0}
    pub eta_ind: f64,
    /// η₁ = 17·η_ind + 3δ
    pub eta1: f64,
    pub forward_ok: bool,
    /// ‖J′φ̃ − φ‖ against η₂ = 2η₁ + δ(1+λ)
    pub back_distance: f64,
    pub eta2: f64,
    pub backward_ok: bool,
}

/// Transfer the eigenvector of a simple eigenvalue λ = λ_index of the
/// source operator through J: φ̃ = P̃Jφ/⟨P̃Jφ, Jφ⟩ with P̃ the target
/// spectral projection on the interval.
pub fn eigenvector_closeness(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    index: usize,
    interval: (f64, f64),
    delta: f64,
) -> Result<EigenvectorReport> {
    let m = (ids.k - 2.0).max(0.0);
    let (lo, hi) = interval;
    let lambda = src.eigenvalues()[index];
    let in_src: Vec<usize> = (0..src.dim()).filter(|&i| {
        let l = src.eigenvalues()[i];
        l > lo && l < hi
    }).collect();
    if in_src != [index] {
        return Err(Error::InvalidParam(format!(
            "interval ({lo}, {hi}) must isolate exactly the eigenvalue at index {index}; found {} source eigenvalues",
            in_src.len()
        )));
    }
    let c = coeff_mats(src, dst, ids)?;
    let sel: Vec<bool> = dst.eigenvalues().iter().map(|&l| l > lo && l < hi).collect();
    // coefficients of Jφ in the target eigenbasis
    let cj: Vec<f64> = (0..dst.dim()).map(|q| c.e_j[(q, index)]).collect();
    let ip: f64 = (0..dst.dim()).filter(|&q| sel[q]).map(|q| cj[q] * cj[q]).sum();
    let valid = ip >= 0.25;
    let mut dist_sq = 0.0;
    let mut phit = vec![0.0; dst.dim()];
    for q in 0..dst.dim() {
        if sel[q] {
            phit[q] = cj[q] / ip;
        }
        dist_sq += (cj[q] - phit[q]) * (cj[q] - phit[q]);
    }
    let distance = dist_sq.sqrt();
    // η for ψ = 𝟙_I
    let mut ind_defect = DMatrix::<f64>::zeros(dst.dim(), src.dim());
    for q in 0..dst.dim() {
        for i in 0..src.dim() {
            let it = if sel[q] { 1.0 } else { 0.0 };
            let is = if i == index { 1.0 } else { 0.0 };
            ind_defect[(q, i)] = (it - is) * c.e_j[(q, i)];
        }
    }
    let eta_ind = weighted_sigma_max(&ind_defect, &vec![1.0; dst.dim()], &weights(src.eigenvalues(), -m))?;
    let eta1 = 17.0 * eta_ind + 3.0 * delta;
    // J′φ̃ back in the source space
    let phit_v = DVector::from_vec(phit);
    let back = &c.e_jp * &phit_v;
    let mut back_sq = 0.0;
    for i in 0..src.dim() {
        let want = if i == index { 1.0 } else { 0.0 };
        back_sq += (back[i] - want) * (back[i] - want);
    }
    let back_distance = back_sq.sqrt();
    let eta2 = 2.0 * eta1 + delta * (1.0 + lambda);
    Ok(EigenvectorReport {
        lambda,
        ip,
        valid,
        distance,
        eta_ind,
        eta1,
        forward_ok: !valid || distance <= eta1 + BOUND_SLACK,
        back_distance,
        eta2,
        backward_ok: !valid || back_distance <= eta2 + BOUND_SLACK,
    })
}

// ---------------------------------------------------------------------------
// Spectral distance
// ---------------------------------------------------------------------------

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParam("Hausdorff distance needs nonempty sets".into()));
    }
    let one_way = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|&p| y.iter().map(|&q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_way(a, b).max(one_way(b, a)))
}

/// d̄(A,B) = d((A+1)⁻¹, (B+1)⁻¹): the Hausdorff distance of the
/// resolvent-mapped sets (insensitive to the high end of the spectrum).
pub fn hausdorff_resolvent(a: &[f64], b: &[f64]) -> Result<f64> {
    let map = |s: &[f64]| s.iter().map(|&l| 1.0 / (1.0 + l)).collect::<Vec<_>>();
    hausdorff(&map(a), &map(b))
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralDistance {
    /// d̄ between all eigenvalues ≤ λmax
    pub d_bar: f64,
    /// d̄ between the isolated eigenvalues only (NaN when a side has none)
    pub d_bar_discrete: f64,
}

/// d̄ between the two computed spectra restricted to [0, λmax]; the
/// "discrete" variant keeps only eigenvalues isolated from their distinct
/// neighbors by at least `gap`.
pub fn spectral_distance_report(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    lambda_max: f64,
    gap: f64,
) -> Result<SpectralDistance> {
    let trunc = |s: &DVector<f64>| s.iter().copied().filter(|&l| l <= lambda_max).collect::<Vec<_>>();
    let a = trunc(src.eigenvalues());
    let b = trunc(dst.eigenvalues());
    let d_bar = hausdorff_resolvent(&a, &b)?;
    let isolated = |s: &[f64]| -> Vec<f64> {
        let mut uniq: Vec<f64> = vec![];
        for &l in s {
            if uniq.last().map_or(true, |&u| (l - u) > 1e-9) {
                uniq.push(l);
            }
        }
        uniq.iter()
            .enumerate()
            .filter(|&(i, &l)| {
                let left = if i == 0 { f64::INFINITY } else { l - uniq[i - 1] };
                let right = if i + 1 == uniq.len() { f64::INFINITY } else { uniq[i + 1] - l };
                left >= gap && right >= gap
            })
            .map(|(_, &l)| l)
            .collect()
    };
    let (ia, ib) = (isolated(&a), isolated(&b));
    let d_bar_discrete = if ia.is_empty() || ib.is_empty() {
        f64::NAN
    } else {
        hausdorff_resolvent(&ia, &ib)?
    };
    Ok(SpectralDistance { d_bar, d_bar_discrete })
}

/// Explicit eigenvalue-difference bound from the min-max principle:
/// |λ_k − λ̃_k| ≤ [(λ+2+a)²/(1 − δ(λ+1+a))]·δ with a = (λ+2)²δ/(1−δ(λ+1)).
pub fn minmax_bound(lambda_k: f64, delta: f64) -> Result<f64> {
    let d1 = 1.0 - delta * (lambda_k + 1.0);
    if d1 <= 0.0 {
        return Err(Error::InvalidParam(format!("minmax bound vacuous: 1 − δ(λ+1) = {d1} ≤ 0")));
    }
    let a = (lambda_k + 2.0).powi(2) * delta / d1;
    let d2 = 1.0 - delta * (lambda_k + 1.0 + a);
    if d2 <= 0.0 {
        return Err(Error::InvalidParam(format!("minmax bound vacuous: inner denominator {d2} ≤ 0")));
    }
    Ok((lambda_k + 2.0 + a).powi(2) / d2 * delta)
}

/// Hypotheses of the min-max eigenvalue comparison, checked as minimum
/// eigenvalues of the two symmetric matrices (≥ −slack ⇒ satisfied):
/// K + δ(K+M) − J₁ᵀK̃J₁ and M + δ(K+M) − J₁ᵀM̃J₁.
#[derive(Debug, Clone, Copy)]
pub struct PsdHypotheses {
    pub quad_min_eig: f64,
    pub norm_min_eig: f64,
}

pub fn closeness_psd_checks(
    src: &ScaledSpace,
    dst: &ScaledSpace,
    ids: &IdentificationSet,
    delta: f64,
) -> Result<PsdHypotheses> {
    let kq = &src.sys.stiffness + (&src.sys.stiffness + &src.sys.mass) * delta
        - ids.j1.transpose() * &dst.sys.stiffness * &ids.j1;
    let nq = &src.sys.mass + (&src.sys.stiffness + &src.sys.mass) * delta
        - ids.j1.transpose() * &dst.sys.mass * &ids.j1;
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let (wq, _) = linalg::sym_eigen(&sym(kq))?;
    let (wn, _) = linalg::sym_eigen(&sym(nq))?;
    Ok(PsdHypotheses { quad_min_eig: wq[0], norm_min_eig: wn[0] })
}

// ---------------------------------------------------------------------------
// Concrete graph ↔ thin-neighborhood identification
// ---------------------------------------------------------------------------

/// Build J, J₁, J′, J₁′ between the 1D metric-graph P1 space (whose nodes
/// are the stretched images of the 2D mesh cross-columns) and the 2D P1
/// space on the thin mesh.
///
/// Jf samples ε^{−1/2}f at the edge-strip nodes and is 0 on vertex-region
/// interiors; J₁ additionally extends f(v) into the vertex regions and
/// caps. J′u takes ε^{1/2}·(trapezoid transversal average) along each
/// cross-column (vertex value: mean over incident interface columns), so
/// J′J = I exactly; J₁′ adds the cutoff correction ρ(x)·(C_v u − N_e u(v))
/// with C_v the region mean.
pub fn build_identification(
    gf: &GraphFem,
    mesh: &ThinMesh,
    eg: &EmbeddedGraph,
    eps: f64,
) -> Result<IdentificationSet> {
    if (mesh.eps - eps).abs() > 1e-15 {
        return Err(Error::InvalidParam(format!("ε mismatch: mesh has {}, requested {}", mesh.eps, eps)));
    }
    let n1 = gf.dof_map.n_dofs;
    let n2 = mesh.nodes.len();
    let s = eps.powf(-0.5);
    let sp = eps.sqrt();
    let h_rel = mesh.h_rel;

    // degree of each vertex (mesh half-edges)
    let mut degree: HashMap<u64, usize> = HashMap::new();
    for e in &eg.edges {
        *degree.entry(e.tail).or_insert(0) += 1;
        *degree.entry(e.head).or_insert(0) += 1;
    }

    let mut j = DMatrix::<f64>::zeros(n2, n1);
    let mut colset: HashSet<usize> = HashSet::new();
    for (k, e) in eg.edges.iter().enumerate() {
        let cols = &mesh.edge_columns[k];
        let dofs = &gf.dof_map.edge_dofs[k];
        if cols.cols.len() != dofs.len() {
            return Err(Error::DimensionMismatch(format!(
                "edge {}: {} mesh columns vs {} graph nodes",
                e.id,
                cols.cols.len(),
                dofs.len()
            )));
        }
        for (i, col) in cols.cols.iter().enumerate() {
            for &q in col {
                j[(q, dofs[i].0)] = s;
                colset.insert(q);
            }
        }
    }

    // classify non-column nodes by their region
    let mut vertex_nodes: HashMap<usize, HashSet<usize>> = HashMap::new();
    let mut cap_nodes: HashMap<(usize, bool), HashSet<usize>> = HashMap::new();
    for (t, tag) in mesh.tris.iter().zip(&mesh.tags) {
        for &q in t {
            if colset.contains(&q) {
                continue;
            }
            match *tag {
                RegionTag::Vertex(vi) | RegionTag::Collar { vertex: vi, .. } => {
                    vertex_nodes.entry(vi).or_default().insert(q);
                }
                RegionTag::Cap { edge, at_head } => {
                    cap_nodes.entry((edge, at_head)).or_default().insert(q);
                }
                RegionTag::Edge(_) => {}
            }
        }
    }
    let vertex_dof = |vid: u64| -> Result<usize> {
        gf.dof_map.vertex_dof.get(&vid).copied().ok_or(Error::UnknownVertex(vid))
    };
    let mut j1 = j.clone();
    for (&vi, nodes) in &vertex_nodes {
        let dof = vertex_dof(eg.vertex_ids[vi])?;
        for &q in nodes {
            j1[(q, dof)] = s;
        }
    }
    for (&(k, at_head), nodes) in &cap_nodes {
        let e = &eg.edges[k];
        let dof = vertex_dof(if at_head { e.head } else { e.tail })?;
        for &q in nodes {
            j1[(q, dof)] = s;
        }
    }

    // transversal trapezoid average over one cross-column
    let mut trap = vec![1.0 / h_rel as f64; h_rel + 1];
    trap[0] = 0.5 / h_rel as f64;
    trap[h_rel] = 0.5 / h_rel as f64;
    let colavg = |k: usize, i: usize| -> DVector<f64> {
        let mut v = DVector::zeros(n2);
        for (jj, &q) in mesh.edge_columns[k].cols[i].iter().enumerate() {
            v[q] += trap[jj];
        }
        v
    };

    let mut jp = DMatrix::<f64>::zeros(n1, n2);
    for (k, e) in eg.edges.iter().enumerate() {
        let dofs = &gf.dof_map.edge_dofs[k];
        let last = dofs.len() - 1;
        for i in 0..dofs.len() {
            let avg = colavg(k, i);
            let factor = if i == 0 {
                1.0 / degree[&e.tail] as f64
            } else if i == last {
                1.0 / degree[&e.head] as f64
            } else {
                1.0
            };
            for q in 0..n2 {
                jp[(dofs[i].0, q)] += sp * factor * avg[q];
            }
        }
    }

    // region mean functionals (area-weighted nodal quadrature)
    let region_mean = |pred: &dyn Fn(RegionTag) -> bool| -> Option<DVector<f64>> {
        let mut wts = DVector::zeros(n2);
        let mut vol = 0.0;
        for t in 0..mesh.tris.len() {
            if !pred(mesh.tags[t]) {
                continue;
            }
            let area = mesh.triangle_area(t);
            vol += area;
            for &q in &mesh.tris[t] {
                wts[q] += area / 3.0;
            }
        }
        if vol > 0.0 {
            Some(wts / vol)
        } else {
            None
        }
    };
    let mut c_vertex: HashMap<usize, DVector<f64>> = HashMap::new();
    for vi in 0..eg.vertex_ids.len() {
        if let Some(m) = region_mean(&|t: RegionTag| t.vertex_region() == Some(vi)) {
            c_vertex.insert(vi, m);
        }
    }
    let mut c_cap: HashMap<(usize, bool), DVector<f64>> = HashMap::new();
    for k in 0..eg.edges.len() {
        for at_head in [false, true] {
            if let Some(m) = region_mean(&|t: RegionTag| t == RegionTag::Cap { edge: k, at_head }) {
                c_cap.insert((k, at_head), m);
            }
        }
    }
    let end_mean = |k: usize, at_head: bool| -> Result<&DVector<f64>> {
        let e = &eg.edges[k];
        let vid = if at_head { e.head } else { e.tail };
        if degree[&vid] >= 2 {
            let vi = eg.vertex_index(vid)?;
            c_vertex.get(&vi).ok_or_else(|| Error::InvalidParam(format!("vertex {vid} has no meshed region")))
        } else {
            c_cap
                .get(&(k, at_head))
                .ok_or_else(|| Error::InvalidParam(format!("edge {k} end has no cap region")))
        }
    };

    let mut j1p = DMatrix::<f64>::zeros(n1, n2);
    for (k, e) in eg.edges.iter().enumerate() {
        let dofs = &gf.dof_map.edge_dofs[k];
        let last = dofs.len() - 1;
        let nu0 = colavg(k, 0);
        let nul = colavg(k, last);
        let c_tail = end_mean(k, false)?.clone();
        let c_head = end_mean(k, true)?.clone();
        let lcut = 1.0f64.min(e.length / 2.0);
        for i in 0..dofs.len() {
            let x = dofs[i].1;
            let rm = (1.0 - x / lcut).max(0.0);
            let rp = (1.0 - (e.length - x) / lcut).max(0.0);
            let row = colavg(k, i) + (&c_tail - &nu0) * rm + (&c_head - &nul) * rp;
            let factor = if i == 0 {
                1.0 / degree[&e.tail] as f64
            } else if i == last {
                1.0 / degree[&e.head] as f64
            } else {
                1.0
            };
            for q in 0..n2 {
                j1p[(dofs[i].0, q)] += sp * factor * row[q];
            }
        }
    }

    let jpj_defect = (&jp * &j - DMatrix::identity(n1, n1)).amax();
    Ok(IdentificationSet { j, j1, jp, j1p, k: 1.0, eps, jpj_defect })
}

/// A metric graph, its thin 2D neighborhood, and the identification maps
/// between the two P1 spaces, ready for δ measurement.
pub struct GraphManifoldPair {
    pub graph: ScaledSpace,
    pub manifold: ScaledSpace,
    pub ids: IdentificationSet,
    pub mesh: ThinMesh,
    pub metric_graph: MetricGraph,
}

/// Mesh the ε-neighborhood, assemble both P1 systems (with the 1D nodes
/// placed at the stretched images of the 2D cross-columns so that J′J = I
/// holds exactly), and build the identification maps.
pub fn build_pair(eg: &EmbeddedGraph, eps: f64, h_rel: usize) -> Result<GraphManifoldPair> {
    let mesh = build_thin_mesh(eg, eps, h_rel)?;
    let g = eg.to_metric()?;
    let d = mesh.offset;
    let nodes: Vec<Vec<f64>> = eg
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let span = e.length - 2.0 * d;
            mesh.edge_columns[k]
                .xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == 0 {
                        0.0
                    } else if i + 1 == mesh.edge_columns[k].xs.len() {
                        e.length
                    } else {
                        (x - d) * e.length / span
                    }
                })
                .collect()
        })
        .collect();
    let gf = assemble_kirchhoff_with_nodes(&g, &nodes)?;
    let ids = build_identification(&gf, &mesh, eg, eps)?;
    let manifold = ScaledSpace::new(assemble_neumann(&mesh)?)?;
    let graph = ScaledSpace::new(gf.system.clone())?;
    Ok(GraphManifoldPair { graph, manifold, ids, mesh, metric_graph: g })
}

/// First eigenvalue index that is simple and isolated from its neighbors
/// by a relative gap (skipping the kernel at index 0).
pub fn pick_simple_eigenvalue(space: &ScaledSpace, rel_gap: f64) -> Option<usize> {
    let w = space.eigenvalues();
    for i in 1..w.len() {
        let l = w[i];
        if l < 1e-8 {
            continue;
        }
        let left = l - w[i - 1];
        let right = if i + 1 < w.len() { w[i + 1] - l } else { f64::INFINITY };
        if left > rel_gap * l && right > rel_gap * l {
            return Some(i);
        }
    }
    None
}

/// One ε entry of the closeness sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub report: DeltaReport,
    pub resolvent_defect: f64,
    pub bound_4delta: f64,
    pub d_bar: f64,
    pub graph_eigs: Vec<f64>,
    pub manifold_eigs: Vec<f64>,
    /// ‖Jφ − φ̃‖ for the first simple isolated nonzero eigenvalue, if any
    pub eigenvector_distance: Option<f64>,
}

/// Measure δ, the resolvent defect, the spectral distance, and the
/// eigenvector transfer for each ε (strictly decreasing list expected).
pub fn closeness_sweep(
    eg: &EmbeddedGraph,
    eps_list: &[f64],
    h_rel: usize,
    num_eigs: usize,
    lambda_max: f64,
) -> Result<Vec<SweepRow>> {
    let mut rows = vec![];
    for &eps in eps_list {
        let pair = build_pair(eg, eps, h_rel)?;
        let report = measure_closeness(&pair.graph, &pair.manifold, &pair.ids)?;
        let delta = report.delta();
        let res = verify_resolvent(&pair.graph, &pair.manifold, &pair.ids, delta, 1)?;
        let sd = spectral_distance_report(&pair.graph, &pair.manifold, lambda_max, 0.1)?;
        let ev = pick_simple_eigenvalue(&pair.graph, 0.3).and_then(|i| {
            let l = pair.graph.eigenvalues()[i];
            eigenvector_closeness(&pair.graph, &pair.manifold, &pair.ids, i, (0.5 * l, 1.5 * l), delta)
                .ok()
                .map(|r| r.distance)
        });
        let take = |s: &ScaledSpace| {
            s.eigenvalues().iter().copied().take(num_eigs).collect::<Vec<_>>()
        };
        rows.push(SweepRow {
            eps,
            resolvent_defect: res.defects[0],
            bound_4delta: res.bounds[0],
            d_bar: sd.d_bar,
            graph_eigs: take(&pair.graph),
            manifold_eigs: take(&pair.manifold),
            eigenvector_distance: ev,
            report,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Random-pair property suite
// ---------------------------------------------------------------------------

fn randn(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_spd_mass(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| 0.15 * randn(rng));
    &b * b.transpose() + DMatrix::identity(n, n)
}

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> Result<ScaledSpace> {
    let m = random_spd_mass(rng, n);
    let (wm, vm) = linalg::sym_eigen(&m)?;
    let mut m_sqrt = vm.clone();
    for (i, mut col) in m_sqrt.column_iter_mut().enumerate() {
        col *= wm[i].sqrt();
    }
    let m_sqrt = m_sqrt * vm.transpose();
    let g = DMatrix::from_fn(n, n, |_, _| randn(rng));
    let q = g.qr().q();
    let lam = DVector::from_fn(n, |_, _| rng.gen_range(0.0..10.0));
    let mut ql = q.clone();
    for (i, mut col) in ql.column_iter_mut().enumerate() {
        col *= lam[i];
    }
    // K = M^{1/2} Q Λ Qᵀ M^{1/2}: symmetric PSD with M-orthonormal
    // eigenvectors M^{-1/2}Q and eigenvalues Λ
    let k = &m_sqrt * ql * q.transpose() * &m_sqrt;
    ScaledSpace::new(FemSystem::new((&k + k.transpose()) * 0.5, m, 0.0))
}

pub struct RandomPair {
    pub src: ScaledSpace,
    pub dst: ScaledSpace,
    pub ids: IdentificationSet,
}

/// Seeded random δ-close pair: two operators H = QΛQᵀ (Λ ~ U[0,10]) on
/// random SPD inner products, J = I + γG (γ ≤ 0.05, G Gaussian),
/// J′ = M⁻¹JᵀM̃ + γG′; J₁ = J, J₁′ = J′.
pub fn random_pair(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<RandomPair> {
    let n = rng.gen_range(4..=max_dim.max(4));
    let src = random_space(rng, n)?;
    let dst = random_space(rng, n)?;
    let gamma = rng.gen_range(0.005..0.05);
    let j = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| gamma * randn(rng));
    let m_inv = src.sys.mass.clone().try_inverse().ok_or_else(|| Error::InvalidParam("mass not invertible".into()))?;
    let jp = &m_inv * j.transpose() * &dst.sys.mass + DMatrix::from_fn(n, n, |_, _| gamma * randn(rng) * 0.2);
    let jpj_defect = (&jp * &j - DMatrix::identity(n, n)).amax();
    let ids = IdentificationSet { j1: j.clone(), j1p: jp.clone(), j, jp, k: 1.0, eps: gamma, jpj_defect };
    Ok(RandomPair { src, dst, ids })
}

#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub trials: usize,
    pub violations: usize,
    pub notes: Vec<String>,
    /// worst (measured − bound) over all resolvent checks (≤ slack if ok)
    pub worst_excess: f64,
}

/// Run the full bound-verification battery over seeded random pairs:
/// resolvent powers, near-isometry, resolvent sandwich estimates, adjoint
/// duality of weighted norms, norm monotonicity, and the dual-defect
/// resolvent bound. Returns the number of violated bounds (0 expected).
pub fn property_suite(seed: u64, trials: usize) -> Result<PropertyOutcome> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut notes = vec![];
    let mut worst = f64::NEG_INFINITY;
    let fail = |notes: &mut Vec<String>, violations: &mut usize, msg: String| {
        *violations += 1;
        if notes.len() < 20 {
            notes.push(msg);
        }
    };
    for trial in 0..trials {
        let pair = random_pair(&mut rng, 12)?;
        let (src, dst, ids) = (&pair.src, &pair.dst, &pair.ids);
        let rep = measure_closeness(src, dst, ids)?;
        let delta = rep.delta();
        if !rep.bounded() {
            fail(&mut notes, &mut violations, format!("trial {trial}: ‖J‖ or ‖J′‖ exceeds 2"));
        }
        // resolvent powers
        let res = verify_resolvent(src, dst, ids, delta, 3)?;
        for (jj, (d, b)) in res.defects.iter().zip(&res.bounds).enumerate() {
            worst = worst.max(d - b);
            if *d > b + BOUND_SLACK {
                fail(&mut notes, &mut violations, format!("trial {trial}: resolvent power {} defect {d} > {b}", jj + 1));
            }
        }
        // near-isometry
        let (excess, ok) = quasi_isometry_gap(src, dst, ids, delta, &mut rng, 5)?;
        worst = worst.max(excess);
        if !ok {
            fail(&mut notes, &mut violations, format!("trial {trial}: isometry gap excess {excess}"));
        }
        // functional-calculus polynomial p(λ) = (λ+1)⁻¹ + (λ+1)⁻²
        let (fc, fcb, fok) = functional_calculus_gap(src, dst, ids, &[0.0, 1.0, 1.0], delta)?;
        worst = worst.max(fc - fcb);
        if !fok {
            fail(&mut notes, &mut violations, format!("trial {trial}: functional calculus {fc} > {fcb}"));
        }
        // sandwich estimates with φ(λ) = (λ+1)⁻¹ and η = resolvent defect
        let eta = res.defects[0];
        let r = src.resolvent();
        let rt = dst.resolvent();
        let pull = &r - &ids.jp * &rt * &ids.j;
        let pulled = op_norm(&pull, src, src, 0.0, 0.0)?;
        worst = worst.max(pulled - (delta + 2.0 * eta));
        if pulled > delta + 2.0 * eta + BOUND_SLACK {
            fail(&mut notes, &mut violations, format!("trial {trial}: pullback estimate {pulled} > δ+2η"));
        }
        let sand = &rt - &ids.j * &r * &ids.jp;
        let sandwiched = op_norm(&sand, dst, dst, 0.0, 0.0)?;
        worst = worst.max(sandwiched - (5.0 * delta + 2.0 * eta));
        if sandwiched > 5.0 * delta + 2.0 * eta + BOUND_SLACK {
            fail(&mut notes, &mut violations, format!("trial {trial}: sandwich estimate {sandwiched} > 5δ+2η"));
        }
        // dual-defect resolvent bound: ‖R̃J₁′* − J₁R‖_{−1→1} ≤ 4δ
        let m_inv_t = dst.sys.mass.clone().try_inverse().unwrap();
        let j1p_star = &m_inv_t * ids.j1p.transpose() * &src.sys.mass;
        let dual_defect = &rt * j1p_star - &ids.j1 * &r;
        let dd = op_norm(&dual_defect, src, dst, -1.0, 1.0)?;
        worst = worst.max(dd - 4.0 * delta);
        if dd > 4.0 * delta + BOUND_SLACK {
            fail(&mut notes, &mut violations, format!("trial {trial}: dual resolvent defect {dd} > 4δ"));
        }
        // adjoint duality and monotonicity of the weighted norms
        let n = src.dim();
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let kk = rng.gen_range(0..=2) as f64;
        let kt = rng.gen_range(0..=2) as f64;
        let lhs = op_norm(&a, src, dst, kk, -kt)?;
        let m_inv = src.sys.mass.clone().try_inverse().unwrap();
        let a_star = &m_inv * a.transpose() * &dst.sys.mass;
        let rhs = op_norm(&a_star, dst, src, kt, -kk)?;
        if (lhs - rhs).abs() > BOUND_SLACK * lhs.max(1.0) {
            fail(&mut notes, &mut violations, format!("trial {trial}: duality {lhs} vs {rhs}"));
        }
        let (mm, mt) = (kk * rng.gen::<f64>(), kt * rng.gen::<f64>());
        let weaker = op_norm(&a, src, dst, mm, -mt)?;
        if lhs > weaker + BOUND_SLACK {
            fail(&mut notes, &mut violations, format!("trial {trial}: monotonicity {lhs} > {weaker}"));
        }
        // eigenvalue comparison bound when the hypotheses make it non-vacuous
        let l0 = src.eigenvalues()[0];
        if delta * (l0 + 1.0) < 0.5 {
            if let Ok(bound) = minmax_bound(l0, delta) {
                let diff = (l0 - dst.eigenvalues()[0]).abs();
                let hyp = closeness_psd_checks(src, dst, ids, delta)?;
                if hyp.quad_min_eig >= -BOUND_SLACK && hyp.norm_min_eig >= -BOUND_SLACK && diff > bound + BOUND_SLACK {
                    fail(&mut notes, &mut violations, format!("trial {trial}: min-max bound {diff} > {bound}"));
                }
            }
        }
    }
    Ok(PropertyOutcome { trials, violations, notes, worst_excess: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, DensitySpec, GraphKind};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn diag_space(diag: &[f64]) -> ScaledSpace {
        let n = diag.len();
        let k = DMatrix::from_diagonal(&DVector::from_vec(diag.to_vec()));
        ScaledSpace::new(FemSystem::new(k, DMatrix::identity(n, n), 0.0)).unwrap()
    }

    #[test]
    fn op_norm_identity_examples() {
        let s = diag_space(&[0.0, 3.0]);
        let id = DMatrix::identity(2, 2);
        // k=1→0: weights (1+λ)^{-1/2} ≤ 1, achieved on the λ=0 direction
        assert_abs_diff_eq!(op_norm(&id, &s, &s, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(op_norm(&id, &s, &s, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        // ‖u‖_{−k} ≤ ‖u‖₀ ≤ ‖u‖_k
        let u = DVector::from_vec(vec![1.0, 2.0]);
        assert!(s.norm_k(&u, -1.0) <= s.norm_k(&u, 0.0));
        assert!(s.norm_k(&u, 0.0) <= s.norm_k(&u, 1.0));
        assert_abs_diff_eq!(s.norm_k(&u, 0.0), u.norm(), epsilon = 1e-10);
    }

    #[test]
    fn measure_closeness_identity_and_perturbation() {
        let s0 = diag_space(&[0.0, 1.0, 4.0]);
        let ids = IdentificationSet::exact_unitary(3, 1.0);
        let rep = measure_closeness(&s0, &s0, &ids).unwrap();
        assert!(rep.delta() < 1e-12);
        assert_abs_diff_eq!(rep.norm_j, 1.0, epsilon = 1e-12);

        // H̃ = H + E with J = I: only the form-commutator defect is nonzero
        // (base spectrum kept away from 0 so nothing is clamped)
        let s = diag_space(&[0.5, 1.0, 4.0]);
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 1)] = 0.01;
        e[(1, 0)] = 0.01;
        e[(2, 2)] = 0.02;
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 4.0])) + &e;
        let st = ScaledSpace::new(FemSystem::new(k, DMatrix::identity(3, 3), 0.0)).unwrap();
        let rep = measure_closeness(&s, &st, &ids).unwrap();
        assert!(rep.d_scale < 1e-14 && rep.d_scale_p < 1e-14 && rep.d_adj < 1e-12);
        assert!(rep.d_inv < 1e-12 && rep.d_inv_p < 1e-12);
        let expect = op_norm(&e, &s, &st, 1.0, -1.0).unwrap();
        assert_abs_diff_eq!(rep.d_comm, expect, epsilon = 1e-9);
        assert!(rep.d_comm > 1e-3);
    }

    #[test]
    fn hausdorff_examples() {
        assert_abs_diff_eq!(hausdorff(&[0.0, 1.0], &[1.0]).unwrap(), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(hausdorff(&[0.3, 2.0], &[0.3, 2.0]).unwrap(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(hausdorff_resolvent(&[0.0], &[1.0]).unwrap(), 0.5, epsilon = 0.0);
        assert!(hausdorff(&[], &[1.0]).is_err());
        let l = PI * PI / 4.0;
        let want = (1.0 / (1.0 + l) - 1.0 / (1.1 + l)).abs();
        assert_abs_diff_eq!(hausdorff_resolvent(&[l], &[l + 0.1]).unwrap(), want, epsilon = 1e-15);
    }

    #[test]
    fn minmax_bound_examples() {
        let b = minmax_bound(0.0, 0.01).unwrap();
        assert!((b - 0.0421).abs() < 2e-4, "bound {b}");
        // first order in δ: (λ+2)²δ
        let tiny = minmax_bound(1.0, 1e-8).unwrap();
        assert!((tiny / (9.0 * 1e-8) - 1.0).abs() < 1e-6);
        assert!(minmax_bound(9.0, 0.2).is_err());
    }

    #[test]
    fn property_suite_small() {
        let out = property_suite(7, 25).unwrap();
        assert_eq!(out.violations, 0, "violations: {:?}", out.notes);
    }

    #[test]
    fn projection_identity() {
        let s = diag_space(&[0.0, 1.0, 1.0, 5.0]);
        let ids = IdentificationSet::exact_unitary(4, 1.0);
        let rep = projection_check(&s, &s, &ids, (0.5, 3.0), 0.2).unwrap();
        assert_eq!(rep.dim_src, 2);
        assert_eq!(rep.dim_dst, 2);
        assert!(rep.pass);
        assert_abs_diff_eq!(rep.min_ratio, 1.0, epsilon = 1e-12);
        assert!(projection_check(&s, &s, &ids, (1.1, 3.0), 0.2).is_err());
        let empty = projection_check(&s, &s, &ids, (2.0, 4.0), 0.5).unwrap();
        assert_eq!(empty.dim_src, 0);
        assert!(empty.pass);
    }

    #[test]
    fn eigenvector_identity() {
        let s = diag_space(&[0.0, 2.0, 7.0]);
        let ids = IdentificationSet::exact_unitary(3, 1.0);
        let rep = eigenvector_closeness(&s, &s, &ids, 1, (1.0, 3.0), 0.0).unwrap();
        assert!(rep.distance < 1e-12);
        assert!(rep.valid && rep.forward_ok && rep.backward_ok);
        assert!(eigenvector_closeness(&s, &s, &ids, 1, (1.0, 8.0), 0.0).is_err());
    }

    fn star3_embedded(r: f64) -> EmbeddedGraph {
        let mut g = generate_graph(GraphKind::Star(3, 1.0)).unwrap();
        for e in g.edges.iter_mut() {
            e.density = DensitySpec::Constant(r);
        }
        EmbeddedGraph::from_metric(&g).unwrap()
    }

    #[test]
    fn identification_constants() {
        let eg = star3_embedded(0.5);
        let eps = 0.3;
        let pair = build_pair(&eg, eps, 6).unwrap();
        // J′J = I to quadrature accuracy
        assert!(pair.ids.jpj_defect < 1e-8, "J′J defect {}", pair.ids.jpj_defect);
        // f ≡ 1: ‖Jf‖² ≈ Σ_e r_e(ℓ_e − εℓ₀)
        let n1 = pair.graph.dim();
        let ones = DVector::from_element(n1, 1.0);
        let jf = &pair.ids.j * &ones;
        let nsq = pair.manifold.norm_k(&jf, 0.0).powi(2);
        let want = 3.0 * 0.5 * (1.0 - eps);
        assert!((nsq - want).abs() / want < 0.05, "‖J1‖² = {nsq} vs {want}");
        // u ≡ 1: J₁′u ≡ ε^{1/2} exactly (averages of a constant)
        let u = DVector::from_element(pair.manifold.dim(), 1.0);
        let j1pu = &pair.ids.j1p * &u;
        for i in 0..n1 {
            assert_abs_diff_eq!(j1pu[i], eps.sqrt(), epsilon = 1e-12);
        }
        // J₁ of a constant is ε^{−1/2} everywhere
        let j1f = &pair.ids.j1 * &ones;
        for q in 0..pair.manifold.dim() {
            assert_abs_diff_eq!(j1f[q], eps.powf(-0.5), epsilon = 1e-12);
        }
    }

    #[test]
    fn graph_manifold_regression_eps03() {
        let eg = star3_embedded(0.5);
        let pair = build_pair(&eg, 0.3, 6).unwrap();
        let rep = measure_closeness(&pair.graph, &pair.manifold, &pair.ids).unwrap();
        // regression baselines measured by this pipeline (reference run)
        assert_abs_diff_eq!(rep.d_scale, 0.5256, epsilon = 5e-3);
        assert_abs_diff_eq!(rep.d_scale_p, 0.1203, epsilon = 5e-3);
        assert_abs_diff_eq!(rep.d_adj, 0.5525, epsilon = 5e-3);
        assert_abs_diff_eq!(rep.d_comm, 0.5472, epsilon = 5e-3);
        assert!(rep.d_inv < 1e-8);
        assert_abs_diff_eq!(rep.d_inv_p, 0.5212, epsilon = 5e-3);
        assert_abs_diff_eq!(rep.norm_j, 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(rep.norm_jp, 1.267, epsilon = 5e-3);
        assert!(rep.bounded());
        let delta = rep.delta();
        let res = verify_resolvent(&pair.graph, &pair.manifold, &pair.ids, delta, 3).unwrap();
        assert!(res.pass, "defects {:?} vs {:?}", res.defects, res.bounds);
        assert_abs_diff_eq!(res.defects[0], 0.4237, epsilon = 5e-3);
        // λ₂ of the neighborhood approaches π²/4
        assert_abs_diff_eq!(pair.manifold.eigenvalues()[1], 2.5725, epsilon = 5e-3);
        // projection ranks around the degenerate pair at π²/4
        let pr = projection_check(&pair.graph, &pair.manifold, &pair.ids, (1.0, 5.0), 0.4).unwrap();
        assert_eq!(pr.dim_src, 2);
        assert!(pr.pass);
        // spectral distance at λmax = 12
        let sd = spectral_distance_report(&pair.graph, &pair.manifold, 12.0, 0.1).unwrap();
        assert_abs_diff_eq!(sd.d_bar, 0.0083, epsilon = 1e-3);
    }
}
