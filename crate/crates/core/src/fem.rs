//! Generic symmetric FEM pair (stiffness, mass) with a lazily computed
//! full spectral decomposition. Shared by the 1D metric-graph assembly
//! and the 2D thin-neighborhood assembly.

use crate::error::Result;
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

#[derive(Debug)]
pub struct FemSystem {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// representative mesh width (diagnostic only)
    pub mesh_h: f64,
    spectral: OnceLock<(DVector<f64>, DMatrix<f64>)>,
}

impl FemSystem {
    pub fn new(stiffness: DMatrix<f64>, mass: DMatrix<f64>, mesh_h: f64) -> Self {
        FemSystem { stiffness, mass, mesh_h, spectral: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// Full decomposition K V = M V diag(Λ), Vᵀ M V = I, Λ ascending and
    /// clamped to ≥ 0 (P1 Kirchhoff/Neumann operators are non-negative;
    /// tiny negative roundoff is truncated).
    pub fn spectral(&self) -> Result<&(DVector<f64>, DMatrix<f64>)> {
        if let Some(s) = self.spectral.get() {
            return Ok(s);
        }
        let (mut w, v) = linalg::gen_sym_eigen(&self.stiffness, &self.mass)?;
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let _ = self.spectral.set((w, v));
        Ok(self.spectral.get().unwrap())
    }

    /// Lowest `n` eigenpairs without populating the full cache.
    pub fn lowest(&self, n: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if let Some((w, v)) = self.spectral.get() {
            let n = n.min(w.len());
            return Ok((w.rows(0, n).into_owned(), v.columns(0, n).into_owned()));
        }
        let (mut w, v) = linalg::gen_sym_eigen_lowest(&self.stiffness, &self.mass, n)?;
        for x in w.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        Ok((w, v))
    }

    /// M-inner product ⟨u, v⟩.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.mass * v)[(0, 0)]
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }
}

impl Clone for FemSystem {
    fn clone(&self) -> Self {
        FemSystem::new(self.stiffness.clone(), self.mass.clone(), self.mesh_h)
    }
}
