//! Numerical toolkit for spectra of weighted metric-graph Laplacians,
//! Neumann Laplacians on thin 2D neighborhoods of embedded graphs, and
//! quantitative closeness of the two via quasi-unitary identification maps.

pub mod closeness;
pub mod discrete;
pub mod error;
pub mod fem;
pub mod graph;
pub mod linalg;
pub mod manifold;
pub mod quantum;

pub use error::{Error, Result};
