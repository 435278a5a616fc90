//! Minimal-surface and KdV toolkit: Weierstrass data, Shiffman functions,
//! and the hierarchy flows that deform them.

pub mod catalog;
pub mod complexkit;
pub mod diffpoly;
pub mod error;
pub mod io;
pub mod kdvflow;
pub mod shiffman;
pub mod weierstrass;

pub use complexkit::{AnalyticFn, Contour, LaurentJet, SampledLine, C64};
pub use diffpoly::{DiffMonomial, DiffPoly};
pub use error::{Result, WlabError};
pub use weierstrass::{EndFit, FluxVector, PeriodReport, SurfaceMesh, WeierstrassData};
