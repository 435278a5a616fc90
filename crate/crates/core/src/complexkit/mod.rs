//! Complex-analysis substrate: contour quadrature, residues, Laurent jets,
//! argument-principle counts, spectral and finite-difference derivatives.

pub mod analytic;
pub mod contour;
pub mod grid;
pub mod jet;
pub mod laurent;
pub mod line;
pub mod quad;
pub mod winding;

pub type C64 = num_complex::Complex<f64>;

pub use analytic::{exp_linear, polynomial, AnalyticFn, Singularity};
pub use contour::Contour;
pub use grid::ChartGrid;
pub use jet::Jet;
pub use laurent::{laurent_jet, LaurentJet};
pub use line::{spectral_derivative, LineAxis, SampledLine};
pub use quad::{contour_integrate, integrate_segments, residue_at, POLE_GUARD};
pub use winding::count_zeros_poles;
