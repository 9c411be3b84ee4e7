//! Numerical toolkit for bilinear frequency-localized operators on
//! commensurate grids.
//!
//! The crate discretizes the real line (and the plane) with space and
//! frequency lattices aligned to the integer lattice and the unit cube,
//! computes Fourier transforms as dense quadrature sums, evaluates the
//! function- and sequence-space norms used in time-frequency analysis
//! (Sobolev, amalgam, modulation, local Hardy, weak sequence norms), and
//! builds the window decompositions needed to localize symbols in
//! frequency. On top of that sits a verification harness (`verify`) that
//! re-derives, at desk scale, the operator-norm inequalities satisfied by
//! the bilinear operator implemented in `op`.
//!
//! Dense kernels parallelize over output indices when the `parallel`
//! feature (default) is enabled; summation order within each output
//! sample is fixed, so results do not depend on the thread count.

pub mod constants;
pub mod decomp;
pub mod error;
pub mod grid;
pub mod io;
pub mod op;
mod par;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
