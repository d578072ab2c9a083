//! Frequency grids, band-limited signals and decomposition norms.

pub mod cauchy;
pub mod grid;
pub mod norm;
pub mod signal;
