//! Wavelet coorbit spaces and their decomposition-space descriptions for the
//! dyadic, similitude and shearlet dilation groups, computed on FFT grids.

pub mod bapu;
pub mod covering;
pub mod decomp;
pub mod error;
pub mod group;
pub mod linalg;
pub mod par;
pub mod transform;
pub mod weights;
pub mod window;

pub use error::{Error, Result};
