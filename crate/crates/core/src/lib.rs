//! Moment varieties of inverse Gaussian, gamma and related univariate
//! families: exact symbolic construction, determinantal generators, Hilbert
//! series, secant dimensions, homotopy-based degree counts and
//! method-of-moments estimation for finite mixtures.

pub mod error;
pub mod estimate;
pub mod exactalg;
pub mod homotopy;
pub mod moments;
pub mod varieties;

pub use error::{Error, Result};
