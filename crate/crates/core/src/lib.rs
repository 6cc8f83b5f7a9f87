//! Half-plane Liouville quantum gravity laboratory.
//!
//! Samples free-boundary Gaussian fields, builds LFPP lattice metrics, and
//! measures boundary distance profiles against the boundary GMC measure.

pub mod error;
pub mod experiments;
pub mod geodesics;
pub mod geometry;
pub mod gff;
pub mod gmc;
pub mod io;
pub mod metric;
pub mod params;
pub mod profile;
pub mod seeds;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{GridSpec, Interval, Point};
pub use params::{check_alpha, normalization_exponent, psi, variation_exponent, CoalescenceConfig, LqgParams};
