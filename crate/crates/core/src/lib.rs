//! SAR despeckling and superresolution by projecting wavelet detail bands onto
//! the span of their predecessors under the Frobenius inner product.
//!
//! The crate is organized bottom-up:
//!
//! - [`image`]: raster and subband containers.
//! - [`wavelet`]: one-level periodic 2D DWT (db1, db4).
//! - [`projection`]: Frobenius inner product and the span-projection cascade.
//! - [`speckle`]: unit-mean multiplicative speckle synthesis.
//! - [`despeckle`]: POSAShrink and the baseline filters (median, Lee, Kuan,
//!   Frost, VisuShrink).
//! - [`superres`]: four-observation and single-observation reconstruction.
//! - [`metrics`]: NMV/NSD, MSD, tiled ENL, deflection ratio, Pratt FOM, PSNR.
//! - [`io`]: PGM/PNG rasters and CSV reports.

pub mod despeckle;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod projection;
pub mod speckle;
pub mod superres;
pub mod wavelet;

pub use error::{Error, Result};
pub use image::{image_stats, EdgeMap, Image, Subbands};
pub use wavelet::WaveletBasis;
