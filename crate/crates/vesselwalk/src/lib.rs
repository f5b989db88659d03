//! Reconnection of fractured curvilinear structures in binary segmentation
//! masks, driven by a per-pixel confidence map.
//!
//! The core of the crate is the probability regularized walk
//! ([`reconnect::prw`]): fragments of a binary mask are walked back onto the
//! largest connected component, with each step scored by a blend of geometric
//! attraction toward a target point and the confidence map value at the
//! candidate pixel. Around it sit:
//!
//! * [`grid`] — raster types ([`grid::BinaryMask`], [`grid::ProbabilityMap`])
//!   and bit-exact PGM/PNG codecs,
//! * [`components`] — connected-component labeling and Zhang-Suen thinning,
//! * [`metrics`] — confusion scores, ROC/AUC, Otsu binarization and the
//!   per-ROI reconnection error,
//! * [`dicemath`] — smoothed Dice loss, its analytic gradient and the
//!   multi-scale label pyramid,
//! * [`ddbshape`] — receptive-field and channel-growth analysis of dilated
//!   convolution blocks,
//! * [`synth`] — a seeded synthetic vessel generator producing ground truth,
//!   fracture-injected masks and simulated probability maps,
//! * [`pipeline`] — the JSON-reporting entry points behind the `vesselwalk`
//!   binary.
//!
//! Every operation is deterministic given its inputs and seeds; see the
//! `examples/` directory for one runnable program per capability.

pub mod codec;
pub mod components;
pub mod ddbshape;
pub mod dicemath;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod pipeline;
pub mod reconnect;
pub mod synth;

pub use error::Error;
pub use grid::{BinaryMask, Pixel, ProbabilityMap, Roi};
pub use reconnect::{ReconnectReport, WalkConfig};

/// Convenience alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;
