//! Whitney extension certificates for curves in the Heisenberg group.
//!
//! The crate works with finitely many samples `t -> (x, y, z)` of a curve and
//! decides, at finite scale, whether they look like the restriction of a
//! horizontal `C^m` curve. See the README for an overview of the pipelines.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod av;
pub mod divdiff;
pub mod error;
pub mod heis;
pub mod horizontal;
pub mod poly;
pub mod profile;
pub mod whitney;

pub use av::{AVPair, CurveJets};
pub use divdiff::{Component, SampledCurve};
pub use error::{Error, Result};
pub use heis::{HPoint, HnPoint};
pub use horizontal::{HorizontalCurve, Verdict};
pub use poly::{Interval, Poly};
pub use profile::{DecayProfile, Enumeration, Evidence, GridSpec, Profile, RatioProfile, ScanOptions, Status, ThresholdPolicy};
pub use whitney::{ModulusFn, PiecewiseCm, ValidationMode, ValidationReport, WhitneyField};
