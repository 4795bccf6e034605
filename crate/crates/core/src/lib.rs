//! Explicit ReLU network constructions for piecewise-linear interpolation
//! and Hölder-function approximation, with error measurement and a
//! parallel cost model.

pub mod construct;
pub mod cost;
pub mod cpl;
pub mod error;
pub mod metrics;
pub mod network;

pub use construct::{
    construct, corollary32_check, lemma2_interpolant, Construction, DeltaMode, DeltaPolicy,
    HolderTarget, Lemma2Plan, ResidualTrace,
};
pub use cpl::{exact_l1_cpl, extract_cpl, lemma1_interpolant, CplFunction, SampleSet};
pub use error::{Error, Result};
pub use metrics::{holder_family, l1_error, linf_error, measure, rate_fit, GridSpec, RateFit};
pub use network::{parse_input_line, Layer, ReluNetwork, WidthVec};
