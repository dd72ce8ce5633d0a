//! Analytic laws and samplers for the exponential functional
//! `I = int_0^inf q^{zeta_s} ds` of the +/-1 compound Poisson process
//! `zeta` with up-rate 1 and down-rate `z = q^mu`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod perpetuity;
pub mod qcalc;
pub mod qgamma;
pub mod rng;
pub mod samplers;
pub mod scaling;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use qcalc::{QParams, SeriesTolerance};
pub use perpetuity::{MellinForm, PerpetuityLaw};
pub use qgamma::{InverseGamma, QGammaLaw};
pub use rng::RngState;
pub use samplers::{SampleBatch, SamplerConfig, SamplerId, SkeletonPath};
pub use stats::KsResult;
