//! Place recognition from the output voltages of wearable energy harvesters.
//!
//! The pipeline runs [`signal::simulate`] (or a loaded trace file) through
//! [`acquisition::quantize`] and [`acquisition::windowize`], turns each
//! window into per-channel statistics with [`features::featurize`], and
//! classifies with a random forest ([`forest`]). [`evaluation`] provides
//! leave-one-case-out cross-validation and element ablation.

pub mod acquisition;
pub mod dataset;
pub mod element;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod profiles;
pub mod seed;
pub mod signal;

pub use element::ElementKind;
pub use error::{Error, Result};
