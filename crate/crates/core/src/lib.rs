//! Learning-to-rent for the ski-rental problem.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the cost model
//! (`rent`), seeded joint distributions and the adversarial constructions
//! (`dist`), the linear learners used as black boxes (`learn`), the threshold
//! fitting procedures (`policy`) and the verification machinery (`analysis`).
//! IO, configuration and the worker pool live in the `rentlearn` companion
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dist;
mod error;
pub mod learn;
pub mod num;
pub mod policy;
pub mod rent;
pub mod seed;

pub use error::{Error, Result};
pub use rent::{CrEstimate, Sample, Threshold, ThresholdDensity, ThresholdPolicy};
