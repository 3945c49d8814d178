//! Construct-validity audit toolkit for text-image consistency metrics.

pub mod ablate;
pub mod audit;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod stats;
pub mod textprops;
pub mod visprops;

pub use error::{Error, ErrorCategory, Result};
