//! Experiment runner for the nematic defect toolkit: configuration,
//! pipeline, report schema, acceptance re-checks and file formats.

pub mod config;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod verify;
