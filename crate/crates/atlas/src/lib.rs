//! Ingest, storage, HTTP service and CLI around `atlas-core`.

pub mod boundaries;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod demo;
pub mod frames;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod service;
pub mod store;
pub mod synth;
