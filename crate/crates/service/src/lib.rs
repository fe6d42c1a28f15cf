//! Command line and HTTP front ends over the shared footprint pipeline.

pub mod api;
pub mod cli;
pub mod config;
pub mod session;
