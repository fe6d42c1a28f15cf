//! Storey-aware footprint analysis of IFC building models.

pub mod checks;
pub mod exec;
pub mod export;
pub mod footprint;
pub mod geometry;
pub mod pipeline;
pub mod step;
pub mod storey;

pub use exec::ExecMode;
