//! Core library for gsekit, a material-constrained deployment model for
//! grid-support electronics (GSE): transformers, converters, inverters and
//! power-conversion systems across the grid, generation and consumption
//! layers of the power system.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`survival`] — Weibull lifetime statistics and the age-structured
//!    stock-flow recursion that turns net-addition histories into total
//!    installation series (new + replacement).
//! 2. [`demand`] — scenario-driven projection of equipment demand in GVA,
//!    split into new deployment and replacement.
//! 3. [`mrsut`] — multi-regional supply-use algebra: industry-technology
//!    coefficients, layered (Neumann) requirements, and material sourcing
//!    traces that yield per-material availability by region.
//! 4. [`allocator`] — lexicographic allocation of constrained materials to
//!    equipment classes, with solver strategies behind a registry.
//!
//! [`scenario`] wires the stages into a reproducible pipeline with CSV/JSON
//! outputs and a run manifest; [`bom`] holds the bill-of-materials data that
//! links equipment GVA to material mass.

pub mod allocator;
pub mod bom;
pub mod classes;
pub mod demand;
pub mod mrsut;
pub mod scenario;
pub mod series;
pub mod survival;

pub use classes::{EquipmentClassId, EquipmentGroup, Layer};
pub use series::YearSeries;
