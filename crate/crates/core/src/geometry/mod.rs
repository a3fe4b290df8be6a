//! Exact low-dimensional geometry: predicates, hulls and the separability sweep.

pub mod hull;
pub mod predicates;
pub mod separability;

pub use hull::{enclosed_indices, hull, vertex_indices, Hull};
pub use separability::{separability_check, SeparabilityVerdict};
