//! Shared fixtures for the criterion benches under `benches/`.

use ccp_core::bench::{generate_instance, GenOptions};
use ccp_core::PbpInstance;

/// Equiprobable L1 instance used across benches; fixed seed per size.
pub fn fixture(p: usize, n: usize, tau: f64) -> PbpInstance {
    generate_instance(p, n, tau, 0xBE_u64 + n as u64, GenOptions::default())
}
