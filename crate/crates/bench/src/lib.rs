//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use netsync_core::dynamics::lorenz_field;
use netsync_core::graphs::{build_regular, RegularKind};
use netsync_core::netsim::spread_initial_condition;
use netsync_core::{CouplingMatrix, LorenzParams, Matrix, NetworkSystem};

/// Symmetric `n×n` matrix with a reproducible, well-spread spectrum.
pub fn symmetric_fixture(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        let (a, b) = (i.min(j) as f64, i.max(j) as f64);
        ((a + 1.0) * (b + 2.0)).sin() + if i == j { a } else { 0.0 }
    })
}

/// Ring of `n` classic Lorenz oscillators with identity coupling.
pub fn lorenz_ring(n: usize, alpha: f64) -> NetworkSystem {
    NetworkSystem::new(
        build_regular(RegularKind::Ring, n).expect("ring"),
        Arc::new(lorenz_field(LorenzParams::classic())),
        CouplingMatrix::identity(3),
        alpha,
    )
    .expect("valid system")
}

/// Slightly desynchronized starting state for [`lorenz_ring`].
pub fn ring_state(n: usize) -> Vec<f64> {
    spread_initial_condition(n, &[-7.0, 10.0, 5.0], 0.014)
}
