//! Synchronization analysis for networks of diffusively coupled Lorenz
//! oscillators.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod graphs;
pub mod matcore;
pub mod netsim;
pub mod stability;

pub use diagnostics::{Axis, Cell, PerturbationShape, SimConfig, SweepMeta, SweepResult};
pub use dynamics::{
    AbsorbingSet, CouplingMatrix, LinearField, Lorenz, LorenzParams, StateBounds, VectorField,
};
pub use error::{Error, Result};
pub use graphs::{Graph, RandomModel, RegularKind};
pub use matcore::{Matrix, SpectralDecomp};
pub use netsim::{Modulation, NetworkSystem, OdeSystem, Perturbation, Rk4, Trajectory};
pub use stability::{CouplingReport, EtaConvention, MinorsReport, PersistenceReport};
