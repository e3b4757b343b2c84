//! Multi-species BGK relaxation for classical particles, fermions and bosons.
//!
//! Local equilibria are found by minimizing convex dual potentials with a
//! damped Newton method on discrete momentum grids, so the discrete moment
//! constraints hold to solver tolerance. Time stepping couples the implicit
//! relaxation with finite-volume transport in one space dimension.

pub mod config;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod integrators;
pub mod nspecies;
pub mod output;
pub mod relaxation;
pub mod species;
pub mod state;
pub mod statistics;
pub mod transport;

pub use nalgebra;

pub use config::{scenario_preset, SimConfig};
pub use equilibrium::{InterAlpha, IntraAlpha, NewtonOptions};
pub use error::{Error, ErrorKind, Result};
pub use grid::{Moments, MomentumGrid};
pub use integrators::{RunOutput, Scheme, Simulation};
pub use nspecies::CellEquilibria;
pub use species::{CollisionFrequencies, Species, SpeciesSet};
pub use state::{DistributionField, SimulationState};
pub use statistics::ParticleStatistics;
pub use transport::{BoundaryMode, FluxOrder, SpatialMesh};
