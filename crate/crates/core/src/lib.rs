//! Evolutionary dynamics of cooperation on homophily-weighted multiplex
//! networks, and the reputation / incentive pipeline built on top of them.
//!
//! The numerical core (`netgen`, `comm`, `games`, `evolve`, `equilibrium`,
//! `metrics`) is generic over a floating-point [`Scalar`]; the aliases at the
//! crate root fix it to `f64`, which is what the command-line tool uses.
//! `crowdsense` works on report data and is `f64` throughout.

pub mod comm;
pub mod crowdsense;
pub mod equilibrium;
pub mod error;
pub mod evolve;
pub mod games;
pub mod metrics;
pub mod netgen;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type MultiplexNetwork = netgen::MultiplexNetwork<f64>;
pub type MultiplexSpec = netgen::MultiplexSpec<f64>;
pub type SupraMatrix = comm::SupraMatrix<f64>;
pub type CommunicabilityMatrix = comm::CommunicabilityMatrix<f64>;
pub type EtaBounds = comm::EtaBounds<f64>;
pub type PayoffMatrix = games::PayoffMatrix<f64>;
pub type SimulationConfig = evolve::SimulationConfig<f64>;
pub type SimulationState = evolve::SimulationState<f64>;
pub type Trajectory = evolve::Trajectory<f64>;
pub type DensityGrid = evolve::DensityGrid<f64>;
pub type NashSnapshot = equilibrium::NashSnapshot<f64>;
pub type NashReport = equilibrium::NashReport<f64>;
pub type BehaviourStats = metrics::BehaviourStats<f64>;

/// Single-precision variants, mostly useful for cross-checking the `f64` path.
pub mod f32 {
    pub type MultiplexNetwork = crate::netgen::MultiplexNetwork<f32>;
    pub type CommunicabilityMatrix = crate::comm::CommunicabilityMatrix<f32>;
    pub type PayoffMatrix = crate::games::PayoffMatrix<f32>;
    pub type SimulationConfig = crate::evolve::SimulationConfig<f32>;
}
