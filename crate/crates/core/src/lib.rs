//! Distributed secondary frequency control for lossless power networks.
//!
//! The crate models swing dynamics on a network of generator and load buses,
//! generators with linear governor dynamics, and a distributed averaging
//! controller that exchanges power commands over a communication graph. It
//! certifies controller gains with matrix inequalities, computes the
//! economically optimal dispatch, and simulates and monitors the closed loop.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod certify;
pub mod control;
pub mod dispatch;
pub mod error;
pub mod generation;
pub mod linalg;
pub mod network;
pub mod scalar;
pub mod sim;
pub mod symmetric;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Bus = network::Bus<f64>;
pub type Line = network::Line<f64>;
pub type CommEdge = network::CommEdge<f64>;
pub type PowerNetwork = network::PowerNetwork<f64>;
pub type LtiGenerator = generation::LtiGenerator<f64>;
pub type DadocParams = control::DadocParams<f64>;
pub type SymmetricMatrix = symmetric::SymmetricMatrix<f64>;
pub type Certificate = certify::Certificate<f64>;
pub type OgrProblem = dispatch::OgrProblem<f64>;
pub type Dispatch = dispatch::Dispatch<f64>;
pub type Scenario = sim::Scenario<f64>;
pub type SystemState = sim::SystemState<f64>;
pub type Equilibrium = sim::Equilibrium<f64>;
pub type Trajectory = sim::Trajectory<f64>;
pub type Matrix = linalg::Matrix<f64>;

/// Single-precision aliases.
pub mod single {
    pub type PowerNetwork = crate::network::PowerNetwork<f32>;
    pub type LtiGenerator = crate::generation::LtiGenerator<f32>;
    pub type DadocParams = crate::control::DadocParams<f32>;
    pub type SymmetricMatrix = crate::symmetric::SymmetricMatrix<f32>;
    pub type Certificate = crate::certify::Certificate<f32>;
    pub type Scenario = crate::sim::Scenario<f32>;
    pub type Trajectory = crate::sim::Trajectory<f32>;
}
