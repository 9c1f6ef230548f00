//! Non-stationary bandits whose arms carry a hidden scalar state that
//! decays when the arm is pulled and recovers while it rests.
//!
//! Every numeric type is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the common `f64` case.

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod policies;
mod quadrature;
pub mod reward_models;
pub mod scalar;
pub mod simulator;

pub use error::{Result, RogueError};
pub use scalar::Scalar;

pub type Interval = dynamics::Interval<f64>;
pub type StateBox = dynamics::StateBox<f64>;
pub type DynamicsParams = dynamics::DynamicsParams<f64>;
pub type EstimateOrTruth = reward_models::EstimateOrTruth<f64>;
pub type RewardFamily = reward_models::RewardFamily<f64>;
pub type LogisticGlmParams = reward_models::LogisticGlmParams<f64>;
pub type LaplaceAgentParams = reward_models::LaplaceAgentParams<f64>;
pub type ArmHistory = estimation::ArmHistory<f64>;
pub type ArmTracker = estimation::ArmTracker<f64>;
pub type MLEFit = estimation::MLEFit<f64>;
pub type ArmSpec = simulator::ArmSpec<f64>;
pub type Environment = simulator::Environment<f64>;
pub type EpisodeResult = simulator::EpisodeResult<f64>;
pub type ExperimentSpec = simulator::ExperimentSpec<f64>;
pub type ExperimentResult = simulator::ExperimentResult<f64>;
