//! Wave-measurement feedforward control for floating offshore wind turbines.

pub mod campaign;
pub mod config;
pub mod control;
pub mod forces;
pub mod lti;
pub mod metrics;
pub mod plant;
pub mod quad;
pub mod scalar;
pub mod sim;
pub mod wave;

pub use scalar::Real;

pub type StateSpace = lti::StateSpaceModel<f64>;
pub type StateSpaceF32 = lti::StateSpaceModel<f32>;
pub type FrequencyResponse = lti::FrequencyResponseSet<f64>;
pub type Realization = wave::WaveRealization<f64>;
