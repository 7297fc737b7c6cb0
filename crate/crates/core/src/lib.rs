//! Dephasing channels and dephasing superchannels.
//!
//! A dephasing superchannel acts on the Jamiołkowski matrix of a channel by a Schur product
//! with a `d²×d²` correlation matrix `C`. This crate validates such matrices, realizes them
//! with unitary pre- and post-processing and a quantum memory, classifies that memory, and
//! bounds how well a gate can tell superchannels apart in terms of its coherence.
//!
//! Everything numerical is generic over [`scalar::Scalar`] (`f64` or `f32`); the aliases
//! below fix `f64`.

pub mod channels;
pub mod coherence;
pub mod error;
pub mod fixtures;
pub mod matcore;
pub mod oracles;
pub mod scalar;
pub mod superchannels;
pub mod verify;

pub use error::{Error, Result};
pub use matcore::Rng;
pub use scalar::{Scalar, Tolerances};

pub type ComplexMatrix = matcore::Matrix<f64>;
pub type Channel = channels::Channel<f64>;
pub type DephasingChannelC = channels::DephasingChannelC<f64>;
pub type StochasticMatrix = channels::StochasticMatrix<f64>;
pub type DephasingSuperchannel = superchannels::DephasingSuperchannel<f64>;
pub type SuperRealization = superchannels::SuperRealization<f64>;
pub type RobustnessCertificate = coherence::RobustnessCertificate<f64>;
pub type DiscriminationInstance = coherence::DiscriminationInstance<f64>;
