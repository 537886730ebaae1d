//! Moment engine and uncertainty budgets for a pair of coupled interferometers
//! fed by classical, squeezed, or twin-beam light.
//!
//! The crate is organised bottom-up:
//!
//! - [`gaussian`]: Gaussian states and passive linear optics (interferometers,
//!   loss, splitters).
//! - [`operator`] and [`wick`]: operator polynomials and their exact Gaussian
//!   expectations via ordered Wick pairings.
//! - [`fock`]: an independent truncated-Fock-space oracle used to certify the
//!   Gaussian engine.
//! - [`holometer`]: the two-interferometer experiment, its observables and the
//!   full uncertainty budget including radiation pressure.
//! - [`noise`]: Monte Carlo campaigns that inject correlated phase noise and
//!   recover the phase covariance.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod holometer;
pub mod noise;
pub mod operator;
pub mod wick;

pub use error::{HoloError, Result};
pub use gaussian::{
    apply_map, interferometer_map, loss_map, prepare_coherent, prepare_squeezed_vacuum, prepare_twb, Circuit,
    GaussianState, LinearOpticalMap,
};
pub use operator::{Ladder, OperatorPolynomial};
pub use wick::{covariance, expectation, number_difference_moment, variance, MomentEngine};
pub use holometer::{
    EfficiencyPoint, Family, Holometer, HolometerConfig, ObservableKind, ObservableSpec, RadiationPressureParams,
    UncertaintyBudget,
};
pub use noise::{run_campaign, sample_noise_observation, Campaign, EstimationResult, Fidelity, NoiseModel};
