//! Two-interferometer holometer: input states, observables and the
//! uncertainty budget of the phase-covariance estimate.

mod budget;
mod config;
mod observable;
mod sweep;

pub use budget::{
    budget, mean_c, rp_moments, signal_coefficient, u0, u0_cl_closed, u0_sq_closed, u2, var_c,
    RpMoments, UncertaintyBudget, FD_STEP,
};
pub use config::{Family, HolometerConfig, RadiationPressureParams};
pub use observable::{
    input_state, Holometer, ObservableKind, ObservableSpec, A1, A2, B1, B2, BASE_MODES,
};
pub use sweep::{efficiency_crossing, efficiency_sweep, EfficiencyPoint};
