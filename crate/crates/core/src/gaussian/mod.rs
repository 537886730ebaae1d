//! Gaussian states of light and the passive linear optics acting on them.

mod frame;
mod maps;
mod state;

pub use frame::BogoliubovFrame;
pub use maps::{apply_map, arm_splitter_map, interferometer_map, loss_map, Circuit, LinearOpticalMap};
pub use state::{prepare_coherent, prepare_squeezed_vacuum, prepare_twb, GaussianState};
