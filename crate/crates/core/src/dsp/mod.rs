//! Numeric kernels behind the anonymizers: LPC analysis, pole
//! manipulation, all-pole filtering, overlap-add and phase-vocoder
//! time-scale modification.

mod filter;
mod lpc;
mod roots;
mod tsm;

use thiserror::Error;

pub use filter::{inverse_filter, is_stable, overlap_add, stabilize, synthesis_filter};
pub use lpc::{
    apply_lag_window, autocorrelation, levinson_durbin, lpc_coefficients, lpc_coefficients_lagged,
    LpcModel,
};
pub use roots::{
    find_polynomial_roots, poly_from_roots, polynomial_roots, rotate_poles, Pole, PoleSet,
    ANGLE_GUARD, MAX_ROOT_ITERATIONS,
};
pub use tsm::{pv_tsm, TSM_ANALYSIS_HOP, TSM_FFT_LEN};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid LPC model: {0}")]
    InvalidModel(String),
    #[error("root finding did not converge after {iterations} iterations (rebuild error {rebuild_error:.3e})")]
    RootFinding {
        iterations: usize,
        rebuild_error: f64,
    },
    #[error("pole set is not closed under conjugation: {0}")]
    AsymmetricPoles(String),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
}
