//! Basis pulses, pulse combinations, spectra and spectral-mask design.

mod autocorr;
mod coexist;
mod combine;
mod gaussian;
mod mask;
mod optimize;
mod psd;

pub use autocorr::{autocorrelation, correlation_matrix, Autocorrelation};
pub use coexist::{coexistence_power, free_space_loss_db, VictimBand};
pub use combine::{combine_pulses, combine_sampled, CombinedWaveform, PulseCombination, PulseTerm};
pub use gaussian::{gaussian_derivative_pulse, hermite, GaussianPulseSpec, DEFAULT_SUPPORT_SIGMAS};
pub use mask::{mask_margin, MaskSegment, SpectralMask};
pub use optimize::{optimize_pulse_design, OptimizerConfig, PulseDesign};
pub use psd::{dtft_power, psd_estimate, sequence_factor_ripple_db, PsdConfig, PsdEstimate, TrainContext};
