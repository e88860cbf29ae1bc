//! Matched filtering, Rake fingers, combining and equalization.

mod composite;
mod equalizer;
mod matched;
mod rake;

pub use composite::{synthesize, ColoredNoise, CompositeChannel, CrossCorrelation};
pub use equalizer::{demodulate, equalize, Demodulated, EqualizerTaps};
pub use matched::matched_filter_samples;
pub use rake::{
    combine_mmse, combine_mrc, estimate_interference_profile, finger_outputs_from_samples, rake_finger_outputs,
    select_fingers, FingerOutputs, FingerSelection, InterferenceProfile, MmseCombiner, RakeState,
};
