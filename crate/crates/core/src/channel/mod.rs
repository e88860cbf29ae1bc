//! Multipath channels, path loss, noise and co-channel interference.

mod ops;
mod sv;

pub use ops::{add_awgn, add_interferer, apply_channel, link_scale, ChanneledWaveform, InterfererSpec, LinkGeometry};
pub use sv::{generate_channel, ChannelModel, ChannelRealization, Path, SvModelParams};
