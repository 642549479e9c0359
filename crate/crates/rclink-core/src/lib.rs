//! Link-level simulation of 2x2 MIMO-OFDM over reverberation-chamber
//! channels, with orbital-angular-momentum-style mode multiplexing on top.

pub mod channel;
pub mod detect;
pub mod error;
pub mod exp;
pub mod fft;
pub mod linalg;
pub mod metrics;
pub mod oam;
pub mod phy;
pub mod rng;

pub use channel::{
    channel_to_impulse, excess_delay, normalize_channel, synth_channel, ChannelSet, FrequencyGrid,
    ImpulseSet, PowerDelayProfile, StirringPlan,
};
pub use detect::{ergodic_capacity, run_link, zf_equalize, CapacityCurve, LinkResult, SnrPoint};
pub use error::{Error, FormatError, Result};
pub use exp::config::{ChannelSource, ExperimentConfig};
pub use exp::csvio::{export_channel_csv, ingest_channel_csv, ingest_channel_text};
pub use exp::runner::{run_experiment, ExperimentArtifacts, ExperimentSummary};
pub use metrics::{
    bit_error_rate, coherence_bandwidth, complex_correlation, fit_ber_constant, BerFitResult,
    CoherenceBandwidth, CorrelationCurve, CorrelationSide,
};
pub use oam::{
    apply_mixing, gram_invariance_check, make_oam_mixing, GramInvarianceReport, MixingMatrix,
    OamModeSpec,
};
pub use phy::constellation::{qam_demap, qam_map, Constellation, QamOrder};
pub use phy::noise::awgn;
pub use phy::ofdm::{ofdm_demodulate, ofdm_modulate, OfdmConfig, OfdmFrame};
