//! End-to-end with/without-mixing comparison pipeline.
//!
//! One experiment builds a base channel ensemble ("without_oam"), applies a
//! mode-mixing surface to get the multiplexed ensemble ("with_oam"),
//! normalizes both against the *same* unmixed reference (so a residual
//! insertion loss stays visible instead of being normalized away), and runs
//! the capacity, BER-sweep, and correlation analyses on the pair. Artifacts
//! are `capacity.csv`, `ber.csv`, `correlation.csv`, and `summary.json` in
//! the configured output directory.
//!
//! All randomness is derived from the single master seed through fixed
//! domain tags, so identical configurations produce byte-identical
//! artifacts regardless of thread count. At each SNR point both systems
//! reuse one sub-seed — identical data bits and noise draws per stirring
//! sample — which makes the with/without comparison paired.

use crate::channel::{channel_to_impulse, excess_delay, normalize_channel, synth_channel, ChannelSet};
use crate::detect::{ergodic_capacity, run_link, CapacityCurve, LinkResult, SnrPoint};
use crate::error::{Error, Result};
use crate::exp::config::{ChannelSource, ExperimentConfig};
use crate::exp::csvio;
use crate::metrics::{
    coherence_bandwidth, complex_correlation, fit_ber_constant, BerFitResult, CorrelationCurve,
    CorrelationSide,
};
use crate::oam::{apply_mixing, make_oam_mixing, MixingMatrix};
use crate::phy::constellation::Constellation;
use crate::rng::derive_seed;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::PathBuf;

/// Energy fraction defining the reported excess delay (`999/1000` of the
/// mean impulse-response energy; compare against the cyclic prefix).
pub const EXCESS_DELAY_FRACTION: f64 = 0.999;

// Master-seed domain tags. Each pipeline stage derives its own sub-seed so
// adding a stage never shifts the streams of another.
const TAG_CHANNEL: u64 = 0x6368_616e; // "chan"
const TAG_MIXING: u64 = 0x6d69_7869; // "mixi"
const TAG_LINK: u64 = 0x6c69_6e6b_0000_0000; // "link" | snr index

/// Sub-seed for channel synthesis.
pub fn channel_seed(master: u64) -> u64 {
    derive_seed(master, TAG_CHANNEL)
}

fn mixing_seed(master: u64) -> u64 {
    derive_seed(master, TAG_MIXING)
}

fn link_seed(master: u64, snr_index: usize) -> u64 {
    derive_seed(master, TAG_LINK | snr_index as u64)
}

/// The raw (un-normalized, un-mixed) base ensemble: synthesized from the
/// config or ingested from the configured CSV file.
pub fn build_raw_base(cfg: &ExperimentConfig) -> Result<ChannelSet> {
    let mut set = match cfg.mode {
        ChannelSource::Synthesize => synth_channel(
            cfg.grid,
            cfg.plan,
            cfg.pdp,
            cfg.n_rx,
            cfg.n_tx(),
            channel_seed(cfg.seed),
        )?,
        ChannelSource::Ingest => {
            let path = cfg.input_path.as_ref().ok_or_else(|| {
                Error::Config("ingest mode needs `input_path = <csv file>`".into())
            })?;
            let set = csvio::ingest_channel_csv(path)?;
            if set.n_tx() != cfg.n_tx() {
                return Err(Error::Config(format!(
                    "ingested ensemble has {} transmit ports but the mode list has {}",
                    set.n_tx(),
                    cfg.n_tx()
                )));
            }
            if set.n_rx() < set.n_tx() {
                return Err(Error::Config(format!(
                    "ingested ensemble has {} receive ports; zero forcing needs at least {}",
                    set.n_rx(),
                    set.n_tx()
                )));
            }
            set
        }
    };
    set.set_label("without_oam");
    Ok(set)
}

/// The normalized pair of ensembles an experiment compares.
#[derive(Debug, Clone)]
pub struct ComparisonEnsembles {
    pub without_mixing: ChannelSet,
    pub with_mixing: ChannelSet,
    pub mixing: MixingMatrix,
}

/// Build both ensembles: base, mixed, then power normalization of both
/// against the unmixed reference.
pub fn prepare_ensembles(cfg: &ExperimentConfig) -> Result<ComparisonEnsembles> {
    let raw = build_raw_base(cfg)?;
    let mut mixing = make_oam_mixing(&cfg.oam, raw.grid(), mixing_seed(cfg.seed));
    if cfg.calibrate_insertion_loss {
        mixing = mixing.calibrated();
    }
    let mut mixed = apply_mixing(&raw, &mixing)?;
    mixed.set_label("with_oam");
    let without_mixing = normalize_channel(&raw, &raw)?;
    let with_mixing = normalize_channel(&mixed, &raw)?;
    Ok(ComparisonEnsembles {
        without_mixing,
        with_mixing,
        mixing,
    })
}

/// Per-frequency ergodic capacity of both ensembles at the configured
/// reference SNR. Returned as (with mixing, without mixing).
pub fn capacity_comparison(
    cfg: &ExperimentConfig,
    ens: &ComparisonEnsembles,
) -> Result<(CapacityCurve, CapacityCurve)> {
    let gamma = SnrPoint::from_db(cfg.capacity_snr_db);
    Ok((
        ergodic_capacity(&ens.with_mixing, gamma)?,
        ergodic_capacity(&ens.without_mixing, gamma)?,
    ))
}

/// Uncoded BER of both systems over the configured SNR sweep, with the
/// power-law fits where enough error events exist.
#[derive(Debug, Clone)]
pub struct BerSweep {
    pub gamma_db: Vec<f64>,
    pub with_mixing: Vec<LinkResult>,
    pub without_mixing: Vec<LinkResult>,
    pub fit_with: Option<BerFitResult>,
    pub fit_without: Option<BerFitResult>,
}

pub fn ber_comparison(cfg: &ExperimentConfig, ens: &ComparisonEnsembles) -> Result<BerSweep> {
    let constellation = Constellation::new(cfg.constellation_order);
    let mut with_mixing = Vec::with_capacity(cfg.snr_sweep_db.len());
    let mut without_mixing = Vec::with_capacity(cfg.snr_sweep_db.len());
    for (i, &db) in cfg.snr_sweep_db.iter().enumerate() {
        let gamma = SnrPoint::from_db(db);
        let seed = link_seed(cfg.seed, i);
        without_mixing.push(run_link(
            &ens.without_mixing,
            &cfg.ofdm,
            &constellation,
            gamma,
            cfg.frames_per_sample,
            seed,
        )?);
        with_mixing.push(run_link(
            &ens.with_mixing,
            &cfg.ofdm,
            &constellation,
            gamma,
            cfg.frames_per_sample,
            seed,
        )?);
    }
    let fit_with = try_fit(&cfg.snr_sweep_db, &with_mixing, cfg.ber_fit_range_db);
    let fit_without = try_fit(&cfg.snr_sweep_db, &without_mixing, cfg.ber_fit_range_db);
    Ok(BerSweep {
        gamma_db: cfg.snr_sweep_db.clone(),
        with_mixing,
        without_mixing,
        fit_with,
        fit_without,
    })
}

/// Zero-BER points carry no information for a log-log fit, so they are
/// dropped; a fit that still lacks two in-range points is reported as
/// absent rather than failing the experiment.
fn try_fit(sweep_db: &[f64], results: &[LinkResult], range: (f64, f64)) -> Option<BerFitResult> {
    let points: Vec<(f64, f64)> = sweep_db
        .iter()
        .zip(results)
        .filter(|(_, r)| r.ber > 0.0)
        .map(|(&db, r)| (10f64.powf(db / 10.0), r.ber))
        .collect();
    fit_ber_constant(&points, range).ok()
}

/// Transmit-side correlation magnitude of both ensembles for port pair
/// (0, 1). Returned as (with mixing, without mixing).
pub fn correlation_comparison(
    ens: &ComparisonEnsembles,
) -> Result<(CorrelationCurve, CorrelationCurve)> {
    Ok((
        complex_correlation(&ens.with_mixing, CorrelationSide::Transmit, (0, 1))?,
        complex_correlation(&ens.without_mixing, CorrelationSide::Transmit, (0, 1))?,
    ))
}

/// Serializable echo of every resolved configuration value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub input_path: Option<String>,
    pub output_dir: String,
    pub grid_start_hz: f64,
    pub grid_step_hz: f64,
    pub grid_count: usize,
    pub platform_states: usize,
    pub stirrer_states: usize,
    pub tap_spacing_s: f64,
    pub tap_count: usize,
    pub decay_constant_s: f64,
    pub n_rx: usize,
    pub oam_modes: Vec<i32>,
    pub insertion_loss_db: f64,
    pub frequency_dependent: bool,
    pub calibrate_insertion_loss: bool,
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
    pub constellation_order: usize,
    pub frames_per_sample: usize,
    pub snr_sweep_db: Vec<f64>,
    pub capacity_snr_db: f64,
    pub ber_fit_lo_db: f64,
    pub ber_fit_hi_db: f64,
    pub coherence_threshold: f64,
}

impl ConfigEcho {
    fn from_config(cfg: &ExperimentConfig) -> Self {
        ConfigEcho {
            mode: cfg.mode.as_str().to_string(),
            input_path: cfg
                .input_path
                .as_ref()
                .map(|p| p.to_string_lossy().into_owned()),
            output_dir: cfg.output_dir.to_string_lossy().into_owned(),
            grid_start_hz: cfg.grid.start_hz(),
            grid_step_hz: cfg.grid.step_hz(),
            grid_count: cfg.grid.count(),
            platform_states: cfg.plan.platform_states(),
            stirrer_states: cfg.plan.stirrer_states(),
            tap_spacing_s: cfg.pdp.tap_spacing_s(),
            tap_count: cfg.pdp.tap_count(),
            decay_constant_s: cfg.pdp.decay_constant_s(),
            n_rx: cfg.n_rx,
            oam_modes: cfg.oam.modes().to_vec(),
            insertion_loss_db: cfg.oam.insertion_loss_db(),
            frequency_dependent: cfg.oam.frequency_dependent(),
            calibrate_insertion_loss: cfg.calibrate_insertion_loss,
            n_subcarriers: cfg.ofdm.n_subcarriers(),
            cp_len: cfg.ofdm.cp_len(),
            sample_rate_hz: cfg.ofdm.sample_rate_hz(),
            constellation_order: cfg.constellation_order.order(),
            frames_per_sample: cfg.frames_per_sample,
            snr_sweep_db: cfg.snr_sweep_db.clone(),
            capacity_snr_db: cfg.capacity_snr_db,
            ber_fit_lo_db: cfg.ber_fit_range_db.0,
            ber_fit_hi_db: cfg.ber_fit_range_db.1,
            coherence_threshold: cfg.coherence_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub bandwidth_hz: f64,
    pub threshold: f64,
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerFitSummary {
    pub k_constant: f64,
    pub slope: f64,
    pub fit_lo_db: f64,
    pub fit_hi_db: f64,
    pub residual: f64,
    pub n_points: usize,
}

impl BerFitSummary {
    fn from_fit(fit: &BerFitResult) -> Self {
        BerFitSummary {
            k_constant: fit.k_constant,
            slope: fit.slope,
            fit_lo_db: fit.range_db.0,
            fit_hi_db: fit.range_db.1,
            residual: fit.residual,
            n_points: fit.n_points,
        }
    }
}

/// Machine-readable record of one experiment, stored as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub seed: u64,
    pub channel_seed: u64,
    pub coherence: CoherenceSummary,
    pub excess_delay_s: f64,
    pub excess_delay_fraction: f64,
    pub cp_duration_s: f64,
    pub mean_capacity_with_oam: f64,
    pub mean_capacity_without_oam: f64,
    pub ber_fit_with_oam: Option<BerFitSummary>,
    pub ber_fit_without_oam: Option<BerFitSummary>,
    pub singular_subcarriers_with_oam: u64,
    pub singular_subcarriers_without_oam: u64,
    pub config: ConfigEcho,
}

/// Paths of the artifacts one run produced, plus the parsed summary.
#[derive(Debug, Clone)]
pub struct ExperimentArtifacts {
    pub capacity_path: PathBuf,
    pub ber_path: PathBuf,
    pub correlation_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: ExperimentSummary,
}

/// Execute the full comparison pipeline and write all four artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentArtifacts> {
    cfg.validate()?;
    let ens = prepare_ensembles(cfg)?;

    let (cap_with, cap_without) = capacity_comparison(cfg, &ens)?;
    let sweep = ber_comparison(cfg, &ens)?;
    let (corr_with, corr_without) = correlation_comparison(&ens)?;
    let coherence = coherence_bandwidth(&ens.without_mixing, cfg.coherence_threshold)?;
    let impulse = channel_to_impulse(&ens.without_mixing)?;
    let delay_s = excess_delay(&impulse, EXCESS_DELAY_FRACTION)?;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let summary = ExperimentSummary {
        seed: cfg.seed,
        channel_seed: channel_seed(cfg.seed),
        coherence: CoherenceSummary {
            bandwidth_hz: coherence.bandwidth_hz,
            threshold: coherence.threshold,
            lower_bound: coherence.lower_bound,
        },
        excess_delay_s: delay_s,
        excess_delay_fraction: EXCESS_DELAY_FRACTION,
        cp_duration_s: cfg.ofdm.cp_duration_s(),
        mean_capacity_with_oam: mean(&cap_with.capacity_bps_hz),
        mean_capacity_without_oam: mean(&cap_without.capacity_bps_hz),
        ber_fit_with_oam: sweep.fit_with.as_ref().map(BerFitSummary::from_fit),
        ber_fit_without_oam: sweep.fit_without.as_ref().map(BerFitSummary::from_fit),
        singular_subcarriers_with_oam: sweep
            .with_mixing
            .iter()
            .map(|r| r.singular_subcarriers)
            .sum(),
        singular_subcarriers_without_oam: sweep
            .without_mixing
            .iter()
            .map(|r| r.singular_subcarriers)
            .sum(),
        config: ConfigEcho::from_config(cfg),
    };

    fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let capacity_path = cfg.output_dir.join("capacity.csv");
    let ber_path = cfg.output_dir.join("ber.csv");
    let correlation_path = cfg.output_dir.join("correlation.csv");
    let summary_path = cfg.output_dir.join("summary.json");

    csvio::write_capacity_csv(&capacity_path, &cap_with, &cap_without)?;
    let ber_with: Vec<f64> = sweep.with_mixing.iter().map(|r| r.ber).collect();
    let ber_without: Vec<f64> = sweep.without_mixing.iter().map(|r| r.ber).collect();
    csvio::write_ber_csv(
        &ber_path,
        &sweep.gamma_db,
        &ber_with,
        &ber_without,
        sweep.fit_without.as_ref(),
    )?;
    csvio::write_correlation_csv(&correlation_path, &corr_with, &corr_without)?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Numerical(format!("summary serialization failed: {e}")))?;
    fs::write(&summary_path, json + "\n").map_err(|source| Error::Io {
        path: summary_path.clone(),
        source,
    })?;

    Ok(ExperimentArtifacts {
        capacity_path,
        ber_path,
        correlation_path,
        summary_path,
        summary,
    })
}
