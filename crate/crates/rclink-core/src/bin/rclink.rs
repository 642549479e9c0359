//! Command-line front end for the link simulator.
//!
//! Every verb resolves the same flat key-value configuration (file via
//! `--config`, with `--seed` and `--out` overriding the file), so a run is
//! fully reproducible from its command line plus config document. Failures
//! print one machine-readable JSON record to stderr and exit with 2 for
//! configuration problems, 3 for data-format problems, and 4 for numerical
//! failures.

use clap::{Parser, Subcommand};
use rclink_core::channel::{channel_to_impulse, excess_delay, normalize_channel};
use rclink_core::error::{Error, Result};
use rclink_core::exp::config::{ChannelSource, ExperimentConfig};
use rclink_core::exp::csvio;
use rclink_core::exp::runner::{self, EXCESS_DELAY_FRACTION};
use rclink_core::metrics::coherence_bandwidth;
use serde::Serialize;
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rclink",
    version,
    about = "MIMO-OFDM link simulation over rich-multipath channels, with and without transmit mode mixing"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Configuration file: one `key = value` per line, `#` comments.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file's `seed` key.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory; overrides the config file's `output_dir` key.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Synthesize a channel ensemble and write it as `channels.csv`.
    Synth,
    /// Validate a measured channel CSV and re-export it canonically.
    Ingest,
    /// Write the per-frequency capacity comparison (`capacity.csv`).
    Capacity,
    /// Write the BER-vs-SNR comparison sweep (`ber.csv`).
    Ber,
    /// Write the transmit-side correlation comparison (`correlation.csv`).
    Correlation,
    /// Report coherence bandwidth and excess delay (`coherence.json`).
    Coherence,
    /// Full pipeline: capacity, BER, correlation, and summary artifacts.
    Run,
}

#[derive(Serialize)]
struct ErrorRecord {
    error: String,
    kind: &'static str,
    exit_code: i32,
}

#[derive(Serialize)]
struct CoherenceReport {
    bandwidth_hz: f64,
    threshold: f64,
    lower_bound: bool,
    excess_delay_s: f64,
    excess_delay_fraction: f64,
    cp_duration_s: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = execute(cli) {
        let record = ErrorRecord {
            error: err.to_string(),
            kind: match err.exit_code() {
                2 => "config",
                3 => "data-format",
                _ => "numerical",
            },
            exit_code: err.exit_code(),
        };
        eprintln!(
            "{}",
            serde_json::to_string(&record).expect("error record serialization")
        );
        std::process::exit(record.exit_code);
    }
}

fn execute(cli: Cli) -> Result<()> {
    let text = match &cli.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?),
        None => None,
    };
    let mut cfg = ExperimentConfig::resolve(text.as_deref(), cli.seed, cli.out)?;

    match cli.verb {
        Verb::Synth => {
            cfg.mode = ChannelSource::Synthesize;
            export_channels(&cfg)
        }
        Verb::Ingest => {
            cfg.mode = ChannelSource::Ingest;
            cfg.validate()?;
            export_channels(&cfg)
        }
        Verb::Capacity => {
            let ens = runner::prepare_ensembles(&cfg)?;
            let (with_mix, without_mix) = runner::capacity_comparison(&cfg, &ens)?;
            ensure_out(&cfg)?;
            let path = cfg.output_dir.join("capacity.csv");
            csvio::write_capacity_csv(&path, &with_mix, &without_mix)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            println!(
                "capacity at {} dB: mean {:.4} bit/s/Hz with mixing, {:.4} without -> {}",
                cfg.capacity_snr_db,
                mean(&with_mix.capacity_bps_hz),
                mean(&without_mix.capacity_bps_hz),
                path.display()
            );
            Ok(())
        }
        Verb::Ber => {
            let ens = runner::prepare_ensembles(&cfg)?;
            let sweep = runner::ber_comparison(&cfg, &ens)?;
            ensure_out(&cfg)?;
            let path = cfg.output_dir.join("ber.csv");
            let ber_with: Vec<f64> = sweep.with_mixing.iter().map(|r| r.ber).collect();
            let ber_without: Vec<f64> = sweep.without_mixing.iter().map(|r| r.ber).collect();
            csvio::write_ber_csv(
                &path,
                &sweep.gamma_db,
                &ber_with,
                &ber_without,
                sweep.fit_without.as_ref(),
            )?;
            match &sweep.fit_without {
                Some(fit) => println!(
                    "ber sweep over {} points, fitted K = {:.3}, slope = {:.3} -> {}",
                    sweep.gamma_db.len(),
                    fit.k_constant,
                    fit.slope,
                    path.display()
                ),
                None => println!(
                    "ber sweep over {} points, too few error events to fit -> {}",
                    sweep.gamma_db.len(),
                    path.display()
                ),
            }
            Ok(())
        }
        Verb::Correlation => {
            let ens = runner::prepare_ensembles(&cfg)?;
            let (with_mix, without_mix) = runner::correlation_comparison(&ens)?;
            ensure_out(&cfg)?;
            let path = cfg.output_dir.join("correlation.csv");
            csvio::write_correlation_csv(&path, &with_mix, &without_mix)?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            println!(
                "transmit correlation (ports 0,1): mean {:.4} with mixing, {:.4} without -> {}",
                mean(&with_mix.magnitude),
                mean(&without_mix.magnitude),
                path.display()
            );
            Ok(())
        }
        Verb::Coherence => {
            let raw = runner::build_raw_base(&cfg)?;
            let base = normalize_channel(&raw, &raw)?;
            let coherence = coherence_bandwidth(&base, cfg.coherence_threshold)?;
            let impulse = channel_to_impulse(&base)?;
            let report = CoherenceReport {
                bandwidth_hz: coherence.bandwidth_hz,
                threshold: coherence.threshold,
                lower_bound: coherence.lower_bound,
                excess_delay_s: excess_delay(&impulse, EXCESS_DELAY_FRACTION)?,
                excess_delay_fraction: EXCESS_DELAY_FRACTION,
                cp_duration_s: cfg.ofdm.cp_duration_s(),
            };
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Numerical(format!("report serialization failed: {e}")))?;
            ensure_out(&cfg)?;
            let path = cfg.output_dir.join("coherence.json");
            fs::write(&path, format!("{json}\n")).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            println!("{json}");
            Ok(())
        }
        Verb::Run => {
            let artifacts = runner::run_experiment(&cfg)?;
            let s = &artifacts.summary;
            println!(
                "coherence bandwidth {:.3} MHz, excess delay {:.1} ns (cp {:.1} ns)",
                s.coherence.bandwidth_hz / 1.0e6,
                s.excess_delay_s * 1.0e9,
                s.cp_duration_s * 1.0e9
            );
            println!(
                "mean capacity {:.4} bit/s/Hz with mixing, {:.4} without",
                s.mean_capacity_with_oam, s.mean_capacity_without_oam
            );
            if let Some(fit) = &s.ber_fit_without_oam {
                println!(
                    "ber fit (without mixing): K = {:.3}, slope = {:.3}",
                    fit.k_constant, fit.slope
                );
            }
            for path in [
                &artifacts.capacity_path,
                &artifacts.ber_path,
                &artifacts.correlation_path,
                &artifacts.summary_path,
            ] {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

/// Synthesize or ingest the raw base ensemble and write its canonical CSV.
fn export_channels(cfg: &ExperimentConfig) -> Result<()> {
    let raw = runner::build_raw_base(cfg)?;
    ensure_out(cfg)?;
    let path = cfg.output_dir.join("channels.csv");
    csvio::export_channel_csv(&raw, &path)?;
    println!(
        "{} {} samples x {} frequencies x {}x{} -> {}",
        match cfg.mode {
            ChannelSource::Synthesize => "synthesized",
            ChannelSource::Ingest => "ingested",
        },
        raw.n_samples(),
        raw.grid().count(),
        raw.n_rx(),
        raw.n_tx(),
        path.display()
    );
    Ok(())
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })
}
