//! Channel-file exchange and result-artifact serialization.
//!
//! The channel interchange format is a dense CSV with header
//! `freq_hz,sample,rx,tx,re,im`: one row per (frequency, stirring sample,
//! receive port, transmit port), complex value `re + j*im`, every tuple
//! present exactly once on a uniform frequency grid. Complex parts are
//! written with 17 significant digits, which round-trips `f64` exactly.
//!
//! Result artifacts (`capacity.csv`, `ber.csv`, `correlation.csv`) carry a
//! header row, use `.` decimal separators unconditionally, and are written
//! in one pass so two runs with the same inputs produce byte-identical
//! files.

use crate::channel::{ChannelSet, FrequencyGrid};
use crate::detect::CapacityCurve;
use crate::error::{Error, FormatError, Result};
use crate::metrics::{BerFitResult, CorrelationCurve};
use num_complex::Complex64;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

const CHANNEL_HEADER: &str = "freq_hz,sample,rx,tx,re,im";

/// Relative tolerance when checking frequency gaps against the first gap.
const GRID_GAP_RTOL: f64 = 1e-6;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serialize a channel ensemble to the interchange CSV format.
///
/// Rows are emitted frequency-major, then sample, rx, tx — the canonical
/// order [`ingest_channel_csv`] uses when naming a missing tuple.
pub fn export_channel_csv(set: &ChannelSet, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * set.data().len() + 32);
    out.push_str(CHANNEL_HEADER);
    out.push('\n');
    for f in 0..set.grid().count() {
        let freq = set.grid().value_hz(f);
        for s in 0..set.n_samples() {
            for r in 0..set.n_rx() {
                for t in 0..set.n_tx() {
                    let v = set.at(s, f, r, t);
                    writeln!(out, "{freq},{s},{r},{t},{:.16e},{:.16e}", v.re, v.im)
                        .expect("string write");
                }
            }
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

struct ChannelRow {
    freq_hz: f64,
    sample: usize,
    rx: usize,
    tx: usize,
    value: Complex64,
    line: usize,
}

/// Read a channel ensemble from the interchange CSV format.
///
/// The frequency grid and the (sample, rx, tx) dimensions are inferred from
/// the file. Violations are reported as distinct [`FormatError`] variants,
/// each naming the first offending row where one exists.
pub fn ingest_channel_csv(path: &Path) -> Result<ChannelSet> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ingest_channel_text(&text)
}

/// [`ingest_channel_csv`] on already-loaded text.
pub fn ingest_channel_text(text: &str) -> Result<ChannelSet> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CHANNEL_HEADER => {}
        Some((_, header)) => {
            return Err(FormatError::BadHeader(header.trim().to_string()).into())
        }
        None => return Err(FormatError::BadHeader(String::new()).into()),
    }

    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based, counting the header as line 1
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        rows.push(parse_row(trimmed, line)?);
    }
    if rows.is_empty() {
        return Err(FormatError::EmptyFile.into());
    }

    // Infer the grid from the sorted distinct frequencies.
    let mut freqs: Vec<f64> = rows.iter().map(|r| r.freq_hz).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
    freqs.dedup();
    if freqs.len() < 2 {
        return Err(FormatError::SingleFrequency.into());
    }
    let step = freqs[1] - freqs[0];
    for w in freqs.windows(2) {
        let gap = w[1] - w[0];
        if (gap - step).abs() > GRID_GAP_RTOL * step {
            return Err(FormatError::NonUniformGrid {
                prev_hz: w[0],
                next_hz: w[1],
                gap_hz: gap,
                step_hz: step,
            }
            .into());
        }
    }
    let grid = FrequencyGrid::new(freqs[0], step, freqs.len())?;
    let freq_index = |value: f64| -> usize {
        freqs
            .binary_search_by(|probe| probe.partial_cmp(&value).expect("finite"))
            .expect("every row frequency appears in the distinct list")
    };

    let n_samples = rows.iter().map(|r| r.sample).max().unwrap() + 1;
    let n_rx = rows.iter().map(|r| r.rx).max().unwrap() + 1;
    let n_tx = rows.iter().map(|r| r.tx).max().unwrap() + 1;

    // Duplicates first (file order, so the first recurrence is named), then
    // completeness in the canonical freq-major order.
    let mut seen = HashSet::with_capacity(rows.len());
    for row in &rows {
        if !seen.insert((freq_index(row.freq_hz), row.sample, row.rx, row.tx)) {
            return Err(FormatError::DuplicateRow {
                line: row.line,
                freq_hz: row.freq_hz,
                sample: row.sample,
                rx: row.rx,
                tx: row.tx,
            }
            .into());
        }
    }
    for f in 0..freqs.len() {
        for s in 0..n_samples {
            for r in 0..n_rx {
                for t in 0..n_tx {
                    if !seen.contains(&(f, s, r, t)) {
                        return Err(FormatError::MissingTuple {
                            freq_hz: freqs[f],
                            sample: s,
                            rx: r,
                            tx: t,
                        }
                        .into());
                    }
                }
            }
        }
    }

    // Complete and duplicate-free, so every slot is written exactly once.
    let mut data = vec![Complex64::new(0.0, 0.0); rows.len()];
    for row in &rows {
        let f = freq_index(row.freq_hz);
        let idx = ((row.sample * freqs.len() + f) * n_rx + row.rx) * n_tx + row.tx;
        data[idx] = row.value;
    }
    ChannelSet::from_parts(grid, n_samples, n_rx, n_tx, data, "ingested")
}

fn parse_row(line_text: &str, line: usize) -> Result<ChannelRow> {
    let fields: Vec<&str> = line_text.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(FormatError::FieldCount {
            line,
            got: fields.len(),
        }
        .into());
    }
    fn float(line: usize, field: &'static str, raw: &str) -> Result<f64> {
        let v: f64 = raw.parse().map_err(|_| FormatError::Parse {
            line,
            field,
            value: raw.to_string(),
        })?;
        if !v.is_finite() {
            return Err(FormatError::NonFinite { line, field }.into());
        }
        Ok(v)
    }
    fn index(line: usize, field: &'static str, raw: &str) -> Result<usize> {
        raw.parse().map_err(|_| {
            FormatError::Parse {
                line,
                field,
                value: raw.to_string(),
            }
            .into()
        })
    }
    Ok(ChannelRow {
        freq_hz: float(line, "freq_hz", fields[0])?,
        sample: index(line, "sample", fields[1])?,
        rx: index(line, "rx", fields[2])?,
        tx: index(line, "tx", fields[3])?,
        value: Complex64::new(
            float(line, "re", fields[4])?,
            float(line, "im", fields[5])?,
        ),
        line,
    })
}

/// Write the per-frequency capacity comparison artifact.
pub fn write_capacity_csv(
    path: &Path,
    with_mix: &CapacityCurve,
    without_mix: &CapacityCurve,
) -> Result<()> {
    let n = without_mix.frequencies_hz.len();
    if with_mix.frequencies_hz.len() != n
        || with_mix.capacity_bps_hz.len() != n
        || without_mix.capacity_bps_hz.len() != n
    {
        return Err(Error::DimensionMismatch(
            "capacity curves must cover the same frequency grid".into(),
        ));
    }
    let mut out = String::from("freq_hz,capacity_with_oam,capacity_without_oam\n");
    for i in 0..n {
        writeln!(
            out,
            "{},{},{}",
            without_mix.frequencies_hz[i],
            with_mix.capacity_bps_hz[i],
            without_mix.capacity_bps_hz[i]
        )
        .expect("string write");
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Write the BER sweep artifact. `reference_fit` (fitted on the baseline
/// curve) fills the `k_over_gamma` column; without a fit that column is
/// left empty.
pub fn write_ber_csv(
    path: &Path,
    gamma_db: &[f64],
    ber_with: &[f64],
    ber_without: &[f64],
    reference_fit: Option<&BerFitResult>,
) -> Result<()> {
    if ber_with.len() != gamma_db.len() || ber_without.len() != gamma_db.len() {
        return Err(Error::DimensionMismatch(
            "BER columns must match the SNR sweep length".into(),
        ));
    }
    let mut out = String::from("gamma_db,ber_with_oam,ber_without_oam,k_over_gamma\n");
    for (i, &db) in gamma_db.iter().enumerate() {
        let reference = match reference_fit {
            Some(fit) => fit.reference_ber(10f64.powf(db / 10.0)).to_string(),
            None => String::new(),
        };
        writeln!(out, "{db},{},{},{reference}", ber_with[i], ber_without[i])
            .expect("string write");
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Write the transmit-side correlation comparison artifact.
pub fn write_correlation_csv(
    path: &Path,
    with_mix: &CorrelationCurve,
    without_mix: &CorrelationCurve,
) -> Result<()> {
    let n = without_mix.frequencies_hz.len();
    if with_mix.frequencies_hz.len() != n
        || with_mix.magnitude.len() != n
        || without_mix.magnitude.len() != n
    {
        return Err(Error::DimensionMismatch(
            "correlation curves must cover the same frequency grid".into(),
        ));
    }
    let mut out = String::from("freq_hz,corr_tx_with_oam,corr_tx_without_oam\n");
    for i in 0..n {
        writeln!(
            out,
            "{},{},{}",
            without_mix.frequencies_hz[i], with_mix.magnitude[i], without_mix.magnitude[i]
        )
        .expect("string write");
    }
    fs::write(path, out).map_err(io_err(path))
}
