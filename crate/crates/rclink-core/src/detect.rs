//! Zero-forcing detection, ergodic capacity, and the end-to-end link runner.
//!
//! Capacity follows the equal-power-allocation form
//! `C(f) = E{log2 det(I + (gamma/n_tx) H(f) H(f)†)}` with the expectation
//! replaced by the stirring-sample mean. The link runner plays uncoded QAM
//! OFDM frames through each stirring sample's impulse response, equalizes
//! every subcarrier with the genie (exactly known) channel response, and
//! counts bit errors; all randomness comes from counter-based streams so
//! results are bit-identical under any parallel schedule.

use crate::channel::{channel_to_impulse, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{CMat, LuFactors, SINGULAR_COND_LIMIT};
use crate::phy::constellation::{qam_demap, qam_map, Constellation};
use crate::phy::noise::awgn_with;
use crate::phy::ofdm::{convolve_truncated, ofdm_demodulate, ofdm_modulate, OfdmConfig};
use crate::rng::{self, domain};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

/// Reference signal-to-noise ratio in both dB and linear form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    gamma_db: f64,
    gamma_linear: f64,
}

impl SnrPoint {
    /// `gamma_db = +inf` is the noise-off sentinel (usable by the link
    /// runner, not by capacity).
    pub fn from_db(gamma_db: f64) -> Self {
        SnrPoint {
            gamma_db,
            gamma_linear: 10f64.powf(gamma_db / 10.0),
        }
    }

    pub fn gamma_db(&self) -> f64 {
        self.gamma_db
    }

    pub fn gamma_linear(&self) -> f64 {
        self.gamma_linear
    }
}

/// Per-frequency ergodic capacity of one channel ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCurve {
    pub frequencies_hz: Vec<f64>,
    pub capacity_bps_hz: Vec<f64>,
    pub label: String,
}

/// Outcome of one Monte-Carlo link run at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub gamma_db: f64,
    /// Bits actually counted (excluded subcarriers do not contribute).
    pub total_bits: u64,
    pub error_bits: u64,
    /// `error_bits / total_bits`.
    pub ber: f64,
    /// BER of each channel sample (NaN for a sample whose every subcarrier
    /// was excluded — pathological and visible rather than silent).
    pub per_sample_ber: Vec<f64>,
    /// Standard error of the per-sample BER mean; `3 *` this is the
    /// Monte-Carlo band used when comparing curves.
    pub ber_std_error: f64,
    /// (sample, subcarrier) pairs excluded because the equalizer Gram
    /// matrix exceeded the condition limit.
    pub singular_subcarriers: u64,
}

/// Zero-forcing equalizer: `x̂ = (H†H)^{-1} H† y`.
///
/// Fails with a singular-channel diagnostic when `cond(H†H)` exceeds
/// [`SINGULAR_COND_LIMIT`], so degenerate subcarriers are excluded loudly
/// rather than amplified into garbage.
pub fn zf_equalize(y: &[Complex64], h: &CMat) -> Result<Vec<Complex64>> {
    if h.rows() < h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "zero forcing needs n_rx >= n_tx, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "received vector has {} entries, channel has {} rows",
            y.len(),
            h.rows()
        )));
    }
    let gram = h.gram();
    let cond = gram.hermitian_condition();
    if !(cond <= SINGULAR_COND_LIMIT) {
        return Err(Error::SingularChannel {
            cond,
            limit: SINGULAR_COND_LIMIT,
        });
    }
    let rhs = h.hermitian_mul_vec(y);
    let lu = LuFactors::new(&gram)?;
    Ok(lu.solve(&rhs))
}

/// Ergodic capacity per grid frequency under equal power allocation.
pub fn ergodic_capacity(set: &ChannelSet, gamma: SnrPoint) -> Result<CapacityCurve> {
    if !gamma.gamma_db().is_finite() {
        return Err(Error::InvalidParameter(format!(
            "capacity needs a finite SNR, got {} dB",
            gamma.gamma_db()
        )));
    }
    let scale = gamma.gamma_linear() / set.n_tx() as f64;
    let n_freq = set.grid().count();
    let capacity_bps_hz: Vec<f64> = (0..n_freq)
        .into_par_iter()
        .map(|f| {
            let mut acc = 0.0;
            for s in 0..set.n_samples() {
                let h = set.matrix_at(s, f);
                let mut a = h.outer_gram().scale(Complex64::new(scale, 0.0));
                for i in 0..a.rows() {
                    a[(i, i)] += 1.0;
                }
                acc += a.cholesky_log2_det()?;
            }
            Ok(acc / set.n_samples() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CapacityCurve {
        frequencies_hz: set.grid().values_hz(),
        capacity_bps_hz,
        label: set.label().to_string(),
    })
}

/// Genie equalizer state for one channel sample: per-subcarrier effective
/// channel (transmit power split included) with its Gram LU factors, or
/// `None` where the subcarrier was flagged singular.
struct SampleEqualizer {
    per_subcarrier: Vec<Option<(CMat, LuFactors)>>,
    n_singular: u64,
}

fn build_sample_equalizer(
    bridged: &[Vec<Complex64>],
    n_rx: usize,
    n_tx: usize,
    cfg: &OfdmConfig,
) -> Result<SampleEqualizer> {
    let n = cfg.n_subcarriers();
    let amp = (1.0 / n_tx as f64).sqrt();
    // exact frequency response of the bridged taps on the modem grid
    let plan = crate::fft::forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    let mut responses = vec![vec![Complex64::new(0.0, 0.0); n]; n_rx * n_tx];
    for r in 0..n_rx {
        for t in 0..n_tx {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let taps = &bridged[r * n_tx + t];
            buf[..taps.len()].copy_from_slice(taps);
            plan.process_with_scratch(&mut buf, &mut scratch);
            responses[r * n_tx + t] = buf;
        }
    }
    let mut per_subcarrier = Vec::with_capacity(n);
    let mut n_singular = 0u64;
    for k in 0..n {
        let mut g = CMat::zeros(n_rx, n_tx);
        for r in 0..n_rx {
            for t in 0..n_tx {
                g[(r, t)] = responses[r * n_tx + t][k] * amp;
            }
        }
        let gram = g.gram();
        let cond = gram.hermitian_condition();
        if !(cond <= SINGULAR_COND_LIMIT) {
            n_singular += 1;
            per_subcarrier.push(None);
            continue;
        }
        let lu = LuFactors::new(&gram)?;
        per_subcarrier.push(Some((g, lu)));
    }
    Ok(SampleEqualizer {
        per_subcarrier,
        n_singular,
    })
}

/// Run the uncoded QAM-OFDM link over every channel sample at one SNR.
///
/// Per sample and frame: draw bits, map, modulate, convolve each stream with
/// the sample's (cyclic-prefix-length) impulse response, sum at each receive
/// branch, add noise at `sigma^2 = 1/gamma` against unit total transmit
/// power, demodulate, zero-force with the genie response, demap, count.
pub fn run_link(
    set: &ChannelSet,
    cfg: &OfdmConfig,
    c: &Constellation,
    gamma: SnrPoint,
    frames_per_sample: usize,
    seed: u64,
) -> Result<LinkResult> {
    if set.n_tx() != cfg.n_streams() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} transmit ports, modem has {} streams",
            set.n_tx(),
            cfg.n_streams()
        )));
    }
    if set.n_rx() < set.n_tx() {
        return Err(Error::InvalidParameter(format!(
            "zero forcing needs n_rx >= n_tx, channel is {}x{}",
            set.n_rx(),
            set.n_tx()
        )));
    }
    if frames_per_sample == 0 {
        return Err(Error::InvalidParameter("need at least one frame per sample".into()));
    }
    if frames_per_sample > u16::MAX as usize || set.n_samples() > u32::MAX as usize {
        return Err(Error::InvalidParameter(
            "frame or sample count exceeds the noise-stream address space".into(),
        ));
    }
    if gamma.gamma_db().is_nan() {
        return Err(Error::InvalidParameter("SNR must not be NaN".into()));
    }

    let imp = channel_to_impulse(set)?;
    let (n_rx, n_tx) = (set.n_rx(), set.n_tx());
    let n = cfg.n_subcarriers();
    let m = c.bits_per_symbol();
    let amp = (1.0 / n_tx as f64).sqrt();

    struct SampleOutcome {
        errors: u64,
        bits: u64,
        singular: u64,
    }

    let outcomes: Vec<Result<SampleOutcome>> = (0..set.n_samples())
        .into_par_iter()
        .map(|s| {
            // impulse response truncated / zero-padded to the prefix length
            let keep = cfg.cp_len().min(imp.n_taps());
            let mut bridged = vec![vec![Complex64::new(0.0, 0.0); cfg.cp_len()]; n_rx * n_tx];
            for r in 0..n_rx {
                for t in 0..n_tx {
                    for k in 0..keep {
                        bridged[r * n_tx + t][k] = imp.at(s, k, r, t);
                    }
                }
            }
            let eq = build_sample_equalizer(&bridged, n_rx, n_tx, cfg)?;

            let mut errors = 0u64;
            let mut bits_counted = 0u64;
            for frame in 0..frames_per_sample {
                // transmit side
                let mut tx_bits = Vec::with_capacity(n_tx);
                let mut tx_time = Vec::with_capacity(n_tx);
                let mut symbols = Vec::with_capacity(n_tx);
                for t in 0..n_tx {
                    let mut brng =
                        rng::stream_rng(seed, domain::DATA_BITS, s as u32, frame as u16, t as u16);
                    let bits: Vec<u8> = (0..n * m).map(|_| brng.gen_range(0..=1u8)).collect();
                    let syms = qam_map(&bits, c)?;
                    symbols.push(syms.iter().map(|v| v * amp).collect::<Vec<_>>());
                    tx_bits.push(bits);
                }
                let frame_sig = ofdm_modulate(&symbols, cfg)?;
                for t in 0..n_tx {
                    tx_time.push(frame_sig.time()[t].clone());
                }

                // channel + noise per receive branch
                let mut rx_time = Vec::with_capacity(n_rx);
                for r in 0..n_rx {
                    let mut acc = vec![Complex64::new(0.0, 0.0); cfg.symbol_len()];
                    for t in 0..n_tx {
                        let contrib =
                            convolve_truncated(&tx_time[t], &bridged[r * n_tx + t], cfg.symbol_len());
                        for (a, b) in acc.iter_mut().zip(&contrib) {
                            *a += b;
                        }
                    }
                    let mut nrng =
                        rng::stream_rng(seed, domain::NOISE, s as u32, frame as u16, r as u16);
                    rx_time.push(awgn_with(&acc, gamma.gamma_db(), 1.0, &mut nrng));
                }
                let rx_sub = ofdm_demodulate(&rx_time, cfg)?;

                // per-subcarrier genie zero forcing
                let mut decided: Vec<Vec<Complex64>> =
                    vec![vec![Complex64::new(0.0, 0.0); n]; n_tx];
                let mut used = vec![false; n];
                for k in 0..n {
                    let Some((g, lu)) = &eq.per_subcarrier[k] else {
                        continue;
                    };
                    let y: Vec<Complex64> = (0..n_rx).map(|r| rx_sub[r][k]).collect();
                    let xhat = lu.solve(&g.hermitian_mul_vec(&y));
                    for t in 0..n_tx {
                        decided[t][k] = xhat[t];
                    }
                    used[k] = true;
                }
                for t in 0..n_tx {
                    let hat_bits = qam_demap(&decided[t], c)?;
                    for k in 0..n {
                        if !used[k] {
                            continue;
                        }
                        for b in 0..m {
                            let i = k * m + b;
                            if hat_bits[i] != tx_bits[t][i] {
                                errors += 1;
                            }
                        }
                        bits_counted += m as u64;
                    }
                }
            }
            Ok(SampleOutcome {
                errors,
                bits: bits_counted,
                singular: eq.n_singular,
            })
        })
        .collect();

    let mut total_bits = 0u64;
    let mut error_bits = 0u64;
    let mut singular_subcarriers = 0u64;
    let mut per_sample_ber = Vec::with_capacity(set.n_samples());
    for outcome in outcomes {
        let o = outcome?;
        total_bits += o.bits;
        error_bits += o.errors;
        singular_subcarriers += o.singular;
        per_sample_ber.push(if o.bits > 0 {
            o.errors as f64 / o.bits as f64
        } else {
            f64::NAN
        });
    }
    if total_bits == 0 {
        return Err(Error::Numerical(
            "every subcarrier of every sample was flagged singular; no bits counted".into(),
        ));
    }
    let ber = error_bits as f64 / total_bits as f64;
    let finite: Vec<f64> = per_sample_ber.iter().copied().filter(|v| v.is_finite()).collect();
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let ber_std_error = if finite.len() > 1 {
        let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (finite.len() - 1) as f64;
        (var / finite.len() as f64).sqrt()
    } else {
        0.0
    };

    Ok(LinkResult {
        gamma_db: gamma.gamma_db(),
        total_bits,
        error_bits,
        ber,
        per_sample_ber,
        ber_std_error,
        singular_subcarriers,
    })
}
