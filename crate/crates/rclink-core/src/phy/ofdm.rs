//! OFDM modem: unitary DFT on both sides plus a cyclic prefix.
//!
//! With the cyclic prefix at least as long as the channel memory, linear
//! convolution looks circular over the retained window, so demodulation
//! reduces the channel to one complex gain per subcarrier. The unitary
//! scaling (1/sqrt(N) each way) keeps signal power identical in the time and
//! frequency domains, which keeps SNR bookkeeping trivial.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;

/// Modem dimensions and timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    n_subcarriers: usize,
    cp_len: usize,
    sample_rate_hz: f64,
    n_streams: usize,
}

impl OfdmConfig {
    pub fn new(
        n_subcarriers: usize,
        cp_len: usize,
        sample_rate_hz: f64,
        n_streams: usize,
    ) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidParameter("need at least one subcarrier".into()));
        }
        if cp_len >= n_subcarriers {
            return Err(Error::InvalidParameter(format!(
                "cyclic prefix {cp_len} must be shorter than the symbol ({n_subcarriers})"
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if n_streams == 0 {
            return Err(Error::InvalidParameter("need at least one stream".into()));
        }
        Ok(OfdmConfig {
            n_subcarriers,
            cp_len,
            sample_rate_hz,
            n_streams,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    /// Cyclic-prefix duration in seconds (640 ns at defaults).
    pub fn cp_duration_s(&self) -> f64 {
        self.cp_len as f64 / self.sample_rate_hz
    }

    /// Samples per transmitted symbol, prefix included.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

impl Default for OfdmConfig {
    /// 512 subcarriers, 128-sample cyclic prefix, 200 MHz, 2 streams.
    fn default() -> Self {
        OfdmConfig {
            n_subcarriers: 512,
            cp_len: 128,
            sample_rate_hz: 2.0e8,
            n_streams: 2,
        }
    }
}

/// One modulated OFDM symbol: the per-stream time-domain samples together
/// with the subcarrier symbols they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    symbols: Vec<Vec<Complex64>>,
    time: Vec<Vec<Complex64>>,
}

impl OfdmFrame {
    /// Subcarrier symbols, `[stream][subcarrier]`.
    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    /// Time-domain samples (prefix included), `[stream][sample]`.
    pub fn time(&self) -> &[Vec<Complex64>] {
        &self.time
    }
}

/// Modulate one symbol per stream: unitary inverse DFT, then prepend the
/// last `cp_len` samples as the cyclic prefix.
pub fn ofdm_modulate(symbols: &[Vec<Complex64>], cfg: &OfdmConfig) -> Result<OfdmFrame> {
    if symbols.len() != cfg.n_streams() {
        return Err(Error::DimensionMismatch(format!(
            "got {} streams of symbols, config has {}",
            symbols.len(),
            cfg.n_streams()
        )));
    }
    let n = cfg.n_subcarriers();
    let plan = fft::inverse(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut time = Vec::with_capacity(symbols.len());
    for (stream, x) in symbols.iter().enumerate() {
        if x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "stream {stream} carries {} symbols, config has {n} subcarriers",
                x.len()
            )));
        }
        let mut buf = x.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(&mut buf, &mut scratch);
        for v in &mut buf {
            *v *= scale;
        }
        let mut samples = Vec::with_capacity(cfg.symbol_len());
        samples.extend_from_slice(&buf[n - cfg.cp_len()..]);
        samples.extend_from_slice(&buf);
        time.push(samples);
    }
    Ok(OfdmFrame {
        symbols: symbols.to_vec(),
        time,
    })
}

/// Demodulate per-stream time samples: strip the prefix, unitary forward
/// DFT.
pub fn ofdm_demodulate(time: &[Vec<Complex64>], cfg: &OfdmConfig) -> Result<Vec<Vec<Complex64>>> {
    let n = cfg.n_subcarriers();
    let plan = fft::forward(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = Vec::with_capacity(time.len());
    for (stream, samples) in time.iter().enumerate() {
        if samples.len() != cfg.symbol_len() {
            return Err(Error::DimensionMismatch(format!(
                "stream {stream} has {} samples, expected {}",
                samples.len(),
                cfg.symbol_len()
            )));
        }
        let mut buf = samples[cfg.cp_len()..].to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(&mut buf, &mut scratch);
        for v in &mut buf {
            *v *= scale;
        }
        out.push(buf);
    }
    Ok(out)
}

/// Direct time-domain convolution `y[n] = sum_k taps[k] x[n-k]`, truncated
/// to `out_len` samples (input treated as zero before its start).
pub fn convolve_truncated(x: &[Complex64], taps: &[Complex64], out_len: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); out_len];
    for (k, g) in taps.iter().enumerate() {
        if g.re == 0.0 && g.im == 0.0 {
            continue;
        }
        for n in k..out_len.min(x.len() + k) {
            y[n] += g * x[n - k];
        }
    }
    y
}
