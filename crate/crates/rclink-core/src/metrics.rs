//! Statistical post-processing: BER aggregation and power-law fitting,
//! complex correlation across the stirring ensemble, and coherence
//! bandwidth from the frequency autocorrelation.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Which side of the link a correlation curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationSide {
    /// Between two transmit ports (columns of H), pooled over samples and
    /// receive branches.
    Transmit,
    /// Between two receive branches (rows of H), pooled over samples and
    /// transmit ports.
    Receive,
}

impl CorrelationSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationSide::Transmit => "transmit",
            CorrelationSide::Receive => "receive",
        }
    }
}

/// Per-frequency correlation magnitude between one pair of branches.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub frequencies_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub side: CorrelationSide,
    pub pair: (usize, usize),
}

/// Power-law fit `BER ≈ K / gamma` over a declared SNR window.
#[derive(Debug, Clone, PartialEq)]
pub struct BerFitResult {
    pub k_constant: f64,
    pub slope: f64,
    pub range_db: (f64, f64),
    /// Root-mean-square residual of log BER around the fitted line.
    pub residual: f64,
    pub n_points: usize,
}

impl BerFitResult {
    /// The fitted reference curve `K / gamma` evaluated at one SNR.
    pub fn reference_ber(&self, gamma_linear: f64) -> f64 {
        self.k_constant / gamma_linear
    }
}

/// Coherence bandwidth at a correlation threshold; when the autocorrelation
/// never falls below the threshold inside the grid span, the span itself is
/// returned with `lower_bound` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceBandwidth {
    pub bandwidth_hz: f64,
    pub threshold: f64,
    pub lower_bound: bool,
}

/// Fraction of positions where two equal-length bit vectors disagree.
pub fn bit_error_rate(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64> {
    if tx_bits.is_empty() {
        return Err(Error::InvalidParameter("bit vectors must be nonempty".into()));
    }
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::DimensionMismatch(format!(
            "bit vectors differ in length: {} vs {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Least-squares fit of `ln BER = ln K - slope_mag * ln gamma` over the
/// points whose SNR lies inside `range_db`; `K = exp(intercept)`.
pub fn fit_ber_constant(
    points: &[(f64, f64)],
    range_db: (f64, f64),
) -> Result<BerFitResult> {
    let (lo, hi) = range_db;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "fit range must be a finite increasing interval, got ({lo}, {hi})"
        )));
    }
    let eps = 1e-9;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(gamma_linear, ber) in points {
        if !(gamma_linear > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "SNR values must be positive, got {gamma_linear}"
            )));
        }
        let gamma_db = 10.0 * gamma_linear.log10();
        if gamma_db < lo - eps || gamma_db > hi + eps {
            continue;
        }
        if !(ber > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "BER at {gamma_db:.1} dB is {ber}; the power-law fit needs positive BER in range"
            )));
        }
        xs.push(gamma_linear.ln());
        ys.push(ber.ln());
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "power-law fit needs at least 2 points inside [{lo}, {hi}] dB, found {n}"
        )));
    }
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "power-law fit needs at least two distinct SNR values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(BerFitResult {
        k_constant: intercept.exp(),
        slope,
        range_db,
        residual,
        n_points: n,
    })
}

/// Mean-removed complex Pearson correlation magnitude, per frequency.
///
/// The ensemble at each frequency pools the stirring samples with the
/// branches of the opposite side (receive branches for a transmit-side
/// pair and vice versa).
pub fn complex_correlation(
    set: &ChannelSet,
    side: CorrelationSide,
    pair: (usize, usize),
) -> Result<CorrelationCurve> {
    let limit = match side {
        CorrelationSide::Transmit => set.n_tx(),
        CorrelationSide::Receive => set.n_rx(),
    };
    let (i, j) = pair;
    if i >= limit || j >= limit {
        return Err(Error::InvalidParameter(format!(
            "{} pair ({i}, {j}) out of range for {limit} branches",
            side.as_str()
        )));
    }
    let opposite = match side {
        CorrelationSide::Transmit => set.n_rx(),
        CorrelationSide::Receive => set.n_tx(),
    };
    let n_freq = set.grid().count();
    let pool = set.n_samples() * opposite;
    let mut magnitude = Vec::with_capacity(n_freq);
    for f in 0..n_freq {
        let mut u = Vec::with_capacity(pool);
        let mut v = Vec::with_capacity(pool);
        for s in 0..set.n_samples() {
            for o in 0..opposite {
                match side {
                    CorrelationSide::Transmit => {
                        u.push(set.at(s, f, o, i));
                        v.push(set.at(s, f, o, j));
                    }
                    CorrelationSide::Receive => {
                        u.push(set.at(s, f, i, o));
                        v.push(set.at(s, f, j, o));
                    }
                }
            }
        }
        let um = u.iter().sum::<Complex64>() / pool as f64;
        let vm = v.iter().sum::<Complex64>() / pool as f64;
        let var_u: f64 = u.iter().map(|z| (z - um).norm_sqr()).sum();
        let var_v: f64 = v.iter().map(|z| (z - vm).norm_sqr()).sum();
        if var_u <= 0.0 || var_v <= 0.0 {
            return Err(Error::Numerical(format!(
                "zero-variance branch at {} Hz; correlation undefined",
                set.grid().value_hz(f)
            )));
        }
        if i == j {
            magnitude.push(1.0);
            continue;
        }
        let cov: Complex64 = u.iter().zip(&v).map(|(a, b)| (a - um) * (b - vm).conj()).sum();
        magnitude.push((cov.norm() / (var_u * var_v).sqrt()).min(1.0));
    }
    Ok(CorrelationCurve {
        frequencies_hz: set.grid().values_hz(),
        magnitude,
        side,
        pair,
    })
}

/// Coherence bandwidth from the ensemble frequency autocorrelation.
///
/// `R(l)` is the lag-`l` product `H(f) H*(f + l)` averaged over samples,
/// antenna pairs, and the `count - l` frequency positions, normalized so
/// `R(0) = 1`; the result is the smallest lag (linearly interpolated) where
/// `|R|` falls below the threshold.
pub fn coherence_bandwidth(set: &ChannelSet, threshold: f64) -> Result<CoherenceBandwidth> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    let n = set.grid().count();
    let step = set.grid().step_hz();
    let pairs = set.n_rx() * set.n_tx();
    let mut corr = Vec::with_capacity(n);
    for lag in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..set.n_samples() {
            for r in 0..set.n_rx() {
                for t in 0..set.n_tx() {
                    for f in 0..(n - lag) {
                        acc += set.at(s, f, r, t) * set.at(s, f + lag, r, t).conj();
                    }
                }
            }
        }
        let count = (set.n_samples() * pairs * (n - lag)) as f64;
        corr.push(acc / count);
    }
    let r0 = corr[0].re;
    if !(r0 > 0.0) {
        return Err(Error::Numerical(
            "ensemble has no power; coherence bandwidth undefined".into(),
        ));
    }
    let mag: Vec<f64> = corr.iter().map(|c| c.norm() / r0).collect();
    for lag in 1..n {
        if mag[lag] < threshold {
            let prev = mag[lag - 1];
            let frac = (prev - threshold) / (prev - mag[lag]);
            return Ok(CoherenceBandwidth {
                bandwidth_hz: step * ((lag - 1) as f64 + frac),
                threshold,
                lower_bound: false,
            });
        }
    }
    Ok(CoherenceBandwidth {
        bandwidth_hz: set.grid().span_hz(),
        threshold,
        lower_bound: true,
    })
}
