//! Reverberation-chamber-like MIMO channel ensembles in the frequency domain.
//!
//! An ensemble holds one complex transfer matrix per stirring sample and grid
//! frequency. Synthesis draws exponentially decaying Rayleigh taps per
//! antenna pair and evaluates their exact DFT on the grid, so every entry is
//! a zero-mean circularly symmetric complex Gaussian with unit mean power and
//! the frequency selectivity implied by the power-delay profile.

use crate::error::{Error, Result};
use crate::fft;
use crate::linalg::CMat;
use crate::rng::{self, domain};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Uniform frequency grid, `start_hz + i * step_hz` for `i in 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start_hz: f64,
    step_hz: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, step_hz: f64, count: usize) -> Result<Self> {
        if !(start_hz.is_finite() && step_hz.is_finite()) {
            return Err(Error::InvalidParameter("grid frequencies must be finite".into()));
        }
        if step_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step_hz}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        Ok(FrequencyGrid { start_hz, step_hz, count })
    }

    pub fn start_hz(&self) -> f64 {
        self.start_hz
    }

    pub fn step_hz(&self) -> f64 {
        self.step_hz
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn value_hz(&self, i: usize) -> f64 {
        self.start_hz + i as f64 * self.step_hz
    }

    pub fn values_hz(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value_hz(i)).collect()
    }

    /// Total span, `(count - 1) * step`.
    pub fn span_hz(&self) -> f64 {
        (self.count - 1) as f64 * self.step_hz
    }
}

impl Default for FrequencyGrid {
    /// 5 to 5.2 GHz in 1 MHz steps (201 points).
    fn default() -> Self {
        FrequencyGrid {
            start_hz: 5.0e9,
            step_hz: 1.0e6,
            count: 201,
        }
    }
}

/// Mechanical stirring plan; total samples = platform x stirrer states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StirringPlan {
    platform_states: usize,
    stirrer_states: usize,
}

impl StirringPlan {
    pub fn new(platform_states: usize, stirrer_states: usize) -> Result<Self> {
        if platform_states == 0 || stirrer_states == 0 {
            return Err(Error::InvalidParameter(
                "stirring plan states must be positive".into(),
            ));
        }
        Ok(StirringPlan { platform_states, stirrer_states })
    }

    pub fn platform_states(&self) -> usize {
        self.platform_states
    }

    pub fn stirrer_states(&self) -> usize {
        self.stirrer_states
    }

    pub fn total_samples(&self) -> usize {
        self.platform_states * self.stirrer_states
    }
}

impl Default for StirringPlan {
    /// 20 platform x 20 stirrer states = 400 samples.
    fn default() -> Self {
        StirringPlan {
            platform_states: 20,
            stirrer_states: 20,
        }
    }
}

/// Exponentially decaying power-delay profile.
///
/// Tap powers are `p_k ∝ exp(-k * tap_spacing / decay_constant)`, normalized
/// to sum to one so synthesized entries have unit mean power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDelayProfile {
    tap_spacing_s: f64,
    tap_count: usize,
    decay_constant_s: f64,
}

impl PowerDelayProfile {
    pub fn new(tap_spacing_s: f64, tap_count: usize, decay_constant_s: f64) -> Result<Self> {
        if !(tap_spacing_s > 0.0 && tap_spacing_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tap spacing must be positive, got {tap_spacing_s}"
            )));
        }
        if tap_count == 0 {
            return Err(Error::InvalidParameter("tap count must be positive".into()));
        }
        if !(decay_constant_s > 0.0 && decay_constant_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "decay constant must be positive, got {decay_constant_s}"
            )));
        }
        Ok(PowerDelayProfile {
            tap_spacing_s,
            tap_count,
            decay_constant_s,
        })
    }

    pub fn tap_spacing_s(&self) -> f64 {
        self.tap_spacing_s
    }

    pub fn tap_count(&self) -> usize {
        self.tap_count
    }

    pub fn decay_constant_s(&self) -> f64 {
        self.decay_constant_s
    }

    /// Total delay span covered by the taps.
    pub fn span_s(&self) -> f64 {
        self.tap_count as f64 * self.tap_spacing_s
    }

    /// Normalized tap powers, `sum = 1`.
    pub fn tap_powers(&self) -> Vec<f64> {
        let q = self.tap_spacing_s / self.decay_constant_s;
        let raw: Vec<f64> = (0..self.tap_count).map(|k| (-(k as f64) * q).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

impl Default for PowerDelayProfile {
    /// 128 taps at 5 ns spacing (640 ns span), 137.8 ns decay constant.
    /// The decay constant puts the 0.5-threshold coherence bandwidth of the
    /// resulting channel at about 2 MHz.
    fn default() -> Self {
        PowerDelayProfile {
            tap_spacing_s: 5.0e-9,
            tap_count: 128,
            decay_constant_s: 137.8e-9,
        }
    }
}

/// Frequency-domain MIMO channel ensemble.
///
/// Storage is `[sample][freq][rx][tx]`, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    grid: FrequencyGrid,
    n_samples: usize,
    n_rx: usize,
    n_tx: usize,
    label: String,
    data: Vec<Complex64>,
}

impl ChannelSet {
    /// Assemble from raw entries laid out `[sample][freq][rx][tx]`.
    pub fn from_parts(
        grid: FrequencyGrid,
        n_samples: usize,
        n_rx: usize,
        n_tx: usize,
        data: Vec<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_samples == 0 || n_rx == 0 || n_tx == 0 {
            return Err(Error::InvalidParameter(
                "channel set dimensions must be positive".into(),
            ));
        }
        let expect = n_samples * grid.count() * n_rx * n_tx;
        if data.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "channel data has {} entries, dimensions imply {}",
                data.len(),
                expect
            )));
        }
        if let Some(bad) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "channel entry {bad} is not finite"
            )));
        }
        Ok(ChannelSet {
            grid,
            n_samples,
            n_rx,
            n_tx,
            label: label.into(),
            data,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn index_of(&self, sample: usize, freq: usize, rx: usize, tx: usize) -> usize {
        ((sample * self.grid.count() + freq) * self.n_rx + rx) * self.n_tx + tx
    }

    #[inline]
    pub fn at(&self, sample: usize, freq: usize, rx: usize, tx: usize) -> Complex64 {
        self.data[self.index_of(sample, freq, rx, tx)]
    }

    /// The `n_rx x n_tx` transfer matrix of one sample at one frequency.
    pub fn matrix_at(&self, sample: usize, freq: usize) -> CMat {
        let base = self.index_of(sample, freq, 0, 0);
        CMat::from_row_major(
            self.n_rx,
            self.n_tx,
            &self.data[base..base + self.n_rx * self.n_tx],
        )
    }

    /// Mean of `|H|^2` over all samples, frequencies, and antenna pairs.
    pub fn mean_power(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        sum / self.data.len() as f64
    }

    /// Copy with every entry scaled by a real factor.
    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> ChannelSet {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out.label = label.into();
        out
    }
}

/// Time-domain impulse-response ensemble, `[sample][tap][rx][tx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSet {
    sample_period_s: f64,
    n_samples: usize,
    n_taps: usize,
    n_rx: usize,
    n_tx: usize,
    taps: Vec<Complex64>,
}

impl ImpulseSet {
    pub fn from_parts(
        sample_period_s: f64,
        n_samples: usize,
        n_taps: usize,
        n_rx: usize,
        n_tx: usize,
        taps: Vec<Complex64>,
    ) -> Result<Self> {
        if !(sample_period_s > 0.0) {
            return Err(Error::InvalidParameter("sample period must be positive".into()));
        }
        if taps.len() != n_samples * n_taps * n_rx * n_tx {
            return Err(Error::DimensionMismatch("impulse tap array size mismatch".into()));
        }
        Ok(ImpulseSet {
            sample_period_s,
            n_samples,
            n_taps,
            n_rx,
            n_tx,
            taps,
        })
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    #[inline]
    pub fn index_of(&self, sample: usize, tap: usize, rx: usize, tx: usize) -> usize {
        ((sample * self.n_taps + tap) * self.n_rx + rx) * self.n_tx + tx
    }

    #[inline]
    pub fn at(&self, sample: usize, tap: usize, rx: usize, tx: usize) -> Complex64 {
        self.taps[self.index_of(sample, tap, rx, tx)]
    }

    /// The tap vector of one (sample, rx, tx) triple.
    pub fn tap_vector(&self, sample: usize, rx: usize, tx: usize) -> Vec<Complex64> {
        (0..self.n_taps).map(|k| self.at(sample, k, rx, tx)).collect()
    }

    /// Mean tap energy per tap index, averaged over samples and pairs.
    pub fn mean_tap_energy(&self) -> Vec<f64> {
        let mut energy = vec![0.0; self.n_taps];
        let norm = 1.0 / (self.n_samples * self.n_rx * self.n_tx) as f64;
        for s in 0..self.n_samples {
            for k in 0..self.n_taps {
                for r in 0..self.n_rx {
                    for t in 0..self.n_tx {
                        energy[k] += self.at(s, k, r, t).norm_sqr() * norm;
                    }
                }
            }
        }
        energy
    }
}

/// Synthesize a Rayleigh-fading channel ensemble.
///
/// Per stirring sample and antenna pair, draws `tap_count` independent
/// zero-mean circularly symmetric complex Gaussian taps with the profile's
/// powers and evaluates their exact DFT on the grid (tap vector zero-padded
/// to the grid length). Antenna pairs are statistically independent. The
/// result is bit-identical for a given seed regardless of parallelism.
pub fn synth_channel(
    grid: FrequencyGrid,
    plan: StirringPlan,
    pdp: PowerDelayProfile,
    n_rx: usize,
    n_tx: usize,
    seed: u64,
) -> Result<ChannelSet> {
    if n_rx == 0 || n_tx == 0 {
        return Err(Error::InvalidParameter("antenna counts must be positive".into()));
    }
    let inv_step = 1.0 / grid.step_hz();
    if pdp.span_s() > inv_step * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "power-delay profile span {:.3e} s exceeds 1/step = {:.3e} s; the frequency grid cannot represent it without aliasing",
            pdp.span_s(),
            inv_step
        )));
    }
    if pdp.tap_count() > grid.count() {
        return Err(Error::InvalidParameter(format!(
            "tap count {} exceeds grid length {}; the zero-padded DFT would wrap",
            pdp.tap_count(),
            grid.count()
        )));
    }
    if plan.total_samples() > (1 << 24) {
        return Err(Error::InvalidParameter(
            "stirring plans beyond 2^24 samples are not supported".into(),
        ));
    }

    let n = grid.count();
    let n_samples = plan.total_samples();
    let powers = pdp.tap_powers();
    let amplitudes: Vec<f64> = powers.iter().map(|p| (p / 2.0).sqrt()).collect();
    let plan_fft = fft::forward(n);

    // One frequency response per (sample, rx, tx), generated on its own
    // counter-based stream so the result does not depend on scheduling.
    let per_sample: Vec<Vec<Complex64>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut block = vec![Complex64::new(0.0, 0.0); n * n_rx * n_tx];
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch =
                vec![Complex64::new(0.0, 0.0); plan_fft.get_inplace_scratch_len()];
            for r in 0..n_rx {
                for t in 0..n_tx {
                    let mut rng =
                        rng::stream_rng(seed, domain::CHANNEL_TAPS, s as u32, r as u16, t as u16);
                    buf.fill(Complex64::new(0.0, 0.0));
                    for (k, amp) in amplitudes.iter().enumerate() {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        buf[k] = Complex64::new(re * amp, im * amp);
                    }
                    plan_fft.process_with_scratch(&mut buf, &mut scratch);
                    for (f, v) in buf.iter().enumerate() {
                        block[(f * n_rx + r) * n_tx + t] = *v;
                    }
                }
            }
            block
        })
        .collect();

    let mut data = Vec::with_capacity(n_samples * n * n_rx * n_tx);
    for block in per_sample {
        data.extend_from_slice(&block);
    }
    ChannelSet::from_parts(grid, n_samples, n_rx, n_tx, data, "without_oam")
}

/// Scale a channel set by the reference ensemble's average power transfer.
///
/// Every entry is divided by `sqrt(P_ref)` where `P_ref` is the mean of
/// `|H_ref|^2` over all reference samples, frequencies, and antenna pairs.
/// The label is preserved.
pub fn normalize_channel(set: &ChannelSet, reference: &ChannelSet) -> Result<ChannelSet> {
    let p_ref = reference.mean_power();
    if p_ref < 1e-30 {
        return Err(Error::DegenerateReference(p_ref));
    }
    Ok(set.scaled(1.0 / p_ref.sqrt(), set.label().to_string()))
}

/// Inverse DFT of each sample's frequency response.
///
/// `sample_period = 1 / (count * step)`; the per-entry Parseval identity
/// `sum_k |h_k|^2 = (1/L) sum_f |H_f|^2` holds to roundoff.
pub fn channel_to_impulse(set: &ChannelSet) -> Result<ImpulseSet> {
    let n = set.grid().count();
    let n_samples = set.n_samples();
    let (n_rx, n_tx) = (set.n_rx(), set.n_tx());
    let plan = fft::inverse(n);

    let per_sample: Vec<Vec<Complex64>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut block = vec![Complex64::new(0.0, 0.0); n * n_rx * n_tx];
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            let inv_n = 1.0 / n as f64;
            for r in 0..n_rx {
                for t in 0..n_tx {
                    for f in 0..n {
                        buf[f] = set.at(s, f, r, t);
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (k, v) in buf.iter().enumerate() {
                        block[(k * n_rx + r) * n_tx + t] = v * inv_n;
                    }
                }
            }
            block
        })
        .collect();

    let mut taps = Vec::with_capacity(n_samples * n * n_rx * n_tx);
    for block in per_sample {
        taps.extend_from_slice(&block);
    }
    ImpulseSet::from_parts(
        1.0 / (n as f64 * set.grid().step_hz()),
        n_samples,
        n,
        n_rx,
        n_tx,
        taps,
    )
}

/// Smallest delay containing at least `energy_fraction` of the ensemble-mean
/// tap energy.
pub fn excess_delay(imp: &ImpulseSet, energy_fraction: f64) -> Result<f64> {
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "energy fraction must be in (0, 1], got {energy_fraction}"
        )));
    }
    let energy = imp.mean_tap_energy();
    let total: f64 = energy.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical(
            "impulse set has no energy; excess delay undefined".into(),
        ));
    }
    let target = energy_fraction * total;
    let mut cum = 0.0;
    for (k, e) in energy.iter().enumerate() {
        cum += e;
        if cum >= target - 1e-15 * total {
            return Ok(k as f64 * imp.sample_period_s());
        }
    }
    Ok((imp.n_taps() - 1) as f64 * imp.sample_period_s())
}
