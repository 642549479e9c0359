//! C ABI for the rclink reverberation-chamber MIMO-OFDM link simulator.
//!
//! Design rules of the boundary:
//!
//! * **Opaque handles.** Channel ensembles and mixing matrices cross the
//!   boundary as pointers to opaque structs, created and destroyed only by
//!   this library (`rclink_channel_free`, `rclink_mixing_free`).
//! * **Status codes.** Every fallible function returns [`RclinkStatus`].
//!   `RCLINK_STATUS_OK` is zero; the nonzero codes mirror the process exit
//!   codes of the `rclink` CLI (2 configuration, 3 data format,
//!   4 numerical), with code 1 reserved for boundary misuse such as null
//!   pointers or an unknown constellation order.
//! * **Last error.** After a failure, `rclink_last_error_message` returns a
//!   human-readable description, stored per thread.
//! * **No unwinding.** Internal panics are caught and surfaced as
//!   `RCLINK_STATUS_NUMERICAL` instead of crossing the ABI.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rclink_core::channel::{
    channel_to_impulse, excess_delay, normalize_channel, synth_channel, ChannelSet,
    FrequencyGrid, PowerDelayProfile, StirringPlan,
};
use rclink_core::detect::{ergodic_capacity, run_link, SnrPoint};
use rclink_core::error::Error;
use rclink_core::exp::config::ExperimentConfig;
use rclink_core::exp::csvio::{export_channel_csv, ingest_channel_csv};
use rclink_core::exp::runner::run_experiment;
use rclink_core::metrics::coherence_bandwidth;
use rclink_core::oam::{
    apply_mixing, gram_invariance_check, make_oam_mixing, MixingMatrix, OamModeSpec,
};
use rclink_core::phy::constellation::{Constellation, QamOrder};
use rclink_core::phy::ofdm::OfdmConfig;

/// Result of every fallible call. Zero is success; the nonzero values
/// mirror the CLI exit codes, plus 1 for misuse of the boundary itself.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RclinkStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer was null, a string was not UTF-8, a buffer had the wrong
    /// length, or an enum-like argument had no meaning.
    InvalidArgument = 1,
    /// A parameter combination the library rejects (CLI exit code 2).
    Config = 2,
    /// A malformed channel file or unreadable path (CLI exit code 3).
    DataFormat = 3,
    /// A numerically degenerate input, or an internal panic (CLI exit
    /// code 4).
    Numerical = 4,
}

/// An ensemble of frequency-domain channel matrices (opaque).
pub struct RclinkChannelSet {
    inner: ChannelSet,
}

/// A mode-multiplexing matrix bound to a frequency grid (opaque).
pub struct RclinkMixing {
    inner: MixingMatrix,
}

/// Outcome of one Monte-Carlo link run at one SNR point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RclinkLinkResult {
    /// The SNR of the run in dB (may be +infinity).
    pub gamma_db: f64,
    /// Bits actually counted (excluded subcarriers do not contribute).
    pub total_bits: u64,
    /// Bits decoded incorrectly.
    pub error_bits: u64,
    /// `error_bits / total_bits`.
    pub ber: f64,
    /// Standard error of the per-channel-sample BER mean.
    pub ber_std_error: f64,
    /// (sample, subcarrier) pairs excluded as numerically singular.
    pub singular_subcarriers: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn invalid(message: &str) -> RclinkStatus {
    set_last_error(message);
    RclinkStatus::InvalidArgument
}

fn fail(err: &Error) -> RclinkStatus {
    set_last_error(&err.to_string());
    match err.exit_code() {
        2 => RclinkStatus::Config,
        3 => RclinkStatus::DataFormat,
        _ => RclinkStatus::Numerical,
    }
}

/// Run a body that returns a status, converting panics into a status.
fn guard(body: impl FnOnce() -> RclinkStatus) -> RclinkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            RclinkStatus::Numerical
        }
    }
}

/// Shorthand: `Ok` on success, `fail` mapping on error.
macro_rules! try_core {
    ($expr:expr) => {
        match $expr {
            Ok(value) => value,
            Err(err) => return fail(&err),
        }
    };
}

/// Null-checked shared borrow of an opaque handle.
macro_rules! deref {
    ($ptr:expr, $name:literal) => {
        match unsafe { $ptr.as_ref() } {
            Some(handle) => handle,
            None => return invalid(concat!($name, " must not be null")),
        }
    };
}

/// Null-checked UTF-8 view of a C string argument.
macro_rules! c_str {
    ($ptr:expr, $name:literal) => {{
        if $ptr.is_null() {
            return invalid(concat!($name, " must not be null"));
        }
        match unsafe { CStr::from_ptr($ptr) }.to_str() {
            Ok(text) => text,
            Err(_) => return invalid(concat!($name, " must be valid UTF-8")),
        }
    }};
}

/// Null-checked write of one output value.
macro_rules! write_out {
    ($ptr:expr, $value:expr, $name:literal) => {{
        if $ptr.is_null() {
            return invalid(concat!($name, " must not be null"));
        }
        unsafe { $ptr.write($value) };
    }};
}

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn rclink_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on the calling thread.
///
/// The pointer stays valid until the next failing rclink call on the same
/// thread. The content is only meaningful after a call returned a nonzero
/// status.
#[no_mangle]
pub extern "C" fn rclink_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Synthesize a stirred-chamber channel ensemble.
///
/// The ensemble holds `platform_states * stirrer_states` independent
/// draws of an `n_rx` x `n_tx` Rayleigh channel on the frequency grid
/// `start_hz + k * step_hz` (`count` points), shaped by an exponential
/// power-delay profile with `tap_count` taps spaced `tap_spacing_s`
/// seconds and decay constant `decay_constant_s`. Identical arguments
/// always produce an identical ensemble. On success `*out` owns the new
/// handle; release it with `rclink_channel_free`.
#[no_mangle]
pub extern "C" fn rclink_channel_synth(
    start_hz: f64,
    step_hz: f64,
    count: usize,
    platform_states: usize,
    stirrer_states: usize,
    tap_spacing_s: f64,
    tap_count: usize,
    decay_constant_s: f64,
    n_rx: usize,
    n_tx: usize,
    seed: u64,
    out: *mut *mut RclinkChannelSet,
) -> RclinkStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out must not be null");
        }
        let grid = try_core!(FrequencyGrid::new(start_hz, step_hz, count));
        let plan = try_core!(StirringPlan::new(platform_states, stirrer_states));
        let pdp = try_core!(PowerDelayProfile::new(
            tap_spacing_s,
            tap_count,
            decay_constant_s
        ));
        let set = try_core!(synth_channel(grid, plan, pdp, n_rx, n_tx, seed));
        unsafe { out.write(Box::into_raw(Box::new(RclinkChannelSet { inner: set }))) };
        RclinkStatus::Ok
    })
}

/// Load a channel ensemble from a `freq_hz,sample,rx,tx,re,im` CSV file.
///
/// The file must contain every (frequency, sample, rx, tx) tuple exactly
/// once on a uniform frequency grid. On success `*out` owns the new
/// handle; release it with `rclink_channel_free`.
#[no_mangle]
pub extern "C" fn rclink_channel_ingest(
    path: *const c_char,
    out: *mut *mut RclinkChannelSet,
) -> RclinkStatus {
    guard(|| {
        let path = c_str!(path, "path");
        if out.is_null() {
            return invalid("out must not be null");
        }
        let set = try_core!(ingest_channel_csv(std::path::Path::new(path)));
        unsafe { out.write(Box::into_raw(Box::new(RclinkChannelSet { inner: set }))) };
        RclinkStatus::Ok
    })
}

/// Write a channel ensemble to CSV in the canonical row order.
///
/// Values survive a round trip through `rclink_channel_ingest` bit-exactly.
#[no_mangle]
pub extern "C" fn rclink_channel_export(
    set: *const RclinkChannelSet,
    path: *const c_char,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let path = c_str!(path, "path");
        try_core!(export_channel_csv(&set.inner, std::path::Path::new(path)));
        RclinkStatus::Ok
    })
}

/// Release a channel handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn rclink_channel_free(set: *mut RclinkChannelSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Dimensions of a channel ensemble.
#[no_mangle]
pub extern "C" fn rclink_channel_dims(
    set: *const RclinkChannelSet,
    n_samples: *mut usize,
    n_freqs: *mut usize,
    n_rx: *mut usize,
    n_tx: *mut usize,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        write_out!(n_samples, set.inner.n_samples(), "n_samples");
        write_out!(n_freqs, set.inner.grid().count(), "n_freqs");
        write_out!(n_rx, set.inner.n_rx(), "n_rx");
        write_out!(n_tx, set.inner.n_tx(), "n_tx");
        RclinkStatus::Ok
    })
}

/// Frequency grid of a channel ensemble (`start_hz + k * step_hz`).
#[no_mangle]
pub extern "C" fn rclink_channel_grid(
    set: *const RclinkChannelSet,
    start_hz: *mut f64,
    step_hz: *mut f64,
    count: *mut usize,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        write_out!(start_hz, set.inner.grid().start_hz(), "start_hz");
        write_out!(step_hz, set.inner.grid().step_hz(), "step_hz");
        write_out!(count, set.inner.grid().count(), "count");
        RclinkStatus::Ok
    })
}

/// One complex channel coefficient, by (sample, frequency, rx, tx) index.
#[no_mangle]
pub extern "C" fn rclink_channel_at(
    set: *const RclinkChannelSet,
    sample: usize,
    freq: usize,
    rx: usize,
    tx: usize,
    re: *mut f64,
    im: *mut f64,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let inner = &set.inner;
        if sample >= inner.n_samples()
            || freq >= inner.grid().count()
            || rx >= inner.n_rx()
            || tx >= inner.n_tx()
        {
            return invalid("index out of range");
        }
        let value = inner.at(sample, freq, rx, tx);
        write_out!(re, value.re, "re");
        write_out!(im, value.im, "im");
        RclinkStatus::Ok
    })
}

/// Scale `set` so the reference ensemble has unit mean channel gain.
///
/// Both arguments may be the same handle. The scale factor is computed
/// from `reference`, so two ensembles normalized against a common
/// reference keep their relative power. Fails with
/// `RCLINK_STATUS_NUMERICAL` when the reference has zero mean power. On
/// success `*out` owns a new handle.
#[no_mangle]
pub extern "C" fn rclink_channel_normalize(
    set: *const RclinkChannelSet,
    reference: *const RclinkChannelSet,
    out: *mut *mut RclinkChannelSet,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let reference = deref!(reference, "reference");
        if out.is_null() {
            return invalid("out must not be null");
        }
        let normalized = try_core!(normalize_channel(&set.inner, &reference.inner));
        unsafe {
            out.write(Box::into_raw(Box::new(RclinkChannelSet { inner: normalized })));
        }
        RclinkStatus::Ok
    })
}

/// Build a mode-multiplexing matrix on the grid of `set`.
///
/// `modes` lists the distinct multiplexed mode orders (at least two
/// entries). `insertion_loss_db` is the total power lost in the
/// multiplexer; `frequency_dependent` draws an independent random unitary
/// per frequency instead of one shared unitary. With `calibrate` the loss
/// is compensated exactly, making the matrix lossless. On success `*out`
/// owns the new handle; release it with `rclink_mixing_free`.
#[no_mangle]
pub extern "C" fn rclink_mixing_create(
    set: *const RclinkChannelSet,
    modes: *const i32,
    n_modes: usize,
    insertion_loss_db: f64,
    frequency_dependent: bool,
    calibrate: bool,
    seed: u64,
    out: *mut *mut RclinkMixing,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        if modes.is_null() {
            return invalid("modes must not be null");
        }
        if out.is_null() {
            return invalid("out must not be null");
        }
        let modes = unsafe { std::slice::from_raw_parts(modes, n_modes) };
        let spec = try_core!(OamModeSpec::new(
            modes.to_vec(),
            insertion_loss_db,
            frequency_dependent
        ));
        let mut mixing = make_oam_mixing(&spec, set.inner.grid(), seed);
        if calibrate {
            mixing = mixing.calibrated();
        }
        unsafe { out.write(Box::into_raw(Box::new(RclinkMixing { inner: mixing }))) };
        RclinkStatus::Ok
    })
}

/// Release a mixing handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn rclink_mixing_free(mixing: *mut RclinkMixing) {
    if !mixing.is_null() {
        drop(unsafe { Box::from_raw(mixing) });
    }
}

/// Apply a mixing matrix to every sample and frequency of an ensemble:
/// `H_mixed(f) = H(f) M(f)`. On success `*out` owns a new handle.
#[no_mangle]
pub extern "C" fn rclink_channel_apply_mixing(
    set: *const RclinkChannelSet,
    mixing: *const RclinkMixing,
    out: *mut *mut RclinkChannelSet,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let mixing = deref!(mixing, "mixing");
        if out.is_null() {
            return invalid("out must not be null");
        }
        let mixed = try_core!(apply_mixing(&set.inner, &mixing.inner));
        unsafe { out.write(Box::into_raw(Box::new(RclinkChannelSet { inner: mixed }))) };
        RclinkStatus::Ok
    })
}

/// Compare the Gram matrices `H'H` of two ensembles sample by sample.
///
/// For a lossless mixing matrix the Gram matrix — and with it capacity —
/// is invariant, so `mixed` against its unmixed `base` should pass at a
/// tight tolerance. `max_deviation` receives the largest absolute entry
/// difference found, `passed` whether it stayed within `tol`.
#[no_mangle]
pub extern "C" fn rclink_gram_invariance(
    mixed: *const RclinkChannelSet,
    base: *const RclinkChannelSet,
    tol: f64,
    max_deviation: *mut f64,
    passed: *mut bool,
) -> RclinkStatus {
    guard(|| {
        let mixed = deref!(mixed, "mixed");
        let base = deref!(base, "base");
        let report = try_core!(gram_invariance_check(&mixed.inner, &base.inner, tol));
        write_out!(max_deviation, report.max_deviation, "max_deviation");
        write_out!(passed, report.passed, "passed");
        RclinkStatus::Ok
    })
}

/// Per-frequency ergodic capacity at SNR `gamma_db`, in bit/s/Hz.
///
/// `capacity` must point to exactly `len` doubles, and `len` must equal
/// the ensemble's frequency count (see `rclink_channel_dims`); entry `k`
/// receives the capacity at grid frequency `k`.
#[no_mangle]
pub extern "C" fn rclink_capacity(
    set: *const RclinkChannelSet,
    gamma_db: f64,
    capacity: *mut f64,
    len: usize,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        if capacity.is_null() {
            return invalid("capacity must not be null");
        }
        if len != set.inner.grid().count() {
            return invalid("len must equal the ensemble's frequency count");
        }
        let curve = try_core!(ergodic_capacity(&set.inner, SnrPoint::from_db(gamma_db)));
        let out = unsafe { std::slice::from_raw_parts_mut(capacity, len) };
        out.copy_from_slice(&curve.capacity_bps_hz);
        RclinkStatus::Ok
    })
}

/// Monte-Carlo OFDM link run with zero-forcing detection.
///
/// Streams equal the ensemble's transmit ports. `constellation_order`
/// must be 4, 16, or 64 (Gray-coded square QAM). `gamma_db` may be
/// +infinity for a noise-free run. Identical arguments always produce an
/// identical result.
#[no_mangle]
pub extern "C" fn rclink_run_link(
    set: *const RclinkChannelSet,
    n_subcarriers: usize,
    cp_len: usize,
    sample_rate_hz: f64,
    constellation_order: u32,
    gamma_db: f64,
    frames_per_sample: usize,
    seed: u64,
    out: *mut RclinkLinkResult,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let order = match constellation_order {
            4 => QamOrder::Qpsk,
            16 => QamOrder::Qam16,
            64 => QamOrder::Qam64,
            _ => return invalid("constellation_order must be 4, 16, or 64"),
        };
        let cfg = try_core!(OfdmConfig::new(
            n_subcarriers,
            cp_len,
            sample_rate_hz,
            set.inner.n_tx()
        ));
        let constellation = Constellation::new(order);
        let result = try_core!(run_link(
            &set.inner,
            &cfg,
            &constellation,
            SnrPoint::from_db(gamma_db),
            frames_per_sample,
            seed
        ));
        write_out!(
            out,
            RclinkLinkResult {
                gamma_db: result.gamma_db,
                total_bits: result.total_bits,
                error_bits: result.error_bits,
                ber: result.ber,
                ber_std_error: result.ber_std_error,
                singular_subcarriers: result.singular_subcarriers,
            },
            "out"
        );
        RclinkStatus::Ok
    })
}

/// Coherence bandwidth from the ensemble frequency autocorrelation.
///
/// The result is the smallest frequency lag where the correlation
/// magnitude falls below `threshold` (strictly between 0 and 1).
/// `is_lower_bound` is set when the correlation never crossed the
/// threshold inside the grid span, in which case `bandwidth_hz` is only
/// a lower bound.
#[no_mangle]
pub extern "C" fn rclink_coherence_bandwidth(
    set: *const RclinkChannelSet,
    threshold: f64,
    bandwidth_hz: *mut f64,
    is_lower_bound: *mut bool,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let measured = try_core!(coherence_bandwidth(&set.inner, threshold));
        write_out!(bandwidth_hz, measured.bandwidth_hz, "bandwidth_hz");
        write_out!(is_lower_bound, measured.lower_bound, "is_lower_bound");
        RclinkStatus::Ok
    })
}

/// Delay by which `energy_fraction` of the mean impulse-response energy
/// has arrived, in seconds. Useful against a cyclic-prefix duration.
#[no_mangle]
pub extern "C" fn rclink_excess_delay(
    set: *const RclinkChannelSet,
    energy_fraction: f64,
    delay_s: *mut f64,
) -> RclinkStatus {
    guard(|| {
        let set = deref!(set, "set");
        let impulse = try_core!(channel_to_impulse(&set.inner));
        let delay = try_core!(excess_delay(&impulse, energy_fraction));
        write_out!(delay_s, delay, "delay_s");
        RclinkStatus::Ok
    })
}

/// Run a complete experiment from configuration text (the same `key =
/// value` format the `rclink` CLI reads, including the `seed` key).
///
/// Writes `capacity.csv`, `ber.csv`, `correlation.csv`, and
/// `summary.json` into the configured output directory. On success
/// `*summary_json` receives a NUL-terminated copy of the summary
/// document; release it with `rclink_string_free`.
#[no_mangle]
pub extern "C" fn rclink_run_experiment(
    config_text: *const c_char,
    summary_json: *mut *mut c_char,
) -> RclinkStatus {
    guard(|| {
        let text = c_str!(config_text, "config_text");
        if summary_json.is_null() {
            return invalid("summary_json must not be null");
        }
        let cfg = try_core!(ExperimentConfig::resolve(Some(text), None, None));
        let artifacts = try_core!(run_experiment(&cfg));
        let document = match std::fs::read_to_string(&artifacts.summary_path) {
            Ok(doc) => doc,
            Err(err) => {
                return fail(&Error::Io {
                    path: artifacts.summary_path.clone(),
                    source: err,
                })
            }
        };
        let owned = match CString::new(document) {
            Ok(s) => s,
            Err(_) => return invalid("summary contained an interior NUL byte"),
        };
        unsafe { summary_json.write(owned.into_raw()) };
        RclinkStatus::Ok
    })
}

/// Release a string returned by this library. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn rclink_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
