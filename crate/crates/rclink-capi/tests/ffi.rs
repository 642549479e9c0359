//! Exercises the C ABI exactly as a foreign caller would: raw pointers,
//! C strings, status codes, and the thread-local last-error message.

use rclink_capi::*;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rclink_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn c_path(path: &Path) -> CString {
    CString::new(path.to_str().expect("utf-8 path")).unwrap()
}

/// A small ensemble: 33 frequencies, 10 samples, 2x2.
fn synth_small(seed: u64) -> *mut RclinkChannelSet {
    let mut set = ptr::null_mut();
    let status = rclink_channel_synth(
        5.0e9, 1.0e6, 33, 5, 2, 5.0e-9, 16, 4.0e-8, 2, 2, seed, &mut set,
    );
    assert_eq!(status, RclinkStatus::Ok, "synth failed: {}", last_error());
    assert!(!set.is_null());
    set
}

#[test]
fn version_is_a_static_semver_string() {
    let version = unsafe { CStr::from_ptr(rclink_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn synth_reports_dims_grid_and_entries() {
    let set = synth_small(42);
    let (mut s, mut f, mut r, mut t) = (0usize, 0usize, 0usize, 0usize);
    assert_eq!(
        rclink_channel_dims(set, &mut s, &mut f, &mut r, &mut t),
        RclinkStatus::Ok
    );
    assert_eq!((s, f, r, t), (10, 33, 2, 2));

    let (mut start, mut step, mut count) = (0.0, 0.0, 0usize);
    assert_eq!(
        rclink_channel_grid(set, &mut start, &mut step, &mut count),
        RclinkStatus::Ok
    );
    assert_eq!((start, step, count), (5.0e9, 1.0e6, 33));

    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(
        rclink_channel_at(set, 0, 0, 0, 0, &mut re, &mut im),
        RclinkStatus::Ok
    );
    assert!(re != 0.0 || im != 0.0, "a Rayleigh draw is almost surely nonzero");
    assert_eq!(
        rclink_channel_at(set, 10, 0, 0, 0, &mut re, &mut im),
        RclinkStatus::InvalidArgument,
        "sample index past the end must be rejected"
    );
    assert!(last_error().contains("out of range"));
    rclink_channel_free(set);
}

#[test]
fn identical_seeds_give_identical_ensembles() {
    let a = synth_small(7);
    let b = synth_small(7);
    let c = synth_small(8);
    let entry = |set| {
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(
            rclink_channel_at(set, 3, 17, 1, 0, &mut re, &mut im),
            RclinkStatus::Ok
        );
        (re.to_bits(), im.to_bits())
    };
    assert_eq!(entry(a), entry(b));
    assert_ne!(entry(a), entry(c));
    rclink_channel_free(a);
    rclink_channel_free(b);
    rclink_channel_free(c);
}

#[test]
fn export_then_ingest_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = c_path(&dir.path().join("channels.csv"));
    let set = synth_small(3);
    assert_eq!(rclink_channel_export(set, path.as_ptr()), RclinkStatus::Ok);

    let mut back = ptr::null_mut();
    assert_eq!(
        rclink_channel_ingest(path.as_ptr(), &mut back),
        RclinkStatus::Ok,
        "{}",
        last_error()
    );
    for (sample, freq, rx, tx) in [(0, 0, 0, 0), (9, 32, 1, 1), (4, 16, 0, 1)] {
        let read = |s| {
            let (mut re, mut im) = (0.0, 0.0);
            assert_eq!(
                rclink_channel_at(s, sample, freq, rx, tx, &mut re, &mut im),
                RclinkStatus::Ok
            );
            (re.to_bits(), im.to_bits())
        };
        assert_eq!(read(set), read(back), "entry changed across the round trip");
    }
    rclink_channel_free(set);
    rclink_channel_free(back);
}

#[test]
fn ingest_of_missing_file_is_data_format_with_message() {
    let path = CString::new("/nonexistent/channels.csv").unwrap();
    let mut set = ptr::null_mut();
    assert_eq!(
        rclink_channel_ingest(path.as_ptr(), &mut set),
        RclinkStatus::DataFormat
    );
    assert!(set.is_null(), "out must stay untouched on failure");
    assert!(last_error().contains("/nonexistent/channels.csv"));
}

#[test]
fn null_arguments_are_invalid_argument() {
    let mut set = ptr::null_mut();
    assert_eq!(
        rclink_channel_ingest(ptr::null(), &mut set),
        RclinkStatus::InvalidArgument
    );
    assert!(last_error().contains("path"));
    assert_eq!(
        rclink_channel_dims(
            ptr::null(),
            &mut 0usize,
            &mut 0usize,
            &mut 0usize,
            &mut 0usize
        ),
        RclinkStatus::InvalidArgument
    );
    rclink_channel_free(ptr::null_mut()); // must be a safe no-op
    rclink_mixing_free(ptr::null_mut());
    rclink_string_free(ptr::null_mut());
}

#[test]
fn lossless_mixing_preserves_gram_and_capacity() {
    let base = synth_small(77);
    let modes = [1i32, 2];
    let mut mixing = ptr::null_mut();
    assert_eq!(
        rclink_mixing_create(
            base,
            modes.as_ptr(),
            modes.len(),
            2.0,
            true,
            true, // calibrated: exactly lossless
            5,
            &mut mixing,
        ),
        RclinkStatus::Ok,
        "{}",
        last_error()
    );
    let mut mixed = ptr::null_mut();
    assert_eq!(
        rclink_channel_apply_mixing(base, mixing, &mut mixed),
        RclinkStatus::Ok
    );

    let mut deviation = f64::NAN;
    let mut passed = false;
    assert_eq!(
        rclink_gram_invariance(mixed, base, 1.0e-12, &mut deviation, &mut passed),
        RclinkStatus::Ok
    );
    assert!(passed, "gram deviation {deviation} exceeded 1e-12");

    let mut cap_base = vec![0.0f64; 33];
    let mut cap_mixed = vec![0.0f64; 33];
    assert_eq!(
        rclink_capacity(base, 15.0, cap_base.as_mut_ptr(), cap_base.len()),
        RclinkStatus::Ok
    );
    assert_eq!(
        rclink_capacity(mixed, 15.0, cap_mixed.as_mut_ptr(), cap_mixed.len()),
        RclinkStatus::Ok
    );
    for (a, b) in cap_base.iter().zip(&cap_mixed) {
        assert!((a - b).abs() < 1.0e-9, "capacity moved: {a} vs {b}");
    }
    assert_eq!(
        rclink_capacity(base, 15.0, cap_base.as_mut_ptr(), 32),
        RclinkStatus::InvalidArgument,
        "wrong buffer length must be rejected before any write"
    );

    rclink_channel_free(mixed);
    rclink_mixing_free(mixing);
    rclink_channel_free(base);
}

#[test]
fn link_run_is_exact_without_noise_and_degrades_with_it() {
    let raw = synth_small(11);
    let mut set = ptr::null_mut();
    assert_eq!(
        rclink_channel_normalize(raw, raw, &mut set),
        RclinkStatus::Ok
    );
    rclink_channel_free(raw);

    let mut clean = RclinkLinkResult {
        gamma_db: 0.0,
        total_bits: 0,
        error_bits: 0,
        ber: 1.0,
        ber_std_error: 1.0,
        singular_subcarriers: 0,
    };
    assert_eq!(
        rclink_run_link(
            set,
            64,
            16,
            2.0e8,
            64,
            f64::INFINITY,
            1,
            9,
            &mut clean
        ),
        RclinkStatus::Ok,
        "{}",
        last_error()
    );
    assert_eq!(clean.error_bits, 0);
    assert_eq!(clean.ber, 0.0);
    assert!(clean.total_bits > 0);

    let mut noisy = clean;
    assert_eq!(
        rclink_run_link(set, 64, 16, 2.0e8, 64, 15.0, 1, 9, &mut noisy),
        RclinkStatus::Ok
    );
    assert!(noisy.ber > 0.0 && noisy.ber < 0.5, "ber = {}", noisy.ber);

    assert_eq!(
        rclink_run_link(set, 64, 16, 2.0e8, 32, 15.0, 1, 9, &mut noisy),
        RclinkStatus::InvalidArgument,
        "only square Gray QAM orders are supported"
    );
    rclink_channel_free(set);
}

#[test]
fn coherence_and_excess_delay_report_physical_values() {
    let set = synth_small(21);
    let mut bandwidth = 0.0;
    let mut lower = true;
    assert_eq!(
        rclink_coherence_bandwidth(set, 0.5, &mut bandwidth, &mut lower),
        RclinkStatus::Ok
    );
    assert!(bandwidth > 0.0);

    let mut delay = 0.0;
    assert_eq!(
        rclink_excess_delay(set, 0.999, &mut delay),
        RclinkStatus::Ok
    );
    assert!(delay > 0.0);

    assert_eq!(
        rclink_coherence_bandwidth(set, 1.5, &mut bandwidth, &mut lower),
        RclinkStatus::Config,
        "a threshold outside (0, 1) is a configuration error"
    );
    rclink_channel_free(set);
}

#[test]
fn normalize_of_zero_reference_is_numerical() {
    // An all-zero ensemble cannot serve as a normalization reference.
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("freq_hz,sample,rx,tx,re,im\n");
    for f in ["1000000", "2000000"] {
        text.push_str(&format!("{f},0,0,0,0,0\n"));
    }
    let csv = dir.path().join("zero.csv");
    std::fs::write(&csv, text).unwrap();
    let path = c_path(&csv);
    let mut set = ptr::null_mut();
    assert_eq!(
        rclink_channel_ingest(path.as_ptr(), &mut set),
        RclinkStatus::Ok
    );
    let mut out = ptr::null_mut();
    assert_eq!(
        rclink_channel_normalize(set, set, &mut out),
        RclinkStatus::Numerical
    );
    assert!(!last_error().is_empty());
    rclink_channel_free(set);
}

#[test]
fn run_experiment_returns_the_summary_document() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = format!(
        "mode = synthesize\n\
         seed = 31\n\
         output_dir = {}\n\
         grid_count = 33\n\
         platform_states = 5\n\
         stirrer_states = 2\n\
         tap_count = 16\n\
         decay_constant_s = 4.0e-8\n\
         n_subcarriers = 64\n\
         cp_len = 16\n\
         frames_per_sample = 1\n\
         snr_sweep_db = 10, 20\n\
         ber_fit_lo_db = 5\n\
         ber_fit_hi_db = 25\n",
        out_dir.to_str().unwrap()
    );
    let config = CString::new(config).unwrap();
    let mut summary: *mut c_char = ptr::null_mut();
    assert_eq!(
        rclink_run_experiment(config.as_ptr(), &mut summary),
        RclinkStatus::Ok,
        "{}",
        last_error()
    );
    assert!(!summary.is_null());
    let text = unsafe { CStr::from_ptr(summary) }.to_str().unwrap().to_owned();
    rclink_string_free(summary);

    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["seed"], 31);
    assert!(parsed["coherence"]["bandwidth_hz"].as_f64().unwrap() > 0.0);
    for name in ["capacity.csv", "ber.csv", "correlation.csv", "summary.json"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    assert_eq!(
        std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
        text,
        "returned document must match the file"
    );
}

#[test]
fn run_experiment_without_seed_is_config_error() {
    let config = CString::new("mode = synthesize\n").unwrap();
    let mut summary: *mut c_char = ptr::null_mut();
    assert_eq!(
        rclink_run_experiment(config.as_ptr(), &mut summary),
        RclinkStatus::Config
    );
    assert!(summary.is_null());
    assert!(last_error().contains("seed"));
}

#[test]
fn generated_header_covers_the_exported_surface() {
    let header = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rclink.h"),
    )
    .expect("committed header present");
    for symbol in [
        "RCLINK_STATUS_OK",
        "RCLINK_STATUS_NUMERICAL",
        "typedef struct RclinkChannelSet RclinkChannelSet;",
        "typedef struct RclinkMixing RclinkMixing;",
        "rclink_version",
        "rclink_last_error_message",
        "rclink_channel_synth",
        "rclink_channel_ingest",
        "rclink_channel_export",
        "rclink_channel_free",
        "rclink_channel_dims",
        "rclink_channel_grid",
        "rclink_channel_at",
        "rclink_channel_normalize",
        "rclink_mixing_create",
        "rclink_mixing_free",
        "rclink_channel_apply_mixing",
        "rclink_gram_invariance",
        "rclink_capacity",
        "rclink_run_link",
        "rclink_coherence_bandwidth",
        "rclink_excess_delay",
        "rclink_run_experiment",
        "rclink_string_free",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
