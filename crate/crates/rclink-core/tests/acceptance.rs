//! Acceptance gate: one test per release criterion, each printing an
//! `ACCEPT <n> PASS/FAIL` line (visible with `--nocapture` or on failure).
//!
//! The criteria pin the library's headline behaviors: capacity equivalence
//! of mixed and unmixed ensembles, Gram invariance under unitary mixing,
//! diversity-order-one BER with matched with/without curves, error-free
//! zero-noise decoding, coherence-bandwidth and excess-delay calibration,
//! Rayleigh statistics, independent numerical oracles, byte-level run
//! determinism, and the channel-file round trip.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rclink_core::channel::{
    channel_to_impulse, excess_delay, normalize_channel, synth_channel, ChannelSet,
    FrequencyGrid, PowerDelayProfile, StirringPlan,
};
use rclink_core::detect::{ergodic_capacity, run_link, zf_equalize, SnrPoint};
use rclink_core::error::{Error, FormatError};
use rclink_core::exp::config::ExperimentConfig;
use rclink_core::exp::csvio::{export_channel_csv, ingest_channel_csv, ingest_channel_text};
use rclink_core::exp::runner::{ber_comparison, prepare_ensembles, run_experiment};
use rclink_core::linalg::CMat;
use rclink_core::metrics::coherence_bandwidth;
use rclink_core::oam::{apply_mixing, gram_invariance_check, make_oam_mixing, OamModeSpec};
use rclink_core::phy::constellation::{qam_demap, Constellation, QamOrder};
use rclink_core::phy::ofdm::OfdmConfig;
use statrs::function::erf::erfc;
use std::time::{Duration, Instant};

/// Run one criterion body, print its verdict line, and propagate failure.
fn criterion(n: usize, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("ACCEPT {n} PASS {name}"),
        Err(msg) => {
            println!("ACCEPT {n} FAIL {name}: {msg}");
            panic!("acceptance criterion {n} ({name}) failed: {msg}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

/// The reference ensemble: 5-5.2 GHz, 1 MHz step, 20x20 stirring states,
/// 128-tap exponential profile, 2x2.
fn default_ensemble(seed: u64) -> ChannelSet {
    synth_channel(
        FrequencyGrid::default(),
        StirringPlan::default(),
        PowerDelayProfile::default(),
        2,
        2,
        seed,
    )
    .expect("default synthesis")
}

/// Frequency-flat ensemble whose entries are exactly unit-variance complex
/// normal: single tap, minimal two-point grid, 50x50 stirring states.
fn flat_ensemble(seed: u64) -> ChannelSet {
    synth_channel(
        FrequencyGrid::new(5.0e9, 1.0e6, 2).unwrap(),
        StirringPlan::new(50, 50).unwrap(),
        PowerDelayProfile::new(5.0e-9, 1, 137.8e-9).unwrap(),
        2,
        2,
        seed,
    )
    .expect("flat synthesis")
}

const ENSEMBLE_SEED: u64 = 2025;

#[test]
fn criterion_01_capacity_equivalence() {
    criterion(1, "capacity equivalence at 15 dB", || {
        let start = Instant::now();
        let base = default_ensemble(ENSEMBLE_SEED);
        let spec = OamModeSpec::new(vec![1, 2], 0.0, true).unwrap();
        let mixing = make_oam_mixing(&spec, base.grid(), 77);
        let mixed = apply_mixing(&base, &mixing).map_err(|e| e.to_string())?;
        let base_n = normalize_channel(&base, &base).map_err(|e| e.to_string())?;
        let mixed_n = normalize_channel(&mixed, &base).map_err(|e| e.to_string())?;

        let gamma = SnrPoint::from_db(15.0);
        let without = ergodic_capacity(&base_n, gamma).map_err(|e| e.to_string())?;
        let with = ergodic_capacity(&mixed_n, gamma).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();

        let n = without.capacity_bps_hz.len() as f64;
        let mean_cap = without.capacity_bps_hz.iter().sum::<f64>() / n;
        let mean_abs_diff = with
            .capacity_bps_hz
            .iter()
            .zip(&without.capacity_bps_hz)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / n;
        ensure!(
            mean_abs_diff < 0.02 * mean_cap,
            "mean |capacity difference| {mean_abs_diff} is not below 2% of mean capacity {mean_cap}"
        );
        for (i, (a, b)) in with
            .capacity_bps_hz
            .iter()
            .zip(&without.capacity_bps_hz)
            .enumerate()
        {
            ensure!(
                (a - b).abs() < 1.0e-9,
                "lossless mixing must preserve capacity per frequency; index {i}: {a} vs {b}"
            );
        }
        ensure!(
            elapsed < Duration::from_secs(10),
            "capacity comparison took {elapsed:?}, budget 10 s"
        );
        Ok(())
    });
}

#[test]
fn criterion_02_gram_invariance() {
    criterion(2, "Gram invariance under lossless mixing", || {
        let base = default_ensemble(ENSEMBLE_SEED);
        let spec = OamModeSpec::new(vec![1, 2], 0.0, true).unwrap();
        let mixing = make_oam_mixing(&spec, base.grid(), 77);
        let mixed = apply_mixing(&base, &mixing).map_err(|e| e.to_string())?;

        let start = Instant::now();
        let report = gram_invariance_check(&mixed, &base, 1.0e-12).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure!(
            report.passed,
            "max deviation {} at {} Hz exceeds tolerance 1e-12",
            report.max_deviation,
            report.worst_freq_hz
        );
        ensure!(
            elapsed < Duration::from_secs(1),
            "gram check took {elapsed:?}, budget 1 s"
        );
        Ok(())
    });
}

#[test]
fn criterion_03_diversity_order_one_ber() {
    criterion(3, "diversity-order-one BER over 25-35 dB", || {
        let start = Instant::now();
        let mut cfg = ExperimentConfig::with_seed(1001);
        cfg.plan = StirringPlan::new(16, 8).unwrap();
        cfg.frames_per_sample = 4;
        cfg.snr_sweep_db = vec![25.0, 27.5, 30.0, 32.5, 35.0];
        cfg.ber_fit_range_db = (25.0, 35.0);

        let ens = prepare_ensembles(&cfg).map_err(|e| e.to_string())?;
        ensure!(
            ens.without_mixing.n_samples() >= 100,
            "need at least 100 channel samples, got {}",
            ens.without_mixing.n_samples()
        );
        let sweep = ber_comparison(&cfg, &ens).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();

        let fit = sweep
            .fit_without
            .as_ref()
            .ok_or("power-law fit unavailable")?;
        ensure!(
            (-1.15..=-0.85).contains(&fit.slope),
            "fitted log-log slope {} is outside [-1.15, -0.85]",
            fit.slope
        );
        for (i, (w, wo)) in sweep
            .with_mixing
            .iter()
            .zip(&sweep.without_mixing)
            .enumerate()
        {
            let band = 3.0 * (w.ber_std_error.powi(2) + wo.ber_std_error.powi(2)).sqrt();
            let diff = (w.ber - wo.ber).abs();
            ensure!(
                diff <= band,
                "at {} dB the curves differ by {diff}, outside the 3-sigma band {band}",
                sweep.gamma_db[i]
            );
        }
        ensure!(
            elapsed < Duration::from_secs(300),
            "BER sweep took {elapsed:?}, budget 5 min"
        );
        Ok(())
    });
}

#[test]
fn criterion_04_64qam_support() {
    criterion(4, "64-QAM support: zero-noise exactness, 35 dB BER", || {
        let base = default_ensemble(ENSEMBLE_SEED);
        let base_n = normalize_channel(&base, &base).map_err(|e| e.to_string())?;
        let cfg = OfdmConfig::default();
        let c = Constellation::new(QamOrder::Qam64);

        let clean = run_link(&base_n, &cfg, &c, SnrPoint::from_db(f64::INFINITY), 1, 5)
            .map_err(|e| e.to_string())?;
        ensure!(
            clean.error_bits == 0 && clean.ber == 0.0,
            "zero-noise run produced {} bit errors over {} bits",
            clean.error_bits,
            clean.total_bits
        );
        ensure!(
            clean.singular_subcarriers == 0,
            "{} subcarriers were excluded as singular, so the zero-error claim would not cover every sample",
            clean.singular_subcarriers
        );

        let noisy = run_link(&base_n, &cfg, &c, SnrPoint::from_db(35.0), 2, 6)
            .map_err(|e| e.to_string())?;
        ensure!(
            noisy.ber < 1.0e-2,
            "BER at 35 dB is {}, expected below 1e-2",
            noisy.ber
        );
        ensure!(
            noisy.error_bits > 0,
            "a 35 dB run of {} bits with no errors at all suggests the noise path is dead",
            noisy.total_bits
        );
        Ok(())
    });
}

#[test]
fn criterion_05_coherence_bandwidth() {
    criterion(5, "coherence bandwidth 2.0 +- 0.5 MHz", || {
        let base = default_ensemble(ENSEMBLE_SEED);
        let measured = coherence_bandwidth(&base, 0.5).map_err(|e| e.to_string())?;
        ensure!(
            !measured.lower_bound,
            "correlation never crossed the threshold inside the grid span"
        );
        ensure!(
            (1.5e6..=2.5e6).contains(&measured.bandwidth_hz),
            "measured coherence bandwidth {} Hz is outside 2.0 +- 0.5 MHz",
            measured.bandwidth_hz
        );
        // Exponential profile with decay constant sigma has |R(df)| =
        // (1 + (2 pi df sigma)^2)^(-1/2), crossing 0.5 at sqrt(3)/(2 pi sigma).
        let analytic = 3f64.sqrt() / (2.0 * std::f64::consts::PI * 137.8e-9);
        let rel = (measured.bandwidth_hz - analytic).abs() / analytic;
        ensure!(
            rel <= 0.10,
            "measured {} Hz deviates {:.1}% from the analytic {} Hz, beyond 10%",
            measured.bandwidth_hz,
            100.0 * rel,
            analytic
        );
        Ok(())
    });
}

#[test]
fn criterion_06_cyclic_prefix_sufficiency() {
    criterion(6, "excess delay below the 640 ns cyclic prefix", || {
        let base = default_ensemble(ENSEMBLE_SEED);
        let impulse = channel_to_impulse(&base).map_err(|e| e.to_string())?;
        let delay = excess_delay(&impulse, 0.999).map_err(|e| e.to_string())?;
        ensure!(delay > 0.0, "excess delay {delay} s is not positive");
        ensure!(
            delay < 640.0e-9,
            "0.999-energy excess delay {delay} s reaches the 640 ns cyclic prefix"
        );
        Ok(())
    });
}

#[test]
fn criterion_07_rayleigh_statistics() {
    criterion(7, "Kolmogorov-Smirnov |H| vs Rayleigh", || {
        let set = flat_ensemble(2024);
        let mut magnitudes = Vec::with_capacity(set.n_samples() * 4);
        for s in 0..set.n_samples() {
            for r in 0..2 {
                for t in 0..2 {
                    magnitudes.push(set.at(s, 0, r, t).norm());
                }
            }
        }
        ensure!(
            magnitudes.len() == 10_000,
            "pool has {} entries, expected 10^4",
            magnitudes.len()
        );
        magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = magnitudes.len() as f64;
        // Unit-variance complex normal entries: |H|^2 is exponential with
        // unit mean, so the magnitude CDF is 1 - exp(-x^2).
        let mut d_stat: f64 = 0.0;
        for (i, &x) in magnitudes.iter().enumerate() {
            let cdf = 1.0 - (-x * x).exp();
            d_stat = d_stat
                .max(cdf - i as f64 / n)
                .max((i as f64 + 1.0) / n - cdf);
        }
        let critical = 1.6276 / n.sqrt(); // alpha = 0.01
        ensure!(
            d_stat < critical,
            "KS statistic {d_stat} exceeds the alpha=0.01 critical value {critical}"
        );
        Ok(())
    });
}

/// Exact bit error probability of Gray-coded square QAM on AWGN at unit
/// signal power, by enumerating per-axis decision cells.
fn qam_awgn_ber_exact(order: usize, gamma_linear: f64) -> f64 {
    let l = (order as f64).sqrt() as usize;
    let h = (l as f64).log2() as usize;
    let d = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
    let sigma_axis = (1.0 / gamma_linear / 2.0).sqrt();
    let q = |x: f64| 0.5 * erfc(x / 2f64.sqrt());
    let gray = |i: usize| i ^ (i >> 1);
    let level = |i: usize| (2.0 * i as f64 - (l as f64 - 1.0)) * d;
    let mut err = 0.0;
    for i in 0..l {
        for j in 0..l {
            let p_lo = if j == 0 {
                1.0
            } else {
                q(((level(j - 1) + level(j)) / 2.0 - level(i)) / sigma_axis)
            };
            let p_hi = if j == l - 1 {
                0.0
            } else {
                q(((level(j) + level(j + 1)) / 2.0 - level(i)) / sigma_axis)
            };
            err += (p_lo - p_hi) * (gray(i) ^ gray(j)).count_ones() as f64;
        }
    }
    err / (l as f64 * h as f64)
}

#[test]
fn criterion_08_oracle_suites() {
    criterion(8, "independent numerical oracles", || {
        // (a) Zero forcing vs the closed-form adjugate inverse of H'H.
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let cplx = |rng: &mut ChaCha12Rng| -> Complex64 {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        for trial in 0..100 {
            let mut h = CMat::zeros(2, 2);
            for r in 0..2 {
                for c in 0..2 {
                    h[(r, c)] = cplx(&mut rng);
                }
            }
            let y = [cplx(&mut rng), cplx(&mut rng)];
            let estimate = zf_equalize(&y, &h).map_err(|e| e.to_string())?;

            let g = h.gram();
            let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
            let rhs = h.hermitian_mul_vec(&y);
            let oracle = [
                (g[(1, 1)] * rhs[0] - g[(0, 1)] * rhs[1]) / det,
                (g[(0, 0)] * rhs[1] - g[(1, 0)] * rhs[0]) / det,
            ];
            for k in 0..2 {
                let diff = (estimate[k] - oracle[k]).norm();
                ensure!(
                    diff <= 1.0e-10,
                    "trial {trial}: ZF estimate deviates {diff} from the adjugate oracle"
                );
            }
        }

        // (b) Ergodic capacity vs closed-form 2x2 eigenvalues on 10^5
        // independent unit-variance draws.
        let set = flat_ensemble(2024);
        let gamma = SnrPoint::from_db(15.0);
        let curve = ergodic_capacity(&set, gamma).map_err(|e| e.to_string())?;
        let scale = gamma.gamma_linear() / 2.0;
        let mut rng = ChaCha12Rng::seed_from_u64(777);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h: Vec<Complex64> = (0..4)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) / 2f64.sqrt()
                })
                .collect();
            let tr: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            let det = (h[0] * h[3] - h[1] * h[2]).norm_sqr();
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            acc += (1.0 + scale * 0.5 * (tr + disc)).log2()
                + (1.0 + scale * 0.5 * (tr - disc)).log2();
        }
        let oracle = acc / draws as f64;
        for v in &curve.capacity_bps_hz {
            ensure!(
                (v - oracle).abs() < 0.02 * oracle,
                "capacity {v} deviates more than 2% from the eigenvalue oracle {oracle}"
            );
        }

        // (c) SISO 64-QAM AWGN BER vs the analytic Q-function expression at
        // an operating point near 1e-3.
        let grid = FrequencyGrid::default();
        let flat = ChannelSet::from_parts(
            grid,
            1,
            1,
            1,
            vec![Complex64::new(1.0, 0.0); grid.count()],
            "flat",
        )
        .map_err(|e| e.to_string())?;
        let cfg = OfdmConfig::new(512, 128, 2.0e8, 1).unwrap();
        let c = Constellation::new(QamOrder::Qam64);
        let gamma_db = 23.0;
        let link = run_link(&flat, &cfg, &c, SnrPoint::from_db(gamma_db), 1500, 404)
            .map_err(|e| e.to_string())?;
        let exact = qam_awgn_ber_exact(64, 10f64.powf(gamma_db / 10.0));
        ensure!(
            (5.0e-4..5.0e-3).contains(&exact),
            "operating point drifted: analytic BER {exact} is not near 1e-3"
        );
        let rel = (link.ber - exact).abs() / exact;
        ensure!(
            rel <= 0.05,
            "simulated BER {} deviates {:.1}% from the analytic {exact}, beyond 5%",
            link.ber,
            100.0 * rel
        );

        // (d) Separable demapping vs exhaustive nearest-point search,
        // exact agreement including tie handling.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for order in [QamOrder::Qpsk, QamOrder::Qam16, QamOrder::Qam64] {
            let c = Constellation::new(order);
            let m = c.bits_per_symbol();
            for _ in 0..2000 {
                let z = Complex64::new(
                    rng.sample::<f64, _>(StandardNormal) * 0.6,
                    rng.sample::<f64, _>(StandardNormal) * 0.6,
                );
                let fast = qam_demap(&[z], &c).map_err(|e| e.to_string())?;
                let mut best = 0usize;
                let mut best_dist = f64::INFINITY;
                for (label, p) in c.points().iter().enumerate() {
                    let dist = (z - p).norm_sqr();
                    if dist < best_dist {
                        best_dist = dist;
                        best = label;
                    }
                }
                let slow: Vec<u8> = (0..m)
                    .rev()
                    .map(|k| ((best >> k) & 1) as u8)
                    .collect();
                ensure!(
                    fast == slow,
                    "demap disagrees with exhaustive search at {z} for order {}",
                    order.order()
                );
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_run_determinism() {
    criterion(9, "byte-identical runs across parallelism degrees", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = ExperimentConfig::with_seed(4242);
        cfg.output_dir = dir.path().to_path_buf();
        cfg.grid = FrequencyGrid::new(5.0e9, 1.0e6, 51).unwrap();
        cfg.plan = StirringPlan::new(5, 4).unwrap();
        cfg.pdp = PowerDelayProfile::new(5.0e-9, 32, 137.8e-9).unwrap();
        cfg.ofdm = OfdmConfig::new(128, 32, 2.0e8, 2).unwrap();
        cfg.frames_per_sample = 2;
        cfg.snr_sweep_db = vec![15.0, 25.0];
        cfg.ber_fit_range_db = (10.0, 30.0);

        let read_all = |arts: &rclink_core::exp::runner::ExperimentArtifacts| {
            [
                &arts.capacity_path,
                &arts.ber_path,
                &arts.correlation_path,
                &arts.summary_path,
            ]
            .map(|p| std::fs::read(p).expect("artifact readable"))
        };

        let first = read_all(&run_experiment(&cfg).map_err(|e| e.to_string())?);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| run_experiment(&cfg))
            .map_err(|e| e.to_string())?;
        let second = read_all(&single);
        let third = read_all(&run_experiment(&cfg).map_err(|e| e.to_string())?);

        for (i, name) in ["capacity.csv", "ber.csv", "correlation.csv", "summary.json"]
            .iter()
            .enumerate()
        {
            ensure!(
                first[i] == second[i],
                "{name} differs between the default pool and a single-thread pool"
            );
            ensure!(first[i] == third[i], "{name} differs between reruns");
        }
        Ok(())
    });
}

#[test]
fn criterion_10_ingestion_round_trip() {
    criterion(10, "channel export/ingest round trip", || {
        let set = synth_channel(
            FrequencyGrid::new(5.0e9, 1.0e6, 7).unwrap(),
            StirringPlan::new(3, 2).unwrap(),
            PowerDelayProfile::new(5.0e-9, 4, 30.0e-9).unwrap(),
            2,
            2,
            88,
        )
        .map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("channels.csv");
        export_channel_csv(&set, &path).map_err(|e| e.to_string())?;
        let back = ingest_channel_csv(&path).map_err(|e| e.to_string())?;
        ensure!(
            back.n_samples() == set.n_samples()
                && back.n_rx() == set.n_rx()
                && back.n_tx() == set.n_tx()
                && back.grid().count() == set.grid().count()
                && back.grid().start_hz() == set.grid().start_hz()
                && back.grid().step_hz() == set.grid().step_hz(),
            "round trip changed the dimensions or grid"
        );
        for (i, (a, b)) in set.data().iter().zip(back.data()).enumerate() {
            ensure!(
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits(),
                "entry {i} changed bits across the round trip: {a} vs {b}"
            );
        }

        let cases: [(&str, &str, fn(&FormatError) -> bool); 8] = [
            (
                "bad header",
                "freq,sample,rx,tx,re,im\n1000000,0,0,0,0,0\n",
                |e| matches!(e, FormatError::BadHeader(_)),
            ),
            (
                "field count",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,0,0,0.5\n",
                |e| matches!(e, FormatError::FieldCount { line: 2, got: 5 }),
            ),
            (
                "unparsable field",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,x,0,0.5,0.5\n",
                |e| matches!(e, FormatError::Parse { line: 2, field: "rx", .. }),
            ),
            (
                "non-finite value",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,0,0,inf,0.5\n",
                |e| matches!(e, FormatError::NonFinite { line: 2, field: "re" }),
            ),
            (
                "duplicate row",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,0,0,1,0\n2000000,0,0,0,1,0\n1000000,0,0,0,2,0\n",
                |e| matches!(e, FormatError::DuplicateRow { line: 4, .. }),
            ),
            (
                "missing tuple",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,0,0,1,0\n1000000,1,0,0,1,0\n2000000,1,0,0,1,0\n",
                |e| matches!(e, FormatError::MissingTuple { sample: 0, .. }),
            ),
            (
                "non-uniform grid",
                "freq_hz,sample,rx,tx,re,im\n1000000,0,0,0,1,0\n2000000,0,0,0,1,0\n4000000,0,0,0,1,0\n",
                |e| matches!(e, FormatError::NonUniformGrid { .. }),
            ),
            (
                "no data rows",
                "freq_hz,sample,rx,tx,re,im\n",
                |e| matches!(e, FormatError::EmptyFile),
            ),
        ];
        for (name, text, is_expected) in cases {
            match ingest_channel_text(text) {
                Err(Error::Format(f)) => {
                    ensure!(is_expected(&f), "{name} fixture raised the wrong error: {f}");
                }
                other => {
                    return Err(format!(
                        "{name} fixture was not rejected as a format error: {other:?}"
                    ))
                }
            }
        }
        Ok(())
    });
}
