//! Flat key-value experiment configuration.
//!
//! The file format is one `key = value` pair per line, `#` comments, blank
//! lines ignored. Every key has a default mirroring the reference setup
//! (5-5.2 GHz grid, 400 stirring samples, 512-subcarrier OFDM with CP 128,
//! 64-QAM, 2x2) except `seed`, which must be given — either in the file or
//! on the command line — so no run is silently nondeterministic.

use crate::channel::{FrequencyGrid, PowerDelayProfile, StirringPlan};
use crate::error::{Error, Result};
use crate::oam::OamModeSpec;
use crate::phy::constellation::QamOrder;
use crate::phy::ofdm::OfdmConfig;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Where the channel ensemble comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSource {
    Synthesize,
    Ingest,
}

impl ChannelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelSource::Synthesize => "synthesize",
            ChannelSource::Ingest => "ingest",
        }
    }
}

/// Fully resolved description of one comparison experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: ChannelSource,
    pub input_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,

    pub grid: FrequencyGrid,
    pub plan: StirringPlan,
    pub pdp: PowerDelayProfile,

    pub n_rx: usize,
    pub oam: OamModeSpec,
    pub calibrate_insertion_loss: bool,

    pub ofdm: OfdmConfig,
    pub constellation_order: QamOrder,
    pub frames_per_sample: usize,

    pub snr_sweep_db: Vec<f64>,
    pub capacity_snr_db: f64,
    pub ber_fit_range_db: (f64, f64),
    pub coherence_threshold: f64,
}

impl ExperimentConfig {
    /// The reference setup with a caller-supplied seed.
    pub fn with_seed(seed: u64) -> Self {
        ExperimentConfig {
            mode: ChannelSource::Synthesize,
            input_path: None,
            seed,
            output_dir: PathBuf::from("out"),
            grid: FrequencyGrid::default(),
            plan: StirringPlan::default(),
            pdp: PowerDelayProfile::default(),
            n_rx: 2,
            oam: OamModeSpec::new(vec![1, 2], 2.0, true).expect("default mode spec"),
            calibrate_insertion_loss: true,
            ofdm: OfdmConfig::default(),
            constellation_order: QamOrder::Qam64,
            frames_per_sample: 10,
            snr_sweep_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0],
            capacity_snr_db: 15.0,
            ber_fit_range_db: (25.0, 35.0),
            coherence_threshold: 0.5,
        }
    }

    /// Number of transmit ports / multiplexed streams.
    pub fn n_tx(&self) -> usize {
        self.oam.dim()
    }

    /// Parse a config document, then apply command-line overrides. `text =
    /// None` means "defaults only", in which case the seed override is the
    /// only seed source.
    pub fn resolve(
        text: Option<&str>,
        seed_override: Option<u64>,
        out_override: Option<PathBuf>,
    ) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        if let Some(doc) = text {
            for (lineno, raw) in doc.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::Config(format!(
                        "line {}: expected `key = value`, got `{line}`",
                        lineno + 1
                    )));
                };
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if pairs.insert(key.clone(), value).is_some() {
                    return Err(Error::Config(format!(
                        "line {}: key `{key}` given twice",
                        lineno + 1
                    )));
                }
            }
        }
        Self::from_pairs(pairs, seed_override, out_override)
    }

    fn from_pairs(
        mut pairs: BTreeMap<String, String>,
        seed_override: Option<u64>,
        out_override: Option<PathBuf>,
    ) -> Result<Self> {
        fn take(pairs: &mut BTreeMap<String, String>, key: &str) -> Option<String> {
            pairs.remove(key)
        }
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("key `{key}`: cannot parse `{value}`"))
            })
        }
        fn parse_bool(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(Error::Config(format!(
                    "key `{key}`: expected true/false, got `{other}`"
                ))),
            }
        }
        fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|part| parse::<T>(key, part.trim()))
                .collect()
        }

        let seed = match (take(&mut pairs, "seed"), seed_override) {
            (_, Some(s)) => s,
            (Some(v), None) => parse::<u64>("seed", &v)?,
            (None, None) => {
                return Err(Error::Config(
                    "no seed given; set `seed = <integer>` in the config or pass --seed".into(),
                ))
            }
        };
        let mut cfg = ExperimentConfig::with_seed(seed);

        if let Some(v) = take(&mut pairs, "mode") {
            cfg.mode = match v.as_str() {
                "synthesize" => ChannelSource::Synthesize,
                "ingest" => ChannelSource::Ingest,
                other => {
                    return Err(Error::Config(format!(
                        "key `mode`: expected synthesize or ingest, got `{other}`"
                    )))
                }
            };
        }
        if let Some(v) = take(&mut pairs, "input_path") {
            cfg.input_path = Some(PathBuf::from(v));
        }
        if let Some(v) = take(&mut pairs, "output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(dir) = out_override {
            cfg.output_dir = dir;
        }

        let start = match take(&mut pairs, "grid_start_hz") {
            Some(v) => parse("grid_start_hz", &v)?,
            None => cfg.grid.start_hz(),
        };
        let step = match take(&mut pairs, "grid_step_hz") {
            Some(v) => parse("grid_step_hz", &v)?,
            None => cfg.grid.step_hz(),
        };
        let count = match take(&mut pairs, "grid_count") {
            Some(v) => parse("grid_count", &v)?,
            None => cfg.grid.count(),
        };
        cfg.grid = FrequencyGrid::new(start, step, count).map_err(reword_config)?;

        let platform = match take(&mut pairs, "platform_states") {
            Some(v) => parse("platform_states", &v)?,
            None => cfg.plan.platform_states(),
        };
        let stirrer = match take(&mut pairs, "stirrer_states") {
            Some(v) => parse("stirrer_states", &v)?,
            None => cfg.plan.stirrer_states(),
        };
        cfg.plan = StirringPlan::new(platform, stirrer).map_err(reword_config)?;

        let spacing = match take(&mut pairs, "tap_spacing_s") {
            Some(v) => parse("tap_spacing_s", &v)?,
            None => cfg.pdp.tap_spacing_s(),
        };
        let taps = match take(&mut pairs, "tap_count") {
            Some(v) => parse("tap_count", &v)?,
            None => cfg.pdp.tap_count(),
        };
        let decay = match take(&mut pairs, "decay_constant_s") {
            Some(v) => parse("decay_constant_s", &v)?,
            None => cfg.pdp.decay_constant_s(),
        };
        cfg.pdp = PowerDelayProfile::new(spacing, taps, decay).map_err(reword_config)?;

        if let Some(v) = take(&mut pairs, "n_rx") {
            cfg.n_rx = parse("n_rx", &v)?;
        }
        let modes = match take(&mut pairs, "oam_modes") {
            Some(v) => parse_list::<i32>("oam_modes", &v)?,
            None => cfg.oam.modes().to_vec(),
        };
        let loss = match take(&mut pairs, "insertion_loss_db") {
            Some(v) => parse("insertion_loss_db", &v)?,
            None => cfg.oam.insertion_loss_db(),
        };
        let freq_dep = match take(&mut pairs, "frequency_dependent") {
            Some(v) => parse_bool("frequency_dependent", &v)?,
            None => cfg.oam.frequency_dependent(),
        };
        cfg.oam = OamModeSpec::new(modes, loss, freq_dep).map_err(reword_config)?;
        if let Some(v) = take(&mut pairs, "calibrate_insertion_loss") {
            cfg.calibrate_insertion_loss = parse_bool("calibrate_insertion_loss", &v)?;
        }

        let n_sub = match take(&mut pairs, "n_subcarriers") {
            Some(v) => parse("n_subcarriers", &v)?,
            None => cfg.ofdm.n_subcarriers(),
        };
        let cp = match take(&mut pairs, "cp_len") {
            Some(v) => parse("cp_len", &v)?,
            None => cfg.ofdm.cp_len(),
        };
        let rate = match take(&mut pairs, "sample_rate_hz") {
            Some(v) => parse("sample_rate_hz", &v)?,
            None => cfg.ofdm.sample_rate_hz(),
        };
        cfg.ofdm = OfdmConfig::new(n_sub, cp, rate, cfg.oam.dim()).map_err(reword_config)?;

        if let Some(v) = take(&mut pairs, "constellation_order") {
            cfg.constellation_order =
                QamOrder::from_order(parse::<usize>("constellation_order", &v)?)
                    .map_err(reword_config)?;
        }
        if let Some(v) = take(&mut pairs, "frames_per_sample") {
            cfg.frames_per_sample = parse("frames_per_sample", &v)?;
        }
        if let Some(v) = take(&mut pairs, "snr_sweep_db") {
            cfg.snr_sweep_db = parse_list("snr_sweep_db", &v)?;
        }
        if let Some(v) = take(&mut pairs, "capacity_snr_db") {
            cfg.capacity_snr_db = parse("capacity_snr_db", &v)?;
        }
        let fit_lo = match take(&mut pairs, "ber_fit_lo_db") {
            Some(v) => parse("ber_fit_lo_db", &v)?,
            None => cfg.ber_fit_range_db.0,
        };
        let fit_hi = match take(&mut pairs, "ber_fit_hi_db") {
            Some(v) => parse("ber_fit_hi_db", &v)?,
            None => cfg.ber_fit_range_db.1,
        };
        cfg.ber_fit_range_db = (fit_lo, fit_hi);
        if let Some(v) = take(&mut pairs, "coherence_threshold") {
            cfg.coherence_threshold = parse("coherence_threshold", &v)?;
        }

        if let Some((key, _)) = pairs.into_iter().next() {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == ChannelSource::Ingest && self.input_path.is_none() {
            return Err(Error::Config(
                "ingest mode needs `input_path = <csv file>`".into(),
            ));
        }
        if self.snr_sweep_db.is_empty() {
            return Err(Error::Config("snr_sweep_db must not be empty".into()));
        }
        if !self.snr_sweep_db.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("snr_sweep_db values must be finite".into()));
        }
        if !self.snr_sweep_db.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "snr_sweep_db must be strictly increasing".into(),
            ));
        }
        if !self.capacity_snr_db.is_finite() {
            return Err(Error::Config("capacity_snr_db must be finite".into()));
        }
        let (lo, hi) = self.ber_fit_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "BER fit range ({lo}, {hi}) dB must be finite and increasing"
            )));
        }
        if self.frames_per_sample == 0 {
            return Err(Error::Config("frames_per_sample must be positive".into()));
        }
        if !(self.coherence_threshold > 0.0 && self.coherence_threshold < 1.0) {
            return Err(Error::Config(
                "coherence_threshold must lie strictly between 0 and 1".into(),
            ));
        }
        if self.oam.dim() < 2 {
            return Err(Error::Config(
                "the with/without comparison needs at least two multiplexed modes".into(),
            ));
        }
        if self.n_rx < self.oam.dim() {
            return Err(Error::Config(format!(
                "zero forcing needs n_rx >= number of modes; got {} < {}",
                self.n_rx,
                self.oam.dim()
            )));
        }
        Ok(())
    }
}

/// Domain-type validation failures become config errors when they originate
/// from a config document.
fn reword_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(msg) => Error::Config(msg),
        other => other,
    }
}
