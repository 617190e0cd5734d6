//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::airlink::array::ArrayConfig;
use crate::airlink::budget::LinkBudget;
use crate::airlink::Target;
use crate::dsp::RrcSpec;
use crate::error::{Error, Result};
use crate::frame::{Modulation, Preamble, DEFAULT_HEADER_LEN};
use crate::golay::GolayPair;
use crate::radar::detect::StatSource;
use crate::sync::SyncConfig;

pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Ambiguity,
    Detect,
    Range,
    Velocity,
    Tradeoff,
    Linkbudget,
    Ddmap,
    Crlb,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ambiguity => "ambiguity",
            Self::Detect => "detect",
            Self::Range => "range",
            Self::Velocity => "velocity",
            Self::Tradeoff => "tradeoff",
            Self::Linkbudget => "linkbudget",
            Self::Ddmap => "ddmap",
            Self::Crlb => "crlb",
        }
    }
}

/// Physical and receiver setup shared by all experiments. SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub symbol_rate: f64,
    pub wavelength: f64,
    /// Noise bandwidth `W` over which the SCNR is defined.
    pub noise_bandwidth: f64,
    /// Bandwidth entering the range bound.
    pub crlb_bandwidth: f64,
    pub rrc: RrcSpec,
    /// Frame length `K` in symbols.
    pub k: usize,
    /// Frames per CPI.
    pub m: usize,
    pub header_len: usize,
    pub modulation: Modulation,
    /// π/2 rotation of the preamble symbols.
    pub rotated: bool,
    /// Optional file with the length-128 Golay pair (`a` then `b`, one ±1 per line).
    pub golay_file: Option<PathBuf>,
    pub sync: SyncConfig,
    pub targets: Vec<Target>,
    /// Draw each trial's target range uniformly within one symbol of the
    /// nominal range, so that fractional delays are sampled evenly.
    pub jitter_range: bool,
    /// Clutter-to-noise ratio of the white clutter; absent means noise only.
    pub clutter_to_noise_db: Option<f64>,
    pub array: ArrayConfig,
    pub link: LinkBudget,
    /// Source-to-recipient distance for the communication link.
    pub comm_distance: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            symbol_rate: 1.76e9,
            wavelength: 0.005,
            noise_bandwidth: 2.2e9,
            crlb_bandwidth: 1.76e9,
            rrc: RrcSpec::default(),
            k: 12800,
            m: 10,
            header_len: DEFAULT_HEADER_LEN,
            modulation: Modulation::Bpsk,
            rotated: false,
            golay_file: None,
            sync: SyncConfig::default(),
            targets: vec![Target::new(50.0, 20.0)],
            jitter_range: true,
            clutter_to_noise_db: None,
            array: ArrayConfig::default(),
            link: LinkBudget::default(),
            comm_distance: 50.0,
        }
    }
}

impl Scenario {
    pub fn ts(&self) -> f64 {
        1.0 / self.symbol_rate
    }

    pub fn preamble(&self) -> Result<Preamble> {
        match &self.golay_file {
            Some(p) => Preamble::from_short_pair(GolayPair::load(p)?, self.rotated),
            None => Ok(Preamble::standard().with_rotation(self.rotated)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0 && self.wavelength > 0.0 && self.noise_bandwidth > 0.0 && self.crlb_bandwidth > 0.0)
        {
            return Err(Error::Config("rates, bandwidths and wavelength must be positive".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("scenario needs at least one target".into()));
        }
        for t in &self.targets {
            t.validate()?;
        }
        self.rrc.validate()?;
        self.array.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub scnr_db: Vec<f64>,
    pub distances: Vec<f64>,
    pub pl_exponents: Vec<f64>,
    /// CPI durations (s) for the trade-off.
    pub cpi: Vec<f64>,
    /// Frames per CPI for the trade-off.
    pub frames: Vec<usize>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            scnr_db: Vec::new(),
            distances: (1..=20).map(|i| 10.0 * i as f64).collect(),
            pl_exponents: vec![2.0, 2.5],
            cpi: vec![0.06e-3, 0.1e-3],
            frames: vec![1, 2, 4, 8, 16, 24],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectOptions {
    pub pfa: f64,
    pub stat: StatSource,
    /// Lags around the expected preamble start searched for `E_pream`.
    pub gate: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { pfa: 1e-6, stat: StatSource::Preamble, gate: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityMode {
    /// Moose over `M` frames with `N_D = K`.
    #[default]
    MultiFrame,
    /// Moose inside the STF of one frame with `N_D = 512`.
    SingleFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Training {
    /// The whole preamble (`P = 3328`).
    #[default]
    Preamble,
    /// The sixteen `a128` repetitions (`P = 2048`).
    Stf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityOptions {
    pub mode: VelocityMode,
    pub training: Training,
    /// Radar SCNR of the trade-off runs.
    pub tradeoff_scnr_db: f64,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        Self { mode: VelocityMode::MultiFrame, training: Training::Preamble, tradeoff_scnr_db: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdmapOptions {
    pub zero_pad: usize,
    pub pfa: f64,
    /// Optional CSV of the map in dB around the detected delay bins.
    pub map_csv: Option<PathBuf>,
    /// Delay bins written on each side of the detections.
    pub map_margin: usize,
}

impl Default for DdmapOptions {
    fn default() -> Self {
        Self { zero_pad: 16, pfa: 1e-6, map_csv: None, map_margin: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbiguityOptions {
    /// Length of each sequence of the pair.
    pub length: usize,
    pub max_lag: usize,
    pub doppler_max: f64,
    pub doppler_points: usize,
}

impl Default for AmbiguityOptions {
    fn default() -> Self {
        Self { length: 512, max_lag: 128, doppler_max: 2e7, doppler_points: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool choose. `DMGRADAR_WORKERS` overrides.
    pub workers: usize,
    pub scenario: Scenario,
    pub sweep: Sweep,
    pub detect: DetectOptions,
    pub velocity: VelocityOptions,
    pub ddmap: DdmapOptions,
    pub ambiguity: AmbiguityOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::for_kind(ExperimentKind::Detect)
    }
}

fn range_db(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl ExperimentSpec {
    /// Defaults that reproduce the corresponding figure setup.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut s = Self {
            kind,
            trials: DEFAULT_TRIALS,
            seed: 1,
            workers: 0,
            scenario: Scenario::default(),
            sweep: Sweep::default(),
            detect: DetectOptions::default(),
            velocity: VelocityOptions::default(),
            ddmap: DdmapOptions::default(),
            ambiguity: AmbiguityOptions::default(),
        };
        match kind {
            ExperimentKind::Detect => s.sweep.scnr_db = range_db(-26.0, -16.0, 1.0),
            ExperimentKind::Range => s.sweep.scnr_db = range_db(-10.0, 10.0, 2.0),
            ExperimentKind::Velocity => {
                s.sweep.scnr_db = range_db(-10.0, 20.0, 5.0);
                s.scenario.m = 2;
                s.scenario.k = 41285;
            }
            ExperimentKind::Crlb => s.sweep.scnr_db = range_db(-20.0, 50.0, 5.0),
            ExperimentKind::Ddmap => {
                s.trials = 1;
                s.scenario.targets = two_vehicle_targets();
            }
            ExperimentKind::Ambiguity | ExperimentKind::Linkbudget => s.trials = 1,
            ExperimentKind::Tradeoff => {}
        }
        s
    }

    /// Parses a TOML document. Missing fields take the defaults of `kind`
    /// (or of the document's own `kind` when present).
    pub fn from_toml(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let doc_kind = match value.get("kind") {
            Some(v) => Some(v.clone().try_into::<ExperimentKind>().map_err(|e| Error::Config(format!("kind: {e}")))?),
            None => None,
        };
        if let (Some(a), Some(b)) = (kind, doc_kind) {
            if a != b {
                return Err(Error::Config(format!("config is for `{}`, not `{}`", b.name(), a.name())));
            }
        }
        let kind = kind.or(doc_kind).ok_or_else(|| Error::Config("config does not name an experiment kind".into()))?;
        let mut base = match toml::Value::try_from(Self::for_kind(kind)).map_err(|e| Error::Config(e.to_string()))? {
            toml::Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        merge(&mut base, value);
        base.insert("kind".into(), toml::Value::String(kind.name().into()));
        let spec: Self =
            toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, kind).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.scenario.validate()?;
        let empty = match self.kind {
            ExperimentKind::Detect | ExperimentKind::Range | ExperimentKind::Velocity | ExperimentKind::Crlb => {
                self.sweep.scnr_db.is_empty()
            }
            ExperimentKind::Linkbudget => self.sweep.distances.is_empty() || self.sweep.pl_exponents.is_empty(),
            ExperimentKind::Tradeoff => self.sweep.cpi.is_empty() || self.sweep.frames.is_empty(),
            ExperimentKind::Ddmap | ExperimentKind::Ambiguity => false,
        };
        if empty {
            return Err(Error::Config(format!("sweep for `{}` is empty", self.kind.name())));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Recursive table merge; `over` wins.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Two vehicles in the TX mainlobe: the recipient R straight ahead and a
/// second vehicle T 4.26 m closer, 30 m/s slower and 10° off in azimuth.
pub fn two_vehicle_targets() -> Vec<Target> {
    vec![
        Target { azimuth_deg: 90.0, elevation_deg: 90.0, ..Target::new(14.32, 30.0) },
        Target { azimuth_deg: 100.0, elevation_deg: 90.0, ..Target::new(10.06, 0.0) },
    ]
}
