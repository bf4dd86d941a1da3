//! Experiment configuration, loadable from TOML or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitframe::{Coding, FrameCodec, FrameLayout, PreamblePattern};
use crate::flowctl::{clock_from_hz, FifoConfig, Ingress, SimOptions, TraceLevel};
use crate::framesync::{SweepGrid, SyncParams};
use crate::linecode::ScramblerSequence;
use crate::linkbudget::{BlockageEvent, LinkParams};
use crate::modem::{MEASURED_DEGRADATION_CODED_DB, MEASURED_DEGRADATION_UNCODED_DB};
use crate::{Error, Result};

use super::output::OutputFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub chain: ChainConfig,
    pub ber: BerConfig,
    pub sync: SyncConfig,
    pub link: LinkConfig,
    pub flow: FlowConfig,
    /// Not part of the fingerprint.
    pub output: OutputConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 1,
            chain: ChainConfig::default(),
            ber: BerConfig::default(),
            sync: SyncConfig::default(),
            link: LinkConfig::default(),
            flow: FlowConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Pipeline stage toggles shared by the BER and chain-level sync runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub rs: bool,
    pub preamble_bits: usize,
    pub banks: u8,
    pub gamma: u32,
    pub scrambler: ScramblerSequence,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            rs: true,
            preamble_bits: 64,
            banks: 2,
            gamma: 59,
            scrambler: ScramblerSequence::DEFAULT,
        }
    }
}

impl ChainConfig {
    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::for_preamble_bits(self.preamble_bits)
    }

    pub fn codec(&self) -> FrameCodec {
        FrameCodec {
            scrambler: self.scrambler,
            coding: if self.rs { Coding::Rs } else { Coding::Uncoded },
        }
    }

    pub fn sync_params(&self) -> Result<SyncParams> {
        SyncParams::new(self.gamma, &self.layout()?, self.banks)
    }

    pub fn pattern(&self) -> Result<PreamblePattern> {
        PreamblePattern::for_bits(self.preamble_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerConfig {
    pub ebn0_db: Vec<f64>,
    /// Stop a point once this many post-decoder payload bit errors are seen.
    pub target_errors: u64,
    /// ...or once this many payload bits have been sent.
    pub max_bits: u64,
    pub batch_frames: usize,
    pub batches_per_round: usize,
    /// Extra SNR penalty applied to the channel.
    pub impl_degradation_db: f64,
}

impl Default for BerConfig {
    fn default() -> Self {
        Self {
            ebn0_db: vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            target_errors: 100,
            max_bits: 20_000_000,
            batch_frames: 32,
            batches_per_round: 8,
            impl_degradation_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    pub preamble_bits: Vec<usize>,
    pub banks: Vec<u8>,
    pub gammas: Vec<u32>,
    pub ps: Vec<f64>,
    pub mc_trials: u64,
    /// Random windows for the empirical false-alarm column (8 offsets each).
    pub fa_windows: u64,
    pub min_expected_events: f64,
    /// Eb/N0 points for chain-level sync-loss counting with `chain`.
    pub chain_ebn0_db: Vec<f64>,
    pub chain_frames: u64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        let grid = SweepGrid::default();
        Self {
            preamble_bits: grid.preamble_bits,
            banks: grid.banks,
            gammas: grid.gammas,
            ps: grid.ps,
            mc_trials: grid.mc_trials,
            fa_windows: 20_000,
            min_expected_events: grid.min_expected_events,
            chain_ebn0_db: vec![5.0, 6.0],
            chain_frames: 20_000,
        }
    }
}

impl SyncConfig {
    pub fn grid(&self, seed: u64) -> SweepGrid {
        SweepGrid {
            preamble_bits: self.preamble_bits.clone(),
            banks: self.banks.clone(),
            gammas: self.gammas.clone(),
            ps: self.ps.clone(),
            mc_trials: self.mc_trials,
            min_expected_events: self.min_expected_events,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub params: LinkParams,
    pub distances_m: Vec<f64>,
    /// BER at which coded and uncoded ranges are reported.
    pub ber_target: f64,
    /// Applied in the `*_events` what-if columns.
    pub blockage: Vec<BlockageEvent>,
    pub degradation_uncoded_db: f64,
    pub degradation_coded_db: f64,
    /// SNR over the receiver bandwidth that defines the sensitivity.
    pub required_snr_db: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            params: LinkParams::default(),
            distances_m: (1..=60).map(f64::from).collect(),
            ber_target: 1e-6,
            blockage: vec![BlockageEvent::human()],
            degradation_uncoded_db: MEASURED_DEGRADATION_UNCODED_DB,
            degradation_coded_db: MEASURED_DEGRADATION_CODED_DB,
            required_snr_db: 10.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub capacity_bytes: usize,
    pub upper_threshold: usize,
    pub lower_threshold: usize,
    /// Exact plan clocks when unset.
    pub write_clock_hz: Option<f64>,
    pub read_clock_hz: Option<f64>,
    pub ingress: Ingress,
    pub duration_write_ticks: u64,
    pub trace: TraceLevel,
    pub sample_every: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let cfg = FifoConfig::default();
        Self {
            capacity_bytes: cfg.capacity_bytes,
            upper_threshold: cfg.upper_threshold,
            lower_threshold: cfg.lower_threshold,
            write_clock_hz: None,
            read_clock_hz: None,
            ingress: Ingress::ethernet_saturating(),
            duration_write_ticks: 10_000_000,
            trace: TraceLevel::Events,
            sample_every: 0,
        }
    }
}

impl FlowConfig {
    pub fn fifo(&self) -> Result<FifoConfig> {
        let base = FifoConfig::default();
        let cfg = FifoConfig {
            capacity_bytes: self.capacity_bytes,
            upper_threshold: self.upper_threshold,
            lower_threshold: self.lower_threshold,
            write_clock_hz: self.write_clock_hz.map(clock_from_hz).transpose()?.unwrap_or(base.write_clock_hz),
            read_clock_hz: self.read_clock_hz.map(clock_from_hz).transpose()?.unwrap_or(base.read_clock_hz),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn options(&self) -> SimOptions {
        SimOptions {
            duration_write_ticks: self.duration_write_ticks,
            trace: self.trace,
            sample_every: self.sample_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: OutputFormat,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Format is chosen by extension: `.json`, otherwise TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let sc = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.sync_params()?;
        let b = &self.ber;
        if b.batch_frames == 0 || b.batches_per_round == 0 {
            return Err(Error::Config("ber batch sizes must be positive".into()));
        }
        if b.ebn0_db.iter().any(|e| e.is_nan()) || b.impl_degradation_db.is_nan() {
            return Err(Error::Config("ber grid contains NaN".into()));
        }
        if self.sync.ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("sync grid probabilities must lie in [0, 1]".into()));
        }
        self.link.params.validate()?;
        if self.link.distances_m.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("link distances must be positive".into()));
        }
        if !(self.link.ber_target > 0.0 && self.link.ber_target < 0.5) {
            return Err(Error::Config("link ber_target must lie in (0, 0.5)".into()));
        }
        self.flow.fifo()?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every input except the output
    /// section.
    pub fn fingerprint(&self) -> String {
        let mut inputs = self.clone();
        inputs.output = OutputConfig::default();
        let json = serde_json::to_vec(&inputs).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }
}
