//! 60 GHz free-space link budget.
//!
//! `P_r = P_t + G_t + G_r - FSPL(d) - L_impl - sum(blockage)` against a
//! thermal noise floor `-174 dBm/Hz + NF + 10 log10(B)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub const HORN_GAIN_DBI: f64 = 22.4;
pub const PATCH_GAIN_DBI: f64 = 8.0;
pub const HUMAN_BLOCKAGE_DB: f64 = 20.0;
pub const CLOSED_DOOR_DB: f64 = 15.0;
/// Lumped RF implementation loss that brings the horn/horn free-space
/// range to roughly the 35 m observed at BER 1e-4. A calibration, not a
/// measured value.
pub const DEFAULT_IMPL_LOSS_DB: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Antenna {
    Horn,
    Patch,
}

impl Antenna {
    pub fn gain_dbi(self) -> f64 {
        match self {
            Antenna::Horn => HORN_GAIN_DBI,
            Antenna::Patch => PATCH_GAIN_DBI,
        }
    }
}

/// Optional analog constraint: after `rx_chain_gain_db` of gain the
/// demodulator needs at least `min_input_dbm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodInputConstraint {
    pub rx_chain_gain_db: f64,
    pub min_input_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub carrier_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub impl_loss_db: f64,
    pub demod_input: Option<DemodInputConstraint>,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 0.0,
            tx_gain_dbi: HORN_GAIN_DBI,
            rx_gain_dbi: HORN_GAIN_DBI,
            carrier_hz: 60e9,
            noise_figure_db: 9.0,
            bandwidth_hz: 2e9,
            impl_loss_db: DEFAULT_IMPL_LOSS_DB,
            demod_input: None,
        }
    }
}

impl LinkParams {
    pub fn with_antennas(mut self, tx: Antenna, rx: Antenna) -> Self {
        self.tx_gain_dbi = tx.gain_dbi();
        self.rx_gain_dbi = rx.gain_dbi();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.tx_power_dbm,
            self.tx_gain_dbi,
            self.rx_gain_dbi,
            self.carrier_hz,
            self.noise_figure_db,
            self.bandwidth_hz,
        ];
        if fields.iter().any(|v| !v.is_finite()) || self.impl_loss_db.is_nan() {
            return Err(Error::Config("link parameters must be finite".into()));
        }
        if self.bandwidth_hz <= 0.0 || self.carrier_hz <= 0.0 {
            return Err(Error::Config("bandwidth and carrier must be positive".into()));
        }
        if self.impl_loss_db < 0.0 {
            return Err(Error::Config("implementation loss must be >= 0".into()));
        }
        Ok(())
    }

    pub fn noise_level_dbm(&self) -> f64 {
        noise_level_dbm(self.noise_figure_db, self.bandwidth_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockageKind {
    Human,
    ClosedDoor,
    Custom,
}

/// Extra attenuation, active over `[start_s, stop_s)` when given and
/// always otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageEvent {
    pub kind: BlockageKind,
    pub attenuation_db: f64,
    #[serde(default)]
    pub start_s: Option<f64>,
    #[serde(default)]
    pub stop_s: Option<f64>,
}

impl BlockageEvent {
    pub fn human() -> Self {
        Self { kind: BlockageKind::Human, attenuation_db: HUMAN_BLOCKAGE_DB, start_s: None, stop_s: None }
    }

    pub fn closed_door() -> Self {
        Self { kind: BlockageKind::ClosedDoor, attenuation_db: CLOSED_DOOR_DB, start_s: None, stop_s: None }
    }

    pub fn custom(attenuation_db: f64) -> Result<Self> {
        if !(attenuation_db >= 0.0) {
            return Err(Error::Config(format!("blockage attenuation {attenuation_db} dB")));
        }
        Ok(Self { kind: BlockageKind::Custom, attenuation_db, start_s: None, stop_s: None })
    }

    pub fn during(mut self, start_s: f64, stop_s: f64) -> Self {
        self.start_s = Some(start_s);
        self.stop_s = Some(stop_s);
        self
    }

    pub fn active_at(&self, t: f64) -> bool {
        self.start_s.is_none_or(|s| t >= s) && self.stop_s.is_none_or(|e| t < e)
    }
}

pub fn noise_level_dbm(nf_db: f64, bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + nf_db + 10.0 * bandwidth_hz.log10()
}

/// FSPL at 1 m.
fn fspl_ref_db(carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * carrier_hz / SPEED_OF_LIGHT).log10()
}

pub fn fspl_db(distance_m: f64, carrier_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {distance_m}")));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT).log10())
}

fn total_attenuation<'a>(events: impl IntoIterator<Item = &'a BlockageEvent>) -> f64 {
    events.into_iter().map(|e| e.attenuation_db).sum()
}

/// Power at the receiver with every listed event applied.
pub fn received_power_dbm(params: &LinkParams, distance_m: f64, events: &[BlockageEvent]) -> Result<f64> {
    Ok(params.tx_power_dbm + params.tx_gain_dbi + params.rx_gain_dbi
        - fspl_db(distance_m, params.carrier_hz)?
        - params.impl_loss_db
        - total_attenuation(events))
}

/// Same, applying only events active at time `t_s`.
pub fn received_power_at(params: &LinkParams, distance_m: f64, events: &[BlockageEvent], t_s: f64) -> Result<f64> {
    let active: Vec<BlockageEvent> = events.iter().copied().filter(|e| e.active_at(t_s)).collect();
    received_power_dbm(params, distance_m, &active)
}

pub fn sensitivity_dbm(noise_level_dbm: f64, required_snr_db: f64) -> f64 {
    noise_level_dbm + required_snr_db
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "coverage", content = "meters")]
pub enum Range {
    Meters(f64),
    NoCoverage,
}

impl Range {
    pub fn meters(self) -> Option<f64> {
        match self {
            Range::Meters(m) => Some(m),
            Range::NoCoverage => None,
        }
    }
}

/// Largest distance at which the received power still meets
/// `sensitivity_dbm` (and the demodulator input constraint, if set).
pub fn max_range_m(params: &LinkParams, sensitivity_dbm: f64, events: &[BlockageEvent]) -> Range {
    let mut floor = sensitivity_dbm;
    if let Some(c) = params.demod_input {
        floor = floor.max(c.min_input_dbm - c.rx_chain_gain_db);
    }
    let margin = params.tx_power_dbm + params.tx_gain_dbi + params.rx_gain_dbi
        - params.impl_loss_db
        - total_attenuation(events)
        - fspl_ref_db(params.carrier_hz)
        - floor;
    if !margin.is_finite() {
        return Range::NoCoverage;
    }
    let d = 10f64.powf(margin / 20.0);
    if d > 0.0 && d.is_finite() {
        Range::Meters(d)
    } else {
        Range::NoCoverage
    }
}

/// Eb/N0 at the demodulator for a given information rate.
pub fn distance_to_ebn0(params: &LinkParams, distance_m: f64, bitrate: f64, events: &[BlockageEvent]) -> Result<f64> {
    if !(bitrate > 0.0) {
        return Err(Error::Domain(format!("bitrate must be > 0, got {bitrate}")));
    }
    let pr = received_power_dbm(params, distance_m, events)?;
    Ok(pr - noise_level_dbm(params.noise_figure_db, bitrate))
}
