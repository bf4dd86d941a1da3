//! Distance sweeps of received power and model BER.

use serde::Serialize;

use crate::fec_rs::decoded_ber_estimate;
use crate::linkbudget::{fspl_db, max_range_m, received_power_dbm, sensitivity_dbm, BlockageEvent, LinkParams};
use crate::modem::{dbpsk_ebn0_for_ber, theoretical_ber, Scheme, SYMBOL_RATE_HZ};
use crate::{Error, Result};

use super::scenario::LinkConfig;
use super::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkRow {
    pub fingerprint: String,
    pub distance_m: f64,
    pub fspl_db: f64,
    pub rx_power_dbm: f64,
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub ber_uncoded: f64,
    pub ber_coded: f64,
    pub rx_power_human_dbm: f64,
    pub rx_power_door_dbm: f64,
    /// With the scenario's blockage list applied.
    pub rx_power_events_dbm: f64,
    pub ber_uncoded_events: f64,
    pub ber_coded_events: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSummary {
    pub noise_floor_dbm: f64,
    pub sensitivity_dbm: f64,
    pub range_at_sensitivity_m: Option<f64>,
    pub ber_target: f64,
    pub required_ebn0_uncoded_db: f64,
    pub required_ebn0_coded_db: f64,
    pub range_uncoded_m: Option<f64>,
    pub range_coded_m: Option<f64>,
    pub range_uncoded_events_m: Option<f64>,
    pub range_coded_events_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    pub rows: Vec<LinkRow>,
    pub summary: LinkSummary,
}

/// Bandwidth-to-bitrate correction from SNR to Eb/N0.
fn bandwidth_gain_db(params: &LinkParams) -> f64 {
    10.0 * (params.bandwidth_hz / SYMBOL_RATE_HZ).log10()
}

fn model_ber(cfg: &LinkConfig, ebn0_db: f64) -> (f64, f64) {
    let unc = theoretical_ber(ebn0_db - cfg.degradation_uncoded_db, Scheme::DbpskDifferential);
    let raw_coded = theoretical_ber(ebn0_db - cfg.degradation_coded_db, Scheme::DbpskDifferential);
    (unc, decoded_ber_estimate(raw_coded))
}

/// Raw channel BER at which the RS decoder output reaches `target`.
pub fn raw_ber_for_decoded(target: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12f64, 0.5f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if decoded_ber_estimate(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

pub fn run_link_model(scenario: &Scenario) -> Result<LinkReport> {
    scenario.validate()?;
    let cfg = &scenario.link;
    let p = &cfg.params;
    let fingerprint = scenario.fingerprint();
    let noise_floor = p.noise_level_dbm();
    let bw_gain = bandwidth_gain_db(p);
    let human = [BlockageEvent::human()];
    let door = [BlockageEvent::closed_door()];

    let rows = cfg
        .distances_m
        .iter()
        .map(|&d| {
            let pr = received_power_dbm(p, d, &[])?;
            let pr_events = received_power_dbm(p, d, &cfg.blockage)?;
            let snr = pr - noise_floor;
            let ebn0 = snr + bw_gain;
            let (bu, bc) = model_ber(cfg, ebn0);
            let (bue, bce) = model_ber(cfg, pr_events - noise_floor + bw_gain);
            Ok(LinkRow {
                fingerprint: fingerprint.clone(),
                distance_m: d,
                fspl_db: fspl_db(d, p.carrier_hz)?,
                rx_power_dbm: pr,
                snr_db: snr,
                ebn0_db: ebn0,
                ber_uncoded: bu,
                ber_coded: bc,
                rx_power_human_dbm: received_power_dbm(p, d, &human)?,
                rx_power_door_dbm: received_power_dbm(p, d, &door)?,
                rx_power_events_dbm: pr_events,
                ber_uncoded_events: bue,
                ber_coded_events: bce,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if cfg.ber_target <= 0.0 {
        return Err(Error::Config("ber_target must be positive".into()));
    }
    let req_unc = dbpsk_ebn0_for_ber(cfg.ber_target) + cfg.degradation_uncoded_db;
    let req_coded = dbpsk_ebn0_for_ber(raw_ber_for_decoded(cfg.ber_target)) + cfg.degradation_coded_db;
    // Power needed for a given Eb/N0.
    let floor_for = |ebn0: f64| noise_floor + ebn0 - bw_gain;
    let sens = sensitivity_dbm(noise_floor, cfg.required_snr_db);
    let summary = LinkSummary {
        noise_floor_dbm: noise_floor,
        sensitivity_dbm: sens,
        range_at_sensitivity_m: max_range_m(p, sens, &[]).meters(),
        ber_target: cfg.ber_target,
        required_ebn0_uncoded_db: req_unc,
        required_ebn0_coded_db: req_coded,
        range_uncoded_m: max_range_m(p, floor_for(req_unc), &[]).meters(),
        range_coded_m: max_range_m(p, floor_for(req_coded), &[]).meters(),
        range_uncoded_events_m: max_range_m(p, floor_for(req_unc), &cfg.blockage).meters(),
        range_coded_events_m: max_range_m(p, floor_for(req_coded), &cfg.blockage).meters(),
    };
    Ok(LinkReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_metre_power_without_losses() {
        let mut sc = Scenario::default();
        sc.link.params.impl_loss_db = 0.0;
        sc.link.distances_m = vec![5.0];
        let r = run_link_model(&sc).unwrap();
        assert!((r.rows[0].rx_power_dbm - -37.2).abs() < 0.05, "{}", r.rows[0].rx_power_dbm);
    }

    #[test]
    fn door_and_human_offsets_are_exact() {
        let r = run_link_model(&Scenario::default()).unwrap();
        for row in &r.rows {
            assert!((row.rx_power_dbm - row.rx_power_door_dbm - 15.0).abs() < 1e-9);
            assert!((row.rx_power_dbm - row.rx_power_human_dbm - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trends_are_monotone_and_coding_extends_range() {
        let r = run_link_model(&Scenario::default()).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[1].rx_power_dbm < w[0].rx_power_dbm);
            assert!(w[1].ber_uncoded >= w[0].ber_uncoded);
            assert!(w[1].ber_coded >= w[0].ber_coded);
        }
        let s = &r.summary;
        assert!(s.range_coded_m.unwrap() > s.range_uncoded_m.unwrap());
        assert!(s.range_uncoded_events_m.unwrap() < s.range_uncoded_m.unwrap());
        assert!((s.sensitivity_dbm - -61.49).abs() < 0.02);
        assert!((s.range_at_sensitivity_m.unwrap() - 35.0).abs() < 1.5);
    }

    #[test]
    fn raw_ber_inversion() {
        let p = raw_ber_for_decoded(1e-6);
        assert!((decoded_ber_estimate(p) / 1e-6 - 1.0).abs() < 1e-3);
        assert!(p > 5e-4 && p < 2e-3);
    }
}
