//! FIFO rate-adapter runs.

use serde::Serialize;

use crate::flowctl::{ratio_to_f64, simulate, FifoTrace, FlowStats};
use crate::Result;

use super::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub fingerprint: String,
    pub write_clock_hz: f64,
    pub read_clock_hz: f64,
    pub read_rate_bps: f64,
    pub conservation_ok: bool,
    #[serde(flatten)]
    pub stats: FlowStats,
}

pub fn run_flow_sim(scenario: &Scenario) -> Result<(FlowSummary, FifoTrace)> {
    scenario.validate()?;
    let cfg = scenario.flow.fifo()?;
    let report = simulate(&cfg, &scenario.flow.ingress, &scenario.flow.options())?;
    report.trace.check_invariants(cfg.capacity_bytes)?;
    let s = report.stats;
    Ok((
        FlowSummary {
            fingerprint: scenario.fingerprint(),
            write_clock_hz: ratio_to_f64(cfg.write_clock_hz),
            read_clock_hz: ratio_to_f64(cfg.read_clock_hz),
            read_rate_bps: ratio_to_f64(cfg.read_clock_hz) * 8.0,
            conservation_ok: s.bytes_in == s.bytes_out + s.final_occupancy as u64,
            stats: s,
        },
        report.trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowctl::Ingress;

    #[test]
    fn saturating_default() {
        let (s, trace) = run_flow_sim(&Scenario::default()).unwrap();
        assert!(s.conservation_ok);
        assert!((s.stats.egress_bps / 1e6 - 807.43).abs() < 0.01);
        assert!(s.stats.stop_events > 0);
        assert!(!trace.events.is_empty());
    }

    #[test]
    fn sub_rate_passes_through() {
        let mut sc = Scenario::default();
        sc.flow.ingress = Ingress::Paced { frame_bytes: 1500, period_ticks: 2500 };
        let (s, _) = run_flow_sim(&sc).unwrap();
        assert_eq!(s.stats.stop_events, 0);
        assert!((s.stats.egress_bps - s.stats.ingress_bps).abs() / s.stats.ingress_bps < 1e-3);
    }
}
