//! Dual-clock FIFO rate adapter between the GMII byte clock and the
//! source byte clock.
//!
//! The writer offers Ethernet frames at up to one byte per 125 MHz tick;
//! the reader drains one byte per `f1` tick whenever the FIFO is not
//! empty. Crossing the upper threshold asserts *stop* to the source, which
//! finishes the frame in flight and then defers new frames; falling to the
//! lower threshold asserts *start*.
//!
//! Clocks are exact rationals and are interleaved on an integer timeline,
//! so long runs accumulate no drift.

use num_integer::Integer;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitframe::FrameLayout;
use crate::{Error, Result};

/// The baseband clock plan: line rate F2 = 3.5 GHz / 4, byte clock
/// f2 = F2 / 8, and source rate F1 = F2 · 2·239 / (2·(239 + 16) + 8).
pub struct ClockPlan;

impl ClockPlan {
    pub const IF_CARRIER_HZ: u64 = 3_500_000_000;
    pub const GMII_CLOCK_HZ: u64 = 125_000_000;

    pub fn line_rate_hz() -> Ratio<u64> {
        Ratio::new(Self::IF_CARRIER_HZ, 4)
    }

    pub fn f2_hz() -> Ratio<u64> {
        Self::line_rate_hz() / 8
    }

    /// F1 / F2 = 478 / 518.
    pub fn rate_ratio() -> Ratio<u64> {
        Ratio::new(2 * 239, 2 * (239 + 16) + 8)
    }

    pub fn source_rate_hz() -> Ratio<u64> {
        Self::line_rate_hz() * Self::rate_ratio()
    }

    pub fn f1_hz() -> Ratio<u64> {
        Self::source_rate_hz() / 8
    }

    /// True when the rate ratio equals the payload efficiency of `layout`.
    pub fn matches_layout(layout: &FrameLayout) -> bool {
        layout.efficiency() == Self::rate_ratio()
    }
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Convert a frequency in Hz to an exact rational at millihertz resolution.
pub fn clock_from_hz(hz: f64) -> Result<Ratio<u64>> {
    if !(hz > 0.0) || !hz.is_finite() || hz > 1e15 {
        return Err(Error::Config(format!("clock frequency {hz} Hz")));
    }
    Ok(Ratio::new((hz * 1000.0).round() as u64, 1000))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FifoConfig {
    pub capacity_bytes: usize,
    pub upper_threshold: usize,
    pub lower_threshold: usize,
    pub write_clock_hz: Ratio<u64>,
    pub read_clock_hz: Ratio<u64>,
}

impl Default for FifoConfig {
    /// Transmit-side adapter: 125 MHz GMII in, f1 out, 32 KiB with ¾ / ¼
    /// thresholds.
    fn default() -> Self {
        Self {
            capacity_bytes: 32_768,
            upper_threshold: 24_576,
            lower_threshold: 8_192,
            write_clock_hz: Ratio::from_integer(ClockPlan::GMII_CLOCK_HZ),
            read_clock_hz: ClockPlan::f1_hz(),
        }
    }
}

impl FifoConfig {
    /// Receive-side mirror: decoded bytes in at f2, out at f1.
    pub fn receiver() -> Self {
        Self {
            write_clock_hz: ClockPlan::f2_hz(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.lower_threshold
            && self.lower_threshold < self.upper_threshold
            && self.upper_threshold < self.capacity_bytes)
        {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < lower ({}) < upper ({}) < capacity ({})",
                self.lower_threshold, self.upper_threshold, self.capacity_bytes
            )));
        }
        if self.read_clock_hz >= self.write_clock_hz {
            return Err(Error::Config("read clock must be slower than write clock".into()));
        }
        Ok(())
    }

    /// Integer periods `(write, read)` on a shared timeline.
    fn periods(&self) -> (u64, u64) {
        let (a, b) = (u128::from(*self.write_clock_hz.numer()), u128::from(*self.write_clock_hz.denom()));
        let (c, d) = (u128::from(*self.read_clock_hz.numer()), u128::from(*self.read_clock_hz.denom()));
        let (tw, tr) = (b * c, d * a);
        let g = tw.gcd(&tr);
        (
            u64::try_from(tw / g).expect("write period fits u64"),
            u64::try_from(tr / g).expect("read period fits u64"),
        )
    }
}

/// Byte arrival pattern at the writer, in write-clock ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ingress {
    /// Back-to-back frames separated by a fixed idle gap.
    Saturating { frame_bytes: usize, gap_ticks: u64 },
    /// One frame starting every `period_ticks` (deferred while stopped).
    Paced { frame_bytes: usize, period_ticks: u64 },
    /// Uniform frame sizes and gaps.
    Random {
        min_frame_bytes: usize,
        max_frame_bytes: usize,
        max_gap_ticks: u64,
        seed: u64,
    },
}

impl Ingress {
    /// Full-size Ethernet frames with preamble and inter-frame gap idle.
    pub fn ethernet_saturating() -> Self {
        Ingress::Saturating { frame_bytes: 1518, gap_ticks: 20 }
    }

    pub fn max_frame_bytes(&self) -> usize {
        match *self {
            Ingress::Saturating { frame_bytes, .. } | Ingress::Paced { frame_bytes, .. } => frame_bytes,
            Ingress::Random { max_frame_bytes, .. } => max_frame_bytes,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Ingress::Saturating { frame_bytes, .. } | Ingress::Paced { frame_bytes, .. } if frame_bytes == 0 => {
                Err(Error::Config("ingress frame size must be positive".into()))
            }
            Ingress::Paced { period_ticks: 0, .. } => Err(Error::Config("paced period must be positive".into())),
            Ingress::Random { min_frame_bytes, max_frame_bytes, .. }
                if min_frame_bytes == 0 || min_frame_bytes > max_frame_bytes =>
            {
                Err(Error::Config("random ingress needs 0 < min <= max frame size".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Stop/start events and periodic occupancy samples.
    #[default]
    Events,
    /// Also every byte write and read.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub duration_write_ticks: u64,
    pub trace: TraceLevel,
    /// Occupancy sample period in write ticks; 0 disables sampling.
    pub sample_every: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            duration_write_ticks: 1_000_000,
            trace: TraceLevel::Events,
            sample_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Write,
    Read,
    StopAsserted,
    StartAsserted,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    /// Write-clock ticks elapsed when the event occurred.
    pub tick: u64,
    pub event: EventKind,
    pub occupancy: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FifoTrace {
    pub events: Vec<TraceEvent>,
}

impl FifoTrace {
    /// Occupancy within `[0, capacity]`, events in time order, stop and
    /// start strictly alternating starting with stop.
    pub fn check_invariants(&self, capacity: usize) -> Result<()> {
        let mut stopped = false;
        let mut last_tick = 0;
        for e in &self.events {
            if e.occupancy > capacity {
                return Err(Error::Overflow { tick: e.tick, occupancy: e.occupancy, capacity });
            }
            if e.tick < last_tick {
                return Err(Error::Domain(format!("trace out of order at tick {}", e.tick)));
            }
            last_tick = e.tick;
            match e.event {
                EventKind::StopAsserted if stopped => {
                    return Err(Error::Domain(format!("double stop at tick {}", e.tick)))
                }
                EventKind::StartAsserted if !stopped => {
                    return Err(Error::Domain(format!("start without stop at tick {}", e.tick)))
                }
                EventKind::StopAsserted => stopped = true,
                EventKind::StartAsserted => stopped = false,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.events {
            wr.serialize(e).map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStats {
    pub write_ticks: u64,
    pub read_ticks: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub final_occupancy: usize,
    pub max_occupancy: usize,
    /// Lowest occupancy seen after the first stop, if any.
    pub min_occupancy_after_first_stop: Option<usize>,
    pub stop_events: u64,
    pub start_events: u64,
    pub idle_read_ticks: u64,
    pub frames_started: u64,
    pub frames_completed: u64,
    pub elapsed_s: f64,
    pub ingress_bps: f64,
    pub egress_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub stats: FlowStats,
    pub trace: FifoTrace,
}

struct Source {
    ingress: Ingress,
    rng: Option<ChaCha8Rng>,
    in_frame: usize,
    gap_left: u64,
    next_paced_start: u64,
}

impl Source {
    fn new(ingress: Ingress) -> Self {
        let rng = match ingress {
            Ingress::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { ingress, rng, in_frame: 0, gap_left: 0, next_paced_start: 0 }
    }

    fn next_frame_len(&mut self) -> usize {
        match self.ingress {
            Ingress::Saturating { frame_bytes, .. } | Ingress::Paced { frame_bytes, .. } => frame_bytes,
            Ingress::Random { min_frame_bytes, max_frame_bytes, .. } => {
                self.rng.as_mut().expect("rng").random_range(min_frame_bytes..=max_frame_bytes)
            }
        }
    }

    fn next_gap(&mut self) -> u64 {
        match self.ingress {
            Ingress::Saturating { gap_ticks, .. } => gap_ticks,
            Ingress::Paced { .. } => 0,
            Ingress::Random { max_gap_ticks, .. } => self.rng.as_mut().expect("rng").random_range(0..=max_gap_ticks),
        }
    }

    /// May a new frame begin at this tick?
    fn ready(&mut self, tick: u64) -> bool {
        match self.ingress {
            Ingress::Paced { period_ticks, .. } => {
                if tick >= self.next_paced_start {
                    self.next_paced_start += period_ticks;
                    while self.next_paced_start <= tick {
                        self.next_paced_start += period_ticks;
                    }
                    true
                } else {
                    false
                }
            }
            _ => true,
        }
    }
}

pub fn simulate(config: &FifoConfig, ingress: &Ingress, options: &SimOptions) -> Result<FlowReport> {
    config.validate()?;
    ingress.validate()?;
    let (tw, tr) = config.periods();
    let full = options.trace == TraceLevel::Full;

    let mut src = Source::new(ingress.clone());
    let mut trace = FifoTrace::default();
    let mut occ = 0usize;
    let mut stopped = false;
    let (mut next_w, mut next_r) = (0u64, 0u64);
    let (mut wt, mut rt) = (0u64, 0u64);
    let (mut bytes_in, mut bytes_out, mut idle) = (0u64, 0u64, 0u64);
    let (mut stops, mut starts, mut started, mut completed) = (0u64, 0u64, 0u64, 0u64);
    let mut max_occ = 0usize;
    let mut min_after_stop: Option<usize> = None;

    while wt < options.duration_write_ticks {
        // Reads win ties.
        if next_r <= next_w {
            if occ > 0 {
                occ -= 1;
                bytes_out += 1;
                if full {
                    trace.events.push(TraceEvent { tick: wt, event: EventKind::Read, occupancy: occ });
                }
            } else {
                idle += 1;
            }
            if let Some(m) = min_after_stop.as_mut() {
                *m = (*m).min(occ);
            }
            if stopped && occ <= config.lower_threshold {
                stopped = false;
                starts += 1;
                trace.events.push(TraceEvent { tick: wt, event: EventKind::StartAsserted, occupancy: occ });
            }
            rt += 1;
            next_r += tr;
            continue;
        }

        if src.in_frame == 0 {
            if src.gap_left > 0 {
                src.gap_left -= 1;
            } else if !stopped && src.ready(wt) {
                src.in_frame = src.next_frame_len();
                started += 1;
            }
        }
        if src.in_frame > 0 {
            if occ + 1 > config.capacity_bytes {
                return Err(Error::Overflow { tick: wt, occupancy: occ + 1, capacity: config.capacity_bytes });
            }
            occ += 1;
            bytes_in += 1;
            max_occ = max_occ.max(occ);
            src.in_frame -= 1;
            if src.in_frame == 0 {
                completed += 1;
                src.gap_left = src.next_gap();
            }
            if full {
                trace.events.push(TraceEvent { tick: wt, event: EventKind::Write, occupancy: occ });
            }
        }
        if !stopped && occ >= config.upper_threshold {
            stopped = true;
            stops += 1;
            min_after_stop.get_or_insert(occ);
            trace.events.push(TraceEvent { tick: wt, event: EventKind::StopAsserted, occupancy: occ });
        }
        if options.sample_every > 0 && wt % options.sample_every == 0 {
            trace.events.push(TraceEvent { tick: wt, event: EventKind::Sample, occupancy: occ });
        }
        wt += 1;
        next_w += tw;
    }

    debug_assert_eq!(bytes_in, bytes_out + occ as u64);
    let elapsed_s = wt as f64 / ratio_to_f64(config.write_clock_hz);
    Ok(FlowReport {
        stats: FlowStats {
            write_ticks: wt,
            read_ticks: rt,
            bytes_in,
            bytes_out,
            final_occupancy: occ,
            max_occupancy: max_occ,
            min_occupancy_after_first_stop: min_after_stop,
            stop_events: stops,
            start_events: starts,
            idle_read_ticks: idle,
            frames_started: started,
            frames_completed: completed,
            elapsed_s,
            ingress_bps: bytes_in as f64 * 8.0 / elapsed_s,
            egress_bps: bytes_out as f64 * 8.0 / elapsed_s,
        },
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clock_plan_constants() {
        assert_eq!(ClockPlan::f2_hz(), Ratio::from_integer(109_375_000));
        assert_eq!(ClockPlan::rate_ratio(), Ratio::new(478, 518));
        let f1 = ratio_to_f64(ClockPlan::f1_hz());
        assert!((f1 / 1e6 - 100.929).abs() < 5e-4, "{f1}");
        let f1_source = ratio_to_f64(ClockPlan::source_rate_hz());
        assert!((f1_source / 1e6 - 807.43).abs() < 5e-3);
        assert!(ClockPlan::matches_layout(&FrameLayout::PREAMBLE_64));
        assert!(!ClockPlan::matches_layout(&FrameLayout::LEGACY_32));
    }

    #[test]
    fn default_periods() {
        assert_eq!(FifoConfig::default().periods(), (239, 296));
    }

    #[test]
    fn config_validation() {
        let bad = FifoConfig { lower_threshold: 30_000, ..FifoConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let swapped = FifoConfig {
            write_clock_hz: ClockPlan::f1_hz(),
            read_clock_hz: Ratio::from_integer(125_000_000),
            ..FifoConfig::default()
        };
        assert!(swapped.validate().is_err());
        assert!(clock_from_hz(-1.0).is_err());
        assert_eq!(clock_from_hz(125e6).unwrap(), Ratio::from_integer(125_000_000));
    }

    #[test]
    fn sub_rate_ingress_never_stops() {
        // 1000 bytes every 1500 write ticks is 83.3 MB/s < f1.
        let ingress = Ingress::Paced { frame_bytes: 1000, period_ticks: 1500 };
        let opts = SimOptions { duration_write_ticks: 3_000_000, ..SimOptions::default() };
        let r = simulate(&FifoConfig::default(), &ingress, &opts).unwrap();
        assert_eq!(r.stats.stop_events, 0);
        assert!(r.stats.max_occupancy < 1000);
        assert_eq!(r.stats.bytes_in, r.stats.bytes_out + r.stats.final_occupancy as u64);
        let offered = 125e6 * 1000.0 / 1500.0 * 8.0;
        assert!((r.stats.egress_bps / offered - 1.0).abs() < 1e-3);
    }

    #[test]
    fn saturating_ingress_runs_at_source_rate() {
        let opts = SimOptions { duration_write_ticks: 5_000_000, ..SimOptions::default() };
        let cfg = FifoConfig::default();
        let r = simulate(&cfg, &Ingress::ethernet_saturating(), &opts).unwrap();
        let s = &r.stats;
        assert!(s.stop_events > 0);
        assert!((s.egress_bps / 1e6 - 807.43).abs() < 0.01, "{}", s.egress_bps);
        assert!(s.max_occupancy <= cfg.upper_threshold + 1518);
        let min = s.min_occupancy_after_first_stop.unwrap();
        assert!(min + 22 >= cfg.lower_threshold, "min {min}");
        r.trace.check_invariants(cfg.capacity_bytes).unwrap();
    }

    #[test]
    fn overflow_is_reported_with_tick() {
        let cfg = FifoConfig { capacity_bytes: 25_000, ..FifoConfig::default() };
        let ingress = Ingress::Saturating { frame_bytes: 9000, gap_ticks: 0 };
        let err = simulate(&cfg, &ingress, &SimOptions::default()).unwrap_err();
        match err {
            Error::Overflow { tick, occupancy, capacity } => {
                assert_eq!(capacity, 25_000);
                assert_eq!(occupancy, 25_001);
                assert!(tick > 0);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn full_trace_replays_occupancy() {
        let opts = SimOptions { duration_write_ticks: 200_000, trace: TraceLevel::Full, sample_every: 1000 };
        let cfg = FifoConfig { capacity_bytes: 8000, upper_threshold: 6000, lower_threshold: 2000, ..FifoConfig::default() };
        let r = simulate(&cfg, &Ingress::Saturating { frame_bytes: 1500, gap_ticks: 12 }, &opts).unwrap();
        let mut occ: i64 = 0;
        for e in &r.trace.events {
            match e.event {
                EventKind::Write => occ += 1,
                EventKind::Read => occ -= 1,
                _ => {}
            }
            assert_eq!(occ, e.occupancy as i64);
        }
        assert_eq!(occ as usize, r.stats.final_occupancy);
        let mut csv = Vec::new();
        r.trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("tick,event,occupancy\n"));
        assert!(text.contains("stop_asserted"));
    }

    #[test]
    fn receiver_mirror_keeps_up() {
        // 239 of every 259 f2 ticks carry data: exactly the f1 rate.
        let ingress = Ingress::Paced { frame_bytes: 239, period_ticks: 259 };
        let opts = SimOptions { duration_write_ticks: 2_000_000, ..SimOptions::default() };
        let r = simulate(&FifoConfig::receiver(), &ingress, &opts).unwrap();
        assert_eq!(r.stats.stop_events, 0);
        assert!(r.stats.max_occupancy < 300);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn no_overflow_with_frame_headroom(
            min in 64usize..800,
            extra in 0usize..1000,
            gap in 0u64..200,
            seed in any::<u64>(),
            upper in 2_000usize..10_000,
        ) {
            let max = min + extra;
            let cfg = FifoConfig {
                capacity_bytes: upper + max,
                upper_threshold: upper,
                lower_threshold: upper / 3,
                ..FifoConfig::default()
            };
            let ingress = Ingress::Random { min_frame_bytes: min, max_frame_bytes: max, max_gap_ticks: gap, seed };
            let opts = SimOptions { duration_write_ticks: 300_000, ..SimOptions::default() };
            let r = simulate(&cfg, &ingress, &opts).unwrap();
            prop_assert_eq!(r.stats.bytes_in, r.stats.bytes_out + r.stats.final_occupancy as u64);
            prop_assert!(r.stats.max_occupancy <= cfg.capacity_bytes);
            prop_assert!(r.trace.check_invariants(cfg.capacity_bytes).is_ok());
        }
    }
}
