//! End-to-end BER runs through the full transmit and receive chain.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitframe::{build_frame, decode_words, FrameCodec, FrameLayout, PreamblePattern, WordStatus};
use crate::bits::PackedBits;
use crate::framesync::{synchronize, SyncParams, OFFSETS};
use crate::linecode::diff_encode;
use crate::modem::{add_awgn_in_place, demod_differential, modulate, theoretical_ber, NoiseSpec, Scheme};
use crate::Result;

use super::scenario::ChainConfig;
use super::{batch_rng, wilson_interval, Scenario};

/// Everything the chain needs, resolved once per run.
#[derive(Debug, Clone)]
pub struct ChainSetup {
    pub layout: FrameLayout,
    pub codec: FrameCodec,
    pub pattern: PreamblePattern,
    pub sync: SyncParams,
}

impl ChainSetup {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        Ok(Self {
            layout: cfg.layout()?,
            codec: cfg.codec(),
            pattern: cfg.pattern()?,
            sync: cfg.sync_params()?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChainCounts {
    pub frames_sent: u64,
    pub frames_lost_to_sync: u64,
    /// Payload bits of frames that were synchronized and decoded.
    pub payload_bits: u64,
    pub payload_errors: u64,
    /// Channel bits over the frames, before the decoder.
    pub raw_bits: u64,
    pub raw_errors: u64,
    pub failed_words: u64,
    pub corrected_bytes: u64,
}

impl std::ops::AddAssign for ChainCounts {
    fn add_assign(&mut self, o: Self) {
        self.frames_sent += o.frames_sent;
        self.frames_lost_to_sync += o.frames_lost_to_sync;
        self.payload_bits += o.payload_bits;
        self.payload_errors += o.payload_errors;
        self.raw_bits += o.raw_bits;
        self.raw_errors += o.raw_errors;
        self.failed_words += o.failed_words;
        self.corrected_bytes += o.corrected_bytes;
    }
}

/// One batch of back-to-back frames at a random bit offset.
///
/// The line is `lead-in (0..8 random bits) | frames | trailing preamble |
/// slack`, differentially encoded against a zero reference symbol. The
/// receiver knows the frame period and runs the two-bank correlator at
/// each frame's byte-level window; a frame counts as lost unless the true
/// offset is chosen.
pub fn run_chain_batch<R: Rng>(setup: &ChainSetup, noise: &NoiseSpec, frames: usize, rng: &mut R) -> Result<ChainCounts> {
    let layout = &setup.layout;
    let frame_bits = layout.frame_bits();
    let lead = rng.random_range(0..OFFSETS);

    let mut tx = PackedBits::with_capacity(lead + frames * frame_bits + 2 * 64);
    for _ in 0..lead {
        tx.push(rng.random_range(0..2u8));
    }
    let mut payloads = Vec::with_capacity(frames);
    let mut payload = vec![0u8; layout.payload_bytes()];
    for _ in 0..frames {
        rng.fill_bytes(&mut payload);
        tx.extend_bytes(build_frame(&payload, &setup.codec, layout)?.bytes());
        payloads.push(payload.clone());
    }
    tx.extend_bytes(&setup.pattern.to_bytes());
    let mut slack = [0u8; 1];
    rng.fill_bytes(&mut slack);
    tx.extend_bytes(&slack);

    let tx_bits = tx.to_bits();
    let mut line = Vec::with_capacity(tx_bits.len() + 1);
    line.push(0u8);
    line.extend(diff_encode(&tx_bits, 0));
    let mut stream = modulate(&line);
    add_awgn_in_place(&mut stream.symbols, noise, rng);
    let rx = PackedBits::from_bits(&demod_differential(&stream));

    let mut c = ChainCounts {
        frames_sent: frames as u64,
        raw_bits: (frames * frame_bits) as u64,
        raw_errors: rx.hamming_range(&tx, lead, frames * frame_bits),
        ..ChainCounts::default()
    };
    for (i, sent) in payloads.iter().enumerate() {
        let d = synchronize(&rx, i * frame_bits, &setup.pattern, &setup.sync)?;
        match d.frame_start_bit {
            Some(start) if d.offset_k == Some(lead + 1) => {
                let bytes = rx.bytes_at(start, layout.total_frame_bytes);
                let (got, status) = decode_words(&bytes, &setup.codec, layout)?;
                c.payload_bits += (got.len() * 8) as u64;
                c.payload_errors += got.iter().zip(sent).map(|(a, b)| (a ^ b).count_ones() as u64).sum::<u64>();
                for s in status {
                    match s {
                        WordStatus::Corrected(n) => c.corrected_bytes += n as u64,
                        WordStatus::Failed => c.failed_words += 1,
                        WordStatus::Unchecked => {}
                    }
                }
            }
            _ => c.frames_lost_to_sync += 1,
        }
    }
    Ok(c)
}

/// Run rounds of `batches_per_round` batches until `done` says stop.
/// Batch `b` always draws from stream `b` of `point_seed`.
pub fn run_chain_until(
    setup: &ChainSetup,
    noise: &NoiseSpec,
    point_seed: u64,
    batch_frames: usize,
    batches_per_round: usize,
    mut done: impl FnMut(&ChainCounts) -> bool,
) -> Result<ChainCounts> {
    let mut total = ChainCounts::default();
    let mut next = 0u64;
    while !done(&total) {
        let round: Vec<ChainCounts> = (next..next + batches_per_round as u64)
            .into_par_iter()
            .map(|b| run_chain_batch(setup, noise, batch_frames, &mut batch_rng(point_seed, b)))
            .collect::<Result<_>>()?;
        for c in round {
            total += c;
        }
        next += batches_per_round as u64;
    }
    Ok(total)
}

/// One Eb/N0 point; column order is the frozen BER CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub fingerprint: String,
    pub ebn0_db: f64,
    pub snr_db: f64,
    pub rs: bool,
    pub preamble_bits: usize,
    pub banks: u8,
    pub gamma: u32,
    /// Post-decoder payload bits and errors.
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ber_ci_low: f64,
    pub ber_ci_high: f64,
    pub raw_bits: u64,
    pub raw_bit_errors: u64,
    pub raw_ber: f64,
    pub raw_ber_theory: f64,
    pub frames_sent: u64,
    pub frames_lost_to_sync: u64,
    pub failed_words: u64,
    pub corrected_bytes: u64,
    /// False when the bit budget ran out before the target error count.
    pub complete: bool,
}

pub fn run_ber(scenario: &Scenario) -> Result<Vec<BerRecord>> {
    scenario.validate()?;
    let setup = ChainSetup::new(&scenario.chain)?;
    let cfg = &scenario.ber;
    let fingerprint = scenario.fingerprint();
    let bits_per_frame = (setup.layout.payload_bytes() * 8) as u64;
    scenario
        .ber
        .ebn0_db
        .par_iter()
        .enumerate()
        .map(|(idx, &ebn0)| {
            let noise = NoiseSpec::ebn0(ebn0).with_degradation(cfg.impl_degradation_db);
            let c = run_chain_until(&setup, &noise, scenario.seed ^ idx as u64, cfg.batch_frames, cfg.batches_per_round, |c| {
                c.payload_errors >= cfg.target_errors || c.frames_sent * bits_per_frame >= cfg.max_bits
            })?;
            let (lo, hi) = wilson_interval(c.payload_errors, c.payload_bits, 1.96);
            Ok(BerRecord {
                fingerprint: fingerprint.clone(),
                ebn0_db: ebn0,
                snr_db: noise.snr_db(),
                rs: scenario.chain.rs,
                preamble_bits: scenario.chain.preamble_bits,
                banks: scenario.chain.banks,
                gamma: scenario.chain.gamma,
                bits_simulated: c.payload_bits,
                bit_errors: c.payload_errors,
                ber: ratio(c.payload_errors, c.payload_bits),
                ber_ci_low: lo,
                ber_ci_high: hi,
                raw_bits: c.raw_bits,
                raw_bit_errors: c.raw_errors,
                raw_ber: ratio(c.raw_errors, c.raw_bits),
                raw_ber_theory: theoretical_ber(noise.effective_ebn0_db(), Scheme::DbpskDifferential),
                frames_sent: c.frames_sent,
                frames_lost_to_sync: c.frames_lost_to_sync,
                failed_words: c.failed_words,
                corrected_bytes: c.corrected_bytes,
                complete: c.payload_errors >= cfg.target_errors,
            })
        })
        .collect()
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rs: bool, ebn0: Vec<f64>) -> Scenario {
        let mut sc = Scenario::default();
        sc.chain.rs = rs;
        sc.ber.ebn0_db = ebn0;
        sc.ber.max_bits = 400_000;
        sc.ber.batch_frames = 8;
        sc.ber.batches_per_round = 4;
        sc
    }

    #[test]
    fn noiseless_chain_is_clean() {
        for (rs, n, banks) in [(true, 64, 2), (false, 64, 1), (true, 32, 2)] {
            let cfg = ChainConfig { rs, preamble_bits: n, banks, gamma: n as u32, ..ChainConfig::default() };
            let setup = ChainSetup::new(&cfg).unwrap();
            let c = run_chain_batch(&setup, &NoiseSpec::noiseless(), 12, &mut batch_rng(5, 0)).unwrap();
            assert_eq!(c.frames_lost_to_sync, 0);
            assert_eq!(c.payload_errors, 0);
            assert_eq!(c.raw_errors, 0);
            assert_eq!(c.payload_bits, 12 * setup.layout.payload_bytes() as u64 * 8);
        }
    }

    #[test]
    fn records_are_consistent_and_deterministic() {
        let sc = small(true, vec![6.0, 9.0]);
        let a = run_ber(&sc).unwrap();
        assert_eq!(a, run_ber(&sc).unwrap());
        for r in &a {
            assert_eq!(r.ber, r.bit_errors as f64 / r.bits_simulated as f64);
            assert!(r.ber_ci_low <= r.ber && r.ber <= r.ber_ci_high);
            assert_eq!(r.frames_sent * 478 * 8, r.bits_simulated + r.frames_lost_to_sync * 478 * 8);
            assert!((r.snr_db - (r.ebn0_db - 3.59)).abs() < 0.01);
        }
        assert!(a[0].raw_ber > a[1].raw_ber);
    }

    #[test]
    fn coding_beats_uncoded() {
        let coded = run_ber(&small(true, vec![7.0])).unwrap();
        let uncoded = run_ber(&small(false, vec![7.0])).unwrap();
        assert!(uncoded[0].bit_errors >= 100);
        assert!(coded[0].ber < uncoded[0].ber, "{} vs {}", coded[0].ber, uncoded[0].ber);
        assert!(coded[0].corrected_bytes > 0);
        assert!(uncoded[0].complete);
    }

    #[test]
    fn raw_ber_tracks_theory() {
        let r = &run_ber(&small(false, vec![6.0])).unwrap()[0];
        let p = r.raw_ber_theory;
        // Differential errors pair up, so allow for the inflated variance.
        let sigma = (2.0 * r.raw_bits as f64 * p).sqrt();
        assert!((r.raw_bit_errors as f64 - r.raw_bits as f64 * p).abs() < 4.0 * sigma);
    }
}
