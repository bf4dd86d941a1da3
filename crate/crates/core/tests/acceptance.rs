//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! if any fails. Run with `cargo test -p gigalink-core --test acceptance`.

use std::time::Instant;

use gigalink_core::bitframe::FrameLayout;
use gigalink_core::fec_rs::{decoded_ber_estimate, rs_decode, rs_encode, K, N};
use gigalink_core::flowctl::{simulate, ClockPlan, FifoConfig, Ingress, SimOptions};
use gigalink_core::framesync::{false_alarm_positions, p_false_alarm, p_miss, p_miss_exact};
use gigalink_core::harness::ber::{run_chain_batch, run_chain_until, ChainSetup};
use gigalink_core::harness::output::render_rows;
use gigalink_core::harness::scenario::ChainConfig;
use gigalink_core::harness::{
    batch_rng, consistent_3sigma, wilson_interval, run_ber, run_flow_sim, run_link_model, run_sync_experiment, search_scrambler_mask,
    OutputFormat, Scenario,
};
use gigalink_core::linecode::diff_encode;
use gigalink_core::linkbudget::{noise_level_dbm, sensitivity_dbm};
use gigalink_core::modem::{add_awgn_in_place, dbpsk_ebn0_for_ber, demod_differential, modulate, NoiseSpec};
use gigalink_core::{Error, PreamblePattern};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_noise_floor() -> Outcome {
    let n = noise_level_dbm(9.0, 2e9);
    check((n - -71.99).abs() <= 0.02, format!("noise floor {n:.3} dBm (want -71.99 ± 0.02)"))
}

fn c2_sensitivity() -> Outcome {
    let s = sensitivity_dbm(noise_level_dbm(9.0, 2e9), 10.5);
    check((s - -61.5).abs() <= 0.05, format!("sensitivity {s:.3} dBm (want -61.5 ± 0.05)"))
}

fn c3_clock_plan() -> Outcome {
    let f2 = ClockPlan::f2_hz();
    let f1 = ClockPlan::f1_hz();
    let f1_mhz = *f1.numer() as f64 / *f1.denom() as f64 / 1e6;
    let exact_f2 = f2 == num_rational::Ratio::from_integer(109_375_000);
    let ratio_ok = f1 / f2 == num_rational::Ratio::new(478, 518);
    let matches = ClockPlan::matches_layout(&FrameLayout::PREAMBLE_64);
    let printed = format!("{f1_mhz:.3}") == "100.929";
    check(
        exact_f2 && ratio_ok && matches && printed,
        format!("f2 = {f2} Hz, f1 = {f1_mhz:.7} MHz, f1/f2 = 478/518: {ratio_ok}, equals frame efficiency: {matches}"),
    )
}

fn orders(a: f64, b: f64) -> f64 {
    (a.log10() - b.log10()).abs()
}

fn c4_sync_analytics() -> Outcome {
    let pm64 = p_miss(59, 1e-3, 64, 2);
    let pm32 = p_miss(29, 1e-3, 32, 2);
    let fa64 = p_false_alarm(59, 64, 2, false_alarm_positions(&FrameLayout::PREAMBLE_64));
    let fa32 = p_false_alarm(29, 32, 2, false_alarm_positions(&FrameLayout::LEGACY_32));
    let pm_ok = (0.5e-10..=5e-10).contains(&pm64) && (3e-8..=3e-7).contains(&pm32);
    let pair_ok = orders(fa64.per_pair, 1e-24) <= 1.5 && orders(fa32.per_pair, 1e-13) <= 1.5;
    let union_ok = orders(fa64.frame_union, 1e-24) <= 1.5 && orders(fa32.frame_union, 1e-13) <= 1.5;
    check(
        pm_ok && (pair_ok || union_ok),
        format!(
            "Pm64 {pm64:.3e}, Pm32 {pm32:.3e}; FA per-pair {:.2e}/{:.2e} (within 1.5 orders: {pair_ok}); \
             FA frame-union {:.2e}/{:.2e} (within: {union_ok})",
            fa64.per_pair, fa32.per_pair, fa64.frame_union, fa32.frame_union
        ),
    )
}

/// Weight of an error pattern with `e` flips out of `n`.
fn pattern_weight(p: &BigRational, e: u32, n: u32) -> BigRational {
    num_traits::pow(p.clone(), e as usize) * num_traits::pow(BigRational::one() - p, (n - e) as usize)
}

fn c5_oracle() -> Outcome {
    let ps = [
        BigRational::new(BigInt::from(1), BigInt::from(100)),
        BigRational::new(BigInt::from(1), BigInt::from(10)),
        BigRational::new(BigInt::from(1), BigInt::from(2)),
    ];
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for n in 1..=16u32 {
        // Agreement of each error pattern against an arbitrary reference
        // word: flipped bits disagree, all others agree.
        let reference: u32 = 0xb5e3 & ((1u32 << n) - 1);
        let agreement: Vec<u32> = (0..1u32 << n)
            .map(|m| n - ((reference ^ m) ^ reference).count_ones())
            .collect();
        for p in &ps {
            let weights: Vec<BigRational> = (0..=n).map(|e| pattern_weight(p, e, n)).collect();
            for gamma in 0..=n {
                let mut single_hit = BigRational::zero();
                for &a in &agreement {
                    if a >= gamma {
                        single_hit += &weights[(n - a) as usize];
                    }
                }
                let single_miss = BigRational::one() - &single_hit;
                let two_miss = if n <= 8 {
                    // Every joint pattern of both banks.
                    let mut hit = BigRational::zero();
                    for &a1 in &agreement {
                        for &a2 in &agreement {
                            if a1 >= gamma && a2 >= gamma {
                                hit += &weights[(n - a1) as usize] * &weights[(n - a2) as usize];
                            }
                        }
                    }
                    BigRational::one() - hit
                } else {
                    BigRational::one() - &single_hit * &single_hit
                };
                cases += 2;
                if p_miss_exact(gamma, p, n, 1) != single_miss {
                    mismatches.push(format!("n={n} γ={gamma} p={p} single"));
                }
                if p_miss_exact(gamma, p, n, 2) != two_miss {
                    mismatches.push(format!("n={n} γ={gamma} p={p} two-bank"));
                }
            }
        }
    }
    check(
        mismatches.is_empty(),
        format!("{cases} (n, γ, p, banks) cases exact; mismatches: {:?}", &mismatches[..mismatches.len().min(5)]),
    )
}

fn c6_modem() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (ebn0, bits) in [(6.0, 2_000_000usize), (8.0, 4_000_000), (10.0, 20_000_000)] {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + ebn0 as u64);
        let noise = NoiseSpec::ebn0(ebn0);
        let (mut errors, mut total) = (0u64, 0u64);
        let chunk = 1_000_000;
        for _ in 0..bits / chunk {
            let data: Vec<u8> = (0..chunk).map(|_| rng.random_range(0..2u8)).collect();
            let mut line = vec![0u8];
            line.extend(diff_encode(&data, 0));
            let mut s = modulate(&line);
            add_awgn_in_place(&mut s.symbols, &noise, &mut rng);
            let rx = demod_differential(&s);
            errors += rx.iter().zip(&data).filter(|(a, b)| a != b).count() as u64;
            total += chunk as u64;
        }
        let p = 0.5 * (-(10f64.powf(ebn0 / 10.0))).exp();
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        let z = (errors as f64 - total as f64 * p) / sigma;
        let point_ok = errors >= 100 && z.abs() <= 3.0;
        ok &= point_ok;
        parts.push(format!("{ebn0} dB: {errors} errors / {total} (theory {:.0}, z = {z:+.2})", total as f64 * p));
    }
    check(ok, parts.join("; "))
}

fn c7_rs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exact = 0;
    for i in 0..10_000 {
        let t = i % 9;
        let data: Vec<u8> = (0..K).map(|_| rng.random()).collect();
        let mut word = rs_encode(&data).unwrap().0;
        let mut pos = std::collections::BTreeSet::new();
        while pos.len() < t {
            pos.insert(rng.random_range(0..N));
        }
        for &p in &pos {
            word[p] ^= rng.random_range(1..=255u8);
        }
        if let Ok(d) = rs_decode(&word) {
            if d.data == data && d.corrections == t {
                exact += 1;
            }
        }
    }
    let (mut flagged, mut silent) = (0, 0);
    let trials = 10_000;
    for _ in 0..trials {
        let data: Vec<u8> = (0..K).map(|_| rng.random()).collect();
        let mut word = rs_encode(&data).unwrap().0;
        let mut pos = std::collections::BTreeSet::new();
        while pos.len() < 9 {
            pos.insert(rng.random_range(0..N));
        }
        for &p in &pos {
            word[p] ^= rng.random_range(1..=255u8);
        }
        match rs_decode(&word) {
            Err(Error::Uncorrectable) => flagged += 1,
            Ok(_) => silent += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let rate = flagged as f64 / trials as f64;
    check(
        exact == 10_000 && rate >= 0.99,
        format!("{exact}/10000 t ≤ 8 exact; 9 errors flagged {flagged}/{trials} ({:.2} %), miscorrected {silent}", rate * 100.0),
    )
}

fn c8_end_to_end() -> Outcome {
    let ebn0 = dbpsk_ebn0_for_ber(1e-3);
    let cfg = ChainConfig::default();
    let setup = ChainSetup::new(&cfg).unwrap();
    let noise = NoiseSpec::ebn0(ebn0);
    let budget = 100_000_000u64;
    let per_frame = (setup.layout.payload_bytes() * 8) as u64;
    let c = run_chain_until(&setup, &noise, 0xacce8, 64, 8, |c| c.frames_sent * per_frame >= budget).unwrap();
    let raw = c.raw_errors as f64 / c.raw_bits as f64;
    let ber = c.payload_errors as f64 / c.payload_bits as f64;
    let pm = p_miss(cfg.gamma, raw, 64, 2);
    let sync_ok = consistent_3sigma(c.frames_lost_to_sync, c.frames_sent, pm);
    let raw_ok = (raw / 1e-3 - 1.0).abs() < 0.05;
    let (lo, hi) = wilson_interval(c.payload_errors, c.payload_bits, 1.96);
    let bound = decoded_ber_estimate(raw);
    check(
        raw_ok && ber < 1e-7 && sync_ok,
        format!(
            "Eb/N0 {ebn0:.3} dB, raw BER {raw:.3e}; coded payload BER {ber:.3e} [95 % CI {lo:.2e}, {hi:.2e}] \
             ({} errors / {} bits, {} failed words; independent-error RS estimate {bound:.2e}); sync lost {} / {} frames vs expected {:.2e} (3σ-consistent: {sync_ok})",
            c.payload_errors,
            c.payload_bits,
            c.failed_words,
            c.frames_lost_to_sync,
            c.frames_sent,
            pm * c.frames_sent as f64
        ),
    )
}

fn c9_identity() -> Outcome {
    let mut bad = Vec::new();
    for gamma in 0..=64u32 {
        let setup = ChainSetup::new(&ChainConfig { gamma, ..ChainConfig::default() }).unwrap();
        let mut total = gigalink_core::harness::ber::ChainCounts::default();
        for b in 0..10 {
            total += run_chain_batch(&setup, &NoiseSpec::noiseless(), 100, &mut batch_rng(900 + gamma as u64, b)).unwrap();
        }
        if total.frames_sent != 1000 || total.frames_lost_to_sync != 0 || total.payload_errors != 0 {
            bad.push(gamma);
        }
    }
    check(bad.is_empty(), format!("1000 frames at each γ in 0..=64; failing γ: {bad:?}"))
}

fn c10_flow() -> Outcome {
    let cfg = FifoConfig::default();
    let opts = SimOptions { duration_write_ticks: 100_000_000, ..SimOptions::default() };
    match simulate(&cfg, &Ingress::ethernet_saturating(), &opts) {
        Ok(r) => {
            let s = &r.stats;
            let conserved = s.bytes_in == s.bytes_out + s.final_occupancy as u64;
            let mbps = s.egress_bps / 1e6;
            let inv = r.trace.check_invariants(cfg.capacity_bytes).is_ok();
            check(
                conserved && inv && (mbps - 807.43).abs() < 0.005,
                format!(
                    "{} write ticks, egress {mbps:.4} Mbps, in {} = out {} + held {}, {} stop/start cycles, max occupancy {}",
                    s.write_ticks, s.bytes_in, s.bytes_out, s.final_occupancy, s.stop_events, s.max_occupancy
                ),
            )
        }
        Err(e) => check(false, format!("simulation failed: {e}")),
    }
}

fn outputs(sc: &Scenario) -> Vec<Vec<u8>> {
    let csv = OutputFormat::Csv;
    let (_, trace) = run_flow_sim(sc).unwrap();
    let mask = search_scrambler_mask(&PreamblePattern::default_64(), 32, sc.seed).unwrap();
    vec![
        render_rows(&run_ber(sc).unwrap(), csv).unwrap(),
        render_rows(&run_sync_experiment(sc).unwrap(), csv).unwrap(),
        render_rows(&run_link_model(sc).unwrap().rows, csv).unwrap(),
        render_rows(&trace.events, csv).unwrap(),
        render_rows(&[mask], csv).unwrap(),
    ]
}

fn c11_determinism() -> Outcome {
    let mut sc = Scenario { seed: 11, ..Scenario::default() };
    sc.ber.ebn0_db = vec![5.0, 6.0, 7.0];
    sc.ber.max_bits = 300_000;
    sc.sync.preamble_bits = vec![64];
    sc.sync.gammas = vec![57, 60];
    sc.sync.ps = vec![2e-2, 5e-2];
    sc.sync.mc_trials = 3_000;
    sc.sync.fa_windows = 500;
    sc.sync.chain_frames = 128;
    sc.flow.duration_write_ticks = 500_000;
    let run_in = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| outputs(&sc))
    };
    let a = run_in(1);
    let b = run_in(1);
    let c = run_in(4);
    let bytes: usize = a.iter().map(Vec::len).sum();
    check(a == b && a == c, format!("ber/sync/link/flow/mask CSVs, {bytes} bytes, 1 vs 1 vs 4 threads identical: {}", a == c))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("C1 noise floor", c1_noise_floor),
        ("C2 sensitivity", c2_sensitivity),
        ("C3 clock plan", c3_clock_plan),
        ("C4 sync analytics", c4_sync_analytics),
        ("C5 oracle equivalence", c5_oracle),
        ("C6 modem fidelity", c6_modem),
        ("C7 RS contract", c7_rs),
        ("C8 end-to-end chain", c8_end_to_end),
        ("C9 full-chain identity", c9_identity),
        ("C10 flow control", c10_flow),
        ("C11 determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{tag}] {name} ({:.1} s): {}", t.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
