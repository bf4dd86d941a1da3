//! Byte and frame synchronization with two banks of eight correlators.
//!
//! Correlator `C_k` (k = 1..=8) compares the n-bit window starting `k - 1`
//! bits into the receive buffer with the preamble, so one bank covers all
//! eight byte alignments with `n + 7` bits. The second bank repeats the
//! measurement one frame period later, where the next preamble must sit.
//! A preamble is declared only when the *same* `C_k` reaches the
//! threshold in both banks; this squares the false-alarm probability and
//! roughly doubles the miss probability.
//!
//! The analytic side evaluates the binomial tails exactly over
//! [`BigRational`]; the public `f64` entry points round only at the end,
//! which keeps two-bank false-alarm values around 1e-25 meaningful.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitframe::{FrameLayout, PreamblePattern};
use crate::bits::PackedBits;
use crate::modem::flip_bsc;
use crate::{Error, Result};

/// Correlators per bank: one per bit offset inside a byte.
pub const OFFSETS: usize = 8;

/// Agreement counts for `C_1..=C_8` (index `k - 1`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BankScores(pub [u32; OFFSETS]);

impl BankScores {
    pub fn score(&self, k: usize) -> u32 {
        self.0[k - 1]
    }

    /// `(k, score)` of the best correlator, lowest `k` on ties.
    pub fn best(&self) -> (usize, u32) {
        self.0
            .iter()
            .enumerate()
            .fold((1, self.0[0]), |acc, (i, &s)| if s > acc.1 { (i + 1, s) } else { acc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyncDecision {
    pub detected: bool,
    pub offset_k: Option<usize>,
    /// Absolute bit position of the first preamble bit.
    pub frame_start_bit: Option<usize>,
    /// Scores at the chosen `k` (or the best candidate when not detected).
    pub bank1_score: u32,
    pub bank2_score: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyncParams {
    pub gamma: u32,
    pub preamble_bits: usize,
    pub banks: u8,
    /// Distance from one preamble start to the next.
    pub bank_separation_bytes: usize,
}

impl SyncParams {
    pub fn new(gamma: u32, layout: &FrameLayout, banks: u8) -> Result<Self> {
        let p = Self {
            gamma,
            preamble_bits: layout.preamble_bits(),
            banks,
            bank_separation_bytes: layout.total_frame_bytes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.banks) {
            return Err(Error::Config(format!("banks must be 1 or 2, got {}", self.banks)));
        }
        if self.preamble_bits == 0 || self.preamble_bits > 64 {
            return Err(Error::Config(format!("preamble of {} bits", self.preamble_bits)));
        }
        if self.gamma as usize > self.preamble_bits {
            return Err(Error::Config(format!(
                "threshold {} exceeds preamble length {}",
                self.gamma, self.preamble_bits
            )));
        }
        if self.bank_separation_bytes * 8 < self.preamble_bits {
            return Err(Error::Config("bank separation shorter than the preamble".into()));
        }
        Ok(())
    }

    /// Bytes from the first preamble start through the end of the second
    /// (P1 + D1 + P2); 526 for the 64-bit format.
    pub fn decision_window_bytes(&self) -> usize {
        match self.banks {
            1 => self.preamble_bits / 8,
            _ => self.bank_separation_bytes + self.preamble_bits / 8,
        }
    }

    /// Bits the correlators actually read, including the 7-bit alignment
    /// slack of the last correlator.
    pub fn required_bits(&self) -> usize {
        let span = self.preamble_bits + OFFSETS - 1;
        match self.banks {
            1 => span,
            _ => self.bank_separation_bytes * 8 + span,
        }
    }
}

fn bank_at(stream: &PackedBits, start: usize, pattern: &PreamblePattern) -> BankScores {
    let n = pattern.len();
    let mut s = [0u32; OFFSETS];
    for (k, score) in s.iter_mut().enumerate() {
        *score = pattern.agreement(stream.window(start + k, n));
    }
    BankScores(s)
}

fn check_len(stream: &PackedBits, start: usize, need: usize) -> Result<()> {
    if stream.len() < start + need {
        return Err(Error::Size {
            what: "sync window bits",
            expected: need,
            actual: stream.len().saturating_sub(start),
        });
    }
    Ok(())
}

/// Score both banks over a buffer beginning at the first candidate bit.
pub fn correlate_banks(
    window: &PackedBits,
    pattern: &PreamblePattern,
    separation_bytes: usize,
) -> Result<(BankScores, BankScores)> {
    correlate_banks_at(window, 0, pattern, separation_bytes)
}

pub fn correlate_banks_at(
    stream: &PackedBits,
    start: usize,
    pattern: &PreamblePattern,
    separation_bytes: usize,
) -> Result<(BankScores, BankScores)> {
    check_len(stream, start, separation_bytes * 8 + pattern.len() + OFFSETS - 1)?;
    Ok((
        bank_at(stream, start, pattern),
        bank_at(stream, start + separation_bytes * 8, pattern),
    ))
}

/// Detection rule: some `k` with `bank1[k] >= γ` and (two-bank mode)
/// `bank2[k] >= γ`. Among qualifying offsets the one maximizing the
/// smaller of the two scores wins, lowest `k` on ties. With one bank
/// `scores2` is ignored.
pub fn detect(scores1: &BankScores, scores2: &BankScores, params: &SyncParams) -> SyncDecision {
    let joint = |k: usize| match params.banks {
        1 => scores1.0[k],
        _ => scores1.0[k].min(scores2.0[k]),
    };
    let mut best_k = 0usize;
    for k in 1..OFFSETS {
        if joint(k) > joint(best_k) {
            best_k = k;
        }
    }
    let detected = joint(best_k) >= params.gamma;
    SyncDecision {
        detected,
        offset_k: detected.then_some(best_k + 1),
        frame_start_bit: None,
        bank1_score: scores1.0[best_k],
        bank2_score: if params.banks == 1 { 0 } else { scores2.0[best_k] },
    }
}

/// Correlate and decide at `start`, reading only the banks in use.
pub fn synchronize(
    stream: &PackedBits,
    start: usize,
    pattern: &PreamblePattern,
    params: &SyncParams,
) -> Result<SyncDecision> {
    check_len(stream, start, params.required_bits())?;
    let b1 = bank_at(stream, start, pattern);
    let b2 = if params.banks == 2 {
        bank_at(stream, start + params.bank_separation_bytes * 8, pattern)
    } else {
        BankScores::default()
    };
    let mut d = detect(&b1, &b2, params);
    d.frame_start_bit = d.offset_k.map(|k| start + k - 1);
    Ok(d)
}

// ---------------------------------------------------------------------
// Analytic probabilities

fn binom(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn rational_pow(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Round an exact probability to the nearest `f64`.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if let Some(v) = x.to_f64() {
        if v != 0.0 || x.is_zero() {
            return v;
        }
    }
    // Fall back to scaling by powers of two for values the direct
    // conversion underflows.
    let num = x.numer().clone();
    let den = x.denom().clone();
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let scaled = if shift >= 0 { (num << shift as usize) / den } else { num / (den << (-shift) as usize) };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(-(shift as i32))
}

/// Exact rational value of an `f64` probability.
pub fn exact_probability(p: f64) -> BigRational {
    BigRational::from_float(p).expect("finite probability")
}

/// Single-bank miss: fewer than `gamma` of `n` bits agree when each bit is
/// independently wrong with probability `p`.
pub fn p_miss_single_exact(gamma: u32, p: &BigRational, n: u32) -> BigRational {
    if gamma == 0 {
        return BigRational::zero();
    }
    if gamma > n {
        return BigRational::one();
    }
    let ok = BigRational::one() - p;
    (0..gamma).fold(BigRational::zero(), |acc, j| {
        acc + BigRational::from(binom(n, j)) * rational_pow(&ok, j) * rational_pow(p, n - j)
    })
}

/// Miss probability with one or two banks; two banks miss if either does.
pub fn p_miss_exact(gamma: u32, p: &BigRational, n: u32, banks: u8) -> BigRational {
    let single = p_miss_single_exact(gamma, p, n);
    match banks {
        1 => single,
        _ => {
            let hit = BigRational::one() - single;
            BigRational::one() - &hit * &hit
        }
    }
}

pub fn p_miss(gamma: u32, p: f64, n: u32, banks: u8) -> f64 {
    rational_to_f64(&p_miss_exact(gamma, &exact_probability(p), n, banks))
}

/// Probability that one correlator over equiprobable random bits reaches
/// `gamma`: `sum_{j >= gamma} C(n, j) / 2^n`, raised to the number of banks
/// that must agree.
pub fn p_false_alarm_pair_exact(gamma: u32, n: u32, banks: u8) -> BigRational {
    let count = (gamma.min(n + 1)..=n).fold(BigInt::zero(), |acc, j| acc + binom(n, j));
    let q = BigRational::new(count, BigInt::one() << n as usize);
    match banks {
        1 => q,
        _ => &q * &q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FalseAlarm {
    /// One candidate position, all banks agreeing at the same `k`.
    pub per_pair: f64,
    /// Union bound over `positions` candidates, capped at 1.
    pub frame_union: f64,
    pub positions: u64,
}

pub fn p_false_alarm(gamma: u32, n: u32, banks: u8, positions: u64) -> FalseAlarm {
    let exact = p_false_alarm_pair_exact(gamma, n, banks);
    let union = (&exact * BigRational::from(BigInt::from(positions))).min(BigRational::one());
    FalseAlarm {
        per_pair: rational_to_f64(&exact),
        frame_union: rational_to_f64(&union),
        positions,
    }
}

/// Candidate positions per frame for the union convention: every bit
/// offset of the scrambled data region.
pub fn false_alarm_positions(layout: &FrameLayout) -> u64 {
    (layout.coded_region_bytes() * 8) as u64
}

// ---------------------------------------------------------------------
// Monte Carlo

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McEstimate {
    pub events: u64,
    pub trials: u64,
}

impl McEstimate {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.events as f64 / self.trials as f64
        }
    }

    /// `|observed - trials·p| <= z·sqrt(trials·p(1-p))`.
    pub fn consistent_with(&self, p: f64, z: f64) -> bool {
        let n = self.trials as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        (self.events as f64 - n * p).abs() <= z * sigma
    }
}

fn random_bits<R: RngCore>(len: usize, rng: &mut R) -> PackedBits {
    let words = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
    PackedBits::from_words(words, len)
}

/// Empirical miss rate through [`synchronize`]: random byte alignment,
/// random surrounding data, every buffer bit through a BSC(p). A trial
/// counts as a miss unless the true offset is detected.
pub fn mc_p_miss(params: &SyncParams, p: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    params.validate()?;
    let pattern = PreamblePattern::for_bits(params.preamble_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = params.required_bits();
    let mut events = 0;
    for _ in 0..trials {
        let k = rng.random_range(1..=OFFSETS);
        let mut buf = random_bits(need, &mut rng);
        buf.write_window(k - 1, pattern.len(), pattern.as_word());
        if params.banks == 2 {
            buf.write_window(k - 1 + params.bank_separation_bytes * 8, pattern.len(), pattern.as_word());
        }
        flip_bsc(&mut buf, p, &mut rng);
        let d = synchronize(&buf, 0, &pattern, params)?;
        if d.offset_k != Some(k) {
            events += 1;
        }
    }
    Ok(McEstimate { events, trials })
}

/// Empirical per-position false-alarm rate over random data: each trial
/// scores all eight offsets, and every offset qualifying in all banks
/// counts once. `trials` is the number of offsets examined.
pub fn mc_p_false_alarm(params: &SyncParams, windows: u64, seed: u64) -> Result<McEstimate> {
    params.validate()?;
    let pattern = PreamblePattern::for_bits(params.preamble_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = params.required_bits();
    let mut events = 0;
    for _ in 0..windows {
        let buf = random_bits(need, &mut rng);
        let b1 = bank_at(&buf, 0, &pattern);
        let b2 = if params.banks == 2 {
            bank_at(&buf, params.bank_separation_bytes * 8, &pattern)
        } else {
            b1
        };
        events += (0..OFFSETS)
            .filter(|&k| b1.0[k] >= params.gamma && (params.banks == 1 || b2.0[k] >= params.gamma))
            .count() as u64;
    }
    Ok(McEstimate { events, trials: windows * OFFSETS as u64 })
}

// ---------------------------------------------------------------------
// Curve sweeps

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub preamble_bits: Vec<usize>,
    pub banks: Vec<u8>,
    /// Thresholds; values above a preamble's length are skipped for it.
    pub gammas: Vec<u32>,
    pub ps: Vec<f64>,
    /// Monte Carlo trials per row; 0 disables the column.
    pub mc_trials: u64,
    /// Fill `p_miss_mc` only when `p_miss_analytic * mc_trials` reaches this.
    pub min_expected_events: f64,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            preamble_bits: vec![32, 64],
            banks: vec![1, 2],
            gammas: vec![26, 27, 28, 29, 30, 55, 56, 57, 58, 59, 60],
            ps: vec![1e-4, 1e-3, 1e-2, 2e-2, 5e-2],
            mc_trials: 20_000,
            min_expected_events: 100.0,
            seed: 0,
        }
    }
}

/// One row of the frozen sync CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub banks: u8,
    pub gamma: u32,
    pub p: f64,
    pub p_miss_analytic: f64,
    pub p_miss_mc: Option<f64>,
    pub p_fa_per_pair: f64,
    pub p_fa_frame_union: f64,
}

pub fn sweep_curves(grid: &SweepGrid) -> Result<Vec<CurveRow>> {
    let mut points = Vec::new();
    for &n in &grid.preamble_bits {
        let layout = FrameLayout::for_preamble_bits(n)?;
        for &banks in &grid.banks {
            for &gamma in grid.gammas.iter().filter(|&&g| g as usize <= n) {
                for &p in &grid.ps {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Config(format!("bit error probability {p}")));
                    }
                    points.push((layout, n, banks, gamma, p));
                }
            }
        }
    }
    points
        .into_par_iter()
        .enumerate()
        .map(|(idx, (layout, n, banks, gamma, p))| {
            let params = SyncParams::new(gamma, &layout, banks)?;
            let analytic = p_miss(gamma, p, n as u32, banks);
            let fa = p_false_alarm(gamma, n as u32, banks, false_alarm_positions(&layout));
            let p_miss_mc = if grid.mc_trials > 0 && analytic * grid.mc_trials as f64 >= grid.min_expected_events {
                Some(mc_p_miss(&params, p, grid.mc_trials, grid.seed ^ idx as u64)?.rate())
            } else {
                None
            };
            Ok(CurveRow {
                n,
                banks,
                gamma,
                p,
                p_miss_analytic: analytic,
                p_miss_mc,
                p_fa_per_pair: fa.per_pair,
                p_fa_frame_union: fa.frame_union,
            })
        })
        .collect()
}
