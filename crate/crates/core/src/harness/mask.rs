//! Search for a scrambler mask that keeps data from resembling the preamble.
//!
//! Candidates are random 8-byte masks whose 64-bit period has balanced
//! weight and bounded runs (so the scrambled line keeps its transition
//! density). Each candidate is scored by the highest preamble agreement
//! over every window of every scrambled coded region in a fixed corpus:
//! constant, alternating and counting payloads plus random ones. The
//! lowest score wins; ties go to the earliest candidate.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitframe::{build_frame, FrameCodec, FrameLayout, PreamblePattern};
use crate::bits::PackedBits;
use crate::linecode::ScramblerSequence;
use crate::{Error, Result};

pub const DEFAULT_MASK_SEARCH_SEED: u64 = 0x600e_ba5e;
pub const DEFAULT_MASK_SEARCH_TRIALS: usize = 2048;
/// Random payloads in the corpus, after the five structured ones.
pub const RANDOM_CORPUS_FRAMES: usize = 27;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskReport {
    pub mask: ScramblerSequence,
    pub max_score: u32,
    pub zero_mask_score: u32,
    pub candidates_evaluated: usize,
    pub corpus_frames: usize,
    pub windows_per_candidate: usize,
    pub seed: u64,
}

/// Weight in 24..=40 and no cyclic run longer than 6.
pub fn acceptable_mask(word: u64) -> bool {
    let w = word.count_ones();
    if !(24..=40).contains(&w) {
        return false;
    }
    let mut longest = 0;
    let mut run = 0;
    let mut prev = word >> 63 & 1;
    // Two periods catch runs that wrap around.
    for i in 0..128 {
        let b = word >> (i % 64) & 1;
        run = if b == prev { run + 1 } else { 1 };
        prev = b;
        longest = longest.max(run);
    }
    longest <= 6
}

/// Coded regions of the corpus frames, unscrambled.
fn corpus(layout: &FrameLayout, seed: u64) -> Result<Vec<Vec<u8>>> {
    let n = layout.payload_bytes();
    let mut payloads: Vec<Vec<u8>> = vec![
        vec![0x00; n],
        vec![0xff; n],
        vec![0x55; n],
        vec![0xaa; n],
        (0..n).map(|i| i as u8).collect(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for _ in 0..RANDOM_CORPUS_FRAMES {
        let mut p = vec![0u8; n];
        rng.fill_bytes(&mut p);
        payloads.push(p);
    }
    let codec = FrameCodec { scrambler: ScramblerSequence::ZERO, ..FrameCodec::default() };
    payloads
        .iter()
        .map(|p| Ok(build_frame(p, &codec, layout)?.coded_region().to_vec()))
        .collect()
}

struct Windows {
    /// Data window XOR preamble, with the mask phase of each window.
    entries: Vec<(u64, u8)>,
    n: usize,
}

impl Windows {
    fn new(regions: &[Vec<u8>], pattern: &PreamblePattern) -> Self {
        let n = pattern.len();
        let mut entries = Vec::new();
        for r in regions {
            let bits = PackedBits::from_bytes(r);
            for j in 0..=bits.len() - n {
                entries.push((bits.window(j, n) ^ pattern.as_word(), (j % 64) as u8));
            }
        }
        Self { entries, n }
    }

    fn max_score(&self, mask: &ScramblerSequence) -> u32 {
        let m = mask.as_word();
        let keep = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let rot: Vec<u64> = (0..64).map(|r| m.rotate_right(r) & keep).collect();
        let n = self.n as u32;
        self.entries
            .iter()
            .map(|&(d, r)| n - (d ^ rot[r as usize]).count_ones())
            .max()
            .unwrap_or(0)
    }
}

pub fn search_scrambler_mask(pattern: &PreamblePattern, trials: usize, seed: u64) -> Result<MaskReport> {
    if trials == 0 {
        return Err(Error::Config("mask search needs at least one trial".into()));
    }
    let layout = FrameLayout::for_preamble_bits(pattern.len())?;
    let regions = corpus(&layout, seed)?;
    let windows = Windows::new(&regions, pattern);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(u32, ScramblerSequence)> = None;
    let mut evaluated = 0;
    while evaluated < trials {
        let word: u64 = rng.random();
        if !acceptable_mask(word) {
            continue;
        }
        evaluated += 1;
        let mask = ScramblerSequence(word.to_le_bytes());
        let s = windows.max_score(&mask);
        if best.is_none_or(|(b, _)| s < b) {
            best = Some((s, mask));
        }
    }
    let (max_score, mask) = best.expect("at least one candidate");
    Ok(MaskReport {
        mask,
        max_score,
        zero_mask_score: windows.max_score(&ScramblerSequence::ZERO),
        candidates_evaluated: evaluated,
        corpus_frames: regions.len(),
        windows_per_candidate: windows.entries.len(),
        seed,
    })
}

/// Highest preamble agreement of `mask` over the search corpus.
pub fn corpus_max_score(pattern: &PreamblePattern, mask: &ScramblerSequence, seed: u64) -> Result<u32> {
    let layout = FrameLayout::for_preamble_bits(pattern.len())?;
    Ok(Windows::new(&corpus(&layout, seed)?, pattern).max_score(mask))
}
