//! Shared fixtures for the benchmarks.

use gigalink_core::bitframe::FrameCodec;
use gigalink_core::fec_rs::{rs_encode, K, N};
use gigalink_core::{build_frame, FrameLayout, PackedBits, PreamblePattern};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A codeword with `errors` corrupted bytes.
pub fn corrupted_codeword(errors: usize, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let data: Vec<u8> = (0..K).map(|_| r.random()).collect();
    let mut word = rs_encode(&data).expect("K bytes").0.to_vec();
    for i in 0..errors {
        word[(i * 31) % N] ^= r.random_range(1..=255u8);
    }
    word
}

/// Two back-to-back frames plus the trailing preamble, offset by `lead` bits.
pub fn sync_stream(lead: usize, seed: u64) -> PackedBits {
    let layout = FrameLayout::PREAMBLE_64;
    let mut r = rng(seed);
    let mut s = PackedBits::new();
    for _ in 0..lead {
        s.push(r.random_range(0..2u8));
    }
    for _ in 0..2 {
        let mut p = vec![0u8; layout.payload_bytes()];
        r.fill_bytes(&mut p);
        s.extend_bytes(build_frame(&p, &FrameCodec::default(), &layout).expect("payload size").bytes());
    }
    s.extend_bytes(&PreamblePattern::default_64().to_bytes());
    s.extend_bytes(&[0]);
    s
}
