//! Frame format and preamble.
//!
//! A 64-bit-preamble frame is
//!
//! ```text
//! | preamble 8 B | scramble(RS(word 1) ‖ RS(word 2)) 510 B |   = 518 B
//! ```
//!
//! carrying 2 × 239 payload bytes. The legacy 32-bit format carries a
//! single 255-byte codeword plus one dummy byte after a 4-byte preamble.
//! Preamble bytes are never coded or scrambled.
//!
//! Preambles are one period of a maximal-length LFSR sequence with one
//! extra bit appended to fill a whole number of bytes.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bits::{bits_to_bytes, PackedBits};
use crate::fec_rs::{self, rs_decode, rs_encode};
use crate::linecode::{scramble_in_place, ScramblerSequence};
use crate::{Error, Result};

/// Fibonacci LFSR description. `poly` holds the characteristic polynomial
/// with bit `i` the coefficient of `x^i` (bit `degree` set); `seed` bit `i`
/// is the initial state bit `s[i]`. The sequence obeys
/// `s[n + degree] = XOR of s[n + i] for each i < degree with poly bit i set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfsrSpec {
    pub degree: u32,
    pub poly: u32,
    pub seed: u32,
    pub appended_bit: u8,
}

impl LfsrSpec {
    /// x^6 + x^5 + 1, all-ones seed, appended 0.
    pub const PREAMBLE_64: LfsrSpec = LfsrSpec {
        degree: 6,
        poly: 0b110_0001,
        seed: 0b11_1111,
        appended_bit: 0,
    };

    /// x^5 + x^3 + 1, all-ones seed, appended 0.
    pub const PREAMBLE_32: LfsrSpec = LfsrSpec {
        degree: 5,
        poly: 0b10_1001,
        seed: 0b1_1111,
        appended_bit: 0,
    };

    pub fn period(&self) -> usize {
        (1usize << self.degree) - 1
    }

    /// True if the polynomial is primitive: the multiplicative order of
    /// `x` modulo it is exactly `2^degree - 1`.
    pub fn is_primitive(&self) -> bool {
        let d = self.degree;
        if !(2..=16).contains(&d) || self.poly >> d != 1 || self.poly & 1 == 0 {
            return false;
        }
        let reduce = self.poly & ((1 << d) - 1);
        let mut x: u32 = 1;
        let period = self.period();
        for step in 1..=period {
            x <<= 1;
            if x >> d & 1 == 1 {
                x = (x ^ reduce) & ((1 << d) - 1);
            }
            if x == 1 {
                return step == period;
            }
        }
        false
    }

    /// Raw LFSR output `s[0..count]`.
    pub fn sequence(&self, count: usize) -> Vec<u8> {
        let d = self.degree as usize;
        let mut s: Vec<u8> = (0..d).map(|i| ((self.seed >> i) & 1) as u8).collect();
        while s.len() < count {
            let n = s.len() - d;
            let mut next = 0u8;
            for i in 0..d {
                if (self.poly >> i) & 1 == 1 {
                    next ^= s[n + i];
                }
            }
            s.push(next);
        }
        s.truncate(count);
        s
    }
}

/// Frame preamble: one LFSR period plus the appended bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreamblePattern {
    bits: Vec<u8>,
    spec: LfsrSpec,
}

pub fn generate_preamble(spec: LfsrSpec) -> Result<PreamblePattern> {
    if spec.degree == 0 || spec.degree > 6 {
        return Err(Error::Config(format!(
            "preamble lfsr degree {} unsupported (1..=6)",
            spec.degree
        )));
    }
    if spec.seed & ((1 << spec.degree) - 1) == 0 {
        return Err(Error::Config("lfsr seed must be nonzero".into()));
    }
    if !spec.is_primitive() {
        return Err(Error::Config(format!(
            "lfsr polynomial {:#b} is not primitive of degree {}",
            spec.poly, spec.degree
        )));
    }
    let mut bits = spec.sequence(spec.period());
    bits.push(spec.appended_bit & 1);
    Ok(PreamblePattern { bits, spec })
}

impl PreamblePattern {
    pub fn default_64() -> Self {
        generate_preamble(LfsrSpec::PREAMBLE_64).expect("builtin spec is primitive")
    }

    pub fn legacy_32() -> Self {
        generate_preamble(LfsrSpec::PREAMBLE_32).expect("builtin spec is primitive")
    }

    pub fn for_bits(n: usize) -> Result<Self> {
        match n {
            64 => Ok(Self::default_64()),
            32 => Ok(Self::legacy_32()),
            _ => Err(Error::Config(format!("preamble length {n} (expected 32 or 64)"))),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn generator_spec(&self) -> LfsrSpec {
        self.spec
    }

    /// Packed pattern, first bit in the LSB.
    pub fn as_word(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    /// Pattern bytes as transmitted (LSB-first packing).
    pub fn to_bytes(&self) -> Vec<u8> {
        bits_to_bytes(&self.bits)
    }

    /// Number of agreeing bits with `other` (same length).
    pub fn agreement(&self, window: u64) -> u32 {
        let n = self.len() as u32;
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        n - ((window ^ self.as_word()) & mask).count_ones()
    }
}

/// Byte layout of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub preamble_bytes: usize,
    pub data_words: usize,
    pub payload_bytes_per_word: usize,
    pub coded_bytes_per_word: usize,
    /// Padding after the codewords (the legacy format's dummy byte).
    pub dummy_bytes: usize,
    pub total_frame_bytes: usize,
}

impl FrameLayout {
    pub const PREAMBLE_64: FrameLayout = FrameLayout {
        preamble_bytes: 8,
        data_words: 2,
        payload_bytes_per_word: fec_rs::K,
        coded_bytes_per_word: fec_rs::N,
        dummy_bytes: 0,
        total_frame_bytes: 8 + 2 * fec_rs::N,
    };

    pub const LEGACY_32: FrameLayout = FrameLayout {
        preamble_bytes: 4,
        data_words: 1,
        payload_bytes_per_word: fec_rs::K,
        coded_bytes_per_word: fec_rs::N,
        dummy_bytes: 1,
        total_frame_bytes: 4 + fec_rs::N + 1,
    };

    pub fn for_preamble_bits(n: usize) -> Result<Self> {
        match n {
            64 => Ok(Self::PREAMBLE_64),
            32 => Ok(Self::LEGACY_32),
            _ => Err(Error::Config(format!("preamble length {n} (expected 32 or 64)"))),
        }
    }

    pub fn preamble_bits(&self) -> usize {
        self.preamble_bytes * 8
    }

    pub fn payload_bytes(&self) -> usize {
        self.data_words * self.payload_bytes_per_word
    }

    /// Scrambled region following the preamble.
    pub fn coded_region_bytes(&self) -> usize {
        self.total_frame_bytes - self.preamble_bytes
    }

    pub fn frame_bits(&self) -> usize {
        self.total_frame_bytes * 8
    }

    /// Payload bytes per transmitted byte, exact.
    pub fn efficiency(&self) -> Ratio<u64> {
        Ratio::new(self.payload_bytes() as u64, self.total_frame_bytes as u64)
    }
}

/// Whether the receiver runs the RS decoder. Uncoded frames keep the same
/// layout (parity still transmitted) and take the systematic bytes as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    Rs,
    Uncoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameCodec {
    pub scrambler: ScramblerSequence,
    pub coding: Coding,
}

impl Default for FrameCodec {
    fn default() -> Self {
        Self {
            scrambler: ScramblerSequence::DEFAULT,
            coding: Coding::Rs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    bytes: Vec<u8>,
    layout: FrameLayout,
}

impl Frame {
    pub fn from_bytes(bytes: Vec<u8>, layout: FrameLayout) -> Result<Self> {
        if bytes.len() != layout.total_frame_bytes {
            return Err(Error::Size {
                what: "frame",
                expected: layout.total_frame_bytes,
                actual: bytes.len(),
            });
        }
        Ok(Self { bytes, layout })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    pub fn preamble(&self) -> &[u8] {
        &self.bytes[..self.layout.preamble_bytes]
    }

    pub fn coded_region(&self) -> &[u8] {
        &self.bytes[self.layout.preamble_bytes..]
    }

    pub fn to_bits(&self) -> PackedBits {
        PackedBits::from_bytes(&self.bytes)
    }

    /// One line of lowercase hex, no separators.
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(line: &str, layout: FrameLayout) -> Result<Self> {
        let bytes = hex::decode(line.trim()).map_err(|e| Error::Config(format!("frame hex: {e}")))?;
        Self::from_bytes(bytes, layout)
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub fn build_frame(payload: &[u8], codec: &FrameCodec, layout: &FrameLayout) -> Result<Frame> {
    if payload.len() != layout.payload_bytes() {
        return Err(Error::Size {
            what: "frame payload",
            expected: layout.payload_bytes(),
            actual: payload.len(),
        });
    }
    let preamble = PreamblePattern::for_bits(layout.preamble_bits())?;
    let mut bytes = Vec::with_capacity(layout.total_frame_bytes);
    bytes.extend_from_slice(&preamble.to_bytes());
    for word in payload.chunks(layout.payload_bytes_per_word) {
        bytes.extend_from_slice(&rs_encode(word)?);
    }
    bytes.resize(layout.total_frame_bytes, 0);
    scramble_in_place(&mut bytes[layout.preamble_bytes..], &codec.scrambler);
    Frame::from_bytes(bytes, *layout)
}

/// Per-word receiver outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordStatus {
    Corrected(usize),
    /// Decoder gave up; the raw systematic bytes were passed through.
    Failed,
    /// RS decoding disabled.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFrame {
    pub payload: Vec<u8>,
    pub corrections: Vec<usize>,
}

/// Descramble and decode every word, never failing on decode: failed
/// words fall back to their received systematic bytes.
pub fn decode_words(
    frame_bytes: &[u8],
    codec: &FrameCodec,
    layout: &FrameLayout,
) -> Result<(Vec<u8>, Vec<WordStatus>)> {
    if frame_bytes.len() != layout.total_frame_bytes {
        return Err(Error::Size {
            what: "frame",
            expected: layout.total_frame_bytes,
            actual: frame_bytes.len(),
        });
    }
    let mut coded = frame_bytes[layout.preamble_bytes..].to_vec();
    scramble_in_place(&mut coded, &codec.scrambler);
    let mut payload = Vec::with_capacity(layout.payload_bytes());
    let mut status = Vec::with_capacity(layout.data_words);
    for w in 0..layout.data_words {
        let word = &coded[w * layout.coded_bytes_per_word..(w + 1) * layout.coded_bytes_per_word];
        match codec.coding {
            Coding::Uncoded => {
                payload.extend_from_slice(&word[..layout.payload_bytes_per_word]);
                status.push(WordStatus::Unchecked);
            }
            Coding::Rs => match rs_decode(word) {
                Ok(d) => {
                    payload.extend_from_slice(&d.data);
                    status.push(WordStatus::Corrected(d.corrections));
                }
                Err(Error::Uncorrectable) => {
                    payload.extend_from_slice(&word[..layout.payload_bytes_per_word]);
                    status.push(WordStatus::Failed);
                }
                Err(e) => return Err(e),
            },
        }
    }
    Ok((payload, status))
}

pub fn parse_frame(frame: &Frame, codec: &FrameCodec, layout: &FrameLayout) -> Result<ParsedFrame> {
    let (payload, status) = decode_words(frame.bytes(), codec, layout)?;
    let mut corrections = Vec::with_capacity(status.len());
    for (word, s) in status.into_iter().enumerate() {
        match s {
            WordStatus::Corrected(n) => corrections.push(n),
            WordStatus::Unchecked => corrections.push(0),
            WordStatus::Failed => return Err(Error::DecodeFailure { word }),
        }
    }
    Ok(ParsedFrame { payload, corrections })
}
