//! Bit serialization helpers.
//!
//! Bytes go on the wire least-significant bit first. Unpacked bit vectors
//! hold one `0`/`1` per `u8`; [`PackedBits`] stores the same stream in
//! 64-bit words so that correlators can pull arbitrary 64-bit windows.

/// Serialize bytes LSB-first into one bit per element.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in 0..8 {
            out.push((b >> i) & 1);
        }
    }
    out
}

/// Inverse of [`bytes_to_bits`]. A trailing partial byte is zero-padded.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i))
        })
        .collect()
}

/// A bit stream packed into `u64` words; bit `i` lives at word `i / 64`,
/// position `i % 64`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut p = Self::with_capacity(bits.len());
        for &b in bits {
            p.push(b);
        }
        p
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut p = Self::with_capacity(bytes.len() * 8);
        p.extend_bytes(bytes);
        p
    }

    /// Build from packed words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() * 64 >= len, "{} words cannot hold {len} bits", words.len());
        words.truncate(len.div_ceil(64));
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Self { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: u8) {
        let (w, s) = (self.len / 64, self.len % 64);
        if s == 0 {
            self.words.push(0);
        }
        self.words[w] |= u64::from(bit & 1) << s;
        self.len += 1;
    }

    pub fn extend_bytes(&mut self, bytes: &[u8]) {
        if self.len.is_multiple_of(64) {
            // Fast path: whole words.
            let mut chunks = bytes.chunks_exact(8);
            for c in &mut chunks {
                self.words
                    .push(u64::from_le_bytes(c.try_into().expect("chunk of 8")));
                self.len += 64;
            }
            for &b in chunks.remainder() {
                self.push_byte(b);
            }
        } else {
            for &b in bytes {
                self.push_byte(b);
            }
        }
    }

    fn push_byte(&mut self, b: u8) {
        for i in 0..8 {
            self.push((b >> i) & 1);
        }
    }

    pub fn extend_bits(&mut self, bits: &[u8]) {
        for &b in bits {
            self.push(b);
        }
    }

    pub fn get(&self, i: usize) -> u8 {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        ((self.words[i / 64] >> (i % 64)) & 1) as u8
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    /// `n <= 64` bits starting at `pos`, first bit in the LSB.
    pub fn window(&self, pos: usize, n: usize) -> u64 {
        debug_assert!(n <= 64);
        assert!(pos + n <= self.len, "window {pos}+{n} exceeds {}", self.len);
        if n == 0 {
            return 0;
        }
        let (w, s) = (pos / 64, pos % 64);
        let mut v = self.words[w] >> s;
        if s != 0 && w + 1 < self.words.len() {
            v |= self.words[w + 1] << (64 - s);
        }
        if n < 64 {
            v &= (1u64 << n) - 1;
        }
        v
    }

    /// Overwrite `n <= 64` bits at `pos` with the low bits of `value`.
    pub fn write_window(&mut self, pos: usize, n: usize, value: u64) {
        assert!(pos + n <= self.len, "window {pos}+{n} exceeds {}", self.len);
        for i in 0..n {
            let bit = (value >> i) & 1;
            let j = pos + i;
            let w = &mut self.words[j / 64];
            *w = (*w & !(1u64 << (j % 64))) | (bit << (j % 64));
        }
    }

    /// Read `count` bytes starting at an arbitrary bit position.
    pub fn bytes_at(&self, pos: usize, count: usize) -> Vec<u8> {
        (0..count).map(|i| self.window(pos + 8 * i, 8) as u8).collect()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Number of positions where `self` and `other` differ over
    /// `[start, start + len)` in both streams.
    pub fn hamming_range(&self, other: &PackedBits, start: usize, len: usize) -> u64 {
        let mut acc = 0u64;
        let mut off = 0;
        while off < len {
            let n = (len - off).min(64);
            acc += u64::from((self.window(start + off, n) ^ other.window(start + off, n)).count_ones());
            off += n;
        }
        acc
    }
}
