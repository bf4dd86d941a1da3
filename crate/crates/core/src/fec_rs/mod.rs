//! Reed-Solomon (255, 239) over GF(2^8).
//!
//! Systematic, 16 parity symbols, t = 8. The generator has roots
//! α^0 ..= α^15 in the field built on 0x11d. Byte 0 of a codeword is the
//! coefficient of x^254; data occupies bytes `0..239` and parity
//! `239..255`.
//!
//! Decoding is the textbook syndrome / Berlekamp-Massey / Chien / Forney
//! pipeline. The corrected word is re-checked against its syndromes
//! before it is returned, so a locator that does not fully explain the
//! received word is reported as [`Error::Uncorrectable`] rather than
//! silently accepted.

pub mod gf;

use crate::{Error, Result};
pub use gf::Gf;

pub const N: usize = 255;
pub const K: usize = 239;
pub const PARITY: usize = N - K;
/// Correctable byte errors per codeword.
pub const T: usize = PARITY / 2;

/// Generator polynomial, highest degree first (`g[0] = 1`).
pub fn generator_poly() -> [Gf; PARITY + 1] {
    let mut g = [Gf::ZERO; PARITY + 1];
    g[0] = Gf::ONE;
    let mut deg = 0;
    for i in 0..PARITY {
        let root = Gf::alpha_pow(i);
        // g(x) <- g(x) * (x - root)
        deg += 1;
        for j in (1..=deg).rev() {
            g[j] += g[j - 1] * root;
        }
    }
    g
}

fn generator() -> &'static [Gf; PARITY + 1] {
    static G: std::sync::OnceLock<[Gf; PARITY + 1]> = std::sync::OnceLock::new();
    G.get_or_init(generator_poly)
}

/// A 255-byte RS codeword.
#[derive(Clone, PartialEq, Eq)]
pub struct Codeword(pub [u8; N]);

impl Codeword {
    pub fn data(&self) -> &[u8] {
        &self.0[..K]
    }

    pub fn parity(&self) -> &[u8] {
        &self.0[K..]
    }
}

impl std::ops::Deref for Codeword {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Debug for Codeword {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Codeword({})", hex::encode(self.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub data: Vec<u8>,
    /// Number of byte positions that were changed.
    pub corrections: usize,
}

pub fn rs_encode(data: &[u8]) -> Result<Codeword> {
    if data.len() != K {
        return Err(Error::Size {
            what: "rs data word",
            expected: K,
            actual: data.len(),
        });
    }
    let g = generator();
    let mut rem = [Gf::ZERO; PARITY];
    for &b in data {
        let fb = Gf(b) + rem[0];
        rem.copy_within(1.., 0);
        rem[PARITY - 1] = Gf::ZERO;
        if !fb.is_zero() {
            for (r, &gj) in rem.iter_mut().zip(&g[1..]) {
                *r += fb * gj;
            }
        }
    }
    let mut cw = [0u8; N];
    cw[..K].copy_from_slice(data);
    for (dst, r) in cw[K..].iter_mut().zip(rem) {
        *dst = r.0;
    }
    Ok(Codeword(cw))
}

/// S_j = r(α^j) for j in 0..16.
pub fn syndromes(received: &[u8]) -> [Gf; PARITY] {
    let mut s = [Gf::ZERO; PARITY];
    for (j, sj) in s.iter_mut().enumerate() {
        let x = Gf::alpha_pow(j);
        *sj = received.iter().fold(Gf::ZERO, |acc, &b| acc * x + Gf(b));
    }
    s
}

/// Berlekamp-Massey. Returns the error locator Λ (lowest degree first) and
/// its LFSR length.
fn error_locator(s: &[Gf; PARITY]) -> (Vec<Gf>, usize) {
    let mut c = vec![Gf::ZERO; PARITY + 1];
    let mut b = vec![Gf::ZERO; PARITY + 1];
    c[0] = Gf::ONE;
    b[0] = Gf::ONE;
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last_d = Gf::ONE;

    for n in 0..PARITY {
        let mut d = s[n];
        for i in 1..=l {
            d += c[i] * s[n - i];
        }
        if d.is_zero() {
            m += 1;
            continue;
        }
        let coef = d / last_d;
        if 2 * l <= n {
            let prev = c.clone();
            for i in m..=PARITY {
                c[i] += coef * b[i - m];
            }
            l = n + 1 - l;
            b = prev;
            last_d = d;
            m = 1;
        } else {
            for i in m..=PARITY {
                c[i] += coef * b[i - m];
            }
            m += 1;
        }
    }
    c.truncate(l + 1);
    (c, l)
}

fn poly_eval_low_first(p: &[Gf], x: Gf) -> Gf {
    p.iter().rev().fold(Gf::ZERO, |acc, &c| acc * x + c)
}

pub fn rs_decode(received: &[u8]) -> Result<Decoded> {
    if received.len() != N {
        return Err(Error::Size {
            what: "rs codeword",
            expected: N,
            actual: received.len(),
        });
    }
    let s = syndromes(received);
    if s.iter().all(|x| x.is_zero()) {
        return Ok(Decoded {
            data: received[..K].to_vec(),
            corrections: 0,
        });
    }

    let (lambda, nerr) = error_locator(&s);
    if nerr > T || lambda.len() != nerr + 1 || lambda[nerr].is_zero() {
        return Err(Error::Uncorrectable);
    }

    // Ω(x) = S(x) Λ(x) mod x^16
    let mut omega = vec![Gf::ZERO; PARITY];
    for (i, &li) in lambda.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            if i + j < PARITY {
                omega[i + j] += li * sj;
            }
        }
    }
    // Formal derivative: only odd-power terms survive in characteristic 2.
    let dlambda: Vec<Gf> = (1..lambda.len())
        .map(|i| if i % 2 == 1 { lambda[i] } else { Gf::ZERO })
        .collect();

    let mut word = received.to_vec();
    let mut found = 0usize;
    // Chien search over every codeword position.
    for (pos, byte) in word.iter_mut().enumerate() {
        let power = N - 1 - pos;
        let x = Gf::alpha_pow(power);
        let x_inv = x.inv();
        if !poly_eval_low_first(&lambda, x_inv).is_zero() {
            continue;
        }
        found += 1;
        let denom = poly_eval_low_first(&dlambda, x_inv);
        if denom.is_zero() {
            return Err(Error::Uncorrectable);
        }
        // Forney with first root α^0: e = X Ω(X^-1) / Λ'(X^-1)
        let magnitude = x * poly_eval_low_first(&omega, x_inv) / denom;
        if magnitude.is_zero() {
            return Err(Error::Uncorrectable);
        }
        *byte ^= magnitude.0;
    }
    if found != nerr {
        return Err(Error::Uncorrectable);
    }
    if syndromes(&word).iter().any(|x| !x.is_zero()) {
        return Err(Error::Uncorrectable);
    }
    word.truncate(K);
    Ok(Decoded {
        data: word,
        corrections: nerr,
    })
}

/// Post-decoding bit error rate estimate for a memoryless channel with raw
/// bit error rate `raw_ber`, assuming independent byte errors and that a
/// failed word passes its raw errors through. Standard bounded-distance
/// approximation; used by the link model only.
pub fn decoded_ber_estimate(raw_ber: f64) -> f64 {
    if raw_ber <= 0.0 {
        return 0.0;
    }
    let p = raw_ber.min(0.5);
    let ps = 1.0 - (1.0 - p).powi(8);
    if ps <= 0.0 {
        return 0.0;
    }
    let n = N as f64;
    let ln_ps = ps.ln();
    let ln_qs = (-ps).ln_1p();
    let mut ln_binom = 0.0f64; // ln C(n, j), built incrementally
    let mut acc = 0.0f64;
    for j in 1..=N {
        ln_binom += ((n - j as f64 + 1.0) / j as f64).ln();
        if j > T {
            let term = ln_binom + j as f64 * ln_ps + (n - j as f64) * ln_qs;
            acc += (j as f64 / n) * term.exp();
        }
    }
    (acc * p / ps).min(p)
}
