//! GF(2^8) arithmetic over x^8 + x^4 + x^3 + x^2 + 1 (0x11d), with α = x.

/// Field reduction polynomial, including the x^8 term.
pub const FIELD_POLY: u16 = 0x11d;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= FIELD_POLY;
        }
        i += 1;
    }
    // Doubled so exp[log a + log b] needs no reduction.
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
static EXP: [u8; 512] = TABLES.0;
static LOG: [u8; 256] = TABLES.1;

/// An element of GF(2^8).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Gf(pub u8);

impl Gf {
    pub const ZERO: Gf = Gf(0);
    pub const ONE: Gf = Gf(1);

    /// α^power, with the exponent reduced mod 255.
    #[inline]
    pub fn alpha_pow(power: usize) -> Gf {
        Gf(EXP[power % 255])
    }

    /// Discrete log base α. Panics on zero.
    #[inline]
    pub fn log(self) -> usize {
        assert!(self.0 != 0, "log of zero");
        LOG[self.0 as usize] as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn inv(self) -> Gf {
        assert!(self.0 != 0, "inverse of zero");
        Gf(EXP[255 - LOG[self.0 as usize] as usize])
    }

    pub fn pow(self, e: usize) -> Gf {
        if e == 0 {
            return Gf::ONE;
        }
        if self.0 == 0 {
            return Gf::ZERO;
        }
        Gf(EXP[(self.log() * e) % 255])
    }
}

impl std::ops::Add for Gf {
    type Output = Gf;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf) -> Gf {
        Gf(self.0 ^ rhs.0)
    }
}

impl std::ops::AddAssign for Gf {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf) {
        self.0 ^= rhs.0;
    }
}

// Subtraction is addition in characteristic 2.
impl std::ops::Sub for Gf {
    type Output = Gf;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf) -> Gf {
        Gf(self.0 ^ rhs.0)
    }
}

impl std::ops::Mul for Gf {
    type Output = Gf;
    #[inline]
    fn mul(self, rhs: Gf) -> Gf {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf::ZERO;
        }
        Gf(EXP[LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize])
    }
}

impl std::ops::MulAssign for Gf {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf) {
        *self = *self * rhs;
    }
}

impl std::ops::Div for Gf {
    type Output = Gf;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf) -> Gf {
        assert!(rhs.0 != 0, "division by zero");
        if self.0 == 0 {
            return Gf::ZERO;
        }
        Gf(EXP[LOG[self.0 as usize] as usize + 255 - LOG[rhs.0 as usize] as usize])
    }
}
