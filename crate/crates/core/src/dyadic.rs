//! Exact dyadic rationals `mantissa / 2^scale` and the binary-prefix
//! operators used throughout the crate.
//!
//! Values are nonnegative and kept canonical: the mantissa is odd unless the
//! scale is zero, and zero is always `0 / 2^0`. Binary expansions are read
//! with a 1-based digit convention, so digit `i` carries weight `2^(-i)` and
//! a prefix of length `m` is `floor(x * 2^m)` taken as an integer (it
//! includes the integer part of `x`).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A nonnegative dyadic rational in canonical mantissa/scale form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigUint,
    scale: u64,
}

/// Where two expansions first disagree: at some fractional digit (1-based)
/// or already in the integer part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Position {
    IntegerPart,
    Digit(u64),
}

impl Position {
    /// The fractional digit index, if the change is not in the integer part.
    pub fn digit(self) -> Option<u64> {
        match self {
            Position::IntegerPart => None,
            Position::Digit(d) => Some(d),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::IntegerPart => write!(f, "int"),
            Position::Digit(d) => write!(f, "{d}"),
        }
    }
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mantissa: BigUint::zero(), scale: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigUint::one(), scale: 0 }
    }

    /// `mantissa / 2^scale`, canonicalized.
    pub fn new(mantissa: impl Into<BigUint>, scale: u64) -> Self {
        let mut d = Dyadic { mantissa: mantissa.into(), scale };
        d.canonicalize();
        d
    }

    /// `2^(-k)`.
    pub fn inv_pow2(k: u64) -> Self {
        Dyadic { mantissa: BigUint::one(), scale: k }
    }

    /// `2^k` as a dyadic (integer).
    pub fn pow2(k: u64) -> Self {
        Dyadic { mantissa: BigUint::one() << k, scale: 0 }
    }

    pub fn from_biguint(n: BigUint) -> Self {
        Dyadic { mantissa: n, scale: 0 }
    }

    fn canonicalize(&mut self) {
        if self.mantissa.is_zero() {
            self.scale = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.scale);
        if shift > 0 {
            self.mantissa >>= shift;
            self.scale -= shift;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Value times `2^k`, exact.
    pub fn shl(&self, k: u64) -> Self {
        if self.scale >= k {
            Dyadic { mantissa: self.mantissa.clone(), scale: self.scale - k }
        } else {
            Dyadic { mantissa: &self.mantissa << (k - self.scale), scale: 0 }
        }
    }

    /// Value times `2^(-k)`, exact.
    pub fn shr(&self, k: u64) -> Self {
        if self.mantissa.is_zero() {
            Dyadic::zero()
        } else {
            Dyadic { mantissa: self.mantissa.clone(), scale: self.scale + k }
        }
    }

    /// `self - other` if nonnegative.
    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        if self < other {
            return None;
        }
        let s = self.scale.max(other.scale);
        let a = &self.mantissa << (s - self.scale);
        let b = &other.mantissa << (s - other.scale);
        Some(Dyadic::new(a - b, s))
    }

    /// `floor(x * 2^m)` as an integer; includes the integer part of `x`.
    pub fn prefix(&self, m: u64) -> BigUint {
        if self.scale <= m {
            &self.mantissa << (m - self.scale)
        } else {
            &self.mantissa >> (self.scale - m)
        }
    }

    /// Integer part, `floor(x)`.
    pub fn floor(&self) -> BigUint {
        self.prefix(0)
    }

    /// Digit `i` of the binary expansion (1-based; weight `2^(-i)`).
    /// `digit(0)` is the parity of the integer part.
    pub fn digit(&self, i: u64) -> u8 {
        if self.prefix(i).bit(0) {
            1
        } else {
            0
        }
    }

    /// `x mod 2^(-m)`: the part of `x` strictly below resolution `m`.
    pub fn mod_pow2(&self, m: u64) -> Dyadic {
        if self.scale <= m {
            return Dyadic::zero();
        }
        let keep = self.scale - m;
        let mask = (BigUint::one() << keep) - BigUint::one();
        Dyadic::new(&self.mantissa & &mask, self.scale)
    }

    /// Least positive dyadic `d` with `prefix(x + d, m) != prefix(x, m)`.
    ///
    /// Equals `2^(-m) - (x mod 2^(-m))` when the remainder is positive and a
    /// full `2^(-m)` otherwise.
    pub fn least_increment(&self, m: u64) -> Dyadic {
        let step = Dyadic::inv_pow2(m);
        let r = self.mod_pow2(m);
        if r.is_zero() {
            step
        } else {
            step.checked_sub(&r).expect("remainder below 2^(-m)")
        }
    }

    /// Whether `self > 2^m` with `m` given as a big integer exponent.
    ///
    /// Avoids materializing `2^m`, which may be astronomically wide for the
    /// outer blocks of deep construction plans.
    pub fn exceeds_pow2(&self, m: &BigUint) -> bool {
        if self.mantissa.is_zero() {
            return false;
        }
        // self > 2^m  <=>  mantissa > 2^(m + scale)
        let e = m + BigUint::from(self.scale);
        let bits = BigUint::from(self.mantissa.bits());
        let e_plus = &e + BigUint::one();
        match bits.cmp(&e_plus) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.mantissa.count_ones() > 1,
        }
    }

    /// Least `m >= 1` at which the length-`m` prefixes of `a` and `b`
    /// disagree, or [`Position::IntegerPart`] if their floors already do.
    pub fn leftmost_change(a: &Dyadic, b: &Dyadic) -> Result<Position> {
        if a == b {
            return Err(Error::EqualInputs);
        }
        if a.floor() != b.floor() {
            return Ok(Position::IntegerPart);
        }
        let s = a.scale.max(b.scale);
        let x = &a.mantissa << (s - a.scale);
        let y = &b.mantissa << (s - b.scale);
        let diff = x ^ y;
        // Highest differing bit p (0-based from the low end): prefixes of
        // length m agree iff all differing bits lie below s - m, so the
        // least disagreeing m is s - p.
        let p = diff.bits() - 1;
        let m = s - p;
        debug_assert!(m >= 1, "floor comparison covers m = 0");
        Ok(Position::Digit(m))
    }

    /// Render as `m/2^s`, or a plain integer when the scale is zero.
    pub fn to_fraction_string(&self) -> String {
        if self.scale == 0 {
            format!("{}", self.mantissa)
        } else {
            format!("{}/2^{}", self.mantissa, self.scale)
        }
    }

    /// Render the binary expansion, e.g. `0.101` for five eighths.
    pub fn to_binary_string(&self) -> String {
        let int = self.floor();
        if self.scale == 0 {
            return format!("{int}");
        }
        let mask = (BigUint::one() << self.scale) - BigUint::one();
        let frac = &self.mantissa & &mask;
        let mut bits = String::with_capacity(self.scale as usize);
        for i in (0..self.scale).rev() {
            bits.push(if frac.bit(i) { '1' } else { '0' });
        }
        format!("{int}.{bits}")
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fraction_string())
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({})", self.to_fraction_string())
    }
}

impl From<u64> for Dyadic {
    fn from(n: u64) -> Self {
        Dyadic { mantissa: BigUint::from(n), scale: 0 }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.scale.max(other.scale);
        let a = &self.mantissa << (s - self.scale);
        let b = &other.mantissa << (s - other.scale);
        a.cmp(&b)
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let s = self.scale.max(rhs.scale);
        let a = &self.mantissa << (s - self.scale);
        let b = &rhs.mantissa << (s - rhs.scale);
        Dyadic::new(a + b, s)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `m/2^s`, a plain integer, or a binary expansion `i.b1b2...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: &str| Error::Invalid { what: "dyadic literal", detail: detail.to_string() };
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let exp = den
                .strip_prefix("2^")
                .ok_or_else(|| bad("denominator must be 2^s"))?;
            let mantissa: BigUint = num.parse().map_err(|_| bad("bad mantissa"))?;
            let scale: u64 = exp.parse().map_err(|_| bad("bad scale"))?;
            return Ok(Dyadic::new(mantissa, scale));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int: BigUint = if int.is_empty() {
                BigUint::zero()
            } else {
                int.parse().map_err(|_| bad("bad integer part"))?
            };
            let mut mantissa = int;
            for c in frac.chars() {
                mantissa <<= 1u8;
                match c {
                    '0' => {}
                    '1' => mantissa += BigUint::one(),
                    _ => return Err(bad("fraction digits must be 0 or 1")),
                }
            }
            return Ok(Dyadic::new(mantissa, frac.len() as u64));
        }
        let mantissa: BigUint = s.parse().map_err(|_| bad("bad integer"))?;
        Ok(Dyadic::from_biguint(mantissa))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sum of an iterator of dyadics.
pub fn sum<'a, I: IntoIterator<Item = &'a Dyadic>>(iter: I) -> Dyadic {
    let mut acc = Dyadic::zero();
    for d in iter {
        acc += d;
    }
    acc
}
