//! Coding a nondecreasing dyadic approximation into a set of bits, and the
//! two mutual reductions between the real and the set.
//!
//! Digit `i` (1-based, weight `2^(-i)`) owns a block of `2^(i-1)` set bits:
//! `p(i)` ones then zeros, where `p(i)` counts the digit's upward flips along
//! the approximation. The set computes the real with use `2^n - 1` and the
//! real computes the set with use `floor(log2 n) + 1`; both reductions meter
//! their oracle use.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::{Error, Result};

/// A finite nondecreasing sequence of dyadics in `[0, 1]`. The final value
/// stands for the limit real.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ApproxSequence {
    values: Vec<Dyadic>,
}

impl ApproxSequence {
    pub fn new(values: Vec<Dyadic>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid {
                what: "approximation sequence",
                detail: "no stages".into(),
            });
        }
        let one = Dyadic::one();
        for (stage, v) in values.iter().enumerate() {
            if v > &one {
                return Err(Error::ValueOutOfRange { stage });
            }
        }
        for (stage, pair) in values.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(Error::NotNondecreasing { stage: stage + 1 });
            }
        }
        Ok(ApproxSequence { values })
    }

    pub fn constant(value: Dyadic) -> Result<Self> {
        ApproxSequence::new(vec![value])
    }

    pub fn stages(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, stage: usize) -> Result<&Dyadic> {
        self.values
            .get(stage)
            .ok_or(Error::StageOutOfRange { stage, len: self.values.len() })
    }

    pub fn final_value(&self) -> &Dyadic {
        self.values.last().expect("nonempty")
    }

    pub fn values(&self) -> &[Dyadic] {
        &self.values
    }
}

impl<'de> Deserialize<'de> for ApproxSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ApproxSequence::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Number of upward flips of digit `i` along the sequence: stages `s` with
/// `a_s(i) != a_{s+1}(i)` and `a_{s+1}(i) = 1`. At most `2^(i-1)` for a
/// monotone sequence in `[0, 1]`.
pub fn flip_counts(a: &ApproxSequence, i: u64) -> u64 {
    assert!(i >= 1, "digits are 1-based");
    a.values
        .windows(2)
        .filter(|pair| pair[0].digit(i) == 0 && pair[1].digit(i) == 1)
        .count() as u64
}

/// The coded set for digits `1..=n`: one block per digit, ones then zeros,
/// total length `2^n - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSet {
    bits: Vec<u8>,
}

impl CodedSet {
    /// Parses a raw bit string; the length must be `2^n - 1` and every block
    /// must be ones-then-zeros.
    pub fn from_bits(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Invalid {
                    what: "coded set",
                    detail: format!("non-binary character {other:?}"),
                }),
            })
            .collect::<Result<_>>()?;
        let len = bits.len();
        if !(len + 1).is_power_of_two() {
            let expected = (len + 1).next_power_of_two() - 1;
            return Err(Error::CorruptCodedSet { len, expected });
        }
        let set = CodedSet { bits };
        for i in 1..=set.digits() {
            let block = set.block(i);
            let p = block.iter().take_while(|&&b| b == 1).count();
            if block[p..].iter().any(|&b| b != 0) {
                return Err(Error::CorruptBlock { block: i });
            }
        }
        Ok(set)
    }

    /// Number of digit blocks `n`.
    pub fn digits(&self) -> u32 {
        (self.bits.len() + 1).ilog2()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Digit `i`'s block: offset `2^(i-1) - 1`, length `2^(i-1)`.
    pub fn block(&self, i: u32) -> &[u8] {
        let half = 1usize << (i - 1);
        &self.bits[half - 1..2 * half - 1]
    }

    /// Leading ones of digit `i`'s block, the recorded flip count.
    pub fn block_count(&self, i: u32) -> u64 {
        self.block(i).iter().take_while(|&&b| b == 1).count() as u64
    }

    /// Set bit at 1-based index; index `n` lives in the block of digit
    /// `floor(log2 n) + 1`.
    pub fn bit(&self, index: u64) -> Result<u8> {
        if index == 0 || index > self.bits.len() as u64 {
            return Err(Error::Invalid {
                what: "set index",
                detail: format!("{index} outside 1..={}", self.bits.len()),
            });
        }
        Ok(self.bits[index as usize - 1])
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for CodedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl Serialize for CodedSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for CodedSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CodedSet::from_bits(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Encodes digits `1..=n` of the sequence's limit.
pub fn encode_set(a: &ApproxSequence, n: u32) -> Result<CodedSet> {
    if n >= 30 {
        return Err(Error::Invalid {
            what: "coded set width",
            detail: format!("{n} digit blocks do not fit in memory"),
        });
    }
    let mut bits = Vec::with_capacity((1usize << n) - 1);
    for i in 1..=n {
        let capacity = 1u64 << (i - 1);
        let p = flip_counts(a, i as u64);
        assert!(p <= capacity, "a monotone sequence in [0, 1] flips digit {i} at most {capacity} times");
        bits.extend(std::iter::repeat_n(1, p as usize));
        bits.extend(std::iter::repeat_n(0, (capacity - p) as usize));
    }
    Ok(CodedSet { bits })
}

/// Result of decoding: the matched stage's `n`-digit prefix and the oracle
/// meter (set bits read).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decoded {
    pub prefix: BigUint,
    pub match_stage: usize,
    pub set_bits_read: u64,
}

/// Recovers the limit's `n`-digit prefix from the coded set by replaying the
/// approximation until every block's flip count is reached. Reads each of
/// the `2^n - 1` set bits once.
///
/// The sequence itself is an input: the set alone fixes the flip counts, and
/// the replay turns them back into digits.
pub fn decode_real(x: &CodedSet, a: &ApproxSequence, n: u32) -> Result<Decoded> {
    if n > x.digits() {
        return Err(Error::LengthMismatch { left: n as usize, right: x.digits() as usize });
    }
    if a.final_value() == &Dyadic::one() {
        return Err(Error::Invalid {
            what: "decode replay",
            detail: "the limit is 1, whose digit coding is degenerate".into(),
        });
    }
    let mut set_bits_read = 0u64;
    let targets: Vec<u64> = (1..=n)
        .map(|i| {
            set_bits_read += 1u64 << (i - 1);
            x.block_count(i)
        })
        .collect();
    let mut counts = vec![0u64; n as usize];
    let all_met = |counts: &[u64]| counts.iter().zip(&targets).all(|(c, t)| c == t);
    let mut match_stage = all_met(&counts).then_some(0usize);
    for s in 1..a.stages() {
        let (prev, cur) = (&a.values[s - 1], &a.values[s]);
        for i in 1..=n as u64 {
            if prev.digit(i) == 0 && cur.digit(i) == 1 {
                counts[i as usize - 1] += 1;
            }
        }
        for (i, (c, t)) in counts.iter().zip(&targets).enumerate() {
            if c > t {
                return Err(Error::Invalid {
                    what: "coded set",
                    detail: format!("block {} count exceeded during replay", i + 1),
                });
            }
        }
        match match_stage {
            None => {
                if all_met(&counts) {
                    match_stage = Some(s);
                }
            }
            Some(m) => {
                // Carry argument: a change among digits 1..=n after every
                // count is exhausted would need an upward flip at some
                // digit at or left of it (overshoot, caught above) or a
                // carry into the integer part (limit 1, rejected earlier).
                let frozen = &a.values[m];
                assert!(
                    (1..=n as u64).all(|i| cur.digit(i) == frozen.digit(i)),
                    "digit changed after all flip counts were exhausted"
                );
            }
        }
    }
    let match_stage = match_stage.ok_or_else(|| Error::Invalid {
        what: "coded set",
        detail: "flip counts were never reached by the replay".into(),
    })?;
    Ok(Decoded { prefix: a.values[match_stage].prefix(n as u64), match_stage, set_bits_read })
}

/// Serves prefixes of a hidden real and meters the longest prefix served.
pub trait PrefixOracle {
    /// First `len` digits, as `floor(real * 2^len)`.
    fn prefix(&mut self, len: u64) -> BigUint;
}

/// The honest oracle: a concrete real with a high-water meter.
#[derive(Debug, Clone)]
pub struct RealOracle {
    real: Dyadic,
    max_len_served: u64,
}

impl RealOracle {
    pub fn new(real: Dyadic) -> Self {
        RealOracle { real, max_len_served: 0 }
    }

    pub fn max_len_served(&self) -> u64 {
        self.max_len_served
    }
}

impl PrefixOracle for RealOracle {
    fn prefix(&mut self, len: u64) -> BigUint {
        self.max_len_served = self.max_len_served.max(len);
        self.real.prefix(len)
    }
}

/// One computed set bit with its oracle meter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetBit {
    pub bit: u8,
    pub digits_consulted: u64,
    pub match_stage: usize,
}

/// Computes set bit `index` from a prefix oracle for the limit, consulting
/// exactly `floor(log2 index) + 1` real digits: replay to the first stage
/// matching the oracle prefix and count the owning digit's flips up to it.
pub fn set_from_real(
    oracle: &mut dyn PrefixOracle,
    a: &ApproxSequence,
    index: u64,
) -> Result<SetBit> {
    if index == 0 {
        return Err(Error::Invalid { what: "set index", detail: "indices are 1-based".into() });
    }
    let i = index.ilog2() as u64 + 1;
    let offset = index - (1u64 << (i - 1));
    let want = oracle.prefix(i);
    let match_stage = (0..a.stages())
        .find(|&s| a.values[s].prefix(i) == want)
        .ok_or(Error::NoMatchingStage)?;
    let flips = a.values[..=match_stage]
        .windows(2)
        .filter(|pair| pair[0].digit(i) == 0 && pair[1].digit(i) == 1)
        .count() as u64;
    Ok(SetBit { bit: u8::from(flips > offset), digits_consulted: i, match_stage })
}
