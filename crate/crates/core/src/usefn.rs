//! Nondecreasing use tables and the structures derived from them: run-length
//! signatures, the condensation sandwich, space transforms that trade use for
//! block weight, greedy interval partitions, and block plans for the priority
//! construction.
//!
//! Positions are 1-based throughout. Signatures carry their interval bounds
//! as big integers because plan blocks deepen doubly exponentially; every
//! table-backed structure stays within machine words.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::{Error, Result};

/// A nondecreasing table `g(1), ..., g(N)` of use values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct UseTable {
    values: Vec<u64>,
}

impl UseTable {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        for (i, w) in values.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::NonMonotone { position: i as u64 + 2 });
            }
        }
        Ok(UseTable { values })
    }

    /// `g(pos)` for 1-based `pos`.
    pub fn get(&self, pos: u64) -> Option<u64> {
        if pos == 0 {
            return None;
        }
        self.values.get(pos as usize - 1).copied()
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `sum of 2^(-g(n))` over `lo <= n <= hi`, exact.
    pub fn weight(&self, lo: u64, hi: u64) -> Dyadic {
        let mut acc = Dyadic::zero();
        for n in lo..=hi {
            if let Some(g) = self.get(n) {
                acc += &Dyadic::inv_pow2(g);
            }
        }
        acc
    }
}

impl<'de> Deserialize<'de> for UseTable {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<u64>::deserialize(de)?;
        UseTable::new(values).map_err(serde::de::Error::custom)
    }
}

/// One maximal constant run of a nondecreasing function: value `constant`
/// on the inclusive position interval `[lo, hi]`.
///
/// Serializes as a `[constant, lo, hi]` triple with the interval bounds as
/// decimal strings, since bounds outgrow machine words in deep plans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigEntry {
    pub constant: u64,
    pub lo: BigUint,
    pub hi: BigUint,
}

impl Serialize for SigEntry {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = ser.serialize_tuple(3)?;
        t.serialize_element(&self.constant)?;
        t.serialize_element(&crate::bigser::to_string(&self.lo))?;
        t.serialize_element(&crate::bigser::to_string(&self.hi))?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for SigEntry {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Bound {
            Word(u64),
            Wide(String),
        }
        let (constant, lo, hi) = <(u64, Bound, Bound)>::deserialize(de)?;
        let parse = |b: Bound| match b {
            Bound::Word(v) => Ok(BigUint::from(v)),
            Bound::Wide(s) => {
                crate::bigser::parse(&s).ok_or_else(|| D::Error::custom("bad interval bound"))
            }
        };
        Ok(SigEntry { constant, lo: parse(lo)?, hi: parse(hi)? })
    }
}

impl SigEntry {
    /// Number of positions in the run.
    pub fn size(&self) -> BigUint {
        &self.hi - &self.lo + BigUint::one()
    }

    /// `size * 2^(-constant)`, the run's weight.
    pub fn weight(&self) -> Dyadic {
        Dyadic::new(self.size(), self.constant)
    }
}

/// The signature of a nondecreasing function: its maximal constant runs, in
/// order, with strictly increasing constants partitioning `[1, N]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Signature {
    entries: Vec<SigEntry>,
}

impl Signature {
    pub fn from_entries(entries: Vec<SigEntry>) -> Result<Self> {
        let bad = |detail: String| Error::Invalid { what: "signature", detail };
        let mut expected_lo = BigUint::one();
        let mut last_constant: Option<u64> = None;
        for (j, e) in entries.iter().enumerate() {
            if e.lo != expected_lo {
                return Err(bad(format!("entry {j} starts at {}, expected {expected_lo}", e.lo)));
            }
            if e.hi < e.lo {
                return Err(bad(format!("entry {j} has reversed interval")));
            }
            if let Some(c) = last_constant {
                if e.constant <= c {
                    return Err(bad(format!("constants must increase strictly at entry {j}")));
                }
            }
            expected_lo = &e.hi + BigUint::one();
            last_constant = Some(e.constant);
        }
        Ok(Signature { entries })
    }

    /// Convenience constructor from `(constant, lo, hi)` triples.
    pub fn from_parts(parts: &[(u64, u64, u64)]) -> Result<Self> {
        Signature::from_entries(
            parts
                .iter()
                .map(|&(c, lo, hi)| SigEntry {
                    constant: c,
                    lo: BigUint::from(lo),
                    hi: BigUint::from(hi),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[SigEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, j: usize) -> Result<&SigEntry> {
        self.entries
            .get(j)
            .ok_or(Error::SignatureIndex { index: j, len: self.entries.len() })
    }

    /// Largest covered position, `max I_(len-1)`.
    pub fn max_position(&self) -> Option<&BigUint> {
        self.entries.last().map(|e| &e.hi)
    }

    /// Index of the run containing `pos`, if covered.
    pub fn index_of(&self, pos: &BigUint) -> Option<usize> {
        if pos < &BigUint::one() {
            return None;
        }
        let i = self.entries.partition_point(|e| &e.hi < pos);
        (i < self.entries.len()).then_some(i)
    }

    /// The table value `g(pos)`.
    pub fn g_at(&self, pos: &BigUint) -> Option<u64> {
        self.index_of(pos).map(|i| self.entries[i].constant)
    }

    /// `sum of 2^(-g(i))` over covered positions with `lo < i <= hi`, exact.
    pub fn weight_range(&self, lo: &BigUint, hi: &BigUint) -> Dyadic {
        let one = BigUint::one();
        let first = lo + &one;
        let mut acc = Dyadic::zero();
        for e in &self.entries {
            let from = first.clone().max(e.lo.clone());
            let to = hi.clone().min(e.hi.clone());
            if from <= to {
                acc += &Dyadic::new(&to - &from + &one, e.constant);
            }
        }
        acc
    }

    /// The demand map `h(pos) = pos + g(pos)` for word-sized positions.
    pub fn h_at(&self, pos: u64) -> Result<u64> {
        let g = self
            .g_at(&BigUint::from(pos))
            .ok_or_else(|| Error::PositionUncovered { position: pos.to_string() })?;
        Ok(pos + g)
    }

    /// Expand back into an explicit table. Refuses tables that would not fit
    /// in memory; signatures themselves may be arbitrarily wide.
    pub fn flatten(&self) -> Result<UseTable> {
        const MAX: u64 = 1 << 22;
        let n = match self.max_position() {
            None => return Ok(UseTable { values: Vec::new() }),
            Some(n) => n,
        };
        let n = u64::try_from(n).map_err(|_| Error::PositionOverflow { position: n.to_string() })?;
        if n > MAX {
            return Err(Error::PositionOverflow { position: n.to_string() });
        }
        let mut values = Vec::with_capacity(n as usize);
        for e in &self.entries {
            let lo = u64::try_from(&e.lo).expect("bounded by max position");
            let hi = u64::try_from(&e.hi).expect("bounded by max position");
            values.extend(std::iter::repeat_n(e.constant, (hi - lo + 1) as usize));
        }
        Ok(UseTable { values })
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<SigEntry>::deserialize(de)?;
        Signature::from_entries(entries).map_err(serde::de::Error::custom)
    }
}

/// Run-length signature of a table: maximal constant runs in position order.
pub fn signature_of(table: &UseTable) -> Signature {
    let mut entries: Vec<SigEntry> = Vec::new();
    for (i, &v) in table.values.iter().enumerate() {
        let pos = i as u64 + 1;
        match entries.last_mut() {
            Some(e) if e.constant == v => e.hi = BigUint::from(pos),
            _ => entries.push(SigEntry {
                constant: v,
                lo: BigUint::from(pos),
                hi: BigUint::from(pos),
            }),
        }
    }
    Signature { entries }
}

/// One level of the condensation sandwich at cut `t`:
/// `block_tail <= condensed <= doubled_tail`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondensationLevel {
    pub t: u32,
    /// `sum of f(i)` for `2^t <= i <= 2^t_max`.
    pub block_tail: Dyadic,
    /// `sum of 2^i * f(2^i)` for `t <= i <= t_max`.
    pub condensed: Dyadic,
    /// `2 * sum of f(i)` for `2^(t-1) <= i <= 2^t_max`.
    pub doubled_tail: Dyadic,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondensationReport {
    pub t_max: u32,
    pub levels: Vec<CondensationLevel>,
    pub violations: usize,
}

/// Check the condensation sandwich for a positive nonincreasing table
/// `f(1), ..., f(2^t_max)` at every cut `1 <= t <= t_max`.
pub fn condensation_check(f: &[Dyadic], t_max: u32) -> Result<CondensationReport> {
    let bad = |detail: String| Error::Invalid { what: "condensation table", detail };
    if t_max == 0 {
        return Err(bad("t_max must be at least 1".into()));
    }
    let n = 1usize << t_max;
    if f.len() < n {
        return Err(bad(format!("need {n} entries, got {}", f.len())));
    }
    if f[n - 1].is_zero() {
        return Err(bad("entries must be positive".into()));
    }
    for (i, w) in f[..n].windows(2).enumerate() {
        if w[0] < w[1] {
            return Err(bad(format!("table increases at position {}", i + 2)));
        }
    }

    let fi = |i: usize| &f[i - 1];
    let tail = |from: usize| -> Dyadic {
        let mut acc = Dyadic::zero();
        for i in from..=n {
            acc += fi(i);
        }
        acc
    };

    let mut levels = Vec::with_capacity(t_max as usize);
    let mut violations = 0;
    for t in 1..=t_max {
        let block_tail = tail(1 << t);
        let doubled = {
            let s = tail(1 << (t - 1));
            &s + &s
        };
        let mut condensed = Dyadic::zero();
        for i in t..=t_max {
            condensed += &fi(1 << i).shl(u64::from(i));
        }
        let holds = block_tail <= condensed && condensed <= doubled;
        if !holds {
            violations += 1;
        }
        levels.push(CondensationLevel {
            t,
            block_tail,
            condensed,
            doubled_tail: doubled,
            holds,
        });
    }
    Ok(CondensationReport { t_max, levels, violations })
}

/// A block of the space transform: positions `[lo, hi]` get constant shift
/// `k`, and the block's weight under the input table exceeds `2^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceBlock {
    pub k: u32,
    pub lo: u64,
    pub hi: u64,
    pub weight: Dyadic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceTransform {
    pub f: UseTable,
    pub blocks: Vec<SpaceBlock>,
}

/// Greedily split `[1, ..]` into blocks whose `2^(-g)` weight exceeds
/// `2^k` for `k = 0, ..., k_blocks-1`, then shift `g` by `k` on block `k`.
/// The output table covers exactly the consumed prefix; positions beyond
/// `budget` (or beyond the table) fail with `BudgetExceeded`.
pub fn space_transform(g: &UseTable, k_blocks: u32, budget: u64) -> Result<SpaceTransform> {
    let mut blocks = Vec::with_capacity(k_blocks as usize);
    let mut values = Vec::new();
    let mut pos = 1u64;
    for k in 0..k_blocks {
        let lo = pos;
        let target = Dyadic::pow2(u64::from(k));
        let mut weight = Dyadic::zero();
        while weight <= target {
            let gv = (pos <= budget).then(|| g.get(pos)).flatten().ok_or(
                Error::BudgetExceeded {
                    what: "space transform block",
                    budget: budget.min(g.len()).to_string(),
                },
            )?;
            weight += &Dyadic::inv_pow2(gv);
            values.push(gv + u64::from(k));
            pos += 1;
        }
        blocks.push(SpaceBlock { k, lo, hi: pos - 1, weight });
    }
    Ok(SpaceTransform { f: UseTable { values }, blocks })
}

/// Which contribution a partitioned interval sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionVariant {
    /// Terms `2^((t+c) - g(2^(t+c)))`.
    Exp,
    /// Terms `2^(t - g(2^(t+1)))`.
    Lin,
}

/// An issued partition interval: consecutive `t`-values `[lo, hi]` whose
/// summed contribution first exceeds `2^c`, labelled with the index `e` of
/// the request that claimed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JInterval {
    pub e: u64,
    pub c: u64,
    pub variant: PartitionVariant,
    pub lo: u64,
    pub hi: u64,
    pub sum: Dyadic,
}

/// Issues disjoint consecutive intervals of `t`-values, in request order,
/// starting from `t = 0`.
#[derive(Debug, Clone, Default)]
pub struct PartitionBuilder {
    next_t: u64,
}

impl PartitionBuilder {
    pub fn new() -> Self {
        PartitionBuilder { next_t: 0 }
    }

    /// Next interval whose summed contribution exceeds `2^c`, consuming at
    /// most `budget` terms, labelled `e`.
    pub fn issue(
        &mut self,
        g: &UseTable,
        e: u64,
        c: u64,
        variant: PartitionVariant,
        budget: u64,
    ) -> Result<JInterval> {
        let lo = self.next_t;
        let target = Dyadic::pow2(c);
        let mut sum = Dyadic::zero();
        let mut t = lo;
        let exhausted = || Error::BudgetExceeded {
            what: "interval partition",
            budget: budget.to_string(),
        };
        loop {
            if t - lo >= budget {
                return Err(exhausted());
            }
            let arg = match variant {
                PartitionVariant::Exp => 1u64
                    .checked_shl(u32::try_from(t + c).map_err(|_| exhausted())?)
                    .ok_or_else(exhausted)?,
                PartitionVariant::Lin => 1u64
                    .checked_shl(u32::try_from(t + 1).map_err(|_| exhausted())?)
                    .ok_or_else(exhausted)?,
            };
            let gv = g.get(arg).ok_or_else(exhausted)?;
            let term = match variant {
                PartitionVariant::Exp => signed_pow2(t as i128 + c as i128 - gv as i128),
                PartitionVariant::Lin => signed_pow2(t as i128 - gv as i128),
            };
            sum += &term;
            if sum > target {
                self.next_t = t + 1;
                return Ok(JInterval { e, c, variant, lo, hi: t, sum });
            }
            t += 1;
        }
    }
}

fn signed_pow2(e: i128) -> Dyadic {
    if e >= 0 {
        Dyadic::pow2(e as u64)
    } else {
        Dyadic::inv_pow2((-e) as u64)
    }
}

/// One block of a construction plan: signature runs `(first_index,
/// last_index]` covering digit positions `(lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanBlock {
    pub e: usize,
    pub first_index: usize,
    pub last_index: usize,
    #[serde(with = "crate::bigser")]
    pub lo: BigUint,
    #[serde(with = "crate::bigser")]
    pub hi: BigUint,
}

/// Block boundaries for the priority construction, cut from a signature so
/// that each block's truncated sum clears the overflow threshold of the
/// block before it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionPlan {
    pub signature: Signature,
    /// Signature indices `n_0 = 1 < n_1 < ... < n_E`.
    pub boundaries: Vec<usize>,
    pub blocks: Vec<PlanBlock>,
}

impl ConstructionPlan {
    pub fn requirements(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, e: usize) -> Result<&PlanBlock> {
        self.blocks
            .get(e)
            .ok_or(Error::BlockOutOfRange { block: e, blocks: self.blocks.len() })
    }
}

/// Cut `e_count` blocks from the signature. Block `e` ends at the least
/// index `n` such that `S_n(n - n_e) > 2^m` where `m = max I_(n_e)`; the
/// search fails with `SignatureExhausted` when the signature runs out.
pub fn build_plan(sig: &Signature, e_count: usize) -> Result<ConstructionPlan> {
    if sig.len() < 2 {
        return Err(Error::SignatureExhausted);
    }
    let mut boundaries = vec![1usize];
    let mut blocks = Vec::with_capacity(e_count);
    for e in 0..e_count {
        let n_e = *boundaries.last().expect("nonempty");
        let m = sig.entry(n_e)?.hi.clone();
        let mut found = None;
        for k in (n_e + 1)..sig.len() {
            let sums = crate::bounds::truncated_sums(sig, k)?;
            let s = sums.value(k - n_e)?;
            if s.exceeds_pow2(&m) {
                found = Some(k);
                break;
            }
        }
        let n_next = found.ok_or(Error::SignatureExhausted)?;
        blocks.push(PlanBlock {
            e,
            first_index: n_e,
            last_index: n_next,
            lo: m,
            hi: sig.entry(n_next)?.hi.clone(),
        });
        boundaries.push(n_next);
    }
    Ok(ConstructionPlan { signature: sig.clone(), boundaries, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_rejects_decrease() {
        assert!(UseTable::new(vec![0, 1, 1, 2]).is_ok());
        assert_eq!(
            UseTable::new(vec![0, 2, 1]),
            Err(Error::NonMonotone { position: 3 })
        );
    }

    #[test]
    fn signature_of_examples() {
        let t = UseTable::new(vec![1, 2, 2, 3, 3]).unwrap();
        let sig = signature_of(&t);
        assert_eq!(sig, Signature::from_parts(&[(1, 1, 1), (2, 2, 3), (3, 4, 5)]).unwrap());
        assert_eq!(sig.flatten().unwrap(), t);
        assert!(signature_of(&UseTable::new(vec![]).unwrap()).is_empty());
    }

    #[test]
    fn signature_weight_identity() {
        // Sum of 2^(-g(i)) equals the sum of run weights.
        let t = UseTable::new(vec![0, 1, 1, 3, 3, 3, 3]).unwrap();
        let sig = signature_of(&t);
        let by_runs = crate::dyadic::sum(sig.entries().iter().map(|e| e.weight()).collect::<Vec<_>>().iter());
        assert_eq!(by_runs, t.weight(1, t.len()));
    }

    #[test]
    fn signature_lookup() {
        let sig = Signature::from_parts(&[(1, 1, 1), (2, 2, 3), (5, 4, 9)]).unwrap();
        assert_eq!(sig.g_at(&BigUint::from(1u8)), Some(1));
        assert_eq!(sig.g_at(&BigUint::from(3u8)), Some(2));
        assert_eq!(sig.g_at(&BigUint::from(9u8)), Some(5));
        assert_eq!(sig.g_at(&BigUint::from(10u8)), None);
        assert_eq!(sig.g_at(&BigUint::from(0u8)), None);
        assert_eq!(sig.h_at(4).unwrap(), 9);
    }

    #[test]
    fn signature_validation() {
        // Gap between runs.
        assert!(Signature::from_parts(&[(1, 1, 2), (2, 4, 5)]).is_err());
        // Constants must strictly increase.
        assert!(Signature::from_parts(&[(1, 1, 2), (1, 3, 5)]).is_err());
        // Must start at 1.
        assert!(Signature::from_parts(&[(1, 2, 3)]).is_err());
    }

    #[test]
    fn condensation_geometric() {
        // f(i) = 2^(-i): tail sums are computable in closed form, and the
        // condensed series telescopes; recompute both sides directly.
        let t_max = 4u32;
        let n = 1usize << t_max;
        let f: Vec<Dyadic> = (1..=n as u64).map(Dyadic::inv_pow2).collect();
        let report = condensation_check(&f, t_max).unwrap();
        assert_eq!(report.violations, 0);
        for level in &report.levels {
            // Direct tail: 2^(1-2^t) - 2^(-2^t_max).
            let direct = Dyadic::inv_pow2((1u64 << level.t) - 1)
                .checked_sub(&Dyadic::inv_pow2(1 << t_max))
                .unwrap();
            assert_eq!(level.block_tail, direct);
            let mut condensed = Dyadic::zero();
            for i in level.t..=t_max {
                condensed += &Dyadic::inv_pow2((1u64 << i) - u64::from(i));
            }
            assert_eq!(level.condensed, condensed);
        }
    }

    #[test]
    fn condensation_rejects_bad_tables() {
        let f: Vec<Dyadic> = (1..=4u64).map(|_| Dyadic::zero()).collect();
        assert!(condensation_check(&f, 2).is_err());
        let rising: Vec<Dyadic> = vec![
            Dyadic::inv_pow2(2),
            Dyadic::inv_pow2(1),
            Dyadic::inv_pow2(1),
            Dyadic::inv_pow2(1),
        ];
        assert!(condensation_check(&rising, 2).is_err());
        let short: Vec<Dyadic> = vec![Dyadic::one()];
        assert!(condensation_check(&short, 3).is_err());
    }

    #[test]
    fn weight_range_matches_table_weight() {
        let sig = Signature::from_parts(&[(0, 1, 2), (3, 3, 7)]).unwrap();
        let table = sig.flatten().unwrap();
        for lo in 0u64..7 {
            for hi in lo + 1..=7 {
                assert_eq!(
                    sig.weight_range(&BigUint::from(lo), &BigUint::from(hi)),
                    table.weight(lo + 1, hi),
                );
            }
        }
        // Positions outside the covered span contribute nothing.
        assert_eq!(
            sig.weight_range(&BigUint::from(0u8), &BigUint::from(100u8)),
            table.weight(1, 7),
        );
    }

    #[test]
    fn signature_json_shape() {
        // A signature is a JSON list of [constant, lo, hi] triples.
        let sig = Signature::from_parts(&[(0, 1, 2), (3, 3, 7)]).unwrap();
        let json = serde_json::to_string(&sig).unwrap();
        assert_eq!(json, r#"[[0,"1","2"],[3,"3","7"]]"#);
        assert_eq!(serde_json::from_str::<Signature>(&json).unwrap(), sig);
        // Bare-integer bounds are accepted on input.
        let alt: Signature = serde_json::from_str("[[0,1,2],[3,3,7]]").unwrap();
        assert_eq!(alt, sig);
        // Validation still applies on the way in.
        assert!(serde_json::from_str::<Signature>(r#"[[0,"2","3"]]"#).is_err());
    }

    #[test]
    fn space_transform_flat_table() {
        // g = 0: block 0 needs weight > 1 (two positions), block 1 needs
        // weight > 2 (three positions).
        let g = UseTable::new(vec![0; 16]).unwrap();
        let st = space_transform(&g, 2, 16).unwrap();
        assert_eq!(st.blocks[0], SpaceBlock { k: 0, lo: 1, hi: 2, weight: Dyadic::from(2u64) });
        assert_eq!(st.blocks[1], SpaceBlock { k: 1, lo: 3, hi: 5, weight: Dyadic::from(3u64) });
        assert_eq!(st.f.values(), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn space_transform_budget() {
        // Budget cap fires even though the table continues.
        let g = UseTable::new(vec![0; 16]).unwrap();
        assert!(matches!(
            space_transform(&g, 2, 4),
            Err(Error::BudgetExceeded { what: "space transform block", .. })
        ));
        // Table exhaustion fires even with budget to spare.
        let short = UseTable::new(vec![0; 4]).unwrap();
        assert!(matches!(
            space_transform(&short, 2, 100),
            Err(Error::BudgetExceeded { what: "space transform block", .. })
        ));
        // Zero blocks consume nothing.
        let st = space_transform(&short, 0, 100).unwrap();
        assert!(st.blocks.is_empty());
        assert!(st.f.is_empty());
    }

    #[test]
    fn space_transform_against_direct_greedy() {
        // Independent greedy accumulation over an irregular table.
        let g = UseTable::new(vec![0, 1, 1, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3]).unwrap();
        let st = space_transform(&g, 2, 16).unwrap();
        let mut pos = 1u64;
        for (k, block) in st.blocks.iter().enumerate() {
            assert_eq!(block.lo, pos);
            let mut w = Dyadic::zero();
            let mut end = pos;
            while w <= Dyadic::pow2(k as u64) {
                w += &Dyadic::inv_pow2(g.get(end).unwrap());
                end += 1;
            }
            assert_eq!(block.hi, end - 1);
            assert_eq!(block.weight, w);
            assert!(block.weight > Dyadic::pow2(k as u64));
            pos = end;
        }
        // Shifts applied blockwise.
        for (i, &fv) in st.f.values().iter().enumerate() {
            let pos = i as u64 + 1;
            let k = st.blocks.iter().find(|b| b.lo <= pos && pos <= b.hi).unwrap().k;
            assert_eq!(fv, g.get(pos).unwrap() + u64::from(k));
        }
    }

    #[test]
    fn partition_flat_table_lin() {
        // g = 0, c = 0, lin terms 2^t: J = [0, 1] since 1 is not > 1.
        let g = UseTable::new(vec![0; 64]).unwrap();
        let mut b = PartitionBuilder::new();
        let j = b.issue(&g, 0, 0, PartitionVariant::Lin, 100).unwrap();
        assert_eq!((j.e, j.lo, j.hi), (0, 0, 1));
        assert_eq!(j.sum, Dyadic::from(3u64));
        // Next interval starts after the previous one: terms 4 > 1.
        let j2 = b.issue(&g, 1, 0, PartitionVariant::Lin, 100).unwrap();
        assert_eq!((j2.e, j2.lo, j2.hi), (1, 2, 2));
    }

    #[test]
    fn partition_exp_against_direct_sum() {
        let g = UseTable::new(vec![2; 4096]).unwrap();
        let mut b = PartitionBuilder::new();
        let j = b.issue(&g, 0, 1, PartitionVariant::Exp, 100).unwrap();
        // Independent accumulation of 2^((t+1) - 2).
        let mut sum = Dyadic::zero();
        let mut t = 0u64;
        loop {
            sum += &signed_pow2(t as i128 + 1 - 2);
            if sum > Dyadic::from(2u64) {
                break;
            }
            t += 1;
        }
        assert_eq!(j.lo, 0);
        assert_eq!(j.hi, t);
        assert_eq!(j.sum, sum);
    }

    #[test]
    fn partition_budget_error() {
        let g = UseTable::new(vec![10; 8]).unwrap();
        let mut b = PartitionBuilder::new();
        assert!(matches!(
            b.issue(&g, 0, 0, PartitionVariant::Lin, 2),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn plan_zero_requirements() {
        let sig = Signature::from_parts(&[(0, 1, 1), (1, 2, 2), (2, 3, 20)]).unwrap();
        let plan = build_plan(&sig, 0).unwrap();
        assert_eq!(plan.boundaries, vec![1]);
        assert!(plan.blocks.is_empty());
    }

    #[test]
    fn plan_single_block() {
        // m = max I_1 = 2, so the threshold is S > 4. A size-18 third run
        // at constant 2 gives S_2(0) = 4.5, S_2(1) = 5 > 4.
        let sig = Signature::from_parts(&[(0, 1, 1), (1, 2, 2), (2, 3, 20)]).unwrap();
        let plan = build_plan(&sig, 1).unwrap();
        assert_eq!(plan.boundaries, vec![1, 2]);
        assert_eq!(plan.blocks[0].lo, BigUint::from(2u8));
        assert_eq!(plan.blocks[0].hi, BigUint::from(20u8));
        // Minimality: recompute the threshold directly at the boundary.
        let sums = crate::bounds::truncated_sums(&sig, 2).unwrap();
        assert!(sums.value(1).unwrap().exceeds_pow2(&BigUint::from(2u8)));
    }

    #[test]
    fn plan_exhaustion() {
        let sig = Signature::from_parts(&[(0, 1, 1), (1, 2, 2), (2, 3, 10)]).unwrap();
        assert_eq!(build_plan(&sig, 1), Err(Error::SignatureExhausted));
        let tiny = Signature::from_parts(&[(0, 1, 5)]).unwrap();
        assert_eq!(build_plan(&tiny, 1), Err(Error::SignatureExhausted));
    }

    proptest! {
        #[test]
        fn signature_roundtrip(values in proptest::collection::vec(0u64..12, 0..40)) {
            let mut sorted = values;
            sorted.sort_unstable();
            let table = UseTable::new(sorted).unwrap();
            let sig = signature_of(&table);
            // Runs are maximal, constants strictly increase, intervals tile.
            for w in sig.entries().windows(2) {
                prop_assert!(w[0].constant < w[1].constant);
                prop_assert_eq!(&w[0].hi + BigUint::one(), w[1].lo.clone());
            }
            prop_assert_eq!(sig.flatten().unwrap(), table);
        }

        #[test]
        fn partition_intervals_tile(
            gv in 0u64..4,
            cs in proptest::collection::vec(0u64..3, 1..5),
        ) {
            let g = UseTable::new(vec![gv; 1 << 14]).unwrap();
            let mut b = PartitionBuilder::new();
            let mut next = 0u64;
            for (e, c) in cs.into_iter().enumerate() {
                let j = b.issue(&g, e as u64, c, PartitionVariant::Lin, 64).unwrap();
                prop_assert_eq!(j.e, e as u64);
                prop_assert_eq!(j.lo, next);
                prop_assert!(j.hi >= j.lo);
                prop_assert!(j.sum > Dyadic::pow2(c));
                // Dropping the last term falls at or below the target.
                let last = signed_pow2(j.hi as i128 - g.get(1 << (j.hi + 1)).unwrap() as i128);
                prop_assert!(j.sum.checked_sub(&last).unwrap() <= Dyadic::pow2(c));
                next = j.hi + 1;
            }
        }
    }
}
