//! Online Kraft-Chaitin allocation, the request machine that computes an
//! enumerated set from prefixes of its halting-probability surrogate, and
//! the Solovay-test reduction for c.e. reals.
//!
//! All weights are exact dyadics. The free list is canonical (at most one
//! string per length), which makes "an allocation of length l fits" the same
//! statement as "2^(-l) is at most the remaining weight".

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::coding::ApproxSequence;
use crate::dyadic::{Dyadic, Position};
use crate::usefn::UseTable;
use crate::{Error, Result};

/// Exact `sum of 2^(-l)` over the given lengths.
fn weight_of(lens: impl IntoIterator<Item = u64>) -> Dyadic {
    let mut acc = Dyadic::zero();
    for l in lens {
        acc += &Dyadic::inv_pow2(l);
    }
    acc
}

/// Left-pads a prefix value to its declared digit length.
fn bit_string(value: &BigUint, len: u64) -> String {
    let raw = value.to_str_radix(2);
    let raw = if raw == "0" { String::new() } else { raw };
    assert!(raw.len() as u64 <= len, "prefix value wider than its length");
    format!("{}{}", "0".repeat((len - raw.len() as u64) as usize), raw)
}

fn serialize_prefix<S: Serializer>(
    pair: &(BigUint, u64),
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&bit_string(&pair.0, pair.1))
}

/// One allocated codeword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub id: u64,
    pub codeword: String,
}

/// Online Kraft-Chaitin state: free strings keyed by length (canonical form
/// keeps lengths distinct) plus the assigned codewords.
///
/// Invariant: free and assigned strings are pairwise prefix-incomparable and
/// their weights sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KCState {
    free: BTreeMap<u64, String>,
    assigned: Vec<Assignment>,
}

impl Default for KCState {
    fn default() -> Self {
        KCState::new()
    }
}

impl KCState {
    /// The whole space is free: one empty string of weight 1.
    pub fn new() -> Self {
        KCState { free: BTreeMap::from([(0, String::new())]), assigned: Vec::new() }
    }

    /// Allocates a codeword of exactly `len` digits: splits the longest free
    /// string no longer than `len`, assigns its all-zeros extension, and
    /// frees the sibling strings along the extension. Succeeds exactly when
    /// `2^(-len)` is at most the remaining weight.
    pub fn alloc(&mut self, len: u64) -> Result<String> {
        let base = self
            .free
            .range(..=len)
            .next_back()
            .map(|(l, _)| *l)
            .ok_or(Error::CapacityExceeded { requested: len })?;
        let sigma = self.free.remove(&base).expect("key just found");
        let mut codeword = sigma;
        for _ in base..len {
            let mut sibling = codeword.clone();
            sibling.push('1');
            self.insert_free(sibling);
            codeword.push('0');
        }
        self.assigned.push(Assignment { id: self.assigned.len() as u64, codeword: codeword.clone() });
        debug_assert!(self.check_invariants().is_ok());
        Ok(codeword)
    }

    /// Canonicalizing insert: a length collision is resolved by merging the
    /// sibling pair into its parent. Longest-fit allocation never collides,
    /// so the loop is a proof of form rather than a working path.
    fn insert_free(&mut self, mut s: String) {
        loop {
            let len = s.len() as u64;
            match self.free.get(&len) {
                None => {
                    self.free.insert(len, s);
                    return;
                }
                Some(other) => {
                    assert!(
                        sibling_of(other, &s),
                        "canonical free list never holds two non-sibling strings of one length"
                    );
                    self.free.remove(&len);
                    s.pop();
                }
            }
        }
    }

    /// Total weight of the free strings.
    pub fn remaining_weight(&self) -> Dyadic {
        weight_of(self.free.keys().copied())
    }

    pub fn assigned(&self) -> &[Assignment] {
        &self.assigned
    }

    pub fn free_strings(&self) -> impl Iterator<Item = &str> {
        self.free.values().map(String::as_str)
    }

    /// Exact weight conservation and pairwise prefix-freeness.
    pub fn check_invariants(&self) -> Result<()> {
        let assigned = weight_of(self.assigned.iter().map(|a| a.codeword.len() as u64));
        if &assigned + &self.remaining_weight() != Dyadic::one() {
            return Err(Error::Invalid {
                what: "codeword space",
                detail: "free and assigned weights do not sum to 1".into(),
            });
        }
        let all: Vec<&str> = self
            .free
            .values()
            .map(String::as_str)
            .chain(self.assigned.iter().map(|a| a.codeword.as_str()))
            .collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if a.starts_with(b) || b.starts_with(a) {
                    return Err(Error::Invalid {
                        what: "codeword space",
                        detail: format!("{a:?} and {b:?} are prefix-comparable"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn sibling_of(a: &str, b: &str) -> bool {
    a.len() == b.len() && !a.is_empty() && a[..a.len() - 1] == b[..b.len() - 1] && a != b
}

/// One logged request: argument `n` enumerated at `stage` asked for a
/// description of that stage's prefix of length `g(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Request {
    pub n: u64,
    pub stage: usize,
    #[serde(serialize_with = "serialize_prefix", rename = "prefix")]
    pub prefix: (BigUint, u64),
    pub codeword: String,
}

/// The built reduction: the weight threshold, the request log, and the
/// machine state that allocated the descriptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionTables {
    pub threshold: u64,
    pub requests: Vec<Request>,
    pub kc: KCState,
}

impl ReductionTables {
    /// Exact total weight of the logged requests; below 1 on every
    /// successful build.
    pub fn total_request_weight(&self) -> Dyadic {
        weight_of(self.requests.iter().map(|r| r.prefix.1))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }
}

/// Least `c` with `sum of 2^(-g(n)) over n in (c, len] < 1`, rejected when
/// only the empty tail qualifies.
pub fn weight_threshold(g: &UseTable) -> Result<u64> {
    let len = g.len();
    let mut tail = Dyadic::zero();
    let mut threshold = len;
    // Scan right to left; the tail sums are monotone in c.
    for c in (0..len).rev() {
        tail += &Dyadic::inv_pow2(g.get(c + 1).expect("in range"));
        if tail < Dyadic::one() {
            threshold = c;
        } else {
            break;
        }
    }
    if threshold == len {
        return Err(Error::WeightUnsatisfiable { reached: len });
    }
    Ok(threshold)
}

/// Builds the request machine over a finite enumeration of `(n, stage)`
/// pairs: each `n` above the threshold files one request for the prefix of
/// the approximation at its entry stage, of length `g(n)`, with a codeword
/// of the same length. Arguments at or below the threshold are skipped.
pub fn build_reduction(
    enumeration: &[(u64, usize)],
    g: &UseTable,
    omega: &ApproxSequence,
) -> Result<ReductionTables> {
    let threshold = weight_threshold(g)?;
    let mut seen = std::collections::HashSet::new();
    let mut kc = KCState::new();
    let mut requests = Vec::new();
    for &(n, stage) in enumeration {
        if !seen.insert(n) {
            return Err(Error::DuplicateEnumeration { n });
        }
        if n <= threshold {
            continue;
        }
        let len = g.get(n).ok_or(Error::PositionUncovered { position: n.to_string() })?;
        let prefix = omega.value(stage)?.prefix(len);
        let codeword = kc.alloc(len)?;
        requests.push(Request { n, stage, prefix: (prefix, len), codeword });
    }
    Ok(ReductionTables { threshold, requests, kc })
}

/// A decided membership bit and the stage that justified it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberDecision {
    pub bit: u8,
    pub match_stage: usize,
}

/// Decides membership of `n` from an oracle prefix of length `g(n)`: find
/// the first stage whose approximation matches the prefix and answer the
/// enumeration's state at that stage. Exact whenever the matched prefix
/// never changes at later stages with `n` still outside.
pub fn decide_member(
    n: u64,
    oracle: &BigUint,
    g: &UseTable,
    tables: &ReductionTables,
    enumeration: &[(u64, usize)],
    omega: &ApproxSequence,
) -> Result<MemberDecision> {
    if n <= tables.threshold {
        return Err(Error::BelowThreshold { n, threshold: tables.threshold });
    }
    let len = g.get(n).ok_or(Error::PositionUncovered { position: n.to_string() })?;
    let match_stage = (0..omega.stages())
        .find(|&s| omega.values()[s].prefix(len) == *oracle)
        .ok_or(Error::NoMatchingStage)?;
    let bit = enumeration.iter().any(|&(m, stage)| m == n && stage <= match_stage);
    Ok(MemberDecision { bit: u8::from(bit), match_stage })
}

/// One test item: the stage, the leftmost changed digit, and the next
/// approximation's prefix of length `digit + g(digit)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolovayItem {
    pub stage: usize,
    pub digit: u64,
    #[serde(serialize_with = "serialize_prefix", rename = "string")]
    pub string: (BigUint, u64),
}

/// The accumulated test: items in stage order with their exact total weight
/// and the declared bound `sum of 2^(-g(n))` over the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolovayTestLedger {
    pub items: Vec<SolovayItem>,
    pub weight: Dyadic,
    pub bound: Dyadic,
}

impl SolovayTestLedger {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }
}

/// Builds the test: at each stage where `a` changes, one item at the
/// leftmost changed digit `d`, recording the tracked real's prefix of
/// length `d + g(d)` at the same stage. Each digit `d` contributes at most
/// `2^(d-1)` items, so the weight stays within the declared bound.
pub fn solovay_items(
    a: &ApproxSequence,
    omega: &ApproxSequence,
    g: &UseTable,
) -> Result<SolovayTestLedger> {
    if a.stages() != omega.stages() {
        return Err(Error::LengthMismatch { left: a.stages(), right: omega.stages() });
    }
    let mut items = Vec::new();
    for s in 1..a.stages() {
        let (prev, cur) = (&a.values()[s - 1], &a.values()[s]);
        if prev == cur {
            continue;
        }
        let digit = match Dyadic::leftmost_change(prev, cur)? {
            Position::Digit(d) => d,
            Position::IntegerPart => return Err(Error::IntegerPartChange { stage: s }),
        };
        let gd = g.get(digit).ok_or(Error::PositionUncovered { position: digit.to_string() })?;
        let len = digit.checked_add(gd).ok_or(Error::PositionOverflow { position: digit.to_string() })?;
        items.push(SolovayItem { stage: s, digit, string: (omega.values()[s].prefix(len), len) });
    }
    let weight = weight_of(items.iter().map(|i| i.string.1));
    let bound = weight_of((1..=g.len()).map(|n| g.get(n).expect("in range")));
    Ok(SolovayTestLedger { items, weight, bound })
}

/// A recovered prefix and the stage that served it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealPrefix {
    pub prefix: BigUint,
    pub match_stage: usize,
}

/// Computes the tracked real's first `n` digits from an oracle prefix of
/// length `n + g(n)`: replay to the first stage matching the oracle and
/// read the prefix there. Exact from the first stage where the matched
/// prefix has settled.
pub fn reduce_real(
    n: u64,
    oracle: &BigUint,
    g: &UseTable,
    a: &ApproxSequence,
    omega: &ApproxSequence,
) -> Result<RealPrefix> {
    if a.stages() != omega.stages() {
        return Err(Error::LengthMismatch { left: a.stages(), right: omega.stages() });
    }
    let gn = g.get(n).ok_or(Error::PositionUncovered { position: n.to_string() })?;
    let len = n.checked_add(gn).ok_or(Error::PositionOverflow { position: n.to_string() })?;
    let match_stage = (0..omega.stages())
        .find(|&s| omega.values()[s].prefix(len) == *oracle)
        .ok_or(Error::NoMatchingStage)?;
    Ok(RealPrefix { prefix: a.values()[match_stage].prefix(n), match_stage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(parts: &[(u64, u64)]) -> ApproxSequence {
        ApproxSequence::new(parts.iter().map(|&(m, s)| Dyadic::new(m, s)).collect()).unwrap()
    }

    fn table(values: &[u64]) -> UseTable {
        UseTable::new(values.to_vec()).unwrap()
    }

    #[test]
    fn alloc_examples() {
        let mut kc = KCState::new();
        assert_eq!(kc.alloc(0).unwrap(), "");
        assert_eq!(kc.free_strings().count(), 0);
        assert_eq!(kc.remaining_weight(), Dyadic::zero());
        assert_eq!(kc.alloc(5).err(), Some(Error::CapacityExceeded { requested: 5 }));

        let mut kc = KCState::new();
        assert_eq!(kc.alloc(2).unwrap(), "00");
        let free: Vec<&str> = kc.free_strings().collect();
        assert_eq!(free, vec!["1", "01"]);

        let mut kc = KCState::new();
        assert_eq!(kc.alloc(1).unwrap(), "0");
        assert_eq!(kc.alloc(1).unwrap(), "1");
        assert_eq!(kc.alloc(1).err(), Some(Error::CapacityExceeded { requested: 1 }));
    }

    #[test]
    fn alloc_conserves_weight_and_prefix_freeness() {
        let mut kc = KCState::new();
        for len in [3, 1, 4, 4, 2, 5, 3] {
            let before = kc.remaining_weight();
            let fits = Dyadic::inv_pow2(len) <= before;
            match kc.alloc(len) {
                Ok(w) => {
                    assert!(fits);
                    assert_eq!(w.len() as u64, len);
                }
                Err(Error::CapacityExceeded { requested }) => {
                    assert!(!fits);
                    assert_eq!(requested, len);
                }
                Err(other) => panic!("unexpected {other}"),
            }
            kc.check_invariants().unwrap();
        }
    }

    #[test]
    fn threshold_examples() {
        // g(n) = 2n: the whole tail from 1 already weighs below 1.
        let g = table(&[2, 4, 6, 8, 10, 12]);
        assert_eq!(weight_threshold(&g).unwrap(), 0);
        // g = 0 everywhere: every nonempty tail weighs at least 1.
        assert_eq!(
            weight_threshold(&table(&[0, 0, 0])).err(),
            Some(Error::WeightUnsatisfiable { reached: 3 })
        );
        // Only the final singleton tail fits.
        assert_eq!(weight_threshold(&table(&[0, 0, 5])).unwrap(), 2);
    }

    #[test]
    fn build_logs_requests_with_stage_prefixes() {
        let g = table(&[2, 4, 6, 8]);
        let omega = seq(&[(0, 0), (1, 2), (3, 3), (7, 3)]);
        let tables = build_reduction(&[(3, 1), (1, 2)], &g, &omega).unwrap();
        assert_eq!(tables.threshold, 0);
        assert_eq!(tables.requests.len(), 2);
        let r = &tables.requests[0];
        assert_eq!((r.n, r.stage), (3, 1));
        // Prefix of 1/4 at length 6.
        assert_eq!(r.prefix, (BigUint::from(16u8), 6));
        assert_eq!(r.codeword.len(), 6);
        assert!(tables.total_request_weight() < Dyadic::one());
        tables.kc.check_invariants().unwrap();

        assert_eq!(
            build_reduction(&[(3, 1), (3, 2)], &g, &omega).err(),
            Some(Error::DuplicateEnumeration { n: 3 })
        );
        assert!(matches!(
            build_reduction(&[(9, 0)], &g, &omega).err(),
            Some(Error::PositionUncovered { .. })
        ));
        assert!(matches!(
            build_reduction(&[(2, 9)], &g, &omega).err(),
            Some(Error::StageOutOfRange { .. })
        ));
        // Arguments at or below the threshold are skipped, not logged.
        let skipped = build_reduction(&[(1, 0)], &table(&[0, 0, 5]), &omega).unwrap();
        assert!(skipped.requests.is_empty());
    }

    #[test]
    fn membership_decisions() {
        let g = table(&[2, 4, 6, 8]);
        // The last step adds only 2^(-9), below every prefix resolution in
        // the table, so all prefixes settle at stage 3.
        let omega = seq(&[(0, 0), (1, 2), (3, 3), (7, 4), (225, 9)]);
        let enumeration = [(2u64, 1usize), (4, 4)];
        let tables = build_reduction(&enumeration, &g, &omega).unwrap();
        let true_prefix = |n: u64| omega.final_value().prefix(g.get(n).unwrap());

        // 2 entered at stage 1, before its prefix settled: reliable 1.
        let d = decide_member(2, &true_prefix(2), &g, &tables, &enumeration, &omega).unwrap();
        assert_eq!(d.bit, 1);
        // 3 was never enumerated: reliable 0.
        let d = decide_member(3, &true_prefix(3), &g, &tables, &enumeration, &omega).unwrap();
        assert_eq!(d.bit, 0);
        // 4 entered at the last stage, after its prefix settled at stage 3:
        // the finite-run failure mode the randomness argument excludes.
        let d = decide_member(4, &true_prefix(4), &g, &tables, &enumeration, &omega).unwrap();
        assert_eq!(d.bit, 0);
        assert!(d.match_stage < 4);

        assert_eq!(
            decide_member(0, &BigUint::ZERO, &g, &tables, &enumeration, &omega).err(),
            Some(Error::BelowThreshold { n: 0, threshold: 0 })
        );
        assert_eq!(
            decide_member(2, &BigUint::from(15u8), &g, &tables, &enumeration, &omega).err(),
            Some(Error::NoMatchingStage)
        );
    }

    #[test]
    fn solovay_ledger_examples() {
        let g = table(&[1, 2, 3, 4]);
        // a changes once, at digit 1.
        let a = seq(&[(0, 0), (1, 1)]);
        let omega = seq(&[(1, 2), (3, 2)]);
        let ledger = solovay_items(&a, &omega, &g).unwrap();
        assert_eq!(ledger.items.len(), 1);
        let item = &ledger.items[0];
        assert_eq!((item.stage, item.digit), (1, 1));
        // Prefix of 3/4 at length 1 + g(1) = 2.
        assert_eq!(item.string, (BigUint::from(3u8), 2));
        assert_eq!(ledger.weight, Dyadic::inv_pow2(2));
        assert!(ledger.weight <= ledger.bound);

        // Constant sequence: empty ledger.
        let c = seq(&[(1, 2), (1, 2)]);
        let empty = solovay_items(&c, &omega, &g).unwrap();
        assert!(empty.items.is_empty());
        assert_eq!(empty.weight, Dyadic::zero());

        // A carry into the integer part has no digit item.
        let to_one = seq(&[(1, 1), (1, 0)]);
        assert_eq!(
            solovay_items(&to_one, &omega, &g).err(),
            Some(Error::IntegerPartChange { stage: 1 })
        );
        assert_eq!(
            solovay_items(&a, &seq(&[(0, 0)]), &g).err(),
            Some(Error::LengthMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn self_reduction_is_exact() {
        let g = table(&[1, 2, 3, 4, 5, 6]);
        let omega = seq(&[(0, 0), (1, 3), (5, 4), (11, 4), (15, 4)]);
        for n in 1..=6u64 {
            let oracle = omega.final_value().prefix(n + g.get(n).unwrap());
            let got = reduce_real(n, &oracle, &g, &omega, &omega).unwrap();
            assert_eq!(got.prefix, omega.final_value().prefix(n), "n = {n}");
        }
        assert_eq!(
            reduce_real(1, &BigUint::from(9u8), &g, &omega, &omega).err(),
            Some(Error::NoMatchingStage)
        );
        assert!(matches!(
            reduce_real(9, &BigUint::ZERO, &g, &omega, &omega).err(),
            Some(Error::PositionUncovered { .. })
        ));
    }

    #[test]
    fn export_shapes() {
        let g = table(&[2, 4]);
        let omega = seq(&[(0, 0), (1, 2)]);
        let tables = build_reduction(&[(2, 1)], &g, &omega).unwrap();
        let json: serde_json::Value = serde_json::from_str(&tables.to_json()).unwrap();
        assert_eq!(json["requests"][0]["prefix"], "0100");
        assert_eq!(json["requests"][0]["codeword"].as_str().unwrap().len(), 4);
        let ledger = solovay_items(&seq(&[(0, 0), (1, 1)]), &omega, &g).unwrap();
        let json: serde_json::Value = serde_json::from_str(&ledger.to_json()).unwrap();
        assert_eq!(json["items"][0]["string"], "010");
        assert_eq!(json["weight"], "1/2^3");
    }

    /// Nondecreasing sequences below 1 at bounded resolution, with exactly
    /// `stages` stages.
    fn monotone_steps(max_digits: u32, stages: usize) -> impl Strategy<Value = ApproxSequence> {
        prop::collection::vec(0u64..6, stages).prop_map(move |steps| {
            let scale = max_digits as u64;
            let ceiling = 1u64 << scale;
            let mut acc = 0u64;
            let values = steps
                .into_iter()
                .map(|inc| {
                    acc = (acc + inc).min(ceiling - 1);
                    Dyadic::new(acc, scale)
                })
                .collect();
            ApproxSequence::new(values).unwrap()
        })
    }

    /// Nondecreasing sequences below 1 with stage count up to `max_stages`.
    fn monotone_seq(max_digits: u32, max_stages: usize) -> impl Strategy<Value = ApproxSequence> {
        (1..max_stages).prop_flat_map(move |stages| monotone_steps(max_digits, stages))
    }

    proptest! {
        #[test]
        fn allocation_success_is_exactly_weight_fit(lens in prop::collection::vec(0u64..7, 1..24)) {
            let mut kc = KCState::new();
            for len in lens {
                let fits = Dyadic::inv_pow2(len) <= kc.remaining_weight();
                prop_assert_eq!(kc.alloc(len).is_ok(), fits);
                kc.check_invariants().unwrap();
            }
        }

        #[test]
        fn ledger_weight_within_bound(
            (a, omega) in (1usize..16).prop_flat_map(|stages| {
                (monotone_steps(6, stages), monotone_steps(6, stages))
            }),
            g in prop::collection::vec(0u64..5, 6..8),
        ) {
            let mut g = g;
            g.sort_unstable();
            let g = UseTable::new(g).unwrap();
            let ledger = solovay_items(&a, &omega, &g).unwrap();
            prop_assert!(ledger.weight <= ledger.bound);
            // Per-digit counts respect the flip bound.
            for d in 1..=6u64 {
                let count = ledger.items.iter().filter(|i| i.digit == d).count() as u64;
                prop_assert!(count <= 1 << (d - 1));
            }
        }

        #[test]
        fn self_reduction_recovers_prefixes(omega in monotone_seq(6, 16), n in 1u64..6) {
            let g = UseTable::new(vec![2, 2, 3, 3, 4, 4]).unwrap();
            let oracle = omega.final_value().prefix(n + g.get(n).unwrap());
            let got = reduce_real(n, &oracle, &g, &omega, &omega).unwrap();
            prop_assert_eq!(got.prefix, omega.final_value().prefix(n));
        }
    }
}
