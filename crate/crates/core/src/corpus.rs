//! Seeded corpus generators shared by the verification suites: random
//! signatures, monotone approximations, coupled enumeration cases, and the
//! deterministic signature ladder whose plans drive the construction.

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coding::ApproxSequence;
use crate::dyadic::Dyadic;
use crate::machines::weight_threshold;
use crate::usefn::{SigEntry, Signature, UseTable};
use crate::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid signature: up to 6 runs of size up to 8, constants
/// strictly increasing within 0..=16.
pub fn gen_signature(rng: &mut ChaCha8Rng) -> Signature {
    let runs = rng.gen_range(1..=6);
    let mut parts = Vec::with_capacity(runs);
    let mut c = rng.gen_range(0..=1u64);
    let mut lo = 1u64;
    for _ in 0..runs {
        let size = rng.gen_range(1..=8u64);
        parts.push((c, lo, lo + size - 1));
        lo += size;
        c += rng.gen_range(1..=3u64);
    }
    Signature::from_parts(&parts).expect("generated parts tile with increasing constants")
}

/// A random nondecreasing approximation below 1: up to 64 stages at up to
/// 12 fractional digits.
pub fn gen_monotone_approx(rng: &mut ChaCha8Rng) -> ApproxSequence {
    let stages = rng.gen_range(1..=64);
    let scale = rng.gen_range(1..=12u64);
    gen_monotone_approx_sized(rng, stages, scale)
}

/// Same, with the stage count and precision pinned.
pub fn gen_monotone_approx_sized(
    rng: &mut ChaCha8Rng,
    stages: usize,
    scale: u64,
) -> ApproxSequence {
    let ceiling = (1u64 << scale) - 1;
    let step = ceiling / 8 + 1;
    let mut acc = 0u64;
    let values = (0..stages)
        .map(|_| {
            acc = (acc + rng.gen_range(0..=step)).min(ceiling);
            Dyadic::new(acc, scale)
        })
        .collect();
    ApproxSequence::new(values).expect("nondecreasing below 1 by construction")
}

/// The deterministic signature ladder for `e_count` construction blocks:
/// two lead-in runs, a size-18 run that crosses the first threshold as
/// early as possible, and each deeper run sized `2^c * (2^m + 2)` so it
/// crosses the threshold `2^m` of the block before it in one step.
///
/// Blocks beyond the first have astronomically wide runs; their bounds stay
/// exact because sizes are big integers.
pub fn plan_signature(e_count: usize) -> Result<Signature> {
    assert!(e_count >= 1, "the ladder needs at least one block");
    let mut entries = vec![
        SigEntry { constant: 0, lo: BigUint::from(1u8), hi: BigUint::from(1u8) },
        SigEntry { constant: 1, lo: BigUint::from(2u8), hi: BigUint::from(2u8) },
        SigEntry { constant: 2, lo: BigUint::from(3u8), hi: BigUint::from(20u8) },
    ];
    for j in 3..e_count + 2 {
        let c = j as u64;
        let m = entries.last().expect("nonempty").hi.clone();
        // 2^c * (2^m + 2): the run's weight is exactly 2^m + 2 > 2^m.
        let size = (BigUint::from(2u8) + (BigUint::one() << bits_of(&m))) << c;
        let lo = &m + BigUint::one();
        let hi = &m + &size;
        entries.push(SigEntry { constant: c, lo, hi });
    }
    Signature::from_entries(entries)
}

fn bits_of(m: &BigUint) -> u64 {
    u64::try_from(m).expect("ladder exponents stay within a machine word")
}

/// An enumeration, its tracked approximation, and a use table, coupled so
/// that every enumerated argument enters at or before the stage where its
/// prefix settles. Membership decisions are exact on such cases.
#[derive(Debug, Clone)]
pub struct CoupledCase {
    pub enumeration: Vec<(u64, usize)>,
    pub omega: ApproxSequence,
    pub g: UseTable,
}

pub fn gen_coupled_case(rng: &mut ChaCha8Rng) -> CoupledCase {
    let len = rng.gen_range(4..=8usize);
    let mut gv: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=6)).collect();
    gv.sort_unstable();
    let g = UseTable::new(gv).unwrap();
    let omega = gen_monotone_approx(rng);
    let threshold = weight_threshold(&g).expect("positive table has a finite tail below 1");
    let final_value = omega.final_value().clone();
    let mut enumeration = Vec::new();
    for n in threshold + 1..=g.len() {
        if rng.gen_bool(0.6) {
            let plen = g.get(n).expect("in range");
            let settle = (0..omega.stages())
                .find(|&s| omega.values()[s].prefix(plen) == final_value.prefix(plen))
                .expect("the final stage always matches");
            enumeration.push((n, rng.gen_range(0..=settle)));
        }
    }
    CoupledCase { enumeration, omega, g }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{build_reduction, decide_member};
    use crate::usefn::build_plan;

    #[test]
    fn generators_are_deterministic() {
        let (mut a, mut b) = (rng(42), rng(42));
        assert_eq!(gen_signature(&mut a), gen_signature(&mut b));
        assert_eq!(gen_monotone_approx(&mut a), gen_monotone_approx(&mut b));
        let (ca, cb) = (gen_coupled_case(&mut a), gen_coupled_case(&mut b));
        assert_eq!(ca.enumeration, cb.enumeration);
        assert_eq!(ca.omega, cb.omega);
    }

    #[test]
    fn signatures_fit_the_stated_bounds() {
        let mut r = rng(7);
        for _ in 0..200 {
            let sig = gen_signature(&mut r);
            assert!(sig.len() <= 6);
            for e in sig.entries() {
                assert!(e.size() <= BigUint::from(8u8));
                assert!(e.constant <= 16);
            }
            assert!(sig.max_position().unwrap() <= &BigUint::from(48u8));
        }
    }

    #[test]
    fn approximations_fit_the_stated_bounds() {
        let mut r = rng(11);
        for _ in 0..100 {
            let a = gen_monotone_approx(&mut r);
            assert!(a.stages() <= 64);
            assert!(a.final_value() < &Dyadic::one());
        }
    }

    #[test]
    fn ladder_plans_cut_one_run_per_block() {
        for e_count in 1..=3usize {
            let sig = plan_signature(e_count).unwrap();
            assert_eq!(sig.len(), e_count + 2);
            let plan = build_plan(&sig, e_count).unwrap();
            let expected: Vec<usize> = (1..=e_count + 1).collect();
            assert_eq!(plan.boundaries, expected);
            assert_eq!(plan.blocks[0].lo, BigUint::from(2u8));
            assert_eq!(plan.blocks[0].hi, BigUint::from(20u8));
        }
        // The depth-3 outer run is astronomically wide but exact.
        let sig = plan_signature(3).unwrap();
        let outer = sig.entries().last().unwrap();
        assert!(outer.hi.bits() > 8_000_000);
    }

    #[test]
    fn coupled_cases_decide_exactly() {
        let mut r = rng(23);
        for _ in 0..20 {
            let case = gen_coupled_case(&mut r);
            let tables = build_reduction(&case.enumeration, &case.g, &case.omega).unwrap();
            for n in tables.threshold + 1..=case.g.len() {
                let oracle = case.omega.final_value().prefix(case.g.get(n).unwrap());
                let d =
                    decide_member(n, &oracle, &case.g, &tables, &case.enumeration, &case.omega)
                        .unwrap();
                let truth = case.enumeration.iter().any(|&(m, _)| m == n);
                assert_eq!(d.bit == 1, truth, "argument {n}");
            }
        }
    }
}
