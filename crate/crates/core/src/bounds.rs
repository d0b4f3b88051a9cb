//! Greedy truncation against a strictly increasing constant sequence, and
//! the truncated sums built from a signature's tail that lower-bound game
//! outcomes.
//!
//! Every dyadic `x` decomposes uniquely as `x = sum of n_i * 2^(-c_i) + r`
//! where each later term is smaller than the previous resolution
//! (`n_(i+1) * 2^(-c_(i+1)) < 2^(-c_i)`) and `r < 2^(-c_last)`. Truncation
//! keeps the first `t + 1` terms of that decomposition.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::usefn::Signature;
use crate::{Error, Result};

fn check_constants(constants: &[u64]) {
    assert!(
        constants.windows(2).all(|w| w[0] < w[1]),
        "constants must be strictly increasing"
    );
}

/// The greedy coefficients of `x` against `constants`, plus the remainder
/// below the finest resolution.
pub fn greedy_decompose(x: &Dyadic, constants: &[u64]) -> (Vec<BigUint>, Dyadic) {
    check_constants(constants);
    let mut r = x.clone();
    let mut coeffs = Vec::with_capacity(constants.len());
    for &c in constants {
        let n = r.prefix(c);
        r = r.checked_sub(&Dyadic::new(n.clone(), c)).expect("prefix does not overshoot");
        coeffs.push(n);
    }
    (coeffs, r)
}

/// Keep the greedy terms of `x` at `constants[0..=depth]` and drop the rest.
///
/// Panics if `constants` is not strictly increasing or `depth` is out of
/// range; both are caller errors, not data conditions.
pub fn truncate(x: &Dyadic, depth: usize, constants: &[u64]) -> Dyadic {
    assert!(depth < constants.len(), "truncation depth out of range");
    let (coeffs, _) = greedy_decompose(x, &constants[..=depth]);
    let mut acc = Dyadic::zero();
    for (n, &c) in coeffs.into_iter().zip(constants) {
        acc += &Dyadic::new(n, c);
    }
    acc
}

/// The sums `S_k(0), ..., S_k(k-1)` for one signature index `k`: weights of
/// the runs walked backwards from `k`, re-truncated one resolution coarser
/// at each step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedSums {
    k: usize,
    values: Vec<Dyadic>,
}

impl TruncatedSums {
    pub fn k(&self) -> usize {
        self.k
    }

    /// `S_k(i)`. Depths `i >= k` are undefined by construction and rejected.
    pub fn value(&self, i: usize) -> Result<&Dyadic> {
        self.values
            .get(i)
            .ok_or(Error::DepthOutOfRange { depth: i, limit: self.k })
    }

    pub fn values(&self) -> &[Dyadic] {
        &self.values
    }
}

/// Compute the truncated sums at index `k` (requires `1 <= k < len`):
/// `S_k(0) = T(w_k, c_(k-1))` and
/// `S_k(i) = T(w_(k-i) + S_k(i-1), c_(k-i-1))`, with `w_j` the weight of
/// run `j`.
pub fn truncated_sums(sig: &Signature, k: usize) -> Result<TruncatedSums> {
    if k == 0 || k >= sig.len() {
        return Err(Error::SignatureIndex { index: k, len: sig.len() });
    }
    let constants: Vec<u64> = sig.entries()[..=k].iter().map(|e| e.constant).collect();
    let mut values = Vec::with_capacity(k);
    let mut prev = Dyadic::zero();
    for i in 0..k {
        let w = sig.entry(k - i)?.weight();
        let s = truncate(&(&w + &prev), k - i - 1, &constants);
        values.push(s.clone());
        prev = s;
    }
    Ok(TruncatedSums { k, values })
}

/// Comparison of `S_k(t)` against the raw weight sum it approximates:
/// `S_k(t) >= sum of w_(k-i) for i <= t, minus 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub k: usize,
    pub t: usize,
    pub s_value: Dyadic,
    pub weight_sum: Dyadic,
    pub holds: bool,
    /// `s_value + 1 - weight_sum` when the bound holds.
    pub surplus: Option<Dyadic>,
    /// `weight_sum - (s_value + 1)` when it does not.
    pub deficit: Option<Dyadic>,
}

pub fn lower_bound_report(sig: &Signature, k: usize, t: usize) -> Result<LowerBoundReport> {
    let sums = truncated_sums(sig, k)?;
    let s_value = sums.value(t)?.clone();
    let mut weight_sum = Dyadic::zero();
    for i in 0..=t {
        weight_sum += &sig.entry(k - i)?.weight();
    }
    let lifted = &s_value + &Dyadic::one();
    let holds = lifted >= weight_sum;
    let (surplus, deficit) = if holds {
        (Some(lifted.checked_sub(&weight_sum).expect("holds")), None)
    } else {
        (None, Some(weight_sum.checked_sub(&lifted).expect("violated")))
    };
    Ok(LowerBoundReport { k, t, s_value, weight_sum, holds, surplus, deficit })
}
