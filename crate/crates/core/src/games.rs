//! The h-load game. Two loading reals absorb a fixed quantum in strict
//! alternation; each add changes a leftmost digit k of the mover, and a third
//! real must answer by changing its own prefix of length h(k). The module
//! provides the exact step engine, a closed-form evaluator for the
//! least-effort responder, predictions for constant-offset and general
//! signature runs, strategy-dominance and offset-preservation checkers, and a
//! search for inputs falling strictly below the naive weight bound.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{Dyadic, Position};
use crate::hash::Fnv64;
use crate::usefn::{Signature, UseTable};
use crate::{Error, Result};

/// The demand map `h`. Every form is nondecreasing with `h(x) >= x` wherever
/// defined, except `Raw`, whose lower bound is checked at run time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseSpec {
    /// `h(x) = x + c`.
    Offset { c: u64 },
    /// `h(x) = x + g(x)` with an explicit table.
    PlusTable(UseTable),
    /// `h(x) = x + g(x)` with a run-length signature.
    PlusSignature(Signature),
    /// `h` given directly as a (nondecreasing) table.
    Raw(UseTable),
}

impl UseSpec {
    /// `h(pos)` for 1-based `pos`, if covered.
    pub fn h_at(&self, pos: u64) -> Option<u64> {
        match self {
            UseSpec::Offset { c } => pos.checked_add(*c),
            UseSpec::PlusTable(g) => g.get(pos).and_then(|v| pos.checked_add(v)),
            UseSpec::PlusSignature(sig) => sig.h_at(pos).ok(),
            UseSpec::Raw(h) => h.get(pos),
        }
    }

    /// Checks that `(lo, hi]` is a real interval, every position in it has a
    /// demand, and `h(x) >= x` throughout.
    pub fn check_interval(&self, lo: u64, hi: u64) -> Result<()> {
        if lo >= hi {
            return Err(Error::EmptyInterval { lo: lo.to_string(), hi: hi.to_string() });
        }
        for pos in lo + 1..=hi {
            let h = self
                .h_at(pos)
                .ok_or_else(|| Error::PositionUncovered { position: pos.to_string() })?;
            if h < pos {
                return Err(Error::Invalid {
                    what: "demand map",
                    detail: format!("h({pos}) = {h} falls below its argument"),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for UseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UseSpec::Offset { c } => write!(f, "x+{c}"),
            UseSpec::PlusTable(_) | UseSpec::PlusSignature(_) => write!(f, "x+g"),
            UseSpec::Raw(_) => write!(f, "h"),
        }
    }
}

/// One of the two loading reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Alpha,
    Beta,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Alpha => write!(f, "alpha"),
            Player::Beta => write!(f, "beta"),
        }
    }
}

/// Which player takes the odd-numbered steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveOrder {
    AlphaFirst,
    BetaFirst,
}

impl MoveOrder {
    fn mover(self, step: u64) -> Player {
        let first = match self {
            MoveOrder::AlphaFirst => Player::Alpha,
            MoveOrder::BetaFirst => Player::Beta,
        };
        if step % 2 == 1 {
            first
        } else {
            match first {
                Player::Alpha => Player::Beta,
                Player::Beta => Player::Alpha,
            }
        }
    }
}

/// A fully specified game: demand map, interval, move order, and caps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HloadConfig {
    pub spec: UseSpec,
    pub lo: u64,
    pub hi: u64,
    pub order: MoveOrder,
    /// Hard ceiling on step count; the run fails rather than exceed it.
    pub step_cap: u64,
    /// Steps recorded in the trace; later steps still count and digest.
    pub record_limit: usize,
}

impl HloadConfig {
    pub fn new(spec: UseSpec, lo: u64, hi: u64) -> Result<Self> {
        spec.check_interval(lo, hi)?;
        let step_cap = expected_steps(lo, hi).saturating_mul(2);
        Ok(HloadConfig { spec, lo, hi, order: MoveOrder::AlphaFirst, step_cap, record_limit: usize::MAX })
    }

    pub fn with_order(mut self, order: MoveOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn with_record_limit(mut self, limit: usize) -> Self {
        self.record_limit = limit;
        self
    }
}

/// `2 * (2^(hi-lo) - 1)`, saturating: both players walk their interval once.
pub fn expected_steps(lo: u64, hi: u64) -> u64 {
    let width = hi.saturating_sub(lo);
    if width >= 63 {
        return u64::MAX;
    }
    2 * ((1u64 << width) - 1)
}

/// Snapshot of the three reals after a number of steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameState {
    pub alpha: Dyadic,
    pub beta: Dyadic,
    pub gamma: Dyadic,
    pub step: u64,
}

/// One move: who added the quantum, where their expansion changed, what was
/// demanded, and how the responder's real moved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameStep {
    pub step: u64,
    pub mover: Player,
    pub added: Dyadic,
    pub k: Position,
    pub demand: u64,
    pub gamma_before: Dyadic,
    pub gamma_after: Dyadic,
}

/// A complete run: configuration, (possibly capped) step records, a digest
/// over all steps, and the final state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameTrace {
    pub config: HloadConfig,
    pub steps: Vec<GameStep>,
    pub total_steps: u64,
    pub digest: u64,
    pub final_state: GameState,
    pub gamma_exceeded_one: bool,
}

impl GameTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// One row per recorded step, dyadics as exact fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,mover,added,k,demand,gamma_before,gamma_after\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.step, s.mover, s.added, s.k, s.demand, s.gamma_before, s.gamma_after
            ));
        }
        out
    }
}

/// A responder strategy: produces the increment added to gamma against each
/// demand. The engine rejects increments that leave the demanded prefix
/// unchanged.
pub trait Responder {
    fn respond(&mut self, gamma: &Dyadic, demand: u64) -> Dyadic;
}

/// Adds exactly `least_increment(gamma, demand)` every time.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastEffort;

impl Responder for LeastEffort {
    fn respond(&mut self, gamma: &Dyadic, demand: u64) -> Dyadic {
        gamma.least_increment(demand)
    }
}

/// Least effort plus a fixed number of extra demand-sized quanta.
#[derive(Debug, Clone, Copy)]
pub struct ExtraResponder {
    pub units: u64,
}

impl Responder for ExtraResponder {
    fn respond(&mut self, gamma: &Dyadic, demand: u64) -> Dyadic {
        let extra = Dyadic::new(BigUint::from(self.units), demand);
        gamma.least_increment(demand) + extra
    }
}

/// Least effort plus a seeded random number of extra demand-sized quanta.
/// Any increment at least the least one still satisfies the demand.
#[derive(Debug, Clone)]
pub struct RandomOverResponder {
    rng: ChaCha8Rng,
    max_units: u64,
}

impl RandomOverResponder {
    pub fn seeded(seed: u64, max_units: u64) -> Self {
        RandomOverResponder { rng: ChaCha8Rng::seed_from_u64(seed), max_units }
    }
}

impl Responder for RandomOverResponder {
    fn respond(&mut self, gamma: &Dyadic, demand: u64) -> Dyadic {
        let units = self.rng.gen_range(0..=self.max_units);
        let extra = Dyadic::new(BigUint::from(units), demand);
        gamma.least_increment(demand) + extra
    }
}

/// The alternating walk of the two loading reals, emitting each move's
/// leftmost change and demand. Shared by every stepwise checker.
struct Walk {
    lo: u64,
    quantum: Dyadic,
    target_frac: Dyadic,
    alpha: Dyadic,
    beta: Dyadic,
    order: MoveOrder,
    step: u64,
}

struct WalkEvent {
    step: u64,
    mover: Player,
    k: Position,
    demand: u64,
}

impl Walk {
    fn new(config: &HloadConfig) -> Result<Self> {
        config.spec.check_interval(config.lo, config.hi)?;
        if expected_steps(config.lo, config.hi) > config.step_cap {
            return Err(Error::StepCapExceeded {
                steps: expected_steps(config.lo, config.hi).to_string(),
                cap: config.step_cap,
            });
        }
        let width = config.hi - config.lo;
        let target_frac = Dyadic::new((BigUint::one() << width) - BigUint::one(), config.hi);
        Ok(Walk {
            lo: config.lo,
            quantum: Dyadic::inv_pow2(config.hi),
            target_frac,
            alpha: Dyadic::zero(),
            beta: Dyadic::zero(),
            order: config.order,
            step: 0,
        })
    }

    fn all_ones(&self, x: &Dyadic) -> bool {
        x.mod_pow2(self.lo) == self.target_frac
    }

    fn advance(&mut self, spec: &UseSpec) -> Result<Option<WalkEvent>> {
        if self.all_ones(&self.alpha) && self.all_ones(&self.beta) {
            return Ok(None);
        }
        self.step += 1;
        let mover = self.order.mover(self.step);
        let real = match mover {
            Player::Alpha => &mut self.alpha,
            Player::Beta => &mut self.beta,
        };
        let old = real.clone();
        *real += &self.quantum;
        let k = Dyadic::leftmost_change(&old, real)?;
        let digit = k.digit().ok_or(Error::Invalid {
            what: "h-load walk",
            detail: format!("carry crossed the integer part at step {}", self.step),
        })?;
        let demand = spec
            .h_at(digit)
            .ok_or_else(|| Error::PositionUncovered { position: digit.to_string() })?;
        Ok(Some(WalkEvent { step: self.step, mover, k, demand }))
    }
}

fn check_response(before: &Dyadic, after: &Dyadic, demand: u64, step: u64) -> Result<()> {
    if after == before {
        return Err(Error::DemandUnsatisfied { step });
    }
    match Dyadic::leftmost_change(before, after)? {
        Position::IntegerPart => Ok(()),
        Position::Digit(d) if d <= demand => Ok(()),
        Position::Digit(_) => Err(Error::DemandUnsatisfied { step }),
    }
}

/// Runs the full game: quanta alternate into the loading reals until every
/// interval digit of both is 1, with `responder` answering each demand.
pub fn hload(config: &HloadConfig, responder: &mut dyn Responder) -> Result<GameTrace> {
    let mut walk = Walk::new(config)?;
    let mut gamma = Dyadic::zero();
    let mut steps = Vec::new();
    let mut hasher = Fnv64::new();
    while let Some(ev) = walk.advance(&config.spec)? {
        if ev.step > config.step_cap {
            return Err(Error::StepCapExceeded { steps: ev.step.to_string(), cap: config.step_cap });
        }
        let inc = responder.respond(&gamma, ev.demand);
        let after = &gamma + &inc;
        check_response(&gamma, &after, ev.demand, ev.step)?;
        digest_step(&mut hasher, ev.mover, ev.k, ev.demand, &after);
        if steps.len() < config.record_limit {
            steps.push(GameStep {
                step: ev.step,
                mover: ev.mover,
                added: walk.quantum.clone(),
                k: ev.k,
                demand: ev.demand,
                gamma_before: gamma.clone(),
                gamma_after: after.clone(),
            });
        }
        gamma = after;
    }
    let gamma_exceeded_one = gamma > Dyadic::one();
    Ok(GameTrace {
        config: config.clone(),
        steps,
        total_steps: walk.step,
        digest: hasher.finish(),
        final_state: GameState { alpha: walk.alpha, beta: walk.beta, gamma, step: walk.step },
        gamma_exceeded_one,
    })
}

fn digest_step(h: &mut Fnv64, mover: Player, k: Position, demand: u64, gamma_after: &Dyadic) {
    h.write(&[match mover {
        Player::Alpha => 0,
        Player::Beta => 1,
    }]);
    match k {
        Position::IntegerPart => h.write_u64(u64::MAX),
        Position::Digit(d) => h.write_u64(d),
    }
    h.write_u64(demand);
    h.write_dyadic(gamma_after);
}

/// Final least-effort gamma without stepping the game, in O(hi - lo) exact
/// operations.
///
/// Peeling the shallowest digit splits the walk of `(m, hi]` into the walk
/// of `(m+1, hi]`, two consecutive moves demanding h(m+1), and the walk of
/// `(m+1, hi]` again. After the two middle responses gamma is a multiple of
/// `2^(-h(m+1))`, which is at least as coarse as every deeper demand, so the
/// trailing walk adds exactly what the leading walk did. This needs `h`
/// nondecreasing on the interval; every `UseSpec` form satisfies that, and
/// the run is rejected otherwise.
pub fn least_effort_final(spec: &UseSpec, lo: u64, hi: u64) -> Result<Dyadic> {
    spec.check_interval(lo, hi)?;
    let mut gamma = Dyadic::zero();
    let mut deeper_demand: Option<u64> = None;
    for m in (lo..hi).rev() {
        let d = spec.h_at(m + 1).ok_or_else(|| Error::PositionUncovered {
            position: (m + 1).to_string(),
        })?;
        if deeper_demand.is_some_and(|deep| d > deep) {
            return Err(Error::FastEvalNonMonotone);
        }
        deeper_demand = Some(d);
        let g2 = &gamma + &gamma.least_increment(d);
        let g3 = &g2 + &g2.least_increment(d);
        gamma = &g3 + &gamma;
    }
    Ok(gamma)
}

/// Folds the least-effort response over an explicit demand sequence.
pub fn least_effort_fold<I: IntoIterator<Item = u64>>(demands: I, start: Dyadic) -> Dyadic {
    let mut gamma = start;
    for d in demands {
        gamma += &gamma.least_increment(d).clone();
    }
    gamma
}

/// Final gamma for the constant-offset game on `(k, k+n]` with `h = x + c`:
/// exactly `n * 2^(-k-c)`.
pub fn predict_atomic(n: u64, k: u64, c: u64) -> Dyadic {
    Dyadic::new(BigUint::from(n), k + c)
}

/// What the general run pins down: the exact truncation constraint on the
/// final gamma, and (when defined) the closed-form floor below it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneralPrediction {
    /// Required value of `T(2^m * gamma, c_(k-t))`.
    pub constraint: Dyadic,
    /// The truncation constant `c_(k-t)` the constraint is stated at.
    pub truncation_constant: u64,
    /// Signature index `k - t` of that constant.
    pub truncation_index: usize,
    /// `2^(-m) * S_k(t)`; defined only when `m` is the largest position
    /// below run `k - t` and `t < k`.
    pub floor: Option<Dyadic>,
}

/// Prediction for the least-effort game on `(m, max I_k]` with `h = x + g`:
/// `T(2^m * gamma, c_(k-t)) = S_k(t-1) + (max I_(k-t) - m) * 2^(-c_(k-t))`,
/// with `S_k(-1) = 0`. Requires `t <= k` and `m` in run `k - t` or one below
/// its least position.
pub fn predict_general(sig: &Signature, k: usize, t: usize, m: u64) -> Result<GeneralPrediction> {
    sig.entry(k)?;
    if t > k {
        return Err(Error::DepthOutOfRange { depth: t, limit: k });
    }
    let run = sig.entry(k - t)?;
    let word = |b: &BigUint| {
        u64::try_from(b).map_err(|_| Error::PositionOverflow { position: b.to_string() })
    };
    let (run_lo, run_hi) = (word(&run.lo)?, word(&run.hi)?);
    if m + 1 < run_lo || m > run_hi {
        return Err(Error::Invalid {
            what: "prediction offset",
            detail: format!("m = {m} lies outside [{}, {run_hi}]", run_lo - 1),
        });
    }
    let sums = if k >= 1 { Some(crate::bounds::truncated_sums(sig, k)?) } else { None };
    let s_prev = match t.checked_sub(1) {
        None => Dyadic::zero(),
        Some(i) => sums.as_ref().expect("t >= 1 implies k >= 1").value(i)?.clone(),
    };
    let constraint = &s_prev + &Dyadic::new(BigUint::from(run_hi - m), run.constant);
    let floor = if m + 1 == run_lo && t < k {
        Some(sums.as_ref().expect("t < k implies k >= 1").value(t)?.shr(m))
    } else {
        None
    };
    Ok(GeneralPrediction {
        constraint,
        truncation_constant: run.constant,
        truncation_index: k - t,
        floor,
    })
}

/// Stage-by-stage comparison of the least-effort responder against `alt` on
/// the same walk: records the first stage (if any) where least effort is not
/// below or equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceReport {
    pub total_steps: u64,
    pub first_violation: Option<u64>,
    pub holds: bool,
    pub final_least: Dyadic,
    pub final_alt: Dyadic,
}

pub fn compare_strategies(config: &HloadConfig, alt: &mut dyn Responder) -> Result<DominanceReport> {
    let mut walk = Walk::new(config)?;
    let mut least = Dyadic::zero();
    let mut other = Dyadic::zero();
    let mut first_violation = None;
    while let Some(ev) = walk.advance(&config.spec)? {
        if ev.step > config.step_cap {
            return Err(Error::StepCapExceeded { steps: ev.step.to_string(), cap: config.step_cap });
        }
        least += &least.least_increment(ev.demand).clone();
        let inc = alt.respond(&other, ev.demand);
        let after = &other + &inc;
        check_response(&other, &after, ev.demand, ev.step)?;
        other = after;
        if least > other && first_violation.is_none() {
            first_violation = Some(ev.step);
        }
    }
    Ok(DominanceReport {
        total_steps: walk.step,
        first_violation,
        holds: first_violation.is_none(),
        final_least: least,
        final_alt: other,
    })
}

/// Twin least-effort runs from 0 and from `offset`, asserting the shifted
/// run stays exactly `offset` ahead at every stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccumulationReport {
    pub offset: Dyadic,
    pub total_steps: u64,
    pub first_violation: Option<u64>,
    pub holds: bool,
    pub final_base: Dyadic,
    pub final_shifted: Dyadic,
}

/// Requires every demand in the run to lie strictly beyond the offset's
/// expansion, so the offset's digits are never touched by a response.
pub fn accumulation_check(config: &HloadConfig, offset: &Dyadic) -> Result<AccumulationReport> {
    let mut walk = Walk::new(config)?;
    let mut base = Dyadic::zero();
    let mut shifted = offset.clone();
    let mut first_violation = None;
    while let Some(ev) = walk.advance(&config.spec)? {
        if ev.step > config.step_cap {
            return Err(Error::StepCapExceeded { steps: ev.step.to_string(), cap: config.step_cap });
        }
        if ev.demand <= offset.scale() {
            return Err(Error::OffsetTooCoarse { offset_len: offset.scale(), demand: ev.demand });
        }
        base += &base.least_increment(ev.demand).clone();
        shifted += &shifted.least_increment(ev.demand).clone();
        if shifted != &base + offset && first_violation.is_none() {
            first_violation = Some(ev.step);
        }
    }
    Ok(AccumulationReport {
        offset: offset.clone(),
        total_steps: walk.step,
        first_violation,
        holds: first_violation.is_none(),
        final_base: base,
        final_shifted: shifted,
    })
}

/// A signature and interval where the run's true final gamma falls strictly
/// below the naive bound `2^(-lo) * sum of 2^(-g(i))` over the interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FalseBoundCase {
    pub signature: Signature,
    pub lo: u64,
    pub hi: u64,
    pub gamma: Dyadic,
    pub claimed: Dyadic,
}

/// The naive bound itself.
pub fn claimed_weight_bound(sig: &Signature, lo: u64, hi: u64) -> Dyadic {
    sig.weight_range(&BigUint::from(lo), &BigUint::from(hi)).shr(lo)
}

/// Tests one signature against the naive bound over `(lo, hi]`.
pub fn false_bound_case(sig: &Signature, lo: u64, hi: u64) -> Result<Option<FalseBoundCase>> {
    let claimed = claimed_weight_bound(sig, lo, hi);
    let gamma = least_effort_final(&UseSpec::PlusSignature(sig.clone()), lo, hi)?;
    Ok((gamma < claimed).then(|| FalseBoundCase {
        signature: sig.clone(),
        lo,
        hi,
        gamma,
        claimed,
    }))
}

/// Seeded sweep over two-run signatures with a constant gap of at least 2,
/// played over their full span; returns the first case beating the bound.
pub fn false_bound_search(seed: u64, budget: u64) -> Option<FalseBoundCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let c0 = rng.gen_range(0..=2u64);
        let gap = rng.gen_range(2..=6u64);
        let first = rng.gen_range(1..=3u64);
        let second = rng.gen_range(1..=3u64);
        let sig = Signature::from_parts(&[
            (c0, 1, first),
            (c0 + gap, first + 1, first + second),
        ])
        .expect("generated parts are well formed");
        if let Ok(Some(case)) = false_bound_case(&sig, 0, first + second) {
            return Some(case);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::truncate;
    use proptest::prelude::*;

    fn run_le(spec: UseSpec, lo: u64, hi: u64) -> GameTrace {
        hload(&HloadConfig::new(spec, lo, hi).unwrap(), &mut LeastEffort).unwrap()
    }

    #[test]
    fn atomic_examples() {
        // h = x + 2 on (1, 3]: final gamma 2 * 2^(-1-2) = 1/4.
        let trace = run_le(UseSpec::Offset { c: 2 }, 1, 3);
        assert_eq!(trace.final_state.gamma, Dyadic::inv_pow2(2));
        assert_eq!(trace.final_state.gamma, predict_atomic(2, 1, 2));
        // h = x + 1 on (0, 1]: final gamma 1/2.
        let trace = run_le(UseSpec::Offset { c: 1 }, 0, 1);
        assert_eq!(trace.final_state.gamma, Dyadic::inv_pow2(1));
        assert_eq!(trace.final_state.gamma, predict_atomic(1, 0, 1));
    }

    #[test]
    fn predict_atomic_examples() {
        assert_eq!(predict_atomic(1, 0, 1), Dyadic::inv_pow2(1));
        assert_eq!(predict_atomic(2, 1, 2), Dyadic::inv_pow2(2));
        assert_eq!(predict_atomic(4, 2, 0), Dyadic::one());
    }

    #[test]
    fn loading_reals_end_all_ones() {
        let trace = run_le(UseSpec::Offset { c: 0 }, 1, 4);
        // 0.0111 with ones exactly in (1, 4].
        let expected = Dyadic::new(BigUint::from(7u8), 4);
        assert_eq!(trace.final_state.alpha, expected);
        assert_eq!(trace.final_state.beta, expected);
        assert_eq!(trace.total_steps, expected_steps(1, 4));
        // Alternation: odd steps alpha, even steps beta.
        for s in &trace.steps {
            let want = if s.step % 2 == 1 { Player::Alpha } else { Player::Beta };
            assert_eq!(s.mover, want);
        }
    }

    #[test]
    fn demands_match_h_of_k() {
        let sig = Signature::from_parts(&[(1, 1, 1), (2, 2, 3), (3, 4, 5)]).unwrap();
        let spec = UseSpec::PlusSignature(sig.clone());
        let trace = run_le(spec.clone(), 1, 5);
        for s in &trace.steps {
            let k = s.k.digit().unwrap();
            assert!(1 < k && k <= 5);
            assert_eq!(s.demand, spec.h_at(k).unwrap());
            assert_eq!(
                s.gamma_after.checked_sub(&s.gamma_before).unwrap(),
                s.gamma_before.least_increment(s.demand)
            );
        }
    }

    #[test]
    fn general_example_constraint_and_floor() {
        // Signature runs: c = (1, 2, 3) on {1}, {2,3}, {4,5}. Game on (1, 5].
        let sig = Signature::from_parts(&[(1, 1, 1), (2, 2, 3), (3, 4, 5)]).unwrap();
        let spec = UseSpec::PlusSignature(sig.clone());
        let gamma = run_le(spec.clone(), 1, 5).final_state.gamma;
        assert_eq!(gamma, least_effort_final(&spec, 1, 5).unwrap());

        let pred = predict_general(&sig, 2, 1, 1).unwrap();
        assert_eq!(pred.constraint, Dyadic::new(BigUint::from(3u8), 2));
        assert_eq!(pred.truncation_constant, 2);
        assert_eq!(pred.floor, Some(Dyadic::inv_pow2(2)));

        // T(2^1 * gamma, c_1) equals the constraint exactly.
        let constants = [1, 2, 3];
        assert_eq!(truncate(&gamma.shl(1), 1, &constants), pred.constraint);
        assert!(gamma >= pred.floor.unwrap());
    }

    #[test]
    fn general_base_case_matches_atomic() {
        let sig = Signature::from_parts(&[(1, 1, 1), (2, 2, 3), (3, 4, 5)]).unwrap();
        // t = 0, m = max I_2 - n: constraint reduces to n * 2^(-c_2). Here
        // m also equals min I_2 - 1, so the floor is defined: 2^(-3)*S_2(0).
        let pred = predict_general(&sig, 2, 0, 3).unwrap();
        assert_eq!(pred.constraint, Dyadic::new(BigUint::from(2u8), 3));
        assert_eq!(pred.constraint, predict_atomic(2, 3, 3).shl(3));
        assert_eq!(pred.floor, Some(Dyadic::inv_pow2(5)));
        // Degenerate m = max I_(k-t): the interval term vanishes.
        let pred = predict_general(&sig, 2, 1, 3).unwrap();
        let sums = crate::bounds::truncated_sums(&sig, 2).unwrap();
        assert_eq!(&pred.constraint, sums.value(0).unwrap());
        assert_eq!(pred.floor, None);
    }

    #[test]
    fn predict_general_index_errors() {
        let sig = Signature::from_parts(&[(1, 1, 1), (2, 2, 3)]).unwrap();
        assert!(matches!(predict_general(&sig, 5, 0, 1), Err(Error::SignatureIndex { .. })));
        assert!(matches!(predict_general(&sig, 1, 2, 1), Err(Error::DepthOutOfRange { .. })));
        // m must sit in run k-t or just below it.
        assert!(matches!(predict_general(&sig, 1, 1, 2), Err(Error::Invalid { .. })));
        assert!(predict_general(&sig, 1, 1, 0).is_ok());
    }

    #[test]
    fn fast_eval_matches_engine_on_counterexample_shape() {
        // Demands drop sharply between runs; the recursion must still agree.
        let sig = Signature::from_parts(&[(0, 1, 1), (5, 2, 2)]).unwrap();
        let spec = UseSpec::PlusSignature(sig);
        let engine = run_le(spec.clone(), 0, 2).final_state.gamma;
        assert_eq!(engine, least_effort_final(&spec, 0, 2).unwrap());
        assert_eq!(engine, &Dyadic::one() + &Dyadic::inv_pow2(6));
    }

    #[test]
    fn frozen_false_bound_counterexample() {
        let sig = Signature::from_parts(&[(0, 1, 1), (5, 2, 2)]).unwrap();
        let case = false_bound_case(&sig, 0, 2).unwrap().expect("counterexample");
        assert_eq!(case.gamma, &Dyadic::one() + &Dyadic::inv_pow2(6));
        assert_eq!(case.claimed, &Dyadic::one() + &Dyadic::inv_pow2(5));
        assert!(case.gamma < case.claimed);
    }

    #[test]
    fn constant_runs_meet_the_bound_exactly() {
        for c in 0..5u64 {
            for n in 1..5u64 {
                let sig = Signature::from_parts(&[(c, 1, n)]).unwrap();
                assert_eq!(false_bound_case(&sig, 0, n).unwrap(), None);
                let gamma =
                    least_effort_final(&UseSpec::PlusSignature(sig.clone()), 0, n).unwrap();
                assert_eq!(gamma, claimed_weight_bound(&sig, 0, n));
                assert_eq!(gamma, predict_atomic(n, 0, c));
            }
        }
    }

    #[test]
    fn false_bound_search_finds_and_respects_budget() {
        assert_eq!(false_bound_search(7, 0), None);
        let case = false_bound_search(7, 64).expect("gap >= 2 produces cases");
        assert!(case.gamma < case.claimed);
        // Determinism of the seeded sweep.
        assert_eq!(false_bound_search(7, 64), Some(case));
    }

    #[test]
    fn dominance_examples() {
        let config = HloadConfig::new(UseSpec::Offset { c: 2 }, 1, 4).unwrap();
        // Always one extra quantum: dominated but never below least effort.
        let report = compare_strategies(&config, &mut ExtraResponder { units: 1 }).unwrap();
        assert!(report.holds);
        assert!(report.final_alt > report.final_least);
        // Least effort against itself: equal finals.
        let report = compare_strategies(&config, &mut LeastEffort).unwrap();
        assert!(report.holds);
        assert_eq!(report.final_alt, report.final_least);
        assert_eq!(report.final_least, hload(&config, &mut LeastEffort).unwrap().final_state.gamma);
    }

    #[test]
    fn dominance_random_over_responders() {
        let config = HloadConfig::new(UseSpec::Offset { c: 2 }, 1, 4).unwrap();
        for seed in 0..100 {
            let mut alt = RandomOverResponder::seeded(seed, 3);
            assert!(compare_strategies(&config, &mut alt).unwrap().holds);
        }
    }

    #[test]
    fn failing_responder_is_rejected() {
        struct Mute;
        impl Responder for Mute {
            fn respond(&mut self, _: &Dyadic, _: u64) -> Dyadic {
                Dyadic::zero()
            }
        }
        let config = HloadConfig::new(UseSpec::Offset { c: 1 }, 0, 2).unwrap();
        assert_eq!(hload(&config, &mut Mute), Err(Error::DemandUnsatisfied { step: 1 }));

        // Too deep a change also fails: digit demand+1 does not move the
        // demanded prefix when no carry reaches it.
        struct TooDeep;
        impl Responder for TooDeep {
            fn respond(&mut self, gamma: &Dyadic, demand: u64) -> Dyadic {
                if gamma.digit(demand + 1) == 0 {
                    Dyadic::inv_pow2(demand + 1)
                } else {
                    gamma.least_increment(demand)
                }
            }
        }
        assert!(matches!(
            hload(&config, &mut TooDeep),
            Err(Error::DemandUnsatisfied { .. })
        ));
    }

    #[test]
    fn accumulation_examples() {
        // Zero offset: twin runs coincide.
        let config = HloadConfig::new(UseSpec::Offset { c: 1 }, 1, 3).unwrap();
        let report = accumulation_check(&config, &Dyadic::zero()).unwrap();
        assert!(report.holds);
        assert_eq!(report.final_base, report.final_shifted);

        // Offset 1/2 on (3, 5] with h = x + 1: demands 5, 6 never reach it.
        let config = HloadConfig::new(UseSpec::Offset { c: 1 }, 3, 5).unwrap();
        let report = accumulation_check(&config, &Dyadic::inv_pow2(1)).unwrap();
        assert!(report.holds);
        assert_eq!(
            report.final_shifted,
            &report.final_base + &Dyadic::inv_pow2(1)
        );
        assert_eq!(report.final_base, predict_atomic(2, 3, 1));

        // Offset 2^(-6) against demands at 4 and 5: the offset is too
        // fine-grained for the run to leave it untouched. The walk meets
        // demand 5 first.
        let config = HloadConfig::new(UseSpec::Offset { c: 0 }, 3, 5).unwrap();
        assert_eq!(
            accumulation_check(&config, &Dyadic::inv_pow2(6)),
            Err(Error::OffsetTooCoarse { offset_len: 6, demand: 5 })
        );
    }

    #[test]
    fn trace_determinism_and_digest() {
        let sig = Signature::from_parts(&[(1, 1, 2), (3, 3, 4)]).unwrap();
        let config = HloadConfig::new(UseSpec::PlusSignature(sig), 0, 4).unwrap();
        let a = hload(&config, &mut LeastEffort).unwrap();
        let b = hload(&config, &mut LeastEffort).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.digest, b.digest);

        // Capped recording keeps the digest and totals, drops the tail.
        let capped = hload(&config.clone().with_record_limit(3), &mut LeastEffort).unwrap();
        assert_eq!(capped.steps.len(), 3);
        assert_eq!(capped.total_steps, a.total_steps);
        assert_eq!(capped.digest, a.digest);
        assert_eq!(capped.final_state, a.final_state);

        // CSV has a header plus one row per recorded step.
        assert_eq!(a.to_csv().lines().count(), a.steps.len() + 1);
        assert!(a.to_csv().starts_with("step,mover,added,k,demand,"));
    }

    #[test]
    fn move_order_flips_movers_not_gamma() {
        let config = HloadConfig::new(UseSpec::Offset { c: 1 }, 0, 3).unwrap();
        let swapped = hload(
            &config.clone().with_order(MoveOrder::BetaFirst),
            &mut LeastEffort,
        )
        .unwrap();
        let plain = hload(&config, &mut LeastEffort).unwrap();
        assert_eq!(swapped.steps[0].mover, Player::Beta);
        assert_eq!(plain.steps[0].mover, Player::Alpha);
        assert_eq!(swapped.final_state.gamma, plain.final_state.gamma);
    }

    #[test]
    fn step_cap_enforced() {
        let config = HloadConfig::new(UseSpec::Offset { c: 0 }, 0, 5)
            .unwrap()
            .with_step_cap(10);
        assert_eq!(
            hload(&config, &mut LeastEffort),
            Err(Error::StepCapExceeded { steps: "62".into(), cap: 10 })
        );
    }

    #[test]
    fn interval_validation() {
        assert!(matches!(
            HloadConfig::new(UseSpec::Offset { c: 0 }, 3, 3),
            Err(Error::EmptyInterval { .. })
        ));
        let short = UseTable::new(vec![1, 2]).unwrap();
        assert!(matches!(
            HloadConfig::new(UseSpec::PlusTable(short), 0, 4),
            Err(Error::PositionUncovered { .. })
        ));
        let below = UseTable::new(vec![0, 0, 1]).unwrap();
        assert!(matches!(
            HloadConfig::new(UseSpec::Raw(below), 0, 3),
            Err(Error::Invalid { what: "demand map", .. })
        ));
    }

    #[test]
    fn fold_matches_engine() {
        let config = HloadConfig::new(UseSpec::Offset { c: 2 }, 1, 4).unwrap();
        let trace = hload(&config, &mut LeastEffort).unwrap();
        let demands = trace.steps.iter().map(|s| s.demand);
        assert_eq!(least_effort_fold(demands, Dyadic::zero()), trace.final_state.gamma);
    }

    fn arb_signature() -> impl Strategy<Value = Signature> {
        // Up to 3 runs, strictly increasing constants, sizes 1..=3.
        (
            proptest::collection::vec((1u64..=3, 1u64..=4), 1..=3),
            0u64..=2,
        )
            .prop_map(|(runs, c0)| {
                let mut parts = Vec::new();
                let mut c = c0;
                let mut lo = 1u64;
                for (size, gap) in runs {
                    parts.push((c, lo, lo + size - 1));
                    lo += size;
                    c += gap;
                }
                Signature::from_parts(&parts).unwrap()
            })
    }

    proptest! {
        #[test]
        fn fast_eval_equals_engine(sig in arb_signature(), lo_pick in 0u64..8) {
            let n = u64::try_from(sig.max_position().unwrap()).unwrap();
            let lo = lo_pick % n;            // any 0 <= lo < n
            let spec = UseSpec::PlusSignature(sig);
            let engine = hload(
                &HloadConfig::new(spec.clone(), lo, n).unwrap().with_record_limit(0),
                &mut LeastEffort,
            ).unwrap();
            prop_assert_eq!(engine.final_state.gamma, least_effort_final(&spec, lo, n).unwrap());
        }

        #[test]
        fn engine_meets_general_prediction(sig in arb_signature(), t_pick in 0usize..4, m_pick in 0u64..8) {
            let k = sig.len() - 1;
            let t = t_pick % (k + 1);
            let run = sig.entry(k - t).unwrap();
            let (rlo, rhi) = (u64::try_from(&run.lo).unwrap(), u64::try_from(&run.hi).unwrap());
            let m = rlo - 1 + m_pick % (rhi - rlo + 2);   // in [min-1, max]
            let n = u64::try_from(sig.max_position().unwrap()).unwrap();
            prop_assume!(m < n);
            let spec = UseSpec::PlusSignature(sig.clone());
            let gamma = least_effort_final(&spec, m, n).unwrap();
            let pred = predict_general(&sig, k, t, m).unwrap();
            let constants: Vec<u64> = sig.entries().iter().map(|e| e.constant).collect();
            prop_assert_eq!(
                truncate(&gamma.shl(m), pred.truncation_index, &constants),
                pred.constraint
            );
            if let Some(floor) = pred.floor {
                prop_assert!(gamma >= floor);
            }
        }

        #[test]
        fn dominance_over_random_strategies(sig in arb_signature(), seed in 0u64..1000) {
            let n = u64::try_from(sig.max_position().unwrap()).unwrap();
            let config = HloadConfig::new(UseSpec::PlusSignature(sig), 0, n).unwrap();
            let mut alt = RandomOverResponder::seeded(seed, 2);
            let report = compare_strategies(&config, &mut alt).unwrap();
            prop_assert!(report.holds, "violation at {:?}", report.first_violation);
        }

        #[test]
        fn accumulation_with_coarse_offsets(c in 2u64..5, units in 0u64..8) {
            // Demands on (2, 4] with h = x + c start at 3 + c > 2, so any
            // offset with scale <= 2 is preserved.
            let offset = Dyadic::new(BigUint::from(units), 2);
            let config = HloadConfig::new(UseSpec::Offset { c }, 2, 4).unwrap();
            let report = accumulation_check(&config, &offset).unwrap();
            prop_assert!(report.holds);
            prop_assert_eq!(report.final_shifted, &report.final_base + &offset);
        }
    }
}
