//! The priority construction. Two monotone reals are built against a finite
//! pool of adversaries, one per requirement; each adversary claims to compute
//! both reals from its own real with the demand map `h(x) = x + g(x)`.
//! Acting for a requirement walks its plan block like an h-load game, so an
//! adversary that keeps answering correctly is forced to push its real past 1
//! or give up, and either way the requirement is met.
//!
//! Block bounds, quanta, and action budgets are all in digit positions. Deep
//! blocks can sit beyond machine-word positions; their quanta are
//! materialized lazily and only when the block actually acts.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::dyadic::{Dyadic, Position};
use crate::games::Player;
use crate::hash::Fnv64;
use crate::usefn::{ConstructionPlan, Signature};
use crate::{Error, Result};

/// How an adversary answers the published reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryPolicy {
    /// Commits answers matching the published values and pays the least
    /// increment licensing each correction. With `cap`, it freezes instead
    /// of letting its real exceed 1; without, the real runs unbounded.
    LeastEffort { cap: bool },
    /// Never answers any argument.
    Silent,
}

/// One adversary: a real `gamma`, committed digit answers for both reals on
/// its region, and the positions where commitments currently disagree with
/// the published values.
///
/// Functional consistency: an answer at `t` is only ever recommitted right
/// after a payment changing gamma's prefix of length `h(t)`. The payment is
/// made at the leftmost stale position, and `h` is nondecreasing, so it
/// licenses every staler recommitment at once.
#[derive(Debug, Clone)]
pub struct Adversary {
    policy: AdversaryPolicy,
    /// Answered positions `(region_lo, region_hi]`.
    region_lo: BigUint,
    region_hi: BigUint,
    gamma: Dyadic,
    frozen: bool,
    gamma_exceeded_one: bool,
    /// Committed `(alpha digit, beta digit)` answers; absent means the
    /// initial commitment `(0, 0)`, which every region position starts with.
    commitments: HashMap<u64, (u8, u8)>,
    stale: BTreeSet<u64>,
    /// Demands actually paid, in order.
    demands: Vec<u64>,
}

impl Adversary {
    pub fn new(plan: &ConstructionPlan, e: usize, policy: AdversaryPolicy) -> Result<Self> {
        let first = plan.block(0)?;
        let own = plan.block(e)?;
        Ok(Adversary {
            policy,
            region_lo: first.lo.clone(),
            region_hi: own.hi.clone(),
            gamma: Dyadic::zero(),
            frozen: false,
            gamma_exceeded_one: false,
            commitments: HashMap::new(),
            stale: BTreeSet::new(),
            demands: Vec::new(),
        })
    }

    /// One adversary per requirement, all with the same policy.
    pub fn pool(plan: &ConstructionPlan, policy: AdversaryPolicy) -> Result<Vec<Self>> {
        (0..plan.requirements()).map(|e| Adversary::new(plan, e, policy)).collect()
    }

    pub fn policy(&self) -> AdversaryPolicy {
        self.policy
    }

    pub fn gamma(&self) -> &Dyadic {
        &self.gamma
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn gamma_exceeded_one(&self) -> bool {
        self.gamma_exceeded_one
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    /// Leftmost region position whose committed answer disagrees with the
    /// published values, if any.
    pub fn first_stale(&self) -> Option<u64> {
        self.stale.first().copied()
    }

    /// Total on its region with every answer matching the published reals.
    /// Silent adversaries are never in agreement: undefined answers count
    /// as disagreement.
    pub fn agrees_everywhere(&self) -> bool {
        match self.policy {
            AdversaryPolicy::Silent => false,
            AdversaryPolicy::LeastEffort { .. } => self.stale.is_empty(),
        }
    }

    fn in_region(&self, pos: u64) -> bool {
        let p = BigUint::from(pos);
        self.region_lo < p && p <= self.region_hi
    }

    /// Re-examines the changed digit positions of the published reals.
    fn observe(&mut self, alpha: &Dyadic, beta: &Dyadic, changed: std::ops::RangeInclusive<u64>) {
        if self.policy == AdversaryPolicy::Silent {
            return;
        }
        for pos in changed {
            if !self.in_region(pos) {
                continue;
            }
            let published = (alpha.digit(pos), beta.digit(pos));
            let committed = self.commitments.get(&pos).copied().unwrap_or((0, 0));
            if committed == published {
                self.stale.remove(&pos);
            } else {
                self.stale.insert(pos);
            }
        }
    }

    /// Pays for and recommits all stale answers, or freezes if the payment
    /// would push gamma past 1 under the cap.
    fn settle(&mut self, sig: &Signature, alpha: &Dyadic, beta: &Dyadic) -> Result<()> {
        let cap = match self.policy {
            AdversaryPolicy::Silent => return Ok(()),
            AdversaryPolicy::LeastEffort { cap } => cap,
        };
        if self.frozen || self.stale.is_empty() {
            return Ok(());
        }
        let t = *self.stale.first().expect("nonempty");
        let g = sig
            .g_at(&BigUint::from(t))
            .ok_or_else(|| Error::PositionUncovered { position: t.to_string() })?;
        let demand = t
            .checked_add(g)
            .ok_or_else(|| Error::PositionOverflow { position: t.to_string() })?;
        let inc = self.gamma.least_increment(demand);
        if cap && &self.gamma + &inc > Dyadic::one() {
            self.frozen = true;
            return Ok(());
        }
        self.gamma += &inc;
        self.demands.push(demand);
        if self.gamma > Dyadic::one() {
            self.gamma_exceeded_one = true;
        }
        let stale = std::mem::take(&mut self.stale);
        for pos in stale {
            self.commitments.insert(pos, (alpha.digit(pos), beta.digit(pos)));
        }
        Ok(())
    }
}

/// The active condition: full agreement on the region and an unspent action
/// budget.
pub fn requirement_active(adv: &Adversary, actions_taken: u64, action_budget: u64) -> bool {
    adv.agrees_everywhere() && actions_taken < action_budget
}

/// How a requirement ended up met, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Adversary still agrees everywhere within budget.
    Open,
    /// Some region answer is undefined or wrong at the end of the run.
    MetByDisagreement,
    /// The capped adversary froze rather than push its real past 1, leaving
    /// wrong answers behind.
    MetByCappedGamma,
}

/// Final assessment of one requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementReport {
    pub e: usize,
    pub outcome: Outcome,
    /// A region position witnessing the disagreement, when there is one.
    pub witness: Option<u64>,
    pub actions_taken: u64,
    pub action_budget: u64,
    pub final_gamma: Dyadic,
    pub gamma_exceeded_one: bool,
    pub frozen: bool,
}

/// One construction stage: which requirement acted, on which real, and the
/// published state afterwards. `gamma_e` is the acting adversary's real.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: u64,
    pub e: usize,
    pub mover: Player,
    pub alpha: Dyadic,
    pub beta: Dyadic,
    pub gamma_e: Dyadic,
}

/// A complete run: capped stage records, a digest over all stages, finals,
/// and the per-requirement outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstructionTrace {
    pub requirements: usize,
    pub stage_budget: u64,
    pub budget_exhausted: bool,
    pub stages: Vec<StageRecord>,
    pub total_stages: u64,
    pub digest: u64,
    pub final_alpha: Dyadic,
    pub final_beta: Dyadic,
    pub outcomes: Vec<RequirementReport>,
}

impl ConstructionTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// One row per recorded stage.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,e,mover,gamma_e\n");
        for s in &self.stages {
            out.push_str(&format!("{},{},{},{}\n", s.stage, s.e, s.mover, s.gamma_e));
        }
        out
    }
}

/// A finished run: the trace plus the adversaries in their final state.
#[derive(Debug, Clone)]
pub struct ConstructionRun {
    pub trace: ConstructionTrace,
    pub adversaries: Vec<Adversary>,
    actions: Vec<u64>,
    budgets: Vec<u64>,
    final_alpha: Dyadic,
    final_beta: Dyadic,
}

/// Per-requirement action budget `2 * (2^(hi - lo) - 1)`, saturating: the
/// full all-ones walk of the block, counted over both reals.
pub fn action_budget(plan: &ConstructionPlan, e: usize) -> Result<u64> {
    let block = plan.block(e)?;
    let width = &block.hi - &block.lo;
    match u64::try_from(&width) {
        Ok(w) if w < 63 => Ok(2 * ((1u64 << w) - 1)),
        _ => Ok(u64::MAX),
    }
}

/// Default stage budget `4 * sum of 2^(hi_e - lo_e)`, saturating.
pub fn default_stage_budget(plan: &ConstructionPlan) -> u64 {
    let mut total = 0u64;
    for block in &plan.blocks {
        let width = &block.hi - &block.lo;
        let steps = match u64::try_from(&width) {
            Ok(w) if w < 62 => 4 * (1u64 << w),
            _ => u64::MAX,
        };
        total = total.saturating_add(steps);
    }
    total
}

/// Runs the construction: at each stage the least active requirement adds
/// its block quantum to one real (the first action and each action after a
/// beta-action go to alpha), then every adversary observes and settles.
/// Stops when nothing is active or the stage budget is spent; the latter is
/// reported, not thrown.
pub fn run_construction(
    plan: &ConstructionPlan,
    mut adversaries: Vec<Adversary>,
    stage_budget: u64,
    record_limit: usize,
) -> Result<ConstructionRun> {
    let e_count = plan.requirements();
    if adversaries.len() != e_count {
        return Err(Error::AdversaryCount { got: adversaries.len(), want: e_count });
    }
    let sig = &plan.signature;
    // Quanta are materialized lazily: a block whose right bound exceeds a
    // machine word only errors if it actually has to act.
    let quanta: Vec<Option<(u64, Dyadic)>> = plan
        .blocks
        .iter()
        .map(|b| u64::try_from(&b.hi).ok().map(|hi| (hi, Dyadic::inv_pow2(hi))))
        .collect();
    let budgets: Vec<u64> =
        (0..e_count).map(|e| action_budget(plan, e)).collect::<Result<_>>()?;

    let mut alpha = Dyadic::zero();
    let mut beta = Dyadic::zero();
    let mut actions = vec![0u64; e_count];
    let mut last_mover: Vec<Option<Player>> = vec![None; e_count];
    let mut stages = Vec::new();
    let mut hasher = Fnv64::new();
    let mut stage = 0u64;
    let mut budget_exhausted = false;

    loop {
        let active = (0..e_count).find(|&e| requirement_active(&adversaries[e], actions[e], budgets[e]));
        let Some(e) = active else { break };
        if stage >= stage_budget {
            budget_exhausted = true;
            break;
        }
        stage += 1;
        let mover = match last_mover[e] {
            None | Some(Player::Beta) => Player::Alpha,
            Some(Player::Alpha) => Player::Beta,
        };
        let (hi_pos, quantum) = quanta[e].clone().ok_or_else(|| Error::PositionOverflow {
            position: crate::bigser::to_string(&plan.blocks[e].hi),
        })?;
        let real = match mover {
            Player::Alpha => &mut alpha,
            Player::Beta => &mut beta,
        };
        let old = real.clone();
        *real += &quantum;
        let changed_lo = match Dyadic::leftmost_change(&old, real)? {
            Position::Digit(d) => d,
            Position::IntegerPart => {
                return Err(Error::Invalid {
                    what: "construction stage",
                    detail: format!("stage {stage} carried {mover} past 1"),
                })
            }
        };
        actions[e] += 1;
        last_mover[e] = Some(mover);
        for adv in &mut adversaries {
            adv.observe(&alpha, &beta, changed_lo..=hi_pos);
        }
        for adv in &mut adversaries {
            adv.settle(sig, &alpha, &beta)?;
        }
        hasher.write_u64(stage);
        hasher.write_u64(e as u64);
        hasher.write(&[if mover == Player::Alpha { 0 } else { 1 }]);
        hasher.write_dyadic(&alpha);
        hasher.write_dyadic(&beta);
        hasher.write_dyadic(&adversaries[e].gamma);
        if stages.len() < record_limit {
            stages.push(StageRecord {
                stage,
                e,
                mover,
                alpha: alpha.clone(),
                beta: beta.clone(),
                gamma_e: adversaries[e].gamma.clone(),
            });
        }
    }

    let mut run = ConstructionRun {
        trace: ConstructionTrace {
            requirements: e_count,
            stage_budget,
            budget_exhausted,
            stages,
            total_stages: stage,
            digest: hasher.finish(),
            final_alpha: alpha.clone(),
            final_beta: beta.clone(),
            outcomes: Vec::new(),
        },
        adversaries,
        actions,
        budgets,
        final_alpha: alpha,
        final_beta: beta,
    };
    run.trace.outcomes = (0..e_count).map(|e| verify_requirement(&run, e)).collect::<Result<_>>()?;
    Ok(run)
}

/// Assesses one requirement against the run's final state: a silent or
/// frozen adversary leaves wrong answers behind (met), full agreement
/// leaves it open.
pub fn verify_requirement(run: &ConstructionRun, e: usize) -> Result<RequirementReport> {
    let adv = run
        .adversaries
        .get(e)
        .ok_or(Error::BlockOutOfRange { block: e, blocks: run.adversaries.len() })?;
    let (outcome, witness) = match adv.policy {
        AdversaryPolicy::Silent => {
            // Everything is undefined; the first region position witnesses.
            let first = &adv.region_lo + BigUint::one();
            (Outcome::MetByDisagreement, u64::try_from(&first).ok())
        }
        AdversaryPolicy::LeastEffort { .. } => match adv.first_stale() {
            Some(t) if adv.frozen => (Outcome::MetByCappedGamma, Some(t)),
            Some(t) => (Outcome::MetByDisagreement, Some(t)),
            None => (Outcome::Open, None),
        },
    };
    Ok(RequirementReport {
        e,
        outcome,
        witness,
        actions_taken: run.actions[e],
        action_budget: run.budgets[e],
        final_gamma: adv.gamma.clone(),
        gamma_exceeded_one: adv.gamma_exceeded_one,
        frozen: adv.frozen,
    })
}

impl ConstructionRun {
    pub fn final_alpha(&self) -> &Dyadic {
        &self.final_alpha
    }

    pub fn final_beta(&self) -> &Dyadic {
        &self.final_beta
    }

    pub fn actions_taken(&self, e: usize) -> Option<u64> {
        self.actions.get(e).copied()
    }
}
