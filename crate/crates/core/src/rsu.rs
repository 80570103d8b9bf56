//! Roadside unit state: dispute cases, the trust-weighted feedback tally,
//! ruling composition (rewards and escalating punishments), event
//! lifecycles, and the per-RSU offence ledger.

use crate::geom::Vec2;
use crate::ids::{EntityId, EventId, MessageId};
use crate::message::{EventClaim, RewardTarget, RulingKind, RulingNotice, VanetMessage, Vote};
use crate::time::SimTime;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TallyOutcome {
    EventTrue,
    EventFalse,
    /// Zero or tied score: escalate to an official.
    Unresolved,
}

/// Trust-weighted vote over clarifier feedback. Each entry pairs a vote sign
/// (+1 supports the event, -1 denies it, 0 abstains) with the voter's trust
/// in thousandths. The verdict follows the sign of the weighted sum; an
/// exactly zero sum -- including the empty vote -- stays unresolved.
pub fn weighted_decision(votes: &[(i8, i32)]) -> (TallyOutcome, i64) {
    let score: i64 = votes
        .iter()
        .map(|&(sign, trust_milli)| i64::from(sign) * i64::from(trust_milli))
        .sum();
    let outcome = if score > 0 {
        TallyOutcome::EventTrue
    } else if score < 0 {
        TallyOutcome::EventFalse
    } else {
        TallyOutcome::Unresolved
    };
    (outcome, score)
}

#[derive(Clone, Debug)]
pub struct FeedbackEntry {
    pub clarifier: EntityId,
    pub vote: Vote,
    /// Clarifier trust at the time the feedback was received, thousandths.
    pub trust_milli: i32,
    pub official: bool,
}

/// Collected clarifier feedback for one dispute. Votes are summed in
/// integer thousandths so exact ties are detected exactly.
#[derive(Clone, Debug, Default)]
pub struct FeedbackVector {
    entries: Vec<FeedbackEntry>,
}

impl FeedbackVector {
    /// Records feedback; repeated feedback from the same clarifier is
    /// ignored. Returns whether the entry was accepted.
    pub fn push(&mut self, entry: FeedbackEntry) -> bool {
        if self.entries.iter().any(|e| e.clarifier == entry.clarifier) {
            return false;
        }
        self.entries.push(entry);
        true
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[FeedbackEntry] {
        &self.entries
    }

    pub fn clarifiers(&self) -> Vec<EntityId> {
        self.entries.iter().map(|e| e.clarifier).collect()
    }

    /// Signed trust-weighted sum: YES adds the clarifier's trust, NO
    /// subtracts it.
    pub fn score_milli(&self) -> i64 {
        self.entries
            .iter()
            .map(|e| e.vote.sign() * e.trust_milli as i64)
            .sum()
    }

    pub fn tally(&self) -> (TallyOutcome, i64) {
        let votes: Vec<(i8, i32)> = self
            .entries
            .iter()
            .map(|e| (e.vote.sign() as i8, e.trust_milli))
            .collect();
        weighted_decision(&votes)
    }

    /// First official vote, if any; officials settle the dispute alone.
    pub fn official_vote(&self) -> Option<Vote> {
        self.entries.iter().find(|e| e.official).map(|e| e.vote)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseState {
    Collecting,
    Decided,
    /// Tallied without a verdict and referred onward.
    Referred,
}

/// One open question of the form "was this announced event real?".
#[derive(Clone, Debug)]
pub struct DisputeCase {
    pub event_id: EventId,
    pub claim: EventClaim,
    pub original_message: MessageId,
    /// `(vehicle, driver)` of everyone who filed a report on this event.
    pub reporters: Vec<(EntityId, String)>,
    pub feedback: FeedbackVector,
    pub opened_at: SimTime,
    pub deadline: SimTime,
    pub state: CaseState,
}

impl DisputeCase {
    pub fn add_reporter(&mut self, vehicle: EntityId, driver: &str) -> bool {
        if self.reporters.iter().any(|(v, _)| *v == vehicle) {
            return false;
        }
        self.reporters.push((vehicle, driver.to_string()));
        true
    }
}

/// Everything an RSU must send and record once a dispute settles.
#[derive(Clone, Debug)]
pub struct Ruling {
    pub event_id: EventId,
    pub kind: RulingKind,
    pub rewarded: Vec<RewardTarget>,
    pub punished: Vec<RewardTarget>,
    pub notice: RulingNotice,
}

/// Escalating punishment: the driver's prior offence count indexes the
/// ladder; repeat offenders beyond the last rung keep its amount.
pub fn punishment_milli(prior_offences: u32, ladder_milli: &[i32]) -> i32 {
    let idx = (prior_offences as usize).min(ladder_milli.len() - 1);
    ladder_milli[idx]
}

/// Composes the ruling for a settled dispute.
///
/// Event ruled true: the sender earns the RSU reward, each reporter is
/// punished on the escalating ladder. Ruled false: the reporters earn the
/// reward and the sender is punished. Officials (full-trust actors without
/// consumer TPDs) never appear as reward or punishment targets.
pub fn resolve_case(
    case: &DisputeCase,
    outcome: TallyOutcome,
    via_official: bool,
    rsu_reward_milli: i32,
    ladder_milli: &[i32],
    offence_counts: &BTreeMap<String, u32>,
    is_official: impl Fn(EntityId) -> bool,
) -> Option<Ruling> {
    let kind = match outcome {
        TallyOutcome::EventTrue => RulingKind::EventTrue,
        TallyOutcome::EventFalse => RulingKind::EventFalse,
        TallyOutcome::Unresolved => return None,
    };
    let sender = (case.claim.sender_vehicle, case.claim.sender_driver.clone());
    let (winners, losers): (Vec<_>, Vec<_>) = match kind {
        RulingKind::EventTrue => (vec![sender], case.reporters.clone()),
        RulingKind::EventFalse => (case.reporters.clone(), vec![sender]),
    };
    let rewarded: Vec<RewardTarget> = winners
        .iter()
        .filter(|(v, _)| !is_official(*v))
        .map(|(v, d)| RewardTarget {
            vehicle: *v,
            driver: d.clone(),
            amount_milli: rsu_reward_milli,
        })
        .collect();
    let punished: Vec<RewardTarget> = losers
        .iter()
        .filter(|(v, _)| !is_official(*v))
        .map(|(v, d)| {
            let prior = offence_counts.get(d).copied().unwrap_or(0);
            RewardTarget {
                vehicle: *v,
                driver: d.clone(),
                amount_milli: -punishment_milli(prior, ladder_milli),
            }
        })
        .collect();
    let notice = RulingNotice {
        event_id: case.event_id,
        location: case.claim.location,
        ruling: kind,
        losers: punished
            .iter()
            .map(|t| (t.driver.clone(), t.vehicle))
            .collect(),
        via_official,
    };
    Some(Ruling {
        event_id: case.event_id,
        kind,
        rewarded,
        punished,
        notice,
    })
}

/// Lifecycle of an announced event at the RSU that owns it.
#[derive(Clone, Debug)]
pub struct EventLifecycle {
    pub claim: EventClaim,
    pub original: VanetMessage,
    /// Set once the claim was re-broadcast to the RSU's own coverage area.
    pub rebroadcast: bool,
    pub sorted: bool,
    pub attending_official: Option<EntityId>,
}

pub struct Rsu {
    pub id: EntityId,
    pub name: String,
    pub pos: Vec2,
    /// Wired peers for inter-RSU notices.
    pub neighbors: Vec<EntityId>,
    /// Location-based services offered to passing vehicles.
    pub services: BTreeMap<String, Option<Vec2>>,
    pub seen: BTreeSet<MessageId>,
    /// Events this RSU knows about (its own and peer-shared).
    pub lifecycles: BTreeMap<EventId, EventLifecycle>,
    /// Disputes this RSU owns.
    pub cases: BTreeMap<EventId, DisputeCase>,
    /// Events disputed anywhere (peer notices included): repeated
    /// complaints about them are ignored.
    pub disputed: BTreeSet<EventId>,
    /// Whether the periodic re-announcement loop is currently scheduled.
    pub periodic_armed: bool,
    /// Prior untrue-behaviour offences per driver, shared between RSUs via
    /// decision notices.
    pub offences: BTreeMap<String, u32>,
    /// Baseline mode: reputation table in thousandths.
    pub reputations: BTreeMap<EntityId, i32>,
}

impl Rsu {
    pub fn record_offences(&mut self, notice: &RulingNotice) {
        for (driver, _) in &notice.losers {
            *self.offences.entry(driver.clone()).or_insert(0) += 1;
        }
    }
}
