//! Receiver-side reputation baseline: each receiver buffers the event
//! claims it hears, waits out a decision timer, then aggregates the
//! announcers' reputations to decide whether to act.

use crate::ids::EntityId;
use crate::scenario::BaselineScheme;
use std::collections::BTreeMap;

pub const DEFAULT_REPUTATION_MILLI: i32 = 500;

/// Reputation lookup with the newcomer default.
pub fn reputation_of(table: &BTreeMap<EntityId, i32>, vehicle: EntityId) -> i32 {
    table.get(&vehicle).copied().unwrap_or(DEFAULT_REPUTATION_MILLI)
}

/// Aggregates buffered claims about one event. Claims are
/// `(announcer, asserts_event_exists)` pairs; reputations are in
/// thousandths. Returns `Some(event_exists)` or `None` when the evidence is
/// empty or exactly tied.
pub fn decide(
    claims: &[(EntityId, bool)],
    reputations: &BTreeMap<EntityId, i32>,
    scheme: BaselineScheme,
) -> Option<bool> {
    if claims.is_empty() {
        return None;
    }
    match scheme {
        BaselineScheme::MajorityVote => {
            let yes = claims.iter().filter(|(_, a)| *a).count();
            let no = claims.len() - yes;
            match yes.cmp(&no) {
                std::cmp::Ordering::Greater => Some(true),
                std::cmp::Ordering::Less => Some(false),
                std::cmp::Ordering::Equal => None,
            }
        }
        BaselineScheme::WeightedByReputation => {
            let score: i64 = claims
                .iter()
                .map(|(v, a)| {
                    let sign = if *a { 1i64 } else { -1i64 };
                    sign * reputation_of(reputations, *v) as i64
                })
                .sum();
            match score.cmp(&0) {
                std::cmp::Ordering::Greater => Some(true),
                std::cmp::Ordering::Less => Some(false),
                std::cmp::Ordering::Equal => None,
            }
        }
        BaselineScheme::HighestReputation => {
            let top = claims
                .iter()
                .map(|(v, _)| reputation_of(reputations, *v))
                .max()
                .expect("claims not empty");
            let mut verdicts = claims
                .iter()
                .filter(|(v, _)| reputation_of(reputations, *v) == top)
                .map(|(_, a)| *a);
            let first = verdicts.next().expect("at least one top claim");
            if verdicts.all(|a| a == first) {
                Some(first)
            } else {
                // Equally reputed claimants disagree.
                None
            }
        }
    }
}
