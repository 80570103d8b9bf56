//! Run-level metrics (dispute classification, channel overhead, decision
//! latency) and the post-run invariant audit.

use crate::logs::{DisputeVerdict, MsgRecord, RunLogs};
use crate::message::{MessageClass, MessageKind, permitted};
use crate::scenario::ProtocolMode;
use crate::time::SimTime;
use crate::trust::TrustScore;
use crate::world::{CaseReport, RunOutput};
use std::collections::{BTreeMap, BTreeSet};

/// Dispute outcomes against ground truth. The naming follows the framework's
/// convention where the positive class is the *untrue* event: a real event
/// ruled real is a true negative, a fabricated event ruled false is a true
/// positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassificationMatrix {
    /// Real events ruled real (true negatives).
    pub true_ruled_true: usize,
    /// Real events ruled untrue (false positives).
    pub true_ruled_false: usize,
    /// Fabricated events ruled real (false negatives).
    pub false_ruled_true: usize,
    /// Fabricated events ruled untrue (true positives).
    pub false_ruled_false: usize,
    /// Tied or unanswered disputes that no official settled.
    pub unresolved: usize,
}

impl ClassificationMatrix {
    pub fn total(&self) -> usize {
        self.true_ruled_true
            + self.true_ruled_false
            + self.false_ruled_true
            + self.false_ruled_false
            + self.unresolved
    }

    fn rate(&self, count: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    }

    /// Normalized likelihood of a true negative (real event ruled real).
    pub fn tn_rate(&self) -> f64 {
        self.rate(self.true_ruled_true)
    }

    pub fn fp_rate(&self) -> f64 {
        self.rate(self.true_ruled_false)
    }

    pub fn fn_rate(&self) -> f64 {
        self.rate(self.false_ruled_true)
    }

    pub fn tp_rate(&self) -> f64 {
        self.rate(self.false_ruled_false)
    }

    pub fn unresolved_rate(&self) -> f64 {
        self.rate(self.unresolved)
    }

    pub fn add(&mut self, other: &ClassificationMatrix) {
        self.true_ruled_true += other.true_ruled_true;
        self.true_ruled_false += other.true_ruled_false;
        self.false_ruled_true += other.false_ruled_true;
        self.false_ruled_false += other.false_ruled_false;
        self.unresolved += other.unresolved;
    }
}

/// Buckets every dispute opened after the warmup cut by ground truth and
/// verdict.
pub fn classify_cases(cases: &[CaseReport], warmup: SimTime) -> ClassificationMatrix {
    let mut m = ClassificationMatrix::default();
    for case in cases {
        if case.announced_at < warmup {
            continue;
        }
        match (case.truthful, case.verdict) {
            (true, Some(DisputeVerdict::DecidedTrue)) => m.true_ruled_true += 1,
            (true, Some(DisputeVerdict::DecidedFalse)) => m.true_ruled_false += 1,
            (false, Some(DisputeVerdict::DecidedTrue)) => m.false_ruled_true += 1,
            (false, Some(DisputeVerdict::DecidedFalse)) => m.false_ruled_false += 1,
            (_, Some(DisputeVerdict::Unresolved)) | (_, None) => m.unresolved += 1,
        }
    }
    m
}

pub fn classify(out: &RunOutput) -> ClassificationMatrix {
    classify_cases(&out.cases, out.warmup)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overhead {
    pub transmissions: u64,
    pub bytes: u64,
}

/// Totals every logged transmission, radio and wired alike. Beacons are
/// excluded unless requested: both protocols beacon identically.
pub fn overhead_of(logs: &RunLogs, count_beacons: bool) -> Overhead {
    let mut o = Overhead::default();
    for m in &logs.messages {
        if m.kind == MessageKind::Beacon && !count_beacons {
            continue;
        }
        o.transmissions += 1;
        o.bytes += u64::from(m.bytes);
    }
    o
}

pub fn overhead(out: &RunOutput) -> Overhead {
    overhead_of(&out.logs, out.count_beacons)
}

/// Per-receiver decision delays for scenario events, in seconds.
pub fn decision_latencies_s(out: &RunOutput) -> Vec<f64> {
    out.logs
        .decisions
        .iter()
        .filter(|d| d.at >= out.warmup)
        .map(|d| d.latency.as_secs_f64())
        .collect()
}

pub fn mean_decision_latency_s(out: &RunOutput) -> Option<f64> {
    let l = decision_latencies_s(out);
    if l.is_empty() {
        None
    } else {
        Some(l.iter().sum::<f64>() / l.len() as f64)
    }
}

/// Checks the run against the protocol's hard invariants and returns one
/// line per violation. An empty result is a clean run.
pub fn audit(out: &RunOutput) -> Vec<String> {
    let mut violations = Vec::new();
    audit_trust_domain(out, &mut violations);
    audit_announcement_gating(out, &mut violations);
    audit_blocked_silence(out, &mut violations);
    audit_single_ruling(out, &mut violations);
    audit_conservation(out, &mut violations);
    audit_role_exclusivity(out, &mut violations);
    audit_punishment_ladder(out, &mut violations);
    audit_hop_limit(out, &mut violations);
    violations
}

fn audit_trust_domain(out: &RunOutput, violations: &mut Vec<String>) {
    let lo = out.trust_floor.milli();
    let hi = out.trust_cap.milli();
    for row in &out.logs.trust {
        let m = row.trust.milli();
        if m < lo || m > hi {
            violations.push(format!(
                "trust domain: driver {} at {} has trust {} outside [{}, {}]",
                row.driver, row.at, row.trust, out.trust_floor, out.trust_cap
            ));
        }
    }
    for row in &out.final_trust {
        let m = row.trust.milli();
        if m < lo || m > hi {
            violations.push(format!(
                "trust domain: driver {} finished with trust {} outside [{}, {}]",
                row.driver, row.trust, out.trust_floor, out.trust_cap
            ));
        }
    }
}

/// Reconstructs each announcer's trust at send time from the trust trace and
/// re-checks the admission rule. The announcement's own immediate penalty is
/// logged at the same instant and must not count.
fn audit_announcement_gating(out: &RunOutput, violations: &mut Vec<String>) {
    if out.mode != ProtocolMode::Proposed {
        return;
    }
    let officials: BTreeSet<_> = out.officials.iter().collect();
    for a in &out.announcements {
        if officials.contains(&a.vehicle) {
            continue;
        }
        let own_penalty = format!("reward_released:{}", a.message_id);
        let mut trust: Option<TrustScore> = None;
        for row in &out.logs.trust {
            if row.at > a.at {
                break;
            }
            if row.driver != a.driver {
                continue;
            }
            if row.at == a.at && row.cause == own_penalty {
                continue;
            }
            trust = Some(row.trust);
        }
        let Some(trust) = trust else {
            violations.push(format!(
                "gating: announcement {} by {} precedes any trust record",
                a.message_id, a.driver
            ));
            continue;
        };
        let class = a.event_type.class();
        if !permitted(class, trust, false) {
            violations.push(format!(
                "gating: {} sent a {:?}-class announcement at {} with trust {}",
                a.driver, class, a.at, trust
            ));
        }
    }
}

/// After a driver's device is blocked, the vehicle may emit beacons only.
/// The acknowledgement is transmitted at the same instant the block lands,
/// hence the strict inequality.
fn audit_blocked_silence(out: &RunOutput, violations: &mut Vec<String>) {
    let vehicle_of: BTreeMap<&str, u32> = out
        .final_trust
        .iter()
        .map(|r| (r.driver.as_str(), r.vehicle.0))
        .collect();
    for row in &out.logs.trust {
        if row.cause != "blocked" {
            continue;
        }
        let Some(&vehicle) = vehicle_of.get(row.driver.as_str()) else {
            continue;
        };
        for m in &out.logs.messages {
            if m.sender.0 == vehicle && m.at > row.at && m.kind != MessageKind::Beacon {
                violations.push(format!(
                    "blocked silence: vehicle #{vehicle} (driver {}) sent {} at {} after being blocked at {}",
                    row.driver,
                    m.kind.label(),
                    m.at,
                    row.at
                ));
            }
        }
    }
}

fn audit_single_ruling(out: &RunOutput, violations: &mut Vec<String>) {
    let mut decided: BTreeMap<u32, usize> = BTreeMap::new();
    for d in &out.logs.disputes {
        if d.verdict != DisputeVerdict::Unresolved {
            *decided.entry(d.event_id.0).or_insert(0) += 1;
        }
    }
    for (event, count) in decided {
        if count > 1 {
            violations.push(format!(
                "single ruling: event evt{event} was decided {count} times"
            ));
        }
    }
}

/// Every radio message id must trace back to exactly one origin broadcast,
/// unless it entered the air from the wired backbone; and no entity
/// transmits the same id twice.
fn audit_conservation(out: &RunOutput, violations: &mut Vec<String>) {
    let mut wired: BTreeSet<&crate::ids::MessageId> = BTreeSet::new();
    for m in &out.logs.messages {
        if m.receiver.is_some() {
            wired.insert(&m.id);
        }
    }
    let mut origin_rows: BTreeMap<&crate::ids::MessageId, usize> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(&crate::ids::MessageId, u32)> = BTreeSet::new();
    for m in &out.logs.messages {
        if m.receiver.is_some() {
            continue;
        }
        if !seen_pairs.insert((&m.id, m.sender.0)) {
            violations.push(format!(
                "conservation: {} transmitted {} twice over the air",
                m.sender, m.id
            ));
        }
        let e = origin_rows.entry(&m.id).or_insert(0);
        if m.hop == 0 && m.sender == m.id.origin {
            *e += 1;
        }
    }
    for (id, origin_count) in origin_rows {
        if wired.contains(id) {
            continue;
        }
        if origin_count != 1 {
            violations.push(format!(
                "conservation: {id} has {origin_count} origin broadcasts"
            ));
        }
    }
}

fn audit_role_exclusivity(out: &RunOutput, violations: &mut Vec<String>) {
    for case in &out.cases {
        let reporters: BTreeSet<_> = case.reporters.iter().collect();
        let clarifiers: BTreeSet<_> = case.clarifiers.iter().collect();
        for both in reporters.intersection(&clarifiers) {
            violations.push(format!(
                "roles: {both} was both reporter and clarifier on {}",
                case.event_id
            ));
        }
        if reporters.contains(&case.sender_vehicle) || clarifiers.contains(&case.sender_vehicle) {
            violations.push(format!(
                "roles: sender {} participated in its own dispute on {}",
                case.sender_vehicle, case.event_id
            ));
        }
    }
}

/// A driver's successive punishments must climb the configured ladder.
fn audit_punishment_ladder(out: &RunOutput, violations: &mut Vec<String>) {
    let mut per_driver: BTreeMap<&str, Vec<(SimTime, i32)>> = BTreeMap::new();
    for case in &out.cases {
        let Some(at) = case.decided_at else { continue };
        for (driver, amount) in &case.punished {
            per_driver.entry(driver).or_default().push((at, *amount));
        }
    }
    let ladder = &out.ladder_milli;
    for (driver, mut hits) in per_driver {
        hits.sort();
        for (i, (at, amount)) in hits.iter().enumerate() {
            let expected = -ladder[i.min(ladder.len() - 1)];
            if *amount != expected {
                violations.push(format!(
                    "ladder: offence {} of {driver} at {at} was {amount} milli, expected {expected}",
                    i + 1
                ));
            }
        }
    }
}

fn audit_hop_limit(out: &RunOutput, violations: &mut Vec<String>) {
    for m in &out.logs.messages {
        if m.hop > out.hop_limit {
            violations.push(format!(
                "hop limit: {} transmitted {} at hop {} (limit {})",
                m.sender, m.id, m.hop, out.hop_limit
            ));
        }
    }
}

/// Formats a transmission row the way the overhead check reads it; exposed
/// for diagnostics.
pub fn describe(m: &MsgRecord) -> String {
    format!(
        "{} {} {} hop {} ({} bytes)",
        m.at,
        m.sender,
        m.kind.label(),
        m.hop,
        m.bytes
    )
}

/// Convenience wrapper used by tests: whether an announcement of `class`
/// would pass the admission gate at `trust_milli`.
pub fn admission_allows(class: MessageClass, trust_milli: i32) -> bool {
    permitted(class, TrustScore::from_milli(trust_milli), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EntityId, EventId, MessageId};
    use crate::logs::{DisputeMethod, MsgRecord};

    fn case(truthful: bool, verdict: Option<DisputeVerdict>, announced_s: u64) -> CaseReport {
        CaseReport {
            event_id: EventId(0),
            truthful,
            announced_at: SimTime::from_secs(announced_s),
            opened_at: SimTime::from_secs(announced_s + 1),
            decided_at: verdict.map(|_| SimTime::from_secs(announced_s + 121)),
            method: verdict.map(|_| DisputeMethod::Vote),
            verdict,
            score_milli: 0,
            sender_vehicle: EntityId(0),
            sender_driver: "s".into(),
            reporters: vec![],
            clarifiers: vec![],
            rewarded_drivers: vec![],
            punished: vec![],
            referred: false,
        }
    }

    #[test]
    fn classification_buckets_and_normalizes() {
        let cases = vec![
            case(true, Some(DisputeVerdict::DecidedTrue), 100),
            case(true, Some(DisputeVerdict::DecidedTrue), 200),
            case(true, Some(DisputeVerdict::DecidedFalse), 300),
            case(false, Some(DisputeVerdict::DecidedFalse), 400),
            case(false, Some(DisputeVerdict::Unresolved), 500),
        ];
        let m = classify_cases(&cases, SimTime::ZERO);
        assert_eq!(m.total(), 5);
        assert_eq!(m.true_ruled_true, 2);
        assert_eq!(m.true_ruled_false, 1);
        assert_eq!(m.false_ruled_false, 1);
        assert_eq!(m.unresolved, 1);
        assert!((m.tn_rate() - 0.4).abs() < 1e-12);
        assert!((m.fp_rate() - 0.2).abs() < 1e-12);
        assert_eq!(m.fn_rate(), 0.0);
    }

    #[test]
    fn warmup_filters_early_cases() {
        let cases = vec![
            case(true, Some(DisputeVerdict::DecidedTrue), 10),
            case(true, Some(DisputeVerdict::DecidedTrue), 900),
        ];
        let m = classify_cases(&cases, SimTime::from_secs(700));
        assert_eq!(m.total(), 1);
    }

    #[test]
    fn empty_matrix_rates_are_zero() {
        let m = classify_cases(&[], SimTime::ZERO);
        assert_eq!(m.total(), 0);
        assert_eq!(m.tn_rate(), 0.0);
    }

    #[test]
    fn overhead_skips_beacons_by_default() {
        let mut logs = RunLogs::default();
        let id = MessageId { origin: EntityId(0), seq: 0 };
        for kind in [MessageKind::Beacon, MessageKind::EventAnnouncement] {
            logs.messages.push(MsgRecord {
                at: SimTime::ZERO,
                sender: EntityId(0),
                receiver: None,
                kind,
                id,
                hop: 0,
                bytes: 50,
            });
        }
        assert_eq!(overhead_of(&logs, false).transmissions, 1);
        assert_eq!(overhead_of(&logs, true).transmissions, 2);
        assert_eq!(overhead_of(&logs, true).bytes, 100);
    }

    #[test]
    fn admission_thresholds() {
        assert!(admission_allows(MessageClass::Mid, 251));
        assert!(!admission_allows(MessageClass::Mid, 250));
        assert!(admission_allows(MessageClass::High, 500));
        assert!(!admission_allows(MessageClass::High, 499));
    }
}
