//! Message taxonomy and the sender-side admission rules.
//!
//! Content classes gate who may transmit: beacons always pass, wave-service
//! traffic is barred only for blocked drivers, mid-class road-condition
//! events need trust above 0.25, and high-class emergency traffic (including
//! untrue-attack reports) needs trust of at least 0.5. Forwarding someone
//! else's event traffic additionally requires trust above 0.25.

use crate::geom::Vec2;
use crate::ids::{EntityId, EventId, MessageId};
use crate::time::SimTime;
use crate::trust::TrustScore;
use serde::{Deserialize, Serialize};

/// Types of traffic events a vehicle can announce.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Accident,
    TrafficJam,
    RoadClosure,
    Roadworks,
    SurfaceDefect,
    Debris,
    PoorRoadCondition,
}

impl EventType {
    pub fn class(self) -> MessageClass {
        match self {
            EventType::Accident | EventType::TrafficJam | EventType::RoadClosure => {
                MessageClass::High
            }
            EventType::Roadworks
            | EventType::SurfaceDefect
            | EventType::Debris
            | EventType::PoorRoadCondition => MessageClass::Mid,
        }
    }

    /// High-class events are treated as severe: RSUs share them with
    /// neighbouring RSUs and re-announce periodically until sorted.
    pub fn severe(self) -> bool {
        self.class() == MessageClass::High
    }

    pub fn label(self) -> &'static str {
        match self {
            EventType::Accident => "accident",
            EventType::TrafficJam => "traffic_jam",
            EventType::RoadClosure => "road_closure",
            EventType::Roadworks => "roadworks",
            EventType::SurfaceDefect => "surface_defect",
            EventType::Debris => "debris",
            EventType::PoorRoadCondition => "poor_road_condition",
        }
    }
}

/// Content class for admission control. The low class covers beacons and
/// wave services, which differ only in how blocking affects them, so they
/// are separate variants here.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MessageClass {
    Beacon,
    Wave,
    Mid,
    High,
}

/// Sender-side admission check performed by the TPD before any transmission.
pub fn permitted(class: MessageClass, trust: TrustScore, blocked: bool) -> bool {
    match class {
        MessageClass::Beacon => true,
        MessageClass::Wave => !blocked,
        MessageClass::Mid => !blocked && trust.milli() > 250,
        MessageClass::High => !blocked && trust.milli() >= 500,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RelayDecision {
    Relay,
    Drop,
    /// Trust in (0.05, 0.25]: the vehicle announces that it cannot forward.
    LowTrustNotice,
}

/// Forwarding rule for received event traffic (announcements and reports).
pub fn relay_eligible(
    hop: u8,
    hop_limit: u8,
    trust: TrustScore,
    blocked: bool,
    seen_before: bool,
    is_originator: bool,
) -> RelayDecision {
    if seen_before || is_originator || hop >= hop_limit || blocked {
        return RelayDecision::Drop;
    }
    let m = trust.milli();
    if m > 250 {
        RelayDecision::Relay
    } else if m > 50 {
        RelayDecision::LowTrustNotice
    } else {
        RelayDecision::Drop
    }
}

/// Vote carried by clarification feedback.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Vote {
    Yes,
    No,
}

impl Vote {
    pub fn sign(self) -> i64 {
        match self {
            Vote::Yes => 1,
            Vote::No => -1,
        }
    }
}

/// The content of an event announcement, echoed inside reports and queries
/// so that infrastructure which missed the original can still act on it.
#[derive(Clone, PartialEq, Debug)]
pub struct EventClaim {
    pub event_id: EventId,
    pub event_type: EventType,
    pub location: Vec2,
    pub observed_at: SimTime,
    pub sender_vehicle: EntityId,
    pub sender_driver: String,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RewardTarget {
    pub vehicle: EntityId,
    pub driver: String,
    pub amount_milli: i32,
}

/// Outcome of a dispute as shared with the trust authority and peer RSUs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RulingKind {
    EventTrue,
    EventFalse,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RulingNotice {
    pub event_id: EventId,
    pub location: Vec2,
    pub ruling: RulingKind,
    /// Drivers on the losing side, with the vehicles that carried them.
    pub losers: Vec<(String, EntityId)>,
    pub via_official: bool,
}

/// Infrastructure-to-infrastructure notices (RSU to RSU, RSU to TA).
#[derive(Clone, PartialEq, Debug)]
pub enum InterRsuInfo {
    /// A severe event shared with neighbouring RSUs. Carries the original
    /// announcement's injection time so peers re-announce it without
    /// distorting latency accounting.
    EventShared {
        claim: EventClaim,
        original: MessageId,
        injected_at: SimTime,
    },
    /// A dispute was opened; peers must not open their own for this event.
    DisputeOpened { event_id: EventId, rsu: EntityId },
    /// A decided dispute, used to keep offense ledgers in sync.
    DecisionShared(RulingNotice),
    /// An event was sorted by an official vehicle.
    SortedShared { event_id: EventId },
    /// Incident record forwarded to the trust authority.
    IncidentForward { claim: EventClaim, original: MessageId },
    /// Ruling forwarded to the trust authority.
    RulingForward(RulingNotice),
}

#[derive(Clone, PartialEq, Debug)]
pub enum MessagePayload {
    Beacon,
    Announcement(EventClaim),
    UntrueReport {
        claim: EventClaim,
        original_message: MessageId,
        target_rsu: EntityId,
        reporter_driver: String,
    },
    ClarificationQuery {
        event_id: EventId,
        rsu: EntityId,
        location: Vec2,
        original_message: MessageId,
        sender_vehicle: EntityId,
    },
    Feedback {
        event_id: EventId,
        rsu: EntityId,
        vote: Vote,
        trust: TrustScore,
        official: bool,
    },
    FarFromEvent {
        event_id: EventId,
        rsu: EntityId,
    },
    Reward {
        event_id: EventId,
        targets: Vec<RewardTarget>,
    },
    Punishment {
        event_id: EventId,
        targets: Vec<RewardTarget>,
    },
    BlockingRequest {
        vehicle: EntityId,
        driver: String,
        position: Vec2,
    },
    BlockingConfirmation {
        vehicle: EntityId,
        driver: String,
    },
    BlockingAck {
        vehicle: EntityId,
        driver: String,
    },
    InterRsuNotice(InterRsuInfo),
    ServiceQuery {
        service: String,
    },
    ServiceReply {
        service: String,
        location: Option<Vec2>,
    },
    AttendingBy {
        event_id: EventId,
        official: EntityId,
    },
    EventSorted {
        event_id: EventId,
        official: EntityId,
    },
    LowTrustNotice {
        about: MessageId,
    },
    UnresolvedUntrue {
        event_id: EventId,
        target_official: EntityId,
    },
    /// Baseline protocol: periodic reputation table dissemination.
    ReputationUpdate {
        reputations: Vec<(EntityId, i32)>,
    },
    /// Baseline protocol: a receiver acknowledging a received event claim
    /// toward the RSU, feeding the announcer's reputation.
    BaselineFeedback {
        event_id: EventId,
        announcer: EntityId,
        target_rsu: EntityId,
    },
}

/// How received over-the-air traffic propagates onward.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RelayClass {
    /// Event traffic: trust-gated relay that earns the forwarding reward
    /// and degrades to a low-trust notice (announcements, reports).
    GatedEvent,
    /// Flooded without trust gating or reward (queries, rulings, blocking
    /// confirmations and other control traffic that must reach vehicles
    /// beyond one hop).
    Plain,
    /// Point-of-consumption traffic that is never relayed (feedback,
    /// acks, service replies, infrastructure-internal notices).
    None,
}

pub fn relay_class(kind: MessageKind) -> RelayClass {
    match kind {
        MessageKind::EventAnnouncement | MessageKind::UntrueReport => RelayClass::GatedEvent,
        MessageKind::ClarificationQuery
        | MessageKind::Reward
        | MessageKind::Punishment
        | MessageKind::BlockingConfirmation
        | MessageKind::AttendingBy
        | MessageKind::EventSorted
        | MessageKind::UnresolvedUntrue => RelayClass::Plain,
        MessageKind::Beacon
        | MessageKind::Feedback
        | MessageKind::FarFromEvent
        | MessageKind::BlockingRequest
        | MessageKind::BlockingAck
        | MessageKind::InterRsuNotice
        | MessageKind::ServiceQuery
        | MessageKind::ServiceReply
        | MessageKind::LowTrustNotice
        | MessageKind::ReputationUpdate => RelayClass::None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MessageKind {
    Beacon,
    EventAnnouncement,
    UntrueReport,
    ClarificationQuery,
    Feedback,
    Reward,
    Punishment,
    BlockingRequest,
    BlockingConfirmation,
    BlockingAck,
    InterRsuNotice,
    ServiceQuery,
    ServiceReply,
    AttendingBy,
    EventSorted,
    LowTrustNotice,
    FarFromEvent,
    UnresolvedUntrue,
    ReputationUpdate,
}

impl MessageKind {
    pub fn label(self) -> &'static str {
        match self {
            MessageKind::Beacon => "beacon",
            MessageKind::EventAnnouncement => "event_announcement",
            MessageKind::UntrueReport => "untrue_report",
            MessageKind::ClarificationQuery => "clarification_query",
            MessageKind::Feedback => "feedback",
            MessageKind::Reward => "reward",
            MessageKind::Punishment => "punishment",
            MessageKind::BlockingRequest => "blocking_request",
            MessageKind::BlockingConfirmation => "blocking_confirmation",
            MessageKind::BlockingAck => "blocking_ack",
            MessageKind::InterRsuNotice => "inter_rsu_notice",
            MessageKind::ServiceQuery => "service_query",
            MessageKind::ServiceReply => "service_reply",
            MessageKind::AttendingBy => "attending_by",
            MessageKind::EventSorted => "event_sorted",
            MessageKind::LowTrustNotice => "low_trust_notice",
            MessageKind::FarFromEvent => "far_from_event",
            MessageKind::UnresolvedUntrue => "unresolved_untrue",
            MessageKind::ReputationUpdate => "reputation_update",
        }
    }
}

/// A message instance as transmitted. Relays keep the id and payload and
/// bump the hop counter; the original creation time rides along so response
/// latency can be measured at any hop.
#[derive(Clone, PartialEq, Debug)]
pub struct VanetMessage {
    pub id: MessageId,
    pub hop: u8,
    pub injected_at: SimTime,
    pub payload: MessagePayload,
}

impl VanetMessage {
    pub fn origin(&self) -> EntityId {
        self.id.origin
    }

    pub fn kind(&self) -> MessageKind {
        match &self.payload {
            MessagePayload::Beacon => MessageKind::Beacon,
            MessagePayload::Announcement(_) => MessageKind::EventAnnouncement,
            MessagePayload::UntrueReport { .. } => MessageKind::UntrueReport,
            MessagePayload::ClarificationQuery { .. } => MessageKind::ClarificationQuery,
            MessagePayload::Feedback { .. } => MessageKind::Feedback,
            MessagePayload::FarFromEvent { .. } => MessageKind::FarFromEvent,
            MessagePayload::Reward { .. } => MessageKind::Reward,
            MessagePayload::Punishment { .. } => MessageKind::Punishment,
            MessagePayload::BlockingRequest { .. } => MessageKind::BlockingRequest,
            MessagePayload::BlockingConfirmation { .. } => MessageKind::BlockingConfirmation,
            MessagePayload::BlockingAck { .. } => MessageKind::BlockingAck,
            MessagePayload::InterRsuNotice(_) => MessageKind::InterRsuNotice,
            MessagePayload::ServiceQuery { .. } => MessageKind::ServiceQuery,
            MessagePayload::ServiceReply { .. } => MessageKind::ServiceReply,
            MessagePayload::AttendingBy { .. } => MessageKind::AttendingBy,
            MessagePayload::EventSorted { .. } => MessageKind::EventSorted,
            MessagePayload::LowTrustNotice { .. } => MessageKind::LowTrustNotice,
            MessagePayload::UnresolvedUntrue { .. } => MessageKind::UnresolvedUntrue,
            MessagePayload::ReputationUpdate { .. } => MessageKind::ReputationUpdate,
            MessagePayload::BaselineFeedback { .. } => MessageKind::Feedback,
        }
    }

    /// Event the message is about, when there is one.
    pub fn event_id(&self) -> Option<EventId> {
        match &self.payload {
            MessagePayload::Announcement(c) => Some(c.event_id),
            MessagePayload::UntrueReport { claim, .. } => Some(claim.event_id),
            MessagePayload::ClarificationQuery { event_id, .. }
            | MessagePayload::Feedback { event_id, .. }
            | MessagePayload::FarFromEvent { event_id, .. }
            | MessagePayload::Reward { event_id, .. }
            | MessagePayload::Punishment { event_id, .. }
            | MessagePayload::AttendingBy { event_id, .. }
            | MessagePayload::EventSorted { event_id, .. }
            | MessagePayload::UnresolvedUntrue { event_id, .. }
            | MessagePayload::BaselineFeedback { event_id, .. } => Some(*event_id),
            MessagePayload::InterRsuNotice(info) => match info {
                InterRsuInfo::EventShared { claim, .. }
                | InterRsuInfo::IncidentForward { claim, .. } => Some(claim.event_id),
                InterRsuInfo::DisputeOpened { event_id, .. }
                | InterRsuInfo::SortedShared { event_id } => Some(*event_id),
                InterRsuInfo::DecisionShared(r) | InterRsuInfo::RulingForward(r) => {
                    Some(r.event_id)
                }
            },
            _ => None,
        }
    }

    /// Synthetic wire size used for overhead accounting.
    pub fn bytes(&self) -> u32 {
        let body: u32 = match &self.payload {
            MessagePayload::Beacon => 16,
            MessagePayload::Announcement(_) => 72,
            MessagePayload::UntrueReport { .. } => 88,
            MessagePayload::ClarificationQuery { .. } => 56,
            MessagePayload::Feedback { .. } => 40,
            MessagePayload::FarFromEvent { .. } => 32,
            MessagePayload::Reward { targets, .. }
            | MessagePayload::Punishment { targets, .. } => 32 + 16 * targets.len() as u32,
            MessagePayload::BlockingRequest { .. } => 48,
            MessagePayload::BlockingConfirmation { .. } => 40,
            MessagePayload::BlockingAck { .. } => 32,
            MessagePayload::InterRsuNotice(_) => 80,
            MessagePayload::ServiceQuery { .. } => 40,
            MessagePayload::ServiceReply { .. } => 48,
            MessagePayload::AttendingBy { .. } => 32,
            MessagePayload::EventSorted { .. } => 32,
            MessagePayload::LowTrustNotice { .. } => 24,
            MessagePayload::UnresolvedUntrue { .. } => 40,
            MessagePayload::ReputationUpdate { reputations } => {
                16 + 8 * reputations.len() as u32
            }
            MessagePayload::BaselineFeedback { .. } => 32,
        };
        24 + body
    }
}
