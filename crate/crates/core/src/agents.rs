//! Vehicle state: identity, mobility, behaviour policy, and the per-vehicle
//! bookkeeping the protocol needs (seen messages, visits, filed reports).

use crate::geom::Vec2;
use crate::ids::{EntityId, EventId, MessageId};
use crate::message::{EventClaim, EventType};
use crate::road::{Route, RouteCursor};
use crate::scenario::{PolicyCfg, VehicleKindCfg};
use crate::time::SimTime;
use crate::trust::Tpd;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VehicleKind {
    Regular,
    Police,
    Ambulance,
    FireService,
}

impl VehicleKind {
    pub fn from_cfg(cfg: VehicleKindCfg) -> Self {
        match cfg {
            VehicleKindCfg::Regular => VehicleKind::Regular,
            VehicleKindCfg::Police => VehicleKind::Police,
            VehicleKindCfg::Ambulance => VehicleKind::Ambulance,
            VehicleKindCfg::FireService => VehicleKind::FireService,
        }
    }

    /// Police, ambulance and fire-service vehicles speak for the authority:
    /// their feedback settles disputes and they carry no consumer TPD.
    pub fn is_official(self) -> bool {
        !matches!(self, VehicleKind::Regular)
    }
}

/// A scheduled event announcement from the scenario script.
#[derive(Clone, Debug)]
pub struct PlannedAnnouncement {
    pub at: SimTime,
    pub event_type: EventType,
    pub truthful: bool,
    pub location: Option<Vec2>,
    pub observe_lead: SimTime,
}

/// One of this vehicle's announcements after it went out.
#[derive(Clone, Debug)]
pub struct MadeAnnouncement {
    pub schedule_index: usize,
    pub event_id: EventId,
    pub message_id: MessageId,
    pub claim: EventClaim,
}

/// A scripted untrue-event report against another vehicle's announcement.
#[derive(Clone, Debug)]
pub struct PlannedComplaint {
    pub at: SimTime,
    pub announcer: EntityId,
    pub announcement_index: usize,
}

/// An announcement received but not yet evaluated for reporting (the vehicle
/// may become eligible later, e.g. after passing the claimed location).
#[derive(Clone, Debug)]
pub struct PendingClaim {
    pub claim: EventClaim,
    pub message_id: MessageId,
    pub received_at: SimTime,
}

/// A clarification query the vehicle could not answer yet (no recent visit
/// to the claimed location); retried each tick until the collaboration
/// window lapses.
#[derive(Clone, Debug)]
pub struct PendingQuery {
    pub event_id: EventId,
    pub rsu: EntityId,
    pub sender_vehicle: EntityId,
    pub received_at: SimTime,
}

/// Receiver-side buffer used by the reputation baseline: claims about one
/// event collected until the decision timer fires.
#[derive(Clone, Debug, Default)]
pub struct ClaimBuffer {
    pub first_rx: SimTime,
    /// Injection time of the earliest claim heard, for latency accounting.
    pub earliest_injected: SimTime,
    /// `(announcer, asserts_event_exists)`.
    pub claims: Vec<(EntityId, bool)>,
    pub timer_armed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BaselineState {
    /// Last reputation table received from an RSU, in thousandths.
    pub reputations: BTreeMap<EntityId, i32>,
    pub buffers: BTreeMap<EventId, ClaimBuffer>,
    pub decided: BTreeSet<EventId>,
    /// Scenario events this vehicle already announced itself.
    pub announced: BTreeSet<EventId>,
}

pub struct Vehicle {
    pub id: EntityId,
    pub name: String,
    pub kind: VehicleKind,
    /// Present on regular vehicles only; officials bypass the consumer
    /// trust hardware.
    pub tpd: Option<Tpd>,
    pub route: Option<RouteCursor>,
    pub pos: Vec2,
    pub speed_mps: f64,
    pub spawn_at: SimTime,
    pub spawned: bool,
    pub policy: PolicyCfg,
    pub rng: ChaCha8Rng,

    /// Duplicate-suppression set for the relay protocol.
    pub seen: BTreeSet<MessageId>,
    /// Last time this vehicle passed each event location.
    pub visits: BTreeMap<EventId, SimTime>,
    pub pending_eval: Vec<PendingClaim>,
    pub pending_clarify: Vec<PendingQuery>,
    pub reported: BTreeSet<EventId>,
    pub clarified: BTreeSet<EventId>,
    /// Events already answered with "too far away".
    pub declined: BTreeSet<EventId>,
    /// Events this vehicle has reached a decision about.
    pub decided: BTreeSet<EventId>,

    pub announce_plan: Vec<PlannedAnnouncement>,
    pub complaint_plan: Vec<PlannedComplaint>,
    pub service_queries: Vec<(SimTime, String)>,
    pub made: Vec<MadeAnnouncement>,
    /// Scenario events this vehicle witnessed and announced spontaneously.
    pub witnessed: BTreeSet<EventId>,

    pub baseline: BaselineState,
    /// Set once the authority confirms this vehicle's blocking request.
    pub blocking_confirmed: bool,
}

impl Vehicle {
    /// Advances along the route by one mobility tick; parked and fixed
    /// vehicles stay put.
    pub fn step(&mut self, routes: &[Route], dt_s: f64) -> Vec2 {
        if let Some(cursor) = &mut self.route {
            self.pos = cursor.advance(routes, self.speed_mps, dt_s);
        }
        self.pos
    }

    pub fn driver(&self) -> &str {
        self.tpd
            .as_ref()
            .map(|t| t.current().driver_id.as_str())
            .unwrap_or(&self.name)
    }

    pub fn trust_milli(&self) -> i32 {
        match &self.tpd {
            Some(tpd) => tpd.current().trust.milli(),
            None => 1000,
        }
    }

    pub fn is_blocked(&self) -> bool {
        self.tpd.as_ref().map(|t| t.current().blocked).unwrap_or(false)
    }

    pub fn visited_within(&self, event: EventId, now: SimTime, window: SimTime) -> bool {
        match self.visits.get(&event) {
            Some(&at) => now.since(at) <= window,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::TpdConfig;
    use rand::SeedableRng;

    fn test_vehicle(kind: VehicleKind) -> Vehicle {
        let tpd = if kind.is_official() {
            None
        } else {
            Some(Tpd::new(TpdConfig::default(), "d0"))
        };
        Vehicle {
            id: EntityId(0),
            name: "v0".into(),
            kind,
            tpd,
            route: None,
            pos: Vec2::new(0.0, 0.0),
            speed_mps: 0.0,
            spawn_at: SimTime::ZERO,
            spawned: true,
            policy: PolicyCfg::default(),
            rng: ChaCha8Rng::seed_from_u64(0),
            seen: BTreeSet::new(),
            visits: BTreeMap::new(),
            pending_eval: Vec::new(),
            pending_clarify: Vec::new(),
            reported: BTreeSet::new(),
            clarified: BTreeSet::new(),
            declined: BTreeSet::new(),
            decided: BTreeSet::new(),
            announce_plan: Vec::new(),
            complaint_plan: Vec::new(),
            service_queries: Vec::new(),
            made: Vec::new(),
            witnessed: BTreeSet::new(),
            baseline: BaselineState::default(),
            blocking_confirmed: false,
        }
    }

    #[test]
    fn officials_report_full_trust_without_tpd() {
        let v = test_vehicle(VehicleKind::Police);
        assert!(v.tpd.is_none());
        assert_eq!(v.trust_milli(), 1000);
        assert!(!v.is_blocked());
    }

    #[test]
    fn regular_vehicle_reflects_tpd_state() {
        let v = test_vehicle(VehicleKind::Regular);
        assert_eq!(v.trust_milli(), 450);
        assert_eq!(v.driver(), "d0");
    }

    #[test]
    fn visit_window_is_inclusive() {
        let mut v = test_vehicle(VehicleKind::Regular);
        v.visits.insert(EventId(0), SimTime::from_secs(100));
        let window = SimTime::from_secs(120);
        assert!(v.visited_within(EventId(0), SimTime::from_secs(220), window));
        assert!(!v.visited_within(EventId(0), SimTime::from_millis(220_001), window));
        assert!(!v.visited_within(EventId(1), SimTime::from_secs(100), window));
    }
}
