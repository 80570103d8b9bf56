//! The simulation world: builds every entity from a scenario config, drives
//! the discrete-event loop, and implements the sender-side trust framework
//! (announcement gating, reward withholding, disputes, blocking) as well as
//! the receiver-side reputation baseline it is compared against.

use crate::agents::{
    BaselineState, ClaimBuffer, PendingClaim, PendingQuery, PlannedAnnouncement, PlannedComplaint,
    Vehicle, VehicleKind,
};
use crate::baseline;
use crate::geom::Vec2;
use crate::gt::GroundTruth;
use crate::ids::{EntityId, EventId, MessageId};
use crate::kernel::{Fabric, Scheduler};
use crate::logs::{
    DecisionRecord, DisputeMethod, DisputeRecord, DisputeVerdict, RunLogs, TrustRecord,
};
use crate::message::{
    permitted, relay_class, relay_eligible, EventClaim, EventType, InterRsuInfo, MessagePayload,
    RelayClass, RelayDecision, VanetMessage, Vote,
};
use crate::road::{Route, RouteCursor};
use crate::rsu::{
    resolve_case, CaseState, DisputeCase, EventLifecycle, FeedbackEntry, Rsu, TallyOutcome,
};
use crate::scenario::{
    ClarifyMode, ProtocolMode, ReportMode, ScenarioConfig, VehicleCfg,
};
use crate::time::SimTime;
use crate::trust::{
    assess_reward, AnnouncementMetrics, ReleaseOutcome, Tpd, TpdConfig, TrustBand, TrustCause,
    TrustDelta, TrustScore,
};
use crate::authority::{BlockingResponse, TrustAuthority};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// One announcement after the world accepted it onto the channel.
#[derive(Clone, Debug)]
pub struct AnnouncementRecord {
    pub message_id: MessageId,
    pub event_id: EventId,
    pub event_type: EventType,
    pub vehicle: EntityId,
    pub driver: String,
    pub at: SimTime,
    pub truthful: bool,
    /// True when the announcement reported a scripted scenario event rather
    /// than a claim invented by the sender.
    pub scenario_event: bool,
}

/// Full story of one dispute, for metrics and tests.
#[derive(Clone, Debug)]
pub struct CaseReport {
    pub event_id: EventId,
    pub truthful: bool,
    pub announced_at: SimTime,
    pub opened_at: SimTime,
    pub decided_at: Option<SimTime>,
    pub method: Option<DisputeMethod>,
    pub verdict: Option<DisputeVerdict>,
    pub score_milli: i64,
    pub sender_vehicle: EntityId,
    pub sender_driver: String,
    pub reporters: Vec<EntityId>,
    pub clarifiers: Vec<EntityId>,
    pub rewarded_drivers: Vec<String>,
    /// `(driver, amount_milli)` with negative amounts.
    pub punished: Vec<(String, i32)>,
    /// The vote tied or nobody answered, so the case went to an official.
    pub referred: bool,
}

/// Final trust standing of one driver profile.
#[derive(Clone, Debug)]
pub struct FinalTrustRow {
    pub driver: String,
    pub vehicle: EntityId,
    pub trust: TrustScore,
    pub blocked: bool,
}

/// Everything a finished run exposes to metrics, logs, and tests.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: String,
    pub seed: u64,
    pub mode: ProtocolMode,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub count_beacons: bool,
    pub hop_limit: u8,
    pub trust_floor: TrustScore,
    pub trust_cap: TrustScore,
    /// Escalating punishment amounts in thousandths.
    pub ladder_milli: Vec<i32>,
    /// Entity index -> display name (vehicles, then RSUs, then the TA).
    pub names: Vec<String>,
    pub vehicle_count: usize,
    pub rsu_count: usize,
    pub officials: Vec<EntityId>,
    /// Per-vehicle relay policy, for the log audits.
    pub relay_enabled: Vec<bool>,
    pub logs: RunLogs,
    pub announcements: Vec<AnnouncementRecord>,
    pub cases: Vec<CaseReport>,
    /// `(event, injected_at)` for scripted scenario events.
    pub scenario_events: Vec<(EventId, SimTime)>,
    pub final_trust: Vec<FinalTrustRow>,
    pub blocked_drivers: Vec<String>,
    pub ta_drivers_csv: String,
    pub ta_incidents_csv: String,
    pub ta_rulings_csv: String,
}

/// Work items on the event queue.
enum Action {
    Mobility,
    Spawn { v: usize },
    Beacon { v: usize },
    TpdTick { v: usize },
    Deliver { to: EntityId, msg: VanetMessage },
    Announce { v: usize, idx: usize },
    Complaint { v: usize, idx: usize },
    Query { v: usize, idx: usize },
    CaseDeadline { rsu: usize, event: EventId },
    Periodic { rsu: usize },
    BaselineDecide { v: usize, event: EventId },
    ReputationTick { rsu: usize },
    Inspection { v: usize, event: EventId, rsu: EntityId },
    SortScene { v: usize, event: EventId },
}

/// A transmission decided inside a handler, executed once the borrows on the
/// deciding entity are released.
enum Out {
    /// Fresh radio broadcast; `injected` defaults to the send time.
    Fresh {
        from: EntityId,
        injected: Option<SimTime>,
        payload: MessagePayload,
    },
    /// Wired notice from an RSU to all of its peers.
    Peers { rsu: usize, info: InterRsuInfo },
    /// Wired payload from an RSU up to the authority.
    ToTa { rsu: usize, payload: MessagePayload },
    /// Wired forward of a received message from an RSU up to the authority.
    ForwardTa { rsu: usize, msg: VanetMessage },
    /// Wired payload from the authority down to one RSU.
    ToRsu { rsu: usize, payload: MessagePayload },
}

pub struct World {
    cfg: ScenarioConfig,
    seed: u64,
    mode: ProtocolMode,
    duration: SimTime,
    mobility_dt: SimTime,
    beacon_every: SimTime,
    collaboration: SimTime,
    report_window: SimTime,
    clarify_window: SimTime,
    history_window: SimTime,
    visit_radius: f64,
    ladder_milli: Vec<i32>,
    rsu_reward_milli: i32,

    sched: Scheduler<Action>,
    fabric: Fabric,
    routes: Vec<Route>,
    vehicles: Vec<Vehicle>,
    rsus: Vec<Rsu>,
    ta: TrustAuthority,
    ta_seen: BTreeSet<MessageId>,
    gt: GroundTruth,
    positions: Vec<Option<Vec2>>,
    names: Vec<String>,
    /// Per-vehicle position trail used to seed visit times retroactively
    /// when a claim about a past location arrives.
    histories: Vec<VecDeque<(SimTime, Vec2)>>,

    announcements: Vec<AnnouncementRecord>,
    case_reports: BTreeMap<EventId, CaseReport>,
    scenario_events: Vec<(EventId, SimTime)>,
}

impl World {
    /// Builds a world from a validated scenario. Panics on configs that
    /// `ScenarioConfig::validate` would reject.
    pub fn build(cfg: ScenarioConfig, seed: u64) -> World {
        let routes: Vec<Route> = cfg
            .routes
            .iter()
            .map(|r| Route {
                name: r.name.clone(),
                waypoints: r.waypoints.iter().map(|w| Vec2::new(w[0], w[1])).collect(),
                closed: r.closed,
            })
            .collect();
        let route_index: BTreeMap<&str, usize> = routes
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.as_str(), i))
            .collect();

        let expanded = cfg.expanded_vehicles();
        let nv = expanded.len();
        let nr = cfg.rsus.len();
        let ta_id = EntityId((nv + nr) as u32);

        let trust = &cfg.trust;
        let tpd_cfg = TpdConfig {
            initial: TrustScore::from_f64(trust.initial).expect("validated initial trust"),
            floor: TrustScore::from_f64(trust.floor).expect("validated trust floor"),
            cap: TrustScore::from_f64(trust.cap).expect("validated trust cap"),
            beacon_reward: TrustDelta::from_f64(trust.beacon_reward).expect("validated reward"),
            forward_reward: TrustDelta::from_f64(trust.forward_reward).expect("validated reward"),
            clarify_reward: TrustDelta::from_f64(trust.clarify_reward).expect("validated reward"),
            report_reward: TrustDelta::from_f64(trust.report_reward).expect("validated reward"),
            withhold: SimTime::from_secs_f64(trust.reward_withhold_s),
            blocking_check: SimTime::from_secs_f64(trust.blocking_check_s),
        };

        let mut vehicles = Vec::with_capacity(nv);
        let mut names = Vec::with_capacity(nv + nr + 1);
        let mut positions = vec![None; nv + nr + 1];
        for (i, vc) in expanded.iter().enumerate() {
            let id = EntityId(i as u32);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let vehicle = Self::build_vehicle(
                &cfg, &routes, &route_index, &expanded, vc, id, &tpd_cfg, &mut rng,
            );
            names.push(vehicle.name.clone());
            vehicles.push(vehicle);
        }
        let mut rsus = Vec::with_capacity(nr);
        for (j, rc) in cfg.rsus.iter().enumerate() {
            let id = EntityId((nv + j) as u32);
            let neighbors: Vec<EntityId> = if rc.neighbors.is_empty() {
                (0..nr).filter(|k| *k != j).map(|k| EntityId((nv + k) as u32)).collect()
            } else {
                rc.neighbors
                    .iter()
                    .map(|n| {
                        let k = cfg
                            .rsus
                            .iter()
                            .position(|o| &o.name == n)
                            .expect("validated neighbor name");
                        EntityId((nv + k) as u32)
                    })
                    .collect()
            };
            names.push(rc.name.clone());
            positions[nv + j] = Some(Vec2::new(rc.position[0], rc.position[1]));
            rsus.push(Rsu {
                id,
                name: rc.name.clone(),
                pos: Vec2::new(rc.position[0], rc.position[1]),
                neighbors,
                services: rc
                    .services
                    .iter()
                    .map(|s| (s.name.clone(), s.location.map(|l| Vec2::new(l[0], l[1]))))
                    .collect(),
                seen: BTreeSet::new(),
                lifecycles: BTreeMap::new(),
                cases: BTreeMap::new(),
                disputed: BTreeSet::new(),
                periodic_armed: false,
                offences: BTreeMap::new(),
                reputations: BTreeMap::new(),
            });
        }
        names.push("TA".to_string());

        let mut ta = TrustAuthority::new(
            ta_id,
            cfg.authority.malicious_window_s.map(SimTime::from_secs_f64),
            cfg.authority.malicious_threshold,
            cfg.authority.vicinity_radius_m,
        );
        for v in &vehicles {
            if v.tpd.is_some() || (v.kind == VehicleKind::Regular) {
                ta.register(v.driver(), v.id, SimTime::ZERO);
            }
        }

        let mut gt = GroundTruth::default();
        let mut scenario_events = Vec::new();
        for ev in &cfg.events {
            let at = SimTime::from_secs_f64(ev.at_s);
            let id = gt.add_scenario(
                Vec2::new(ev.location[0], ev.location[1]),
                ev.event_type,
                at,
            );
            scenario_events.push((id, at));
        }

        let net = &cfg.network;
        let fabric = Fabric::new(
            nv + nr + 1,
            net.transmission_range_m,
            net.hop_latency_ms,
            net.rsu_wired_latency_ms,
            net.ta_wired_latency_ms,
        );

        let timers = &cfg.timers;
        let report_window = SimTime::from_secs_f64(timers.report_visit_window_s);
        let clarify_window = SimTime::from_secs_f64(timers.clarify_visit_window_s);
        let history_window = if report_window.as_millis() > clarify_window.as_millis() {
            report_window
        } else {
            clarify_window
        };

        let mut world = World {
            seed,
            mode: cfg.protocol.mode,
            duration: SimTime::from_secs_f64(cfg.simulation.duration_s),
            mobility_dt: SimTime::from_secs_f64(cfg.simulation.mobility_tick_s),
            beacon_every: SimTime::from_secs_f64(cfg.simulation.beacon_interval_s),
            collaboration: SimTime::from_secs_f64(timers.collaboration_s),
            report_window,
            clarify_window,
            history_window,
            visit_radius: cfg.simulation.visit_radius_m,
            ladder_milli: cfg
                .trust
                .punishment_ladder
                .iter()
                .map(|p| (p * 1000.0).round() as i32)
                .collect(),
            rsu_reward_milli: (cfg.trust.rsu_reward * 1000.0).round() as i32,
            sched: Scheduler::new(),
            fabric,
            routes,
            histories: vec![VecDeque::new(); nv],
            vehicles,
            rsus,
            ta,
            ta_seen: BTreeSet::new(),
            gt,
            positions,
            names,
            announcements: Vec::new(),
            case_reports: BTreeMap::new(),
            scenario_events,
            cfg,
        };
        world.prime();
        world
    }

    #[allow(clippy::too_many_arguments)]
    fn build_vehicle(
        cfg: &ScenarioConfig,
        routes: &[Route],
        route_index: &BTreeMap<&str, usize>,
        expanded: &[VehicleCfg],
        vc: &VehicleCfg,
        id: EntityId,
        tpd_cfg: &TpdConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vehicle {
        let kind = VehicleKind::from_cfg(vc.kind);
        let driver = ScenarioConfig::driver_of(vc);
        let tpd = if kind == VehicleKind::Regular && cfg.protocol.mode == ProtocolMode::Proposed {
            Some(Tpd::new(tpd_cfg.clone(), &driver))
        } else {
            None
        };
        let route = vc.route.as_ref().map(|name| {
            let ri = route_index[name.as_str()];
            let len = routes[ri].length();
            let dist = if vc.random_start_offset {
                rng.gen_range(0.0..len)
            } else {
                vc.start_offset_m
            };
            RouteCursor {
                route: ri,
                dist_m: dist,
            }
        });
        let pos = match (&route, vc.position) {
            (Some(c), _) => routes[c.route].point_at(c.dist_m),
            (None, Some(p)) => Vec2::new(p[0], p[1]),
            (None, None) => Vec2::new(0.0, 0.0),
        };
        let announce_plan = vc
            .announcements
            .iter()
            .map(|a| PlannedAnnouncement {
                at: SimTime::from_secs_f64(a.at_s),
                event_type: a.event_type,
                truthful: a.truthful,
                location: a.location.map(|l| Vec2::new(l[0], l[1])),
                observe_lead: SimTime::from_secs_f64(a.observe_lead_s),
            })
            .collect();
        let complaint_plan = vc
            .scripted_complaints
            .iter()
            .map(|c| PlannedComplaint {
                at: SimTime::from_secs_f64(c.at_s),
                announcer: EntityId(
                    expanded
                        .iter()
                        .position(|o| o.name == c.announcer)
                        .expect("validated complaint announcer") as u32,
                ),
                announcement_index: c.announcement_index,
            })
            .collect();
        Vehicle {
            id,
            name: vc.name.clone(),
            kind,
            tpd,
            route,
            pos,
            speed_mps: vc.speed_mps,
            spawn_at: SimTime::from_secs_f64(vc.spawn_s),
            spawned: false,
            policy: vc.policy.clone(),
            rng: rng.clone(),
            seen: BTreeSet::new(),
            visits: BTreeMap::new(),
            pending_eval: Vec::new(),
            pending_clarify: Vec::new(),
            reported: BTreeSet::new(),
            clarified: BTreeSet::new(),
            declined: BTreeSet::new(),
            decided: BTreeSet::new(),
            announce_plan,
            complaint_plan,
            service_queries: vc
                .service_queries
                .iter()
                .map(|q| (SimTime::from_secs_f64(q.at_s), q.service.clone()))
                .collect(),
            made: Vec::new(),
            witnessed: BTreeSet::new(),
            baseline: BaselineState::default(),
            blocking_confirmed: false,
        }
    }

    fn prime(&mut self) {
        self.sched.schedule(self.mobility_dt, Action::Mobility);
        for vi in 0..self.vehicles.len() {
            let v = &self.vehicles[vi];
            self.sched.schedule(v.spawn_at, Action::Spawn { v: vi });
            for (idx, a) in v.announce_plan.iter().enumerate() {
                self.sched.schedule(a.at, Action::Announce { v: vi, idx });
            }
            for (idx, c) in v.complaint_plan.iter().enumerate() {
                self.sched.schedule(c.at, Action::Complaint { v: vi, idx });
            }
            for (idx, (at, _)) in v.service_queries.iter().enumerate() {
                self.sched.schedule(*at, Action::Query { v: vi, idx });
            }
        }
        if self.mode == ProtocolMode::Baseline && self.cfg.protocol.reputation_broadcast_s > 0.0 {
            let every = SimTime::from_secs_f64(self.cfg.protocol.reputation_broadcast_s);
            for ri in 0..self.rsus.len() {
                self.sched.schedule(every, Action::ReputationTick { rsu: ri });
            }
        }
    }

    /// Runs the world to completion and returns everything observable.
    pub fn run(mut self) -> RunOutput {
        while let Some((now, action)) = self.sched.pop() {
            self.handle(now, action);
        }
        self.finish()
    }

    fn handle(&mut self, now: SimTime, action: Action) {
        match action {
            Action::Mobility => self.on_mobility(now),
            Action::Spawn { v } => self.on_spawn(now, v),
            Action::Beacon { v } => self.on_beacon(now, v),
            Action::TpdTick { v } => self.on_tpd_tick(now, v),
            Action::Deliver { to, msg } => self.on_deliver(now, to, msg),
            Action::Announce { v, idx } => self.on_planned_announce(now, v, idx),
            Action::Complaint { v, idx } => self.on_planned_complaint(now, v, idx),
            Action::Query { v, idx } => self.on_planned_query(now, v, idx),
            Action::CaseDeadline { rsu, event } => self.decide_case(now, rsu, event, None),
            Action::Periodic { rsu } => self.on_periodic(now, rsu),
            Action::BaselineDecide { v, event } => self.on_baseline_decide(now, v, event),
            Action::ReputationTick { rsu } => self.on_reputation_tick(now, rsu),
            Action::Inspection { v, event, rsu } => self.on_inspection(now, v, event, rsu),
            Action::SortScene { v, event } => self.on_sort_scene(now, v, event),
        }
    }

    // ---- topology helpers -------------------------------------------------

    fn nv(&self) -> usize {
        self.vehicles.len()
    }

    fn rsu_entity(&self, ri: usize) -> EntityId {
        EntityId((self.nv() + ri) as u32)
    }

    fn owner_rsu(&self, loc: Vec2) -> usize {
        self.rsus
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                a.pos
                    .distance(loc)
                    .partial_cmp(&b.pos.distance(loc))
                    .unwrap()
                    .then(i.cmp(j))
            })
            .map(|(i, _)| i)
            .expect("at least one RSU")
    }

    fn vicinity_rsus(&self, loc: Vec2) -> Vec<usize> {
        let within: Vec<usize> = self
            .rsus
            .iter()
            .enumerate()
            .filter(|(_, r)| r.pos.within(loc, self.ta.vicinity_radius_m))
            .map(|(i, _)| i)
            .collect();
        if within.is_empty() {
            vec![self.owner_rsu(loc)]
        } else {
            within
        }
    }

    fn nearest_official(&self, loc: Vec2) -> Option<EntityId> {
        self.vehicles
            .iter()
            .filter(|v| v.spawned && v.kind.is_official())
            .min_by(|a, b| {
                a.pos
                    .distance(loc)
                    .partial_cmp(&b.pos.distance(loc))
                    .unwrap()
                    .then(a.id.0.cmp(&b.id.0))
            })
            .map(|v| v.id)
    }

    // ---- transmission helpers ---------------------------------------------

    fn send_fresh(
        &mut self,
        now: SimTime,
        from: EntityId,
        injected: Option<SimTime>,
        payload: MessagePayload,
    ) -> MessageId {
        let id = self.fabric.next_id(from);
        let msg = VanetMessage {
            id,
            hop: 0,
            injected_at: injected.unwrap_or(now),
            payload,
        };
        let fanout = self.fabric.broadcast(now, from, &msg, &self.positions);
        for (to, at) in fanout {
            self.sched.schedule(at, Action::Deliver { to, msg: msg.clone() });
        }
        id
    }

    fn send_relay(&mut self, now: SimTime, from: EntityId, msg: VanetMessage) {
        let fanout = self.fabric.broadcast(now, from, &msg, &self.positions);
        for (to, at) in fanout {
            self.sched.schedule(at, Action::Deliver { to, msg: msg.clone() });
        }
    }

    fn send_wired(&mut self, now: SimTime, from: EntityId, to: EntityId, msg: VanetMessage) {
        let ta = self.ta.id;
        let latency = if from == ta || to == ta {
            self.fabric.ta_latency
        } else {
            self.fabric.rsu_latency
        };
        let at = self.fabric.wired(now, from, to, &msg, latency);
        self.sched.schedule(at, Action::Deliver { to, msg });
    }

    fn execute(&mut self, now: SimTime, outs: Vec<Out>) {
        for out in outs {
            match out {
                Out::Fresh {
                    from,
                    injected,
                    payload,
                } => {
                    self.send_fresh(now, from, injected, payload);
                }
                Out::Peers { rsu, info } => {
                    let from = self.rsu_entity(rsu);
                    let peers = self.rsus[rsu].neighbors.clone();
                    for to in peers {
                        let id = self.fabric.next_id(from);
                        let msg = VanetMessage {
                            id,
                            hop: 0,
                            injected_at: now,
                            payload: MessagePayload::InterRsuNotice(info.clone()),
                        };
                        self.send_wired(now, from, to, msg);
                    }
                }
                Out::ToTa { rsu, payload } => {
                    let from = self.rsu_entity(rsu);
                    let id = self.fabric.next_id(from);
                    let msg = VanetMessage {
                        id,
                        hop: 0,
                        injected_at: now,
                        payload,
                    };
                    self.send_wired(now, from, self.ta.id, msg);
                }
                Out::ForwardTa { rsu, msg } => {
                    let from = self.rsu_entity(rsu);
                    self.send_wired(now, from, self.ta.id, msg);
                }
                Out::ToRsu { rsu, payload } => {
                    let from = self.ta.id;
                    let to = self.rsu_entity(rsu);
                    let id = self.fabric.next_id(from);
                    let msg = VanetMessage {
                        id,
                        hop: 0,
                        injected_at: now,
                        payload,
                    };
                    self.send_wired(now, from, to, msg);
                }
            }
        }
    }

    fn log_trust(logs: &mut RunLogs, now: SimTime, driver: &str, trust: TrustScore, cause: String) {
        logs.trust.push(TrustRecord {
            at: now,
            driver: driver.to_string(),
            trust,
            band: TrustBand::of(trust),
            cause,
        });
    }

    /// Applies a trust delta to a vehicle's active driver and logs the new
    /// value. No-op on officials and blocked profiles (unless punishing).
    fn apply_trust(&mut self, now: SimTime, vi: usize, delta: TrustDelta, cause: TrustCause) {
        let logs = &mut self.fabric.logs;
        let v = &mut self.vehicles[vi];
        let Some(tpd) = v.tpd.as_mut() else { return };
        if let Some(applied) = tpd.apply_delta(delta) {
            let driver = tpd.current().driver_id.clone();
            Self::log_trust(logs, now, &driver, applied.trust, cause.label());
        }
    }

    // ---- mobility, spawning, beacons ---------------------------------------

    fn on_spawn(&mut self, now: SimTime, vi: usize) {
        {
            let logs = &mut self.fabric.logs;
            let v = &mut self.vehicles[vi];
            v.spawned = true;
            if let Some(tpd) = &v.tpd {
                let p = tpd.current();
                Self::log_trust(logs, now, &p.driver_id, p.trust, TrustCause::Init.label());
            }
        }
        let (id, pos) = (self.vehicles[vi].id, self.vehicles[vi].pos);
        self.positions[id.index()] = Some(pos);
        self.histories[vi].push_back((now, pos));
        let beacon_at = now.plus(self.beacon_every);
        if beacon_at <= self.duration {
            self.sched.schedule(beacon_at, Action::Beacon { v: vi });
        }
        if self.mode == ProtocolMode::Proposed && self.vehicles[vi].tpd.is_some() {
            let tick = self.vehicles[vi].tpd.as_ref().unwrap().cfg.blocking_check;
            let at = now.plus(tick);
            if at <= self.duration {
                self.sched.schedule(at, Action::TpdTick { v: vi });
            }
        }
    }

    fn on_beacon(&mut self, now: SimTime, vi: usize) {
        if !self.vehicles[vi].spawned {
            return;
        }
        let reward_due = self.vehicles[vi]
            .tpd
            .as_ref()
            .map(|t| t.beacon_reward_due())
            .unwrap_or(false);
        if reward_due {
            let delta = self.vehicles[vi].tpd.as_ref().unwrap().cfg.beacon_reward;
            self.apply_trust(now, vi, delta, TrustCause::BeaconReward);
        }
        let from = self.vehicles[vi].id;
        self.send_fresh(now, from, None, MessagePayload::Beacon);
        let next = now.plus(self.beacon_every);
        if next <= self.duration {
            self.sched.schedule(next, Action::Beacon { v: vi });
        }
    }

    fn on_tpd_tick(&mut self, now: SimTime, vi: usize) {
        let mut outs = Vec::new();
        {
            let logs = &mut self.fabric.logs;
            let v = &mut self.vehicles[vi];
            let pos = v.pos;
            let id = v.id;
            let confirmed = v.blocking_confirmed;
            if let Some(tpd) = v.tpd.as_mut() {
                for outcome in tpd.release_due(now) {
                    let driver = tpd.current().driver_id.clone();
                    match outcome {
                        ReleaseOutcome::Applied { message_id, applied } => Self::log_trust(
                            logs,
                            now,
                            &driver,
                            applied.trust,
                            TrustCause::RewardReleased(message_id).label(),
                        ),
                        ReleaseOutcome::Discarded { message_id } => Self::log_trust(
                            logs,
                            now,
                            &driver,
                            tpd.current().trust,
                            TrustCause::RewardDiscarded(message_id).label(),
                        ),
                        ReleaseOutcome::SkippedBlocked { .. } => {}
                    }
                }
                if tpd.blocking_request_due() && !confirmed {
                    outs.push(Out::Fresh {
                        from: id,
                        injected: None,
                        payload: MessagePayload::BlockingRequest {
                            vehicle: id,
                            driver: tpd.current().driver_id.clone(),
                            position: pos,
                        },
                    });
                }
            }
        }
        self.execute(now, outs);
        let tick = self.vehicles[vi].tpd.as_ref().unwrap().cfg.blocking_check;
        let next = now.plus(tick);
        if next <= self.duration {
            self.sched.schedule(next, Action::TpdTick { v: vi });
        }
    }

    fn on_mobility(&mut self, now: SimTime) {
        let dt = self.mobility_dt.as_secs_f64();
        // Move everyone, then refresh positions and trails.
        for vi in 0..self.vehicles.len() {
            if !self.vehicles[vi].spawned {
                continue;
            }
            let pos = self.vehicles[vi].step(&self.routes, dt);
            let idx = self.vehicles[vi].id.index();
            self.positions[idx] = Some(pos);
            let hist = &mut self.histories[vi];
            hist.push_back((now, pos));
            let cutoff = now.since(self.history_window);
            while hist.front().map(|(t, _)| *t < cutoff).unwrap_or(false) {
                hist.pop_front();
            }
        }
        // Visit scan against the active ground-truth events.
        let active: Vec<(EventId, Vec2, EventType, bool)> = self
            .gt
            .active(now)
            .map(|e| (e.id, e.location, e.event_type, e.announced))
            .collect();
        for vi in 0..self.vehicles.len() {
            let v = &mut self.vehicles[vi];
            if !v.spawned {
                continue;
            }
            for (id, loc, _, _) in &active {
                if v.pos.within(*loc, self.visit_radius) {
                    v.visits.insert(*id, now);
                }
            }
        }
        // Witness behaviour: scenario events get announced by vehicles at
        // the scene. The proposed protocol elects the first passer-by; the
        // baseline lets every witness speak.
        let mut witness_jobs: Vec<(usize, EventId, EventType)> = Vec::new();
        for (id, loc, etype, announced) in &active {
            let is_scenario = self.gt.get(*id).scenario;
            if !is_scenario {
                continue;
            }
            if self.mode == ProtocolMode::Proposed {
                if *announced || !self.cfg.protocol.auto_witness {
                    continue;
                }
                let candidate = (0..self.vehicles.len()).find(|&vi| {
                    let v = &self.vehicles[vi];
                    v.spawned
                        && v.pos.within(*loc, self.visit_radius)
                        && permitted(
                            etype.class(),
                            TrustScore::from_milli(v.trust_milli()),
                            v.is_blocked(),
                        )
                });
                if let Some(vi) = candidate {
                    witness_jobs.push((vi, *id, *etype));
                }
            } else if self.cfg.protocol.baseline_all_witnesses {
                for vi in 0..self.vehicles.len() {
                    let v = &self.vehicles[vi];
                    if v.spawned
                        && v.pos.within(*loc, self.visit_radius)
                        && !v.witnessed.contains(id)
                    {
                        witness_jobs.push((vi, *id, *etype));
                    }
                }
            }
        }
        for (vi, event, etype) in witness_jobs {
            self.make_announcement(now, vi, etype, true, None, SimTime::ZERO, None, Some(event));
        }
        // Deferred report rolls and clarification answers.
        for vi in 0..self.vehicles.len() {
            if !self.vehicles[vi].spawned {
                continue;
            }
            let pending: Vec<PendingClaim> = self.vehicles[vi].pending_eval.clone();
            let mut keep = Vec::new();
            for pc in pending {
                if !self.consider_report(now, vi, &pc.claim, pc.message_id, pc.received_at) {
                    keep.push(pc);
                }
            }
            self.vehicles[vi].pending_eval = keep;

            let pending: Vec<PendingQuery> = self.vehicles[vi].pending_clarify.clone();
            let mut keep = Vec::new();
            for pq in pending {
                if !self.consider_clarify(
                    now,
                    vi,
                    pq.event_id,
                    pq.rsu,
                    pq.sender_vehicle,
                    pq.received_at,
                    false,
                ) {
                    keep.push(pq);
                }
            }
            self.vehicles[vi].pending_clarify = keep;
        }
        let next = now.plus(self.mobility_dt);
        if next <= self.duration {
            self.sched.schedule(next, Action::Mobility);
        }
    }

    // ---- announcements ------------------------------------------------------

    /// Seeds visit times for a newly registered claim from recorded trails,
    /// so vehicles that recently drove past the claimed spot count as
    /// witnesses for eligibility purposes.
    fn seed_visits(&mut self, now: SimTime, event: EventId) {
        let loc = self.gt.get(event).location;
        let window = self.history_window;
        for vi in 0..self.vehicles.len() {
            let latest = self.histories[vi]
                .iter()
                .rev()
                .find(|(t, p)| p.within(loc, self.visit_radius) && now.since(window) <= *t)
                .map(|(t, _)| *t);
            if let Some(t) = latest {
                let v = &mut self.vehicles[vi];
                let entry = v.visits.entry(event).or_insert(t);
                if *entry < t {
                    *entry = t;
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn make_announcement(
        &mut self,
        now: SimTime,
        vi: usize,
        event_type: EventType,
        truthful: bool,
        location: Option<Vec2>,
        observe_lead: SimTime,
        schedule_index: Option<usize>,
        scenario_event: Option<EventId>,
    ) {
        let (vid, vpos, driver) = {
            let v = &self.vehicles[vi];
            if !v.spawned {
                return;
            }
            if self.mode == ProtocolMode::Proposed {
                let trust = TrustScore::from_milli(v.trust_milli());
                if !permitted(event_type.class(), trust, v.is_blocked()) {
                    return;
                }
            }
            (v.id, v.pos, v.driver().to_string())
        };
        let (event_id, loc) = match scenario_event {
            Some(e) => {
                let ev = self.gt.get_mut(e);
                ev.announced = true;
                (e, ev.location)
            }
            None => {
                let loc = location.unwrap_or(vpos);
                (self.gt.add_claim(loc, event_type, truthful, now), loc)
            }
        };
        let observed_at = SimTime::from_millis(
            now.as_millis().saturating_sub(observe_lead.as_millis()),
        );
        let claim = EventClaim {
            event_id,
            event_type,
            location: loc,
            observed_at,
            sender_vehicle: vid,
            sender_driver: driver.clone(),
        };
        let mid = self.send_fresh(now, vid, None, MessagePayload::Announcement(claim.clone()));
        {
            let logs = &mut self.fabric.logs;
            let v = &mut self.vehicles[vi];
            if let Some(tpd) = v.tpd.as_mut() {
                tpd.note_announcement(mid);
                let assessment = assess_reward(&AnnouncementMetrics {
                    pos_diff_m: vpos.distance(loc),
                    delay_s: observe_lead.as_secs_f64(),
                });
                if assessment.long_delayed {
                    // Punishment tiers land immediately instead of being
                    // withheld.
                    if let Some(applied) = tpd.apply_delta(assessment.amount) {
                        let d = tpd.current().driver_id.clone();
                        Self::log_trust(
                            logs,
                            now,
                            &d,
                            applied.trust,
                            TrustCause::RewardReleased(mid).label(),
                        );
                    }
                } else {
                    tpd.withhold_reward(mid, assessment.amount, now)
                        .expect("fresh message id for withheld reward");
                }
            }
            v.made.push(crate::agents::MadeAnnouncement {
                schedule_index: schedule_index.unwrap_or(usize::MAX),
                event_id,
                message_id: mid,
                claim: claim.clone(),
            });
            if scenario_event.is_some() {
                v.witnessed.insert(event_id);
                v.baseline.announced.insert(event_id);
            }
        }
        self.announcements.push(AnnouncementRecord {
            message_id: mid,
            event_id,
            event_type,
            vehicle: vid,
            driver,
            at: now,
            truthful,
            scenario_event: scenario_event.is_some(),
        });
        self.seed_visits(now, event_id);
    }

    fn on_planned_announce(&mut self, now: SimTime, vi: usize, idx: usize) {
        let plan = self.vehicles[vi].announce_plan[idx].clone();
        self.make_announcement(
            now,
            vi,
            plan.event_type,
            plan.truthful,
            plan.location,
            plan.observe_lead,
            Some(idx),
            None,
        );
    }

    fn on_planned_query(&mut self, now: SimTime, vi: usize, idx: usize) {
        let (id, service, allowed) = {
            let v = &self.vehicles[vi];
            if !v.spawned {
                return;
            }
            let allowed = self.mode != ProtocolMode::Proposed
                || permitted(
                    crate::message::MessageClass::Wave,
                    TrustScore::from_milli(v.trust_milli()),
                    v.is_blocked(),
                );
            (v.id, v.service_queries[idx].1.clone(), allowed)
        };
        if allowed {
            self.send_fresh(now, id, None, MessagePayload::ServiceQuery { service });
        }
    }

    // ---- reporting and clarifying -------------------------------------------

    fn on_planned_complaint(&mut self, now: SimTime, vi: usize, idx: usize) {
        let plan = self.vehicles[vi].complaint_plan[idx].clone();
        let Some(made) = self.vehicles[plan.announcer.index()]
            .made
            .iter()
            .find(|m| m.schedule_index == plan.announcement_index)
            .cloned()
        else {
            return; // the announcement never made it onto the channel
        };
        let v = &self.vehicles[vi];
        if !v.spawned
            || v.trust_milli() < 500
            || v.is_blocked()
            || v.reported.contains(&made.event_id)
            || v.clarified.contains(&made.event_id)
        {
            return;
        }
        self.file_report(now, vi, made.claim.clone(), made.message_id);
    }

    fn file_report(&mut self, now: SimTime, vi: usize, claim: EventClaim, original: MessageId) {
        let owner = self.owner_rsu(claim.location);
        let target_rsu = self.rsu_entity(owner);
        let event = claim.event_id;
        let (vid, driver, reward) = {
            let v = &mut self.vehicles[vi];
            v.reported.insert(event);
            v.pending_eval.retain(|p| p.claim.event_id != event);
            v.pending_clarify.retain(|p| p.event_id != event);
            (
                v.id,
                v.driver().to_string(),
                v.tpd.as_ref().map(|t| t.cfg.report_reward),
            )
        };
        if let Some(delta) = reward {
            self.apply_trust(now, vi, delta, TrustCause::ReportReward);
        }
        self.send_fresh(
            now,
            vid,
            None,
            MessagePayload::UntrueReport {
                claim,
                original_message: original,
                target_rsu,
                reporter_driver: driver,
            },
        );
    }

    /// Evaluates whether this vehicle files a report about `claim` right now.
    /// Returns true when the question is settled either way; false keeps the
    /// claim in the pending queue (not yet visited the claimed spot).
    fn consider_report(
        &mut self,
        now: SimTime,
        vi: usize,
        claim: &EventClaim,
        original: MessageId,
        received_at: SimTime,
    ) -> bool {
        let event = claim.event_id;
        if self.mode != ProtocolMode::Proposed {
            return true;
        }
        if now > received_at.plus(self.collaboration) || self.gt.get(event).sorted {
            return true;
        }
        {
            let v = &self.vehicles[vi];
            if v.policy.report_probability <= 0.0
                || claim.sender_vehicle == v.id
                || v.reported.contains(&event)
                || v.clarified.contains(&event)
            {
                return true;
            }
            if !v.visited_within(event, now, self.report_window) {
                return false;
            }
            // Eligibility is judged once, at the first qualifying moment.
            if v.trust_milli() < 500 || v.is_blocked() {
                return true;
            }
        }
        let fire = {
            let truthful = self.gt.is_true(event);
            let v = &mut self.vehicles[vi];
            let candidate = match v.policy.report_mode {
                ReportMode::GroundTruth => !truthful,
                ReportMode::Indiscriminate => true,
            };
            candidate && v.rng.gen_bool(v.policy.report_probability)
        };
        if fire {
            self.file_report(now, vi, claim.clone(), original);
        }
        true
    }

    fn answer_clarification(
        &mut self,
        now: SimTime,
        vi: usize,
        event: EventId,
        rsu: EntityId,
        vote: Vote,
    ) {
        let (vid, trust, official, reward) = {
            let v = &mut self.vehicles[vi];
            v.clarified.insert(event);
            v.pending_clarify.retain(|p| p.event_id != event);
            (
                v.id,
                TrustScore::from_milli(v.trust_milli()),
                v.kind.is_official(),
                v.tpd.as_ref().map(|t| t.cfg.clarify_reward),
            )
        };
        self.send_fresh(
            now,
            vid,
            None,
            MessagePayload::Feedback {
                event_id: event,
                rsu,
                vote,
                trust,
                official,
            },
        );
        if let Some(delta) = reward {
            self.apply_trust(now, vi, delta, TrustCause::ClarifyReward);
        }
    }

    /// Evaluates whether this vehicle answers a clarification query now.
    /// Returns true when settled (answered or never going to answer); false
    /// keeps it pending until the collaboration window lapses.
    #[allow(clippy::too_many_arguments)]
    fn consider_clarify(
        &mut self,
        now: SimTime,
        vi: usize,
        event: EventId,
        rsu: EntityId,
        sender_vehicle: EntityId,
        received_at: SimTime,
        first: bool,
    ) -> bool {
        if self.mode != ProtocolMode::Proposed {
            return true;
        }
        if now > received_at.plus(self.collaboration) {
            return true;
        }
        let mut far_notice = None;
        {
            let v = &self.vehicles[vi];
            if v.id == sender_vehicle
                || v.clarified.contains(&event)
                || v.reported.contains(&event)
                || v.is_blocked()
            {
                return true;
            }
            let capable = if v.kind.is_official() {
                true
            } else {
                v.policy.clarify_mode != ClarifyMode::None && v.trust_milli() > 500
            };
            if !capable {
                return true;
            }
            // Not yet at the scene: notify once, then wait on the pending path.
            if !v.visited_within(event, now, self.clarify_window)
                && first
                && !v.declined.contains(&event)
            {
                far_notice = Some(v.id);
            }
        }
        if let Some(vid) = far_notice {
            self.vehicles[vi].declined.insert(event);
            self.send_fresh(
                now,
                vid,
                None,
                MessagePayload::FarFromEvent { event_id: event, rsu },
            );
            return false;
        }
        if !self.vehicles[vi].visited_within(event, now, self.clarify_window) {
            return false;
        }
        let vote = {
            let truthful = self.gt.is_true(event);
            let v = &mut self.vehicles[vi];
            let mode = if v.kind.is_official() {
                ClarifyMode::GroundTruth
            } else {
                v.policy.clarify_mode
            };
            match mode {
                ClarifyMode::None => return true,
                ClarifyMode::GroundTruth => {
                    if truthful {
                        Vote::Yes
                    } else {
                        Vote::No
                    }
                }
                ClarifyMode::Random => {
                    if v.rng.gen_bool(v.policy.clarify_yes_probability) {
                        Vote::Yes
                    } else {
                        Vote::No
                    }
                }
            }
        };
        self.answer_clarification(now, vi, event, rsu, vote);
        true
    }

    // ---- message delivery ----------------------------------------------------

    fn on_deliver(&mut self, now: SimTime, to: EntityId, msg: VanetMessage) {
        let i = to.index();
        if i < self.nv() {
            self.on_vehicle_deliver(now, i, msg);
        } else if i < self.nv() + self.rsus.len() {
            self.on_rsu_deliver(now, i - self.nv(), msg);
        } else {
            self.on_ta_deliver(now, msg);
        }
    }

    fn on_vehicle_deliver(&mut self, now: SimTime, vi: usize, msg: VanetMessage) {
        if !self.vehicles[vi].spawned || msg.origin() == self.vehicles[vi].id {
            return;
        }
        if !self.vehicles[vi].seen.insert(msg.id) {
            return;
        }
        self.consume_at_vehicle(now, vi, &msg);
        self.relay_step(now, vi, msg);
    }

    fn consume_at_vehicle(&mut self, now: SimTime, vi: usize, msg: &VanetMessage) {
        match &msg.payload {
            MessagePayload::Announcement(claim) => self.vehicle_on_announcement(now, vi, msg, claim),
            MessagePayload::UntrueReport { claim, original_message, .. } => {
                if claim.sender_vehicle == self.vehicles[vi].id {
                    if let Some(tpd) = self.vehicles[vi].tpd.as_mut() {
                        tpd.record_complaint(*original_message);
                    }
                }
            }
            MessagePayload::ClarificationQuery {
                event_id,
                rsu,
                original_message,
                sender_vehicle,
                ..
            } => {
                if *sender_vehicle == self.vehicles[vi].id {
                    if let Some(tpd) = self.vehicles[vi].tpd.as_mut() {
                        tpd.record_complaint(*original_message);
                    }
                    return;
                }
                if !self.consider_clarify(now, vi, *event_id, *rsu, *sender_vehicle, now, true) {
                    self.vehicles[vi].pending_clarify.push(PendingQuery {
                        event_id: *event_id,
                        rsu: *rsu,
                        sender_vehicle: *sender_vehicle,
                        received_at: now,
                    });
                }
            }
            MessagePayload::Reward { targets, .. } => {
                let me = self.vehicles[vi].id;
                let mine: Vec<TrustDelta> = targets
                    .iter()
                    .filter(|t| t.vehicle == me && t.driver == self.vehicles[vi].driver())
                    .map(|t| TrustDelta::from_milli(t.amount_milli))
                    .collect();
                for delta in mine {
                    self.apply_trust(now, vi, delta, TrustCause::RsuReward);
                }
            }
            MessagePayload::Punishment { targets, .. } => {
                let me = self.vehicles[vi].id;
                let mine: Vec<TrustDelta> = targets
                    .iter()
                    .filter(|t| t.vehicle == me && t.driver == self.vehicles[vi].driver())
                    .map(|t| TrustDelta::from_milli(t.amount_milli))
                    .collect();
                for delta in mine {
                    self.apply_trust(now, vi, delta, TrustCause::RsuPunishment);
                }
            }
            MessagePayload::BlockingConfirmation { vehicle, driver } => {
                let mut outs = Vec::new();
                {
                    let logs = &mut self.fabric.logs;
                    let v = &mut self.vehicles[vi];
                    if *vehicle == v.id && driver == v.driver() {
                        v.blocking_confirmed = true;
                        if let Some(tpd) = v.tpd.as_mut() {
                            if !tpd.current().blocked {
                                outs.push(Out::Fresh {
                                    from: v.id,
                                    injected: None,
                                    payload: MessagePayload::BlockingAck {
                                        vehicle: *vehicle,
                                        driver: driver.clone(),
                                    },
                                });
                                let trust = tpd.block();
                                Self::log_trust(
                                    logs,
                                    now,
                                    driver,
                                    trust,
                                    TrustCause::Blocked.label(),
                                );
                            }
                        }
                    }
                }
                self.execute(now, outs);
            }
            MessagePayload::UnresolvedUntrue { event_id, target_official } => {
                if *target_official == self.vehicles[vi].id
                    && self.vehicles[vi].kind.is_official()
                {
                    let rsu = self.rsu_entity(self.owner_rsu(self.gt.get(*event_id).location));
                    let me = self.vehicles[vi].id;
                    self.send_fresh(
                        now,
                        me,
                        None,
                        MessagePayload::AttendingBy {
                            event_id: *event_id,
                            official: me,
                        },
                    );
                    let at = now.plus(SimTime::from_secs_f64(self.cfg.timers.official_inspect_s));
                    self.sched.schedule(
                        at,
                        Action::Inspection {
                            v: vi,
                            event: *event_id,
                            rsu,
                        },
                    );
                }
            }
            MessagePayload::ReputationUpdate { reputations } => {
                let v = &mut self.vehicles[vi];
                for (vehicle, rep) in reputations {
                    v.baseline.reputations.insert(*vehicle, *rep);
                }
            }
            // Beacons are never delivered; the rest is infrastructure-bound
            // or carries nothing for a vehicle to act on.
            _ => {}
        }
    }

    fn vehicle_on_announcement(
        &mut self,
        now: SimTime,
        vi: usize,
        msg: &VanetMessage,
        claim: &EventClaim,
    ) {
        let event = claim.event_id;
        let scenario = self.gt.get(event).scenario;
        match self.mode {
            ProtocolMode::Proposed => {
                {
                    let logs = &mut self.fabric.logs;
                    let v = &mut self.vehicles[vi];
                    if scenario && !v.witnessed.contains(&event) && v.decided.insert(event) {
                        logs.decisions.push(DecisionRecord {
                            at: now,
                            vehicle: v.id,
                            event_id: event,
                            latency: now.since(msg.injected_at),
                        });
                    }
                }
                let already_pending = self.vehicles[vi]
                    .pending_eval
                    .iter()
                    .any(|p| p.claim.event_id == event);
                if !already_pending
                    && !self.consider_report(now, vi, claim, msg.id, now)
                {
                    self.vehicles[vi].pending_eval.push(PendingClaim {
                        claim: claim.clone(),
                        message_id: msg.id,
                        received_at: now,
                    });
                }
            }
            ProtocolMode::Baseline => {
                let mut arm_timer = false;
                let mut feedback = None;
                {
                    let v = &mut self.vehicles[vi];
                    let buf = v.baseline.buffers.entry(event).or_insert_with(|| ClaimBuffer {
                        first_rx: now,
                        earliest_injected: msg.injected_at,
                        claims: Vec::new(),
                        timer_armed: false,
                    });
                    if msg.injected_at < buf.earliest_injected {
                        buf.earliest_injected = msg.injected_at;
                    }
                    if buf.claims.iter().all(|(a, _)| *a != claim.sender_vehicle) {
                        buf.claims.push((claim.sender_vehicle, true));
                    }
                    if !buf.timer_armed
                        && !v.decided.contains(&event)
                        && !v.witnessed.contains(&event)
                    {
                        buf.timer_armed = true;
                        arm_timer = true;
                    }
                    if self.cfg.protocol.baseline_feedback {
                        feedback = Some(v.id);
                    }
                }
                if arm_timer {
                    let at = now.plus(SimTime::from_secs_f64(self.cfg.protocol.baseline_timer_s));
                    self.sched.schedule(at, Action::BaselineDecide { v: vi, event });
                }
                if let Some(vid) = feedback {
                    let owner = self.owner_rsu(claim.location);
                    let target = self.rsu_entity(owner);
                    self.send_fresh(
                        now,
                        vid,
                        None,
                        MessagePayload::BaselineFeedback {
                            event_id: event,
                            announcer: claim.sender_vehicle,
                            target_rsu: target,
                        },
                    );
                }
            }
        }
    }

    fn relay_step(&mut self, now: SimTime, vi: usize, msg: VanetMessage) {
        let class = relay_class(msg.kind());
        if class == RelayClass::None || !self.vehicles[vi].policy.relay {
            return;
        }
        let hop_limit = self.cfg.network.hop_limit;
        let (vid, decision) = {
            let v = &self.vehicles[vi];
            let decision = match self.mode {
                ProtocolMode::Proposed => match class {
                    RelayClass::GatedEvent => relay_eligible(
                        msg.hop,
                        hop_limit,
                        TrustScore::from_milli(v.trust_milli()),
                        v.is_blocked(),
                        false,
                        msg.origin() == v.id,
                    ),
                    // Control-plane messages are passed along without the
                    // trust gate, but blocked devices stay silent.
                    _ => {
                        if msg.hop < hop_limit && !v.is_blocked() {
                            RelayDecision::Relay
                        } else {
                            RelayDecision::Drop
                        }
                    }
                },
                ProtocolMode::Baseline => {
                    if msg.hop < hop_limit {
                        RelayDecision::Relay
                    } else {
                        RelayDecision::Drop
                    }
                }
            };
            (v.id, decision)
        };
        match decision {
            RelayDecision::Relay => {
                let mut fwd = msg;
                fwd.hop += 1;
                self.send_relay(now, vid, fwd);
                if class == RelayClass::GatedEvent {
                    if let Some(delta) =
                        self.vehicles[vi].tpd.as_ref().map(|t| t.cfg.forward_reward)
                    {
                        self.apply_trust(now, vi, delta, TrustCause::ForwardReward);
                    }
                }
            }
            RelayDecision::LowTrustNotice => {
                self.send_fresh(
                    now,
                    vid,
                    None,
                    MessagePayload::LowTrustNotice { about: msg.id },
                );
            }
            RelayDecision::Drop => {}
        }
    }

    // ---- RSU behaviour ---------------------------------------------------------

    fn on_rsu_deliver(&mut self, now: SimTime, ri: usize, msg: VanetMessage) {
        if !self.rsus[ri].seen.insert(msg.id) {
            return;
        }
        match msg.payload.clone() {
            MessagePayload::Announcement(claim) => {
                if self.mode == ProtocolMode::Proposed {
                    self.rsu_learn_announcement(now, ri, claim, msg.clone());
                }
            }
            MessagePayload::UntrueReport {
                claim,
                original_message,
                target_rsu,
                reporter_driver,
            } => {
                if target_rsu == self.rsu_entity(ri) && self.mode == ProtocolMode::Proposed {
                    self.rsu_on_report(now, ri, claim, original_message, msg.origin(), reporter_driver);
                }
            }
            MessagePayload::Feedback {
                event_id,
                rsu,
                vote,
                trust,
                official,
            } => {
                if rsu == self.rsu_entity(ri) {
                    self.rsu_on_feedback(now, ri, event_id, msg.origin(), vote, trust, official);
                }
            }
            MessagePayload::BaselineFeedback {
                event_id: _,
                announcer,
                target_rsu,
            } => {
                if target_rsu == self.rsu_entity(ri) {
                    let rep = self.rsus[ri].reputations.entry(announcer).or_insert(
                        baseline::DEFAULT_REPUTATION_MILLI,
                    );
                    *rep = (*rep + 10).min(1000);
                }
            }
            MessagePayload::BlockingRequest { .. } | MessagePayload::BlockingAck { .. } => {
                self.execute(now, vec![Out::ForwardTa { rsu: ri, msg }]);
            }
            MessagePayload::BlockingConfirmation { .. } => {
                // Arrived over the wire from the authority: put it on the air.
                let mut fwd = msg;
                fwd.hop += 1;
                let from = self.rsu_entity(ri);
                self.send_relay(now, from, fwd);
            }
            MessagePayload::AttendingBy { event_id, official } => {
                if let Some(lc) = self.rsus[ri].lifecycles.get_mut(&event_id) {
                    lc.attending_official = Some(official);
                }
            }
            MessagePayload::EventSorted { event_id, .. } => {
                self.gt.get_mut(event_id).sorted = true;
                let owner = {
                    let lc = self.rsus[ri].lifecycles.get_mut(&event_id);
                    if let Some(lc) = lc {
                        lc.sorted = true;
                    }
                    self.owner_of_event(event_id) == Some(ri)
                };
                if owner {
                    self.execute(
                        now,
                        vec![Out::Peers {
                            rsu: ri,
                            info: InterRsuInfo::SortedShared { event_id },
                        }],
                    );
                }
            }
            MessagePayload::ServiceQuery { service } => {
                if let Some(loc) = self.rsus[ri].services.get(&service).cloned() {
                    let from = self.rsu_entity(ri);
                    self.send_fresh(
                        now,
                        from,
                        None,
                        MessagePayload::ServiceReply { service, location: loc },
                    );
                }
            }
            MessagePayload::InterRsuNotice(info) => self.rsu_on_notice(now, ri, info),
            _ => {}
        }
    }

    fn owner_of_event(&self, event: EventId) -> Option<usize> {
        self.rsus
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.lifecycles.get(&event).map(|lc| (i, lc.claim.location)))
            .map(|(_, loc)| self.owner_rsu(loc))
    }

    fn rsu_learn_announcement(
        &mut self,
        now: SimTime,
        ri: usize,
        claim: EventClaim,
        original: VanetMessage,
    ) {
        let event = claim.event_id;
        if self.rsus[ri].lifecycles.contains_key(&event) {
            return;
        }
        let injected = original.injected_at;
        let severe = claim.event_type.severe();
        let is_owner = self.owner_rsu(claim.location) == ri;
        self.rsus[ri].lifecycles.insert(
            event,
            EventLifecycle {
                claim: claim.clone(),
                original: original.clone(),
                rebroadcast: true,
                sorted: false,
                attending_official: None,
            },
        );
        let mut outs = vec![Out::Fresh {
            from: self.rsu_entity(ri),
            injected: Some(injected),
            payload: MessagePayload::Announcement(claim.clone()),
        }];
        if is_owner {
            outs.push(Out::Peers {
                rsu: ri,
                info: InterRsuInfo::EventShared {
                    claim: claim.clone(),
                    original: original.id,
                    injected_at: injected,
                },
            });
            outs.push(Out::ToTa {
                rsu: ri,
                payload: MessagePayload::InterRsuNotice(InterRsuInfo::IncidentForward {
                    claim,
                    original: original.id,
                }),
            });
            if severe && !self.rsus[ri].periodic_armed {
                self.rsus[ri].periodic_armed = true;
                let at = now.plus(SimTime::from_secs_f64(self.cfg.timers.reannounce_s));
                if at <= self.duration {
                    self.sched.schedule(at, Action::Periodic { rsu: ri });
                } else {
                    self.rsus[ri].periodic_armed = false;
                }
            }
        }
        self.execute(now, outs);
    }

    fn rsu_on_report(
        &mut self,
        now: SimTime,
        ri: usize,
        claim: EventClaim,
        original_message: MessageId,
        reporter: EntityId,
        reporter_driver: String,
    ) {
        let event = claim.event_id;
        if self.rsus[ri].disputed.contains(&event) {
            // Late or repeated complaint: join the open case if still live.
            let rsu = &mut self.rsus[ri];
            if let Some(case) = rsu.cases.get_mut(&event) {
                if case.state == CaseState::Collecting
                    && now <= case.deadline
                    && !case.feedback.clarifiers().contains(&reporter)
                {
                    case.add_reporter(reporter, &reporter_driver);
                    if let Some(report) = self.case_reports.get_mut(&event) {
                        if !report.reporters.contains(&reporter) {
                            report.reporters.push(reporter);
                        }
                    }
                }
            }
            return;
        }
        self.rsus[ri].disputed.insert(event);
        // A report can outrun the announcement (or refer to one this RSU
        // never heard); the embedded claim reconstructs the lifecycle.
        self.rsus[ri].lifecycles.entry(event).or_insert_with(|| {
            let synthetic = VanetMessage {
                id: original_message,
                hop: 0,
                injected_at: now,
                payload: MessagePayload::Announcement(claim.clone()),
            };
            EventLifecycle {
                claim: claim.clone(),
                original: synthetic,
                rebroadcast: false,
                sorted: false,
                attending_official: None,
            }
        });
        let deadline = now.plus(self.collaboration);
        let mut case = DisputeCase {
            event_id: event,
            claim: claim.clone(),
            original_message,
            reporters: Vec::new(),
            feedback: Default::default(),
            opened_at: now,
            deadline,
            state: CaseState::Collecting,
        };
        case.add_reporter(reporter, &reporter_driver);
        self.rsus[ri].cases.insert(event, case);
        let announced_at = self
            .announcements
            .iter()
            .find(|a| a.event_id == event)
            .map(|a| a.at)
            .unwrap_or(now);
        self.case_reports.insert(
            event,
            CaseReport {
                event_id: event,
                truthful: self.gt.is_true(event),
                announced_at,
                opened_at: now,
                decided_at: None,
                method: None,
                verdict: None,
                score_milli: 0,
                sender_vehicle: claim.sender_vehicle,
                sender_driver: claim.sender_driver.clone(),
                reporters: vec![reporter],
                clarifiers: Vec::new(),
                rewarded_drivers: Vec::new(),
                punished: Vec::new(),
                referred: false,
            },
        );
        self.sched.schedule(deadline, Action::CaseDeadline { rsu: ri, event });
        let me = self.rsu_entity(ri);
        self.execute(
            now,
            vec![
                Out::Fresh {
                    from: me,
                    injected: None,
                    payload: MessagePayload::ClarificationQuery {
                        event_id: event,
                        rsu: me,
                        location: claim.location,
                        original_message,
                        sender_vehicle: claim.sender_vehicle,
                    },
                },
                Out::Peers {
                    rsu: ri,
                    info: InterRsuInfo::DisputeOpened { event_id: event, rsu: me },
                },
            ],
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn rsu_on_feedback(
        &mut self,
        now: SimTime,
        ri: usize,
        event: EventId,
        clarifier: EntityId,
        vote: Vote,
        trust: TrustScore,
        official: bool,
    ) {
        let accept = {
            let rsu = &mut self.rsus[ri];
            let Some(case) = rsu.cases.get_mut(&event) else {
                return;
            };
            let live = match case.state {
                CaseState::Collecting => now <= case.deadline || official,
                // Officials can still settle a case that tied and was
                // referred onward.
                CaseState::Referred => official,
                CaseState::Decided => false,
            };
            let is_reporter = case.reporters.iter().any(|(v, _)| *v == clarifier);
            let is_sender = case.claim.sender_vehicle == clarifier;
            if !live || is_reporter || is_sender {
                false
            } else {
                case.feedback.push(FeedbackEntry {
                    clarifier,
                    vote,
                    trust_milli: trust.milli(),
                    official,
                })
            }
        };
        if !accept {
            return;
        }
        if let Some(report) = self.case_reports.get_mut(&event) {
            report.clarifiers.push(clarifier);
        }
        if official {
            self.decide_case(now, ri, event, Some(vote));
        }
    }

    /// Settles a dispute: by the trust-weighted vote at the deadline, or
    /// immediately when an official's feedback arrives (`forced`).
    fn decide_case(&mut self, now: SimTime, ri: usize, event: EventId, forced: Option<Vote>) {
        let vehicles = &self.vehicles;
        let is_official =
            |v: EntityId| vehicles.get(v.index()).map_or(false, |x| x.kind.is_official());
        let decision = {
            let rsu = &mut self.rsus[ri];
            let Some(case) = rsu.cases.get_mut(&event) else {
                return;
            };
            match (case.state, forced) {
                (CaseState::Collecting, _) => {}
                (CaseState::Referred, Some(_)) => {}
                _ => return,
            }
            let (_, score) = case.feedback.tally();
            let outcome = match forced {
                Some(Vote::Yes) => TallyOutcome::EventTrue,
                Some(Vote::No) => TallyOutcome::EventFalse,
                None => case.feedback.tally().0,
            };
            let via_official = forced.is_some();
            match outcome {
                TallyOutcome::Unresolved => {
                    case.state = CaseState::Referred;
                    None
                }
                _ => {
                    let ruling = resolve_case(
                        case,
                        outcome,
                        via_official,
                        self.rsu_reward_milli,
                        &self.ladder_milli,
                        &rsu.offences,
                        is_official,
                    )
                    .expect("decided outcome yields a ruling");
                    case.state = CaseState::Decided;
                    Some((ruling, score, via_official))
                }
            }
        };
        match decision {
            None => {
                let score = {
                    let case = &self.rsus[ri].cases[&event];
                    case.feedback.tally().1
                };
                self.fabric.logs.disputes.push(DisputeRecord {
                    at: now,
                    event_id: event,
                    method: DisputeMethod::Vote,
                    score_milli: score,
                    verdict: DisputeVerdict::Unresolved,
                    rewarded: Vec::new(),
                    punished: Vec::new(),
                });
                if let Some(report) = self.case_reports.get_mut(&event) {
                    report.referred = true;
                    report.verdict = Some(DisputeVerdict::Unresolved);
                    report.score_milli = score;
                    report.method = Some(DisputeMethod::Vote);
                }
                let loc = self.rsus[ri].cases[&event].claim.location;
                if let Some(official) = self.nearest_official(loc) {
                    let me = self.rsu_entity(ri);
                    self.send_fresh(
                        now,
                        me,
                        None,
                        MessagePayload::UnresolvedUntrue {
                            event_id: event,
                            target_official: official,
                        },
                    );
                }
            }
            Some((ruling, score, via_official)) => {
                self.rsus[ri].record_offences(&ruling.notice);
                let method = if via_official {
                    DisputeMethod::Official
                } else {
                    DisputeMethod::Vote
                };
                let verdict = match ruling.kind {
                    crate::message::RulingKind::EventTrue => DisputeVerdict::DecidedTrue,
                    crate::message::RulingKind::EventFalse => DisputeVerdict::DecidedFalse,
                };
                self.fabric.logs.disputes.push(DisputeRecord {
                    at: now,
                    event_id: event,
                    method,
                    score_milli: score,
                    verdict,
                    rewarded: ruling.rewarded.iter().map(|t| t.driver.clone()).collect(),
                    punished: ruling.punished.iter().map(|t| t.driver.clone()).collect(),
                });
                if let Some(report) = self.case_reports.get_mut(&event) {
                    report.decided_at = Some(now);
                    report.method = Some(method);
                    report.verdict = Some(verdict);
                    report.score_milli = score;
                    report.rewarded_drivers =
                        ruling.rewarded.iter().map(|t| t.driver.clone()).collect();
                    report.punished = ruling
                        .punished
                        .iter()
                        .map(|t| (t.driver.clone(), t.amount_milli))
                        .collect();
                }
                let mut outs = Vec::new();
                let me = self.rsu_entity(ri);
                if !ruling.rewarded.is_empty() {
                    outs.push(Out::Fresh {
                        from: me,
                        injected: None,
                        payload: MessagePayload::Reward {
                            event_id: event,
                            targets: ruling.rewarded.clone(),
                        },
                    });
                }
                if !ruling.punished.is_empty() {
                    outs.push(Out::Fresh {
                        from: me,
                        injected: None,
                        payload: MessagePayload::Punishment {
                            event_id: event,
                            targets: ruling.punished.clone(),
                        },
                    });
                }
                outs.push(Out::Peers {
                    rsu: ri,
                    info: InterRsuInfo::DecisionShared(ruling.notice.clone()),
                });
                outs.push(Out::ToTa {
                    rsu: ri,
                    payload: MessagePayload::InterRsuNotice(InterRsuInfo::RulingForward(
                        ruling.notice.clone(),
                    )),
                });
                if ruling.kind == crate::message::RulingKind::EventFalse {
                    self.gt.get_mut(event).sorted = true;
                    if let Some(lc) = self.rsus[ri].lifecycles.get_mut(&event) {
                        lc.sorted = true;
                    }
                }
                self.execute(now, outs);
            }
        }
    }

    fn rsu_on_notice(&mut self, now: SimTime, ri: usize, info: InterRsuInfo) {
        match info {
            InterRsuInfo::EventShared {
                claim,
                original,
                injected_at,
            } => {
                let event = claim.event_id;
                if self.rsus[ri].lifecycles.contains_key(&event) {
                    return;
                }
                let synthetic = VanetMessage {
                    id: original,
                    hop: 0,
                    injected_at,
                    payload: MessagePayload::Announcement(claim.clone()),
                };
                self.rsus[ri].lifecycles.insert(
                    event,
                    EventLifecycle {
                        claim: claim.clone(),
                        original: synthetic,
                        rebroadcast: true,
                        sorted: false,
                        attending_official: None,
                    },
                );
                let from = self.rsu_entity(ri);
                self.execute(
                    now,
                    vec![Out::Fresh {
                        from,
                        injected: Some(injected_at),
                        payload: MessagePayload::Announcement(claim),
                    }],
                );
            }
            InterRsuInfo::DisputeOpened { event_id, .. } => {
                self.rsus[ri].disputed.insert(event_id);
            }
            InterRsuInfo::DecisionShared(notice) => {
                self.rsus[ri].disputed.insert(notice.event_id);
                self.rsus[ri].record_offences(&notice);
                if notice.ruling == crate::message::RulingKind::EventFalse {
                    if let Some(lc) = self.rsus[ri].lifecycles.get_mut(&notice.event_id) {
                        lc.sorted = true;
                    }
                }
            }
            InterRsuInfo::SortedShared { event_id } => {
                if let Some(lc) = self.rsus[ri].lifecycles.get_mut(&event_id) {
                    lc.sorted = true;
                }
            }
            // Authority-bound notices never terminate at an RSU.
            InterRsuInfo::IncidentForward { .. } | InterRsuInfo::RulingForward(_) => {}
        }
    }

    fn on_periodic(&mut self, now: SimTime, ri: usize) {
        let due: Vec<(EventClaim, SimTime)> = self.rsus[ri]
            .lifecycles
            .values()
            .filter(|lc| {
                lc.claim.event_type.severe()
                    && !lc.sorted
                    && self.owner_rsu(lc.claim.location) == ri
                    && !self.gt.get(lc.claim.event_id).sorted
            })
            .map(|lc| (lc.claim.clone(), lc.original.injected_at))
            .collect();
        if due.is_empty() {
            self.rsus[ri].periodic_armed = false;
            return;
        }
        let from = self.rsu_entity(ri);
        let outs = due
            .into_iter()
            .map(|(claim, injected)| Out::Fresh {
                from,
                injected: Some(injected),
                payload: MessagePayload::Announcement(claim),
            })
            .collect();
        self.execute(now, outs);
        let next = now.plus(SimTime::from_secs_f64(self.cfg.timers.reannounce_s));
        if next <= self.duration {
            self.sched.schedule(next, Action::Periodic { rsu: ri });
        } else {
            self.rsus[ri].periodic_armed = false;
        }
    }

    fn on_reputation_tick(&mut self, now: SimTime, ri: usize) {
        let reputations: Vec<(EntityId, i32)> = self.rsus[ri]
            .reputations
            .iter()
            .map(|(v, r)| (*v, *r))
            .collect();
        let from = self.rsu_entity(ri);
        self.send_fresh(now, from, None, MessagePayload::ReputationUpdate { reputations });
        let next = now.plus(SimTime::from_secs_f64(self.cfg.protocol.reputation_broadcast_s));
        if next <= self.duration {
            self.sched.schedule(next, Action::ReputationTick { rsu: ri });
        }
    }

    fn on_baseline_decide(&mut self, now: SimTime, vi: usize, event: EventId) {
        let scenario = self.gt.get(event).scenario;
        let logs = &mut self.fabric.logs;
        let v = &mut self.vehicles[vi];
        let Some(buf) = v.baseline.buffers.get(&event) else {
            return;
        };
        if !v.decided.insert(event) {
            return;
        }
        let _verdict = baseline::decide(
            &buf.claims,
            &v.baseline.reputations,
            self.cfg.protocol.baseline_scheme,
        );
        // The timer was armed while the vehicle was a pure receiver
        // (witnesses never arm one), so the expiry is a decision even if the
        // vehicle drove past the scene in the meantime.
        if scenario {
            logs.decisions.push(DecisionRecord {
                at: now,
                vehicle: v.id,
                event_id: event,
                latency: now.since(buf.earliest_injected),
            });
        }
    }

    fn on_inspection(&mut self, now: SimTime, vi: usize, event: EventId, rsu: EntityId) {
        if !self.vehicles[vi].spawned {
            return;
        }
        let truthful = self.gt.is_true(event);
        let vote = if truthful { Vote::Yes } else { Vote::No };
        let me = self.vehicles[vi].id;
        self.send_fresh(
            now,
            me,
            None,
            MessagePayload::Feedback {
                event_id: event,
                rsu,
                vote,
                trust: TrustScore::from_milli(1000),
                official: true,
            },
        );
        if truthful && self.gt.get(event).event_type.severe() {
            let at = now.plus(SimTime::from_secs_f64(self.cfg.timers.official_sort_s));
            self.sched.schedule(at, Action::SortScene { v: vi, event });
        }
    }

    fn on_sort_scene(&mut self, now: SimTime, vi: usize, event: EventId) {
        if self.gt.get(event).sorted {
            return;
        }
        self.gt.get_mut(event).sorted = true;
        let me = self.vehicles[vi].id;
        self.send_fresh(
            now,
            me,
            None,
            MessagePayload::EventSorted {
                event_id: event,
                official: me,
            },
        );
    }

    // ---- TA behaviour --------------------------------------------------------

    fn on_ta_deliver(&mut self, now: SimTime, msg: VanetMessage) {
        if !self.ta_seen.insert(msg.id) {
            return;
        }
        match msg.payload {
            MessagePayload::InterRsuNotice(InterRsuInfo::IncidentForward { claim, .. }) => {
                self.ta.record_incident(&claim, now);
            }
            MessagePayload::InterRsuNotice(InterRsuInfo::RulingForward(notice)) => {
                let to_block = self.ta.record_ruling(&notice, now);
                for driver in to_block {
                    self.ta.block_driver(&driver, now);
                    let vehicle = notice
                        .losers
                        .iter()
                        .find(|(d, _)| *d == driver)
                        .map(|(_, v)| *v)
                        .or_else(|| self.ta.drivers.get(&driver).map(|r| r.vehicle));
                    if let Some(vehicle) = vehicle {
                        self.send_blocking_confirmations(now, notice.location, vehicle, &driver);
                    }
                }
            }
            MessagePayload::BlockingRequest {
                vehicle,
                driver,
                position,
            } => match self.ta.handle_blocking_request(&driver, now) {
                BlockingResponse::NewlyBlocked | BlockingResponse::AlreadyBlocked => {
                    self.send_blocking_confirmations(now, position, vehicle, &driver);
                }
                BlockingResponse::UnknownDriver => {}
            },
            MessagePayload::BlockingAck { .. } => {}
            _ => {}
        }
    }

    fn send_blocking_confirmations(
        &mut self,
        now: SimTime,
        loc: Vec2,
        vehicle: EntityId,
        driver: &str,
    ) {
        let outs: Vec<Out> = self
            .vicinity_rsus(loc)
            .into_iter()
            .map(|ri| Out::ToRsu {
                rsu: ri,
                payload: MessagePayload::BlockingConfirmation {
                    vehicle,
                    driver: driver.to_string(),
                },
            })
            .collect();
        self.execute(now, outs);
    }

    // ---- wrap-up ---------------------------------------------------------------

    fn finish(mut self) -> RunOutput {
        let mut final_trust = Vec::new();
        for v in &self.vehicles {
            if let Some(tpd) = &v.tpd {
                for p in tpd.profiles() {
                    final_trust.push(FinalTrustRow {
                        driver: p.driver_id.clone(),
                        vehicle: v.id,
                        trust: p.trust,
                        blocked: p.blocked,
                    });
                }
            }
        }
        let blocked_drivers: Vec<String> = self
            .ta
            .drivers
            .values()
            .filter(|r| r.blocked)
            .map(|r| r.driver.clone())
            .collect();
        let officials = self
            .vehicles
            .iter()
            .filter(|v| v.kind.is_official())
            .map(|v| v.id)
            .collect();
        let relay_enabled = self.vehicles.iter().map(|v| v.policy.relay).collect();
        let cases = std::mem::take(&mut self.case_reports).into_values().collect();
        RunOutput {
            scenario: self.cfg.name.clone(),
            seed: self.seed,
            mode: self.mode,
            duration: self.duration,
            warmup: SimTime::from_secs_f64(self.cfg.simulation.warmup_s),
            count_beacons: self.cfg.metrics.count_beacons,
            hop_limit: self.cfg.network.hop_limit,
            trust_floor: TrustScore::from_f64(self.cfg.trust.floor).expect("validated floor"),
            trust_cap: TrustScore::from_f64(self.cfg.trust.cap).expect("validated cap"),
            ladder_milli: self.ladder_milli.clone(),
            names: self.names,
            vehicle_count: self.vehicles.len(),
            rsu_count: self.rsus.len(),
            officials,
            relay_enabled,
            logs: self.fabric.logs,
            announcements: self.announcements,
            cases,
            scenario_events: self.scenario_events,
            final_trust,
            blocked_drivers,
            ta_drivers_csv: self.ta.drivers_csv(),
            ta_incidents_csv: self.ta.incidents_csv(),
            ta_rulings_csv: self.ta.rulings_csv(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    fn tiny_config() -> ScenarioConfig {
        let toml = r#"
            name = "tiny"

            [[routes]]
            name = "loop"
            waypoints = [[-100.0, -100.0], [100.0, -100.0], [100.0, 100.0], [-100.0, 100.0]]

            [[rsus]]
            name = "rsu-0"
            position = [0.0, 0.0]

            [[vehicles]]
            name = "a"
            route = "loop"
            speed_mps = 10.0

            [[vehicles]]
            name = "b"
            route = "loop"
            speed_mps = 10.0
            start_offset_m = 400.0

            [simulation]
            duration_s = 60.0
        "#;
        ScenarioConfig::from_toml(toml).unwrap()
    }

    #[test]
    fn runs_to_completion_and_logs_beacons() {
        let cfg = tiny_config();
        cfg.validate().unwrap();
        let out = World::build(cfg, 7).run();
        assert_eq!(out.vehicle_count, 2);
        let beacons = out
            .logs
            .messages
            .iter()
            .filter(|m| m.kind == crate::message::MessageKind::Beacon)
            .count();
        // Two vehicles beaconing every 10 s over 60 s, first beacon at 10 s.
        assert_eq!(beacons, 12);
    }

    #[test]
    fn identical_seeds_identical_logs() {
        let cfg = tiny_config();
        let a = World::build(cfg.clone(), 3).run();
        let b = World::build(cfg, 3).run();
        assert_eq!(
            a.logs.messages_csv(&a.names),
            b.logs.messages_csv(&b.names)
        );
        assert_eq!(a.logs.trust_csv(), b.logs.trust_csv());
    }

    #[test]
    fn scripted_untrue_claim_is_punished_and_logged() {
        let toml = r#"
            name = "dispute"

            [[routes]]
            name = "loop"
            waypoints = [[-100.0, -100.0], [100.0, -100.0], [100.0, 100.0], [-100.0, 100.0]]

            [[rsus]]
            name = "rsu-0"
            position = [0.0, 0.0]

            [trust]
            initial = 0.9

            [[vehicles]]
            name = "liar"
            route = "loop"
            speed_mps = 12.5
            [[vehicles.announcements]]
            at_s = 50.0
            event_type = "accident"
            truthful = false
            observe_lead_s = 5.0

            [[vehicles]]
            name = "accuser"
            route = "loop"
            speed_mps = 12.5
            start_offset_m = 200.0
            [[vehicles.scripted_complaints]]
            at_s = 51.0
            announcer = "liar"
            announcement_index = 0

            [[vehicles]]
            name = "judge"
            route = "loop"
            speed_mps = 12.5
            start_offset_m = 400.0
            [vehicles.policy]
            clarify_mode = "ground_truth"

            [simulation]
            duration_s = 300.0
        "#;
        let cfg = ScenarioConfig::from_toml(toml).unwrap();
        cfg.validate().unwrap();
        let out = World::build(cfg, 11).run();
        assert_eq!(out.cases.len(), 1);
        let case = &out.cases[0];
        assert_eq!(case.verdict, Some(crate::logs::DisputeVerdict::DecidedFalse));
        assert_eq!(case.punished.len(), 1);
        assert_eq!(case.punished[0].0, "liar-d0");
        assert_eq!(case.punished[0].1, -100);
        let punished_row = out
            .logs
            .trust
            .iter()
            .find(|r| r.cause.starts_with("rsu_punishment"))
            .expect("punishment row in the trust trace");
        assert_eq!(punished_row.driver, "liar-d0");
    }
}
