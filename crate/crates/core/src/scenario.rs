//! Scenario configuration: the TOML schema accepted by the CLI and produced
//! by the built-in presets.

use crate::message::EventType;
use crate::trust::{TrustError, TrustScore, TRUST_SCALE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid trust value {0}: {1}")]
    Trust(&'static str, TrustError),
    #[error("vehicle `{0}` references unknown route `{1}`")]
    UnknownRoute(String, String),
    #[error("vehicle `{0}` needs either a route or a fixed position")]
    NoPlacement(String),
    #[error("duplicate {0} name `{1}`")]
    DuplicateName(&'static str, String),
    #[error("vehicle `{0}` speed {1} m/s exceeds the {2} m/s limit")]
    TooFast(String, f64, f64),
    #[error("rsu `{0}` references unknown neighbour `{1}`")]
    UnknownNeighbour(String, String),
    #[error("scripted complaint in `{0}` references unknown announcer `{1}`")]
    UnknownAnnouncer(String, String),
    #[error("{0}")]
    Invalid(String),
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationCfg {
    pub duration_s: f64,
    pub warmup_s: f64,
    pub mobility_tick_s: f64,
    pub beacon_interval_s: f64,
    /// Vehicles within this distance of an event location count as having
    /// visited it.
    pub visit_radius_m: f64,
    pub max_speed_mps: f64,
}

impl Default for SimulationCfg {
    fn default() -> Self {
        Self {
            duration_s: 600.0,
            warmup_s: 0.0,
            mobility_tick_s: 1.0,
            beacon_interval_s: 10.0,
            visit_radius_m: 50.0,
            max_speed_mps: 80.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkCfg {
    pub transmission_range_m: f64,
    pub hop_latency_ms: u64,
    pub rsu_wired_latency_ms: u64,
    pub ta_wired_latency_ms: u64,
    pub hop_limit: u8,
    pub retransmit_limit: u8,
}

impl Default for NetworkCfg {
    fn default() -> Self {
        Self {
            transmission_range_m: 300.0,
            hop_latency_ms: 5,
            rsu_wired_latency_ms: 10,
            ta_wired_latency_ms: 20,
            hop_limit: 4,
            retransmit_limit: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustCfg {
    pub initial: f64,
    pub floor: f64,
    pub cap: f64,
    pub beacon_reward: f64,
    pub forward_reward: f64,
    pub clarify_reward: f64,
    pub report_reward: f64,
    pub rsu_reward: f64,
    /// Escalating punishment ladder indexed by the driver's prior offences.
    pub punishment_ladder: Vec<f64>,
    pub reward_withhold_s: f64,
    pub blocking_check_s: f64,
}

impl Default for TrustCfg {
    fn default() -> Self {
        Self {
            initial: 0.45,
            floor: 0.05,
            cap: 0.9,
            beacon_reward: 0.005,
            forward_reward: 0.01,
            clarify_reward: 0.02,
            report_reward: 0.02,
            rsu_reward: 0.08,
            punishment_ladder: vec![0.1, 0.3, 0.5],
            reward_withhold_s: 120.0,
            blocking_check_s: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimersCfg {
    /// How long an RSU collects clarifier feedback before tallying.
    pub collaboration_s: f64,
    /// Recent-visit window for filing an untrue report.
    pub report_visit_window_s: f64,
    /// Recent-visit window for answering a clarification query.
    pub clarify_visit_window_s: f64,
    /// RSU periodic re-announcement interval for open events.
    pub reannounce_s: f64,
    /// Delay before an official vehicle reports back on a referred dispute.
    pub official_inspect_s: f64,
    /// Delay after which an attending official declares the scene sorted.
    pub official_sort_s: f64,
}

impl Default for TimersCfg {
    fn default() -> Self {
        Self {
            collaboration_s: 120.0,
            report_visit_window_s: 120.0,
            clarify_visit_window_s: 120.0,
            reannounce_s: 60.0,
            official_inspect_s: 10.0,
            official_sort_s: 30.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthorityCfg {
    /// RSUs within this distance of the last offence receive the blocking
    /// confirmation.
    pub vicinity_radius_m: f64,
    /// Sliding window for counting malicious rulings; omitted = whole run.
    pub malicious_window_s: Option<f64>,
    /// Rulings against a driver within the window before blocking.
    pub malicious_threshold: u32,
}

impl Default for AuthorityCfg {
    fn default() -> Self {
        Self {
            vicinity_radius_m: 600.0,
            malicious_window_s: None,
            malicious_threshold: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// Sender-side trust enforcement in the tamper-proof device.
    Proposed,
    /// Receiver-side reputation voting with buffered decisions.
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScheme {
    MajorityVote,
    WeightedByReputation,
    HighestReputation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolCfg {
    pub mode: ProtocolMode,
    /// How long a baseline receiver buffers claims before deciding.
    pub baseline_timer_s: f64,
    pub baseline_scheme: BaselineScheme,
    /// Interval at which baseline RSUs broadcast the reputation table.
    pub reputation_broadcast_s: f64,
    /// Baseline receivers acknowledge each received event claim with a
    /// feedback message toward the RSU.
    pub baseline_feedback: bool,
    /// In the proposed protocol, the first vehicle to pass a scenario event
    /// announces it.
    pub auto_witness: bool,
    /// In the baseline, every vehicle passing a scenario event announces it.
    pub baseline_all_witnesses: bool,
}

impl Default for ProtocolCfg {
    fn default() -> Self {
        Self {
            mode: ProtocolMode::Proposed,
            baseline_timer_s: 30.0,
            baseline_scheme: BaselineScheme::WeightedByReputation,
            reputation_broadcast_s: 60.0,
            baseline_feedback: true,
            auto_witness: false,
            baseline_all_witnesses: true,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsCfg {
    /// Count beacons in overhead totals (off by default: they are identical
    /// in both protocols).
    pub count_beacons: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteCfg {
    pub name: String,
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default = "default_true")]
    pub closed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceCfg {
    pub name: String,
    #[serde(default)]
    pub location: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsuCfg {
    pub name: String,
    pub position: [f64; 2],
    #[serde(default)]
    pub services: Vec<ServiceCfg>,
    /// Wired peers for inter-RSU notices; empty = all other RSUs.
    #[serde(default)]
    pub neighbors: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKindCfg {
    Regular,
    Police,
    Ambulance,
    FireService,
}

impl VehicleKindCfg {
    pub fn is_official(self) -> bool {
        !matches!(self, VehicleKindCfg::Regular)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    /// Report only claims that contradict ground truth.
    GroundTruth,
    /// Report any received claim regardless of its truth.
    Indiscriminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClarifyMode {
    None,
    /// Answer according to ground truth.
    GroundTruth,
    /// Answer YES with `clarify_yes_probability`, NO otherwise.
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyCfg {
    /// Chance of filing an untrue-event report when eligible.
    pub report_probability: f64,
    pub report_mode: ReportMode,
    pub clarify_mode: ClarifyMode,
    pub clarify_yes_probability: f64,
    pub relay: bool,
}

impl Default for PolicyCfg {
    fn default() -> Self {
        Self {
            report_probability: 0.0,
            report_mode: ReportMode::GroundTruth,
            clarify_mode: ClarifyMode::GroundTruth,
            clarify_yes_probability: 0.5,
            relay: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnounceCfg {
    pub at_s: f64,
    pub event_type: EventType,
    /// Whether the claimed event really exists.
    pub truthful: bool,
    /// Claimed location; defaults to the vehicle's position at send time.
    #[serde(default)]
    pub location: Option<[f64; 2]>,
    /// Claimed observation lead: `observed_at = at - lead`.
    #[serde(default)]
    pub observe_lead_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedComplaintCfg {
    pub at_s: f64,
    /// Name of the vehicle whose announcement is contested.
    pub announcer: String,
    /// Index into that vehicle's announcement schedule.
    pub announcement_index: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceQueryCfg {
    pub at_s: f64,
    pub service: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleCfg {
    pub name: String,
    #[serde(default = "VehicleCfg::default_kind")]
    pub kind: VehicleKindCfg,
    #[serde(default)]
    pub route: Option<String>,
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    #[serde(default)]
    pub speed_mps: f64,
    /// Starting distance along the route.
    #[serde(default)]
    pub start_offset_m: f64,
    /// Draw the start offset uniformly from the route length instead.
    #[serde(default)]
    pub random_start_offset: bool,
    #[serde(default)]
    pub spawn_s: f64,
    /// Driver identity registered with the authority; defaults to
    /// `<name>-d0`.
    #[serde(default)]
    pub driver: Option<String>,
    #[serde(default)]
    pub policy: PolicyCfg,
    #[serde(default)]
    pub announcements: Vec<AnnounceCfg>,
    #[serde(default)]
    pub scripted_complaints: Vec<ScriptedComplaintCfg>,
    #[serde(default)]
    pub service_queries: Vec<ServiceQueryCfg>,
    /// Expand into this many identical vehicles (`name-0`, `name-1`, ...).
    #[serde(default)]
    pub count: Option<usize>,
}

impl VehicleCfg {
    fn default_kind() -> VehicleKindCfg {
        VehicleKindCfg::Regular
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEventCfg {
    pub at_s: f64,
    pub location: [f64; 2],
    pub event_type: EventType,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub simulation: SimulationCfg,
    pub network: NetworkCfg,
    pub trust: TrustCfg,
    pub timers: TimersCfg,
    pub authority: AuthorityCfg,
    pub protocol: ProtocolCfg,
    pub metrics: MetricsCfg,
    pub routes: Vec<RouteCfg>,
    pub rsus: Vec<RsuCfg>,
    pub vehicles: Vec<VehicleCfg>,
    /// Real roadside incidents that exist independently of any announcement.
    pub events: Vec<ScenarioEventCfg>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "unnamed".to_string(),
            simulation: SimulationCfg::default(),
            network: NetworkCfg::default(),
            trust: TrustCfg::default(),
            timers: TimersCfg::default(),
            authority: AuthorityCfg::default(),
            protocol: ProtocolCfg::default(),
            metrics: MetricsCfg::default(),
            routes: Vec::new(),
            rsus: Vec::new(),
            vehicles: Vec::new(),
            events: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config serializes")
    }

    /// Expands `count` templates into individual vehicle entries.
    pub fn expanded_vehicles(&self) -> Vec<VehicleCfg> {
        let mut out = Vec::new();
        for v in &self.vehicles {
            match v.count {
                None | Some(1) => out.push(v.clone()),
                Some(n) => {
                    for i in 0..n {
                        let mut c = v.clone();
                        c.name = format!("{}-{i}", v.name);
                        c.driver = v.driver.as_ref().map(|d| format!("{d}-{i}"));
                        c.count = None;
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (field, value) in [
            ("initial", self.trust.initial),
            ("floor", self.trust.floor),
            ("cap", self.trust.cap),
        ] {
            TrustScore::from_f64(value).map_err(|e| ScenarioError::Trust(field, e))?;
        }
        if !(self.trust.floor <= self.trust.initial && self.trust.initial <= self.trust.cap) {
            return Err(ScenarioError::Invalid(format!(
                "trust values must satisfy floor <= initial <= cap, got {} <= {} <= {}",
                self.trust.floor, self.trust.initial, self.trust.cap
            )));
        }
        for p in &self.trust.punishment_ladder {
            if *p <= 0.0 || (p * TRUST_SCALE).round() != p * TRUST_SCALE {
                return Err(ScenarioError::Invalid(format!(
                    "punishment ladder entry {p} must be a positive multiple of 0.001"
                )));
            }
        }
        if self.trust.punishment_ladder.is_empty() {
            return Err(ScenarioError::Invalid(
                "punishment ladder must not be empty".to_string(),
            ));
        }

        let mut route_names = BTreeSet::new();
        for r in &self.routes {
            if !route_names.insert(r.name.clone()) {
                return Err(ScenarioError::DuplicateName("route", r.name.clone()));
            }
            if r.waypoints.is_empty() {
                return Err(ScenarioError::Invalid(format!(
                    "route `{}` has no waypoints",
                    r.name
                )));
            }
        }

        let mut rsu_names = BTreeSet::new();
        for r in &self.rsus {
            if !rsu_names.insert(r.name.clone()) {
                return Err(ScenarioError::DuplicateName("rsu", r.name.clone()));
            }
        }
        for r in &self.rsus {
            for n in &r.neighbors {
                if !rsu_names.contains(n) {
                    return Err(ScenarioError::UnknownNeighbour(r.name.clone(), n.clone()));
                }
            }
        }
        if self.rsus.is_empty() {
            return Err(ScenarioError::Invalid(
                "at least one rsu is required".to_string(),
            ));
        }

        let vehicles = self.expanded_vehicles();
        let mut vehicle_names = BTreeSet::new();
        for v in &vehicles {
            if !vehicle_names.insert(v.name.clone()) {
                return Err(ScenarioError::DuplicateName("vehicle", v.name.clone()));
            }
            match (&v.route, &v.position) {
                (None, None) => return Err(ScenarioError::NoPlacement(v.name.clone())),
                (Some(r), _) if !route_names.contains(r) => {
                    return Err(ScenarioError::UnknownRoute(v.name.clone(), r.clone()))
                }
                _ => {}
            }
            if v.speed_mps > self.simulation.max_speed_mps {
                return Err(ScenarioError::TooFast(
                    v.name.clone(),
                    v.speed_mps,
                    self.simulation.max_speed_mps,
                ));
            }
            if !(0.0..=1.0).contains(&v.policy.report_probability)
                || !(0.0..=1.0).contains(&v.policy.clarify_yes_probability)
            {
                return Err(ScenarioError::Invalid(format!(
                    "vehicle `{}` has a probability outside [0, 1]",
                    v.name
                )));
            }
        }
        for v in &vehicles {
            for c in &v.scripted_complaints {
                if !vehicle_names.contains(&c.announcer) {
                    return Err(ScenarioError::UnknownAnnouncer(
                        v.name.clone(),
                        c.announcer.clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn driver_of(v: &VehicleCfg) -> String {
        v.driver.clone().unwrap_or_else(|| format!("{}-d0", v.name))
    }
}
