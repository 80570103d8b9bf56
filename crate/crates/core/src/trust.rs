//! Tamper-proof device (TPD): per-driver trust bookkeeping on the sender side.
//!
//! Trust lives on the vehicle, not with receivers. The TPD clamps regular
//! drivers to [floor, cap], assesses announcement quality from position
//! difference and delay, withholds rewards for a grace window, discards a
//! withheld reward if a complaint arrives first, and raises a blocking
//! request when trust sits at the floor.
//!
//! Scores are stored in integer thousandths ("milli" units). Every magnitude
//! the framework uses is a multiple of 0.001, so arithmetic, clamping and
//! band edges are exact, which keeps runs bit-reproducible.

use crate::ids::MessageId;
use crate::time::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

pub const TRUST_SCALE: f64 = 1000.0;

/// A trust score in [0, 1], stored in thousandths.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub struct TrustScore(i32);

impl TrustScore {
    /// Trust carried by official vehicles; never stored in a TPD profile.
    pub const OFFICIAL: TrustScore = TrustScore(1000);

    pub fn from_milli(milli: i32) -> Self {
        assert!((0..=1000).contains(&milli), "trust out of range: {milli}");
        TrustScore(milli)
    }

    /// Parses an f64 that must sit on the 0.001 grid (e.g. config values).
    pub fn from_f64(v: f64) -> Result<Self, TrustError> {
        let scaled = v * TRUST_SCALE;
        let rounded = scaled.round();
        if !(0.0..=1000.0).contains(&rounded) || (scaled - rounded).abs() > 1e-6 {
            return Err(TrustError::OffGrid(v));
        }
        Ok(TrustScore(rounded as i32))
    }

    pub fn milli(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / TRUST_SCALE
    }
}

impl fmt::Display for TrustScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.value())
    }
}

/// A signed trust adjustment in thousandths.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub struct TrustDelta(i32);

impl TrustDelta {
    pub const ZERO: TrustDelta = TrustDelta(0);

    pub fn from_milli(milli: i32) -> Self {
        TrustDelta(milli)
    }

    pub fn from_f64(v: f64) -> Result<Self, TrustError> {
        let scaled = v * TRUST_SCALE;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 {
            return Err(TrustError::OffGrid(v));
        }
        Ok(TrustDelta(rounded as i32))
    }

    pub fn milli(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / TRUST_SCALE
    }

    pub fn is_punishment(self) -> bool {
        self.0 < 0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("value {0} is not on the 0.001 trust grid")]
    OffGrid(f64),
    #[error("a withheld reward for message {0} already exists")]
    DuplicatePending(MessageId),
}

/// Discrete trust bands. Exactly one band holds for any score.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum TrustBand {
    Blocked,
    NotTrusted,
    LowlyTrusted,
    Trusted,
    HighlyTrusted,
}

impl TrustBand {
    pub fn of(score: TrustScore) -> TrustBand {
        let m = score.milli();
        if m <= 50 {
            TrustBand::Blocked
        } else if m <= 250 {
            TrustBand::NotTrusted
        } else if m < 500 {
            TrustBand::LowlyTrusted
        } else if m < 900 {
            TrustBand::Trusted
        } else {
            TrustBand::HighlyTrusted
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TrustBand::Blocked => "blocked",
            TrustBand::NotTrusted => "not_trusted",
            TrustBand::LowlyTrusted => "lowly_trusted",
            TrustBand::Trusted => "trusted",
            TrustBand::HighlyTrusted => "highly_trusted",
        }
    }
}

/// Announcement quality as measured by the TPD at send time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnouncementMetrics {
    /// Distance in metres between the claimed event location and the
    /// vehicle's position when announcing.
    pub pos_diff_m: f64,
    /// Seconds elapsed between observing the event and announcing it.
    pub delay_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardAssessment {
    pub amount: TrustDelta,
    /// True when the selected tier is one of the punishment tiers; such
    /// amounts are applied immediately instead of being withheld.
    pub long_delayed: bool,
}

/// Tier upper bounds (exclusive) for the position-difference dimension, in
/// metres. Values at or above the last bound fall in the final tier.
pub const POS_DIFF_BOUNDS_M: [f64; 5] = [300.0, 500.0, 800.0, 1200.0, 1500.0];
/// Tier upper bounds (exclusive) for the delay dimension, in seconds.
pub const DELAY_BOUNDS_S: [f64; 5] = [15.0, 30.0, 60.0, 120.0, 150.0];
/// Reward amount per tier, in trust thousandths. The last two tiers punish.
pub const TIER_AMOUNTS_MILLI: [i32; 6] = [80, 60, 50, 10, -10, -50];

fn tier_index(bounds: &[f64; 5], v: f64) -> usize {
    bounds.iter().position(|b| v < *b).unwrap_or(bounds.len())
}

/// Grades an announcement on both dimensions and keeps the worse outcome.
pub fn assess_reward(metrics: &AnnouncementMetrics) -> RewardAssessment {
    let by_pos = TIER_AMOUNTS_MILLI[tier_index(&POS_DIFF_BOUNDS_M, metrics.pos_diff_m)];
    let by_delay = TIER_AMOUNTS_MILLI[tier_index(&DELAY_BOUNDS_S, metrics.delay_s)];
    let amount = by_pos.min(by_delay);
    RewardAssessment {
        amount: TrustDelta::from_milli(amount),
        long_delayed: amount < 0,
    }
}

/// TPD configuration. All values are scenario-level knobs.
#[derive(Clone, Debug, PartialEq)]
pub struct TpdConfig {
    pub initial: TrustScore,
    pub floor: TrustScore,
    pub cap: TrustScore,
    pub beacon_reward: TrustDelta,
    pub forward_reward: TrustDelta,
    pub clarify_reward: TrustDelta,
    pub report_reward: TrustDelta,
    /// Grace window before a withheld reward lands.
    pub withhold: SimTime,
    /// Period of the blocking-request checker once trust sits at the floor.
    pub blocking_check: SimTime,
}

impl Default for TpdConfig {
    fn default() -> Self {
        TpdConfig {
            initial: TrustScore::from_milli(450),
            floor: TrustScore::from_milli(50),
            cap: TrustScore::from_milli(900),
            beacon_reward: TrustDelta::from_milli(5),
            forward_reward: TrustDelta::from_milli(10),
            clarify_reward: TrustDelta::from_milli(20),
            report_reward: TrustDelta::from_milli(20),
            withhold: SimTime::from_secs(120),
            blocking_check: SimTime::from_secs(10),
        }
    }
}

/// A reward parked until its release time, unless a complaint lands first.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingReward {
    pub message_id: MessageId,
    pub amount: TrustDelta,
    pub release_at: SimTime,
}

#[derive(Clone, Debug)]
pub struct DriverProfile {
    pub driver_id: String,
    pub trust: TrustScore,
    pub blocked: bool,
    /// Latched when a punishment drives trust down onto the floor. Keeps the
    /// blocking checker armed even if small rewards later lift trust slightly
    /// above the floor before the authority confirms the block.
    pub floor_pinned: bool,
    pub pending: Vec<PendingReward>,
    /// Message ids of this driver's announcements that received complaints.
    pub complaints: BTreeSet<MessageId>,
    /// Message ids this driver has announced (complaint validation).
    pub announced: BTreeSet<MessageId>,
}

impl DriverProfile {
    fn new(driver_id: String, initial: TrustScore) -> Self {
        DriverProfile {
            driver_id,
            trust: initial,
            blocked: false,
            floor_pinned: false,
            pending: Vec::new(),
            complaints: BTreeSet::new(),
            announced: BTreeSet::new(),
        }
    }
}

/// Reason attached to a trust change, rendered into the trust trace log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrustCause {
    Init,
    BeaconReward,
    ForwardReward,
    ClarifyReward,
    ReportReward,
    RewardReleased(MessageId),
    RewardDiscarded(MessageId),
    RsuReward,
    RsuPunishment,
    Blocked,
    Unblocked,
    DriverSwitch,
}

impl TrustCause {
    pub fn label(self) -> String {
        match self {
            TrustCause::Init => "init".into(),
            TrustCause::BeaconReward => "beacon_reward".into(),
            TrustCause::ForwardReward => "forward_reward".into(),
            TrustCause::ClarifyReward => "clarify_reward".into(),
            TrustCause::ReportReward => "report_reward".into(),
            TrustCause::RewardReleased(m) => format!("reward_released:{m}"),
            TrustCause::RewardDiscarded(m) => format!("reward_discarded:{m}"),
            TrustCause::RsuReward => "rsu_reward".into(),
            TrustCause::RsuPunishment => "rsu_punishment".into(),
            TrustCause::Blocked => "blocked".into(),
            TrustCause::Unblocked => "unblocked".into(),
            TrustCause::DriverSwitch => "driver_switch".into(),
        }
    }
}

/// Outcome of applying a delta to the active profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Applied {
    pub trust: TrustScore,
    /// Trust just arrived at the floor from above: start the blocking checker.
    pub hit_floor: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReleaseOutcome {
    Applied { message_id: MessageId, applied: Applied },
    Discarded { message_id: MessageId },
    SkippedBlocked { message_id: MessageId },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComplaintOutcome {
    Recorded,
    Duplicate,
    UnknownMessage,
}

/// The tamper-proof device of one vehicle. Holds a profile per driver; one
/// driver is active at a time.
#[derive(Clone, Debug)]
pub struct Tpd {
    pub cfg: TpdConfig,
    profiles: Vec<DriverProfile>,
    current: usize,
}

impl Tpd {
    pub fn new(cfg: TpdConfig, driver_id: &str) -> Self {
        let initial = cfg.initial;
        Tpd {
            cfg,
            profiles: vec![DriverProfile::new(driver_id.to_string(), initial)],
            current: 0,
        }
    }

    pub fn current(&self) -> &DriverProfile {
        &self.profiles[self.current]
    }

    pub fn current_mut(&mut self) -> &mut DriverProfile {
        &mut self.profiles[self.current]
    }

    pub fn profiles(&self) -> &[DriverProfile] {
        &self.profiles
    }

    pub fn profile(&self, driver_id: &str) -> Option<&DriverProfile> {
        self.profiles.iter().find(|p| p.driver_id == driver_id)
    }

    /// Suspends the active profile and activates (or creates) the profile
    /// for `driver_id`. Switching to the active driver is a no-op. Returns
    /// true when a fresh profile was created.
    pub fn switch_driver(&mut self, driver_id: &str) -> bool {
        if let Some(idx) = self.profiles.iter().position(|p| p.driver_id == driver_id) {
            self.current = idx;
            false
        } else {
            self.profiles
                .push(DriverProfile::new(driver_id.to_string(), self.cfg.initial));
            self.current = self.profiles.len() - 1;
            true
        }
    }

    /// Applies a delta to the active profile with clamping. Blocked profiles
    /// only accept RSU punishments (which cannot move them off the floor).
    /// Returns None when the update is skipped.
    pub fn apply_delta(&mut self, delta: TrustDelta) -> Option<Applied> {
        let floor = self.cfg.floor.milli();
        let cap = self.cfg.cap.milli();
        let p = self.current_mut();
        if p.blocked && !delta.is_punishment() {
            return None;
        }
        let old = p.trust.milli();
        let new = (old + delta.milli()).clamp(floor, cap);
        p.trust = TrustScore::from_milli(new);
        let hit_floor = old > floor && new == floor;
        if hit_floor {
            p.floor_pinned = true;
        }
        Some(Applied {
            trust: p.trust,
            hit_floor,
        })
    }

    /// True when the periodic beacon reward applies right now.
    pub fn beacon_reward_due(&self) -> bool {
        let p = self.current();
        !p.blocked && p.trust.milli() < 500
    }

    /// Records an announcement so later complaints can be validated.
    pub fn note_announcement(&mut self, message_id: MessageId) {
        self.current_mut().announced.insert(message_id);
    }

    /// Parks a reward until `now + withhold`. Duplicate ids are an error.
    pub fn withhold_reward(
        &mut self,
        message_id: MessageId,
        amount: TrustDelta,
        now: SimTime,
    ) -> Result<SimTime, TrustError> {
        let release_at = now.plus(self.cfg.withhold);
        let p = self.current_mut();
        if p.pending.iter().any(|r| r.message_id == message_id) {
            return Err(TrustError::DuplicatePending(message_id));
        }
        p.pending.push(PendingReward {
            message_id,
            amount,
            release_at,
        });
        Ok(release_at)
    }

    /// Releases every pending reward that is due. A complaint received during
    /// the withhold window cancels the reward without touching trust.
    pub fn release_due(&mut self, now: SimTime) -> Vec<ReleaseOutcome> {
        let due: Vec<PendingReward> = {
            let p = self.current_mut();
            let mut due = Vec::new();
            let mut keep = Vec::new();
            for r in p.pending.drain(..) {
                if r.release_at <= now {
                    due.push(r);
                } else {
                    keep.push(r);
                }
            }
            p.pending = keep;
            due
        };
        let mut out = Vec::new();
        for r in due {
            if self.current().complaints.contains(&r.message_id) {
                out.push(ReleaseOutcome::Discarded {
                    message_id: r.message_id,
                });
            } else if self.current().blocked {
                out.push(ReleaseOutcome::SkippedBlocked {
                    message_id: r.message_id,
                });
            } else {
                let applied = self
                    .apply_delta(r.amount)
                    .expect("unblocked profile accepts deltas");
                out.push(ReleaseOutcome::Applied {
                    message_id: r.message_id,
                    applied,
                });
            }
        }
        out
    }

    /// Notes a complaint against one of this driver's announcements.
    pub fn record_complaint(&mut self, message_id: MessageId) -> ComplaintOutcome {
        let p = self.current_mut();
        if !p.announced.contains(&message_id) {
            return ComplaintOutcome::UnknownMessage;
        }
        if p.complaints.insert(message_id) {
            ComplaintOutcome::Recorded
        } else {
            ComplaintOutcome::Duplicate
        }
    }

    /// True when the periodic checker should (re)issue a blocking request.
    /// The latched floor hit keeps the request pending across beacon rewards
    /// that would otherwise nudge trust off the floor between checks.
    pub fn blocking_request_due(&self) -> bool {
        let p = self.current();
        !p.blocked && (p.floor_pinned || p.trust.milli() <= self.cfg.floor.milli())
    }

    /// Marks the active driver blocked: trust pinned to the floor.
    pub fn block(&mut self) -> TrustScore {
        let floor = self.cfg.floor;
        let p = self.current_mut();
        p.blocked = true;
        p.trust = floor;
        p.trust
    }

    /// Administrative redemption: restores the initial trust and clears the
    /// complaint and pending state.
    pub fn unblock(&mut self) -> TrustScore {
        let initial = self.cfg.initial;
        let p = self.current_mut();
        p.blocked = false;
        p.floor_pinned = false;
        p.trust = initial;
        p.pending.clear();
        p.complaints.clear();
        p.trust
    }
}
