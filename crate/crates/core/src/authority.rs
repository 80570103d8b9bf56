//! Central trust authority: driver registry, incident records, ruling
//! history, and the three-malicious-events blocking rule.

use crate::geom::Vec2;
use crate::ids::{EntityId, EventId};
use crate::message::{EventClaim, EventType, RulingKind, RulingNotice};
use crate::time::SimTime;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct RulingRow {
    pub at: SimTime,
    pub event_id: EventId,
    pub driver: String,
    /// True when the ruling went against this driver.
    pub malicious: bool,
    pub via_official: bool,
}

#[derive(Clone, Debug)]
pub struct DriverRecord {
    pub driver: String,
    pub vehicle: EntityId,
    pub registered_at: SimTime,
    /// Timestamps of rulings against this driver.
    pub malicious_at: Vec<SimTime>,
    pub blocked: bool,
    pub blocked_at: Option<SimTime>,
}

#[derive(Clone, Debug)]
pub struct IncidentRecord {
    pub event_id: EventId,
    pub event_type: EventType,
    pub location: Vec2,
    pub announced_at: SimTime,
    pub sender_driver: String,
    pub ruling: Option<RulingKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockingResponse {
    NewlyBlocked,
    /// Repeat request: re-confirm without changing state.
    AlreadyBlocked,
    UnknownDriver,
}

pub struct TrustAuthority {
    pub id: EntityId,
    pub drivers: BTreeMap<String, DriverRecord>,
    pub incidents: BTreeMap<EventId, IncidentRecord>,
    pub rulings: Vec<RulingRow>,
    /// Sliding window for the malicious-event count; `None` = whole run.
    pub window: Option<SimTime>,
    pub threshold: u32,
    pub vicinity_radius_m: f64,
}

impl TrustAuthority {
    pub fn new(
        id: EntityId,
        window: Option<SimTime>,
        threshold: u32,
        vicinity_radius_m: f64,
    ) -> Self {
        Self {
            id,
            drivers: BTreeMap::new(),
            incidents: BTreeMap::new(),
            rulings: Vec::new(),
            window,
            threshold,
            vicinity_radius_m,
        }
    }

    /// Registers a driver/vehicle pairing. Duplicate driver identities are
    /// rejected: one identity, one record.
    pub fn register(&mut self, driver: &str, vehicle: EntityId, at: SimTime) -> bool {
        if self.drivers.contains_key(driver) {
            return false;
        }
        self.drivers.insert(
            driver.to_string(),
            DriverRecord {
                driver: driver.to_string(),
                vehicle,
                registered_at: at,
                malicious_at: Vec::new(),
                blocked: false,
                blocked_at: None,
            },
        );
        true
    }

    pub fn record_incident(&mut self, claim: &EventClaim, at: SimTime) {
        self.incidents.entry(claim.event_id).or_insert(IncidentRecord {
            event_id: claim.event_id,
            event_type: claim.event_type,
            location: claim.location,
            announced_at: at,
            sender_driver: claim.sender_driver.clone(),
            ruling: None,
        });
    }

    /// Malicious rulings against `driver` inside the window ending at `now`.
    pub fn malicious_count(&self, driver: &str, now: SimTime) -> u32 {
        let Some(rec) = self.drivers.get(driver) else {
            return 0;
        };
        rec.malicious_at
            .iter()
            .filter(|&&at| match self.window {
                Some(w) => now.since(at) <= w,
                None => true,
            })
            .count() as u32
    }

    /// Records a ruling and returns the drivers that just crossed the
    /// blocking threshold (not yet blocked).
    pub fn record_ruling(&mut self, notice: &RulingNotice, at: SimTime) -> Vec<String> {
        if let Some(incident) = self.incidents.get_mut(&notice.event_id) {
            incident.ruling = Some(notice.ruling);
        }
        let mut to_block = Vec::new();
        for (driver, vehicle) in &notice.losers {
            if !self.drivers.contains_key(driver) {
                // Losers are registered lazily so the history is complete
                // even if the registration message raced the ruling.
                self.register(driver, *vehicle, at);
            }
            self.rulings.push(RulingRow {
                at,
                event_id: notice.event_id,
                driver: driver.clone(),
                malicious: true,
                via_official: notice.via_official,
            });
            let rec = self.drivers.get_mut(driver).expect("registered above");
            rec.malicious_at.push(at);
            if !rec.blocked && self.malicious_count(driver, at) >= self.threshold {
                to_block.push(driver.clone());
            }
        }
        to_block
    }

    pub fn block_driver(&mut self, driver: &str, at: SimTime) -> bool {
        match self.drivers.get_mut(driver) {
            Some(rec) if !rec.blocked => {
                rec.blocked = true;
                rec.blocked_at = Some(at);
                true
            }
            _ => false,
        }
    }

    /// A TPD pinned a driver at the trust floor and asks for confirmation.
    pub fn handle_blocking_request(&mut self, driver: &str, at: SimTime) -> BlockingResponse {
        match self.drivers.get_mut(driver) {
            None => BlockingResponse::UnknownDriver,
            Some(rec) if rec.blocked => BlockingResponse::AlreadyBlocked,
            Some(rec) => {
                rec.blocked = true;
                rec.blocked_at = Some(at);
                BlockingResponse::NewlyBlocked
            }
        }
    }

    /// Administrative unblock (manual review); clears the offence history.
    pub fn unblock_driver(&mut self, driver: &str) -> bool {
        match self.drivers.get_mut(driver) {
            Some(rec) if rec.blocked => {
                rec.blocked = false;
                rec.blocked_at = None;
                rec.malicious_at.clear();
                true
            }
            _ => false,
        }
    }

    pub fn drivers_csv(&self) -> String {
        let mut out =
            String::from("driver_id,vehicle,registered_at,malicious_rulings,blocked,blocked_at\n");
        for rec in self.drivers.values() {
            out.push_str(&format!(
                "{},#{},{},{},{},{}\n",
                rec.driver,
                rec.vehicle.0,
                rec.registered_at,
                rec.malicious_at.len(),
                rec.blocked,
                rec.blocked_at.map(|t| t.to_string()).unwrap_or_else(|| "-".into())
            ));
        }
        out
    }

    pub fn incidents_csv(&self) -> String {
        let mut out = String::from("event_id,type,x,y,announced_at,sender_driver,ruling\n");
        for inc in self.incidents.values() {
            let ruling = match inc.ruling {
                Some(RulingKind::EventTrue) => "true",
                Some(RulingKind::EventFalse) => "false",
                None => "-",
            };
            out.push_str(&format!(
                "{},{},{:.1},{:.1},{},{},{}\n",
                inc.event_id,
                inc.event_type.label(),
                inc.location.x,
                inc.location.y,
                inc.announced_at,
                inc.sender_driver,
                ruling
            ));
        }
        out
    }

    pub fn rulings_csv(&self) -> String {
        let mut out = String::from("time,event_id,driver_id,malicious,via_official\n");
        for r in &self.rulings {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.at, r.event_id, r.driver, r.malicious, r.via_official
            ));
        }
        out
    }
}
