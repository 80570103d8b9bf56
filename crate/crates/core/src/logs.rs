//! Run logs and their CSV renderings.
//!
//! The column layouts here are load-bearing: downstream tooling parses them.
//!
//! - messages: `time,sender,receiver,kind,message_id,hop,bytes` where
//!   `receiver` is `BROADCAST` for over-the-air transmissions,
//! - disputes: `time,event_id,method,score,decision,rewarded,punished`,
//! - trust: `time,driver_id,trust,band,cause`.

use crate::ids::{EntityId, EventId, MessageId};
use crate::message::MessageKind;
use crate::time::SimTime;
use crate::trust::{TrustBand, TrustScore};

#[derive(Clone, Debug)]
pub struct MsgRecord {
    pub at: SimTime,
    pub sender: EntityId,
    /// `None` renders as `BROADCAST`.
    pub receiver: Option<EntityId>,
    pub kind: MessageKind,
    pub id: MessageId,
    pub hop: u8,
    pub bytes: u32,
}

#[derive(Clone, Debug)]
pub struct TrustRecord {
    pub at: SimTime,
    pub driver: String,
    pub trust: TrustScore,
    pub band: TrustBand,
    pub cause: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisputeMethod {
    Vote,
    Official,
}

impl DisputeMethod {
    pub fn label(self) -> &'static str {
        match self {
            DisputeMethod::Vote => "vote",
            DisputeMethod::Official => "official",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisputeVerdict {
    DecidedTrue,
    DecidedFalse,
    Unresolved,
}

impl DisputeVerdict {
    pub fn label(self) -> &'static str {
        match self {
            DisputeVerdict::DecidedTrue => "decided_true",
            DisputeVerdict::DecidedFalse => "decided_false",
            DisputeVerdict::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DisputeRecord {
    pub at: SimTime,
    pub event_id: EventId,
    pub method: DisputeMethod,
    /// Trust-weighted vote sum in thousandths; exact zero means a tie.
    pub score_milli: i64,
    pub verdict: DisputeVerdict,
    pub rewarded: Vec<String>,
    pub punished: Vec<String>,
}

/// A receiver reaching an actionable decision about a roadside event.
#[derive(Clone, Debug)]
pub struct DecisionRecord {
    pub at: SimTime,
    pub vehicle: EntityId,
    pub event_id: EventId,
    /// Time from event injection to the decision.
    pub latency: SimTime,
}

#[derive(Clone, Debug, Default)]
pub struct RunLogs {
    pub messages: Vec<MsgRecord>,
    pub trust: Vec<TrustRecord>,
    pub disputes: Vec<DisputeRecord>,
    pub decisions: Vec<DecisionRecord>,
}

fn join(items: &[String]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items.join("+")
    }
}

impl RunLogs {
    pub fn messages_csv(&self, names: &[String]) -> String {
        let mut out = String::from("time,sender,receiver,kind,message_id,hop,bytes\n");
        for m in &self.messages {
            let receiver = match m.receiver {
                Some(r) => names[r.index()].clone(),
                None => "BROADCAST".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.at,
                names[m.sender.index()],
                receiver,
                m.kind.label(),
                m.id,
                m.hop,
                m.bytes
            ));
        }
        out
    }

    pub fn trust_csv(&self) -> String {
        let mut out = String::from("time,driver_id,trust,band,cause\n");
        for t in &self.trust {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.at,
                t.driver,
                t.trust,
                t.band.label(),
                t.cause
            ));
        }
        out
    }

    pub fn disputes_csv(&self) -> String {
        let mut out = String::from("time,event_id,method,score,decision,rewarded,punished\n");
        for d in &self.disputes {
            out.push_str(&format!(
                "{},{},{},{:.3},{},{},{}\n",
                d.at,
                d.event_id,
                d.method.label(),
                d.score_milli as f64 / 1000.0,
                d.verdict.label(),
                join(&d.rewarded),
                join(&d.punished)
            ));
        }
        out
    }

    pub fn decisions_csv(&self, names: &[String]) -> String {
        let mut out = String::from("time,vehicle,event_id,latency_s\n");
        for d in &self.decisions {
            out.push_str(&format!(
                "{},{},{},{}\n",
                d.at,
                names[d.vehicle.index()],
                d.event_id,
                d.latency
            ));
        }
        out
    }
}
