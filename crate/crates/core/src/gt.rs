//! Ground-truth registry: the oracle of which roadside events really exist.
//! Truthful agents consult it; attackers invert it; the classifier grades
//! dispute outcomes against it.

use crate::geom::Vec2;
use crate::ids::EventId;
use crate::message::EventType;
use crate::time::SimTime;

#[derive(Clone, Debug)]
pub struct GtEvent {
    pub id: EventId,
    pub location: Vec2,
    pub event_type: EventType,
    /// Whether the event really exists on the road.
    pub truthful: bool,
    /// When it starts existing (scenario events) or was claimed.
    pub from: SimTime,
    /// Injected by the scenario itself rather than created by a claim.
    pub scenario: bool,
    pub announced: bool,
    /// Scene cleared (officially sorted or ruled fake): stops visit
    /// tracking and periodic re-announcements.
    pub sorted: bool,
}

#[derive(Default)]
pub struct GroundTruth {
    events: Vec<GtEvent>,
}

impl GroundTruth {
    pub fn add_scenario(&mut self, location: Vec2, event_type: EventType, from: SimTime) -> EventId {
        let id = EventId(self.events.len() as u32);
        self.events.push(GtEvent {
            id,
            location,
            event_type,
            truthful: true,
            from,
            scenario: true,
            announced: false,
            sorted: false,
        });
        id
    }

    /// Registers the subject of a fresh claim. Truthful claims describe an
    /// event that thereby really exists; untrue claims register a phantom.
    pub fn add_claim(
        &mut self,
        location: Vec2,
        event_type: EventType,
        truthful: bool,
        at: SimTime,
    ) -> EventId {
        let id = EventId(self.events.len() as u32);
        self.events.push(GtEvent {
            id,
            location,
            event_type,
            truthful,
            from: at,
            scenario: false,
            announced: true,
            sorted: false,
        });
        id
    }

    pub fn get(&self, id: EventId) -> &GtEvent {
        &self.events[id.0 as usize]
    }

    pub fn get_mut(&mut self, id: EventId) -> &mut GtEvent {
        &mut self.events[id.0 as usize]
    }

    pub fn is_true(&self, id: EventId) -> bool {
        self.get(id).truthful
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GtEvent> {
        self.events.iter()
    }

    /// Events that exist or are claimed at `now` and are not yet cleared;
    /// these are the locations vehicles track visits against.
    pub fn active(&self, now: SimTime) -> impl Iterator<Item = &GtEvent> {
        self.events
            .iter()
            .filter(move |e| e.from <= now && !e.sorted)
    }
}
