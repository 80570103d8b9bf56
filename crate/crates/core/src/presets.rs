//! Ready-made scenario configurations: the scripted verification trace
//! (`fig4`), the dispute-accuracy sweep (`fig5`), and the protocol
//! comparison (`fig6`). Names follow the CLI contract.

use crate::scenario::{
    AnnounceCfg, ClarifyMode, PolicyCfg, ProtocolMode, ReportMode, RouteCfg, RsuCfg,
    ScenarioConfig, ScenarioEventCfg, ScriptedComplaintCfg, ServiceCfg, VehicleCfg,
    VehicleKindCfg,
};

fn rectangle(name: &str, half_w: f64, half_h: f64) -> RouteCfg {
    RouteCfg {
        name: name.to_string(),
        waypoints: vec![
            [-half_w, -half_h],
            [half_w, -half_h],
            [half_w, half_h],
            [-half_w, half_h],
        ],
        closed: true,
    }
}

fn vehicle(name: &str, route: &str, speed: f64, offset: f64) -> VehicleCfg {
    VehicleCfg {
        name: name.to_string(),
        kind: VehicleKindCfg::Regular,
        route: Some(route.to_string()),
        position: None,
        speed_mps: speed,
        start_offset_m: offset,
        random_start_offset: false,
        spawn_s: 0.0,
        driver: None,
        policy: PolicyCfg::default(),
        announcements: vec![],
        scripted_complaints: vec![],
        service_queries: vec![],
        count: None,
    }
}

fn silent_policy() -> PolicyCfg {
    PolicyCfg {
        report_probability: 0.0,
        report_mode: ReportMode::GroundTruth,
        clarify_mode: ClarifyMode::None,
        clarify_yes_probability: 0.5,
        relay: false,
    }
}

/// Scripted single-announcer trace: ten announcements, six complaints, the
/// full reward/withholding/punishment ladder, and two drivers blocked by the
/// authority's three-malicious-events rule. Fully deterministic (no random
/// policies), so the trust trajectory is known in closed form.
pub fn fig4() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: "fig4".into(),
        ..ScenarioConfig::default()
    };
    cfg.simulation.duration_s = 2200.0;
    cfg.trust.initial = 0.9;
    cfg.routes.push(rectangle("ring", 100.0, 100.0));
    cfg.rsus.push(RsuCfg {
        name: "rsu-0".into(),
        position: [0.0, 0.0],
        services: vec![],
        neighbors: vec![],
    });

    let speed = 12.5;
    let mut v0 = vehicle("v0", "ring", speed, 0.0);
    v0.policy = silent_policy();
    // Announcements every 200 s; the 1st, 2nd and 10th are fabricated.
    for k in 0..10u32 {
        v0.announcements.push(AnnounceCfg {
            at_s: 100.0 + 200.0 * f64::from(k),
            event_type: crate::message::EventType::Accident,
            truthful: !matches!(k, 0 | 1 | 9),
            location: None,
            observe_lead_s: 0.0,
        });
    }
    cfg.vehicles.push(v0);

    // Reporter name, start offset, and (time, announcement index) pairs.
    type ComplaintPlan<'a> = (&'a str, f64, &'a [(f64, usize)]);
    let complaints: [ComplaintPlan; 3] = [
        // r1 contests both early fabrications; the second complaint lands
        // after the withheld reward already released.
        ("r1", 100.0, &[(100.5, 0), (520.0, 1)]),
        // r2 contests three real events and loses every time.
        ("r2", 200.0, &[(700.5, 3), (900.5, 4), (1700.5, 8)]),
        // r3 contests the final fabrication and wins.
        ("r3", 300.0, &[(1900.5, 9)]),
    ];
    for (name, offset, plan) in complaints {
        let mut r = vehicle(name, "ring", speed, offset);
        r.policy = silent_policy();
        for (at_s, announcement_index) in plan {
            r.scripted_complaints.push(ScriptedComplaintCfg {
                at_s: *at_s,
                announcer: "v0".into(),
                announcement_index: *announcement_index,
            });
        }
        cfg.vehicles.push(r);
    }

    // The two consistently honest vehicles; they answer every clarification
    // query truthfully and their trust never leaves the cap.
    for (name, offset) in [("v1", 450.0), ("v2", 600.0)] {
        let mut c = vehicle(name, "ring", speed, offset);
        c.policy = PolicyCfg {
            clarify_mode: ClarifyMode::GroundTruth,
            relay: false,
            ..PolicyCfg::default()
        };
        cfg.vehicles.push(c);
    }
    cfg
}

/// Whether the scripted senders in the accuracy sweep announce real or
/// fabricated events.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fig5Mode {
    AllTrue,
    AllUntrue,
}

impl Fig5Mode {
    pub fn label(self) -> &'static str {
        match self {
            Fig5Mode::AllTrue => "true",
            Fig5Mode::AllUntrue => "untrue",
        }
    }
}

/// Dispute-accuracy sweep: three scripted senders announce mid-class events
/// on a fixed cadence; every other vehicle reports indiscriminately with
/// probability 0.4 and answers clarification queries YES with probability
/// `p`. One dedicated witness never reports, so the clarifier pool never
/// runs dry. `density` counts all vehicles (minimum 5).
pub fn fig5(density: usize, p: f64, mode: Fig5Mode) -> ScenarioConfig {
    assert!(density >= 5, "fig5 needs at least 5 vehicles, got {density}");
    assert!((0.0..=1.0).contains(&p), "p must be a probability, got {p}");
    let mut cfg = ScenarioConfig {
        name: format!("fig5-d{density}-p{p:.2}-{}", mode.label()),
        ..ScenarioConfig::default()
    };
    cfg.simulation.duration_s = 4000.0;
    cfg.simulation.warmup_s = 700.0;
    cfg.trust.initial = 0.8;
    cfg.routes.push(rectangle("ring", 125.0, 125.0));
    cfg.rsus.push(RsuCfg {
        name: "rsu-0".into(),
        position: [0.0, 0.0],
        services: vec![],
        neighbors: vec![],
    });

    let speed = 12.5;
    for k in 0..3u32 {
        let mut s = vehicle(&format!("s{k}"), "ring", speed, 333.0 * f64::from(k));
        s.policy = silent_policy();
        for j in 0..15u32 {
            s.announcements.push(AnnounceCfg {
                at_s: 800.0 + 200.0 * f64::from(j) + 66.0 * f64::from(k),
                event_type: crate::message::EventType::Roadworks,
                truthful: mode == Fig5Mode::AllTrue,
                location: None,
                observe_lead_s: 0.0,
            });
        }
        cfg.vehicles.push(s);
    }

    let mut witness = vehicle("w", "ring", speed, 0.0);
    witness.random_start_offset = true;
    witness.policy = PolicyCfg {
        report_probability: 0.0,
        report_mode: ReportMode::GroundTruth,
        clarify_mode: ClarifyMode::Random,
        clarify_yes_probability: p,
        relay: false,
    };
    cfg.vehicles.push(witness);

    let mut receivers = vehicle("n", "ring", speed, 0.0);
    receivers.random_start_offset = true;
    receivers.count = Some(density - 4);
    receivers.policy = PolicyCfg {
        report_probability: 0.4,
        report_mode: ReportMode::Indiscriminate,
        clarify_mode: ClarifyMode::Random,
        clarify_yes_probability: p,
        relay: false,
    };
    cfg.vehicles.push(receivers);
    cfg
}

/// Protocol comparison: one severe roadside event, everything else ambient.
/// The proposed protocol elects the first passing witness and relies on RSU
/// re-announcement; the baseline has every witness announce, every receiver
/// acknowledge, and decisions wait out `baseline_timer_s`.
pub fn fig6(density: usize, mode: ProtocolMode, baseline_timer_s: f64) -> ScenarioConfig {
    assert!(density >= 2, "fig6 needs at least 2 vehicles, got {density}");
    let label = match mode {
        ProtocolMode::Proposed => "proposed".to_string(),
        ProtocolMode::Baseline => format!("baseline-t{baseline_timer_s:.0}"),
    };
    let mut cfg = ScenarioConfig {
        name: format!("fig6-d{density}-{label}"),
        ..ScenarioConfig::default()
    };
    cfg.simulation.duration_s = 800.0;
    cfg.trust.initial = 0.8;
    cfg.protocol.mode = mode;
    cfg.protocol.auto_witness = true;
    cfg.protocol.baseline_timer_s = baseline_timer_s;
    cfg.routes.push(rectangle("ring", 300.0, 300.0));
    for (name, x, y) in [
        ("rsu-sw", -300.0, -300.0),
        ("rsu-se", 300.0, -300.0),
        ("rsu-ne", 300.0, 300.0),
        ("rsu-nw", -300.0, 300.0),
    ] {
        cfg.rsus.push(RsuCfg {
            name: name.into(),
            position: [x, y],
            services: vec![],
            neighbors: vec![],
        });
    }
    let mut cars = vehicle("car", "ring", 20.0, 0.0);
    cars.random_start_offset = true;
    cars.count = Some(density);
    cars.policy = PolicyCfg {
        report_probability: 0.0,
        report_mode: ReportMode::GroundTruth,
        clarify_mode: ClarifyMode::None,
        clarify_yes_probability: 0.5,
        relay: true,
    };
    cfg.vehicles.push(cars);
    cfg.events.push(ScenarioEventCfg {
        at_s: 400.0,
        location: [0.0, -300.0],
        event_type: crate::message::EventType::Accident,
    });
    cfg
}

/// Small mixed showcase: an honest announcer, a fabricator, a reporter, a
/// police vehicle that settles a tied dispute, and a located fuel service.
pub fn demo() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: "demo".into(),
        ..ScenarioConfig::default()
    };
    cfg.simulation.duration_s = 600.0;
    cfg.trust.initial = 0.6;
    cfg.routes.push(rectangle("ring", 150.0, 150.0));
    cfg.rsus.push(RsuCfg {
        name: "rsu-0".into(),
        position: [0.0, 0.0],
        services: vec![ServiceCfg {
            name: "fuel".into(),
            location: Some([140.0, 95.0]),
        }],
        neighbors: vec![],
    });
    let speed = 15.0;

    let mut honest = vehicle("honest", "ring", speed, 0.0);
    honest.announcements.push(AnnounceCfg {
        at_s: 60.0,
        event_type: crate::message::EventType::Roadworks,
        truthful: true,
        location: None,
        observe_lead_s: 5.0,
    });
    honest.service_queries.push(crate::scenario::ServiceQueryCfg {
        at_s: 200.0,
        service: "fuel".into(),
    });
    cfg.vehicles.push(honest);

    let mut liar = vehicle("fabricator", "ring", speed, 150.0);
    liar.announcements.push(AnnounceCfg {
        at_s: 120.0,
        event_type: crate::message::EventType::Accident,
        truthful: false,
        location: None,
        observe_lead_s: 0.0,
    });
    cfg.vehicles.push(liar);

    let mut vigilant = vehicle("vigilant", "ring", speed, 300.0);
    vigilant.policy = PolicyCfg {
        report_probability: 1.0,
        report_mode: ReportMode::GroundTruth,
        clarify_mode: ClarifyMode::GroundTruth,
        clarify_yes_probability: 0.5,
        relay: true,
    };
    cfg.vehicles.push(vigilant);

    cfg.vehicles.push(vehicle("bystander", "ring", speed, 450.0));

    let mut patrol = vehicle("patrol", "ring", speed, 600.0);
    patrol.kind = VehicleKindCfg::Police;
    cfg.vehicles.push(patrol);
    cfg
}
