//! End-to-end protocol scenarios: each test builds a small hand-placed
//! topology from TOML, runs it to completion, checks the invariant audit,
//! and then asserts the externally visible story (messages, dispute log,
//! trust trajectories) of one protocol path.

use vanet_sim_core::logs::{DisputeMethod, DisputeVerdict};
use vanet_sim_core::message::MessageKind;
use vanet_sim_core::metrics;
use vanet_sim_core::scenario::ScenarioConfig;
use vanet_sim_core::world::{RunOutput, World};

fn run(toml: &str, seed: u64) -> RunOutput {
    let cfg = ScenarioConfig::from_toml(toml).expect("config parses");
    let out = World::build(cfg, seed).run();
    let violations = metrics::audit(&out);
    assert!(
        violations.is_empty(),
        "invariant violations:\n{}",
        violations.join("\n")
    );
    out
}

fn final_trust_milli(out: &RunOutput, driver: &str) -> i32 {
    out.final_trust
        .iter()
        .find(|r| r.driver == driver)
        .unwrap_or_else(|| panic!("no final trust row for {driver}"))
        .trust
        .milli()
}

fn senders_of(out: &RunOutput, kind: MessageKind) -> Vec<&str> {
    out.logs
        .messages
        .iter()
        .filter(|m| m.kind == kind)
        .map(|m| out.names[m.sender.index()].as_str())
        .collect()
}

fn first_time_of(out: &RunOutput, kind: MessageKind) -> f64 {
    out.logs
        .messages
        .iter()
        .find(|m| m.kind == kind)
        .unwrap_or_else(|| panic!("no {} message", kind.label()))
        .at
        .as_secs_f64()
}

/// An exact clarifier tie stays unresolved, is referred to an official
/// vehicle, and the official's inspection settles it: the sender is
/// vindicated, the accuser climbs the punishment ladder, and the official
/// attends and sorts the (severe) scene.
#[test]
fn tied_vote_refers_to_official_who_settles_and_sorts() {
    let toml = r#"
        name = "referral"

        [simulation]
        duration_s = 260.0

        [trust]
        initial = 0.6

        [[routes]]
        name = "ring"
        waypoints = [[0.0, 0.0], [200.0, 0.0], [200.0, 200.0], [0.0, 200.0]]

        [[rsus]]
        name = "base"
        position = [100.0, 100.0]

        # Announces a real accident at (0, 175) while driving past it.
        [[vehicles]]
        name = "announcer"
        route = "ring"
        speed_mps = 12.5
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.announcements]]
        at_s = 50.0
        event_type = "accident"
        truthful = true

        # Contests it one second later.
        [[vehicles]]
        name = "accuser"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 400.0
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.scripted_complaints]]
        at_s = 51.0
        announcer = "announcer"
        announcement_index = 0

        # Equal-trust clarifiers voting opposite ways: an exact tie.
        [[vehicles]]
        name = "supporter"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 200.0
        policy = { clarify_mode = "random", clarify_yes_probability = 1.0, relay = false }

        [[vehicles]]
        name = "denier"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 600.0
        policy = { clarify_mode = "random", clarify_yes_probability = 0.0, relay = false }

        # Parked inside RSU range but far from the scene: it never clarifies,
        # so the tie stands until the dispute is referred to it.
        [[vehicles]]
        name = "patrol"
        kind = "police"
        position = [220.0, 100.0]
        policy = { clarify_mode = "none", relay = false }
    "#;
    let out = run(toml, 7);

    assert_eq!(out.cases.len(), 1);
    let case = &out.cases[0];
    assert!(case.referred, "tied vote must refer the case onward");
    assert_eq!(case.verdict, Some(DisputeVerdict::DecidedTrue));
    assert_eq!(case.method, Some(DisputeMethod::Official));
    // supporter +600, denier -600, official +1000.
    assert_eq!(case.score_milli, 1000);

    let rows = &out.logs.disputes;
    assert_eq!(rows.len(), 2, "one tie row, one official ruling");
    assert_eq!(rows[0].method, DisputeMethod::Vote);
    assert_eq!(rows[0].verdict, DisputeVerdict::Unresolved);
    assert_eq!(rows[0].score_milli, 0);
    assert_eq!(rows[1].method, DisputeMethod::Official);
    assert_eq!(rows[1].verdict, DisputeVerdict::DecidedTrue);

    // Escalation traffic, in order: the RSU hands the case to the patrol,
    // which had earlier excused itself from clarifying, announces it is
    // attending, and finally declares the scene sorted.
    assert_eq!(senders_of(&out, MessageKind::UnresolvedUntrue), ["base"]);
    assert_eq!(senders_of(&out, MessageKind::FarFromEvent), ["patrol"]);
    assert_eq!(senders_of(&out, MessageKind::AttendingBy), ["patrol"]);
    assert_eq!(senders_of(&out, MessageKind::EventSorted), ["patrol"]);

    // Inspection report lands one inspection delay after the referral, and
    // the sort declaration one sort delay after that (default 10 s + 30 s).
    let referred_at = rows[0].at.as_secs_f64();
    let decided_at = case.decided_at.unwrap().as_secs_f64();
    let sorted_at = first_time_of(&out, MessageKind::EventSorted);
    assert!((decided_at - referred_at - 10.0).abs() < 0.1);
    assert!((sorted_at - decided_at - 30.0).abs() < 0.1);

    // Vindicated sender earns the RSU reward; the accuser is punished on the
    // first ladder rung; clarifiers and the official are never targets.
    assert_eq!(case.rewarded_drivers, ["announcer-d0".to_string()]);
    assert_eq!(case.punished, [("accuser-d0".to_string(), -100)]);
    assert_eq!(final_trust_milli(&out, "announcer-d0"), 680);
    // 600 + 20 report reward - 100 punishment.
    assert_eq!(final_trust_milli(&out, "accuser-d0"), 520);
    // 600 + 20 clarify reward each, win or lose.
    assert_eq!(final_trust_milli(&out, "supporter-d0"), 620);
    assert_eq!(final_trust_milli(&out, "denier-d0"), 620);
}

/// A single heavy punishment pins the device at the trust floor; the TPD
/// itself requests blocking, the authority confirms, and the vehicle falls
/// silent except for beacons -- all with just one malicious ruling on file.
#[test]
fn floor_hit_triggers_device_initiated_blocking() {
    let toml = r#"
        name = "floor-blocking"

        [simulation]
        duration_s = 250.0

        [trust]
        initial = 0.55
        punishment_ladder = [0.5]

        [[routes]]
        name = "ring"
        waypoints = [[0.0, 0.0], [200.0, 0.0], [200.0, 200.0], [0.0, 200.0]]

        [[rsus]]
        name = "base"
        position = [100.0, 100.0]

        [[vehicles]]
        name = "liar"
        route = "ring"
        speed_mps = 12.5
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.announcements]]
        at_s = 50.0
        event_type = "roadworks"
        truthful = false

        [[vehicles]]
        name = "reporter"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 400.0
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.scripted_complaints]]
        at_s = 51.0
        announcer = "liar"
        announcement_index = 0

        [[vehicles]]
        name = "observer"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 600.0
        policy = { clarify_mode = "ground_truth", relay = false }
    "#;
    let out = run(toml, 11);

    assert_eq!(out.cases.len(), 1);
    let case = &out.cases[0];
    assert_eq!(case.verdict, Some(DisputeVerdict::DecidedFalse));
    assert_eq!(case.method, Some(DisputeMethod::Vote));
    assert!(!case.referred);
    // Lone ground-truth clarifier at 550 voting NO.
    assert_eq!(case.score_milli, -550);
    assert_eq!(case.punished, [("liar-d0".to_string(), -500)]);

    // 0.55 - 0.5 clamps to the 0.05 floor and the punishment row says so.
    let punish_row = out
        .logs
        .trust
        .iter()
        .find(|r| r.driver == "liar-d0" && r.cause == "rsu_punishment")
        .expect("punishment row");
    assert_eq!(punish_row.trust.milli(), 50);

    // The device asks to be blocked on its next check tick (the RSU relays
    // the request onto the wire), the authority confirms, the RSU puts the
    // confirmation on the air, and the device acknowledges. Ruling at ~171,
    // check ticks on a 10 s grid.
    assert_eq!(senders_of(&out, MessageKind::BlockingRequest), ["liar", "base"]);
    assert!(senders_of(&out, MessageKind::BlockingConfirmation).contains(&"base"));
    assert_eq!(senders_of(&out, MessageKind::BlockingAck), ["liar", "base"]);
    let blocked_row = out
        .logs
        .trust
        .iter()
        .find(|r| r.driver == "liar-d0" && r.cause == "blocked")
        .expect("blocked row");
    let blocked_at = blocked_row.at.as_secs_f64();
    assert!(
        (180.0..180.2).contains(&blocked_at),
        "block landed at {blocked_at}"
    );
    assert!(out.blocked_drivers.contains(&"liar-d0".to_string()));
    let liar = out
        .final_trust
        .iter()
        .find(|r| r.driver == "liar-d0")
        .unwrap();
    assert!(liar.blocked);
    assert_eq!(liar.trust.milli(), 50);

    // One ruling on the authority's books: blocking came from the device's
    // own floor request, not the three-malicious-events rule.
    assert_eq!(out.ta_rulings_csv.lines().count(), 2, "header + one ruling");
    assert!(out.ta_rulings_csv.contains("liar-d0,true"));

    // Beacons continue after the block; everything else stops (the audit
    // enforces the silence, this checks the heartbeat survives).
    assert!(out
        .logs
        .messages
        .iter()
        .any(|m| m.kind == MessageKind::Beacon
            && out.names[m.sender.index()] == "liar"
            && m.at.as_secs_f64() > blocked_at));

    // Winners: the reporter takes report reward + RSU reward, the clarifier
    // only its clarify reward.
    assert_eq!(final_trust_milli(&out, "reporter-d0"), 650);
    assert_eq!(final_trust_milli(&out, "observer-d0"), 570);
}

/// Two RSUs hear about the same fabricated event -- one over the air, one
/// through the wired backbone -- and two separate complaints arrive. The
/// owner RSU runs a single dispute and the offender is punished exactly
/// once.
#[test]
fn two_rsus_and_two_reporters_yield_one_case() {
    let toml = r#"
        name = "dedup"

        [simulation]
        duration_s = 220.0

        [trust]
        initial = 0.6

        [[routes]]
        name = "ring"
        waypoints = [[-300.0, -100.0], [300.0, -100.0], [300.0, 100.0], [-300.0, 100.0]]

        [[rsus]]
        name = "west"
        position = [-200.0, 0.0]

        [[rsus]]
        name = "east"
        position = [200.0, 0.0]

        # Claims roadworks at (-200, -100): in range of west only.
        [[vehicles]]
        name = "liar"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 1075.0
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.announcements]]
        at_s = 50.0
        event_type = "roadworks"
        truthful = false

        [[vehicles]]
        name = "r1"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 1175.0
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.scripted_complaints]]
        at_s = 52.0
        announcer = "liar"
        announcement_index = 0

        [[vehicles]]
        name = "r2"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 1225.0
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.scripted_complaints]]
        at_s = 54.0
        announcer = "liar"
        announcement_index = 0

        [[vehicles]]
        name = "witness"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 1200.0
        policy = { clarify_mode = "ground_truth", relay = false }
    "#;
    let out = run(toml, 3);

    // Exactly one case despite two RSUs and two complaints.
    assert_eq!(out.cases.len(), 1);
    let case = &out.cases[0];
    assert_eq!(case.reporters.len(), 2, "second complaint joins the case");
    assert_eq!(case.verdict, Some(DisputeVerdict::DecidedFalse));
    assert_eq!(case.method, Some(DisputeMethod::Vote));
    assert_eq!(out.logs.disputes.len(), 1);

    // Both RSUs re-broadcast the claim into their own coverage areas even
    // though only west heard it over the air; east learned via the wire.
    let announcers = senders_of(&out, MessageKind::EventAnnouncement);
    assert!(announcers.contains(&"west"));
    assert!(announcers.contains(&"east"));
    // Wired backbone: event shared, dispute opened, incident forwarded to
    // the authority, ruling shared and forwarded.
    assert!(senders_of(&out, MessageKind::InterRsuNotice).len() >= 4);

    // The offender is punished exactly once for the single ruling.
    let punishments: Vec<_> = out
        .logs
        .trust
        .iter()
        .filter(|r| r.driver == "liar-d0" && r.cause == "rsu_punishment")
        .collect();
    assert_eq!(punishments.len(), 1);
    assert_eq!(final_trust_milli(&out, "liar-d0"), 500);
    // Both reporters win: 600 + 20 report + 80 ruling reward.
    assert_eq!(final_trust_milli(&out, "r1-d0"), 700);
    assert_eq!(final_trust_milli(&out, "r2-d0"), 700);
    assert_eq!(final_trust_milli(&out, "witness-d0"), 620);

    // And the authority saw exactly one ruling.
    assert_eq!(out.ta_rulings_csv.lines().count(), 2);
}

/// Vehicles in the low-trust band must not forward event traffic: instead
/// of relaying an official's accident announcement they emit low-trust
/// notices.
#[test]
fn low_trust_relays_emit_notices_instead_of_forwarding() {
    let toml = r#"
        name = "low-trust-relay"

        [simulation]
        duration_s = 100.0

        [trust]
        initial = 0.2

        [[routes]]
        name = "ring"
        waypoints = [[0.0, 0.0], [200.0, 0.0], [200.0, 200.0], [0.0, 200.0]]

        [[rsus]]
        name = "base"
        position = [100.0, 100.0]

        # Officials bypass the consumer trust hardware, so the medic can
        # announce even in a world of distrusted drivers.
        [[vehicles]]
        name = "medic"
        kind = "ambulance"
        route = "ring"
        speed_mps = 12.5
        policy = { clarify_mode = "none", relay = false }
        [[vehicles.announcements]]
        at_s = 60.0
        event_type = "accident"
        truthful = true

        [[vehicles]]
        name = "bystander"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 200.0
        random_start_offset = false
        policy = { clarify_mode = "none", relay = true }
        count = 3
    "#;
    let out = run(toml, 5);

    // Every bystander heard the claim and flagged its own low standing
    // rather than forwarding.
    let notice_senders = senders_of(&out, MessageKind::LowTrustNotice);
    for i in 0..3 {
        let name = format!("bystander-{i}");
        assert!(
            notice_senders.contains(&name.as_str()),
            "{name} sent no low-trust notice"
        );
    }

    // No bystander ever put the announcement (or anything hop > 0) on the
    // air; only the medic and the RSU carry the claim.
    for m in &out.logs.messages {
        let sender = out.names[m.sender.index()].as_str();
        if sender.starts_with("bystander") {
            assert_ne!(m.kind, MessageKind::EventAnnouncement, "{sender} relayed");
            assert_eq!(m.hop, 0);
        }
    }
    let announcers = senders_of(&out, MessageKind::EventAnnouncement);
    assert!(announcers.contains(&"medic"));
    assert!(announcers.iter().all(|s| *s == "medic" || *s == "base"));

    // Beacon rewards land immediately for low-trust drivers: ten beacons in
    // a 100 s run move 0.2 to 0.25, which still leaves every bystander inside
    // the notice-only band the whole way.
    for i in 0..3 {
        assert_eq!(final_trust_milli(&out, &format!("bystander-{i}-d0")), 250);
    }
}

/// Receiver-side baseline: claims buffer until the decision timer fires, so
/// every decision lags the first received claim by exactly the timer; the
/// RSU gossips its reputation table; no disputes ever open.
#[test]
fn baseline_buffers_claims_until_the_timer_fires() {
    let toml = r#"
        name = "baseline-flow"

        [simulation]
        duration_s = 60.0

        [protocol]
        mode = "baseline"
        baseline_timer_s = 5.0
        reputation_broadcast_s = 20.0

        [[routes]]
        name = "ring"
        waypoints = [[0.0, 0.0], [200.0, 0.0], [200.0, 200.0], [0.0, 200.0]]

        [[rsus]]
        name = "base"
        position = [100.0, 100.0]

        # car-0 is beside the scene when the crash happens and announces it;
        # car-2 passes next (~26 s), car-1 last (~47 s).
        [[vehicles]]
        name = "car-0"
        route = "ring"
        speed_mps = 12.5

        [[vehicles]]
        name = "car-1"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 266.0

        [[vehicles]]
        name = "car-2"
        route = "ring"
        speed_mps = 12.5
        start_offset_m = 533.0

        [[events]]
        at_s = 10.0
        location = [100.0, 0.0]
        event_type = "accident"
    "#;
    let out = run(toml, 2);

    // car-0 witnesses and announces; car-1 and car-2 arm timers on receipt
    // and decide exactly one timer later. Both drive past the scene while
    // the timer runs or after deciding, which must not cancel anything.
    assert_eq!(out.logs.decisions.len(), 2);
    let mut deciders: Vec<&str> = out
        .logs
        .decisions
        .iter()
        .map(|d| out.names[d.vehicle.index()].as_str())
        .collect();
    deciders.sort();
    assert_eq!(deciders, ["car-1", "car-2"]);
    for d in &out.logs.decisions {
        let lag = d.latency.as_secs_f64();
        assert!(
            (5.0..5.1).contains(&lag),
            "decision latency {lag} should be the 5 s timer plus propagation"
        );
    }

    // Baseline bookkeeping: reputation gossip and claim acknowledgements
    // flow; the dispute machinery stays silent.
    assert!(senders_of(&out, MessageKind::ReputationUpdate).len() >= 2);
    assert!(!senders_of(&out, MessageKind::Feedback).is_empty());
    assert!(out.logs.disputes.is_empty());
    assert!(out.cases.is_empty());
    assert!(senders_of(&out, MessageKind::EventAnnouncement).len() >= 2);
}

/// The scenario file shipped in `scenarios/` stays valid and runs clean.
#[test]
fn bundled_demo_scenario_parses_and_runs() {
    let out = run(include_str!("../../../scenarios/demo.toml"), 3);
    assert!(out.vehicle_count > 0);
    assert!(!out.logs.messages.is_empty());
}
