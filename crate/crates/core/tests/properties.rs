//! Property and oracle tests for the invariants the simulator is built on:
//! trust clamping, band/admission thresholds, reward withholding, the
//! authority's sliding-window blocking rule, relay flood termination, and
//! bit-for-bit determinism of whole runs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanet_sim_core::authority::TrustAuthority;
use vanet_sim_core::geom::Vec2;
use vanet_sim_core::ids::{EntityId, EventId, MessageId};
use vanet_sim_core::message::{
    permitted, relay_eligible, MessageClass, MessageKind, RelayDecision, RulingKind,
    RulingNotice,
};
use vanet_sim_core::metrics;
use vanet_sim_core::presets::{self, Fig5Mode};
use vanet_sim_core::scenario::ScenarioConfig;
use vanet_sim_core::time::SimTime;
use vanet_sim_core::trust::{
    assess_reward, AnnouncementMetrics, Tpd, TpdConfig, TrustBand, TrustDelta, TrustScore,
    DELAY_BOUNDS_S, POS_DIFF_BOUNDS_M, TIER_AMOUNTS_MILLI,
};
use vanet_sim_core::world::{RunOutput, World};

fn run_cfg(cfg: ScenarioConfig, seed: u64) -> RunOutput {
    let out = World::build(cfg, seed).run();
    let violations = metrics::audit(&out);
    assert!(
        violations.is_empty(),
        "invariant violations:\n{}",
        violations.join("\n")
    );
    out
}

fn mid(seq: u32) -> MessageId {
    MessageId {
        origin: EntityId(0),
        seq,
    }
}

// ---- thresholds ------------------------------------------------------------

fn band_rank(b: TrustBand) -> u8 {
    match b {
        TrustBand::Blocked => 0,
        TrustBand::NotTrusted => 1,
        TrustBand::LowlyTrusted => 2,
        TrustBand::Trusted => 3,
        TrustBand::HighlyTrusted => 4,
    }
}

/// Every band boundary and admission threshold, checked against a second
/// implementation written straight from the documented table.
#[test]
fn band_and_admission_thresholds_match_the_documented_table() {
    let mut prev_rank = 0u8;
    for m in 0..=1000 {
        let score = TrustScore::from_milli(m);
        let band = TrustBand::of(score);
        let expected = if m <= 50 {
            TrustBand::Blocked
        } else if m <= 250 {
            TrustBand::NotTrusted
        } else if m < 500 {
            TrustBand::LowlyTrusted
        } else if m < 900 {
            TrustBand::Trusted
        } else {
            TrustBand::HighlyTrusted
        };
        assert_eq!(band, expected, "band at {m}");
        assert!(band_rank(band) >= prev_rank, "band regressed at {m}");
        prev_rank = band_rank(band);

        for blocked in [false, true] {
            assert!(permitted(MessageClass::Beacon, score, blocked));
            assert_eq!(permitted(MessageClass::Wave, score, blocked), !blocked);
            assert_eq!(
                permitted(MessageClass::Mid, score, blocked),
                !blocked && m > 250
            );
            assert_eq!(
                permitted(MessageClass::High, score, blocked),
                !blocked && m >= 500
            );
        }

        // Forwarding tiers for a fresh, first-hop copy of someone else's
        // message; the short-circuit drops are checked separately below.
        let fwd = relay_eligible(1, 4, score, false, false, false);
        let expected_fwd = if m > 250 {
            RelayDecision::Relay
        } else if m > 50 {
            RelayDecision::LowTrustNotice
        } else {
            RelayDecision::Drop
        };
        assert_eq!(fwd, expected_fwd, "relay tier at {m}");
    }

    // Drop short-circuits beat every trust tier.
    let high = TrustScore::from_milli(900);
    assert_eq!(relay_eligible(4, 4, high, false, false, false), RelayDecision::Drop);
    assert_eq!(relay_eligible(1, 4, high, true, false, false), RelayDecision::Drop);
    assert_eq!(relay_eligible(1, 4, high, false, true, false), RelayDecision::Drop);
    assert_eq!(relay_eligible(1, 4, high, false, false, true), RelayDecision::Drop);
}

fn oracle_tier(bounds: &[f64; 5], v: f64) -> usize {
    if v < bounds[0] {
        0
    } else if v < bounds[1] {
        1
    } else if v < bounds[2] {
        2
    } else if v < bounds[3] {
        3
    } else if v < bounds[4] {
        4
    } else {
        5
    }
}

const ORACLE_AMOUNTS: [i32; 6] = [80, 60, 50, 10, -10, -50];

/// The announcement grading grid, swept across every tier boundary on both
/// dimensions (just below, exactly at, and far past each bound).
#[test]
fn announcement_grading_picks_the_worse_tier() {
    assert_eq!(TIER_AMOUNTS_MILLI, ORACLE_AMOUNTS);
    let pos_probes = [
        0.0, 150.0, 299.9, 300.0, 499.9, 500.0, 799.9, 800.0, 1199.9, 1200.0, 1499.9,
        1500.0, 9000.0,
    ];
    let delay_probes = [
        0.0, 5.0, 14.9, 15.0, 29.9, 30.0, 59.9, 60.0, 119.9, 120.0, 149.9, 150.0, 7200.0,
    ];
    for &pos in &pos_probes {
        for &delay in &delay_probes {
            let got = assess_reward(&AnnouncementMetrics {
                pos_diff_m: pos,
                delay_s: delay,
            });
            let expected = ORACLE_AMOUNTS[oracle_tier(&POS_DIFF_BOUNDS_M, pos)]
                .min(ORACLE_AMOUNTS[oracle_tier(&DELAY_BOUNDS_S, delay)]);
            assert_eq!(
                got.amount.milli(),
                expected,
                "grade at pos={pos} delay={delay}"
            );
            assert_eq!(got.long_delayed, expected < 0);
        }
    }
}

proptest! {
    #[test]
    fn announcement_grading_matches_oracle_for_random_inputs(
        pos in 0.0f64..3000.0,
        delay in 0.0f64..400.0,
    ) {
        let got = assess_reward(&AnnouncementMetrics { pos_diff_m: pos, delay_s: delay });
        let expected = ORACLE_AMOUNTS[oracle_tier(&POS_DIFF_BOUNDS_M, pos)]
            .min(ORACLE_AMOUNTS[oracle_tier(&DELAY_BOUNDS_S, delay)]);
        prop_assert_eq!(got.amount.milli(), expected);
        prop_assert_eq!(got.long_delayed, expected < 0);
    }
}

// ---- TPD state machine -----------------------------------------------------

/// 100k random operations against one device: deltas, withholds, releases,
/// complaints, blocks, unblocks and driver switches, with the clamp and
/// blocking invariants checked after every step.
#[test]
fn trust_clamps_hold_under_random_operation_storms() {
    let cfg = TpdConfig::default();
    let floor = cfg.floor.milli();
    let cap = cfg.cap.milli();
    let mut tpd = Tpd::new(cfg, "d0");
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A5);
    let mut now = SimTime::ZERO;
    let mut seq = 0u32;
    let mut announced: Vec<MessageId> = Vec::new();

    for step in 0..100_000u32 {
        match rng.gen_range(0..10u8) {
            0..=4 => {
                let delta = TrustDelta::from_milli(rng.gen_range(-600..=600));
                tpd.apply_delta(delta);
            }
            5 => {
                let id = mid(seq);
                seq += 1;
                tpd.note_announcement(id);
                announced.push(id);
                let amount = TrustDelta::from_milli(rng.gen_range(1..=100));
                tpd.withhold_reward(id, amount, now).unwrap();
            }
            6 => {
                now = now.plus(SimTime::from_secs(rng.gen_range(1..=200)));
                tpd.release_due(now);
            }
            7 => {
                if let Some(&id) = announced.get(rng.gen_range(0..announced.len().max(1))) {
                    tpd.record_complaint(id);
                }
            }
            8 => {
                if tpd.current().blocked {
                    tpd.unblock();
                } else {
                    tpd.block();
                }
            }
            _ => {
                let d = format!("d{}", rng.gen_range(0..3u8));
                tpd.switch_driver(&d);
            }
        }

        for p in tpd.profiles() {
            let m = p.trust.milli();
            assert!(
                (floor..=cap).contains(&m),
                "step {step}: trust {m} escaped [{floor}, {cap}] for {}",
                p.driver_id
            );
            if p.blocked {
                assert_eq!(m, floor, "step {step}: blocked profile off the floor");
            }
        }
        if tpd.current().blocked {
            assert!(!tpd.blocking_request_due(), "step {step}: request while blocked");
        }
    }
}

proptest! {
    /// A complaint inside the withhold window always discards the reward and
    /// leaves trust untouched; a complaint arriving after release is too late.
    #[test]
    fn withheld_rewards_cancel_iff_a_complaint_arrives_first(
        withhold_s in 1u64..300,
        amount in 1i32..=200,
        complaint_dt in 0u64..400,
        start in 0u64..1000,
    ) {
        let mut cfg = TpdConfig::default();
        cfg.withhold = SimTime::from_secs(withhold_s);
        let mut tpd = Tpd::new(cfg, "d0");
        let before = tpd.current().trust.milli();
        let t0 = SimTime::from_secs(start);
        tpd.note_announcement(mid(1));
        let release_at = tpd
            .withhold_reward(mid(1), TrustDelta::from_milli(amount), t0)
            .unwrap();
        prop_assert_eq!(release_at, SimTime::from_secs(start + withhold_s));

        if complaint_dt < withhold_s {
            // Complaint lands while the reward is still parked.
            tpd.record_complaint(mid(1));
            let out = tpd.release_due(release_at);
            prop_assert_eq!(out.len(), 1);
            let discarded =
                matches!(out[0], vanet_sim_core::trust::ReleaseOutcome::Discarded { .. });
            prop_assert!(discarded, "expected Discarded, got {:?}", out[0]);
            prop_assert_eq!(tpd.current().trust.milli(), before);
        } else {
            let out = tpd.release_due(release_at);
            prop_assert_eq!(out.len(), 1);
            let applied =
                matches!(out[0], vanet_sim_core::trust::ReleaseOutcome::Applied { .. });
            prop_assert!(applied, "expected Applied, got {:?}", out[0]);
            let released = (before + amount).min(900);
            prop_assert_eq!(tpd.current().trust.milli(), released);
            tpd.record_complaint(mid(1));
            prop_assert_eq!(tpd.current().trust.milli(), released);
        }
    }
}

// ---- authority blocking rule -----------------------------------------------

proptest! {
    /// The authority's repeated-offence blocking matches an independent
    /// sliding-window oracle, with and without a window configured.
    #[test]
    fn authority_blocking_matches_a_sliding_window_oracle(
        window_s in prop::option::of(2u64..40),
        threshold in 1u32..=4,
        steps in prop::collection::vec((0usize..4, 1u64..=10), 0..40),
    ) {
        let mut ta = TrustAuthority::new(
            EntityId(999),
            window_s.map(SimTime::from_secs),
            threshold,
            600.0,
        );
        let mut history: Vec<Vec<u64>> = vec![Vec::new(); 4];
        let mut blocked = [false; 4];
        let mut now = 0u64;

        for (i, (driver, dt)) in steps.iter().enumerate() {
            now += dt;
            let at = SimTime::from_secs(now);
            let name = format!("d{driver}");
            let notice = RulingNotice {
                event_id: EventId(i as u32),
                location: Vec2::new(0.0, 0.0),
                ruling: RulingKind::EventFalse,
                losers: vec![(name.clone(), EntityId(*driver as u32))],
                via_official: false,
            };
            let to_block = ta.record_ruling(&notice, at);

            history[*driver].push(now);
            let in_window = history[*driver]
                .iter()
                .filter(|&&t| window_s.map_or(true, |w| now - t <= w))
                .count() as u32;
            prop_assert_eq!(ta.malicious_count(&name, at), in_window);

            let should_block = !blocked[*driver] && in_window >= threshold;
            if should_block {
                prop_assert_eq!(&to_block, &[name.clone()]);
                prop_assert!(ta.block_driver(&name, at));
                blocked[*driver] = true;
            } else {
                prop_assert!(to_block.is_empty());
            }
        }

        for d in 0..4 {
            let name = format!("d{d}");
            prop_assert_eq!(
                ta.drivers.get(&name).map_or(false, |r| r.blocked),
                blocked[d]
            );
        }
    }
}

// ---- flood behaviour -------------------------------------------------------

fn flood_scenario(
    positions: &[(f64, f64)],
    rsu: (f64, f64),
    hop_limit: u8,
    range_m: f64,
) -> ScenarioConfig {
    let mut toml = format!(
        "name = \"flood\"\n\
         [simulation]\nduration_s = 30.0\n\
         [network]\ntransmission_range_m = {range_m:.1}\nhop_limit = {hop_limit}\n\
         [trust]\ninitial = 0.6\n\
         [[rsus]]\nname = \"hub\"\nposition = [{:.1}, {:.1}]\n",
        rsu.0, rsu.1
    );
    for (i, (x, y)) in positions.iter().enumerate() {
        toml.push_str(&format!(
            "[[vehicles]]\nname = \"v{i}\"\nposition = [{x:.1}, {y:.1}]\n\
             policy = {{ relay = true }}\n"
        ));
        if i == 0 {
            toml.push_str(
                "[[vehicles.announcements]]\nat_s = 5.0\nevent_type = \"roadworks\"\n\
                 truthful = true\n",
            );
        }
    }
    ScenarioConfig::from_toml(&toml).expect("generated flood scenario parses")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    /// One announcement flooded through a random static topology: the flood
    /// terminates, nobody transmits the same message twice, and no copy
    /// travels past the hop limit.
    #[test]
    fn relay_floods_terminate_without_duplicates_or_hop_overruns(
        positions in prop::collection::vec((0.0f64..1200.0, 0.0f64..1200.0), 2..25),
        rsu in (0.0f64..1200.0, 0.0f64..1200.0),
        hop_limit in 1u8..=6,
        range_m in 150.0f64..400.0,
        seed in 0u64..1000,
    ) {
        let cfg = flood_scenario(&positions, rsu, hop_limit, range_m);
        let out = World::build(cfg, seed).run();
        let violations = metrics::audit(&out);
        prop_assert!(violations.is_empty(), "audit:\n{}", violations.join("\n"));

        prop_assert_eq!(out.announcements.len(), 1);
        let mut transmitters: Vec<(MessageId, EntityId)> = Vec::new();
        let mut copies = 0usize;
        for m in &out.logs.messages {
            prop_assert!(m.hop <= out.hop_limit, "hop {} past limit", m.hop);
            if m.kind == MessageKind::EventAnnouncement {
                copies += 1;
                let key = (m.id, m.sender);
                prop_assert!(
                    !transmitters.contains(&key),
                    "{} transmitted {} twice",
                    out.names[m.sender.index()],
                    m.id
                );
                transmitters.push(key);
            }
        }
        // Two distinct floods exist per event: the original announcement and
        // the RSU rebroadcast under its own id. Worst case every vehicle
        // forwards each flood once: N rows for the original (origin plus
        // N - 1 relays) and N + 1 for the rebroadcast.
        prop_assert!(
            copies <= 2 * positions.len() + 1,
            "{} copies for {} vehicles",
            copies,
            positions.len()
        );
    }
}

// ---- whole-run properties ----------------------------------------------------

/// Two runs from the same seed must be indistinguishable in every artifact.
#[test]
fn identical_seeds_reproduce_identical_artifacts() {
    let a = run_cfg(presets::fig5(10, 0.6, Fig5Mode::AllUntrue), 42);
    let b = run_cfg(presets::fig5(10, 0.6, Fig5Mode::AllUntrue), 42);
    assert_eq!(a.logs.messages_csv(&a.names), b.logs.messages_csv(&b.names));
    assert_eq!(a.logs.trust_csv(), b.logs.trust_csv());
    assert_eq!(a.logs.disputes_csv(), b.logs.disputes_csv());
    assert_eq!(a.logs.decisions_csv(&a.names), b.logs.decisions_csv(&b.names));
    assert_eq!(a.ta_drivers_csv, b.ta_drivers_csv);
    assert_eq!(a.ta_incidents_csv, b.ta_incidents_csv);
    assert_eq!(a.ta_rulings_csv, b.ta_rulings_csv);
    assert_eq!(a.blocked_drivers, b.blocked_drivers);
}

/// With every clarifier voting NO, fabricating senders lose three disputes,
/// get blocked, and the admission gate silences the remaining 12 scripted
/// announcements of each: exactly 9 of 45 ever reach the air.
#[test]
fn blocked_senders_fall_silent_at_the_admission_gate() {
    let out = run_cfg(presets::fig5(10, 0.0, Fig5Mode::AllUntrue), 7);

    for k in 0..3 {
        let driver = format!("s{k}-d0");
        assert!(
            out.blocked_drivers.contains(&driver),
            "{driver} not blocked"
        );
        let blocked_at = out
            .logs
            .trust
            .iter()
            .find(|r| r.driver == driver && r.cause == "blocked")
            .expect("blocked trust row")
            .at;
        for a in out.announcements.iter().filter(|a| a.driver == driver) {
            assert!(
                a.at < blocked_at,
                "{driver} announced at {} after its block at {}",
                a.at.as_secs_f64(),
                blocked_at.as_secs_f64()
            );
        }
    }

    assert_eq!(out.announcements.len(), 9, "three rulings each, then silence");
    let m = metrics::classify(&out);
    assert_eq!(m.total(), 9);
    assert_eq!(m.false_ruled_false, 9, "all fabrications ruled false");
}
