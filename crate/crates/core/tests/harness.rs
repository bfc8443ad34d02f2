use std::path::{Path, PathBuf};

use varauto::control::{Initiator, Variant};
use varauto::engine::{derive_metrics, read_log, LogRecord};
use varauto::harness::{
    emit_report, parse_trials_csv, replay_log, run_batch, run_trial, summarize, trials_csv, BatchResult,
    DegradationSpec, Placement, Scenario, ScenarioFile, TrialRow,
};
use varauto::navigation::{plan, smoothed_length, FollowerConfig};
use varauto::operator::OperatorProfile;
use varauto::world::MapFile;
use varauto::{Error, LoaMode};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn default_scenario() -> Scenario {
    Scenario::load(&repo().join("scenarios/default.toml")).unwrap()
}

fn clean(mut sc: Scenario) -> Scenario {
    sc.file.degradation.mode = Placement::None;
    sc
}

fn file(name: &str, start: char, waypoints: &str) -> ScenarioFile {
    ScenarioFile {
        name: name.into(),
        map: PathBuf::from("inline"),
        resolution: 0.25,
        start,
        start_heading: 0.0,
        waypoints: waypoints.chars().collect(),
        variant: Variant::CaaMi,
        initial_loa: LoaMode::Autonomy,
        seed: 0,
        rules: None,
        degradation: DegradationSpec {
            mode: Placement::None,
            ..DegradationSpec::default()
        },
        operator: OperatorProfile::default(),
        engine: Default::default(),
    }
}

#[test]
fn autonomy_only_matches_kinematic_oracle() {
    let sc = clean(default_scenario());
    let out = run_trial(&sc, Variant::AutonomyOnly, 1).unwrap();
    assert!(out.metrics.completed);

    // Oracle: each leg is driven at v_max along the any-angle shortest route,
    // plus the operator's goal-click delay and the time lost to the final
    // deceleration ramp, which is cut off at the waypoint radius.
    let cfg = &sc.file.engine;
    let grid = sc.map.grid.clone();
    let inflated = grid.inflated(cfg.inflation, sc.waypoints());
    let f = FollowerConfig::default();
    let r = cfg.waypoint_radius;
    let ramp_loss = f.decel_radius * (f.decel_radius / r).ln() - (f.decel_radius - r);
    let mut from = sc.start();
    let mut oracle = 0.0;
    for &wp in sc.waypoints() {
        let path = plan(&inflated, from, wp).unwrap();
        let len = smoothed_length(&grid, grid.center(from), &path) - r;
        oracle += len / cfg.limits.v_max + sc.file.operator.reaction_delay + ramp_loss;
        from = wp;
    }
    let t = out.metrics.completion_time;
    assert!((t - oracle).abs() <= 0.1 * oracle, "completion {t:.1} s vs oracle {oracle:.1} s");
}

#[test]
fn same_seed_gives_identical_metrics_and_logs() {
    let sc = default_scenario();
    for v in [Variant::Mi, Variant::CaaMi] {
        let a = run_trial(&sc, v, 17).unwrap();
        let b = run_trial(&sc, v, 17).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.log, b.log);
    }
}

#[test]
fn mode_times_sum_to_completion_time() {
    let sc = default_scenario();
    for v in [Variant::Mi, Variant::CaaMi, Variant::TeleopOnly, Variant::AutonomyOnly] {
        for seed in 1..4 {
            let m = run_trial(&sc, v, seed).unwrap().metrics;
            assert_eq!(m.ticks_teleop + m.ticks_autonomy, m.ticks);
            assert!((m.time_in_teleop + m.time_in_autonomy - m.completion_time).abs() < 1e-9);
            assert_eq!(m.loa_switches_total, m.loa_switches_ai + m.loa_switches_human);
        }
    }
}

#[test]
fn caa_mi_only_hands_control_to_autonomy_while_distracted() {
    let sc = default_scenario();
    let mut during = 0;
    for seed in 1..=20 {
        let out = run_trial(&sc, Variant::CaaMi, seed).unwrap();
        let LogRecord::Header(h) = &out.log[0] else { panic!() };
        let d = h.distraction.unwrap();
        for r in &out.log {
            if let LogRecord::Switch { t, to, initiator: Initiator::Ai, .. } = r {
                if d.contains(*t) {
                    during += 1;
                    assert_eq!(*to, LoaMode::Autonomy, "seed {seed}: AI switch to {to:?} at {t} during distraction");
                }
            }
        }
    }
    assert!(during > 0);
}

#[test]
fn fixed_variants_never_switch() {
    let sc = default_scenario();
    for v in [Variant::TeleopOnly, Variant::AutonomyOnly] {
        let m = run_trial(&sc, v, 2).unwrap().metrics;
        assert_eq!(m.loa_switches_total, 0);
        assert!(m.completed);
    }
}

#[test]
fn teleop_corridor_leg_matches_skill_oracle() {
    let mut text = String::new();
    text.push_str(&"#".repeat(40));
    text.push('\n');
    for row in 0..3 {
        let mut line = vec!['.'; 40];
        line[0] = '#';
        line[39] = '#';
        if row == 1 {
            line[2] = 'S';
            line[34] = 'A';
        }
        text.extend(line);
        text.push('\n');
    }
    text.push_str(&"#".repeat(40));
    let map = MapFile::parse(&text, 0.25).unwrap();
    let mut f = file("corridor", 'S', "A");
    f.operator.teleop_skill = 0.8;
    f.engine.waypoint_radius = 0.1;
    let sc = Scenario::new(f, map, None).unwrap();
    let oracle = 8.0 / (0.8 * sc.file.engine.limits.v_max);
    for seed in 0..10 {
        let m = run_trial(&sc, Variant::TeleopOnly, seed).unwrap().metrics;
        assert!(m.completed);
        assert!(
            (m.completion_time - oracle).abs() <= 0.1 * oracle,
            "seed {seed}: {} s vs {oracle} s",
            m.completion_time
        );
    }
}

#[test]
fn timeout_is_an_incomplete_trial_with_reason() {
    let mut sc = clean(default_scenario());
    sc.file.engine.timeout = 20.0;
    let m = run_trial(&sc, Variant::AutonomyOnly, 1).unwrap().metrics;
    assert!(!m.completed);
    assert_eq!(m.reason.as_deref(), Some("timeout"));
    assert!((m.completion_time - 20.0).abs() < 1e-9);
}

#[test]
fn unreachable_waypoint_is_a_scenario_error() {
    let text = "#######\n#S.#..#\n#..#A.#\n#######";
    let map = MapFile::parse(text, 0.25).unwrap();
    let sc = Scenario::new(file("walled-off", 'S', "A"), map, None).unwrap();
    let err = run_trial(&sc, Variant::AutonomyOnly, 0).unwrap_err();
    assert!(matches!(err, Error::Scenario(_)), "{err}");
}

#[test]
fn missing_label_is_rejected() {
    let map = MapFile::parse("#####\n#S..#\n#####", 0.25).unwrap();
    assert!(matches!(Scenario::new(file("x", 'S', "Q"), map, None), Err(Error::Scenario(_))));
}

#[test]
fn random_overlap_nests_distraction_inside_noise() {
    let spec = DegradationSpec::default();
    for seed in 0..500 {
        let (n, d) = spec.resolve(seed);
        let (n, d) = (n.unwrap(), d.unwrap());
        assert!((n.end - n.start - spec.noise_duration).abs() < 1e-9);
        assert!((d.end - d.start - spec.distraction_duration).abs() < 1e-9);
        assert!(n.start >= spec.window[0] && n.end <= spec.window[1] + 1e-9);
        assert!(d.start >= n.start && d.end <= n.end + 1e-9);
    }
    assert_eq!(spec.resolve(3), spec.resolve(3));
}

#[test]
fn single_run_batch_equals_the_trial_with_zero_sd() {
    let sc = default_scenario();
    let b = run_batch(&sc, &[Variant::Mi], 1, 9).unwrap();
    let s = summarize(&b);
    let m = run_trial(&sc, Variant::Mi, 9).unwrap().metrics;
    let v = &s.variants[0];
    assert_eq!(v.metrics.completion_time.mean, m.completion_time);
    assert_eq!(v.metrics.loa_switches_total.mean, m.loa_switches_total as f64);
    assert_eq!(v.metrics.completion_time.sd, 0.0);
    assert_eq!(v.metrics.loa_switches_ai.sd, 0.0);
}

#[test]
fn empty_batch_writes_header_only_csv() {
    let b = BatchResult {
        scenario: "empty".into(),
        variants: vec![],
        seeds: vec![],
        trials: vec![],
    };
    let csv = trials_csv(&b).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert_eq!(csv.trim_end(), TrialRow::COLUMNS.join(","));
    assert!(parse_trials_csv(&csv).unwrap().is_empty());
}

#[test]
fn report_files_round_trip() {
    let sc = default_scenario();
    let b = run_batch(&sc, &[Variant::Mi, Variant::CaaMi], 2, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&b, &summarize(&b), dir.path()).unwrap();

    let text = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let rows = parse_trials_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    let expected: Vec<TrialRow> = b.trials.iter().map(TrialRow::from_trial).collect();
    assert_eq!(rows, expected);

    let summary: varauto::harness::BatchSummary =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, summarize(&b));

    for t in &b.trials {
        let path = dir.path().join("logs").join(varauto::harness::log_file_name(t.variant, t.seed));
        let replayed = replay_log(&path).unwrap();
        assert_eq!(&replayed, t.metrics().unwrap());
        let records = read_log(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
        assert_eq!(records, t.outcome.as_ref().unwrap().log);
    }
}

#[test]
fn zero_runs_is_rejected() {
    assert!(run_batch(&default_scenario(), &[Variant::Mi], 0, 1).is_err());
}

#[test]
fn truncated_log_fails_replay() {
    let out = run_trial(&default_scenario(), Variant::Mi, 4).unwrap();
    let cut = &out.log[..out.log.len() - 1];
    assert!(matches!(derive_metrics(cut), Err(Error::DecisionLog(_))));
    assert!(derive_metrics(&out.log[1..]).is_err());
}
