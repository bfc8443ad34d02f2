//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use varauto::attention::{ema_update, HeadPoseSample};
use varauto::control::{
    infer, Controller, ControllerConfig, ControllerInputs, FuzzyInput, MotionErrorWindow, RuleBase, SwitchAction,
    Variant,
};
use varauto::engine::LogRecord;
use varauto::harness::{emit_report, run_batch, summarize, BatchResult, Scenario};
use varauto::navigation::plan;
use varauto::world::{Cell, LoaMode, Occupancy, OccupancyGrid};
use varauto::attention::AvailabilityEstimate;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn scenario() -> Scenario {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.toml");
    Scenario::load(&p).expect("default scenario loads")
}

fn grid_points() -> impl Iterator<Item = FuzzyInput> {
    let steps = || (0..=10).map(|i| i as f64 / 10.0);
    steps().flat_map(move |e| {
        steps().flat_map(move |a| {
            steps().flat_map(move |s| {
                [LoaMode::Teleoperation, LoaMode::Autonomy].map(|loa| FuzzyInput {
                    error_degree_high: e,
                    availability_degree: a,
                    active_loa: loa,
                    speed_degree_low: s,
                })
            })
        })
    })
}

fn rule_precedence() -> Outcome {
    let t0 = Instant::now();
    let rules = RuleBase::caa_mi();
    let threshold = ControllerConfig::default().activation_threshold;
    let (mut points, mut violations) = (0, 0);
    for p in grid_points() {
        points += 1;
        let action = infer(&rules, &p, threshold).action;
        let unavailable = p.availability_degree < 0.5;
        if unavailable && action == SwitchAction::Switch(LoaMode::Teleoperation) {
            violations += 1;
        }
        if unavailable
            && p.active_loa == LoaMode::Teleoperation
            && action != SwitchAction::Switch(LoaMode::Autonomy)
        {
            violations += 1;
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        "rule precedence (CAA-MI never hands over to an inattentive operator)",
        points == 2662 && violations == 0 && elapsed < Duration::from_secs(1),
        format!("{violations} violations over {points} points in {elapsed:.2?} (limit 1 s)"),
    )
}

fn variant_equivalence() -> Outcome {
    let threshold = ControllerConfig::default().activation_threshold;
    let (mi, caa) = (RuleBase::mi(), RuleBase::caa_mi());
    let mut mismatches = 0;
    let mut points = 0;
    for mut p in grid_points() {
        p.availability_degree = 1.0;
        points += 1;
        if infer(&mi, &p, threshold).action != infer(&caa, &p, threshold).action {
            mismatches += 1;
        }
    }
    // Same check through the stateful controllers on a random trace.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = ControllerConfig::default();
    let mut a = Controller::new(Variant::Mi, cfg, LoaMode::Autonomy);
    let mut b = Controller::new(Variant::CaaMi, cfg, LoaMode::Autonomy);
    for k in 0..5000 {
        let inputs = ControllerInputs {
            expert_speed: rng.random_range(0.0..1.0),
            actual_speed: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) },
            availability: AvailabilityEstimate::FULL,
        };
        let t = k as f64 * 0.1;
        if a.decide(&inputs, t).decision.action != b.decide(&inputs, t).decision.action {
            mismatches += 1;
        }
    }
    outcome(
        "variant equivalence (MI == CAA-MI at full availability)",
        mismatches == 0,
        format!("{mismatches} mismatches over {points} grid points and 5000 controller ticks"),
    )
}

fn unattended_per_trial(batch: &BatchResult, v: Variant) -> Vec<u32> {
    batch
        .for_variant(v)
        .map(|t| t.metrics().expect("trial ran").unattended_handovers)
        .collect()
}

fn never_interrupt(batch: &BatchResult, elapsed: Duration) -> Outcome {
    let caa = unattended_per_trial(batch, Variant::CaaMi);
    let mi = unattended_per_trial(batch, Variant::Mi);
    let caa_total: u32 = caa.iter().sum();
    let mi_hit = mi.iter().filter(|&&n| n > 0).count();
    let pass = caa.len() == 100 && caa_total == 0 && mi_hit * 2 >= mi.len() && elapsed < Duration::from_secs(300);
    outcome(
        "never-interrupt (no AI handover to an inattentive operator under CAA-MI)",
        pass,
        format!(
            "CAA-MI unattended handovers = {caa_total} over {} trials; MI > 0 in {mi_hit}/{} trials; batch took {elapsed:.1?} (limit 300 s)",
            caa.len(),
            mi.len()
        ),
    )
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn switch_trend(batch: &BatchResult) -> Outcome {
    let m = |v: Variant, f: fn(&varauto::engine::RunMetrics) -> u32| {
        mean(batch.for_variant(v).map(|t| f(t.metrics().unwrap()) as f64))
    };
    let (mi_total, caa_total) = (m(Variant::Mi, |r| r.loa_switches_total), m(Variant::CaaMi, |r| r.loa_switches_total));
    let (mi_ai, caa_ai) = (m(Variant::Mi, |r| r.loa_switches_ai), m(Variant::CaaMi, |r| r.loa_switches_ai));
    outcome(
        "switch-count trend (CAA-MI <= MI, total and AI)",
        caa_total <= mi_total && caa_ai <= mi_ai,
        format!("total {mi_total:.2} -> {caa_total:.2}; AI {mi_ai:.2} -> {caa_ai:.2} (MI -> CAA-MI, n = 100 paired)"),
    )
}

fn secondary_trend(batch: &BatchResult) -> Outcome {
    let m = |v: Variant| mean(batch.for_variant(v).map(|t| t.metrics().unwrap().secondary.items_completed as f64));
    let (mi, caa) = (m(Variant::Mi), m(Variant::CaaMi));
    outcome(
        "secondary-score trend (CAA-MI >= MI)",
        caa >= mi,
        format!("items completed {mi:.2} -> {caa:.2} (MI -> CAA-MI)"),
    )
}

/// Cost a + b*sqrt(2) with exact ordering on integer pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Exact {
    s: i64,
    d: i64,
}

impl Ord for Exact {
    fn cmp(&self, o: &Self) -> Ordering {
        // Sign of (s1 - s2) + (d1 - d2) * sqrt(2).
        let (a, b) = (self.s - o.s, self.d - o.d);
        let sign = |x: i64| x.cmp(&0);
        match (sign(a), sign(b)) {
            (x, y) if x == y => x,
            (x, Ordering::Equal) => x,
            (Ordering::Equal, y) => y,
            (x, _) => {
                // Opposite signs: compare a^2 with 2 b^2.
                let c = (a * a).cmp(&(2 * b * b));
                if x == Ordering::Greater { c } else { c.reverse() }
            }
        }
    }
}

impl PartialOrd for Exact {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn free(g: &[Vec<bool>], x: i32, y: i32) -> bool {
    y >= 0 && x >= 0 && (y as usize) < g.len() && (x as usize) < g[0].len() && g[y as usize][x as usize]
}

/// Uniform-cost search over 8-connected moves; a diagonal needs both
/// side cells free.
fn ucs_oracle(g: &[Vec<bool>], start: (i32, i32), goal: (i32, i32)) -> Option<Exact> {
    let (w, h) = (g[0].len(), g.len());
    let mut best = vec![None::<Exact>; w * h];
    let mut heap = BinaryHeap::new();
    heap.push(std::cmp::Reverse((Exact { s: 0, d: 0 }, start)));
    while let Some(std::cmp::Reverse((c, (x, y)))) = heap.pop() {
        let i = y as usize * w + x as usize;
        if best[i].is_some() {
            continue;
        }
        best[i] = Some(c);
        if (x, y) == goal {
            return Some(c);
        }
        for dx in -1..=1 {
            for dy in -1..=1 {
                if (dx, dy) == (0, 0) || !free(g, x + dx, y + dy) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(free(g, x + dx, y) && free(g, x, y + dy)) {
                    continue;
                }
                let nc = if diag { Exact { s: c.s, d: c.d + 1 } } else { Exact { s: c.s + 1, d: c.d } };
                heap.push(std::cmp::Reverse((nc, (x + dx, y + dy))));
            }
        }
    }
    None
}

fn planner_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut mismatches, mut reachable) = (0, 0);
    for _ in 0..500 {
        let (w, h) = (rng.random_range(2..=12usize), rng.random_range(2..=12usize));
        let density = rng.random_range(0.0..0.45);
        let cells: Vec<Vec<bool>> = (0..h)
            .map(|_| (0..w).map(|_| !rng.random_bool(density)).collect())
            .collect();
        let open: Vec<(i32, i32)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x as i32, y as i32)))
            .filter(|&(x, y)| cells[y as usize][x as usize])
            .collect();
        if open.is_empty() {
            continue;
        }
        let start = open[rng.random_range(0..open.len())];
        let goal = open[rng.random_range(0..open.len())];
        let mut grid = OccupancyGrid::new(w, h, 1.0);
        for (y, row) in cells.iter().enumerate() {
            for (x, &open) in row.iter().enumerate() {
                if !open {
                    grid.set(Cell::new(x as i32, y as i32), Occupancy::Occupied);
                }
            }
        }
        let oracle = ucs_oracle(&cells, start, goal);
        let got = plan(&grid, Cell::new(start.0, start.1), Cell::new(goal.0, goal.1)).ok();
        let agree = match (&got, oracle) {
            (None, None) => true,
            (Some(p), Some(c)) => {
                reachable += 1;
                p.cost.straight as i64 == c.s && p.cost.diagonal as i64 == c.d
            }
            _ => false,
        };
        if !agree {
            mismatches += 1;
        }
    }
    outcome(
        "planner oracle (A* cost == uniform-cost search)",
        mismatches == 0,
        format!("{mismatches} mismatches over 500 grids ({reachable} reachable)"),
    )
}

fn ema_closed_form() -> Outcome {
    let alpha = 0.2;
    let mut y = 0.0;
    for k in 0..10 {
        y = ema_update(y, &HeadPoseSample::new(k as f64 * 0.1, 45.0), alpha);
    }
    let expected = 45.0 * (1.0 - 0.8f64.powi(10));
    let step_err = (y - expected).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out_of_bounds = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-90.0..=90.0)).collect();
        let (lo, hi) = xs.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        let mut f = xs[0];
        for (i, &x) in xs.iter().enumerate().skip(1) {
            f = ema_update(f, &HeadPoseSample::new(i as f64, x), alpha);
            if f < lo - 1e-12 || f > hi + 1e-12 {
                out_of_bounds += 1;
            }
        }
    }
    outcome(
        "EMA closed form and boundedness",
        step_err <= 1e-9 && out_of_bounds == 0,
        format!("step response error {step_err:.2e} (tol 1e-9); {out_of_bounds} out-of-range outputs over 1000 traces"),
    )
}

fn error_window_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dt: f64 = 0.1;
    let len: f64 = 5.0;
    let n_window = (len / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mut w = MotionErrorWindow::new(len);
        let mut errors = Vec::new();
        // Cumulative trapezoid integral from the first sample.
        let mut cum = vec![0.0];
        for k in 0..rng.random_range(10..300) {
            let expert: f64 = rng.random_range(0.0..1.0);
            let actual: f64 = rng.random_range(0.0..1.0);
            let e: f64 = (expert - actual).max(0.0);
            w.update(expert, actual, k as f64 * dt);
            if let Some(&prev) = errors.last() {
                let c = cum.last().copied().unwrap() + 0.5 * (prev + e) * dt;
                cum.push(c);
            }
            errors.push(e);
            let expected = if errors.len() <= n_window {
                0.0
            } else {
                let i = errors.len() - 1;
                (cum[i] - cum[i - n_window]) / len
            };
            worst = worst.max((w.mean_error() - expected).abs());
        }
    }

    // Reset on switch: drive MI through repeated switches.
    let cfg = ControllerConfig::default();
    let mut c = Controller::new(Variant::Mi, cfg, LoaMode::Autonomy);
    let (mut switches, mut bad_resets) = (0, 0);
    let mut since_switch: Option<usize> = None;
    for k in 0..3000 {
        let inputs = ControllerInputs {
            expert_speed: 1.0,
            actual_speed: 0.0,
            availability: AvailabilityEstimate::FULL,
        };
        let rec = c.decide(&inputs, k as f64 * dt);
        if rec.issued.is_some() {
            switches += 1;
            since_switch = Some(0);
            if c.mean_error() != 0.0 {
                bad_resets += 1;
            }
        } else if let Some(s) = since_switch.as_mut() {
            *s += 1;
            if *s < n_window && c.mean_error() != 0.0 {
                bad_resets += 1;
            }
        }
    }
    outcome(
        "error-window oracle and reset on switch",
        worst <= 1e-9 && switches > 10 && bad_resets == 0,
        format!("max |mean - trapezoid oracle| = {worst:.2e} (tol 1e-9); {switches} switches, {bad_resets} non-zero means inside a fresh window"),
    )
}

fn expert_dominance(batches: &[&BatchResult], radius: f64) -> Outcome {
    let (mut legs, mut violations, mut trials) = (0, 0, 0);
    let mut worst = f64::INFINITY;
    for b in batches {
        for t in &b.trials {
            let m = t.metrics().expect("trial ran");
            if !m.completed {
                continue;
            }
            trials += 1;
            for leg in &m.legs {
                legs += 1;
                let slack = leg.odometry - (leg.expert_length - radius);
                worst = worst.min(slack);
                if slack < -1e-9 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        "expert dominance (expert length <= leg odometry)",
        violations == 0 && legs > 0,
        format!("{violations} violations over {legs} legs in {trials} completed trials; smallest slack {worst:.3} m"),
    )
}

fn files_under(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(sc: &Scenario) -> Outcome {
    let variants = [Variant::Mi, Variant::CaaMi, Variant::TeleopOnly, Variant::AutonomyOnly];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut logs = Vec::new();
    for d in &dirs {
        let b = run_batch(sc, &variants, 3, 40).unwrap();
        emit_report(&b, &summarize(&b), d.path()).unwrap();
        logs.push(
            b.trials
                .iter()
                .map(|t| varauto::engine::log_to_string(&t.outcome.as_ref().unwrap().log))
                .collect::<Vec<_>>(),
        );
    }
    let (a, b) = (files_under(dirs[0].path()), files_under(dirs[1].path()));
    let same = a == b && logs[0] == logs[1];
    outcome(
        "determinism (byte-identical logs and reports)",
        same && a.len() == 2 + 12,
        format!("{} report files compared across two runs; identical = {same}", a.len()),
    )
}

fn main() {
    let sc = scenario();
    let mut results = vec![rule_precedence(), variant_equivalence()];

    let t0 = Instant::now();
    let paired = run_batch(&sc, &[Variant::Mi, Variant::CaaMi], 100, 1).expect("batch runs");
    let elapsed = t0.elapsed();
    let failed: Vec<_> = paired.trials.iter().filter(|t| t.outcome.is_err()).collect();
    assert!(failed.is_empty(), "trials failed: {:?}", failed.iter().map(|t| (&t.variant, t.seed)).collect::<Vec<_>>());
    results.push(never_interrupt(&paired, elapsed));
    results.push(switch_trend(&paired));
    results.push(secondary_trend(&paired));
    results.push(planner_oracle());
    results.push(ema_closed_form());
    results.push(error_window_oracle());
    let baselines = run_batch(&sc, &[Variant::TeleopOnly, Variant::AutonomyOnly], 20, 1).expect("batch runs");
    results.push(expert_dominance(&[&paired, &baselines], sc.file.engine.waypoint_radius));
    results.push(determinism(&sc));

    // Sanity: the paired batch really exercised overlapping degradation.
    let overlapping = paired.trials.iter().all(|t| match &t.outcome.as_ref().unwrap().log[0] {
        LogRecord::Header(h) => matches!((h.noise, h.distraction), (Some(n), Some(d)) if n.start <= d.start && d.end <= n.end),
        _ => false,
    });
    results.push(outcome(
        "paired batch used overlapping degradation",
        overlapping,
        format!("{} trials checked", paired.trials.len()),
    ));

    let mut failures = 0;
    for r in &results {
        println!("[{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        failures += usize::from(!r.pass);
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
