//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use engage::arbiter::Action;
use engage::attention::{deviation, Bearing};
use engage::config::EngineConfig;
use engage::policy::{select_strategy, EngagementStrategy, StrategyTable};
use engage::protocol::emit_event;
use engage::sentiment::{Polarity, SentimentState, TrackState};
use engage::simulator::{run_scenario, synthesize_events, LatencyModel, Scenario};
use engage::stream::run_stream;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bundled(name: &str) -> Scenario {
    Scenario::from_file(format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))).expect("bundled scenario")
}

fn policy_conformance() -> Outcome {
    let started = Instant::now();
    let cfg = EngineConfig::default();
    let anchored = [
        (Polarity::Positive, true, EngagementStrategy::Engage),
        (Polarity::Positive, false, EngagementStrategy::Attract),
        (Polarity::NegativeStrong, true, EngagementStrategy::Avoid),
        (Polarity::NegativeStrong, false, EngagementStrategy::Ignore),
    ];
    for (polarity, attentive, expected) in anchored {
        let got = select_strategy(SentimentState::new(polarity, attentive), &cfg);
        ensure(got == expected, || format!("({polarity:?}, {attentive}) -> {got}, expected {expected}"))?;
    }
    let cells: Vec<_> = StrategyTable::default().iter().collect();
    ensure(cells.len() == 8, || format!("table has {} cells", cells.len()))?;
    for state in SentimentState::all() {
        ensure(cells.iter().any(|(s, _)| *s == state), || format!("{state:?} missing"))?;
    }
    let missing = StrategyTable::from_cells(cells[1..].iter().copied()).expect_err("7 cells must be rejected");
    ensure(missing == vec![cells[0].0], || format!("reported missing {missing:?}"))?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("4 anchored cells exact, 8-cell table total, {elapsed:.2?}"))
}

fn latency_model() -> Outcome {
    let m = LatencyModel::MEASURED;
    ensure((m.face_detection_ms, m.head_pose_ms, m.emotion_ms) == (6.7, 1.4, 6.3), || format!("{m:?}"))?;
    ensure((m.total_ms() - 14.4).abs() < 1e-9, || format!("total {}", m.total_ms()))?;
    let mut checked = 0;
    for name in ["happy.toml", "fear.toml", "demo.toml"] {
        let sc = bundled(name);
        let report = run_scenario(&sc, &EngineConfig::default()).map_err(|e| e.to_string())?;
        let rate = report.frame_rate;
        for c in &report.commands {
            let frame = ((c.t - 0.0144) * rate).round();
            let err = (c.t - (frame / rate + 0.0144)).abs();
            ensure(err <= 1e-9, || format!("{name}: command at {} off by {err:e}", c.t))?;
            checked += 1;
        }
        for row in &report.rows {
            let err = (row.decided_at - (row.t + 0.0144)).abs();
            ensure(err <= 1e-9, || format!("{name}: frame {} decided off by {err:e}", row.frame))?;
        }
    }
    Ok(format!("{checked} decision stamps = frame time + 14.4 ms within 1e-9 s"))
}

/// A stream of base regimes with short excursions to other states; returns
/// the raw samples and the base state of each frame.
fn flicker_stream(rng: &mut ChaCha8Rng, dwell: usize) -> (Vec<SentimentState>, Vec<SentimentState>) {
    let states: Vec<SentimentState> = SentimentState::all().collect();
    let regimes = rng.gen_range(1..=4);
    let mut bases = Vec::new();
    let mut prev: Option<SentimentState> = None;
    for _ in 0..regimes {
        let base = loop {
            let s = states[rng.gen_range(0..states.len())];
            if Some(s) != prev {
                break s;
            }
        };
        let len = rng.gen_range(dwell..80);
        bases.push((base, len));
        prev = Some(base);
    }

    let mut raw = Vec::new();
    let mut base_of = Vec::new();
    for (k, &(base, len)) in bases.iter().enumerate() {
        let neighbours = [Some(base), k.checked_sub(1).map(|j| bases[j].0), bases.get(k + 1).map(|b| b.0)];
        let start = raw.len();
        while raw.len() - start < len {
            let left = len - (raw.len() - start);
            // at least one base frame between excursions
            if left > 1 && rng.gen_bool(0.3) {
                let value = loop {
                    let s = states[rng.gen_range(0..states.len())];
                    if !neighbours.contains(&Some(s)) {
                        break s;
                    }
                };
                let run = rng.gen_range(1..dwell).min(left - 1);
                for _ in 0..run {
                    raw.push(value);
                    base_of.push(base);
                }
            }
            raw.push(base);
            base_of.push(base);
        }
    }
    (raw, base_of)
}

fn debounce_guarantee() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xdeb0);
    let (mut frames, mut flickers, mut switches) = (0usize, 0usize, 0usize);
    for stream in 0..10_000 {
        let cfg = if stream % 2 == 0 {
            EngineConfig::default()
        } else {
            let window = rng.gen_range(4..=30);
            let cfg = EngineConfig {
                window,
                dwell: rng.gen_range(2..=window),
                majority: rng.gen_range(0.51..=1.0),
                ..EngineConfig::default()
            };
            cfg.validate().map_err(|e| e.to_string())?
        };
        let (raw, base) = flicker_stream(&mut rng, cfg.dwell);
        let mut track = TrackState::new(1);
        let mut last: Option<SentimentState> = None;
        for (i, sample) in raw.iter().enumerate() {
            flickers += usize::from(*sample != base[i]);
            let filtered = track.push(*sample, i as f64, &cfg).map_err(|e| e.to_string())?;
            if filtered != last {
                switches += 1;
                let now = filtered.expect("filtered state never returns to none");
                ensure(now == base[i], || {
                    format!("stream {stream} frame {i}: switched to {now:?} during {:?}", base[i])
                })?;
                let strategy = select_strategy(now, &cfg);
                ensure(strategy == select_strategy(base[i], &cfg), || format!("stream {stream}: spurious {strategy}"))?;
                last = filtered;
            }
        }
        frames += raw.len();
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "10000 streams, {frames} frames, {flickers} flicker frames, {switches} switches, 0 spurious, {elapsed:.2?}"
    ))
}

/// Angle between head facing and the direction back to the camera, built
/// from rotation matrices rather than closed-form vectors.
fn brute_force_deviation(yaw: f64, pitch: f64, alpha: f64, beta: f64) -> f64 {
    fn rot_x(t: f64, v: [f64; 3]) -> [f64; 3] {
        let (s, c) = t.to_radians().sin_cos();
        [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]]
    }
    fn rot_y(t: f64, v: [f64; 3]) -> [f64; 3] {
        let (s, c) = t.to_radians().sin_cos();
        [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
    }
    // camera frame: x right, y up, z forward out of the lens
    let facing = rot_y(-yaw, rot_x(pitch, [0.0, 0.0, -1.0]));
    let face = rot_y(alpha, rot_x(-beta, [0.0, 0.0, 1.0]));
    let back = [-face[0], -face[1], -face[2]];
    let diff = (0..3).map(|i| (facing[i] - back[i]).powi(2)).sum::<f64>().sqrt();
    let sum = (0..3).map(|i| (facing[i] + back[i]).powi(2)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum).to_degrees()
}

fn attention_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa77e);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let (yaw, pitch) = (rng.gen_range(-90.0..=90.0), rng.gen_range(-90.0..=90.0));
        let (alpha, beta) = (rng.gen_range(-89.0..=89.0), rng.gen_range(-89.0..=89.0));
        let got = deviation(yaw, pitch, Bearing::new(alpha, beta));
        let want = brute_force_deviation(yaw, pitch, alpha, beta);
        let err = (got - want).abs();
        ensure(err <= 1e-6, || format!("sample {i} ({yaw}, {pitch}, {alpha}, {beta}): {got} vs {want}"))?;
        worst = worst.max(err);
    }
    ensure(brute_force_deviation(-20.0, 5.0, 20.0, -5.0).abs() < 1e-9, || "camera-facing pose".into())?;
    Ok(format!("10000 samples, max error {worst:.1e} deg"))
}

fn end_to_end() -> Outcome {
    let cfg = EngineConfig::default();
    let expected_lag = (cfg.majority * cfg.window as f64 - 1e-9).ceil().max(cfg.dwell as f64) as usize;
    ensure(expected_lag == 9, || format!("derived lag {expected_lag}"))?;

    let happy = run_scenario(&bundled("happy.toml"), &cfg).map_err(|e| e.to_string())?;
    let track = &happy.tracks[0];
    ensure(happy.final_strategy(1) == Some(EngagementStrategy::Engage), || "happy did not engage".into())?;
    ensure(happy.speak_count(1) == 1, || format!("{} greetings", happy.speak_count(1)))?;
    ensure(track.reaction_delays == vec![expected_lag], || format!("delays {:?}", track.reaction_delays))?;
    let switch = track.timeline.iter().find(|e| e.strategy.is_some()).expect("a switch");
    let lag_ms = (switch.t - LatencyModel::MEASURED.total_seconds()) * 1000.0 + 1000.0 / happy.frame_rate;
    ensure((lag_ms - 300.0).abs() < 1e-6, || format!("switch after {lag_ms} ms"))?;

    let mut avert_frames = 0;
    for alpha in [0.0, 5.0, -7.5] {
        let mut sc = bundled("fear.toml");
        sc.persons[0].bearing[0].alpha = alpha;
        let fear = run_scenario(&sc, &cfg).map_err(|e| e.to_string())?;
        ensure(fear.final_strategy(1) == Some(EngagementStrategy::Avoid), || format!("fear at {alpha} did not avoid"))?;
        ensure(fear.speak_count(1) == 0, || format!("fear at {alpha} greeted"))?;
        ensure(fear.tracks[0].reaction_delays == vec![expected_lag], || {
            format!("{:?}", fear.tracks[0].reaction_delays)
        })?;
        // once the head reaches the averted pose the face stays outside the cone
        let first_avert = fear
            .commands
            .iter()
            .position(|c| matches!(c.action, Action::AvertGaze { .. }))
            .ok_or("no avert command")?;
        let from = fear.commands[first_avert].t;
        let reached = fear
            .rows
            .iter()
            .position(|r| r.decided_at >= from && r.off_axis >= cfg.avert_cone - 1e-9)
            .ok_or("avert pose never reached")?;
        for r in &fear.rows[reached..] {
            ensure(r.off_axis >= cfg.avert_cone - 1e-9, || {
                format!("alpha {alpha}: frame {} at {}", r.frame, r.off_axis)
            })?;
            ensure(r.visible, || format!("alpha {alpha}: frame {} lost the face", r.frame))?;
            avert_frames += 1;
        }
    }
    Ok(format!(
        "happy: engage, 1 speak; fear: avoid, 0 speak, {avert_frames} averted frames >= {} deg; switch after {expected_lag} frames (300 ms)",
        cfg.avert_cone
    ))
}

fn throughput() -> Outcome {
    let cfg = EngineConfig::default();
    let mut sc = bundled("demo.toml");
    sc.duration = 100.0;
    sc.persons[1].exit = None;
    let mut input = String::new();
    let mut events = 0;
    for obs in synthesize_events(&sc, &cfg) {
        input.push_str(&emit_event(&obs));
        input.push('\n');
        events += 1;
    }
    let (mut out, mut diag) = (Vec::with_capacity(input.len() * 2), Vec::new());
    let started = Instant::now();
    let summary = run_stream(input.as_bytes(), &mut out, &mut diag, &cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    ensure(summary.events == events && summary.errors == 0, || format!("{summary:?}"))?;
    let rate = events as f64 / elapsed;
    let per_event_p99 = summary.parse_us.p99 + summary.decide_us.p99 + summary.emit_us.p99;
    ensure(rate >= 10_000.0, || format!("{rate:.0} events/s"))?;
    ensure(summary.decide_us.p99 < 1000.0, || format!("decide p99 {} us", summary.decide_us.p99))?;
    ensure(per_event_p99 < 1000.0, || format!("stage p99 sum {per_event_p99} us"))?;
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    Ok(format!(
        "{events} events at {rate:.0}/s ({profile} build), decide p99 {:.1} us, parse+decide+emit p99 <= {per_event_p99:.1} us",
        summary.decide_us.p99
    ))
}

fn determinism() -> Outcome {
    let sc = bundled("demo.toml");
    let cfg = EngineConfig::default();
    let a = run_scenario(&sc, &cfg).map_err(|e| e.to_string())?;
    let b = run_scenario(&sc, &cfg).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.to_json(), b.to_json());
    ensure(ja.as_bytes() == jb.as_bytes(), || "reports differ".into())?;
    ensure(a.timeline_csv() == b.timeline_csv(), || "timelines differ".into())?;
    Ok(format!("demo seed {}: {} byte report identical across runs", sc.seed, ja.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("policy conformance", policy_conformance),
        ("latency model", latency_model),
        ("debounce guarantee", debounce_guarantee),
        ("attention oracle equivalence", attention_oracle),
        ("end-to-end scenario", end_to_end),
        ("throughput", throughput),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
