//! Pass/fail report for the headline behaviours, one line per criterion.
//! Runs without the test harness so the report is always printed.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use souschef::api::{Ack, CommandKind, EventLog, LogCategory, RecipeStore};
use souschef::labeling::{balance_dataset, export_manifest, load_corpus, BalancePolicy, DatasetManifest};
use souschef::perception::{ConfidenceVector, FilterConfig, RollingFilter};
use souschef::plant::SimScript;
use souschef::runtime::{run_corpus, run_recipe_script};
use souschef::{assets, Config, Runtime};

// Pinned tolerances.
const REPLAY_CLASSIFIER: usize = 9;
const REPLAY_TIMER: usize = 3;
const REPLAY_WARNINGS: usize = 3;
const REPLAY_WALL_LIMIT_S: f64 = 30.0;
const LATENCY_TARGET_S: f64 = 2.0;
const LATENCY_TOL_S: f64 = 0.5;
const PID_SETPOINT: f64 = 100.0;
const PID_BAND: f64 = 3.0;
const PID_SETTLE_LIMIT_S: f64 = 600.0;
const PID_HOLD_S: f64 = 60.0;
const PERCEPTION_PERIOD_S: f64 = 0.5;
const BALANCE_RATIO: f64 = 1.1;
const PASTA_RECORDS: usize = 2045;
const SAUCE_RECORDS: usize = 4042;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(name: &'static str, pass: bool, detail: String) -> Line {
    Line { name, pass, detail }
}

fn heating_runtime(recipe: &str, extra: &str) -> Runtime {
    let mut rt = Runtime::with_defaults(Config::default()).unwrap();
    for kind in [CommandKind::LoadRecipe { id: recipe.into() }, CommandKind::StartRecipe] {
        assert!(matches!(rt.submit(kind, "acceptance"), Ack::Accepted { .. }));
    }
    rt.step().unwrap();
    let text = format!(
        r#"{{"events": [
            {{"t": 0.2, "type": "set_milestone", "args": {{"label": "pan_on"}}}},
            {{"t": 5.0, "type": "add_water", "args": {{"kg": 0.3}}}},
            {{"t": 5.05, "type": "set_milestone", "args": {{"label": "add_water"}}}}
            {extra}
        ]}}"#
    );
    rt.load_script(SimScript::from_json(&text).unwrap()).unwrap();
    rt
}

fn replay() -> Line {
    let started = Instant::now();
    let result = run_recipe_script(
        Config::default(),
        RecipeStore::with_bundled(),
        "pasta_tomato_sauce",
        assets::validation_script(),
        None,
    );
    let wall = started.elapsed().as_secs_f64();
    let Ok((_, r)) = result else {
        return line("validation replay", false, format!("run failed: {:?}", result.err()));
    };
    let pass = r.complete
        && r.classifier_transitions == REPLAY_CLASSIFIER
        && r.timer_transitions == REPLAY_TIMER
        && r.warnings == REPLAY_WARNINGS
        && r.overrides == 0
        && r.override_transitions == 0
        && wall < REPLAY_WALL_LIMIT_S;
    line(
        "validation replay",
        pass,
        format!(
            "classifier={} timer={} warnings={} overrides={} (want {}/{}/{}/0 exact); \
             {:.1} sim min in {:.2} s wall (limit {} s)",
            r.classifier_transitions,
            r.timer_transitions,
            r.warnings,
            r.overrides,
            REPLAY_CLASSIFIER,
            REPLAY_TIMER,
            REPLAY_WARNINGS,
            r.sim_seconds / 60.0,
            wall,
            REPLAY_WALL_LIMIT_S
        ),
    )
}

fn latency() -> Line {
    // Filter alone: a clean step between frames at 2 Hz, window 4.
    let labels: Vec<String> = ["a", "b"].map(String::from).to_vec();
    let mut filter = RollingFilter::new(FilterConfig::default(), &labels).unwrap();
    let onset = 10.0;
    let mut filter_latency = f64::NAN;
    for k in 0..60 {
        let t = f64::from(k) * 0.5;
        let b = if t > onset { 1.0 } else { 0.0 };
        let conf = ConfidenceVector {
            timestamp: t,
            scores: [("a".to_string(), 1.0 - b), ("b".to_string(), b)].into(),
        };
        if let Some(e) = filter.update(&conf).unwrap() {
            if e.label == "b" {
                filter_latency = e.timestamp - onset;
                break;
            }
        }
    }
    // Whole runtime: scene change to logged recipe transition, noisy classifier.
    let mut rt = heating_runtime("pasta", "");
    rt.run_until(30.0, |_| false).unwrap();
    let log = rt.log().read().unwrap();
    let transition = log
        .entries()
        .iter()
        .find(|e| e.category == LogCategory::Transition && e.payload["to"] == "heat_water")
        .map(|e| e.timestamp);
    let runtime_latency = transition.map_or(f64::NAN, |t| t - 5.05);
    // window_len frames at rate_hz
    let expected = 4.0 / 2.0;
    let ok = |v: f64| (v - LATENCY_TARGET_S).abs() <= LATENCY_TOL_S;
    line(
        "perception latency",
        expected == LATENCY_TARGET_S && ok(filter_latency) && ok(runtime_latency),
        format!(
            "filter step {filter_latency:.2} s, runtime scene-to-transition {runtime_latency:.2} s \
             (target {LATENCY_TARGET_S} +/- {LATENCY_TOL_S} s)"
        ),
    )
}

fn pid_regulation() -> Line {
    let mut rt = Runtime::with_defaults(Config::default()).unwrap();
    let start_temp = rt.plant().pan_temp;
    rt.submit(CommandKind::SetSetpoint { celsius: PID_SETPOINT }, "acceptance");
    let mut in_band_since: Option<f64> = None;
    let mut settled_at = None;
    let mut power_ok = true;
    let mut max_overshoot: f64 = 0.0;
    while rt.time() < PID_SETTLE_LIMIT_S + PID_HOLD_S {
        let s = rt.step().unwrap();
        for p in [s.power, s.commanded_power] {
            power_ok &= (0.0..=1.0).contains(&p);
        }
        let temp = rt.plant().pan_temp;
        max_overshoot = max_overshoot.max(temp - PID_SETPOINT);
        if (temp - PID_SETPOINT).abs() <= PID_BAND {
            let since = *in_band_since.get_or_insert(rt.time());
            if settled_at.is_none() && rt.time() - since >= PID_HOLD_S - 1e-9 {
                settled_at = Some(since);
            }
        } else {
            in_band_since = None;
            if settled_at.is_some_and(|s| rt.time() < s + PID_HOLD_S) {
                settled_at = None;
            }
        }
    }
    let pass = start_temp == 20.0
        && power_ok
        && settled_at.is_some_and(|t| t <= PID_SETTLE_LIMIT_S);
    line(
        "PID regulation",
        pass,
        format!(
            "from {start_temp} C, within +/-{PID_BAND} C of {PID_SETPOINT} C from t={} and held {PID_HOLD_S} s \
             (limit {PID_SETTLE_LIMIT_S} s); max overshoot {max_overshoot:.2} C; power in [0,1]: {power_ok}",
            settled_at.map_or("never".into(), |t| format!("{t:.1} s")),
        ),
    )
}

fn interlocks() -> Line {
    let mut rt = heating_runtime(
        "pasta",
        r#", {"t": 60.0, "type": "remove_pan"}, {"t": 80.0, "type": "return_pan"}"#,
    );
    rt.run_until(60.0, |_| false).unwrap();
    let heating_before = rt.snapshot().power > 0.0;
    let mut cut_after = None;
    let mut zero_while_away = true;
    let mut restored_after = None;
    while rt.time() < 85.0 {
        let s = rt.step().unwrap();
        if s.time > 60.0 && s.time <= 80.0 + 1e-9 {
            if cut_after.is_none() && s.power == 0.0 {
                cut_after = Some(s.tick - 600);
            }
            zero_while_away &= s.power == 0.0;
        }
        if s.time > 80.0 && restored_after.is_none() && s.power > 0.0 {
            restored_after = Some(s.time - 80.0);
        }
    }
    let pass = heating_before
        && cut_after == Some(1)
        && zero_while_away
        && restored_after.is_some_and(|d| d <= PERCEPTION_PERIOD_S + 1e-9);
    line(
        "safety interlocks",
        pass,
        format!(
            "power zero {} tick(s) after removal (limit 1), zero throughout absence: {zero_while_away}; \
             heat back {} after return (limit {PERCEPTION_PERIOD_S} s)",
            cut_after.map_or("never".into(), |n| n.to_string()),
            restored_after.map_or("never".into(), |d| format!("{d:.1} s")),
        ),
    )
}

/// Independent check of when a window of four same-dominant frames with
/// mean >= 0.5 first forms for `want` (or for anything but `want`).
struct WindowOracle {
    frames: VecDeque<BTreeMap<String, f64>>,
}

impl WindowOracle {
    fn push(&mut self, scores: &BTreeMap<String, f64>) {
        if self.frames.len() == 4 {
            self.frames.pop_front();
        }
        self.frames.push_back(scores.clone());
    }

    fn fired(&self, pred: impl Fn(&str) -> bool) -> bool {
        if self.frames.len() < 4 {
            return false;
        }
        let dominant = |s: &BTreeMap<String, f64>| {
            s.iter()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(l, _)| l.clone())
                .unwrap()
        };
        let d = dominant(&self.frames[0]);
        if !self.frames.iter().all(|f| dominant(f) == d) || !pred(&d) {
            return false;
        }
        self.frames.iter().map(|f| f[&d]).sum::<f64>() / 4.0 >= 0.5
    }
}

fn boilover() -> Line {
    let mut rt = heating_runtime(
        "pasta",
        r#", {"t": 100.0, "type": "trigger_boilover"}, {"t": 130.0, "type": "clear_boilover"}"#,
    );
    let mut oracle = WindowOracle { frames: VecDeque::new() };
    let mut last_frame = f64::NAN;
    let (mut onset_event, mut clear_event) = (None, None);
    while rt.time() < 150.0 {
        let s = rt.step().unwrap();
        if let Some(c) = &s.latest_confidences {
            if c.timestamp != last_frame {
                last_frame = c.timestamp;
                oracle.push(&c.scores);
                if s.time > 100.0 && onset_event.is_none() && oracle.fired(|l| l == "boilover") {
                    onset_event = Some(c.timestamp);
                }
                if s.time > 130.0 && clear_event.is_none() && oracle.fired(|l| l != "boilover") {
                    clear_event = Some(c.timestamp);
                }
            }
        }
    }
    let log = rt.log().read().unwrap();
    let first = |pred: &dyn Fn(&Value) -> bool, cat: LogCategory| {
        log.entries()
            .iter()
            .find(|e| e.category == cat && pred(&e.payload))
            .map(|e| e.timestamp)
    };
    let reduced = first(&|p| p["type"] == "power_scale" && p["scale"] == 0.3, LogCategory::Action);
    let warned = first(&|p| p["id"] == "boilover", LogCategory::Warning);
    let restored = log
        .entries()
        .iter()
        .find(|e| {
            e.timestamp > 130.0
                && e.category == LogCategory::Action
                && e.payload["type"] == "power_scale"
                && e.payload["scale"] == 1.0
        })
        .map(|e| e.timestamp);
    let cleared = first(&|p| p["type"] == "clear_warning" && p["id"] == "boilover", LogCategory::Action);
    let lag = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => b - a,
        _ => f64::NAN,
    };
    let d_reduce = lag(onset_event, reduced);
    let d_warn = lag(onset_event, warned);
    let d_restore = lag(clear_event, restored);
    let d_clear = lag(clear_event, cleared);
    let within = |d: f64| (0.0..=PERCEPTION_PERIOD_S + 1e-9).contains(&d);
    let final_ok = rt.snapshot().power_scale == 1.0 && rt.snapshot().active_warnings.is_empty();
    line(
        "boilover intervention",
        within(d_reduce) && within(d_warn) && within(d_restore) && within(d_clear) && final_ok,
        format!(
            "scale 0.3 {d_reduce:.2} s and warning {d_warn:.2} s after the boilover event; \
             scale 1.0 {d_restore:.2} s and warning cleared {d_clear:.2} s after it ended \
             (limit {PERCEPTION_PERIOD_S} s)"
        ),
    )
}

fn recount(root: &Path) -> usize {
    walk(&root.join("sessions"))
        .into_iter()
        .filter(|p| p.ends_with("records.jsonl"))
        .map(|p| std::fs::read_to_string(p).unwrap().lines().filter(|l| !l.is_empty()).count())
        .sum()
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn dataset() -> Line {
    let mut details = Vec::new();
    let mut pass = true;
    for (recipe, want) in [("pasta", PASTA_RECORDS), ("tomato_sauce", SAUCE_RECORDS)] {
        let dir = tempfile::tempdir().unwrap();
        let spec = assets::corpus(recipe).unwrap();
        run_corpus(&spec, &Config::default(), &RecipeStore::with_bundled(), dir.path()).unwrap();
        let records = load_corpus(dir.path()).unwrap();
        let manifest = DatasetManifest::from_records(&records).unwrap();
        let on_disk = recount(dir.path());
        let a = balance_dataset(&records, &BalancePolicy::default()).unwrap();
        let b = balance_dataset(&records, &BalancePolicy::default()).unwrap();
        let ratio = a.report.achieved_ratio();
        pass &= spec.sessions.len() == 5
            && on_disk == want
            && manifest.rows.len() == on_disk
            && ratio <= BALANCE_RATIO
            && a.subset == b.subset;
        details.push(format!(
            "{recipe}: {on_disk} records (want {want}), manifest {} rows, ratio {ratio:.3}",
            manifest.rows.len()
        ));
        if recipe == "pasta" {
            let out = dir.path().join("balanced.csv");
            export_manifest(&a.subset, &out).unwrap();
            let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pasta_balanced.csv");
            let same = std::fs::read(out).unwrap() == std::fs::read(golden).unwrap();
            pass &= same;
            details.push(format!("golden csv bit-exact: {same}"));
        }
    }
    line(
        "dataset pipeline",
        pass,
        format!("{} (ratio limit {BALANCE_RATIO}, seed 2045)", details.join("; ")),
    )
}

/// Stand-in for the unreproducible image-model precision figures: the
/// filter's guarantees on seeded noisy traces.
fn classifier_properties() -> Line {
    let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut violations = BTreeMap::<&str, usize>::new();
    let traces = 500;
    for _ in 0..traces {
        let mut truth = Vec::new();
        while truth.len() < 80 {
            let l = rng.random_range(0..3usize);
            let n = rng.random_range(1..15usize);
            truth.extend(std::iter::repeat_n(l, n));
        }
        // Noise below the threshold gap keeps the true label dominant.
        let noise = rng.random_range(0.0..0.45);
        let frames: Vec<ConfidenceVector> = truth
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let top = 1.0 - noise * rng.random::<f64>();
                let mut s = [(1.0 - top) / 2.0; 3];
                s[l] = top;
                ConfidenceVector {
                    timestamp: i as f64 * 0.5,
                    scores: labels.iter().cloned().zip(s).collect(),
                }
            })
            .collect();
        let run = |threshold: f64| {
            let mut f = RollingFilter::new(FilterConfig { window_len: 4, threshold }, &labels).unwrap();
            frames
                .iter()
                .enumerate()
                .filter_map(|(i, c)| f.update(c).unwrap().map(|e| (i, e.label)))
                .collect::<Vec<_>>()
        };
        let events = run(0.5);
        for (i, label) in &events {
            let idx = labels.iter().position(|l| l == label).unwrap();
            if *i < 3 || !truth[i - 3..=*i].iter().all(|t| *t == idx) {
                *violations.entry("early").or_default() += 1;
            }
        }
        if events.windows(2).any(|w| w[0].1 == w[1].1) {
            *violations.entry("repeat").or_default() += 1;
        }
        // Every run of at least 4 frames that differs from the previous
        // label must be reported within 2 s of its onset.
        let mut start = 0;
        let mut prev_label: Option<usize> = None;
        for i in 1..=truth.len() {
            if i == truth.len() || truth[i] != truth[start] {
                let l = truth[start];
                if i - start >= 4 && prev_label != Some(l) {
                    let hit = events.iter().any(|(j, e)| *e == labels[l] && *j == start + 3);
                    if !hit {
                        *violations.entry("latency").or_default() += 1;
                    }
                }
                if i - start >= 4 {
                    prev_label = Some(l);
                }
                start = i;
            }
        }
        let strict = run(0.9);
        for label in &labels {
            let first = |ev: &[(usize, String)]| ev.iter().find(|(_, e)| e == label).map(|(i, _)| *i);
            if let Some(h) = first(&strict) {
                if first(&events).is_none_or(|l| l > h) {
                    *violations.entry("monotone").or_default() += 1;
                }
            }
        }
    }
    line(
        "classifier property substitute",
        violations.is_empty(),
        format!(
            "{traces} seeded noisy traces: no early events, no repeats, step reported at window fill, \
             raising the threshold never fires earlier; violations {violations:?}"
        ),
    )
}

fn normalized_log(config: Config) -> String {
    let (rt, _) = run_recipe_script(
        config,
        RecipeStore::with_bundled(),
        "pasta_tomato_sauce",
        assets::validation_script(),
        None,
    )
    .unwrap();
    let log = rt.log().read().unwrap();
    let t0 = log.entries().first().map_or(0.0, |e| e.timestamp);
    let mut copy = EventLog::in_memory();
    for e in log.entries() {
        copy.append(e.timestamp - t0, e.category, e.payload.clone());
    }
    copy.to_jsonl()
}

fn determinism() -> Line {
    let a = normalized_log(Config::default());
    let b = normalized_log(Config::default());
    line(
        "determinism",
        a == b && !a.is_empty(),
        format!("two runs, {} log lines each, byte-identical: {}", a.lines().count(), a == b),
    )
}

fn main() -> ExitCode {
    let checks: [fn() -> Line; 8] = [
        replay,
        latency,
        pid_regulation,
        interlocks,
        boilover,
        dataset,
        classifier_properties,
        determinism,
    ];
    let mut failed = 0;
    for check in checks {
        let l = check();
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
        failed += usize::from(!l.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
