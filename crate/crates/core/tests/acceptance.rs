//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::fixture;
use common::oracle::{
    naive_blend, naive_cells, naive_color_means, naive_heatmap, naive_mean, naive_ranking,
    NaiveMember,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermofuse::dataset::{split, PairedSample, SplitOptions};
use thermofuse::detection::protocol::{self, DetectResponse};
use thermofuse::detection::{ConfidenceTable, DetectError, MockDetector};
use thermofuse::evaluation::{
    delta_report, load_trials, read_trial_manifest, sem, EvaluationOptions, EvaluationReport,
    Trial, HELD_OUT_COLORS, MUG_COLORS,
};
use thermofuse::illumination::{categorize, IlluminationCategory};
use thermofuse::imaging::{blend, blend_channel, Frame, FusionLevel, Modality};
use thermofuse::pipeline::{run_trial, PipelineConfig, RunEvent, SyntheticTrial, TrialLog};
use thermofuse::registry::{standard_model_id, CohortMember, CohortStats, Registry};
use thermofuse::turret::{
    error_to_command, simulate, track_static_target, PanTiltCommand, TargetingConfig, TurretState,
};

const BLEND_TOLERANCE: f64 = 1.0;
const BLEND_BUDGET: Duration = Duration::from_secs(5);
const DELTA_ABS_TOLERANCE: f64 = 0.005;
const DELTA_REL_TOLERANCE_PCT: f64 = 0.05;
const SEM_EXACT_TOLERANCE: f64 = 1e-12;
const SEM_BACKDERIVED_TOLERANCE: f64 = 5e-5;
const TRIAL_MEAN_TOLERANCE: f64 = 1e-6;
const ORACLE_TOLERANCE: f64 = 1e-12;
const SPLIT_COUNT_TOLERANCE: usize = 1;
const SPLIT_BUDGET: Duration = Duration::from_secs(1);
const TURRET_MAX_CYCLES: usize = 20;
const TURRET_MAX_INITIAL_DEG: f64 = 30.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn level(p: u8) -> FusionLevel {
    FusionLevel::new(p).unwrap()
}

fn fusion_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let l = level(rng.random_range(0..=10u8) * 10);
        let (a, b): (u8, u8) = (rng.random(), rng.random());
        let got = f64::from(blend_channel(a, b, l));
        let diff = (got - naive_blend(a, b, l.rgb_percent())).abs();
        worst = worst.max(diff);
        ensure(diff <= BLEND_TOLERANCE, || {
            format!("level {l} rgb {a} lwir {b}: {got} off by {diff}")
        })?;
    }
    let (w, h) = (97, 61);
    let rgb_px: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
    let lwir_px: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
    let rgb = Frame::new(w, h, Modality::Rgb, rgb_px.clone(), 0).unwrap();
    let lwir = Frame::new(w, h, Modality::Lwir, lwir_px.clone(), 0).unwrap();
    ensure(
        blend(&rgb, &lwir, FusionLevel::RGB_ONLY).unwrap().pixels() == rgb_px.as_slice(),
        || "level 100 is not the RGB frame".into(),
    )?;
    ensure(
        blend(&rgb, &lwir, FusionLevel::LWIR_ONLY).unwrap().pixels() == lwir_px.as_slice(),
        || "level 0 is not the LWIR frame".into(),
    )?;
    let elapsed = start.elapsed();
    ensure(elapsed < BLEND_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("max |err| {worst:.3}, {elapsed:.2?}"))
}

fn member(pct: u8, cat: IlluminationCategory, mean: f64, std: f64) -> CohortMember {
    CohortMember::new(standard_model_id(level(pct), cat), level(pct), mean, std)
}

fn composite_extremes() -> Outcome {
    let dim = IlluminationCategory::DimLight;
    let mut members = vec![
        member(90, dim, 0.9203, 0.0200 * 6f64.sqrt()),
        member(80, dim, 0.9000, 0.0333 * 6f64.sqrt()),
        member(70, dim, 0.8543, 0.0491 * 6f64.sqrt()),
    ];
    for (i, pct) in [0u8, 10, 20, 30, 40, 50, 60, 100].into_iter().enumerate() {
        members.push(member(
            pct,
            dim,
            0.60 + 0.02 * i as f64,
            0.30 - 0.01 * i as f64,
        ));
    }
    let cohort = CohortStats::new(members).unwrap();
    let top = cohort.composite_score("y11n-f090-dim").unwrap();
    let bottom = cohort.composite_score("y11n-f000-dim").unwrap();
    ensure(top == 1.0, || format!("dim 90/10 scored {top}"))?;
    ensure(bottom == -1.0, || format!("dim 0/100 scored {bottom}"))?;
    ensure(cohort.rank()[0].0.model_id == "y11n-f090-dim", || {
        "90/10 not ranked first".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..200 {
        let n = rng.random_range(2..=11usize);
        let mut ms: Vec<CohortMember> = (0..n)
            .map(|i| {
                member(
                    i as u8 * 10,
                    dim,
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.01..0.2),
                )
            })
            .collect();
        ms[0].mean = 0.95;
        ms[0].std = 0.001;
        ms[1].mean = 0.05;
        ms[1].std = 0.5;
        let (best, worst) = (ms[0].model_id.clone(), ms[1].model_id.clone());
        let c = CohortStats::new(ms).unwrap();
        let (s1, s2) = (
            c.composite_score(&best).unwrap(),
            c.composite_score(&worst).unwrap(),
        );
        ensure(s1 == 1.0 && s2 == -1.0, || {
            format!("random cohort {trial}: extremes {s1} / {s2}")
        })?;
    }
    Ok(format!(
        "dim 90/10 = {top}, 0/100 = {bottom}; 200 random cohorts exact"
    ))
}

fn affine_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cat = IlluminationCategory::NoLight;
    let members: Vec<CohortMember> = FusionLevel::all()
        .map(|l| {
            member(
                l.rgb_percent(),
                cat,
                rng.random_range(0.4..0.8),
                rng.random_range(0.01..0.3),
            )
        })
        .collect();
    let order = |ms: &[CohortMember]| -> Vec<String> {
        CohortStats::new(ms.to_vec())
            .unwrap()
            .rank()
            .into_iter()
            .map(|(m, _)| m.model_id)
            .collect()
    };
    let base = order(&members);
    let (lo, hi) = (0.4, 0.8);
    for k in 0..100 {
        let a: f64 = rng.random_range(0.05..1.2);
        let b: f64 = rng.random_range(-a * lo..(1.0 - a * hi));
        let moved: Vec<CohortMember> = members
            .iter()
            .map(|m| CohortMember {
                mean: a * m.mean + b,
                ..m.clone()
            })
            .collect();
        let got = order(&moved);
        ensure(got == base, || {
            format!("transform {k} (a = {a}, b = {b}) reordered to {got:?}")
        })?;
    }
    Ok("100 transforms, ranking unchanged".into())
}

fn delta_reproduction() -> Outcome {
    let mut lines = Vec::new();
    for (a, b, abs, rel) in [
        (0.9203, 0.9000, 0.0203, 2.26),
        (0.9203, 0.8543, 0.0660, 7.73),
    ] {
        let d = delta_report(a, b);
        let r = d.relative_percent.ok_or("relative delta missing")?;
        ensure((d.absolute - abs).abs() <= DELTA_ABS_TOLERANCE, || {
            format!("{a} vs {b}: absolute {}", d.absolute)
        })?;
        ensure((r - rel).abs() <= DELTA_REL_TOLERANCE_PCT, || {
            format!("{a} vs {b}: relative {r}%")
        })?;
        lines.push(format!("+{:.4} / +{r:.2}%", d.absolute));
    }
    Ok(lines.join(", "))
}

fn sem_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let s: f64 = rng.random_range(0.0..0.5);
        let got = sem(s, 6).map_err(|e| e.to_string())?;
        ensure((got - s / 6f64.sqrt()).abs() <= SEM_EXACT_TOLERANCE, || {
            format!("sem({s}, 6) = {got}")
        })?;
    }
    let back = sem(0.0200 * 6f64.sqrt(), 6).map_err(|e| e.to_string())?;
    ensure((back - 0.0200).abs() <= SEM_BACKDERIVED_TOLERANCE, || {
        format!("back-derived sem {back}")
    })?;
    Ok(format!("back-derived sem {back:.6}"))
}

fn no_light_ordering() -> Outcome {
    let cat = IlluminationCategory::NoLight;
    let root6 = 6f64.sqrt();
    let members: Vec<CohortMember> = FusionLevel::all()
        .map(|l| match l.rgb_percent() {
            40 => member(40, cat, 0.7103, 0.0388 * root6),
            50 => member(50, cat, 0.7227, 0.1039 * root6),
            p => {
                let d = f64::from(p.abs_diff(40)) / 10.0;
                member(p, cat, 0.70 - 0.012 * d, 0.12 + 0.02 * d)
            }
        })
        .collect();
    let cohort = CohortStats::new(members).unwrap();
    let s40 = cohort.composite_score("y11n-f040-no").unwrap();
    let s50 = cohort.composite_score("y11n-f050-no").unwrap();
    ensure(s40 > s50, || {
        format!("40/60 {s40} does not beat 50/50 {s50}")
    })?;
    let ranked = cohort.rank();
    let pos = |id: &str| ranked.iter().position(|(m, _)| m.model_id == id).unwrap();
    ensure(pos("y11n-f040-no") < pos("y11n-f050-no"), || {
        "rank order disagrees with scores".into()
    })?;
    Ok(format!(
        "40/60 {s40:.3} > 50/50 {s50:.3} in an 11-model cohort"
    ))
}

fn boundary_table() -> Outcome {
    use IlluminationCategory::*;
    for (lux, want) in [
        (1500.0, FullLight),
        (1000.01, FullLight),
        (1000.0, DimLight),
        (10.0, DimLight),
        (9.99, NoLight),
        (0.0, NoLight),
    ] {
        let got = categorize(lux).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("{lux} lux -> {got}, expected {want}")
        })?;
    }
    Ok("6/6 boundaries".into())
}

fn mock_table(entries: &[(u8, IlluminationCategory, f64)]) -> ConfidenceTable {
    let mut t = ConfidenceTable::new();
    for (p, cat, c) in entries {
        t = t.with(level(*p), *cat, "*", *c).unwrap();
    }
    t
}

fn run_mock(trial: &SyntheticTrial, table: ConfidenceTable) -> TrialLog {
    let cfg = PipelineConfig::default();
    let reg = Registry::standard();
    let mut backend = MockDetector::new(table, &reg);
    let mut act = thermofuse::turret::SimulatedActuator::new(cfg.targeting);
    run_trial(trial.iter(), &cfg, &reg, &mut backend, &mut act).unwrap()
}

fn pipeline_switching() -> Outcome {
    use IlluminationCategory::*;
    let table = || {
        mock_table(&[
            (80, FullLight, 0.95),
            (90, DimLight, 0.9203),
            (40, NoLight, 0.7103),
        ])
    };
    let trial = SyntheticTrial::constant(500.0).with_lux_segments(&[2000.0, 500.0, 5.0]);
    let a = run_mock(&trial, table());
    let b = run_mock(&trial, table());
    let used = a.models_used();
    ensure(
        used == ["y11n-f080-full", "y11n-f090-dim", "y11n-f040-no"],
        || format!("models {used:?}"),
    )?;
    let switches = a
        .events
        .iter()
        .filter(|e| matches!(e, RunEvent::Switch { from: Some(_), .. }))
        .count();
    ensure(switches == 2, || {
        format!("{switches} post-initialization switches")
    })?;
    ensure(a.count("switch") == 3, || {
        "expected one initial selection".into()
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    a.write(&dir.path().join("a")).map_err(|e| e.to_string())?;
    b.write(&dir.path().join("b")).map_err(|e| e.to_string())?;
    for f in ["detections.csv", "commands.csv", "events.ndjson"] {
        let read = |d: &str| std::fs::read(dir.path().join(d).join(f)).unwrap();
        ensure(read("a") == read("b"), || {
            format!("{f} differs between runs")
        })?;
    }
    Ok("80/20 -> 90/10 -> 40/60, 2 switches, logs byte-identical".into())
}

fn hand_parse_log(path: &Path, model_id: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (m, c, x) = (col("model_id"), col("confidence"), col("excluded"));
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[m] == model_id && f[x] == "false" && !f[c].is_empty())
        .map(|f| f[c].parse().unwrap())
        .collect()
}

fn end_to_end_mock() -> Outcome {
    let trial = SyntheticTrial::constant(500.0);
    let span = (trial.frames as i64) * trial.interval_ms;
    ensure(span == 10_000, || format!("trial spans {span} ms"))?;
    let log = run_mock(
        &trial,
        mock_table(&[(90, IlluminationCategory::DimLight, 0.9203)]),
    );
    let m = log.trial_mean().ok_or("no detections")?;
    ensure((m - 0.9203).abs() <= TRIAL_MEAN_TOLERANCE, || {
        format!("trial mean {m}")
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let logs = dir.path().join("logs");
    log.write(&logs.join("dim_white_0"))
        .map_err(|e| e.to_string())?;
    let manifest_csv = "trial_id,model_id,category,color,held_out\ndim_white_0,y11n-f090-dim,dim_light,white,false\n";
    let manifest = read_trial_manifest(manifest_csv.as_bytes()).map_err(|e| e.to_string())?;
    let trials = load_trials(&manifest, &logs, &Registry::standard()).map_err(|e| e.to_string())?;
    let report = EvaluationReport::build(&trials, EvaluationOptions::default())
        .map_err(|e| e.to_string())?;
    report
        .write(&dir.path().join("eval"))
        .map_err(|e| e.to_string())?;

    let mut rdr = csv::Reader::from_path(dir.path().join("eval/fusion_stats.csv"))
        .map_err(|e| e.to_string())?;
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let idx = header
        .iter()
        .position(|h| h == "mean")
        .ok_or("no mean column")?;
    let rec = rdr
        .records()
        .next()
        .ok_or("empty export")?
        .map_err(|e| e.to_string())?;
    let exported: f64 = rec[idx].parse().map_err(|e| format!("{e}"))?;
    let confs = hand_parse_log(&logs.join("dim_white_0/detections.csv"), "y11n-f090-dim");
    ensure(confs.len() == 100, || {
        format!("{} counted frames", confs.len())
    })?;
    let oracle = naive_mean(&confs);
    ensure((exported - oracle).abs() <= ORACLE_TOLERANCE, || {
        format!("export {exported} vs oracle {oracle}")
    })?;
    Ok(format!("trial mean {m:.6}, export {exported} = oracle"))
}

fn samples(n: usize) -> Vec<PairedSample> {
    (0..n)
        .map(|i| PairedSample {
            sample_id: format!("rec{:02}_{i:05}", i % 20),
            recording_id: format!("rec{:02}", i % 20),
            frame: format!("{i:05}"),
            rgb_path: format!("rgb/{i}.png").into(),
            lwir_path: format!("lwir/{i}.png").into(),
            label_path: None,
            timestamp_ms: i as i64 * 100,
            lux: [2000.0, 500.0, 5.0][i % 3],
            color_label: MUG_COLORS[i % 6].into(),
            annotations: Vec::new(),
        })
        .collect()
}

fn split_check() -> Outcome {
    let all = samples(1000);
    let start = Instant::now();
    let ids = |v: &[PairedSample]| {
        v.iter()
            .map(|s| s.sample_id.clone())
            .collect::<BTreeSet<_>>()
    };
    let (train, val) = split(
        &all,
        &SplitOptions {
            seed: 11,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let (train2, val2) = split(
        &all,
        &SplitOptions {
            seed: 11,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let (_, val3) = split(
        &all,
        &SplitOptions {
            seed: 12,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(train.len().abs_diff(750) <= SPLIT_COUNT_TOLERANCE, || {
        format!("train {}", train.len())
    })?;
    ensure(val.len().abs_diff(250) <= SPLIT_COUNT_TOLERANCE, || {
        format!("val {}", val.len())
    })?;
    let (t, v) = (ids(&train), ids(&val));
    ensure(t.is_disjoint(&v), || "train and val overlap".into())?;
    ensure(t.union(&v).count() == 1000, || {
        "split is not exhaustive".into()
    })?;
    ensure(t == ids(&train2) && v == ids(&val2), || {
        "same seed, different split".into()
    })?;
    ensure(v != ids(&val3), || "seeds 11 and 12 agree".into())?;
    ensure(elapsed < SPLIT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{}/{}, {elapsed:.2?} for three splits",
        train.len(),
        val.len()
    ))
}

fn turret_check() -> Outcome {
    let cfg = TargetingConfig::default();
    let (w, h) = (640, 480);
    let mut worst = 0;
    let mut starts = Vec::new();
    let steps = 24;
    for i in 0..=steps {
        for j in 0..=steps {
            let pan =
                -TURRET_MAX_INITIAL_DEG + 2.0 * TURRET_MAX_INITIAL_DEG * i as f64 / steps as f64;
            let tilt =
                -TURRET_MAX_INITIAL_DEG + 2.0 * TURRET_MAX_INITIAL_DEG * j as f64 / steps as f64;
            starts.push((pan, tilt));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        starts.push((
            rng.random_range(-TURRET_MAX_INITIAL_DEG..=TURRET_MAX_INITIAL_DEG),
            rng.random_range(-TURRET_MAX_INITIAL_DEG..=TURRET_MAX_INITIAL_DEG),
        ));
    }
    for (pan, tilt) in starts {
        let (_, errors) = track_static_target(&cfg, w, h, pan, tilt, TURRET_MAX_CYCLES);
        let cycles = errors.len() - 1;
        let (dx, dy) = *errors.last().unwrap();
        let inside =
            dx.abs() <= f64::from(cfg.deadband_px) && dy.abs() <= f64::from(cfg.deadband_px);
        ensure(inside && cycles <= TURRET_MAX_CYCLES, || {
            format!("start ({pan:.2}, {tilt:.2}): {cycles} cycles, final error ({dx:.2}, {dy:.2})")
        })?;
        worst = worst.max(cycles);
    }

    for _ in 0..1000 {
        let c = TargetingConfig {
            gain: rng.random_range(0.1..3.0),
            deadband_px: rng.random_range(0..20),
            ..cfg
        };
        let (fw, fh) = (rng.random_range(16..2000), rng.random_range(16..2000));
        ensure(
            error_to_command(0.0, 0.0, fw, fh, &c) == PanTiltCommand::ZERO,
            || "zero error moved".into(),
        )?;
    }

    let mut state = TurretState::new(3.5, -7.25);
    let (mut pan_sum, mut tilt_sum) = (0i64, 0i64);
    for _ in 0..10_000 {
        let cmd = PanTiltCommand {
            pan_steps: rng.random_range(-200..=200),
            tilt_steps: rng.random_range(-200..=200),
        };
        pan_sum += cmd.pan_steps;
        tilt_sum += cmd.tilt_steps;
        state = simulate(&state, cmd, &cfg);
    }
    ensure(
        state.pan_steps_total == pan_sum && state.tilt_steps_total == tilt_sum,
        || "step totals drifted".into(),
    )?;
    ensure(
        state.pan_angle_deg == 3.5 + cfg.step_deg() * pan_sum as f64,
        || "pan angle drifted".into(),
    )?;
    ensure(
        state.tilt_angle_deg == -7.25 + cfg.step_deg() * tilt_sum as f64,
        || "tilt angle drifted".into(),
    )?;
    Ok(format!("worst case {worst} cycles over 1125 starts"))
}

fn protocol_round_trip() -> Outcome {
    let json = |s: &str| serde_json::from_str::<serde_json::Value>(s).unwrap();
    let req_text = fixture("detect_request.json");
    let req = protocol::parse_request(&req_text).map_err(|e| e.to_string())?;
    ensure(
        json(&protocol::encode_request(&req)) == json(&req_text),
        || "request changed on re-encode".into(),
    )?;
    for name in ["detect_response.json", "detect_response_empty.json"] {
        let text = fixture(name);
        let parsed = protocol::parse_response(&text, None).map_err(|e| format!("{name}: {e}"))?;
        let back = protocol::encode_response(&DetectResponse::from_result(&parsed));
        ensure(json(&back) == json(&text), || {
            format!("{name} changed on re-encode")
        })?;
    }
    for (status, name) in [
        (404, "error_unknown_model.json"),
        (400, "error_bad_request.json"),
    ] {
        let text = fixture(name);
        let body: thermofuse::detection::protocol::ErrorBody =
            serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure(
            json(&serde_json::to_string(&body).unwrap()) == json(&text),
            || format!("{name} changed"),
        )?;
        let err = protocol::parse_error(status, &text);
        ensure(
            matches!(
                err,
                DetectError::UnknownModel(_) | DetectError::BadRequest(_)
            ),
            || format!("{name}: {err}"),
        )?;
    }
    let bad = protocol::parse_response(&fixture("detect_response_malformed_confidence.json"), None);
    ensure(matches!(bad, Err(DetectError::Malformed(_))), || {
        format!("malformed confidence accepted: {bad:?}")
    })?;
    Ok("request, 2 responses, 2 error bodies lossless; malformed rejected".into())
}

fn random_trials(rng: &mut ChaCha8Rng) -> Vec<Trial> {
    let cats = IlluminationCategory::ALL;
    let mut trials = Vec::new();
    let models = rng.random_range(1..=4usize);
    for m in 0..models {
        let cat = cats[rng.random_range(0..3)];
        let pct = rng.random_range(0..=10u8) * 10;
        let baseline = m == 0 && rng.random_bool(0.3);
        let model_id = if baseline {
            "yolo11n-coco".to_string()
        } else {
            standard_model_id(level(pct), cat)
        };
        if trials
            .iter()
            .any(|t: &Trial| t.model_id == model_id && t.category == cat)
        {
            continue;
        }
        for k in 0..rng.random_range(1..=5usize) {
            let color = MUG_COLORS[rng.random_range(0..MUG_COLORS.len())];
            let frames = rng.random_range(0..=10usize);
            trials.push(Trial {
                trial_id: format!("{model_id}-{k}"),
                model_id: model_id.clone(),
                fusion_level: level(pct),
                baseline,
                category: cat,
                color_label: color.into(),
                held_out: HELD_OUT_COLORS.contains(&color),
                confidences: (0..frames).map(|_| rng.random_range(0.0..=1.0)).collect(),
            });
        }
    }
    trials
}

fn check_cohort(trials: &[Trial]) -> Result<bool, String> {
    for t in trials {
        let want = (!t.confidences.is_empty()).then(|| naive_mean(&t.confidences));
        let got = t.mean();
        let ok = match (got, want) {
            (Some(a), Some(b)) => (a - b).abs() <= ORACLE_TOLERANCE,
            (None, None) => true,
            _ => false,
        };
        ensure(ok, || {
            format!("trial {} mean {got:?} vs {want:?}", t.trial_id)
        })?;
    }
    let cells = naive_cells(trials, 0);
    let report = match EvaluationReport::build(trials, EvaluationOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            ensure(cells.is_empty(), || {
                format!("report failed on a non-empty grid: {e}")
            })?;
            return Ok(false);
        }
    };
    ensure(report.cells.len() == cells.len(), || "cell count".into())?;
    for c in &report.cells {
        let e = &cells[&(c.category, c.model_id.clone())];
        ensure(
            (c.mean - e.mean).abs() <= ORACLE_TOLERANCE
                && (c.std - e.std).abs() <= ORACLE_TOLERANCE
                && (c.sem - e.sem).abs() <= ORACLE_TOLERANCE
                && c.n == e.n,
            || format!("cell {} {}: {c:?} vs {e:?}", c.category, c.model_id),
        )?;
    }
    let colors = naive_color_means(trials);
    ensure(report.colors.rows.len() == colors.len(), || {
        "color count".into()
    })?;
    for r in &report.colors.rows {
        ensure(
            (r.mean - colors[&r.color]).abs() <= ORACLE_TOLERANCE,
            || format!("color {}", r.color),
        )?;
    }
    for cat in IlluminationCategory::ALL {
        let cohort: Vec<NaiveMember> = cells
            .iter()
            .filter(|((c, id), _)| *c == cat && !id.ends_with("coco"))
            .map(|((_, id), e)| {
                let pct = trials
                    .iter()
                    .find(|t| &t.model_id == id)
                    .unwrap()
                    .fusion_level
                    .rgb_percent();
                (id.clone(), pct, e.mean, e.std)
            })
            .collect();
        match report.rankings.table(cat) {
            None => ensure(cohort.is_empty(), || format!("{cat}: ranking missing"))?,
            Some(table) => {
                let oracle = naive_ranking(&cohort);
                ensure(table.len() == oracle.len(), || {
                    format!("{cat}: ranking length")
                })?;
                for (row, (id, score)) in table.iter().zip(&oracle) {
                    ensure(
                        &row.model_id == id && (row.composite - score).abs() <= ORACLE_TOLERANCE,
                        || format!("{cat}: {} {} vs {id} {score}", row.model_id, row.composite),
                    )?;
                }
            }
        }
    }
    let heat = naive_heatmap(trials);
    ensure(report.heatmap.rows.len() == heat.len(), || {
        "heatmap size".into()
    })?;
    for r in &report.heatmap.rows {
        let (m, tier) = heat[&(
            r.category,
            r.color.clone(),
            r.fusion_rgb_percent.rgb_percent(),
        )];
        ensure(
            (r.mean - m).abs() <= ORACLE_TOLERANCE && r.quintile == format!("Q{tier}"),
            || format!("heatmap {r:?} vs ({m}, Q{tier})"),
        )?;
    }
    Ok(true)
}

fn statistics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut built = 0;
    for i in 0..50 {
        let trials = random_trials(&mut rng);
        if check_cohort(&trials).map_err(|e| format!("cohort {i}: {e}"))? {
            built += 1;
        }
    }
    Ok(format!("50 cohorts ({built} with detected trials)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("fusion oracle equivalence", fusion_oracle),
        ("composite-score extremes", composite_extremes),
        ("affine invariance of ranking", affine_invariance),
        ("delta reproduction", delta_reproduction),
        ("standard error of the mean", sem_check),
        ("no-light ordering", no_light_ordering),
        ("categorization boundaries", boundary_table),
        ("pipeline switching and replay", pipeline_switching),
        ("end-to-end mock trial", end_to_end_mock),
        ("train/val split", split_check),
        ("turret convergence", turret_check),
        ("protocol round-trip", protocol_round_trip),
        ("statistics brute-force oracle", statistics_oracle),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
