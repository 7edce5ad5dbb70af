use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use thermofuse::dataset::{self, IngestReport, PairedSample, SplitOptions};
use thermofuse::evaluation::{load_trials, read_trial_manifest, EvaluationReport, StdConvention};
use thermofuse::fixtures::{generate_fixtures, FixtureOptions};
use thermofuse::illumination::{read_lux_trace, IlluminationCategory, SwitchState};
use thermofuse::imaging::FusionLevel;
use thermofuse::pipeline::{
    run_trial, run_trial_threaded, BackendKind, PipelineConfig, ReplaySource, SyntheticTrial,
    ThreadedOptions, TrialLog,
};
use thermofuse::registry::{rank, read_cohort_csv, Rankings, Registry};
use thermofuse::turret::SimulatedActuator;

use crate::{
    CategorizeArgs, Cli, Command, EvaluateArgs, FuseArgs, GenFixturesArgs, IngestArgs,
    ProtocolCheckArgs, RankArgs, RunArgs, SplitArgs,
};

pub enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Invalid(e) | Failure::Runtime(e) => e,
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

trait Classify<T> {
    fn invalid(self, what: impl FnOnce() -> String) -> CmdResult<T>;
    fn runtime(self, what: impl FnOnce() -> String) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self, what: impl FnOnce() -> String) -> CmdResult<T> {
        self.map_err(|e| Failure::Invalid(e.into().context(what())))
    }

    fn runtime(self, what: impl FnOnce() -> String) -> CmdResult<T> {
        self.map_err(|e| Failure::Runtime(e.into().context(what())))
    }
}

fn invalid(msg: String) -> Failure {
    Failure::Invalid(anyhow!(msg))
}

fn open(path: &Path) -> CmdResult<File> {
    File::open(path).invalid(|| format!("cannot open {}", path.display()))
}

fn create(path: &Path) -> CmdResult<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .runtime(|| format!("cannot create {}", parent.display()))?;
    }
    File::create(path).runtime(|| format!("cannot create {}", path.display()))
}

fn load_config(cli: &Cli) -> CmdResult<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).invalid(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn report_issues(report: &IngestReport) {
    for issue in &report.issues {
        eprintln!("warning: {}: {}", issue.path.display(), issue.reason);
    }
}

pub fn dispatch(cli: Cli) -> CmdResult {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Fuse(a) => fuse(a, cfg),
        Command::Split(a) => split(a, cfg),
        Command::Categorize(a) => categorize(a, cfg),
        Command::Evaluate(a) => evaluate(a, cfg),
        Command::Rank(a) => rank_cmd(a),
        Command::Run(a) => run(a, cfg),
        Command::ProtocolCheck(a) => protocol_check(a),
        Command::GenFixtures(a) => gen_fixtures(a),
    }
}

fn ingest(a: &IngestArgs) -> CmdResult {
    let report =
        dataset::ingest(&a.root).invalid(|| format!("cannot read {}", a.root.display()))?;
    report_issues(&report);
    if report.samples.is_empty() {
        return Err(invalid(format!(
            "no usable frame pairs under {}",
            a.root.display()
        )));
    }
    dataset::write_manifest(&a.out, &report.samples)
        .runtime(|| format!("cannot write {}", a.out.display()))?;
    println!(
        "{} samples, {} issues -> {}",
        report.samples.len(),
        report.issues.len(),
        a.out.display()
    );
    Ok(())
}

fn parse_levels(spec: &str) -> CmdResult<Vec<FusionLevel>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(FusionLevel::all().collect());
    }
    let mut levels = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let level: FusionLevel = part
            .parse()
            .invalid(|| format!("--levels entry {part:?}"))?;
        if !levels.contains(&level) {
            levels.push(level);
        }
    }
    if levels.is_empty() {
        return Err(invalid("--levels is empty".into()));
    }
    Ok(levels)
}

fn fuse(a: &FuseArgs, cfg: PipelineConfig) -> CmdResult {
    let levels = parse_levels(&a.levels)?;
    if cfg.jobs == 0 {
        return Err(invalid("--jobs must be at least 1".into()));
    }
    let samples: Vec<PairedSample> = if let (Some(rgb), Some(lwir)) = (&a.rgb, &a.lwir) {
        let report = dataset::ingest_pair_dirs(rgb, lwir, a.labels.as_deref())
            .invalid(|| "cannot read input directories".to_string())?;
        report_issues(&report);
        report.samples
    } else if let Some(root) = &a.root {
        let report = dataset::ingest(root).invalid(|| format!("cannot read {}", root.display()))?;
        report_issues(&report);
        report.samples
    } else if let Some(m) = &a.manifest {
        dataset::read_manifest(m).invalid(|| format!("manifest {}", m.display()))?
    } else {
        return Err(invalid(
            "give --rgb and --lwir, --root, or --manifest".into(),
        ));
    };
    if samples.is_empty() {
        return Err(invalid("no usable frame pairs".into()));
    }
    let report = dataset::batch_fuse(&samples, &levels, &cfg.homography, &a.out, cfg.jobs)
        .runtime(|| format!("cannot write {}", a.out.display()))?;
    println!(
        "{} samples x {} levels: {} images written to {}",
        samples.len(),
        levels.len(),
        report.written.len(),
        a.out.display()
    );
    if !report.failures.is_empty() {
        for (id, msg) in &report.failures {
            eprintln!("error: {id}: {msg}");
        }
        return Err(Failure::Runtime(anyhow!(
            "{} samples failed",
            report.failures.len()
        )));
    }
    Ok(())
}

fn split(a: &SplitArgs, cfg: PipelineConfig) -> CmdResult {
    let mut opts: SplitOptions = cfg.split;
    if let Some(f) = a.fraction {
        opts.train_fraction = f;
    }
    if let Some(s) = a.seed {
        opts.seed = s;
    }
    if a.group_by_recording {
        opts.group_by_recording = true;
    }
    if let Some(s) = &a.stratify {
        opts.stratify = s.parse().map_err(|e: String| invalid(e))?;
    }
    let samples = dataset::read_manifest(&a.manifest)
        .invalid(|| format!("manifest {}", a.manifest.display()))?;
    let (train, val) = dataset::split(&samples, &opts).invalid(|| "split".to_string())?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.manifest
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    for (name, part) in [("train.csv", &train), ("val.csv", &val)] {
        let p = out.join(name);
        dataset::write_manifest(&p, part).runtime(|| format!("cannot write {}", p.display()))?;
    }
    println!(
        "train {} / val {} (fraction {}, seed {}) -> {}",
        train.len(),
        val.len(),
        opts.train_fraction,
        opts.seed,
        out.display()
    );
    Ok(())
}

fn categorize(a: &CategorizeArgs, cfg: PipelineConfig) -> CmdResult {
    let readings = read_lux_trace(open(&a.lux_trace)?)
        .invalid(|| format!("lux trace {}", a.lux_trace.display()))?;
    let margin = a.hysteresis.unwrap_or(cfg.hysteresis_margin);
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(invalid(format!(
            "hysteresis margin {margin} must be non-negative"
        )));
    }
    let mut state = SwitchState::new(margin);
    let mut csv_out = String::from("timestamp_ms,lux,category,switched\n");
    let mut switches = 0;
    for r in &readings {
        let event = state
            .advance(r)
            .invalid(|| format!("reading at {} ms", r.timestamp_ms))?;
        let cat = state.current.expect("set after a reading");
        println!("{:>10} ms {:>10} lux  {}", r.timestamp_ms, r.lux, cat);
        if let Some(ev) = event {
            match ev.from {
                None => println!("{:>10} ms init -> {}", ev.timestamp_ms, ev.to),
                Some(from) => {
                    switches += 1;
                    println!("{:>10} ms switch {} -> {}", ev.timestamp_ms, from, ev.to);
                }
            }
        }
        csv_out.push_str(&format!(
            "{},{},{},{}\n",
            r.timestamp_ms,
            r.lux,
            cat.as_str(),
            event.is_some()
        ));
    }
    println!("{} readings, {switches} switches", readings.len());
    if let Some(out) = &a.out {
        use std::io::Write;
        create(out)?
            .write_all(csv_out.as_bytes())
            .runtime(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs, cfg: PipelineConfig) -> CmdResult {
    let registry = cfg.load_registry().invalid(|| "registry".to_string())?;
    let manifest = read_trial_manifest(open(&a.manifest)?)
        .invalid(|| format!("trial manifest {}", a.manifest.display()))?;
    let trials = load_trials(&manifest, &a.logs, &registry).invalid(|| "trial logs".to_string())?;
    let mut options = cfg.evaluation;
    if a.sample_std {
        options.std_convention = StdConvention::Sample;
    }
    let report = EvaluationReport::build(&trials, options).invalid(|| "evaluation".to_string())?;
    report
        .write(&a.out)
        .runtime(|| format!("cannot write {}", a.out.display()))?;
    println!(
        "{} trials ({} with detections), {} cells",
        report.trials_total,
        report.trials_detected,
        report.cells.len()
    );
    for cat in IlluminationCategory::ALL {
        if let Some(top) = report.rankings.top(cat) {
            println!(
                "{cat}: top {} ({}) composite {:.4}",
                top.model_id, top.fusion_rgb_percent, top.composite
            );
        }
    }
    for row in &report.colors.rows {
        println!("{:>8}: {:.2}%", row.color, row.mean_percent);
    }
    println!("-> {}", a.out.display());
    Ok(())
}

fn rank_cmd(a: &RankArgs) -> CmdResult {
    let category: IlluminationCategory = a.category.parse().invalid(|| "--category".to_string())?;
    let cohort = read_cohort_csv(open(&a.stats)?, category)
        .invalid(|| format!("stats {}", a.stats.display()))?;
    let table = rank(category, &cohort);
    println!(
        "{:>4}  {:<20} {:>6} {:>8} {:>8} {:>10}",
        "rank", "model_id", "fusion", "mean", "std", "composite"
    );
    for r in &table {
        println!(
            "{:>4}  {:<20} {:>6} {:>8.4} {:>8.4} {:>10.6}",
            r.rank,
            r.model_id,
            r.fusion_rgb_percent.to_string(),
            r.mean,
            r.std,
            r.composite
        );
    }
    if let Some(out) = &a.out {
        thermofuse::registry::write_ranking_csv(&table, create(out)?)
            .runtime(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn source_samples(
    dir: &Path,
    recording: Option<&str>,
) -> CmdResult<Vec<(String, Vec<PairedSample>)>> {
    let single = dir.join("rgb").is_dir();
    let (root, only) = if single {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| invalid(format!("cannot use {} as a recording", dir.display())))?;
        let parent = dir
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        (parent, Some(name))
    } else {
        (dir.to_path_buf(), recording.map(str::to_string))
    };
    let report = dataset::ingest(&root).invalid(|| format!("cannot read {}", root.display()))?;
    let mut groups: std::collections::BTreeMap<String, Vec<PairedSample>> = Default::default();
    for s in report.samples {
        if only.as_ref().is_none_or(|o| *o == s.recording_id) {
            groups.entry(s.recording_id.clone()).or_default().push(s);
        }
    }
    for issue in report.issues.iter().filter(|i| {
        only.as_ref()
            .is_none_or(|o| i.path.components().any(|c| c.as_os_str() == o.as_str()))
    }) {
        eprintln!("warning: {}: {}", issue.path.display(), issue.reason);
    }
    if groups.is_empty() {
        return Err(invalid(format!(
            "no usable recordings under {}",
            dir.display()
        )));
    }
    Ok(groups.into_iter().collect())
}

fn run(a: &RunArgs, mut cfg: PipelineConfig) -> CmdResult {
    if let Some(b) = &a.backend {
        cfg.detector.backend = match b.as_str() {
            "mock" => BackendKind::Mock,
            "remote" => BackendKind::Remote,
            other => {
                return Err(invalid(format!(
                    "unknown backend {other:?}; expected mock or remote"
                )))
            }
        };
    }
    if let Some(e) = &a.endpoint {
        cfg.detector.endpoint = Some(e.clone());
    }
    if let Some(t) = a.timeout_ms {
        cfg.detector.timeout_ms = t;
    }
    if let Some(t) = &a.mock_table {
        cfg.detector.confidence_table = Some(t.clone());
    }
    if let Some(n) = a.noise {
        cfg.detector.noise_sigma = n;
    }
    if let Some(s) = a.seed {
        cfg.detector.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.trial_duration_s = d;
    }
    if a.model.is_some() {
        cfg.fixed_model = a.model.clone();
    }
    if a.measure_latency {
        cfg.measure_latency = true;
    }
    let registry: Registry = cfg.load_registry().invalid(|| "registry".to_string())?;
    if let Some(path) = &a.rankings {
        let rankings =
            Rankings::read_csv(open(path)?).invalid(|| format!("rankings {}", path.display()))?;
        cfg.models = cfg
            .models
            .with_rankings(&registry, &rankings)
            .invalid(|| format!("rankings {}", path.display()))?;
    }
    cfg.validate(&registry).invalid(|| "config".to_string())?;
    let mut backend = cfg
        .build_backend(&registry)
        .invalid(|| "detector backend".to_string())?;

    let trials: Vec<(String, Box<dyn Iterator<Item = _> + Send>)> = match (&a.source, &a.synthetic)
    {
        (Some(dir), _) => source_samples(dir, a.recording.as_deref())?
            .into_iter()
            .map(|(id, samples)| {
                (
                    id,
                    Box::new(ReplaySource::new(samples)) as Box<dyn Iterator<Item = _> + Send>,
                )
            })
            .collect(),
        (None, Some(spec)) => {
            let mut lux = Vec::new();
            for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                lux.push(
                    part.parse::<f64>()
                        .invalid(|| format!("--synthetic entry {part:?}"))?,
                );
            }
            if lux.is_empty() {
                return Err(invalid("--synthetic needs at least one lux value".into()));
            }
            let trial = SyntheticTrial::constant(lux[0]).with_lux_segments(&lux);
            let frames: Vec<_> = trial.iter().collect();
            vec![(
                "synthetic".to_string(),
                Box::new(frames.into_iter()) as Box<dyn Iterator<Item = _> + Send>,
            )]
        }
        (None, None) => return Err(invalid("give --source or --synthetic".into())),
    };

    for (trial_id, source) in trials {
        let mut actuator = SimulatedActuator::new(cfg.targeting);
        let log: TrialLog = if a.threaded {
            run_trial_threaded(
                source,
                &cfg,
                &registry,
                &mut *backend,
                &mut actuator,
                ThreadedOptions { pace: true },
            )
        } else {
            run_trial(source, &cfg, &registry, &mut *backend, &mut actuator)
        }
        .invalid(|| format!("trial {trial_id}"))?;
        let out = a.out.join(&trial_id);
        log.write(&out)
            .runtime(|| format!("cannot write {}", out.display()))?;
        let mean = log
            .trial_mean()
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "{trial_id}: {} frames, {} switches, {} commands, {} drops, {} errors, mean confidence {mean}, models {} -> {}",
            log.detections.len(),
            log.count("switch"),
            log.commands.len(),
            log.count("drop"),
            log.count("error"),
            log.models_used().join(" > "),
            out.display()
        );
    }
    Ok(())
}

fn protocol_check(a: &ProtocolCheckArgs) -> CmdResult {
    let report = thermofuse::detection::protocol_check(&a.endpoint, a.timeout_ms)
        .runtime(|| format!("cannot reach {}", a.endpoint))?;
    for c in &report.checks {
        println!(
            "{} {:<16} {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if let Some(out) = &a.out {
        serde_json::to_writer_pretty(create(out)?, &report)
            .runtime(|| format!("cannot write {}", out.display()))?;
    }
    match report.violations() {
        0 => {
            println!("{}: conformant", report.endpoint);
            Ok(())
        }
        n => Err(invalid(format!(
            "{}: {n} protocol violations",
            report.endpoint
        ))),
    }
}

fn gen_fixtures(a: &GenFixturesArgs) -> CmdResult {
    if a.frames == 0 {
        return Err(invalid("--frames must be at least 1".into()));
    }
    let opts = FixtureOptions {
        frames_per_recording: a.frames,
        seed: a.seed,
        ..FixtureOptions::default()
    };
    let s =
        generate_fixtures(&a.out, &opts).runtime(|| format!("cannot write {}", a.out.display()))?;
    println!(
        "dataset      {} ({} samples)",
        s.dataset_root.display(),
        s.samples
    );
    println!("manifest     {}", s.manifest.display());
    println!("lux trace    {}", s.lux_trace.display());
    println!("mock table   {}", s.confidence_table.display());
    println!("registry     {}", s.registry.display());
    println!("cohort stats {}", s.cohort_stats.display());
    println!(
        "trials       {} ({} trials, logs in {})",
        s.trial_manifest.display(),
        s.trials,
        s.trial_logs.display()
    );
    println!("config       {}", s.config.display());
    Ok(())
}
