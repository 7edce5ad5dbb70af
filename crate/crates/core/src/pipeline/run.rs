use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{PipelineConfig, PipelineError, RunEvent, SourceFrame, TrialLog};
use crate::detection::{
    DetectionLogRow, DetectionResult, DetectorBackend, FrameContext, SpuriousFilter,
};
use crate::illumination::{IlluminationCategory, LuxReading, SwitchState};
use crate::imaging::{blend, register};
use crate::registry::{ModelRecord, Registry, RegistryError};
use crate::turret::{
    error_to_command, simulate, target_error, Actuator, CommandTraceRow, PanTiltCommand,
    TurretState,
};

use super::slot::LatestSlot;

fn elapsed_ms(start: Option<Instant>) -> Option<f64> {
    start.map(|s| s.elapsed().as_secs_f64() * 1000.0)
}

struct CommandRequest {
    frame_id: String,
    timestamp_ms: i64,
    dx: f64,
    dy: f64,
    cmd: PanTiltCommand,
}

struct InferenceStage<'a, B: ?Sized> {
    cfg: &'a PipelineConfig,
    registry: &'a Registry,
    backend: &'a mut B,
    switch: SwitchState,
    filter: SpuriousFilter,
    model: Option<&'a ModelRecord>,
}

impl<'a, B: DetectorBackend + ?Sized> InferenceStage<'a, B> {
    fn new(cfg: &'a PipelineConfig, registry: &'a Registry, backend: &'a mut B) -> Self {
        Self {
            cfg,
            registry,
            backend,
            switch: SwitchState::new(cfg.hysteresis_margin),
            filter: SpuriousFilter::new(cfg.spurious),
            model: None,
        }
    }

    fn resolve(&self, category: IlluminationCategory) -> Result<&'a ModelRecord, RegistryError> {
        let registry: &'a Registry = self.registry;
        match &self.cfg.fixed_model {
            Some(id) => registry
                .get(id)
                .ok_or_else(|| RegistryError::UnknownModel(id.clone())),
            None => self.cfg.models.resolve(category, registry),
        }
    }

    /// Processes one capture. Returns the detection row (absent only when the
    /// lux reading is unusable) and the command request, if any.
    fn process(
        &mut self,
        f: SourceFrame,
        events: &Mutex<Vec<RunEvent>>,
    ) -> (Option<DetectionLogRow>, Option<CommandRequest>) {
        let push = |e: RunEvent| events.lock().expect("event lock").push(e);
        let error = |stage: &str, message: String| RunEvent::Error {
            frame_id: Some(f.frame_id.clone()),
            timestamp_ms: Some(f.timestamp_ms),
            stage: stage.to_string(),
            message,
        };

        let reading = match LuxReading::new(f.timestamp_ms, f.lux) {
            Ok(r) => r,
            Err(e) => {
                push(error("illumination", e.to_string()));
                return (None, None);
            }
        };
        // the swap happens here, between frames, before any pixel of this frame is fused
        match self.switch.advance(&reading) {
            Ok(Some(ev)) => match self.resolve(ev.to) {
                Ok(model) => {
                    self.model = Some(model);
                    push(RunEvent::Switch {
                        frame_id: f.frame_id.clone(),
                        timestamp_ms: f.timestamp_ms,
                        from: ev.from,
                        to: ev.to,
                        model_id: model.model_id.clone(),
                        fusion_rgb_percent: model.fusion_level.rgb_percent(),
                    });
                }
                Err(e) => {
                    push(error("switch", e.to_string()));
                    return (None, None);
                }
            },
            Ok(None) => {}
            Err(e) => {
                push(error("illumination", e.to_string()));
                return (None, None);
            }
        }
        let Some(model) = self.model else {
            return (None, None);
        };
        let category = self.switch.current.expect("category set with model");
        let measure = self.cfg.measure_latency;

        let t_fuse = measure.then(Instant::now);
        let fused = register(&f.lwir, &self.cfg.homography, f.rgb.width(), f.rgb.height())
            .and_then(|lwir| blend(&f.rgb, &lwir, model.fusion_level));
        push(RunEvent::Frame {
            frame_id: f.frame_id.clone(),
            timestamp_ms: f.timestamp_ms,
            lux: f.lux,
            category,
            model_id: model.model_id.clone(),
            fusion_rgb_percent: model.fusion_level.rgb_percent(),
            fuse_ms: elapsed_ms(t_fuse),
        });

        let t_detect = measure.then(Instant::now);
        let result = match fused {
            Ok(fused) => {
                let ctx = FrameContext {
                    frame_id: f.frame_id.clone(),
                    timestamp_ms: f.timestamp_ms,
                    lux: f.lux,
                    color_label: f.color_label.clone(),
                    truth: f.truth.clone(),
                };
                match self.backend.detect(&fused, &model.model_id, &ctx) {
                    Ok(r) => r,
                    Err(e) => {
                        push(error("detect", e.to_string()));
                        DetectionResult::empty(&f.frame_id, &model.model_id)
                    }
                }
            }
            Err(e) => {
                push(error("fuse", e.to_string()));
                DetectionResult::empty(&f.frame_id, &model.model_id)
            }
        };
        let detect_ms = elapsed_ms(t_detect);

        let best = result.best().copied();
        let exclusion = self.filter.check(best.as_ref());
        let row = DetectionLogRow::from_result(&result, f.timestamp_ms, exclusion);
        push(RunEvent::Detection {
            frame_id: f.frame_id.clone(),
            timestamp_ms: f.timestamp_ms,
            model_id: model.model_id.clone(),
            detections: result.detections.len(),
            confidence: best.map(|d| d.confidence),
            excluded: exclusion.is_some(),
            exclusion_rule: exclusion.map(|r| r.as_str().to_string()),
            detect_ms,
        });

        let request = match (best, exclusion) {
            (Some(d), None) => {
                let (w, h) = f.rgb.dims();
                let (dx, dy) = target_error(&d, w, h);
                Some(CommandRequest {
                    frame_id: f.frame_id.clone(),
                    timestamp_ms: f.timestamp_ms,
                    dx,
                    dy,
                    cmd: error_to_command(dx, dy, w, h, &self.cfg.targeting),
                })
            }
            _ => None,
        };
        (Some(row), request)
    }
}

struct ActuationStage<'a, A: ?Sized> {
    actuator: &'a mut A,
    cfg: crate::turret::TargetingConfig,
    state: TurretState,
    cycle: u64,
    rows: Vec<CommandTraceRow>,
}

impl<'a, A: Actuator + ?Sized> ActuationStage<'a, A> {
    fn new(actuator: &'a mut A, cfg: crate::turret::TargetingConfig) -> Self {
        Self {
            actuator,
            cfg,
            state: TurretState::default(),
            cycle: 0,
            rows: Vec::new(),
        }
    }

    fn apply(&mut self, req: CommandRequest, events: &Mutex<Vec<RunEvent>>) {
        let mut events = events.lock().expect("event lock");
        if let Err(e) = self.actuator.issue_steps(req.cmd) {
            events.push(RunEvent::Error {
                frame_id: Some(req.frame_id),
                timestamp_ms: Some(req.timestamp_ms),
                stage: "actuate".into(),
                message: e.to_string(),
            });
            return;
        }
        self.state = simulate(&self.state, req.cmd, &self.cfg);
        events.push(RunEvent::Command {
            frame_id: req.frame_id.clone(),
            timestamp_ms: req.timestamp_ms,
            cycle: self.cycle,
            dx_px: req.dx,
            dy_px: req.dy,
            pan_steps: req.cmd.pan_steps,
            tilt_steps: req.cmd.tilt_steps,
        });
        self.rows.push(CommandTraceRow {
            cycle: self.cycle,
            frame_id: req.frame_id,
            dx_px: req.dx,
            dy_px: req.dy,
            pan_steps: req.cmd.pan_steps,
            tilt_steps: req.cmd.tilt_steps,
            pan_angle_deg: self.state.pan_angle_deg,
            tilt_angle_deg: self.state.tilt_angle_deg,
        });
        self.cycle += 1;
    }
}

/// Tracks the first timestamp and says when the trial duration is used up.
struct TrialClock {
    limit_ms: Option<i64>,
    t0: Option<i64>,
}

impl TrialClock {
    fn expired(&mut self, t: i64) -> bool {
        let t0 = *self.t0.get_or_insert(t);
        self.limit_ms.is_some_and(|limit| t - t0 >= limit)
    }
}

fn source_error(e: PipelineError) -> RunEvent {
    let (frame_id, message) = match e {
        PipelineError::Source { frame_id, message } => (Some(frame_id), message),
        other => (None, other.to_string()),
    };
    RunEvent::Error {
        frame_id,
        timestamp_ms: None,
        stage: "source".into(),
        message,
    }
}

/// Runs one trial on the calling thread.
///
/// Every usable capture yields exactly one detection row; backend and
/// imaging failures become error events plus an empty detection. Only an
/// invalid configuration is returned as an error.
pub fn run_trial<I, B, A>(
    source: I,
    cfg: &PipelineConfig,
    registry: &Registry,
    backend: &mut B,
    actuator: &mut A,
) -> Result<TrialLog, PipelineError>
where
    I: IntoIterator<Item = Result<SourceFrame, PipelineError>>,
    B: DetectorBackend + ?Sized,
    A: Actuator + ?Sized,
{
    cfg.validate(registry)?;
    let events = Mutex::new(Vec::new());
    let mut inference = InferenceStage::new(cfg, registry, backend);
    let mut actuation = ActuationStage::new(actuator, cfg.targeting);
    let mut clock = TrialClock {
        limit_ms: cfg.trial_duration_ms(),
        t0: None,
    };
    let mut detections = Vec::new();
    for item in source {
        let frame = match item {
            Ok(f) => f,
            Err(e) => {
                events.lock().expect("event lock").push(source_error(e));
                continue;
            }
        };
        if clock.expired(frame.timestamp_ms) {
            break;
        }
        let (row, request) = inference.process(frame, &events);
        detections.extend(row);
        if let Some(req) = request {
            actuation.apply(req, &events);
        }
    }
    Ok(TrialLog {
        detections,
        commands: actuation.rows,
        events: events.into_inner().expect("event lock"),
        turret: actuation.state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreadedOptions {
    /// Release captures at their recorded timestamps instead of as fast as
    /// the source yields them.
    pub pace: bool,
}

/// Three-stage variant: capture, inference and actuation each own a thread
/// and hand over through [`LatestSlot`]s. A capture or command replaced
/// before it was consumed is logged as a `drop` event.
pub fn run_trial_threaded<I, B, A>(
    source: I,
    cfg: &PipelineConfig,
    registry: &Registry,
    backend: &mut B,
    actuator: &mut A,
    opts: ThreadedOptions,
) -> Result<TrialLog, PipelineError>
where
    I: IntoIterator<Item = Result<SourceFrame, PipelineError>>,
    I::IntoIter: Send,
    B: DetectorBackend + Send + ?Sized,
    A: Actuator + Send + ?Sized,
{
    cfg.validate(registry)?;
    let events = Mutex::new(Vec::new());
    let frames: LatestSlot<SourceFrame> = LatestSlot::new();
    let commands: LatestSlot<CommandRequest> = LatestSlot::new();
    let source = source.into_iter();

    let (detections, (rows, state)) = std::thread::scope(|s| {
        s.spawn(|| {
            let mut clock = TrialClock {
                limit_ms: cfg.trial_duration_ms(),
                t0: None,
            };
            let start = Instant::now();
            for item in source {
                let frame = match item {
                    Ok(f) => f,
                    Err(e) => {
                        events.lock().expect("event lock").push(source_error(e));
                        continue;
                    }
                };
                if clock.expired(frame.timestamp_ms) {
                    break;
                }
                if opts.pace {
                    let due = Duration::from_millis(
                        (frame.timestamp_ms - clock.t0.unwrap_or(0)).max(0) as u64,
                    );
                    if let Some(wait) = due.checked_sub(start.elapsed()) {
                        std::thread::sleep(wait);
                    }
                }
                if let Some(old) = frames.put(frame) {
                    events.lock().expect("event lock").push(RunEvent::Drop {
                        frame_id: old.frame_id,
                        timestamp_ms: old.timestamp_ms,
                        stage: "capture".into(),
                    });
                }
            }
            frames.close();
        });

        let actuation = s.spawn(|| {
            let mut stage = ActuationStage::new(actuator, cfg.targeting);
            while let Some(req) = commands.take() {
                stage.apply(req, &events);
            }
            (stage.rows, stage.state)
        });

        let mut inference = InferenceStage::new(cfg, registry, backend);
        let mut detections = Vec::new();
        while let Some(frame) = frames.take() {
            let (row, request) = inference.process(frame, &events);
            detections.extend(row);
            if let Some(req) = request {
                if let Some(old) = commands.put(req) {
                    events.lock().expect("event lock").push(RunEvent::Drop {
                        frame_id: old.frame_id,
                        timestamp_ms: old.timestamp_ms,
                        stage: "actuation".into(),
                    });
                }
            }
        }
        commands.close();
        (detections, actuation.join().expect("actuation thread"))
    });

    Ok(TrialLog {
        detections,
        commands: rows,
        events: events.into_inner().expect("event lock"),
        turret: state,
    })
}
