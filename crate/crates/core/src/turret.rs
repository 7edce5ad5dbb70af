//! Pan/tilt targeting: pixel error to stepper commands, and a simulated
//! actuator that keeps exact step accounting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::detection::Detection;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TurretError {
    #[error("invalid targeting config: {0}")]
    InvalidConfig(String),
    #[error("command {steps} exceeds the per-cycle limit {max}")]
    CommandTooLarge { steps: i64, max: i64 },
    #[error("actuator halted")]
    Halted,
    #[error("cannot write command trace: {0}")]
    Trace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetingConfig {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub steps_per_rev: u32,
    pub deadband_px: u32,
    pub gain: f64,
    pub max_steps_per_cycle: u32,
}

impl Default for TargetingConfig {
    fn default() -> Self {
        Self {
            hfov_deg: 60.0,
            vfov_deg: 40.0,
            steps_per_rev: 3200,
            deadband_px: 8,
            gain: 1.0,
            max_steps_per_cycle: 200,
        }
    }
}

impl TargetingConfig {
    pub fn validate(&self) -> Result<(), TurretError> {
        let bad = |m: String| Err(TurretError::InvalidConfig(m));
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 360.0) {
            return bad(format!("hfov_deg {} must be in (0, 360)", self.hfov_deg));
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 360.0) {
            return bad(format!("vfov_deg {} must be in (0, 360)", self.vfov_deg));
        }
        if self.steps_per_rev == 0 {
            return bad("steps_per_rev must be positive".into());
        }
        if self.deadband_px == 0 {
            return bad("deadband_px must be positive".into());
        }
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return bad(format!("gain {} must be in (0, 1]", self.gain));
        }
        if self.max_steps_per_cycle == 0 {
            return bad("max_steps_per_cycle must be positive".into());
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the deadband fitting inside the frame.
    pub fn validate_for_frame(&self, frame_w: u32, frame_h: u32) -> Result<(), TurretError> {
        self.validate()?;
        let half = frame_w.min(frame_h) / 2;
        if self.deadband_px >= half {
            return Err(TurretError::InvalidConfig(format!(
                "deadband_px {} must be below the frame half-size {half}",
                self.deadband_px
            )));
        }
        Ok(())
    }

    pub fn step_deg(&self) -> f64 {
        360.0 / self.steps_per_rev as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PanTiltCommand {
    pub pan_steps: i64,
    pub tilt_steps: i64,
}

impl PanTiltCommand {
    pub const ZERO: PanTiltCommand = PanTiltCommand {
        pan_steps: 0,
        tilt_steps: 0,
    };

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

/// Signed pixel offset of the box center from the frame center.
/// Positive `dx` is right of center, positive `dy` below.
pub fn target_error(best: &Detection, frame_w: u32, frame_h: u32) -> (f64, f64) {
    (
        (best.bbox.cx - 0.5) * frame_w as f64,
        (best.bbox.cy - 0.5) * frame_h as f64,
    )
}

fn axis_steps(err_px: f64, frame_px: u32, fov_deg: f64, cfg: &TargetingConfig) -> i64 {
    if err_px.abs() <= cfg.deadband_px as f64 {
        return 0;
    }
    let max = cfg.max_steps_per_cycle as i64;
    let angle = cfg.gain * err_px / frame_px as f64 * fov_deg;
    ((angle / cfg.step_deg()).round() as i64).clamp(-max, max)
}

/// Proportional law with deadband and saturation, using the small-angle
/// pixel-to-angle mapping.
pub fn error_to_command(
    dx: f64,
    dy: f64,
    frame_w: u32,
    frame_h: u32,
    cfg: &TargetingConfig,
) -> PanTiltCommand {
    PanTiltCommand {
        pan_steps: axis_steps(dx, frame_w, cfg.hfov_deg, cfg),
        tilt_steps: axis_steps(dy, frame_h, cfg.vfov_deg, cfg),
    }
}

/// Simulated turret position. Angles are derived from integer step totals,
/// so `angle == initial + step_deg * total_steps` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurretState {
    pub initial_pan_deg: f64,
    pub initial_tilt_deg: f64,
    pub pan_steps_total: i64,
    pub tilt_steps_total: i64,
    pub pan_angle_deg: f64,
    pub tilt_angle_deg: f64,
    pub history: Vec<PanTiltCommand>,
}

impl Default for TurretState {
    fn default() -> Self {
        Self::new(0.0, 0.0)
    }
}

impl TurretState {
    pub fn new(pan_deg: f64, tilt_deg: f64) -> Self {
        Self {
            initial_pan_deg: pan_deg,
            initial_tilt_deg: tilt_deg,
            pan_steps_total: 0,
            tilt_steps_total: 0,
            pan_angle_deg: pan_deg,
            tilt_angle_deg: tilt_deg,
            history: Vec::new(),
        }
    }
}

pub fn simulate(state: &TurretState, cmd: PanTiltCommand, cfg: &TargetingConfig) -> TurretState {
    let mut next = state.clone();
    next.pan_steps_total += cmd.pan_steps;
    next.tilt_steps_total += cmd.tilt_steps;
    let step = cfg.step_deg();
    next.pan_angle_deg = next.initial_pan_deg + step * next.pan_steps_total as f64;
    next.tilt_angle_deg = next.initial_tilt_deg + step * next.tilt_steps_total as f64;
    next.history.push(cmd);
    next
}

/// Hardware boundary. A GPIO driver implements this in place of
/// [`SimulatedActuator`].
pub trait Actuator {
    fn issue_steps(&mut self, cmd: PanTiltCommand) -> Result<(), TurretError>;
    fn halt(&mut self);
}

#[derive(Debug, Clone)]
pub struct SimulatedActuator {
    pub config: TargetingConfig,
    pub state: TurretState,
    halted: bool,
}

impl SimulatedActuator {
    pub fn new(config: TargetingConfig) -> Self {
        Self {
            config,
            state: TurretState::default(),
            halted: false,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }
}

impl Actuator for SimulatedActuator {
    fn issue_steps(&mut self, cmd: PanTiltCommand) -> Result<(), TurretError> {
        if self.halted {
            return Err(TurretError::Halted);
        }
        let max = self.config.max_steps_per_cycle as i64;
        for steps in [cmd.pan_steps, cmd.tilt_steps] {
            if steps.abs() > max {
                return Err(TurretError::CommandTooLarge { steps, max });
            }
        }
        self.state = simulate(&self.state, cmd, &self.config);
        Ok(())
    }

    fn halt(&mut self) {
        self.halted = true;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandTraceRow {
    pub cycle: u64,
    pub frame_id: String,
    pub dx_px: f64,
    pub dy_px: f64,
    pub pan_steps: i64,
    pub tilt_steps: i64,
    pub pan_angle_deg: f64,
    pub tilt_angle_deg: f64,
}

pub fn write_command_trace<W: Write>(
    writer: W,
    rows: &[CommandTraceRow],
) -> Result<(), TurretError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| TurretError::Trace(e.to_string());
    if rows.is_empty() {
        w.write_record([
            "cycle",
            "frame_id",
            "dx_px",
            "dy_px",
            "pan_steps",
            "tilt_steps",
            "pan_angle_deg",
            "tilt_angle_deg",
        ])
        .map_err(err)?;
    }
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| TurretError::Trace(e.to_string()))
}

/// Closed loop against a static target at `target_*_deg`, with the detected
/// center recomputed from the turret angles each cycle. Returns the trace of
/// pixel errors seen at each cycle, ending at the first one inside the deadband.
pub fn track_static_target(
    cfg: &TargetingConfig,
    frame_w: u32,
    frame_h: u32,
    target_pan_deg: f64,
    target_tilt_deg: f64,
    max_cycles: usize,
) -> (TurretState, Vec<(f64, f64)>) {
    let mut state = TurretState::default();
    let mut errors = Vec::new();
    for _ in 0..=max_cycles {
        let dx = (target_pan_deg - state.pan_angle_deg) / cfg.hfov_deg * frame_w as f64;
        let dy = (target_tilt_deg - state.tilt_angle_deg) / cfg.vfov_deg * frame_h as f64;
        errors.push((dx, dy));
        let cmd = error_to_command(dx, dy, frame_w, frame_h, cfg);
        if cmd.is_zero() {
            break;
        }
        state = simulate(&state, cmd, cfg);
    }
    (state, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::BBox;
    use proptest::prelude::*;

    fn det(cx: f64, cy: f64) -> Detection {
        Detection {
            class_id: 0,
            confidence: 0.9,
            bbox: BBox {
                cx,
                cy,
                w: 0.1,
                h: 0.1,
            },
        }
    }

    #[test]
    fn target_error_examples() {
        assert_eq!(target_error(&det(0.5, 0.5), 640, 480), (0.0, 0.0));
        let (dx, _) = target_error(&det(0.6, 0.5), 640, 480);
        assert!((dx - 64.0).abs() < 1e-9);
        assert_eq!(target_error(&det(0.0, 0.5), 640, 480).0, -320.0);
    }

    #[test]
    fn command_examples() {
        let cfg = TargetingConfig::default();
        assert_eq!(
            error_to_command(0.0, 0.0, 640, 480, &cfg),
            PanTiltCommand::ZERO
        );
        assert_eq!(error_to_command(64.0, 0.0, 640, 480, &cfg).pan_steps, 53);
        assert_eq!(error_to_command(-64.0, 0.0, 640, 480, &cfg).pan_steps, -53);
        assert_eq!(
            error_to_command(5.0, -8.0, 640, 480, &cfg),
            PanTiltCommand::ZERO
        );
        assert_eq!(error_to_command(320.0, 0.0, 640, 480, &cfg).pan_steps, 200);
    }

    #[test]
    fn simulate_examples() {
        let cfg = TargetingConfig::default();
        let s = simulate(
            &TurretState::default(),
            PanTiltCommand {
                pan_steps: 53,
                tilt_steps: 0,
            },
            &cfg,
        );
        assert!((s.pan_angle_deg - 5.9625).abs() < 1e-12);
        let z = simulate(&s, PanTiltCommand::ZERO, &cfg);
        assert_eq!(
            (z.pan_angle_deg, z.tilt_angle_deg),
            (s.pan_angle_deg, s.tilt_angle_deg)
        );
        let t = simulate(
            &s,
            PanTiltCommand {
                pan_steps: -20,
                tilt_steps: 7,
            },
            &cfg,
        );
        assert_eq!(t.pan_steps_total, 33);
        assert_eq!(t.history.len(), 2);
    }

    #[test]
    fn config_validation() {
        let cfg = TargetingConfig::default();
        cfg.validate_for_frame(640, 480).unwrap();
        assert!(cfg.validate_for_frame(16, 16).is_err());
        assert!(TargetingConfig { gain: 1.5, ..cfg }.validate().is_err());
        assert!(TargetingConfig {
            steps_per_rev: 0,
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn simulated_actuator_rejects_oversized_and_halts() {
        let mut a = SimulatedActuator::new(TargetingConfig::default());
        assert!(a
            .issue_steps(PanTiltCommand {
                pan_steps: 201,
                tilt_steps: 0
            })
            .is_err());
        a.issue_steps(PanTiltCommand {
            pan_steps: 10,
            tilt_steps: -3,
        })
        .unwrap();
        a.halt();
        assert_eq!(
            a.issue_steps(PanTiltCommand::ZERO),
            Err(TurretError::Halted)
        );
        assert_eq!(a.state.pan_steps_total, 10);
    }

    #[test]
    fn trace_header_when_empty() {
        let mut buf = Vec::new();
        write_command_trace(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cycle,frame_id,dx_px,dy_px,pan_steps,tilt_steps,pan_angle_deg,tilt_angle_deg\n"
        );
    }

    proptest! {
        #[test]
        fn sign_and_monotonicity(a in -320.0f64..320.0, b in -320.0f64..320.0) {
            let cfg = TargetingConfig::default();
            let ca = error_to_command(a, 0.0, 640, 480, &cfg).pan_steps;
            let cb = error_to_command(b, 0.0, 640, 480, &cfg).pan_steps;
            if a.abs() > cfg.deadband_px as f64 {
                prop_assert_eq!(ca.signum() as f64, a.signum());
            } else {
                prop_assert_eq!(ca, 0);
            }
            if a.abs() <= b.abs() {
                prop_assert!(ca.abs() <= cb.abs());
            }
            prop_assert!(ca.abs() <= cfg.max_steps_per_cycle as i64);
        }

        #[test]
        fn angle_accounting_is_exact(cmds in proptest::collection::vec((-200i64..=200, -200i64..=200), 0..40), p0 in -90.0f64..90.0) {
            let cfg = TargetingConfig::default();
            let mut s = TurretState::new(p0, 0.0);
            for &(p, t) in &cmds {
                s = simulate(&s, PanTiltCommand { pan_steps: p, tilt_steps: t }, &cfg);
            }
            let total: i64 = cmds.iter().map(|c| c.0).sum();
            prop_assert_eq!(s.pan_angle_deg, p0 + cfg.step_deg() * total as f64);
        }

        #[test]
        fn converges_from_half_fov(pan in -30.0f64..=30.0, tilt in -20.0f64..=20.0) {
            let cfg = TargetingConfig::default();
            let (_, errors) = track_static_target(&cfg, 640, 480, pan, tilt, 20);
            let (dx, dy) = *errors.last().unwrap();
            prop_assert!(errors.len() <= 21);
            prop_assert!(dx.abs() <= 8.0 && dy.abs() <= 8.0);
        }
    }
}
