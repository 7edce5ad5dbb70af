//! Illumination-adaptive RGB/LWIR fusion detection toolkit.
//!
//! The crate covers the whole offline and live path: registering and blending
//! thermal frames onto the RGB grid, mapping lux readings to an illumination
//! category, choosing the fusion model for that category, running a
//! detector backend (mock or remote), filtering spurious detections, turning
//! detections into pan/tilt stepper commands, and reducing detection logs to
//! the confidence statistics used to rank models.

pub mod dataset;
pub mod detection;
pub mod evaluation;
pub mod fixtures;
pub mod illumination;
pub mod imaging;
pub mod pipeline;
pub mod registry;
pub mod stable_hash;
pub mod turret;
