//! Lux-driven illumination categories and the model-switching state machine.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Readings strictly above this are full-light.
pub const FULL_LIGHT_ABOVE_LUX: f64 = 1000.0;
/// Readings strictly below this are no-light.
pub const NO_LIGHT_BELOW_LUX: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum IlluminationError {
    #[error("lux must be a non-negative number, got {0}")]
    InvalidLux(f64),
    #[error("unknown illumination category {0:?}")]
    UnknownCategory(String),
    #[error("lux trace: {0}")]
    Csv(#[from] csv::Error),
    #[error("lux trace row {row}: {source}")]
    Reading {
        row: usize,
        source: Box<IlluminationError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IlluminationCategory {
    FullLight,
    DimLight,
    NoLight,
}

impl IlluminationCategory {
    pub const ALL: [IlluminationCategory; 3] = [
        IlluminationCategory::FullLight,
        IlluminationCategory::DimLight,
        IlluminationCategory::NoLight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IlluminationCategory::FullLight => "full_light",
            IlluminationCategory::DimLight => "dim_light",
            IlluminationCategory::NoLight => "no_light",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            IlluminationCategory::FullLight => "full",
            IlluminationCategory::DimLight => "dim",
            IlluminationCategory::NoLight => "no",
        }
    }

    /// 2 for full, 1 for dim, 0 for no light.
    fn brightness(self) -> u8 {
        match self {
            IlluminationCategory::FullLight => 2,
            IlluminationCategory::DimLight => 1,
            IlluminationCategory::NoLight => 0,
        }
    }
}

impl fmt::Display for IlluminationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IlluminationCategory {
    type Err = IlluminationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "fulllight" | "full" => Ok(IlluminationCategory::FullLight),
            "dimlight" | "dim" => Ok(IlluminationCategory::DimLight),
            "nolight" | "no" | "dark" => Ok(IlluminationCategory::NoLight),
            _ => Err(IlluminationError::UnknownCategory(s.to_string())),
        }
    }
}

/// Boundary values 10 and 1000 belong to dim-light.
pub fn categorize(lux: f64) -> Result<IlluminationCategory, IlluminationError> {
    if !(lux >= 0.0) || lux.is_infinite() {
        return Err(IlluminationError::InvalidLux(lux));
    }
    Ok(if lux > FULL_LIGHT_ABOVE_LUX {
        IlluminationCategory::FullLight
    } else if lux >= NO_LIGHT_BELOW_LUX {
        IlluminationCategory::DimLight
    } else {
        IlluminationCategory::NoLight
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuxReading {
    pub timestamp_ms: i64,
    pub lux: f64,
}

impl LuxReading {
    pub fn new(timestamp_ms: i64, lux: f64) -> Result<Self, IlluminationError> {
        categorize(lux)?;
        Ok(Self { timestamp_ms, lux })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEvent {
    /// `None` for the initialization event.
    pub from: Option<IlluminationCategory>,
    pub to: IlluminationCategory,
    pub timestamp_ms: i64,
}

/// Switching state. With a zero hysteresis margin the category is a pure
/// function of the latest reading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchState {
    pub current: Option<IlluminationCategory>,
    pub hysteresis_margin: f64,
    pub last_switch_timestamp_ms: Option<i64>,
}

impl SwitchState {
    pub fn new(hysteresis_margin: f64) -> Self {
        Self {
            current: None,
            hysteresis_margin: hysteresis_margin.max(0.0),
            last_switch_timestamp_ms: None,
        }
    }

    /// Category the machine would hold after seeing `lux`.
    ///
    /// A move away from the current category only counts if the reading,
    /// pulled back toward the current category by the margin, still lands
    /// outside it; the destination is the category of that pulled-back value.
    fn target(&self, lux: f64) -> Result<IlluminationCategory, IlluminationError> {
        let raw = categorize(lux)?;
        let Some(current) = self.current else {
            return Ok(raw);
        };
        if raw == current || self.hysteresis_margin == 0.0 {
            return Ok(raw);
        }
        let shifted = if raw.brightness() > current.brightness() {
            (lux - self.hysteresis_margin).max(0.0)
        } else {
            lux + self.hysteresis_margin
        };
        categorize(shifted)
    }

    /// Advances by one reading. The first reading always emits an
    /// initialization event.
    pub fn step(
        &self,
        reading: &LuxReading,
    ) -> Result<(SwitchState, Option<SwitchEvent>), IlluminationError> {
        let target = self.target(reading.lux)?;
        if self.current == Some(target) {
            return Ok((*self, None));
        }
        let event = SwitchEvent {
            from: self.current,
            to: target,
            timestamp_ms: reading.timestamp_ms,
        };
        let next = SwitchState {
            current: Some(target),
            hysteresis_margin: self.hysteresis_margin,
            last_switch_timestamp_ms: Some(reading.timestamp_ms),
        };
        Ok((next, Some(event)))
    }

    /// In-place variant of [`SwitchState::step`].
    pub fn advance(
        &mut self,
        reading: &LuxReading,
    ) -> Result<Option<SwitchEvent>, IlluminationError> {
        let (next, event) = self.step(reading)?;
        *self = next;
        Ok(event)
    }
}

/// Reads a `timestamp_ms,lux` CSV.
pub fn read_lux_trace<R: Read>(reader: R) -> Result<Vec<LuxReading>, IlluminationError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<LuxReading>().enumerate() {
        let row = row?;
        let reading =
            LuxReading::new(row.timestamp_ms, row.lux).map_err(|e| IlluminationError::Reading {
                row: i + 1,
                source: Box::new(e),
            })?;
        out.push(reading);
    }
    Ok(out)
}
