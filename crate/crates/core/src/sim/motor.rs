//! Hub motor: calibrated electrical draw per control input, a speed taper
//! towards the motor's free-running speed, and first-order response lag.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powersplit::{PowerSplitParams, YTilde, YTILDE_MAX};

/// Rated continuous output, W.
pub const MOTOR_RATED_W: f64 = 250.0;
/// Allowance above the rating for calibration tables.
pub const MOTOR_RATING_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibError {
    #[error("calibration table has {0} entries, need 16")]
    WrongLength(usize),
    #[error("calibration table is not strictly increasing at control input {0}")]
    NotIncreasing(u8),
    #[error("calibration value {0} W exceeds the motor rating")]
    OverRated(f64),
    #[error("calibration value at control input {0} is below the no-load draw")]
    BelowNoload(u8),
    #[error("invalid motor parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotorParams {
    /// Electrical draw (W) at low wheel speed for control inputs 1..=16.
    pub table: Vec<f64>,
    /// First-order response time constant, s.
    pub lag: f64,
    /// km/h; free-running speed is `free_speed_base + free_speed_step · Ỹ`
    pub free_speed_base: f64,
    /// km/h per control-input step
    pub free_speed_step: f64,
    /// km/h over which draw tapers from the table value to no-load
    pub taper_width: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            table: (1..=16).map(|k| 100.0 + 6.0 * f64::from(k)).collect(),
            lag: 0.5,
            free_speed_base: 24.0,
            free_speed_step: 0.5,
            taper_width: 15.0,
        }
    }
}

impl MotorParams {
    pub fn validate(&self, ps: &PowerSplitParams) -> Result<(), CalibError> {
        if self.table.len() != usize::from(YTILDE_MAX) {
            return Err(CalibError::WrongLength(self.table.len()));
        }
        for (i, w) in self.table.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(CalibError::NotIncreasing(i as u8 + 2));
            }
        }
        let cap = MOTOR_RATED_W * (1.0 + MOTOR_RATING_TOLERANCE);
        if let Some(&w) = self.table.iter().find(|&&w| !(w.is_finite() && w <= cap)) {
            return Err(CalibError::OverRated(w));
        }
        for yt in YTilde::all() {
            if self.table[usize::from(yt.get()) - 1] < noload_electrical(yt, ps) {
                return Err(CalibError::BelowNoload(yt.get()));
            }
        }
        let all = [
            self.lag,
            self.free_speed_base,
            self.free_speed_step,
            self.taper_width,
        ];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(CalibError::Invalid(
                "motor parameters must be finite".into(),
            ));
        }
        if self.lag < 0.0 || self.free_speed_step < 0.0 {
            return Err(CalibError::Invalid(
                "lag and free_speed_step must be >= 0".into(),
            ));
        }
        if self.taper_width <= 0.0 {
            return Err(CalibError::Invalid("taper_width must be > 0".into()));
        }
        if self.free_speed_base + self.free_speed_step <= self.taper_width {
            return Err(CalibError::Invalid(
                "taper must start above standstill".into(),
            ));
        }
        Ok(())
    }

    /// km/h at which the motor no longer pushes the wheel.
    pub fn free_speed(&self, yt: YTilde) -> f64 {
        self.free_speed_base + self.free_speed_step * yt.as_f64()
    }

    /// 1 below the taper, 0 at and above the free-running speed.
    pub fn taper(&self, yt: YTilde, wheel_speed_kmh: f64) -> f64 {
        ((self.free_speed(yt) - wheel_speed_kmh) / self.taper_width).clamp(0.0, 1.0)
    }

    /// Electrical draw (W) at a control input and wheel speed.
    pub fn electrical_power(
        &self,
        yt: YTilde,
        wheel_speed_kmh: f64,
        ps: &PowerSplitParams,
    ) -> Result<f64, CalibError> {
        let plateau = command_to_electrical_power(yt, &self.table)?;
        let idle = noload_electrical(yt, ps);
        Ok(idle + (plateau - idle) * self.taper(yt, wheel_speed_kmh))
    }
}

/// Electrical draw that exactly covers the no-load loss.
pub fn noload_electrical(yt: YTilde, ps: &PowerSplitParams) -> f64 {
    ps.noload_power(yt) / ps.motor_efficiency
}

/// Low-speed electrical draw for a control input.
pub fn command_to_electrical_power(yt: YTilde, table: &[f64]) -> Result<f64, CalibError> {
    table
        .get(usize::from(yt.get()) - 1)
        .copied()
        .ok_or(CalibError::WrongLength(table.len()))
}

/// First-order step towards `cmd`. `tau = 0` passes the command through.
pub fn motor_lag(cmd: f64, prev: f64, dt: f64, tau: f64) -> f64 {
    prev + dt / (tau + dt) * (cmd - prev)
}
