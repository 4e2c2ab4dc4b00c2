//! Static energy model of the e-bike: control input translation, human and
//! motor power at the wheel, and the human share `m` of wheel power.

mod fit;
mod sector;

pub use fit::{fit_noload_params, FitError, NoloadFit};
pub use sector::{classify_sector, sector_bounds, Sector, SectorBounds, SectorError, SweepPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest raw request the motor accepts.
pub const Y_MIN_VALID: u8 = 90;
/// Highest raw request within the motor rating.
pub const Y_MAX_VALID: u8 = 165;
pub const YTILDE_MIN: u8 = 1;
pub const YTILDE_MAX: u8 = 16;

/// Raw model outputs at or below this many watts count as exactly zero.
/// Absorbs the rounding in `(x / eta) * eta` at the motor no-load point.
pub const POWER_EPS_W: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ControlInputError {
    #[error("request {0} is below 90: current provided to motor is too small")]
    InvalidLow(u8),
    #[error("request {0} is above 165: exceeds motor rated power")]
    InvalidHigh(u8),
    #[error("translated control input {0} outside 1..=16")]
    OutOfRange(i64),
}

/// Raw 0-255 request sent towards the motor controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControlInputY(pub u8);

impl ControlInputY {
    pub fn is_valid(self) -> bool {
        (Y_MIN_VALID..=Y_MAX_VALID).contains(&self.0)
    }
}

/// Translated control input, 1 (least assistance) to 16 (most).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct YTilde(u8);

impl YTilde {
    pub const MIN: YTilde = YTilde(YTILDE_MIN);
    pub const MAX: YTilde = YTilde(YTILDE_MAX);

    pub fn new(value: i64) -> Result<Self, ControlInputError> {
        if (i64::from(YTILDE_MIN)..=i64::from(YTILDE_MAX)).contains(&value) {
            Ok(YTilde(value as u8))
        } else {
            Err(ControlInputError::OutOfRange(value))
        }
    }

    /// Nearest grid value to a real-valued command, clamped to 1..=16.
    pub fn saturating(value: f64) -> Self {
        let v = if value.is_nan() {
            f64::from(YTILDE_MIN)
        } else {
            value.round()
        };
        YTilde(v.clamp(f64::from(YTILDE_MIN), f64::from(YTILDE_MAX)) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }

    pub fn all() -> impl Iterator<Item = YTilde> {
        (YTILDE_MIN..=YTILDE_MAX).map(YTilde)
    }
}

impl TryFrom<i64> for YTilde {
    type Error = ControlInputError;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        YTilde::new(value)
    }
}

impl From<YTilde> for i64 {
    fn from(y: YTilde) -> i64 {
        i64::from(y.0)
    }
}

impl std::fmt::Display for YTilde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Translate a raw request to the 1-16 control input, rounding off-grid
/// requests to the nearest step.
pub fn y_to_ytilde(y: ControlInputY) -> Result<YTilde, ControlInputError> {
    if y.0 < Y_MIN_VALID {
        return Err(ControlInputError::InvalidLow(y.0));
    }
    if y.0 > Y_MAX_VALID {
        return Err(ControlInputError::InvalidHigh(y.0));
    }
    Ok(YTilde::saturating(f64::from(y.0) / 5.0 - 17.0))
}

pub fn ytilde_to_y(yt: YTilde) -> ControlInputY {
    ControlInputY(5 * (yt.0 + 17))
}

/// Model constants for the wheel power approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSplitParams {
    /// Nm of pedal torque that produces no wheel power.
    pub torque_bias: f64,
    pub crank_efficiency: f64,
    pub scaling: f64,
    pub motor_efficiency: f64,
    /// W of no-load power per control-input step.
    pub noload_slope: f64,
    /// W
    pub noload_intercept: f64,
}

impl Default for PowerSplitParams {
    fn default() -> Self {
        Self {
            torque_bias: 45.0,
            crank_efficiency: 0.90,
            scaling: 1.5,
            motor_efficiency: 0.80,
            noload_slope: 3.0,
            noload_intercept: 5.0,
        }
    }
}

impl PowerSplitParams {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.torque_bias,
            self.crank_efficiency,
            self.scaling,
            self.motor_efficiency,
            self.noload_slope,
            self.noload_intercept,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err("power split parameters must be finite".into());
        }
        if self.torque_bias < 0.0 {
            return Err("torque_bias must be >= 0".into());
        }
        if !(self.crank_efficiency > 0.0 && self.crank_efficiency <= 1.0) {
            return Err("crank_efficiency must lie in (0, 1]".into());
        }
        if !(self.motor_efficiency > 0.0 && self.motor_efficiency <= 1.0) {
            return Err("motor_efficiency must lie in (0, 1]".into());
        }
        if self.scaling <= 0.0 {
            return Err("scaling must be > 0".into());
        }
        if self.noload_slope < 0.0 || self.noload_intercept < 0.0 {
            return Err("no-load parameters must be >= 0".into());
        }
        Ok(())
    }

    /// Mechanical no-load loss `Ỹ·β₁ + β₂` in watts.
    pub fn noload_power(&self, yt: YTilde) -> f64 {
        yt.as_f64() * self.noload_slope + self.noload_intercept
    }
}

/// Power the rider puts into the pedals.
pub fn pedal_power(torque: f64, pedal_speed: f64) -> f64 {
    torque * pedal_speed
}

/// Share of the rider's pedal power that reaches the wheel.
///
/// `motor_active` mirrors the model's `P_Me >= 0` guard. This system never
/// regenerates, so callers pass `true`; with `false` there is no bias torque
/// to overcome and the crank power is scaled directly.
pub fn human_wheel_power(
    torque: f64,
    pedal_speed: f64,
    motor_active: bool,
    p: &PowerSplitParams,
) -> f64 {
    let bias = if motor_active { p.torque_bias } else { 0.0 };
    (p.scaling * p.crank_efficiency * (torque - bias) * pedal_speed).max(0.0)
}

/// Motor power that reaches the wheel after efficiency and no-load losses.
pub fn motor_wheel_power(electrical: f64, yt: YTilde, p: &PowerSplitParams) -> f64 {
    let raw = electrical * p.motor_efficiency - p.noload_power(yt);
    if raw <= POWER_EPS_W {
        0.0
    } else {
        raw
    }
}

pub fn electrical_power(battery_voltage: f64, motor_current: f64) -> f64 {
    battery_voltage * motor_current
}

/// Decomposition of the power delivered to the wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub human_wheel_power: f64,
    pub motor_wheel_power: f64,
    pub wheel_power: f64,
    /// Human share of wheel power; meaningful only when `defined`.
    pub share: f64,
    pub defined: bool,
}

impl PowerSplit {
    pub fn share(&self) -> Option<f64> {
        self.defined.then_some(self.share)
    }
}

pub fn power_split(human: f64, motor: f64) -> PowerSplit {
    let wheel = human + motor;
    if wheel > 0.0 {
        PowerSplit {
            human_wheel_power: human,
            motor_wheel_power: motor,
            wheel_power: wheel,
            share: human / wheel,
            defined: true,
        }
    } else {
        PowerSplit {
            human_wheel_power: human,
            motor_wheel_power: motor,
            wheel_power: wheel,
            share: 0.0,
            defined: false,
        }
    }
}
