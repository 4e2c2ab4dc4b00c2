//! Wheel-speed sectors: human free-wheeling, shared, motor free-wheeling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectorError {
    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),
}

/// One row of a fixed-Ỹ speed sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// km/h
    pub wheel_speed: f64,
    pub human_wheel_power: f64,
    pub motor_wheel_power: f64,
}

/// Wheel speeds (km/h) bounding the shared sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorBounds {
    pub s1: f64,
    pub s2: f64,
}

impl SectorBounds {
    pub fn new(s1: f64, s2: f64) -> Result<Self, SectorError> {
        if s1 < s2 {
            Ok(Self { s1, s2 })
        } else {
            Err(SectorError::DegenerateSweep(format!(
                "S1 {s1} is not below S2 {s2}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    HumanFreewheel,
    Shared,
    MotorFreewheel,
}

/// S1 is the first speed where the rider reaches the wheel, S2 the first speed
/// at or beyond S1 where the motor contributes nothing.
pub fn sector_bounds(sweep: &[SweepPoint]) -> Result<SectorBounds, SectorError> {
    if sweep
        .windows(2)
        .any(|w| w[1].wheel_speed < w[0].wheel_speed)
    {
        return Err(SectorError::DegenerateSweep(
            "sweep is not sorted by wheel speed".into(),
        ));
    }
    let first_human = sweep
        .iter()
        .position(|p| p.human_wheel_power > 0.0)
        .ok_or_else(|| SectorError::DegenerateSweep("human power never positive".into()))?;
    let s1 = sweep[first_human].wheel_speed;
    let s2 = sweep[first_human..]
        .iter()
        .find(|p| p.motor_wheel_power == 0.0)
        .map(|p| p.wheel_speed)
        .ok_or_else(|| SectorError::DegenerateSweep("motor never free-wheels".into()))?;
    SectorBounds::new(s1, s2)
}

/// Boundary speeds belong to the shared sector.
pub fn classify_sector(wheel_speed: f64, bounds: &SectorBounds) -> Sector {
    if wheel_speed < bounds.s1 {
        Sector::HumanFreewheel
    } else if wheel_speed > bounds.s2 {
        Sector::MotorFreewheel
    } else {
        Sector::Shared
    }
}
