//! Rider physiology: heart rate, minute ventilation and inhaled pollutant dose.

mod heart_rate;

pub use heart_rate::{unit_step, HeartRateParams, HeartRateState, HR_CEILING, HR_FLOOR_FRACTION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysioError {
    #[error("physiology state used before initialisation")]
    Uninitialized,
    #[error("invalid physiology parameters: {0}")]
    InvalidParams(String),
}

/// Affine heart-rate to ventilation map through two anchor points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VentilationCalibration {
    /// (BPM, L/min)
    pub low: (f64, f64),
    pub high: (f64, f64),
    /// L/min
    pub floor: f64,
}

impl Default for VentilationCalibration {
    fn default() -> Self {
        Self {
            low: (70.0, 25.0),
            high: (120.0, 65.0),
            floor: 0.0,
        }
    }
}

impl VentilationCalibration {
    pub fn validate(&self) -> Result<(), PhysioError> {
        let (h1, v1) = self.low;
        let (h2, v2) = self.high;
        if ![h1, v1, h2, v2, self.floor].iter().all(|x| x.is_finite()) {
            return Err(PhysioError::InvalidParams(
                "ventilation anchors must be finite".into(),
            ));
        }
        if h2 <= h1 || v2 <= v1 {
            return Err(PhysioError::InvalidParams(
                "ventilation anchors must increase in both heart rate and volume".into(),
            ));
        }
        if self.floor < 0.0 {
            return Err(PhysioError::InvalidParams(
                "ventilation floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Breathing frequency (breaths/min) times tidal volume (L).
pub fn minute_ventilation(breath_rate: f64, tidal_volume: f64) -> f64 {
    breath_rate * tidal_volume
}

pub fn ventilation_from_hr(hr: f64, cal: &VentilationCalibration) -> f64 {
    let (h1, v1) = cal.low;
    let (h2, v2) = cal.high;
    let ve = v1 + (hr - h1) * (v2 - v1) / (h2 - h1);
    ve.max(cal.floor)
}

/// Pollutant mass (µg) inhaled over `dt` seconds at ventilation `ve` (L/min)
/// and concentration `concentration` (µg/m³).
pub fn inhaled_dose_step(ve: f64, concentration: f64, dt: f64) -> f64 {
    ve * (dt / 60.0) / 1000.0 * concentration
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PhysioParams {
    pub heart_rate: HeartRateParams,
    pub ventilation: VentilationCalibration,
    /// First-order lag on ventilation, s. Zero follows heart rate directly.
    pub ventilation_lag: f64,
}

impl PhysioParams {
    pub fn validate(&self) -> Result<(), PhysioError> {
        self.heart_rate.validate()?;
        self.ventilation.validate()?;
        if !(self.ventilation_lag.is_finite() && self.ventilation_lag >= 0.0) {
            return Err(PhysioError::InvalidParams(
                "ventilation_lag must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Heart rate, ventilation and accumulated dose for one rider.
#[derive(Debug, Clone, PartialEq)]
pub struct RiderPhysioState {
    pub heart_rate: HeartRateState,
    /// L/min
    pub ventilation: f64,
    /// µg
    pub cumulative_dose: f64,
}

impl RiderPhysioState {
    pub fn new(p: &PhysioParams) -> Self {
        Self {
            heart_rate: HeartRateState::new(&p.heart_rate),
            ventilation: ventilation_from_hr(p.heart_rate.resting_hr, &p.ventilation),
            cumulative_dose: 0.0,
        }
    }

    pub fn hr(&self) -> f64 {
        self.heart_rate.current().unwrap_or(f64::NAN)
    }

    /// Advance ventilation and dose by one tick of `dt` seconds using the
    /// current heart rate.
    pub fn breathe(&mut self, concentration: f64, dt: f64, p: &PhysioParams) -> f64 {
        let target = ventilation_from_hr(self.hr(), &p.ventilation);
        self.ventilation += dt / (p.ventilation_lag + dt) * (target - self.ventilation);
        let dose = inhaled_dose_step(self.ventilation, concentration, dt);
        self.cumulative_dose += dose;
        dose
    }
}
