//! Scenario file: one TOML document describing the bike, rider, route,
//! controller and run length. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControllerConfig, OpenLoopPolicy, RiderInputs};
use crate::physics::{EnvironmentParams, MassParams};
use crate::physio::PhysioParams;
use crate::powersplit::{PowerSplitParams, YTilde};
use crate::route::{Route, RouteViolation, ZoneKind};

use super::motor::MotorParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid route: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Route(Vec<RouteViolation>),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    ClosedLoop,
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub mode: ControlMode,
    pub gain: f64,
    pub sample_period: f64,
    pub human_window: usize,
    pub motor_window: usize,
    pub tolerance: f64,
    pub ytilde_min: u8,
    pub ytilde_max: u8,
    /// Control input before the first controller tick (closed loop).
    pub initial_ytilde: YTilde,
    /// Zone kind to control input (open loop).
    pub policy: OpenLoopPolicy,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            mode: ControlMode::ClosedLoop,
            gain: c.gain,
            sample_period: c.sample_period,
            human_window: c.human_window,
            motor_window: c.motor_window,
            tolerance: c.tolerance,
            ytilde_min: c.ytilde_min,
            ytilde_max: c.ytilde_max,
            initial_ytilde: YTilde::saturating(8.0),
            policy: OpenLoopPolicy::default(),
        }
    }
}

impl ControllerSection {
    pub fn config(&self) -> ControllerConfig {
        ControllerConfig {
            gain: self.gain,
            sample_period: self.sample_period,
            human_window: self.human_window,
            motor_window: self.motor_window,
            tolerance: self.tolerance,
            ytilde_min: self.ytilde_min,
            ytilde_max: self.ytilde_max,
        }
    }
}

/// Rider inputs held over `[start, end)` seconds of simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputWindow {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub left_brake: bool,
    #[serde(default)]
    pub right_brake: bool,
    #[serde(default)]
    pub throttle_voltage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiderParams {
    /// km/h, used where zones set no target speed
    pub cruise_speed: f64,
    /// Nm at zero speed error
    pub torque_feedforward: f64,
    /// Nm per m/s of speed error
    pub torque_gain: f64,
    /// Nm
    pub torque_max: f64,
    /// Nm, standard deviation of per-tick torque noise
    pub torque_noise: f64,
    /// m
    pub wheel_radius: f64,
    /// wheel revolutions per crank revolution
    pub gear_ratio: f64,
    #[serde(rename = "input")]
    pub inputs: Vec<InputWindow>,
}

impl Default for RiderParams {
    fn default() -> Self {
        Self {
            cruise_speed: 22.0,
            torque_feedforward: 55.0,
            torque_gain: 120.0,
            torque_max: 120.0,
            torque_noise: 0.0,
            wheel_radius: 0.35,
            gear_ratio: 2.75,
            inputs: Vec::new(),
        }
    }
}

impl RiderParams {
    /// Crank speed (rad/s) for a road speed (m/s).
    pub fn pedal_speed(&self, v: f64) -> f64 {
        v / (self.wheel_radius * self.gear_ratio)
    }

    pub fn inputs_at(&self, t: f64) -> RiderInputs {
        let mut out = RiderInputs::default();
        for w in self.inputs.iter().filter(|w| w.start <= t && t < w.end) {
            out.left_brake |= w.left_brake;
            out.right_brake |= w.right_brake;
            out.throttle_voltage = out.throttle_voltage.max(w.throttle_voltage);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryParams {
    /// Ah
    pub capacity: f64,
    /// V
    pub voltage: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            capacity: 7.8,
            voltage: 36.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Telemetry rate, 1 or 5 Hz.
    pub rate_hz: u32,
    /// s; when absent the run ends after the route's laps.
    pub duration: Option<f64>,
    /// s, hard stop for lap-based runs
    pub max_duration: f64,
    /// m/s
    pub v_floor: f64,
    /// km/h; defaults to the target speed at the start line
    pub initial_speed: Option<f64>,
    pub seed: u64,
    /// Ambient motor temperature reported in telemetry, °C.
    pub motor_temperature: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            rate_hz: 5,
            duration: None,
            max_duration: 4.0 * 3600.0,
            v_floor: 0.5,
            initial_speed: None,
            seed: 0,
            motor_temperature: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub environment: EnvironmentParams,
    #[serde(default)]
    pub mass: MassParams,
    #[serde(default)]
    pub powersplit: PowerSplitParams,
    #[serde(default)]
    pub motor: MotorParams,
    #[serde(default)]
    pub controller: ControllerSection,
    pub route: Route,
    #[serde(default)]
    pub rider: RiderParams,
    #[serde(default)]
    pub physio: PhysioParams,
    #[serde(default)]
    pub battery: BatteryParams,
    #[serde(default)]
    pub sim: SimParams,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serialises")
    }

    /// Checks everything except the telemetry rate, which [`validate`]
    /// adds on top.
    ///
    /// [`validate`]: ScenarioConfig::validate
    pub fn validate_model(&self) -> Result<(), ConfigError> {
        let inv = |e: String| ConfigError::Invalid(e);
        self.environment
            .validate()
            .map_err(|e| inv(e.to_string()))?;
        self.mass.validate().map_err(|e| inv(e.to_string()))?;
        self.powersplit.validate().map_err(inv)?;
        self.motor
            .validate(&self.powersplit)
            .map_err(|e| inv(e.to_string()))?;
        self.controller
            .config()
            .validate()
            .map_err(|e| inv(e.to_string()))?;
        self.physio.validate().map_err(|e| inv(e.to_string()))?;
        self.route.validate().map_err(ConfigError::Route)?;

        if self.controller.mode == ControlMode::OpenLoop {
            if let Some(k) = self.controller.policy.unknown_keys().first() {
                return Err(inv(format!("policy names unknown zone kind `{k}`")));
            }
            for z in &self.route.zones {
                if self.controller.policy.get(z.kind).is_none() {
                    return Err(inv(format!(
                        "open-loop policy has no entry for zone kind `{}`",
                        z.kind
                    )));
                }
            }
        }

        let r = &self.rider;
        let positive = [
            ("rider.cruise_speed", r.cruise_speed),
            ("rider.wheel_radius", r.wheel_radius),
            ("rider.gear_ratio", r.gear_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(inv(format!("{name} must be > 0")));
            }
        }
        if !(r.torque_gain >= 0.0 && r.torque_noise >= 0.0 && r.torque_max >= 0.0) {
            return Err(inv("rider torque gain, noise and max must be >= 0".into()));
        }
        if r.torque_feedforward < self.powersplit.torque_bias || r.torque_feedforward > r.torque_max
        {
            return Err(inv(
                "rider.torque_feedforward must lie between torque_bias and torque_max".into(),
            ));
        }
        for w in &r.inputs {
            if !(w.end > w.start) {
                return Err(inv("rider input windows need end > start".into()));
            }
            if !(0.0..=5.0).contains(&w.throttle_voltage) {
                return Err(inv("throttle_voltage must lie in 0..=5 V".into()));
            }
        }

        if !(self.battery.capacity >= 0.0 && self.battery.voltage > 0.0) {
            return Err(inv("battery capacity must be >= 0 and voltage > 0".into()));
        }

        let s = &self.sim;
        if let Some(d) = s.duration {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(inv("sim.duration must be >= 0".into()));
            }
        }
        if !(s.max_duration > 0.0 && s.v_floor > 0.0) {
            return Err(inv("sim.max_duration and sim.v_floor must be > 0".into()));
        }
        if let Some(v) = s.initial_speed {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(inv("sim.initial_speed must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !matches!(self.sim.rate_hz, 1 | 5) {
            return Err(ConfigError::Invalid(format!(
                "sim.rate_hz must be 1 or 5, got {}",
                self.sim.rate_hz
            )));
        }
        self.validate_model()
    }

    /// Same scenario with every anchoring zone's target share replaced.
    pub fn with_uniform_share(&self, share: f64) -> Self {
        let mut out = self.clone();
        for z in out
            .route
            .zones
            .iter_mut()
            .filter(|z| z.kind != ZoneKind::Transient)
        {
            z.target_share = Some(share);
        }
        out
    }
}
