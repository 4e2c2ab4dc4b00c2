//! Resistive forces and required power for a cyclist on a bicycle.
//!
//! Forces are in newtons, speeds in m/s and powers in watts. Positive forces
//! oppose forward motion. Angles of the road are derived from the gradient
//! (rise over run) through `arctan`, so every force stays finite for any
//! finite gradient.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("wheel gap must be non-negative, got {0} m")]
    NegativeGap(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// Environment and rolling-stock constants for the force model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentParams {
    /// kg/m³
    pub air_density: f64,
    pub drag_coefficient: f64,
    /// m²
    pub frontal_area: f64,
    pub rolling_coefficient: f64,
    /// rise over run
    pub road_gradient: f64,
    /// m/s²
    pub gravity: f64,
    /// drivetrain efficiency in (0, 1]
    pub mechanical_efficiency: f64,
    /// m/s, positive is a headwind
    pub wind_speed: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            air_density: 1.225,
            drag_coefficient: 1.0,
            frontal_area: 0.5,
            rolling_coefficient: 0.005,
            road_gradient: 0.0,
            gravity: 9.81,
            mechanical_efficiency: 0.95,
            wind_speed: 0.0,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let bad = |name, reason: &str| {
            Err(PhysicsError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        let all = [
            self.air_density,
            self.drag_coefficient,
            self.frontal_area,
            self.rolling_coefficient,
            self.road_gradient,
            self.gravity,
            self.mechanical_efficiency,
            self.wind_speed,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("environment", "all values must be finite");
        }
        if self.air_density <= 0.0 {
            return bad("air_density", "must be > 0");
        }
        if self.frontal_area <= 0.0 {
            return bad("frontal_area", "must be > 0");
        }
        if !(self.mechanical_efficiency > 0.0 && self.mechanical_efficiency <= 1.0) {
            return bad("mechanical_efficiency", "must lie in (0, 1]");
        }
        if self.rolling_coefficient < 0.0 {
            return bad("rolling_coefficient", "must be >= 0");
        }
        if self.gravity <= 0.0 {
            return bad("gravity", "must be > 0");
        }
        Ok(())
    }

    fn road_angle(&self) -> f64 {
        self.road_gradient.atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MassParams {
    pub rider_mass: f64,
    pub bike_mass: f64,
}

impl Default for MassParams {
    fn default() -> Self {
        // 25.4 kg is the stock weight of the converted bike.
        Self {
            rider_mass: 75.0,
            bike_mass: 25.4,
        }
    }
}

impl MassParams {
    pub fn total(&self) -> f64 {
        self.rider_mass + self.bike_mass
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.rider_mass.is_finite() && self.rider_mass > 0.0) {
            return Err(PhysicsError::InvalidParam {
                name: "rider_mass",
                reason: "must be > 0".into(),
            });
        }
        if !(self.bike_mass.is_finite() && self.bike_mass > 0.0) {
            return Err(PhysicsError::InvalidParam {
                name: "bike_mass",
                reason: "must be > 0".into(),
            });
        }
        Ok(())
    }
}

/// Aerodynamic drag at ground speed `v_b`, including the configured headwind.
///
/// A tailwind stronger than the ground speed yields a negative (propulsive)
/// force.
pub fn air_resistance(v_b: f64, env: &EnvironmentParams) -> f64 {
    let v_rel = v_b + env.wind_speed;
    0.5 * env.air_density * env.drag_coefficient * env.frontal_area * v_rel * v_rel.abs()
}

/// Drag reduction factor for a rider following at wheel gap `d_w` metres.
///
/// The quadratic fit passes 1.0 at roughly 3 m and is clamped there: following
/// further back never increases drag.
pub fn drafting_factor(d_w: f64) -> Result<f64, PhysicsError> {
    if d_w < 0.0 || d_w.is_nan() {
        return Err(PhysicsError::NegativeGap(d_w));
    }
    Ok((0.62 - 0.0104 * d_w + 0.0452 * d_w * d_w).min(1.0))
}

pub fn rolling_resistance(mass: &MassParams, env: &EnvironmentParams) -> f64 {
    env.rolling_coefficient * mass.total() * env.gravity * env.road_angle().cos()
}

/// Gravity component along the road; negative on descents.
pub fn gravity_force(mass: &MassParams, env: &EnvironmentParams) -> f64 {
    mass.total() * env.gravity * env.road_angle().sin()
}

pub fn acceleration_force(mass: &MassParams, a: f64) -> f64 {
    mass.total() * a
}

/// Sum of the non-aerodynamic resistive forces.
fn ground_forces(a: f64, mass: &MassParams, env: &EnvironmentParams) -> f64 {
    rolling_resistance(mass, env) + gravity_force(mass, env) + acceleration_force(mass, a)
}

/// Power the lead rider must produce at speed `v_b` and acceleration `a`.
pub fn leader_power(v_b: f64, a: f64, mass: &MassParams, env: &EnvironmentParams) -> f64 {
    (air_resistance(v_b, env) + ground_forces(a, mass, env)) * v_b / env.mechanical_efficiency
}

/// Power for a rider drafting `d_w` metres behind another.
pub fn drafting_power(
    v_b: f64,
    a: f64,
    d_w: f64,
    mass: &MassParams,
    env: &EnvironmentParams,
) -> Result<f64, PhysicsError> {
    let cf = drafting_factor(d_w)?;
    Ok(
        (air_resistance(v_b, env) * cf + ground_forces(a, mass, env)) * v_b
            / env.mechanical_efficiency,
    )
}

/// Steady-state resistive force (drag, rolling, gravity) at speed `v_b`.
pub fn resistive_force(v_b: f64, mass: &MassParams, env: &EnvironmentParams) -> f64 {
    air_resistance(v_b, env) + rolling_resistance(mass, env) + gravity_force(mass, env)
}
