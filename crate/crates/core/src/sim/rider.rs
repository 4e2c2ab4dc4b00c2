//! Rider stand-in: pedal torque from a feed-forward term plus proportional
//! speed tracking.

use super::config::RiderParams;

/// Pedal torque (Nm) for road speed `v` and target `v_target`, both m/s.
pub fn rider_torque(rider: &RiderParams, v: f64, v_target: f64) -> f64 {
    (rider.torque_feedforward + rider.torque_gain * (v_target - v)).clamp(0.0, rider.torque_max)
}
