//! Discrete heart-rate response to cycling power.
//!
//! `HR(k) = HR_S + ΔHR(k)` with
//!
//! ```text
//! ΔHR(k) = K1·P(k) + K2·ΔHR(k-1) + K3·(1 - exp(-T_A·k/τ))·P(k)
//!        + K4·Σ_{i=1}^{k-1} T_A·[HR(i) - HR_iAT]·σ(HR(i) - HR_iAT)
//!        + K5·Σ_{j=K_on}^{k-1} T_A·[HR_iAT - HR(j)]·σ(HR_iAT - HR(j))
//! ```
//!
//! where `K_on` is the first step whose heart rate exceeds `HR_iAT`. The two
//! history sums are carried as running accumulators, added in step order.

use serde::{Deserialize, Serialize};

use super::PhysioError;

/// Absolute ceiling on modelled heart rate, BPM.
pub const HR_CEILING: f64 = 220.0;
/// Floor as a fraction of resting heart rate.
pub const HR_FLOOR_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeartRateParams {
    pub resting_hr: f64,
    pub anaerobic_threshold: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    /// s
    pub time_constant: f64,
    /// s
    pub sample_time: f64,
}

impl Default for HeartRateParams {
    fn default() -> Self {
        Self {
            resting_hr: 70.0,
            anaerobic_threshold: 140.0,
            k1: 0.05,
            k2: 0.6,
            k3: 0.02,
            k4: -1e-4,
            k5: 1e-4,
            time_constant: 60.0,
            sample_time: 1.0,
        }
    }
}

impl HeartRateParams {
    pub fn validate(&self) -> Result<(), PhysioError> {
        let all = [
            self.resting_hr,
            self.anaerobic_threshold,
            self.k1,
            self.k2,
            self.k3,
            self.k4,
            self.k5,
            self.time_constant,
            self.sample_time,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(PhysioError::InvalidParams(
                "heart-rate parameters must be finite".into(),
            ));
        }
        if self.resting_hr <= 0.0 {
            return Err(PhysioError::InvalidParams("resting_hr must be > 0".into()));
        }
        if self.anaerobic_threshold <= self.resting_hr {
            return Err(PhysioError::InvalidParams(
                "anaerobic_threshold must exceed resting_hr".into(),
            ));
        }
        if self.sample_time <= 0.0 || self.time_constant <= 0.0 {
            return Err(PhysioError::InvalidParams(
                "sample_time and time_constant must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn clamp(&self, hr: f64) -> f64 {
        hr.clamp(HR_FLOOR_FRACTION * self.resting_hr, HR_CEILING)
    }
}

/// Unit step: 1 for `x >= 0`, else 0.
pub fn unit_step(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Evolving heart-rate state. `Default` is uninitialised; use [`HeartRateState::new`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeartRateState {
    step: u64,
    history: Vec<f64>,
    k_on: Option<u64>,
    delta_prev: f64,
    above_threshold_sum: f64,
    below_threshold_sum: f64,
}

impl HeartRateState {
    pub fn new(params: &HeartRateParams) -> Self {
        Self {
            step: 0,
            history: vec![params.resting_hr],
            k_on: None,
            delta_prev: 0.0,
            above_threshold_sum: 0.0,
            below_threshold_sum: 0.0,
        }
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Heart rate at every step so far, starting with `HR(0)`.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn current(&self) -> Option<f64> {
        self.history.last().copied()
    }

    /// First step whose heart rate exceeded the anaerobic threshold.
    pub fn k_on(&self) -> Option<u64> {
        self.k_on
    }

    /// Advance one sample with rider power `power` (W) and return `HR(k)`.
    pub fn step(&mut self, power: f64, p: &HeartRateParams) -> Result<f64, PhysioError> {
        if self.history.is_empty() {
            return Err(PhysioError::Uninitialized);
        }
        let k = self.step + 1;
        let ramp = 1.0 - (-p.sample_time * k as f64 / p.time_constant).exp();
        let delta = p.k1 * power
            + p.k2 * self.delta_prev
            + p.k3 * ramp * power
            + p.k4 * self.above_threshold_sum
            + p.k5 * self.below_threshold_sum;
        let hr = p.clamp(p.resting_hr + delta);

        self.step = k;
        self.delta_prev = hr - p.resting_hr;
        self.history.push(hr);
        if self.k_on.is_none() && hr > p.anaerobic_threshold {
            self.k_on = Some(k);
        }
        let over = hr - p.anaerobic_threshold;
        self.above_threshold_sum += p.sample_time * over * unit_step(over);
        if self.k_on.is_some() {
            let under = p.anaerobic_threshold - hr;
            self.below_threshold_sum += p.sample_time * under * unit_step(under);
        }
        Ok(hr)
    }
}
