//! Motor request selection: open-loop zone policy, proportional control on
//! the smoothed human share, and brake/throttle/analytics arbitration.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powersplit::{YTilde, YTILDE_MAX, YTILDE_MIN};
use crate::route::ZoneKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("moving-average buffers are empty")]
    NotWarmedUp,
    #[error("policy has no entry for zone kind `{0}`")]
    PolicyError(ZoneKind),
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub gain: f64,
    /// s
    pub sample_period: f64,
    pub human_window: usize,
    pub motor_window: usize,
    /// Deadband on the tracking error, share units.
    pub tolerance: f64,
    pub ytilde_min: u8,
    pub ytilde_max: u8,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gain: 20.0,
            sample_period: 1.0,
            human_window: 20,
            motor_window: 5,
            tolerance: 0.05,
            ytilde_min: YTILDE_MIN,
            ytilde_max: YTILDE_MAX,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidConfig(m.into()));
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return bad("gain must be > 0");
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return bad("sample_period must be > 0");
        }
        if self.human_window == 0 || self.motor_window == 0 {
            return bad("moving-average windows must be >= 1");
        }
        if !(self.tolerance >= 0.0) {
            return bad("tolerance must be >= 0");
        }
        if !(YTILDE_MIN <= self.ytilde_min
            && self.ytilde_min <= self.ytilde_max
            && self.ytilde_max <= YTILDE_MAX)
        {
            return bad("output bounds must satisfy 1 <= min <= max <= 16");
        }
        Ok(())
    }

    fn clamp(&self, raw: f64) -> YTilde {
        let v = raw
            .round()
            .clamp(f64::from(self.ytilde_min), f64::from(self.ytilde_max));
        YTilde::saturating(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub ytilde: YTilde,
    human: VecDeque<f64>,
    motor: VecDeque<f64>,
    human_window: usize,
    motor_window: usize,
    pub last_error: Option<f64>,
}

impl ControllerState {
    pub fn new(initial: YTilde, cfg: &ControllerConfig) -> Self {
        Self {
            ytilde: initial,
            human: VecDeque::with_capacity(cfg.human_window),
            motor: VecDeque::with_capacity(cfg.motor_window),
            human_window: cfg.human_window,
            motor_window: cfg.motor_window,
            last_error: None,
        }
    }

    /// Push one sample of human and motor wheel power, evicting the oldest
    /// once a window is full.
    pub fn record(&mut self, human_wheel: f64, motor_wheel: f64) {
        push_bounded(&mut self.human, human_wheel, self.human_window);
        push_bounded(&mut self.motor, motor_wheel, self.motor_window);
    }

    pub fn human_buffer(&self) -> &VecDeque<f64> {
        &self.human
    }

    pub fn motor_buffer(&self) -> &VecDeque<f64> {
        &self.motor
    }
}

fn push_bounded(buf: &mut VecDeque<f64>, x: f64, cap: usize) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(x);
}

fn mean(buf: &VecDeque<f64>) -> f64 {
    buf.iter().sum::<f64>() / buf.len() as f64
}

/// Moving-average human share `m̄`. `Ok(None)` when both averages are zero.
pub fn smoothed_split(state: &ControllerState) -> Result<Option<f64>, ControlError> {
    if state.human.is_empty() || state.motor.is_empty() {
        return Err(ControlError::NotWarmedUp);
    }
    let h = mean(&state.human);
    let total = h + mean(&state.motor);
    Ok((total != 0.0).then(|| h / total))
}

pub fn tracking_error(m_star: f64, m_bar: f64) -> f64 {
    m_star - m_bar
}

/// One proportional update. `None` error (undefined share) holds the input.
pub fn p_step(current: YTilde, e: Option<f64>, cfg: &ControllerConfig) -> YTilde {
    match e {
        Some(e) if e.is_finite() && e.abs() > cfg.tolerance => {
            cfg.clamp(current.as_f64() - cfg.gain * e)
        }
        _ => current,
    }
}

/// Offline-chosen control input per zone kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpenLoopPolicy(pub BTreeMap<String, YTilde>);

impl OpenLoopPolicy {
    pub fn from_pairs(pairs: &[(ZoneKind, YTilde)]) -> Self {
        Self(
            pairs
                .iter()
                .map(|(k, y)| (k.as_str().to_string(), *y))
                .collect(),
        )
    }

    pub fn get(&self, kind: ZoneKind) -> Option<YTilde> {
        self.0.get(kind.as_str()).copied()
    }

    /// Keys that do not name a zone kind.
    pub fn unknown_keys(&self) -> Vec<&str> {
        self.0
            .keys()
            .filter(|k| k.parse::<ZoneKind>().is_err())
            .map(String::as_str)
            .collect()
    }
}

pub fn open_loop_command(kind: ZoneKind, policy: &OpenLoopPolicy) -> Result<YTilde, ControlError> {
    policy.get(kind).ok_or(ControlError::PolicyError(kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiderInputs {
    pub left_brake: bool,
    pub right_brake: bool,
    /// V
    pub throttle_voltage: f64,
}

/// Throttle voltage above which the throttle takes over.
pub const THROTTLE_ACTIVE_V: f64 = 1.0;
const THROTTLE_TOP_V: f64 = 4.0;

/// Linear map of 1-4 V onto 0-255, clamped outside that band.
pub fn throttle_to_request(voltage: f64) -> u8 {
    let frac =
        ((voltage - THROTTLE_ACTIVE_V) / (THROTTLE_TOP_V - THROTTLE_ACTIVE_V)).clamp(0.0, 1.0);
    // f64::round rounds half away from zero
    (frac * 255.0).round() as u8
}

/// Brakes, then throttle, then analytics.
pub fn arbitrate(inputs: &RiderInputs, analytics_request: u8) -> u8 {
    if inputs.left_brake || inputs.right_brake {
        0
    } else if inputs.throttle_voltage > THROTTLE_ACTIVE_V {
        throttle_to_request(inputs.throttle_voltage)
    } else {
        analytics_request
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn yt(v: i64) -> YTilde {
        YTilde::new(v).unwrap()
    }

    fn state_with(h: &[f64], m: &[f64]) -> ControllerState {
        let cfg = ControllerConfig {
            human_window: h.len().max(1),
            motor_window: m.len().max(1),
            ..Default::default()
        };
        let mut s = ControllerState::new(yt(8), &cfg);
        for &x in h {
            push_bounded(&mut s.human, x, s.human_window);
        }
        for &x in m {
            push_bounded(&mut s.motor, x, s.motor_window);
        }
        s
    }

    #[test]
    fn smoothed_split_examples() {
        assert_eq!(
            smoothed_split(&state_with(&[100.0; 20], &[100.0; 5])).unwrap(),
            Some(0.5)
        );
        assert_eq!(
            smoothed_split(&state_with(&[0.0; 20], &[200.0; 5])).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            smoothed_split(&state_with(&[100.0, 200.0], &[50.0])).unwrap(),
            Some(0.75)
        );
        assert_eq!(smoothed_split(&state_with(&[0.0], &[0.0])).unwrap(), None);
        assert_eq!(
            smoothed_split(&state_with(&[], &[1.0])),
            Err(ControlError::NotWarmedUp)
        );
    }

    #[test]
    fn windows_evict_oldest() {
        let cfg = ControllerConfig {
            human_window: 2,
            motor_window: 1,
            ..Default::default()
        };
        let mut s = ControllerState::new(yt(8), &cfg);
        for k in 0..5 {
            s.record(f64::from(k), 10.0 * f64::from(k));
        }
        assert_eq!(
            s.human_buffer().iter().copied().collect::<Vec<_>>(),
            vec![3.0, 4.0]
        );
        assert_eq!(
            s.motor_buffer().iter().copied().collect::<Vec<_>>(),
            vec![40.0]
        );
    }

    #[test]
    fn tracking_error_examples() {
        assert_eq!(tracking_error(0.3, 0.3), 0.0);
        assert!((tracking_error(0.9, 0.8) - 0.1).abs() < 1e-15);
        assert!((tracking_error(0.3, 0.4) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn p_step_examples() {
        let cfg = ControllerConfig::default();
        assert_eq!(p_step(yt(10), Some(0.1), &cfg), yt(8));
        assert_eq!(p_step(yt(1), Some(0.5), &cfg), yt(1));
        assert_eq!(p_step(yt(10), Some(0.02), &cfg), yt(10));
        assert_eq!(p_step(yt(10), None, &cfg), yt(10));
        assert_eq!(p_step(yt(10), Some(-0.5), &cfg), yt(16));
    }

    #[test]
    fn open_loop_examples() {
        let p = OpenLoopPolicy::from_pairs(&[
            (ZoneKind::NonPolluted, yt(1)),
            (ZoneKind::Polluted, yt(14)),
        ]);
        assert_eq!(open_loop_command(ZoneKind::NonPolluted, &p).unwrap(), yt(1));
        assert_eq!(open_loop_command(ZoneKind::Polluted, &p).unwrap(), yt(14));
        assert_eq!(
            open_loop_command(ZoneKind::Transient, &p),
            Err(ControlError::PolicyError(ZoneKind::Transient))
        );
    }

    #[test]
    fn throttle_examples() {
        assert_eq!(throttle_to_request(1.0), 0);
        assert_eq!(throttle_to_request(4.0), 255);
        assert_eq!(throttle_to_request(2.5), 128);
        assert_eq!(throttle_to_request(0.0), 0);
        assert_eq!(throttle_to_request(5.0), 255);
    }

    #[test]
    fn arbitrate_examples() {
        let brake = RiderInputs {
            left_brake: true,
            throttle_voltage: 4.0,
            ..Default::default()
        };
        assert_eq!(arbitrate(&brake, 200), 0);
        let throttle = RiderInputs {
            throttle_voltage: 4.0,
            ..Default::default()
        };
        assert_eq!(arbitrate(&throttle, 100), 255);
        let idle = RiderInputs {
            throttle_voltage: 0.5,
            ..Default::default()
        };
        assert_eq!(arbitrate(&idle, 123), 123);
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        for bad in [
            ControllerConfig {
                gain: 0.0,
                ..Default::default()
            },
            ControllerConfig {
                human_window: 0,
                ..Default::default()
            },
            ControllerConfig {
                tolerance: -0.1,
                ..Default::default()
            },
            ControllerConfig {
                ytilde_min: 5,
                ytilde_max: 4,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    proptest! {
        #[test]
        fn output_bounded(y in 1i64..=16, e in -1e6f64..1e6) {
            let out = p_step(yt(y), Some(e), &ControllerConfig::default());
            prop_assert!((1..=16).contains(&out.get()));
        }

        #[test]
        fn sign_correct(y in 1i64..=16, e in 0.0501f64..1.0) {
            let cfg = ControllerConfig::default();
            let down = p_step(yt(y), Some(e), &cfg);
            let up = p_step(yt(y), Some(-e), &cfg);
            prop_assert!(down < yt(y) || y == 1);
            prop_assert!(up > yt(y) || y == 16);
        }

        #[test]
        fn deadband_idempotent(y in 1i64..=16, es in proptest::collection::vec(-0.05f64..=0.05, 1..50)) {
            let cfg = ControllerConfig::default();
            let mut cur = yt(y);
            for e in es {
                cur = p_step(cur, Some(e), &cfg);
            }
            prop_assert_eq!(cur, yt(y));
        }

        #[test]
        fn throttle_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(throttle_to_request(lo) <= throttle_to_request(hi));
        }
    }
}
