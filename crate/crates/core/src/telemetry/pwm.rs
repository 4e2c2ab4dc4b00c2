use thiserror::Error;

pub const PWM_MAX: u16 = 255;
/// Filtered output at 100% duty, V.
pub const PWM_FULL_SCALE_V: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PwmError {
    #[error("duty {0} outside 0..=255")]
    DutyOutOfRange(u16),
    #[error("voltage {0} outside 0..=5 V")]
    VoltageOutOfRange(f64),
}

/// Ideal DC level of the RC-filtered PWM output.
pub fn pwm_to_voltage(duty: u16) -> Result<f64, PwmError> {
    if duty > PWM_MAX {
        return Err(PwmError::DutyOutOfRange(duty));
    }
    Ok(f64::from(duty) / f64::from(PWM_MAX) * PWM_FULL_SCALE_V)
}

pub fn voltage_to_pwm(v: f64) -> Result<u8, PwmError> {
    if !(0.0..=PWM_FULL_SCALE_V).contains(&v) {
        return Err(PwmError::VoltageOutOfRange(v));
    }
    Ok((v / PWM_FULL_SCALE_V * f64::from(PWM_MAX))
        .round()
        .min(f64::from(PWM_MAX)) as u8)
}
