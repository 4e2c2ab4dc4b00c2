//! Wire formats between the bike and the phone: tab-separated sensor frames,
//! `!`-terminated motor commands, and the PWM to analog voltage mapping.

mod command;
mod frame;
mod pwm;

pub use command::{encode_command, CommandError, CommandStreamParser, MotorCommand, StreamError};
pub use frame::{
    encode_frame, parse_frame, replay, EncodeError, FrameError, ReplayStats, TelemetryFrame,
    FRAME_FIELDS,
};
pub use pwm::{pwm_to_voltage, voltage_to_pwm, PwmError, PWM_FULL_SCALE_V, PWM_MAX};
