//! Deterministic session simulation: rider, motor, road load, physiology,
//! route and controller advanced together at the telemetry rate.

mod config;
mod engine;
mod log;
mod motor;
mod rider;
mod sweep;

pub use config::{
    BatteryParams, ConfigError, ControlMode, ControllerSection, InputWindow, RiderParams,
    ScenarioConfig, SimParams,
};
pub use engine::{battery_update, run, run_with_dt, SimState, Simulation};
pub use log::{
    read_records, write_records, EventKind, LogError, SessionEvent, SessionLog, SessionRecord,
    LOG_COLUMNS,
};
pub use motor::{
    command_to_electrical_power, motor_lag, noload_electrical, CalibError, MotorParams,
    MOTOR_RATED_W, MOTOR_RATING_TOLERANCE,
};
pub use rider::rider_torque;
pub use sweep::{
    motor_equilibrium_speed, noload_samples, read_sweep, sweep_experiment, write_sweep, PedalRamp,
    SweepRow, SWEEP_COLUMNS,
};
