//! Fixed-step session loop.
//!
//! Each tick the plant produces a sensor frame, the phone-side analytics
//! decodes it, and on controller ticks the resulting motor request travels
//! back over the command wire before it reaches the motor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{
    arbitrate, open_loop_command, p_step, smoothed_split, tracking_error, ControllerConfig,
    ControllerState,
};
use crate::physics::resistive_force;
use crate::physio::RiderPhysioState;
use crate::powersplit::{
    human_wheel_power, motor_wheel_power, power_split, y_to_ytilde, ytilde_to_y, ControlInputError,
    ControlInputY, PowerSplit, YTilde,
};
use crate::route::{ZoneKind, ZoneTargets};
use crate::telemetry::{
    encode_command, encode_frame, parse_frame, CommandStreamParser, MotorCommand, TelemetryFrame,
};

use super::config::{ConfigError, ControlMode, ScenarioConfig};
use super::log::{EventKind, SessionEvent, SessionLog, SessionRecord};
use super::motor::motor_lag;
use super::rider::rider_torque;

const KMH: f64 = 3.6;
const RPM_PER_RAD_S: f64 = 60.0 / std::f64::consts::TAU;

/// Amp-hours left after drawing `p_me` watts at `voltage` for `dt` seconds.
pub fn battery_update(ah: f64, p_me: f64, voltage: f64, dt: f64) -> f64 {
    (ah - p_me / voltage * dt / 3600.0).max(0.0)
}

/// Physical and controller state between ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// s
    pub time: f64,
    /// m
    pub position: f64,
    /// m/s
    pub v: f64,
    /// Nm
    pub tau_p: f64,
    /// rad/s
    pub pedal_speed: f64,
    /// W, after lag
    pub p_me: f64,
    pub split: PowerSplit,
    pub controller: ControllerState,
    pub physio: RiderPhysioState,
    /// Ah
    pub battery_remaining: f64,
    /// Control input driving the motor; `None` while switched off.
    pub motor_input: Option<YTilde>,
    pub final_request: u8,
}

/// Map a decoded wire request onto the motor's control input.
fn request_to_motor(y: u8) -> Option<YTilde> {
    match y_to_ytilde(ControlInputY(y)) {
        Ok(yt) => Some(yt),
        Err(ControlInputError::InvalidHigh(_)) => Some(YTilde::MAX),
        Err(_) => None,
    }
}

/// Ramps targets over time where a polluted zone hands straight back to a
/// clean one without a transient zone in between.
#[derive(Debug, Clone)]
struct TargetTracker {
    zone_idx: usize,
    zone_kind: ZoneKind,
    entered_at: f64,
    last_transient: f64,
    last: Option<ZoneTargets>,
    ramp: Option<(f64, f64, ZoneTargets)>,
}

impl TargetTracker {
    fn targets(
        &mut self,
        cfg: &ScenarioConfig,
        t: f64,
        position: f64,
    ) -> (ZoneKind, f64, ZoneTargets) {
        let route = &cfg.route;
        let idx = route.zone_index_at(position).expect("validated route");
        let zone = route.zones[idx];
        if idx != self.zone_idx {
            if self.zone_kind == ZoneKind::Transient {
                self.last_transient = t - self.entered_at;
            }
            self.ramp = match (self.last, self.zone_kind, zone.kind) {
                (Some(from), a, b)
                    if a != ZoneKind::Transient
                        && b != ZoneKind::Transient
                        && self.last_transient > 0.0 =>
                {
                    Some((t, self.last_transient, from))
                }
                _ => None,
            };
            self.zone_idx = idx;
            self.zone_kind = zone.kind;
            self.entered_at = t;
        }
        let mut targets = route
            .targets_at(position, cfg.rider.cruise_speed)
            .expect("validated route");
        if let Some((start, dur, from)) = self.ramp {
            let frac = (t - start) / dur;
            if frac >= 1.0 {
                self.ramp = None;
            } else {
                targets = from.blend(&targets, route.ramp.weight(frac));
            }
        }
        self.last = Some(targets);
        (zone.kind, zone.concentration, targets)
    }
}

pub struct Simulation {
    cfg: ScenarioConfig,
    ctrl: ControllerConfig,
    dt: f64,
    tick: u64,
    ticks_per_control: u64,
    ticks_per_hr: u64,
    hr_power_sum: f64,
    hr_ticks: u64,
    state: SimState,
    wire: CommandStreamParser,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    tracker: TargetTracker,
    battery_flagged: bool,
    events: Vec<SessionEvent>,
}

fn whole_ticks(period: f64, dt: f64, what: &str) -> Result<u64, ConfigError> {
    let n = period / dt;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * r {
        return Err(ConfigError::Invalid(format!(
            "{what} ({period} s) must be a whole number of ticks of {dt} s"
        )));
    }
    Ok(r as u64)
}

impl Simulation {
    /// Build a simulation at the configured telemetry rate.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Self::with_dt(cfg, 1.0 / f64::from(cfg.sim.rate_hz))
    }

    /// Build a simulation with an arbitrary tick, bypassing only the
    /// telemetry-rate check.
    pub fn with_dt(cfg: &ScenarioConfig, dt: f64) -> Result<Self, ConfigError> {
        cfg.validate_model()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::Invalid(format!("tick must be > 0, got {dt}")));
        }
        let ctrl = cfg.controller.config();
        let ticks_per_control = whole_ticks(ctrl.sample_period, dt, "controller sample_period")?;
        let ticks_per_hr = whole_ticks(
            cfg.physio.heart_rate.sample_time,
            dt,
            "heart-rate sample_time",
        )?;
        let noise = (cfg.rider.torque_noise > 0.0)
            .then(|| Normal::new(0.0, cfg.rider.torque_noise).expect("validated noise"));

        let start_zone = cfg.route.zones[0];
        let start_targets = cfg
            .route
            .targets_at(0.0, cfg.rider.cruise_speed)
            .expect("validated route");
        let v0 = cfg.sim.initial_speed.unwrap_or(start_targets.speed) / KMH;
        let initial = match cfg.controller.mode {
            ControlMode::ClosedLoop => cfg.controller.initial_ytilde,
            ControlMode::OpenLoop => open_loop_command(start_zone.kind, &cfg.controller.policy)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
        };
        let p_me0 = if cfg.battery.capacity > 0.0 {
            cfg.motor
                .electrical_power(initial, v0 * KMH, &cfg.powersplit)
                .expect("validated table")
        } else {
            0.0
        };
        let state = SimState {
            time: 0.0,
            position: 0.0,
            v: v0,
            tau_p: 0.0,
            pedal_speed: cfg.rider.pedal_speed(v0),
            p_me: p_me0,
            split: power_split(0.0, 0.0),
            controller: ControllerState::new(initial, &ctrl),
            physio: RiderPhysioState::new(&cfg.physio),
            battery_remaining: cfg.battery.capacity,
            motor_input: Some(initial),
            final_request: ytilde_to_y(initial).0,
        };
        Ok(Self {
            cfg: cfg.clone(),
            ctrl,
            dt,
            tick: 0,
            ticks_per_control,
            ticks_per_hr,
            hr_power_sum: 0.0,
            hr_ticks: 0,
            state,
            wire: CommandStreamParser::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.sim.seed),
            noise,
            tracker: TargetTracker {
                zone_idx: 0,
                zone_kind: start_zone.kind,
                entered_at: 0.0,
                last_transient: 0.0,
                last: None,
                ramp: None,
            },
            battery_flagged: false,
            events: Vec::new(),
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    /// Sensor frame as the bike would transmit it, decoded by the phone.
    fn analytics_view(&self, tau: f64, omega: f64, p_me: f64) -> TelemetryFrame {
        let volts = self.cfg.battery.voltage;
        let frame = TelemetryFrame {
            battery_voltage: volts,
            motor_current: p_me / volts,
            wheel_speed: self.state.v * KMH,
            motor_temperature: self.cfg.sim.motor_temperature,
            pedal_speed: omega * RPM_PER_RAD_S,
            pedal_torque: tau,
            timestamp: None,
        };
        let line = encode_frame(&frame).expect("plant values are finite");
        parse_frame(&line)
            .expect("encoded frames parse")
            .stamped(self.state.time)
    }

    /// Send a request over the command wire; returns what the bike decoded.
    fn transmit(&mut self, request: u8) -> Option<u8> {
        let wire = encode_command(MotorCommand::from(request)).expect("u8 is in range");
        let mut decoded = None;
        for r in self.wire.feed(wire.as_bytes()) {
            match r {
                Ok(cmd) => decoded = Some(cmd.value() as u8),
                Err(e) => self.events.push(SessionEvent {
                    t: self.state.time,
                    kind: EventKind::Stream(e.to_string()),
                }),
            }
        }
        decoded
    }

    /// Advance one tick and return its record.
    pub fn step(&mut self) -> SessionRecord {
        let cfg = &self.cfg;
        let ps = &cfg.powersplit;
        let dt = self.dt;
        let t = self.tick as f64 * dt;
        self.state.time = t;
        let (kind, concentration, targets) = self.tracker.targets(cfg, t, self.state.position);
        let inputs = cfg.rider.inputs_at(t);

        let v = self.state.v;
        let mut tau = rider_torque(&cfg.rider, v, targets.speed / KMH);
        if let Some(n) = &self.noise {
            tau = (tau + n.sample(&mut self.rng)).clamp(0.0, cfg.rider.torque_max);
        }
        let omega = cfg.rider.pedal_speed(v);
        let p_hp = tau * omega;
        let p_hw = human_wheel_power(tau, omega, true, ps);

        let battery_empty = self.state.battery_remaining <= 0.0;
        let noload_input = self
            .state
            .motor_input
            .unwrap_or(self.state.controller.ytilde);
        let p_me = if battery_empty {
            0.0
        } else {
            let cmd = match self.state.motor_input {
                Some(yt) => cfg
                    .motor
                    .electrical_power(yt, v * KMH, ps)
                    .expect("validated table"),
                None => 0.0,
            };
            motor_lag(cmd, self.state.p_me, dt, cfg.motor.lag)
        };
        let p_mw = motor_wheel_power(p_me, noload_input, ps);
        let split = power_split(p_hw, p_mw);

        let seen = self.analytics_view(tau, omega, p_me);
        let seen_omega = seen.pedal_speed / RPM_PER_RAD_S;
        let seen_hw = human_wheel_power(seen.pedal_torque, seen_omega, true, ps);
        let seen_mw = motor_wheel_power(seen.motor_power(), noload_input, ps);
        self.state.controller.record(seen_hw, seen_mw);
        let m_bar = smoothed_split(&self.state.controller).ok().flatten();

        self.hr_power_sum += p_hw;
        self.hr_ticks += 1;
        if self.hr_ticks == self.ticks_per_hr {
            let mean = self.hr_power_sum / self.hr_ticks as f64;
            self.state
                .physio
                .heart_rate
                .step(mean, &cfg.physio.heart_rate)
                .expect("initialised heart-rate state");
            self.hr_power_sum = 0.0;
            self.hr_ticks = 0;
        }
        self.state.physio.breathe(concentration, dt, &cfg.physio);

        let volts = cfg.battery.voltage;
        self.state.battery_remaining =
            battery_update(self.state.battery_remaining, p_me, volts, dt);
        if self.state.battery_remaining <= 0.0
            && !self.battery_flagged
            && cfg.battery.capacity > 0.0
        {
            self.battery_flagged = true;
            self.events.push(SessionEvent {
                t,
                kind: EventKind::BatteryEmpty,
            });
        }

        let mut record = SessionRecord {
            t,
            position: self.state.position,
            zone: kind,
            v,
            tau_p: tau,
            p_hp,
            p_me,
            p_hw,
            p_mw,
            m: split.share(),
            m_star: targets.share,
            m_bar,
            e: None,
            ytilde: self.state.motor_input.map(YTilde::get),
            final_request: self.state.final_request,
            hr: self.state.physio.hr(),
            ve: self.state.physio.ventilation,
            dose: self.state.physio.cumulative_dose,
            battery_ah: self.state.battery_remaining,
        };

        let mass = cfg.mass.total();
        let propulsive = split.wheel_power / v.max(cfg.sim.v_floor);
        let a = (propulsive - resistive_force(v, &cfg.mass, &cfg.environment)) / mass;
        self.state.position += v * dt;
        self.state.v = (v + a * dt).max(0.0);
        self.state.tau_p = tau;
        self.state.pedal_speed = omega;
        self.state.p_me = p_me;
        self.state.split = split;

        if self.tick.is_multiple_of(self.ticks_per_control) {
            let e = m_bar.map(|mb| tracking_error(targets.share, mb));
            let next = match cfg.controller.mode {
                ControlMode::ClosedLoop => p_step(self.state.controller.ytilde, e, &self.ctrl),
                ControlMode::OpenLoop => {
                    open_loop_command(kind, &cfg.controller.policy).expect("policy covers route")
                }
            };
            self.state.controller.ytilde = next;
            self.state.controller.last_error = e;
            let request = arbitrate(&inputs, ytilde_to_y(next).0);
            if let Some(decoded) = self.transmit(request) {
                self.state.final_request = decoded;
                self.state.motor_input = request_to_motor(decoded);
            }
            record.e = e;
            record.ytilde = self.state.motor_input.map(YTilde::get);
            record.final_request = self.state.final_request;
        }

        self.tick += 1;
        record
    }

    fn run_to_end(mut self) -> SessionLog {
        let dt = self.dt;
        let mut records = Vec::new();
        match self.cfg.sim.duration {
            Some(d) => {
                let n = (d / dt).round() as u64;
                records.reserve(n as usize);
                for _ in 0..n {
                    records.push(self.step());
                }
            }
            None => {
                let goal = f64::from(self.cfg.route.laps) * self.cfg.route.total_length();
                let cap = (self.cfg.sim.max_duration / dt).round() as u64;
                while self.state.position < goal {
                    if self.tick >= cap {
                        self.events.push(SessionEvent {
                            t: self.tick as f64 * dt,
                            kind: EventKind::DurationCap,
                        });
                        break;
                    }
                    records.push(self.step());
                }
            }
        }
        SessionLog {
            dt,
            records,
            events: self.events,
        }
    }
}

/// Run a scenario at its telemetry rate.
pub fn run(cfg: &ScenarioConfig) -> Result<SessionLog, ConfigError> {
    Simulation::new(cfg).map(Simulation::run_to_end)
}

/// Run a scenario with tick `dt`, ignoring the telemetry-rate restriction.
pub fn run_with_dt(cfg: &ScenarioConfig, dt: f64) -> Result<SessionLog, ConfigError> {
    Simulation::with_dt(cfg, dt).map(Simulation::run_to_end)
}
