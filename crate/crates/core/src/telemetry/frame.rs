use std::fmt;
use std::io::BufRead;

use thiserror::Error;

pub const FRAME_FIELDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("empty frame")]
    Empty,
    #[error("expected 6 fields, found {0}")]
    CountMismatch(usize),
    #[error("field {index} is not a decimal number: {text:?}")]
    BadNumber { index: usize, text: String },
}

impl FrameError {
    pub fn category(&self) -> &'static str {
        match self {
            FrameError::Empty => "Empty",
            FrameError::CountMismatch(_) => "CountMismatch",
            FrameError::BadNumber { .. } => "BadNumber",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("field `{field}` is not finite: {value}")]
pub struct EncodeError {
    pub field: &'static str,
    pub value: f64,
}

/// One sensor reading, fields in wire order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TelemetryFrame {
    /// V
    pub battery_voltage: f64,
    /// A
    pub motor_current: f64,
    /// km/h
    pub wheel_speed: f64,
    /// °C
    pub motor_temperature: f64,
    /// RPM
    pub pedal_speed: f64,
    /// Nm
    pub pedal_torque: f64,
    /// Receiver clock at parse time, s. Not part of the wire format.
    pub timestamp: Option<f64>,
}

impl TelemetryFrame {
    pub fn values(&self) -> [f64; FRAME_FIELDS] {
        [
            self.battery_voltage,
            self.motor_current,
            self.wheel_speed,
            self.motor_temperature,
            self.pedal_speed,
            self.pedal_torque,
        ]
    }

    pub fn from_values(v: [f64; FRAME_FIELDS]) -> Self {
        Self {
            battery_voltage: v[0],
            motor_current: v[1],
            wheel_speed: v[2],
            motor_temperature: v[3],
            pedal_speed: v[4],
            pedal_torque: v[5],
            timestamp: None,
        }
    }

    pub fn stamped(mut self, t: f64) -> Self {
        self.timestamp = Some(t);
        self
    }

    /// Electrical power drawn by the motor, W.
    pub fn motor_power(&self) -> f64 {
        self.battery_voltage * self.motor_current
    }
}

const FIELD_NAMES: [&str; FRAME_FIELDS] = [
    "battery_voltage",
    "motor_current",
    "wheel_speed",
    "motor_temperature",
    "pedal_speed",
    "pedal_torque",
];

/// `[+-]?digits(.digits)?`
fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

pub fn parse_frame(line: &str) -> Result<TelemetryFrame, FrameError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    if line.is_empty() {
        return Err(FrameError::Empty);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != FRAME_FIELDS {
        return Err(FrameError::CountMismatch(fields.len()));
    }
    let mut vals = [0.0; FRAME_FIELDS];
    for (index, (slot, text)) in vals.iter_mut().zip(&fields).enumerate() {
        let bad = || FrameError::BadNumber {
            index,
            text: text.to_string(),
        };
        if !is_decimal(text) {
            return Err(bad());
        }
        *slot = text.parse().map_err(|_| bad())?;
    }
    Ok(TelemetryFrame::from_values(vals))
}

/// Shortest round-tripping decimal for each field, tab separated.
pub fn encode_frame(frame: &TelemetryFrame) -> Result<String, EncodeError> {
    let vals = frame.values();
    let mut out = String::with_capacity(64);
    for (i, (&v, name)) in vals.iter().zip(FIELD_NAMES).enumerate() {
        if !v.is_finite() {
            return Err(EncodeError {
                field: name,
                value: v,
            });
        }
        if i > 0 {
            out.push('\t');
        }
        // f64 Display never uses exponent notation
        out.push_str(&v.to_string());
    }
    out.push('\n');
    Ok(out)
}

/// Outcome counts from replaying a frame log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayStats {
    pub ok: usize,
    pub empty: usize,
    pub count_mismatch: usize,
    pub bad_number: usize,
}

impl ReplayStats {
    pub fn errors(&self) -> usize {
        self.empty + self.count_mismatch + self.bad_number
    }

    pub fn tally(&mut self, r: &Result<TelemetryFrame, FrameError>) {
        match r {
            Ok(_) => self.ok += 1,
            Err(FrameError::Empty) => self.empty += 1,
            Err(FrameError::CountMismatch(_)) => self.count_mismatch += 1,
            Err(FrameError::BadNumber { .. }) => self.bad_number += 1,
        }
    }
}

impl fmt::Display for ReplayStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ok", self.ok)?;
        if self.errors() == 0 {
            return write!(f, ", 0 errors");
        }
        for (n, name) in [
            (self.bad_number, "BadNumber"),
            (self.count_mismatch, "CountMismatch"),
            (self.empty, "Empty"),
        ] {
            if n > 0 {
                write!(f, ", {n} {name}")?;
            }
        }
        Ok(())
    }
}

/// Parse every newline-delimited frame in `reader`.
pub fn replay<R: BufRead>(reader: R) -> std::io::Result<ReplayStats> {
    let mut stats = ReplayStats::default();
    for line in reader.lines() {
        stats.tally(&parse_frame(&line?));
    }
    Ok(stats)
}
