//! Fixed-Ỹ pedal-speed ramp on a trainer: the data behind no-load fitting
//! and sector bounds.
//!
//! Each row is quasi-static. The wheel turns at whichever is faster: the
//! motor's own equilibrium speed or the speed the pedals drive it to. While
//! the pedals lag the wheel the rider free-wheels at the bias torque;
//! otherwise the rider supplies whatever the motor does not.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::physics::resistive_force;
use crate::powersplit::{human_wheel_power, motor_wheel_power, power_split, SweepPoint, YTilde};

use super::config::ScenarioConfig;
use super::log::LogError;

const KMH: f64 = 3.6;
const RPM_PER_RAD_S: f64 = 60.0 / std::f64::consts::TAU;

pub const SWEEP_COLUMNS: [&str; 8] = [
    "ytilde",
    "S_W",
    "pedal_rpm",
    "P_Hp",
    "P_Me",
    "P_Hw",
    "P_Mw",
    "m",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedalRamp {
    /// RPM reached at the end of the ramp
    pub max_rpm: f64,
    /// s
    pub duration: f64,
}

impl Default for PedalRamp {
    fn default() -> Self {
        Self {
            max_rpm: 120.0,
            duration: 120.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub ytilde: u8,
    /// km/h
    pub wheel_speed: f64,
    pub pedal_rpm: f64,
    pub p_hp: f64,
    pub p_me: f64,
    pub p_hw: f64,
    pub p_mw: f64,
    pub m: Option<f64>,
}

impl SweepRow {
    pub fn point(&self) -> SweepPoint {
        SweepPoint {
            wheel_speed: self.wheel_speed,
            human_wheel_power: self.p_hw,
            motor_wheel_power: self.p_mw,
        }
    }
}

/// Speed (m/s) at which the motor alone balances the road load, by bisection.
pub fn motor_equilibrium_speed(cfg: &ScenarioConfig, yt: YTilde) -> f64 {
    let ps = &cfg.powersplit;
    let surplus = |v: f64| {
        let pe = cfg
            .motor
            .electrical_power(yt, v * KMH, ps)
            .expect("validated table");
        motor_wheel_power(pe, yt, ps) - resistive_force(v, &cfg.mass, &cfg.environment) * v
    };
    let mut lo = 0.0;
    let mut hi = cfg.motor.free_speed(yt) / KMH;
    if surplus(1e-9) <= 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if surplus(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One row per tick of a linear pedal-speed ramp at fixed `yt`.
///
/// `noise` adds zero-mean Gaussian measurement noise (σ in W) to the logged
/// electrical power only.
pub fn sweep_experiment(
    cfg: &ScenarioConfig,
    yt: YTilde,
    ramp: PedalRamp,
    noise: Option<(f64, u64)>,
) -> Vec<SweepRow> {
    let ps = &cfg.powersplit;
    let rider = &cfg.rider;
    let dt = 1.0 / f64::from(cfg.sim.rate_hz);
    let n = (ramp.duration / dt).round() as usize;
    let v_eq = motor_equilibrium_speed(cfg, yt);
    let mut jitter = noise.map(|(sigma, seed)| {
        (
            Normal::new(0.0, sigma).expect("finite sigma"),
            ChaCha8Rng::seed_from_u64(seed ^ u64::from(yt.get())),
        )
    });

    (0..=n)
        .map(|k| {
            let rpm = ramp.max_rpm * k as f64 / n.max(1) as f64;
            let omega = rpm / RPM_PER_RAD_S;
            let v_pedal = omega * rider.wheel_radius * rider.gear_ratio;
            let v = v_eq.max(v_pedal);
            let p_me = cfg
                .motor
                .electrical_power(yt, v * KMH, ps)
                .expect("validated table");
            let p_mw = motor_wheel_power(p_me, yt, ps);
            let (tau, p_hw) = if v_pedal > v_eq && omega > 0.0 {
                let need = (resistive_force(v, &cfg.mass, &cfg.environment) * v - p_mw).max(0.0);
                let tau = ps.torque_bias + need / (ps.scaling * ps.crank_efficiency * omega);
                (tau, human_wheel_power(tau, omega, true, ps))
            } else {
                (ps.torque_bias, 0.0)
            };
            let measured = match jitter.as_mut() {
                Some((dist, rng)) => p_me + dist.sample(rng),
                None => p_me,
            };
            SweepRow {
                ytilde: yt.get(),
                wheel_speed: v * KMH,
                pedal_rpm: rpm,
                p_hp: tau * omega,
                p_me: measured,
                p_hw,
                p_mw,
                m: power_split(p_hw, p_mw).share(),
            }
        })
        .collect()
}

/// `(Ỹ, electrical power)` from rows where the motor free-wheels under a
/// pedalling rider.
pub fn noload_samples(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.p_mw == 0.0 && r.p_hw > 0.0)
        .map(|r| (f64::from(r.ytilde), r.p_me))
        .collect()
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.ytilde.to_string(),
            r.wheel_speed.to_string(),
            r.pedal_rpm.to_string(),
            r.p_hp.to_string(),
            r.p_me.to_string(),
            r.p_hw.to_string(),
            r.p_mw.to_string(),
            r.m.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>, LogError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SWEEP_COLUMNS) {
        return Err(LogError::Header {
            expected: SWEEP_COLUMNS.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let text = |c: usize| row.get(c).unwrap_or("");
        let bad = |c: usize| LogError::Field {
            row: i + 2,
            column: SWEEP_COLUMNS[c],
            text: text(c).to_string(),
        };
        let f = |c: usize| {
            text(c)
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(c))
        };
        out.push(SweepRow {
            ytilde: text(0).parse().map_err(|_| bad(0))?,
            wheel_speed: f(1)?,
            pedal_rpm: f(2)?,
            p_hp: f(3)?,
            p_me: f(4)?,
            p_hw: f(5)?,
            p_mw: f(6)?,
            m: if text(7).is_empty() {
                None
            } else {
                Some(f(7)?)
            },
        });
    }
    Ok(out)
}
