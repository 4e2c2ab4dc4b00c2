//! Per-tick session records and their CSV form.

use std::io::{Read, Write};

use thiserror::Error;

use crate::route::ZoneKind;

pub const LOG_COLUMNS: [&str; 19] = [
    "t",
    "position",
    "zone",
    "v",
    "tau_p",
    "P_Hp",
    "P_Me",
    "P_Hw",
    "P_Mw",
    "m",
    "m_star",
    "m_bar",
    "e",
    "ytilde",
    "final_request",
    "HR",
    "VE",
    "dose",
    "battery_Ah",
];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}, column `{column}`: cannot parse {text:?}")]
    Field {
        row: usize,
        column: &'static str,
        text: String,
    },
}

/// One telemetry tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionRecord {
    /// s
    pub t: f64,
    /// m along the route, cumulative over laps
    pub position: f64,
    pub zone: ZoneKind,
    /// m/s
    pub v: f64,
    /// Nm
    pub tau_p: f64,
    pub p_hp: f64,
    pub p_me: f64,
    pub p_hw: f64,
    pub p_mw: f64,
    pub m: Option<f64>,
    pub m_star: f64,
    pub m_bar: Option<f64>,
    /// Present only on controller ticks.
    pub e: Option<f64>,
    /// `None` while the motor is switched off.
    pub ytilde: Option<u8>,
    pub final_request: u8,
    /// BPM
    pub hr: f64,
    /// L/min
    pub ve: f64,
    /// µg, cumulative
    pub dose: f64,
    pub battery_ah: f64,
}

impl SessionRecord {
    pub fn wheel_power(&self) -> f64 {
        self.p_hw + self.p_mw
    }

    pub fn is_controller_tick(&self) -> bool {
        self.e.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    BatteryEmpty,
    DurationCap,
    Stream(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEvent {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    pub dt: f64,
    pub records: Vec<SessionRecord>,
    pub events: Vec<SessionEvent>,
}

fn fmt_f(x: f64) -> String {
    x.to_string()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

impl SessionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&SessionRecord> {
        self.records.last()
    }

    pub fn controller_ticks(&self) -> impl Iterator<Item = &SessionRecord> {
        self.records.iter().filter(|r| r.is_controller_tick())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LogError> {
        write_records(&self.records, out)
    }
}

pub fn write_records<W: Write>(records: &[SessionRecord], out: W) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOG_COLUMNS)?;
    for r in records {
        w.write_record([
            fmt_f(r.t),
            fmt_f(r.position),
            r.zone.as_str().to_string(),
            fmt_f(r.v),
            fmt_f(r.tau_p),
            fmt_f(r.p_hp),
            fmt_f(r.p_me),
            fmt_f(r.p_hw),
            fmt_f(r.p_mw),
            fmt_opt(r.m),
            fmt_f(r.m_star),
            fmt_opt(r.m_bar),
            fmt_opt(r.e),
            r.ytilde.map(|y| y.to_string()).unwrap_or_default(),
            r.final_request.to_string(),
            fmt_f(r.hr),
            fmt_f(r.ve),
            fmt_f(r.dose),
            fmt_f(r.battery_ah),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SessionRecord>, LogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(LOG_COLUMNS) {
        return Err(LogError::Header {
            expected: LOG_COLUMNS.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 2;
        let text = |c: usize| row.get(c).unwrap_or("");
        let bad = |c: usize| LogError::Field {
            row: row_no,
            column: LOG_COLUMNS[c],
            text: text(c).to_string(),
        };
        let f = |c: usize| -> Result<f64, LogError> {
            text(c)
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(c))
        };
        let opt = |c: usize| -> Result<Option<f64>, LogError> {
            if text(c).is_empty() {
                Ok(None)
            } else {
                f(c).map(Some)
            }
        };
        out.push(SessionRecord {
            t: f(0)?,
            position: f(1)?,
            zone: text(2).parse().map_err(|_| bad(2))?,
            v: f(3)?,
            tau_p: f(4)?,
            p_hp: f(5)?,
            p_me: f(6)?,
            p_hw: f(7)?,
            p_mw: f(8)?,
            m: opt(9)?,
            m_star: f(10)?,
            m_bar: opt(11)?,
            e: opt(12)?,
            ytilde: if text(13).is_empty() {
                None
            } else {
                Some(text(13).parse().map_err(|_| bad(13))?)
            },
            final_request: text(14).parse().map_err(|_| bad(14))?,
            hr: f(15)?,
            ve: f(16)?,
            dose: f(17)?,
            battery_ah: f(18)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, e: Option<f64>) -> SessionRecord {
        SessionRecord {
            t,
            position: 3.25,
            zone: ZoneKind::Transient,
            v: 6.1,
            tau_p: 60.0,
            p_hp: 300.0,
            p_me: 120.5,
            p_hw: 200.0,
            p_mw: 0.1 + 0.2,
            m: Some(200.0 / 200.3),
            m_star: 0.6,
            m_bar: None,
            e,
            ytilde: Some(12),
            final_request: 145,
            hr: 101.25,
            ve: 50.0,
            dose: 1e-7,
            battery_ah: 7.7999,
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![sample(0.0, None), sample(0.2, Some(-0.031))];
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,position,zone,v,"));
        assert!(!text.contains("NaN"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn rejects_bad_header_and_fields() {
        assert!(matches!(
            read_records("a,b\n1,2\n".as_bytes()),
            Err(LogError::Header { .. })
        ));
        let mut buf = Vec::new();
        write_records(&[sample(0.0, None)], &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("transient", "swamp");
        assert!(matches!(
            read_records(text.as_bytes()),
            Err(LogError::Field { column: "zone", .. })
        ));
    }
}
