//! Session summaries: tracking-error distribution, ventilation by zone,
//! dose and heart-rate extremes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::route::ZoneKind;
use crate::sim::{LogError, SessionRecord};

pub const PERCENTILES: [f64; 7] = [5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0];
/// Error band used for the tracking fraction, share units.
pub const TRACKING_BAND: f64 = 0.10;
/// Default warm-up excluded from error statistics, s.
pub const DEFAULT_WARMUP: f64 = 30.0;

/// Linear interpolation between order statistics of sorted `xs`, `p` in
/// percent. `None` for an empty slice.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZoneVentilation {
    /// Mean over every tick in the zone kind, L/min.
    pub mean: f64,
    /// Mean over the second half (by time) of each visit, L/min.
    pub steady_mean: f64,
    pub ticks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    /// `(p, value in %)` for each entry of [`PERCENTILES`]; empty when no
    /// controller ticks survive the warm-up.
    pub error_percentiles: Vec<(f64, f64)>,
    pub within_band: Option<f64>,
    pub controller_ticks: usize,
    pub ventilation: BTreeMap<ZoneKind, ZoneVentilation>,
    /// µg
    pub total_dose: f64,
    pub peak_hr: f64,
    pub min_hr: f64,
}

impl ReportSummary {
    pub fn median_error_pct(&self) -> Option<f64> {
        self.error_percentiles
            .iter()
            .find(|(p, _)| *p == 50.0)
            .map(|&(_, v)| v)
    }

    pub fn steady_ve(&self, kind: ZoneKind) -> Option<f64> {
        self.ventilation.get(&kind).map(|z| z.steady_mean)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LogError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        for (p, v) in &self.error_percentiles {
            w.write_record([format!("error_p{p}_pct"), v.to_string()])?;
        }
        if let Some(f) = self.within_band {
            w.write_record(["fraction_within_10pct".to_string(), f.to_string()])?;
        }
        w.write_record([
            "controller_ticks".to_string(),
            self.controller_ticks.to_string(),
        ])?;
        for (k, z) in &self.ventilation {
            w.write_record([format!("ve_mean_{k}"), z.mean.to_string()])?;
            w.write_record([format!("ve_steady_{k}"), z.steady_mean.to_string()])?;
        }
        w.write_record(["total_dose_ug".to_string(), self.total_dose.to_string()])?;
        w.write_record(["peak_hr".to_string(), self.peak_hr.to_string()])?;
        w.write_record(["min_hr".to_string(), self.min_hr.to_string()])?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ReportSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "controller ticks: {}", self.controller_ticks)?;
        if !self.error_percentiles.is_empty() {
            let cells: Vec<String> = self
                .error_percentiles
                .iter()
                .map(|(p, v)| format!("p{p}={v:.2}%"))
                .collect();
            writeln!(f, "error percentiles: {}", cells.join(" "))?;
        }
        if let Some(w) = self.within_band {
            writeln!(f, "|e| <= 10%: {:.1}% of ticks", 100.0 * w)?;
        }
        for (k, z) in &self.ventilation {
            writeln!(
                f,
                "VE {k}: mean {:.2} L/min, steady {:.2} L/min",
                z.mean, z.steady_mean
            )?;
        }
        writeln!(f, "total dose: {:.3} µg", self.total_dose)?;
        write!(
            f,
            "heart rate: min {:.1}, peak {:.1} BPM",
            self.min_hr, self.peak_hr
        )
    }
}

/// Ticks grouped into consecutive runs of the same zone kind.
fn visits(records: &[SessionRecord]) -> Vec<&[SessionRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].zone != records[start].zone {
            out.push(&records[start..i]);
            start = i;
        }
    }
    out
}

pub fn summarize(records: &[SessionRecord], warmup: f64) -> ReportSummary {
    let kept: Vec<SessionRecord> = records.iter().filter(|r| r.t >= warmup).copied().collect();
    let mut errors: Vec<f64> = kept.iter().filter_map(|r| r.e).collect();
    errors.sort_by(f64::total_cmp);
    let error_percentiles = PERCENTILES
        .iter()
        .filter_map(|&p| percentile(&errors, p).map(|v| (p, 100.0 * v)))
        .collect();
    let within_band = (!errors.is_empty()).then(|| {
        errors.iter().filter(|e| e.abs() <= TRACKING_BAND).count() as f64 / errors.len() as f64
    });

    let mut sums: BTreeMap<ZoneKind, (f64, usize, f64, usize)> = BTreeMap::new();
    for visit in visits(&kept) {
        let kind = visit[0].zone;
        let t0 = visit[0].t;
        let t1 = visit[visit.len() - 1].t;
        let mid = 0.5 * (t0 + t1);
        let entry = sums.entry(kind).or_default();
        for r in visit {
            entry.0 += r.ve;
            entry.1 += 1;
            if r.t >= mid {
                entry.2 += r.ve;
                entry.3 += 1;
            }
        }
    }
    let ventilation = sums
        .into_iter()
        .map(|(k, (s, n, ss, sn))| {
            (
                k,
                ZoneVentilation {
                    mean: s / n as f64,
                    steady_mean: if sn > 0 { ss / sn as f64 } else { f64::NAN },
                    ticks: n,
                },
            )
        })
        .collect();

    ReportSummary {
        error_percentiles,
        within_band,
        controller_ticks: errors.len(),
        ventilation,
        total_dose: records.last().map_or(0.0, |r| r.dose),
        peak_hr: records
            .iter()
            .map(|r| r.hr)
            .fold(f64::NEG_INFINITY, f64::max),
        min_hr: records.iter().map(|r| r.hr).fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: f64, zone: ZoneKind, e: Option<f64>, ve: f64) -> SessionRecord {
        SessionRecord {
            t,
            position: t,
            zone,
            v: 1.0,
            tau_p: 0.0,
            p_hp: 0.0,
            p_me: 0.0,
            p_hw: 0.0,
            p_mw: 0.0,
            m: None,
            m_star: 0.9,
            m_bar: None,
            e,
            ytilde: Some(1),
            final_request: 90,
            hr: 70.0 + t,
            ve,
            dose: t,
            battery_ah: 7.8,
        }
    }

    #[test]
    fn percentile_arithmetic() {
        assert_eq!(percentile(&[], 50.0), None);
        assert_eq!(percentile(&[-0.1, 0.0, 0.1], 50.0), Some(0.0));
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0), Some(2.5));
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.0), Some(1.0));
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 100.0), Some(4.0));
        assert!((percentile(&[0.0, 10.0], 25.0).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_error_log() {
        let recs: Vec<_> = (0..50)
            .map(|k| rec(f64::from(k), ZoneKind::NonPolluted, Some(0.0), 30.0))
            .collect();
        let s = summarize(&recs, 0.0);
        assert!(s.error_percentiles.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(s.within_band, Some(1.0));
    }

    #[test]
    fn synthetic_three_errors() {
        let recs = vec![
            rec(0.0, ZoneKind::NonPolluted, Some(-0.1), 30.0),
            rec(1.0, ZoneKind::NonPolluted, Some(0.0), 30.0),
            rec(2.0, ZoneKind::NonPolluted, Some(0.1), 30.0),
        ];
        assert_eq!(summarize(&recs, 0.0).median_error_pct(), Some(0.0));
    }

    #[test]
    fn warmup_and_steady_segments() {
        let mut recs = Vec::new();
        for k in 0..10 {
            recs.push(rec(
                f64::from(k),
                ZoneKind::NonPolluted,
                Some(0.5),
                f64::from(k),
            ));
        }
        for k in 10..20 {
            recs.push(rec(f64::from(k), ZoneKind::Polluted, None, 100.0));
        }
        let s = summarize(&recs, 5.0);
        assert_eq!(s.controller_ticks, 5);
        let np = s.ventilation[&ZoneKind::NonPolluted];
        // kept ticks 5..=9, second half from t = 7
        assert_eq!(np.mean, 7.0);
        assert_eq!(np.steady_mean, 8.0);
        assert_eq!(s.steady_ve(ZoneKind::Polluted), Some(100.0));
        assert_eq!(s.total_dose, 19.0);
        assert_eq!((s.min_hr, s.peak_hr), (70.0, 89.0));
    }

    proptest! {
        #[test]
        fn percentiles_monotone(xs in proptest::collection::vec(-1.0f64..1.0, 1..300)) {
            let recs: Vec<_> = xs.iter().enumerate().map(|(i, &e)| rec(i as f64, ZoneKind::Transient, Some(e), 1.0)).collect();
            let s = summarize(&recs, 0.0);
            for w in s.error_percentiles.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
        }
    }
}
