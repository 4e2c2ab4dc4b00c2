//! Zoned cycling loop: clean, transient and polluted stretches, each with a
//! pollutant concentration and a target human share.
//!
//! Transient zones carry no target of their own. Inside them the target share
//! (and the rider's target speed, where zones set one) ramps from the
//! previous anchoring zone to the next one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CLEAN_SHARE: f64 = 0.9;
pub const DEFAULT_POLLUTED_SHARE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("route has no zones")]
    Empty,
    #[error("position {0} m is invalid")]
    BadPosition(f64),
    #[error("no minimum-dose speed tabulated for {0:?}")]
    UnsupportedDemographic((Sex, AgeBand, Terrain)),
    #[error("route failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<RouteViolation>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteViolation {
    #[error("route has no zones")]
    Empty,
    #[error("zone {0} has non-positive length")]
    EmptyZone(usize),
    #[error("zone {0} does not start where the previous zone ends")]
    Gap(usize),
    #[error("first zone must start at 0 m")]
    BadOrigin,
    #[error("polluted zone {0} is not preceded by a transient zone")]
    PollutedWithoutTransient(usize),
    #[error("zone {0} target share {1} must lie in (0, 1]")]
    IllegalShare(usize, f64),
    #[error("zone {0} has negative concentration {1}")]
    NegativeConcentration(usize, f64),
    #[error("zone {0} target speed {1} km/h must be > 0")]
    BadSpeed(usize, f64),
    #[error("route has only transient zones; no ramp endpoints")]
    NoAnchor,
    #[error("route must run at least one lap")]
    NoLaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    NonPolluted,
    Transient,
    Polluted,
}

impl ZoneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ZoneKind::NonPolluted => "non_polluted",
            ZoneKind::Transient => "transient",
            ZoneKind::Polluted => "polluted",
        }
    }
}

impl std::fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ZoneKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "non_polluted" => Ok(ZoneKind::NonPolluted),
            "transient" => Ok(ZoneKind::Transient),
            "polluted" => Ok(ZoneKind::Polluted),
            other => Err(format!("unknown zone kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub kind: ZoneKind,
    /// m
    pub start: f64,
    /// m
    pub end: f64,
    /// µg/m³
    #[serde(default)]
    pub concentration: f64,
    /// Target human share; kind default when absent. Ignored on transients.
    #[serde(default)]
    pub target_share: Option<f64>,
    /// km/h; the rider's default cruising speed when absent.
    #[serde(default)]
    pub target_speed: Option<f64>,
}

impl Zone {
    pub fn new(kind: ZoneKind, start: f64, end: f64, concentration: f64) -> Self {
        Self {
            kind,
            start,
            end,
            concentration,
            target_share: None,
            target_speed: None,
        }
    }

    pub fn with_share(mut self, share: f64) -> Self {
        self.target_share = Some(share);
        self
    }

    pub fn with_speed(mut self, kmh: f64) -> Self {
        self.target_speed = Some(kmh);
        self
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Target share for anchoring zones; `None` for transients.
    pub fn share(&self) -> Option<f64> {
        match self.kind {
            ZoneKind::NonPolluted => Some(self.target_share.unwrap_or(DEFAULT_CLEAN_SHARE)),
            ZoneKind::Polluted => Some(self.target_share.unwrap_or(DEFAULT_POLLUTED_SHARE)),
            ZoneKind::Transient => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    Linear,
    Cosine,
}

impl RampShape {
    /// Map a fraction of the ramp travelled (0..=1) to a blend weight.
    pub fn weight(self, frac: f64) -> f64 {
        let f = frac.clamp(0.0, 1.0);
        match self {
            RampShape::Linear => f,
            RampShape::Cosine => 0.5 - 0.5 * (std::f64::consts::PI * f).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    #[serde(rename = "zone")]
    pub zones: Vec<Zone>,
    #[serde(default = "one_lap")]
    pub laps: u32,
    #[serde(default)]
    pub ramp: RampShape,
}

fn one_lap() -> u32 {
    1
}

/// Targets in force at a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneTargets {
    pub share: f64,
    /// km/h
    pub speed: f64,
}

impl ZoneTargets {
    /// Blend towards `to` by weight `w` in [0, 1].
    pub fn blend(&self, to: &ZoneTargets, w: f64) -> ZoneTargets {
        ZoneTargets {
            share: self.share + (to.share - self.share) * w,
            speed: self.speed + (to.speed - self.speed) * w,
        }
    }
}

impl Route {
    pub fn new(zones: Vec<Zone>, laps: u32) -> Self {
        Self {
            zones,
            laps,
            ramp: RampShape::Linear,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.zones.last().map_or(0.0, |z| z.end)
    }

    fn index_at(&self, position: f64) -> Result<usize, RouteError> {
        if self.zones.is_empty() {
            return Err(RouteError::Empty);
        }
        if !(position.is_finite() && position >= 0.0) {
            return Err(RouteError::BadPosition(position));
        }
        let local = position % self.total_length();
        // zones own their start point
        let idx = self.zones.partition_point(|z| z.end <= local);
        Ok(idx.min(self.zones.len() - 1))
    }

    pub fn zone_index_at(&self, position: f64) -> Result<usize, RouteError> {
        self.index_at(position)
    }

    pub fn zone_at(&self, position: f64) -> Result<&Zone, RouteError> {
        self.index_at(position).map(|i| &self.zones[i])
    }

    /// Nearest non-transient zone before or after `idx`, wrapping around the loop.
    fn anchor(&self, idx: usize, backwards: bool) -> Option<&Zone> {
        let n = self.zones.len();
        (1..=n)
            .map(|k| {
                if backwards {
                    (idx + n * k - k) % n
                } else {
                    (idx + k) % n
                }
            })
            .map(|i| &self.zones[i])
            .find(|z| z.kind != ZoneKind::Transient)
    }

    /// Share and speed targets at `position`. Zones without a target speed
    /// use `default_speed` (km/h).
    pub fn targets_at(&self, position: f64, default_speed: f64) -> Result<ZoneTargets, RouteError> {
        let idx = self.index_at(position)?;
        let zone = &self.zones[idx];
        let anchored = |z: &Zone| ZoneTargets {
            share: z.share().unwrap_or_default(),
            speed: z.target_speed.unwrap_or(default_speed),
        };
        if zone.kind != ZoneKind::Transient {
            return Ok(anchored(zone));
        }
        let from = self.anchor(idx, true).ok_or(RouteError::Empty)?;
        let to = self.anchor(idx, false).ok_or(RouteError::Empty)?;
        let local = position % self.total_length();
        let w = self.ramp.weight((local - zone.start) / zone.length());
        Ok(anchored(from).blend(&anchored(to), w))
    }

    /// Target human share `m*` at a position.
    pub fn target_m(&self, position: f64) -> Result<f64, RouteError> {
        self.targets_at(position, 0.0).map(|t| t.share)
    }

    pub fn validate(&self) -> Result<(), Vec<RouteViolation>> {
        let mut out = Vec::new();
        if self.zones.is_empty() {
            return Err(vec![RouteViolation::Empty]);
        }
        if self.laps == 0 {
            out.push(RouteViolation::NoLaps);
        }
        if self.zones[0].start != 0.0 {
            out.push(RouteViolation::BadOrigin);
        }
        let n = self.zones.len();
        for (i, z) in self.zones.iter().enumerate() {
            if !(z.length() > 0.0) {
                out.push(RouteViolation::EmptyZone(i));
            }
            if i > 0 && z.start != self.zones[i - 1].end {
                out.push(RouteViolation::Gap(i));
            }
            if !(z.concentration >= 0.0) {
                out.push(RouteViolation::NegativeConcentration(i, z.concentration));
            }
            if let Some(s) = z.share() {
                if !(s > 0.0 && s <= 1.0) {
                    out.push(RouteViolation::IllegalShare(i, s));
                }
            }
            if let Some(v) = z.target_speed {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(RouteViolation::BadSpeed(i, v));
                }
            }
            if z.kind == ZoneKind::Polluted
                && self.zones[(i + n - 1) % n].kind != ZoneKind::Transient
            {
                out.push(RouteViolation::PollutedWithoutTransient(i));
            }
        }
        if self.zones.iter().all(|z| z.kind == ZoneKind::Transient) {
            out.push(RouteViolation::NoAnchor);
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Free-standing form of [`Route::validate`].
pub fn validate_route(route: &Route) -> Result<(), Vec<RouteViolation>> {
    route.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgeBand {
    Under20,
    Age20To60,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Flat,
}

/// Minimum-dose cycling speed (km/h) for the tabulated demographics.
pub fn mds_speed(sex: Sex, age: AgeBand, terrain: Terrain) -> Result<f64, RouteError> {
    match (sex, age, terrain) {
        (Sex::Female, AgeBand::Under20, Terrain::Flat) => Ok(12.5),
        (Sex::Male, AgeBand::Age20To60, Terrain::Flat) => Ok(15.0),
        other => Err(RouteError::UnsupportedDemographic(other)),
    }
}
