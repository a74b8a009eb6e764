//! Crowdsensing pipeline on Waze-style report tables: ingestion and
//! filtering, report quality, composite reputation, publish decisions and
//! incentive payouts under three γ mechanisms.
//!
//! This module works in `f64` throughout; report ratings and budgets are
//! plain data, not simulation state.

mod dss;
mod ingest;
mod scoring;
mod synth;

use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime, Timelike};

use crate::error::{Error, Result};

pub use dss::{confidence, decide_publish, decision_log, write_decisions, Decision, DecisionRow};
pub use ingest::{parse_reports, read_reports, write_rejections, write_reports, Ingested, RejectReason, Rejection, REPORT_HEADER};
pub use scoring::{
    assign_window, composite_rs, coop_flag, empirical_gamma, incentives, neighbours, qoc, qoc_extended, truthfulness,
    write_ledger, CorpusStats, Ledger, LedgerRow, UserScore, WindowStat,
};
pub use synth::{synth_corpus, SynthSpec};

/// Incident categories. The derived order is the lexicographic order of
/// the wire names, which is what publish tie-breaking relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IncidentType {
    Accident,
    Jam,
    RoadClosure,
    WeatherHazard,
}

impl IncidentType {
    pub const ALL: [IncidentType; 4] = [Self::Accident, Self::Jam, Self::RoadClosure, Self::WeatherHazard];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accident => "accident",
            Self::Jam => "jam",
            Self::RoadClosure => "road_closure",
            Self::WeatherHazard => "weather_hazard",
        }
    }
}

impl fmt::Display for IncidentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IncidentType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown incident type `{s}`"))
    }
}

/// A 3-hour slot of a calendar day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowIndex {
    pub date: NaiveDate,
    /// `0..8`, hour / 3.
    pub segment: u8,
}

impl WindowIndex {
    pub const SEGMENTS: u8 = 8;

    pub fn of(date: NaiveDate, time: NaiveTime) -> Self {
        WindowIndex {
            date,
            segment: (time.hour() / 3) as u8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRecord {
    pub object_id: String,
    pub generation_date: NaiveDate,
    pub day_time: NaiveTime,
    pub street: String,
    pub incident_type: IncidentType,
    /// Device identifier, used as the user identity.
    pub uuid: String,
    pub report_rating: f64,
}

impl ReportRecord {
    pub fn window(&self) -> WindowIndex {
        assign_window(self)
    }
}

/// How report persistence feeds into the extended quality score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mechanism {
    /// γ = 1 for everyone.
    A,
    /// γ = fraction of windows in which the user filed a cooperative report.
    B,
    /// Like B, but windows with few cooperative reports weigh more.
    C,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::A, Mechanism::B, Mechanism::C];
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::A => "A",
            Mechanism::B => "B",
            Mechanism::C => "C",
        })
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(Mechanism::A),
            "B" | "b" => Ok(Mechanism::B),
            "C" | "c" => Ok(Mechanism::C),
            other => Err(format!("unknown mechanism `{other}`, expected A, B or C")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncentiveConfig {
    pub budget: f64,
    /// ν: weight of the quantity share against the quality share.
    pub preference_factor: f64,
    /// θ: minimum confidence for publishing.
    pub publish_threshold: f64,
    pub positive_rs_threshold: f64,
    pub mechanism: Mechanism,
    /// Clamp margin for truthfulness, also the density floor of mechanism C.
    pub epsilon: f64,
}

impl Default for IncentiveConfig {
    fn default() -> Self {
        IncentiveConfig {
            budget: 1000.0,
            preference_factor: 0.5,
            publish_threshold: 0.5,
            positive_rs_threshold: 0.5,
            mechanism: Mechanism::C,
            epsilon: 0.01,
        }
    }
}

impl IncentiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(Error::param("budget", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.preference_factor) {
            return Err(Error::param("preference_factor", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.publish_threshold) {
            return Err(Error::param("publish_threshold", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.positive_rs_threshold) {
            return Err(Error::param("positive_rs_threshold", "must lie in [0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::param("epsilon", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}
