//! Synthetic Waze-schema corpora with three behaviour archetypes.
//!
//! * honest users file 10 to 14 reports, mostly in daytime windows, rate
//!   highly and nearly always name the event actually happening;
//! * selfish users file one to three low-effort reports;
//! * malicious users report often, mostly at night, name random event types,
//!   get rated 0 to 2 and sometimes resend the same report.
//!
//! The day/night skew makes the density of cooperative reports differ from
//! window to window.

use chrono::{Days, NaiveDate, NaiveTime};
use rand::seq::index::sample_weighted;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{IncidentType, ReportRecord};
use crate::error::{Error, Result};
use crate::rng::{self, tag, SimRng};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub users: usize,
    pub days: usize,
    pub honest_fraction: f64,
    pub selfish_fraction: f64,
    pub streets: usize,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            users: 300,
            days: 7,
            honest_fraction: 0.6,
            selfish_fraction: 0.25,
            streets: 12,
            start_date: NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid literal date"),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::param("users", "need at least one user"));
        }
        if self.days == 0 {
            return Err(Error::param("days", "need at least one day"));
        }
        if self.streets == 0 {
            return Err(Error::param("streets", "need at least one street"));
        }
        let ok = |f: f64| (0.0..=1.0).contains(&f);
        if !ok(self.honest_fraction) || !ok(self.selfish_fraction) || self.honest_fraction + self.selfish_fraction > 1.0 {
            return Err(Error::param(
                "honest_fraction",
                "honest and selfish fractions must be in [0, 1] and sum to at most 1",
            ));
        }
        Ok(())
    }

    pub fn malicious_fraction(&self) -> f64 {
        1.0 - self.honest_fraction - self.selfish_fraction
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Archetype {
    Honest,
    Selfish,
    Malicious,
}

const DAY_WEIGHTS: [f64; 8] = [0.2, 0.1, 0.6, 1.0, 1.0, 1.0, 1.0, 0.6];
const NIGHT_WEIGHTS: [f64; 8] = [1.0, 1.0, 0.5, 0.2, 0.2, 0.2, 0.3, 0.8];

struct Draft {
    date: NaiveDate,
    time: NaiveTime,
    street: usize,
    kind: IncidentType,
    user: usize,
    rating: f64,
}

fn pick_windows(rng: &mut SimRng, days: usize, per_segment: &[f64; 8], amount: usize) -> Vec<usize> {
    let total = days * 8;
    let amount = amount.min(total);
    let mut picked: Vec<usize> = sample_weighted(rng, total, |i| per_segment[i % 8], amount)
        .expect("segment weights are positive")
        .into_vec();
    picked.sort_unstable();
    picked
}

fn random_time(rng: &mut SimRng, segment: usize) -> NaiveTime {
    let hour = segment as u32 * 3 + rng.random_range(0..3);
    NaiveTime::from_hms_opt(hour, rng.random_range(0..60), rng.random_range(0..60)).expect("in range")
}

/// Builds a corpus; the same spec always gives the same rows.
pub fn synth_corpus(spec: &SynthSpec) -> Result<Vec<ReportRecord>> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, &[tag::SYNTH]);

    let honest = (spec.users as f64 * spec.honest_fraction).round() as usize;
    let selfish = ((spec.users as f64 * spec.selfish_fraction).round() as usize).min(spec.users - honest);
    let mut roles: Vec<Archetype> = std::iter::repeat_n(Archetype::Honest, honest)
        .chain(std::iter::repeat_n(Archetype::Selfish, selfish))
        .chain(std::iter::repeat_n(Archetype::Malicious, spec.users - honest - selfish))
        .collect();
    roles.shuffle(&mut rng);

    // What is really happening on each street in each window.
    let windows = spec.days * 8;
    let truth: Vec<IncidentType> = (0..windows * spec.streets)
        .map(|_| IncidentType::ALL[rng.random_range(0..4)])
        .collect();

    let mut drafts = Vec::new();
    for (user, role) in roles.iter().enumerate() {
        let (weights, count) = match role {
            Archetype::Honest => (&DAY_WEIGHTS, rng.random_range(10..=14)),
            Archetype::Selfish => (&[1.0; 8], rng.random_range(1..=3)),
            Archetype::Malicious => (&NIGHT_WEIGHTS, rng.random_range(20..=30)),
        };
        for w in pick_windows(&mut rng, spec.days, weights, count) {
            let date = spec
                .start_date
                .checked_add_days(Days::new((w / 8) as u64))
                .ok_or_else(|| Error::param("start_date", "corpus runs past the calendar"))?;
            let street = rng.random_range(0..spec.streets);
            let actual = truth[w * spec.streets + street];
            let (kind, rating) = match role {
                Archetype::Honest => {
                    let kind = if rng.random_bool(0.9) {
                        actual
                    } else {
                        IncidentType::ALL[rng.random_range(0..4)]
                    };
                    (kind, if rng.random_bool(0.8) { 5.0 } else { 4.0 })
                }
                Archetype::Selfish => (actual, if rng.random_bool(0.5) { 1.0 } else { 2.0 }),
                Archetype::Malicious => {
                    let r: f64 = rng.random();
                    let rating = if r < 0.3 {
                        0.0
                    } else if r < 0.7 {
                        1.0
                    } else {
                        2.0
                    };
                    (IncidentType::ALL[rng.random_range(0..4)], rating)
                }
            };
            let repeats = if *role == Archetype::Malicious && rng.random_bool(0.15) { 2 } else { 1 };
            for _ in 0..repeats {
                drafts.push(Draft {
                    date,
                    time: random_time(&mut rng, w % 8),
                    street,
                    kind,
                    user,
                    rating,
                });
            }
        }
    }

    drafts.sort_by(|a, b| (a.date, a.time, a.user).cmp(&(b.date, b.time, b.user)));
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| ReportRecord {
            object_id: format!("r{:06}", i + 1),
            generation_date: d.date,
            day_time: d.time,
            street: format!("Street {}", d.street + 1),
            incident_type: d.kind,
            uuid: format!("dev-{:04}", d.user),
            report_rating: d.rating,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crowdsense::{parse_reports, write_reports, CorpusStats, RejectReason};

    #[test]
    fn deterministic() {
        let spec = SynthSpec {
            users: 40,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(synth_corpus(&spec).unwrap(), synth_corpus(&spec).unwrap());
        let other = SynthSpec { seed: 10, ..spec.clone() };
        assert_ne!(synth_corpus(&spec).unwrap(), synth_corpus(&other).unwrap());
    }

    #[test]
    fn no_malicious_means_no_zero_ratings() {
        let spec = SynthSpec {
            users: 100,
            honest_fraction: 0.7,
            selfish_fraction: 0.3,
            ..Default::default()
        };
        let rows = synth_corpus(&spec).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.report_rating > 0.0));
    }

    #[test]
    fn honest_only_census() {
        let spec = SynthSpec {
            users: 100,
            honest_fraction: 1.0,
            selfish_fraction: 0.0,
            ..Default::default()
        };
        let rows = synth_corpus(&spec).unwrap();
        let mu = rows.iter().map(|r| r.report_rating).sum::<f64>() / rows.len() as f64;
        let above = rows.iter().filter(|r| r.report_rating > mu).count();
        let stats = CorpusStats::from_reports(&rows, 0.01);
        let flagged: usize = stats.windows.values().map(|w| w.coop).sum();
        assert_eq!(flagged, above);
        // Ratings are 4 or 5, so exactly the fives sit above the mean.
        assert_eq!(above, rows.iter().filter(|r| r.report_rating == 5.0).count());
    }

    #[test]
    fn default_corpus_shape() {
        let rows = synth_corpus(&SynthSpec::default()).unwrap();
        let users: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.uuid.as_str()).collect();
        assert_eq!(users.len(), 300);
        let mut buf = Vec::new();
        write_reports(&rows, &mut buf).unwrap();
        let ing = parse_reports(buf.as_slice()).unwrap();
        assert!(ing.first_malformed().is_none());
        assert!(ing.rejections.iter().any(|r| r.reason == RejectReason::ZeroRating));
        assert!(ing.rejections.iter().any(|r| r.reason == RejectReason::Duplicate));

        let stats = CorpusStats::from_reports(&ing.reports, 0.01);
        assert_eq!(stats.window_count(), 56);
        let dens: Vec<f64> = stats.windows.values().map(|w| w.coop_density()).collect();
        let lo = dens.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = dens.iter().copied().fold(0.0, f64::max);
        assert!(hi - lo > 0.2, "densities {lo}..{hi} look uniform");
    }

    #[test]
    fn rejects_bad_mix() {
        let spec = SynthSpec {
            honest_fraction: 0.8,
            selfish_fraction: 0.3,
            ..Default::default()
        };
        assert!(synth_corpus(&spec).is_err());
    }
}
