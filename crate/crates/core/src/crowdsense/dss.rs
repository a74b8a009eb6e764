//! Decision support: per (window, street) cell, score each reported event
//! type by how many trusted users back it and how trusted they are, then
//! publish the best one if it clears the threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use super::{IncentiveConfig, IncidentType, ReportRecord, WindowIndex};
use crate::crowdsense::scoring::Ledger;
use crate::error::Result;

/// Confidence of every event type reported in one cell.
///
/// `reporters` lists, per type, the rs_norm of each distinct user who
/// reported it; `cell_users` holds the rs_norm of every distinct user active
/// in the cell. Only users at or above `positive` count, and a cell without
/// any scores 0 everywhere.
pub fn confidence(
    reporters: &BTreeMap<IncidentType, Vec<f64>>,
    cell_users: &[f64],
    nu: f64,
    positive: f64,
) -> BTreeMap<IncidentType, f64> {
    let u_plus = cell_users.iter().filter(|&&r| r >= positive).count();
    let agg: BTreeMap<IncidentType, (usize, f64)> = reporters
        .iter()
        .map(|(&t, rs)| {
            let trusted = rs.iter().filter(|&&r| r >= positive);
            (t, (trusted.clone().count(), trusted.fold(0.0, |a, r| a + r)))
        })
        .collect();
    let rs_total: f64 = agg.values().map(|&(_, s)| s).sum();

    agg.into_iter()
        .map(|(t, (n, s))| {
            if u_plus == 0 || rs_total <= 0.0 {
                return (t, 0.0);
            }
            (t, nu * n as f64 / u_plus as f64 + (1.0 - nu) * s / rs_total)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    Publish(IncidentType),
    Drop,
}

/// Best type (earliest name on ties) and whether it clears `theta`.
/// `None` when nothing was reported.
pub fn decide_publish(confidences: &BTreeMap<IncidentType, f64>, theta: f64) -> Option<(IncidentType, f64, Decision)> {
    // BTreeMap iterates in name order; keep the first maximum.
    let (&best, &c) = confidences
        .iter()
        .fold(None, |acc: Option<(&IncidentType, &f64)>, (t, c)| match acc {
            Some((_, bc)) if *bc >= *c => acc,
            _ => Some((t, c)),
        })?;
    let decision = if c >= theta { Decision::Publish(best) } else { Decision::Drop };
    Some((best, c, decision))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRow {
    pub window: WindowIndex,
    pub street: String,
    pub event_type: IncidentType,
    pub confidence: f64,
    pub decision: Decision,
}

/// One row per (window, street) with kept reports, scored with the ledger's
/// configured mechanism.
pub fn decision_log(reports: &[ReportRecord], ledger: &Ledger, config: &IncentiveConfig) -> Vec<DecisionRow> {
    type Cell<'a> = BTreeMap<IncidentType, BTreeSet<&'a str>>;
    let mut cells: BTreeMap<(WindowIndex, &str), Cell<'_>> = BTreeMap::new();
    for r in reports {
        cells
            .entry((r.window(), r.street.as_str()))
            .or_default()
            .entry(r.incident_type)
            .or_default()
            .insert(r.uuid.as_str());
    }

    let rs = |u: &str| ledger.rs_norm_of(u, config.mechanism).unwrap_or(0.5);
    cells
        .into_iter()
        .filter_map(|((window, street), by_type)| {
            let everyone: BTreeSet<&str> = by_type.values().flatten().copied().collect();
            let cell_users: Vec<f64> = everyone.iter().map(|u| rs(u)).collect();
            let reporters = by_type
                .iter()
                .map(|(&t, users)| (t, users.iter().map(|u| rs(u)).collect()))
                .collect();
            let conf = confidence(&reporters, &cell_users, config.preference_factor, config.positive_rs_threshold);
            let (event_type, confidence, decision) = decide_publish(&conf, config.publish_threshold)?;
            Some(DecisionRow {
                window,
                street: street.to_string(),
                event_type,
                confidence,
                decision,
            })
        })
        .collect()
}

pub fn write_decisions<W: Write>(rows: &[DecisionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "segment", "street", "event_type", "confidence", "decision"])?;
    for r in rows {
        w.write_record([
            r.window.date.format("%Y-%m-%d").to_string(),
            r.window.segment.to_string(),
            r.street.clone(),
            r.event_type.to_string(),
            format!("{:.12e}", r.confidence),
            match r.decision {
                Decision::Publish(_) => "publish".to_string(),
                Decision::Drop => "drop".to_string(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}
