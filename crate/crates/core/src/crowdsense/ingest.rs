use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveTime};

use super::{IncidentType, ReportRecord, WindowIndex};
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 7] = [
    "object_id",
    "generation_date",
    "day_time",
    "street",
    "incident_type",
    "uuid",
    "report_rating",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ZeroRating,
    Duplicate,
    Malformed,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::ZeroRating => "zero_rating",
            RejectReason::Duplicate => "duplicate",
            RejectReason::Malformed => "malformed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    /// 1-based line in the source, header included.
    pub line: u64,
    /// Empty when the row was too broken to carry one.
    pub object_id: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ingested {
    pub reports: Vec<ReportRecord>,
    pub rejections: Vec<Rejection>,
}

impl Ingested {
    pub fn first_malformed(&self) -> Option<&Rejection> {
        self.rejections.iter().find(|r| r.reason == RejectReason::Malformed)
    }
}

fn parse_time(s: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .ok()
}

fn parse_row(fields: &csv::StringRecord) -> std::result::Result<ReportRecord, String> {
    if fields.len() != REPORT_HEADER.len() {
        return Err(format!("expected {} fields, found {}", REPORT_HEADER.len(), fields.len()));
    }
    let get = |i: usize| fields[i].trim();
    let non_empty = |i: usize| {
        let v = get(i);
        if v.is_empty() {
            Err(format!("empty {}", REPORT_HEADER[i]))
        } else {
            Ok(v.to_string())
        }
    };

    let object_id = non_empty(0)?;
    let generation_date = NaiveDate::parse_from_str(get(1), "%Y-%m-%d")
        .map_err(|_| format!("bad generation_date `{}`", get(1)))?;
    let day_time = parse_time(get(2)).ok_or_else(|| format!("bad day_time `{}`", get(2)))?;
    let street = non_empty(3)?;
    let incident_type: IncidentType = get(4).parse()?;
    let uuid = non_empty(5)?;
    let report_rating: f64 = get(6)
        .parse()
        .map_err(|_| format!("bad report_rating `{}`", get(6)))?;
    if !(0.0..=5.0).contains(&report_rating) {
        return Err(format!("report_rating {report_rating} outside [0, 5]"));
    }
    Ok(ReportRecord {
        object_id,
        generation_date,
        day_time,
        street,
        incident_type,
        uuid,
        report_rating,
    })
}

/// Reads a report table and applies the cleaning rules.
///
/// A header that differs from [`REPORT_HEADER`] is a schema error; anything
/// wrong with an individual row is logged as `malformed` and skipped. Rows
/// rated 0 are dropped as spam, and for every (user, window, incident type)
/// only the first surviving report is kept.
pub fn parse_reports<R: Read>(source: R) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);

    let mut out = Ingested::default();
    let mut records = reader.records();

    match records.next() {
        None => return Ok(out),
        Some(header) => {
            let header = header.map_err(|e| Error::Schema(format!("unreadable header: {e}")))?;
            let names: Vec<&str> = header.iter().map(str::trim).collect();
            if names != REPORT_HEADER {
                return Err(Error::Schema(format!(
                    "expected header `{}`, found `{}`",
                    REPORT_HEADER.join(","),
                    names.join(",")
                )));
            }
        }
    }

    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut seen_groups: HashSet<(String, WindowIndex, IncidentType)> = HashSet::new();

    for (idx, row) in records.enumerate() {
        let fallback_line = idx as u64 + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(fallback_line, |p| p.line());
                out.rejections.push(Rejection {
                    line,
                    object_id: String::new(),
                    reason: RejectReason::Malformed,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(fallback_line, |p| p.line());
        let reject = |reason, object_id: &str, detail: String| Rejection {
            line,
            object_id: object_id.to_string(),
            reason,
            detail,
        };

        let rec = match parse_row(&row) {
            Ok(rec) => rec,
            Err(detail) => {
                let id = row.get(0).unwrap_or("").trim();
                out.rejections.push(reject(RejectReason::Malformed, id, detail));
                continue;
            }
        };
        if !seen_ids.insert(rec.object_id.clone()) {
            out.rejections
                .push(reject(RejectReason::Malformed, &rec.object_id, "object_id repeated".into()));
            continue;
        }
        if rec.report_rating == 0.0 {
            out.rejections
                .push(reject(RejectReason::ZeroRating, &rec.object_id, "rated 0 by the server".into()));
            continue;
        }
        if !seen_groups.insert((rec.uuid.clone(), rec.window(), rec.incident_type)) {
            out.rejections.push(reject(
                RejectReason::Duplicate,
                &rec.object_id,
                format!("{} already reported {} in this window", rec.uuid, rec.incident_type),
            ));
            continue;
        }
        out.reports.push(rec);
    }
    Ok(out)
}

pub fn read_reports(path: &std::path::Path) -> Result<Ingested> {
    parse_reports(std::fs::File::open(path)?)
}

pub fn write_reports<W: Write>(reports: &[ReportRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.object_id.as_str(),
            &r.generation_date.format("%Y-%m-%d").to_string(),
            &r.day_time.format("%H:%M:%S").to_string(),
            &r.street,
            r.incident_type.as_str(),
            &r.uuid,
            &r.report_rating.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejections<W: Write>(rejections: &[Rejection], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line", "object_id", "reason", "detail"])?;
    for r in rejections {
        w.write_record([r.line.to_string().as_str(), &r.object_id, r.reason.code(), &r.detail])?;
    }
    w.flush()?;
    Ok(())
}
