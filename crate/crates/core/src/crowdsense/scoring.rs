use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use super::{IncentiveConfig, Mechanism, ReportRecord, WindowIndex};
use crate::error::{Error, Result};

pub fn assign_window(record: &ReportRecord) -> WindowIndex {
    WindowIndex::of(record.generation_date, record.day_time)
}

/// All unordered pairs of distinct users, in sorted order.
pub fn neighbours<'a, I>(users: I) -> Vec<(&'a str, &'a str)>
where
    I: IntoIterator<Item = &'a str>,
{
    let distinct: BTreeSet<&str> = users.into_iter().collect();
    let list: Vec<&str> = distinct.into_iter().collect();
    let mut pairs = Vec::with_capacity(list.len() * list.len().saturating_sub(1) / 2);
    for (a, &u) in list.iter().enumerate() {
        for &v in &list[a + 1..] {
            pairs.push((u, v));
        }
    }
    pairs
}

/// Rating mapped to `[ε, 1-ε]`.
pub fn truthfulness(rating: f64, epsilon: f64) -> f64 {
    (rating / 5.0).clamp(epsilon, 1.0 - epsilon)
}

/// Quality of contribution: the logit of truthfulness.
pub fn qoc(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Numeric(format!("logit undefined at τ = {tau}")));
    }
    Ok((tau / (1.0 - tau)).ln())
}

pub fn coop_flag(rating: f64, mean_rating: f64) -> bool {
    rating > mean_rating
}

pub fn qoc_extended(q: f64, gamma: f64) -> f64 {
    gamma * q
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Sums extended qualities into `(rs_raw, rs_norm)`. No reports gives the
/// neutral `(0, 0.5)`.
pub fn composite_rs<I: IntoIterator<Item = f64>>(extended_qualities: I) -> (f64, f64) {
    // Folding from +0.0 keeps an empty sum from printing as -0.
    let raw = extended_qualities.into_iter().fold(0.0, |acc, q| acc + q);
    (raw, logistic(raw))
}

/// Splits `B·U⁺/U` among users with `rs_norm ≥ threshold` in proportion to
/// their score. Everybody else, or everybody if nobody qualifies, gets 0.
pub fn incentives(rs_norm: &[f64], budget: f64, positive_threshold: f64) -> Vec<f64> {
    let positive = |r: f64| r >= positive_threshold;
    let (count, total) = rs_norm
        .iter()
        .filter(|&&r| positive(r))
        .fold((0usize, 0.0), |(c, s), &r| (c + 1, s + r));
    if count == 0 || total <= 0.0 {
        return vec![0.0; rs_norm.len()];
    }
    let pot = budget * count as f64 / rs_norm.len() as f64;
    rs_norm
        .iter()
        .map(|&r| if positive(r) { r / total * pot } else { 0.0 })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowStat {
    pub kept: usize,
    pub coop: usize,
    pub users: BTreeSet<String>,
}

impl WindowStat {
    pub fn coop_density(&self) -> f64 {
        if self.kept == 0 {
            0.0
        } else {
            self.coop as f64 / self.kept as f64
        }
    }

    pub fn neighbours(&self) -> Vec<(&str, &str)> {
        neighbours(self.users.iter().map(String::as_str))
    }
}

/// Corpus-wide quantities every user score depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusStats {
    pub mean_rating: f64,
    pub windows: BTreeMap<WindowIndex, WindowStat>,
    /// Mechanism C weight per window, mean 1 over the windows present.
    pub scarcity_weight: BTreeMap<WindowIndex, f64>,
}

impl CorpusStats {
    pub fn from_reports(reports: &[ReportRecord], epsilon: f64) -> Self {
        let mean_rating = if reports.is_empty() {
            0.0
        } else {
            reports.iter().map(|r| r.report_rating).sum::<f64>() / reports.len() as f64
        };
        let mut windows: BTreeMap<WindowIndex, WindowStat> = BTreeMap::new();
        for r in reports {
            let w = windows.entry(r.window()).or_default();
            w.kept += 1;
            w.coop += usize::from(coop_flag(r.report_rating, mean_rating));
            w.users.insert(r.uuid.clone());
        }

        let raw: Vec<(WindowIndex, f64)> = windows
            .iter()
            .map(|(&k, w)| (k, 1.0 / w.coop_density().max(epsilon)))
            .collect();
        let mean_raw = raw.iter().map(|(_, w)| w).sum::<f64>() / raw.len().max(1) as f64;
        let scarcity_weight = raw.into_iter().map(|(k, w)| (k, w / mean_raw)).collect();

        CorpusStats {
            mean_rating,
            windows,
            scarcity_weight,
        }
    }

    /// N_w: windows holding at least one kept report.
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }
}

/// γ for one user, given the windows where they filed a cooperative report.
pub fn empirical_gamma(coop_windows: &BTreeSet<WindowIndex>, mechanism: Mechanism, stats: &CorpusStats) -> f64 {
    let n_w = stats.window_count();
    if n_w == 0 {
        return match mechanism {
            Mechanism::A => 1.0,
            _ => 0.0,
        };
    }
    match mechanism {
        Mechanism::A => 1.0,
        Mechanism::B => coop_windows.len() as f64 / n_w as f64,
        Mechanism::C => {
            coop_windows
                .iter()
                .map(|k| stats.scarcity_weight.get(k).copied().unwrap_or(0.0))
                .fold(0.0, |acc, w| acc + w)
                / n_w as f64
        }
    }
}

/// Scores of one user under each mechanism, indexed by `Mechanism as usize`.
#[derive(Clone, Debug, PartialEq)]
pub struct UserScore {
    pub user_id: String,
    pub report_count: usize,
    pub gamma: [f64; 3],
    pub rs_raw: [f64; 3],
    pub rs_norm: [f64; 3],
    pub incentive: [f64; 3],
}

impl UserScore {
    pub fn is_positive(&self, mechanism: Mechanism, threshold: f64) -> bool {
        self.rs_norm[mechanism as usize] >= threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ledger {
    pub stats: CorpusStats,
    /// Sorted by user id. Only users with at least one kept report appear.
    pub users: Vec<UserScore>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow<'a> {
    pub user_id: &'a str,
    pub rs_raw: f64,
    pub rs_norm: f64,
    pub gamma_emp: f64,
    pub incentive: [f64; 3],
}

impl Ledger {
    pub fn build(reports: &[ReportRecord], config: &IncentiveConfig) -> Result<Ledger> {
        config.validate()?;
        let stats = CorpusStats::from_reports(reports, config.epsilon);

        let mut by_user: BTreeMap<&str, Vec<&ReportRecord>> = BTreeMap::new();
        for r in reports {
            by_user.entry(r.uuid.as_str()).or_default().push(r);
        }

        let mut users = Vec::with_capacity(by_user.len());
        for (user_id, own) in by_user {
            let coop_windows: BTreeSet<WindowIndex> = own
                .iter()
                .filter(|r| coop_flag(r.report_rating, stats.mean_rating))
                .map(|r| r.window())
                .collect();
            let qualities = own
                .iter()
                .map(|r| qoc(truthfulness(r.report_rating, config.epsilon)))
                .collect::<Result<Vec<f64>>>()?;

            let mut score = UserScore {
                user_id: user_id.to_string(),
                report_count: own.len(),
                gamma: [0.0; 3],
                rs_raw: [0.0; 3],
                rs_norm: [0.0; 3],
                incentive: [0.0; 3],
            };
            for m in Mechanism::ALL {
                let g = empirical_gamma(&coop_windows, m, &stats);
                let (raw, norm) = composite_rs(qualities.iter().map(|&q| qoc_extended(q, g)));
                score.gamma[m as usize] = g;
                score.rs_raw[m as usize] = raw;
                score.rs_norm[m as usize] = norm;
            }
            users.push(score);
        }

        for m in Mechanism::ALL {
            let norms: Vec<f64> = users.iter().map(|u| u.rs_norm[m as usize]).collect();
            for (u, amount) in users
                .iter_mut()
                .zip(incentives(&norms, config.budget, config.positive_rs_threshold))
            {
                u.incentive[m as usize] = amount;
            }
        }
        Ok(Ledger { stats, users })
    }

    pub fn rows(&self, mechanism: Mechanism) -> impl Iterator<Item = LedgerRow<'_>> {
        let m = mechanism as usize;
        self.users.iter().map(move |u| LedgerRow {
            user_id: &u.user_id,
            rs_raw: u.rs_raw[m],
            rs_norm: u.rs_norm[m],
            gamma_emp: u.gamma[m],
            incentive: u.incentive,
        })
    }

    pub fn rs_norm_of(&self, user_id: &str, mechanism: Mechanism) -> Option<f64> {
        self.users
            .binary_search_by(|u| u.user_id.as_str().cmp(user_id))
            .ok()
            .map(|i| self.users[i].rs_norm[mechanism as usize])
    }

    pub fn incentives(&self, mechanism: Mechanism) -> Vec<f64> {
        self.users.iter().map(|u| u.incentive[mechanism as usize]).collect()
    }

    /// Number of distinct payout levels, merging values within a relative
    /// distance of `rel_tol` of the previous level.
    pub fn incentive_levels(&self, mechanism: Mechanism, rel_tol: f64) -> usize {
        let mut v = self.incentives(mechanism);
        v.sort_by(f64::total_cmp);
        let mut levels = 0;
        let mut last: Option<f64> = None;
        for x in v {
            match last {
                Some(l) if (x - l).abs() <= rel_tol * l.abs().max(x.abs()) => {}
                _ => {
                    levels += 1;
                    last = Some(x);
                }
            }
        }
        levels
    }
}

/// `user_id,rs_raw,rs_norm,gamma_emp,incentive_A,incentive_B,incentive_C`,
/// with the score columns taken from `mechanism`. Incentive columns of
/// mechanisms missing from `columns` are left empty.
pub fn write_ledger<W: Write>(ledger: &Ledger, mechanism: Mechanism, columns: &[Mechanism], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "user_id",
        "rs_raw",
        "rs_norm",
        "gamma_emp",
        "incentive_A",
        "incentive_B",
        "incentive_C",
    ])?;
    let cell = |row: &LedgerRow<'_>, m: Mechanism| {
        if columns.contains(&m) {
            format!("{:.12e}", row.incentive[m as usize])
        } else {
            String::new()
        }
    };
    for row in ledger.rows(mechanism) {
        w.write_record([
            row.user_id.to_string(),
            format!("{:.12e}", row.rs_raw),
            format!("{:.12e}", row.rs_norm),
            format!("{:.12e}", row.gamma_emp),
            cell(&row, Mechanism::A),
            cell(&row, Mechanism::B),
            cell(&row, Mechanism::C),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crowdsense::IncidentType;
    use chrono::{NaiveDate, NaiveTime};
    use proptest::prelude::*;

    fn rec(id: &str, day: u32, hh: u32, mm: u32, user: &str, rating: f64) -> ReportRecord {
        ReportRecord {
            object_id: id.into(),
            generation_date: NaiveDate::from_ymd_opt(2024, 5, day).unwrap(),
            day_time: NaiveTime::from_hms_opt(hh, mm, 0).unwrap(),
            street: "Main St".into(),
            incident_type: IncidentType::Jam,
            uuid: user.into(),
            report_rating: rating,
        }
    }

    #[test]
    fn window_boundaries() {
        let seg = |h, m| assign_window(&rec("x", 1, h, m, "u", 3.0)).segment;
        assert_eq!(seg(0, 0), 0);
        assert_eq!(seg(4, 30), 1);
        assert_eq!(seg(23, 59), 7);
        for h in 0..24 {
            assert_eq!(seg(h, 0) as u32, h / 3);
            assert_eq!(seg(h, 59) as u32, h / 3);
        }
    }

    #[test]
    fn neighbour_pairs() {
        assert!(neighbours(["a"]).is_empty());
        assert_eq!(neighbours(["c", "a", "b", "a"]), [("a", "b"), ("a", "c"), ("b", "c")]);
        let ten: Vec<String> = (0..10).map(|i| format!("u{i}")).collect();
        assert_eq!(neighbours(ten.iter().map(String::as_str)).len(), 45);
    }

    #[test]
    fn truthfulness_and_qoc() {
        assert_eq!(truthfulness(2.5, 0.01), 0.5);
        assert_eq!(truthfulness(5.0, 0.01), 0.99);
        assert_eq!(truthfulness(0.01, 0.01), 0.01);
        assert_eq!(qoc(0.5).unwrap(), 0.0);
        assert!((qoc(0.99).unwrap() - 99f64.ln()).abs() < 1e-12);
        assert!((qoc(0.2689).unwrap() + 1.0).abs() < 1e-3);
        let t = 1.0 / (1.0 + 1f64.exp());
        assert!((qoc(t).unwrap() + 1.0).abs() < 1e-12);
        assert!(qoc(0.0).is_err() && qoc(1.0).is_err() && qoc(f64::NAN).is_err());
    }

    #[test]
    fn coop_flag_is_strict() {
        assert!(!coop_flag(3.0, 3.0));
        assert!(coop_flag(3.1, 3.0));
        let flat: Vec<ReportRecord> = (0..5).map(|i| rec(&format!("r{i}"), 1, i, 0, "u", 4.0)).collect();
        let stats = CorpusStats::from_reports(&flat, 0.01);
        assert!(stats.windows.values().all(|w| w.coop == 0));
    }

    #[test]
    fn extended_quality_and_composite() {
        assert_eq!(qoc_extended(3.7, 1.0), 3.7);
        assert_eq!(qoc_extended(3.7, 0.0), 0.0);
        assert_eq!(qoc_extended(4.0, 0.5), 2.0);
        assert_eq!(composite_rs(std::iter::empty()), (0.0, 0.5));
        assert!(composite_rs(std::iter::empty()).0.is_sign_positive());
        assert_eq!(composite_rs([1.0, -1.0]), (0.0, 0.5));
        assert!(composite_rs([800.0]).1 == 1.0);
    }

    #[test]
    fn incentive_examples() {
        let mut one = vec![0.2; 10];
        one[3] = 0.8;
        let got = incentives(&one, 100.0, 0.5);
        assert!((got[3] - 10.0).abs() < 1e-12);
        assert_eq!(got.iter().filter(|&&x| x == 0.0).count(), 9);

        let got = incentives(&[0.6, 0.9], 100.0, 0.5);
        assert!((got[0] - 40.0).abs() < 1e-12 && (got[1] - 60.0).abs() < 1e-12);

        assert_eq!(incentives(&[0.1, 0.49], 100.0, 0.5), [0.0, 0.0]);
    }

    fn window(day: u32, seg: u8) -> WindowIndex {
        WindowIndex {
            date: NaiveDate::from_ymd_opt(2024, 5, day).unwrap(),
            segment: seg,
        }
    }

    /// Ten windows, one per day at 09:00. `coop_days` get a rating of 5,
    /// the rest 1, all from `u0`; `filler` adds low-rated reports from other
    /// users to chosen days.
    fn ten_window_corpus(filler: &[(u32, usize)]) -> Vec<ReportRecord> {
        let mut out = Vec::new();
        for day in 1..=10 {
            let rating = if day <= 3 { 5.0 } else { 1.0 };
            out.push(rec(&format!("a{day}"), day, 9, 0, "u0", rating));
        }
        for &(day, n) in filler {
            for j in 0..n {
                out.push(rec(&format!("f{day}_{j}"), day, 9, 30, &format!("v{j}"), 1.0));
            }
        }
        out
    }

    #[test]
    fn gamma_b_is_window_fraction() {
        let reports = ten_window_corpus(&[]);
        let stats = CorpusStats::from_reports(&reports, 0.01);
        assert_eq!(stats.window_count(), 10);
        let coop: BTreeSet<WindowIndex> = (1..=3).map(|d| window(d, 3)).collect();
        assert!((empirical_gamma(&coop, Mechanism::B, &stats) - 0.3).abs() < 1e-15);
        assert_eq!(empirical_gamma(&coop, Mechanism::A, &stats), 1.0);
    }

    #[test]
    fn gamma_c_equals_b_for_uniform_density() {
        // Every window holds one cooperative and one non-cooperative report.
        let mut reports = Vec::new();
        for day in 1..=6 {
            reports.push(rec(&format!("h{day}"), day, 9, 0, "h", 5.0));
            reports.push(rec(&format!("l{day}"), day, 9, 5, "l", 1.0));
        }
        let stats = CorpusStats::from_reports(&reports, 0.01);
        assert!(stats.scarcity_weight.values().all(|&w| (w - 1.0).abs() < 1e-12));
        let coop: BTreeSet<WindowIndex> = [1, 4].into_iter().map(|d| window(d, 3)).collect();
        let b = empirical_gamma(&coop, Mechanism::B, &stats);
        let c = empirical_gamma(&coop, Mechanism::C, &stats);
        assert!((b - c).abs() < 1e-12);
    }

    #[test]
    fn gamma_c_rewards_scarce_windows() {
        // Day 1 is crowded with non-cooperative reports, so its density of
        // cooperative reports is the lowest.
        let reports = ten_window_corpus(&[(1, 4)]);
        let stats = CorpusStats::from_reports(&reports, 0.01);
        let scarce: BTreeSet<WindowIndex> = [window(1, 3)].into();
        let b = empirical_gamma(&scarce, Mechanism::B, &stats);
        let c = empirical_gamma(&scarce, Mechanism::C, &stats);
        // Densities: day 1 → 1/5, days 2-3 → 1, days 4-10 → 0 (floored at ε).
        let raw = [5.0, 1.0, 1.0].into_iter().chain([100.0; 7]);
        let mean = raw.sum::<f64>() / 10.0;
        assert!((c - (5.0 / mean) / 10.0).abs() < 1e-12);
        // Windows 4..10 have no cooperative report at all, so only the
        // comparison against the non-empty dense windows is meaningful.
        let dense: BTreeSet<WindowIndex> = [window(2, 3)].into();
        assert!(c > empirical_gamma(&dense, Mechanism::C, &stats));
        assert!(b == empirical_gamma(&dense, Mechanism::B, &stats));
    }

    #[test]
    fn gamma_c_above_b_when_only_in_lowest_positive_density_window() {
        // Two cooperative windows: day 1 (density 1/3) and day 2 (density 1).
        let reports = vec![
            rec("a", 1, 9, 0, "u", 5.0),
            rec("b", 1, 9, 1, "v", 1.0),
            rec("c", 1, 9, 2, "w", 1.0),
            rec("d", 2, 9, 0, "v", 5.0),
        ];
        let stats = CorpusStats::from_reports(&reports, 0.01);
        let low: BTreeSet<WindowIndex> = [window(1, 3)].into();
        let b = empirical_gamma(&low, Mechanism::B, &stats);
        let c = empirical_gamma(&low, Mechanism::C, &stats);
        // Raw weights 3 and 1, mean 2: w = 1.5 for day 1.
        assert!((b - 0.5).abs() < 1e-15);
        assert!((c - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ledger_end_to_end() {
        let reports = vec![
            rec("a", 1, 9, 0, "good", 5.0),
            rec("b", 2, 9, 0, "good", 5.0),
            rec("c", 1, 9, 5, "bad", 1.0),
            rec("d", 2, 10, 0, "bad", 1.0),
        ];
        let cfg = IncentiveConfig {
            budget: 100.0,
            ..Default::default()
        };
        let ledger = Ledger::build(&reports, &cfg).unwrap();
        assert_eq!(ledger.users.len(), 2);
        let bad = &ledger.users[0];
        let good = &ledger.users[1];
        assert_eq!(good.user_id, "good");
        // μ = 3, both of good's windows are cooperative, N_w = 2.
        assert_eq!(good.gamma[Mechanism::B as usize], 1.0);
        assert_eq!(bad.gamma[Mechanism::B as usize], 0.0);
        assert!((good.rs_raw[0] - 2.0 * 99f64.ln()).abs() < 1e-12);
        assert_eq!(bad.rs_raw[1], 0.0);
        // B: bad has γ=0 so rs_norm = 0.5 exactly and counts as positive.
        assert_eq!(bad.rs_norm[1], 0.5);
        assert!(bad.incentive[1] > 0.0);
        for m in Mechanism::ALL {
            let total: f64 = ledger.incentives(m).iter().sum();
            let positives = ledger.users.iter().filter(|u| u.is_positive(m, 0.5)).count();
            assert!((total - 100.0 * positives as f64 / 2.0).abs() < 1e-9);
        }
        assert_eq!(ledger.rs_norm_of("good", Mechanism::A), Some(good.rs_norm[0]));
        assert_eq!(ledger.rs_norm_of("nobody", Mechanism::A), None);

        let mut buf = Vec::new();
        write_ledger(&ledger, Mechanism::B, &Mechanism::ALL, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("user_id,rs_raw,rs_norm,gamma_emp,incentive_A,incentive_B,incentive_C\nbad,"));
        assert_eq!(text.lines().count(), 3);

        let mut buf = Vec::new();
        write_ledger(&ledger, Mechanism::C, &[Mechanism::C], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let good_line = text.lines().nth(2).unwrap();
        let fields: Vec<&str> = good_line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert!(fields[4].is_empty() && fields[5].is_empty() && !fields[6].is_empty());
    }

    #[test]
    fn levels_merge_close_values() {
        let mut ledger = Ledger::build(&[], &IncentiveConfig::default()).unwrap();
        for (i, x) in [0.0, 0.0, 5.0, 5.0 + 1e-12, 7.0].into_iter().enumerate() {
            ledger.users.push(UserScore {
                user_id: format!("u{i}"),
                report_count: 1,
                gamma: [1.0; 3],
                rs_raw: [0.0; 3],
                rs_norm: [0.5; 3],
                incentive: [x; 3],
            });
        }
        assert_eq!(ledger.incentive_levels(Mechanism::A, 1e-9), 3);
        assert_eq!(ledger.incentive_levels(Mechanism::A, 0.0), 4);
    }

    proptest! {
        #[test]
        fn qoc_antisymmetric(tau in 0.001f64..0.999) {
            let a = qoc(tau).unwrap();
            let b = qoc(1.0 - tau).unwrap();
            prop_assert!((a + b).abs() < 1e-12);
        }

        #[test]
        fn budget_conserved(rs in prop::collection::vec(0.0f64..1.0, 1..60), budget in 0.0f64..1e4) {
            let got = incentives(&rs, budget, 0.5);
            let positives = rs.iter().filter(|&&r| r >= 0.5).count();
            let total: f64 = got.iter().sum();
            prop_assert!((total - budget * positives as f64 / rs.len() as f64).abs() < 1e-9);
            prop_assert!(total <= budget + 1e-9);
            prop_assert!(got.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn rs_norm_tracks_sign(raw in -50.0f64..50.0) {
            let (r, n) = composite_rs([raw]);
            prop_assert_eq!(r, raw);
            prop_assert!(n > 0.0 && n <= 1.0);
            prop_assert_eq!(n >= 0.5, raw >= 0.0);
        }
    }
}
