//! Taste-versus-addiction breakdowns of a trained SWA chain: per user, per
//! artist, per topic, per hour of day and per day of week.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{Datelike, FixedOffset, TimeZone, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::PointEstimates;
use crate::model::ModelState;
use crate::provenance;

/// Leave-one-out (P(x=0), P(x=1)) for every training log, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPosterior {
    pub pairs: Vec<[f64; 2]>,
}

pub fn compute_log_posteriors(state: &ModelState) -> Result<LogPosterior> {
    Ok(LogPosterior {
        pairs: state.flag_posteriors()?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKey {
    User,
    Artist,
    Topic,
    HourOfDay,
    DayOfWeek,
}

impl fmt::Display for ReportKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportKey::User => "user",
            ReportKey::Artist => "artist",
            ReportKey::Topic => "topic",
            ReportKey::HourOfDay => "hour-of-day",
            ReportKey::DayOfWeek => "day-of-week",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub key: String,
    pub taste_ratio: f64,
    pub addiction_ratio: f64,
    pub support: u64,
    /// Set when the entry was computed from less data than requested.
    pub flagged: bool,
    /// Representative artists (topic entries only).
    pub artists: Vec<String>,
}

impl ReportEntry {
    fn from_strengths(key: String, taste: f64, addiction: f64, support: u64) -> Self {
        let total = taste + addiction;
        ReportEntry {
            key,
            taste_ratio: taste / total,
            addiction_ratio: addiction / total,
            support,
            flagged: false,
            artists: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddictionReport {
    pub kind: ReportKey,
    pub entries: Vec<ReportEntry>,
    /// Keys with no data.
    pub omitted: Vec<String>,
}

impl AddictionReport {
    pub fn entry(&self, key: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W, provenance: &str) -> Result<()> {
        provenance::write_header(&mut w, provenance)?;
        writeln!(
            w,
            "{}\ttaste_ratio\taddiction_ratio\tsupport\tflagged\tartists",
            self.kind
        )?;
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.key,
                e.taste_ratio,
                e.addiction_ratio,
                e.support,
                u8::from(e.flagged),
                e.artists.join(",")
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equal-width bins over [0, 1]: left-closed, right-open, last bin closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new<I: IntoIterator<Item = f64>>(values: I, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::config("bins", "need at least 2 bins"));
        }
        let mut counts = vec![0u64; bins];
        for v in values {
            counts[Self::bin_of(v, bins)] += 1;
        }
        Ok(Histogram {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts,
        })
    }

    pub fn bin_of(value: f64, bins: usize) -> usize {
        let b = (value * bins as f64).floor();
        if b.is_nan() || b < 0.0 {
            0
        } else {
            (b as usize).min(bins - 1)
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W, provenance: &str) -> Result<()> {
        provenance::write_header(&mut w, provenance)?;
        writeln!(w, "bin_low\tbin_high\tcount")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", self.edges[i], self.edges[i + 1], c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-user (lambda_0, lambda_1) with N_u as support, plus a histogram of
/// lambda_1.
pub fn user_addiction_report(est: &PointEstimates, bins: usize) -> Result<(AddictionReport, Histogram)> {
    let histogram = Histogram::new(est.lambda.iter().map(|l| l[1]), bins)?;
    let entries = est
        .users
        .iter()
        .zip(&est.lambda)
        .zip(&est.user_logs)
        .map(|((user, l), &n)| ReportEntry {
            key: user.clone(),
            taste_ratio: l[0],
            addiction_ratio: l[1],
            support: n,
            flagged: false,
            artists: Vec::new(),
        })
        .collect();
    Ok((
        AddictionReport {
            kind: ReportKey::User,
            entries,
            omitted: Vec::new(),
        },
        histogram,
    ))
}

/// Normalized posterior sums per user; tends to lambda_u as N_u grows.
pub fn user_posterior_report(state: &ModelState, posteriors: &LogPosterior) -> AddictionReport {
    let corpus = state.corpus();
    let mut sums = vec![(0.0, 0.0, 0u64); corpus.num_users()];
    for span in &corpus.sessions {
        let e = &mut sums[span.user as usize];
        for i in span.logs() {
            e.0 += posteriors.pairs[i][0];
            e.1 += posteriors.pairs[i][1];
            e.2 += 1;
        }
    }
    AddictionReport {
        kind: ReportKey::User,
        entries: sums
            .into_iter()
            .enumerate()
            .map(|(u, (t, a, n))| ReportEntry::from_strengths(corpus.users[u].clone(), t, a, n))
            .collect(),
        omitted: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Period {
    HourOfDay,
    DayOfWeek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DayFilter {
    #[default]
    All,
    Weekdays,
    Weekends,
}

impl FromStr for DayFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(DayFilter::All),
            "weekdays" => Ok(DayFilter::Weekdays),
            "weekends" => Ok(DayFilter::Weekends),
            other => Err(Error::config(
                "day-filter",
                format!("expected all|weekdays|weekends, got `{other}`"),
            )),
        }
    }
}

impl DayFilter {
    fn admits(self, day: Weekday) -> bool {
        let weekend = matches!(day, Weekday::Sat | Weekday::Sun);
        match self {
            DayFilter::All => true,
            DayFilter::Weekdays => !weekend,
            DayFilter::Weekends => weekend,
        }
    }
}

/// Parses `UTC`, `Z`, or a fixed offset such as `+09:00` / `-0530`.
pub fn parse_timezone(s: &str) -> Result<FixedOffset> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("utc") || t == "Z" {
        return Ok(FixedOffset::east_opt(0).expect("zero offset"));
    }
    let bad = || Error::config("timezone", format!("expected UTC or a +HH:MM offset, got `{s}`"));
    let (sign, rest) = match t.as_bytes().first() {
        Some(b'+') => (1, &t[1..]),
        Some(b'-') => (-1, &t[1..]),
        _ => return Err(bad()),
    };
    let digits: String = rest.chars().filter(|c| *c != ':').collect();
    if digits.len() != 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let hours: i32 = digits[..2].parse().map_err(|_| bad())?;
    let minutes: i32 = digits[2..].parse().map_err(|_| bad())?;
    if minutes >= 60 {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60)).ok_or_else(bad)
}

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

/// Sums p0 and p1 over the logs falling in each hour (0-23) or weekday
/// (Mon-Sun) in `timezone`, then normalizes each bucket. Empty buckets are
/// listed in `omitted`.
pub fn temporal_addiction_report(
    state: &ModelState,
    posteriors: &LogPosterior,
    period: Period,
    timezone: FixedOffset,
    day_filter: DayFilter,
) -> AddictionReport {
    let buckets = match period {
        Period::HourOfDay => 24,
        Period::DayOfWeek => 7,
    };
    let mut sums = vec![(0.0, 0.0, 0u64); buckets];
    for (i, &t) in state.corpus().log_time.iter().enumerate() {
        let local = Utc
            .timestamp_opt(t, 0)
            .single()
            .expect("stored timestamps are valid")
            .with_timezone(&timezone);
        if !day_filter.admits(local.weekday()) {
            continue;
        }
        let b = match period {
            Period::HourOfDay => local.hour() as usize,
            Period::DayOfWeek => local.weekday().num_days_from_monday() as usize,
        };
        sums[b].0 += posteriors.pairs[i][0];
        sums[b].1 += posteriors.pairs[i][1];
        sums[b].2 += 1;
    }
    let name = |b: usize| match period {
        Period::HourOfDay => b.to_string(),
        Period::DayOfWeek => WEEKDAYS[b].to_owned(),
    };
    let mut entries = Vec::new();
    let mut omitted = Vec::new();
    for (b, (t, a, n)) in sums.into_iter().enumerate() {
        if n == 0 {
            omitted.push(name(b));
        } else {
            entries.push(ReportEntry::from_strengths(name(b), t, a, n));
        }
    }
    if !omitted.is_empty() {
        log::info!("temporal report: {} empty buckets omitted", omitted.len());
    }
    AddictionReport {
        kind: match period {
            Period::HourOfDay => ReportKey::HourOfDay,
            Period::DayOfWeek => ReportKey::DayOfWeek,
        },
        entries,
        omitted,
    }
}

/// Unnormalized (sum p0, sum p1, log count) per artist index.
pub fn artist_strengths(state: &ModelState, posteriors: &LogPosterior) -> Vec<(f64, f64, u64)> {
    let corpus = state.corpus();
    let mut sums = vec![(0.0, 0.0, 0u64); corpus.num_artists()];
    for (i, &a) in corpus.log_artist.iter().enumerate() {
        let e = &mut sums[a as usize];
        e.0 += posteriors.pairs[i][0];
        e.1 += posteriors.pairs[i][1];
        e.2 += 1;
    }
    sums
}

/// Normalized per-artist (taste, addiction) over all of the artist's logs.
pub fn artist_addiction_report(state: &ModelState, posteriors: &LogPosterior) -> AddictionReport {
    let corpus = state.corpus();
    let mut entries = Vec::new();
    let mut omitted = Vec::new();
    for (a, (t, x, n)) in artist_strengths(state, posteriors).into_iter().enumerate() {
        if n == 0 {
            omitted.push(corpus.artists[a].clone());
        } else {
            entries.push(ReportEntry::from_strengths(corpus.artists[a].clone(), t, x, n));
        }
    }
    AddictionReport {
        kind: ReportKey::Artist,
        entries,
        omitted,
    }
}

/// Histogram of addiction ratios over a report's entries.
pub fn addiction_histogram(report: &AddictionReport, bins: usize) -> Result<Histogram> {
    Histogram::new(report.entries.iter().map(|e| e.addiction_ratio), bins)
}

/// The `n` artists with the largest phi_ka, descending, ties broken by
/// artist index. The flag is set when `n` exceeds the vocabulary.
pub fn top_artists_for_topic(est: &PointEstimates, topic: usize, n: usize) -> Result<(Vec<usize>, bool)> {
    if topic >= est.topics() {
        return Err(Error::Lookup {
            kind: "topic",
            id: topic.to_string(),
        });
    }
    let row = est.phi_row(topic);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let flagged = n > order.len();
    order.truncate(n);
    Ok((order, flagged))
}

/// Per topic: average the per-artist (taste, addiction) ratios of its
/// `top_n` artists by phi, renormalize, and sort topics by ascending
/// addiction ratio. Only artists above the topic's smoothing floor count;
/// topics with fewer than `top_n` of them are flagged, topics with none are
/// omitted.
pub fn topic_addiction_report(
    state: &ModelState,
    est: &PointEstimates,
    posteriors: &LogPosterior,
    top_n: usize,
) -> Result<AddictionReport> {
    if top_n == 0 {
        return Err(Error::config("top-n", "must be at least 1"));
    }
    let strengths = artist_strengths(state, posteriors);
    let mut entries = Vec::new();
    let mut omitted = Vec::new();
    for k in 0..est.topics() {
        let (top, _) = top_artists_for_topic(est, k, top_n)?;
        let floor = est.phi_floor[k];
        let used: Vec<usize> = top.into_iter().filter(|&a| est.phi(k, a) > floor).collect();
        if used.is_empty() {
            omitted.push(k.to_string());
            continue;
        }
        let (mut taste, mut addiction, mut support) = (0.0, 0.0, 0u64);
        for &a in &used {
            let (t, x, n) = strengths[a];
            taste += t / (t + x);
            addiction += x / (t + x);
            support += n;
        }
        let m = used.len() as f64;
        let mut entry = ReportEntry::from_strengths(k.to_string(), taste / m, addiction / m, support);
        entry.flagged = used.len() < top_n;
        entry.artists = used.iter().map(|&a| est.artists[a].clone()).collect();
        entries.push(entry);
    }
    entries.sort_by(|a, b| {
        a.addiction_ratio.total_cmp(&b.addiction_ratio).then_with(|| {
            a.key
                .parse::<usize>()
                .unwrap_or(0)
                .cmp(&b.key.parse::<usize>().unwrap_or(0))
        })
    });
    Ok(AddictionReport {
        kind: ReportKey::Topic,
        entries,
        omitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::estimate_parameters;
    use crate::ingest::{PlayLog, Session, SessionizedDataset, UserSessions};
    use crate::model::{Hyperparameters, Variant};
    use chrono::DateTime;

    fn state_at(times: &[&str]) -> ModelState {
        let logs: Vec<PlayLog> = times
            .iter()
            .enumerate()
            .map(|(i, t)| {
                PlayLog::new(
                    "u",
                    format!("a{}", i % 2),
                    DateTime::parse_from_rfc3339(t).unwrap().with_timezone(&Utc),
                )
            })
            .collect();
        let ds = SessionizedDataset::from_users(vec![UserSessions {
            user_id: "u".into(),
            sessions: logs
                .into_iter()
                .map(|l| Session {
                    user_id: "u".into(),
                    logs: vec![l],
                })
                .collect(),
        }]);
        let hp = Hyperparameters::with_defaults(2, ds.num_artists(), Variant::Swa);
        ModelState::init(&ds, hp, 0).unwrap()
    }

    #[test]
    fn histogram_boundaries() {
        let h = Histogram::new([0.05, 0.1, 0.95, 1.0, 0.0, 0.3], 10).unwrap();
        assert_eq!(h.counts, vec![2, 1, 0, 1, 0, 0, 0, 0, 0, 2]);
        assert!(Histogram::new([0.5], 1).is_err());
        let all_low = Histogram::new(vec![0.05; 7], 10).unwrap();
        assert_eq!(all_low.counts[0], 7);
    }

    #[test]
    fn uniform_posteriors_give_even_buckets() {
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-07T14:00:00Z", "2013-01-08T14:10:00Z"]);
        let post = LogPosterior {
            pairs: vec![[0.5, 0.5]; 3],
        };
        let r = temporal_addiction_report(
            &st,
            &post,
            Period::HourOfDay,
            parse_timezone("UTC").unwrap(),
            DayFilter::All,
        );
        assert_eq!(r.entries.len(), 2);
        for e in &r.entries {
            assert_eq!((e.taste_ratio, e.addiction_ratio), (0.5, 0.5));
        }
        assert_eq!(r.omitted.len(), 22);
    }

    #[test]
    fn single_log_bucket() {
        let st = state_at(&["2013-01-07T09:30:00Z"]);
        let post = LogPosterior {
            pairs: vec![[0.2, 0.8]],
        };
        let r = temporal_addiction_report(
            &st,
            &post,
            Period::HourOfDay,
            parse_timezone("UTC").unwrap(),
            DayFilter::All,
        );
        assert_eq!(r.entries.len(), 1);
        let e = r.entry("9").unwrap();
        assert!((e.taste_ratio - 0.2).abs() < 1e-15 && (e.addiction_ratio - 0.8).abs() < 1e-15);
        assert_eq!(e.support, 1);
        let d = temporal_addiction_report(
            &st,
            &post,
            Period::DayOfWeek,
            parse_timezone("UTC").unwrap(),
            DayFilter::All,
        );
        assert_eq!(d.entries[0].key, "Mon");
    }

    #[test]
    fn timezone_shift_rotates_hours() {
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-07T23:30:00Z"]);
        let post = LogPosterior {
            pairs: vec![[0.2, 0.8], [0.9, 0.1]],
        };
        let utc = temporal_addiction_report(
            &st,
            &post,
            Period::HourOfDay,
            parse_timezone("UTC").unwrap(),
            DayFilter::All,
        );
        let plus1 = temporal_addiction_report(
            &st,
            &post,
            Period::HourOfDay,
            parse_timezone("+01:00").unwrap(),
            DayFilter::All,
        );
        for e in &utc.entries {
            let h: usize = e.key.parse().unwrap();
            let shifted = plus1.entry(&((h + 1) % 24).to_string()).unwrap();
            assert_eq!(shifted.addiction_ratio, e.addiction_ratio);
        }
    }

    #[test]
    fn day_filter_restricts_logs() {
        // 2013-01-12 is a Saturday
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-12T09:30:00Z"]);
        let post = LogPosterior {
            pairs: vec![[0.2, 0.8], [0.6, 0.4]],
        };
        let tz = parse_timezone("UTC").unwrap();
        let wk = temporal_addiction_report(&st, &post, Period::HourOfDay, tz, DayFilter::Weekends);
        assert_eq!(wk.entries.len(), 1);
        assert!((wk.entries[0].addiction_ratio - 0.4).abs() < 1e-15);
    }

    #[test]
    fn timezone_parsing() {
        assert_eq!(parse_timezone("+09:00").unwrap().local_minus_utc(), 9 * 3600);
        assert_eq!(parse_timezone("-0530").unwrap().local_minus_utc(), -(5 * 3600 + 1800));
        assert!(parse_timezone("Asia/Tokyo").is_err());
        assert!(parse_timezone("+09:75").is_err());
    }

    #[test]
    fn artist_singleton_and_conservation() {
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-07T11:30:00Z", "2013-01-07T13:30:00Z"]);
        let post = LogPosterior {
            pairs: vec![[0.3, 0.7], [0.5, 0.5], [0.1, 0.9]],
        };
        let r = artist_addiction_report(&st, &post);
        let a1 = r.entry("a1").unwrap();
        assert!((a1.taste_ratio - 0.5).abs() < 1e-15);
        assert_eq!(a1.support, 1);
        let total: f64 = artist_strengths(&st, &post).iter().map(|s| s.0 + s.1).sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn top_artists_tie_break_and_overflow() {
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-07T11:30:00Z"]);
        let mut est = estimate_parameters(&st);
        let a = est.num_artists();
        est.phi = vec![1.0 / a as f64; a * est.topics()];
        assert_eq!(top_artists_for_topic(&est, 0, 1).unwrap(), (vec![0], false));
        assert_eq!(top_artists_for_topic(&est, 0, 5).unwrap(), (vec![0, 1], true));
        est.phi[1] = 0.9;
        est.phi[0] = 0.1;
        assert_eq!(top_artists_for_topic(&est, 0, 1).unwrap().0, vec![1]);
        assert!(top_artists_for_topic(&est, 9, 1).is_err());
    }

    #[test]
    fn topic_entries_constant_ratio() {
        let st = state_at(&["2013-01-07T09:30:00Z", "2013-01-07T11:30:00Z", "2013-01-07T13:30:00Z"]);
        let mut est = estimate_parameters(&st);
        est.phi_floor = vec![0.0; est.topics()];
        let post = LogPosterior {
            pairs: vec![[0.4, 0.6]; 3],
        };
        let r = topic_addiction_report(&st, &est, &post, 20).unwrap();
        assert_eq!(r.entries.len(), 2);
        for e in &r.entries {
            assert!((e.taste_ratio - 0.4).abs() < 1e-12);
            assert!((e.addiction_ratio - 0.6).abs() < 1e-12);
            assert!(e.flagged);
        }
    }

    #[test]
    fn tsv_has_header_and_rows() {
        let r = AddictionReport {
            kind: ReportKey::Topic,
            entries: vec![ReportEntry {
                key: "3".into(),
                taste_ratio: 0.25,
                addiction_ratio: 0.75,
                support: 4,
                flagged: true,
                artists: vec!["x".into(), "y".into()],
            }],
            omitted: vec![],
        };
        let mut buf = Vec::new();
        r.write_tsv(&mut buf, "{}").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .ends_with("topic\ttaste_ratio\taddiction_ratio\tsupport\tflagged\tartists\n3\t0.25\t0.75\t4\t1\tx,y\n"));
    }
}
