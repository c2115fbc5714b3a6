use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::PlayLog;
use crate::error::{Error, Result};

/// How the timestamp column is encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimestampFormat {
    /// RFC 3339 / ISO-8601 with offset, e.g. `2013-01-05T09:00:00Z`.
    Rfc3339,
    /// Integer seconds since the Unix epoch.
    UnixSeconds,
    /// A chrono format string, interpreted as UTC when it has no offset.
    Pattern(String),
}

impl TimestampFormat {
    pub fn parse(&self, raw: &str) -> Option<DateTime<Utc>> {
        match self {
            TimestampFormat::Rfc3339 => DateTime::parse_from_rfc3339(raw).ok().map(|t| t.with_timezone(&Utc)),
            TimestampFormat::UnixSeconds => raw.parse::<i64>().ok().and_then(|s| Utc.timestamp_opt(s, 0).single()),
            TimestampFormat::Pattern(p) => DateTime::parse_from_str(raw, p)
                .map(|t| t.with_timezone(&Utc))
                .ok()
                .or_else(|| NaiveDateTime::parse_from_str(raw, p).ok().map(|n| n.and_utc())),
        }
    }
}

/// Column indices (0-based) for the fields of a play log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub user: usize,
    pub timestamp: usize,
    pub artist: usize,
    /// Used as the artist identity when the primary artist column is empty.
    pub artist_fallback: Option<usize>,
}

impl FromStr for ColumnMap {
    type Err = Error;

    /// Parses `user=0,timestamp=1,artist=2[,artist_fallback=3]`.
    fn from_str(s: &str) -> Result<Self> {
        let mut user = None;
        let mut timestamp = None;
        let mut artist = None;
        let mut artist_fallback = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, idx) = part
                .split_once('=')
                .ok_or_else(|| Error::config("columns", format!("expected name=index, got `{part}`")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::config("columns", format!("bad column index in `{part}`")))?;
            match name.trim() {
                "user" => user = Some(idx),
                "timestamp" | "time" => timestamp = Some(idx),
                "artist" => artist = Some(idx),
                "artist_fallback" => artist_fallback = Some(idx),
                other => return Err(Error::config("columns", format!("unknown column name `{other}`"))),
            }
        }
        match (user, timestamp, artist) {
            (Some(user), Some(timestamp), Some(artist)) => Ok(ColumnMap {
                user,
                timestamp,
                artist,
                artist_fallback,
            }),
            _ => Err(Error::config(
                "columns",
                "user, timestamp and artist columns are all required",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatConfig {
    pub delimiter: char,
    pub columns: ColumnMap,
    pub timestamp: TimestampFormat,
}

impl FormatConfig {
    /// Last.fm 1K-users layout: user, ISO-8601 timestamp, artist MBID,
    /// artist name, track MBID, track name. The artist MBID identifies the
    /// artist; the name is used when the MBID is blank.
    pub fn lastfm_1k() -> Self {
        FormatConfig {
            delimiter: '\t',
            columns: ColumnMap {
                user: 0,
                timestamp: 1,
                artist: 2,
                artist_fallback: Some(3),
            },
            timestamp: TimestampFormat::Rfc3339,
        }
    }

    /// Three tab-separated columns: user, artist, timestamp.
    pub fn generic() -> Self {
        FormatConfig {
            delimiter: '\t',
            columns: ColumnMap {
                user: 0,
                timestamp: 2,
                artist: 1,
                artist_fallback: None,
            },
            timestamp: TimestampFormat::Rfc3339,
        }
    }

    fn parse_line(&self, line: &str) -> Option<PlayLog> {
        let fields: Vec<&str> = line.split(self.delimiter).collect();
        let get = |i: usize| fields.get(i).map(|f| f.trim()).filter(|f| !f.is_empty());
        let user = get(self.columns.user)?;
        let artist = get(self.columns.artist).or_else(|| self.columns.artist_fallback.and_then(get))?;
        let timestamp = self.timestamp.parse(get(self.columns.timestamp)?)?;
        Some(PlayLog::new(user, artist, timestamp))
    }
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig::lastfm_1k()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub logs: Vec<PlayLog>,
    pub malformed: usize,
    /// 1-based line number and content of the first malformed line.
    pub first_malformed: Option<(usize, String)>,
}

/// Parses one play log per well-formed line, in file order. Blank lines are
/// ignored. Malformed lines are skipped and counted; if more than half of the
/// non-blank lines are malformed the whole stream is rejected.
pub fn parse_play_logs<R: BufRead>(stream: R, format: &FormatConfig) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut total = 0usize;
    for (i, line) in stream.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        total += 1;
        match format.parse_line(trimmed) {
            Some(log) => out.logs.push(log),
            None => {
                out.malformed += 1;
                if out.first_malformed.is_none() {
                    out.first_malformed = Some((i + 1, trimmed.to_owned()));
                }
            }
        }
    }
    if out.malformed * 2 > total {
        let (line_no, line) = out.first_malformed.clone().unwrap_or_default();
        return Err(Error::FormatMismatch {
            malformed: out.malformed,
            total,
            line_no,
            line,
        });
    }
    if out.malformed > 0 {
        log::warn!("skipped {} malformed of {} lines", out.malformed, total);
    }
    Ok(out)
}
