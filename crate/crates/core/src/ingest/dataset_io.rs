//! Line-oriented sessionized dataset files: one log per line carrying user
//! id, session ordinal, position in session, artist id and timestamp.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{PlayLog, Session, SessionizedDataset, UserSessions};
use crate::error::{Error, Result};
use crate::provenance;

pub const DATASET_HEADER: &str = "user\tsession\tposition\tartist\ttimestamp";

pub fn write_dataset<W: Write>(mut w: W, dataset: &SessionizedDataset, provenance: Option<&str>) -> Result<()> {
    if let Some(p) = provenance {
        provenance::write_header(&mut w, p)?;
    }
    writeln!(w, "{DATASET_HEADER}")?;
    for (user, r, j, log) in dataset.rows() {
        writeln!(
            w,
            "{user}\t{r}\t{j}\t{}\t{}",
            log.artist_id,
            log.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, dataset: &SessionizedDataset, provenance: Option<&str>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(BufWriter::new(file), dataset, provenance).map_err(|e| match e {
        Error::Stream(io) => Error::io(path, io),
        other => other,
    })
}

pub fn read_dataset_file(path: &Path) -> Result<SessionizedDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file))
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<SessionizedDataset> {
    let mut users: Vec<UserSessions> = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim_end() != DATASET_HEADER {
                return Err(Error::Malformed {
                    line_no,
                    reason: format!("expected header `{DATASET_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let bad = |reason: &str| Error::Malformed {
            line_no,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 tab-separated fields"));
        }
        let r: usize = fields[1].parse().map_err(|_| bad("bad session ordinal"))?;
        let j: usize = fields[2].parse().map_err(|_| bad("bad position"))?;
        let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(fields[4])
            .map_err(|_| bad("bad timestamp"))?
            .with_timezone(&Utc);
        let (user, artist) = (fields[0], fields[3]);
        if user.is_empty() || artist.is_empty() {
            return Err(bad("empty user or artist id"));
        }

        if users.last().map(|u| u.user_id.as_str()) != Some(user) {
            if users.iter().any(|u| u.user_id == user) {
                return Err(bad("user rows are not contiguous"));
            }
            users.push(UserSessions {
                user_id: user.to_owned(),
                sessions: Vec::new(),
            });
        }
        let current = users.last_mut().expect("pushed above");
        if r == current.sessions.len() {
            if j != 0 {
                return Err(bad("session must start at position 0"));
            }
            current.sessions.push(Session {
                user_id: user.to_owned(),
                logs: Vec::new(),
            });
        } else if r + 1 != current.sessions.len() {
            return Err(bad("session ordinals must be consecutive"));
        }
        let session = current.sessions.last_mut().expect("non-empty");
        if j != session.logs.len() {
            return Err(bad("positions must be consecutive"));
        }
        session.logs.push(PlayLog::new(user, artist, timestamp));
    }
    Ok(SessionizedDataset::from_users(users))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{segment_sessions, SessionGap};
    use chrono::TimeZone;

    #[test]
    fn round_trip() {
        let t = |m: i64| Utc.timestamp_opt(1_357_000_000 + m * 60, 0).unwrap();
        let logs = vec![
            PlayLog::new("u2", "b", t(0)),
            PlayLog::new("u1", "a", t(0)),
            PlayLog::new("u1", "b", t(10)),
            PlayLog::new("u1", "a", t(100)),
        ];
        let ds = segment_sessions(&logs, SessionGap::default());
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds, Some("{\"x\":1}")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("u1\t1\t0\ta\t2013-01-01T02:06:40Z"), "{text}");
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.fingerprint(), ds.fingerprint());
    }

    #[test]
    fn rejects_gapped_positions() {
        let text = format!("{DATASET_HEADER}\nu\t0\t1\ta\t2013-01-01T00:00:00Z\n");
        assert!(matches!(
            read_dataset(text.as_bytes()),
            Err(Error::Malformed { line_no: 2, .. })
        ));
    }
}
