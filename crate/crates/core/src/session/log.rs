use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{Event, Session};
use crate::catalog::Catalog;
use crate::diagnostics::{Code, Finding};

pub const LOG_EXTENSION: &str = "psml-log";

pub fn log_file_name(session_id: &str) -> String {
    format!("{session_id}.{LOG_EXTENSION}")
}

/// Append-only NDJSON event log.
#[derive(Debug)]
pub struct LogWriter {
    file: File,
    path: PathBuf,
}

impl LogWriter {
    /// Creates a new log; fails if `path` exists.
    pub fn create(path: impl AsRef<Path>) -> io::Result<LogWriter> {
        let path = path.as_ref().to_owned();
        let file = OpenOptions::new().append(true).create_new(true).open(&path)?;
        Ok(LogWriter { file, path })
    }

    pub fn open(path: impl AsRef<Path>) -> io::Result<LogWriter> {
        let path = path.as_ref().to_owned();
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(LogWriter { file, path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one event and flushes it to disk before returning.
    pub fn append(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_string(event).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()
    }

    pub fn append_all<'e>(&mut self, events: impl IntoIterator<Item = &'e Event>) -> io::Result<()> {
        let mut buf = String::new();
        for event in events {
            buf.push_str(&serde_json::to_string(event).map_err(io::Error::other)?);
            buf.push('\n');
        }
        self.file.write_all(buf.as_bytes())?;
        self.file.sync_data()
    }
}

fn log_error(path: &Path, message: impl std::fmt::Display) -> Finding {
    Finding::new(Code::SesLog, format!("{}: {message}", path.display()))
}

/// Reads every event in a log file. A final line without a newline that
/// does not parse is a torn write and is ignored.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<Event>, Finding> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| log_error(path, e))?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(line) {
            Ok(ev) => events.push(ev),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => {
                return Err(log_error(path, format_args!("line {}: {e}", i + 1)).at(i as u32 + 1, 1))
            }
        }
    }
    Ok(events)
}

/// Rebuilds a session from its events.
pub fn replay(c: &Catalog, events: &[Event]) -> Result<Session, Finding> {
    let (first, rest) = events
        .split_first()
        .ok_or_else(|| Finding::new(Code::SesLog, "log is empty"))?;
    if first.seq != 1 {
        return Err(Finding::new(Code::SesLog, "log does not start at event 1"));
    }
    let mut s = Session::from_started(c, first.clone())?;
    for ev in rest {
        s.apply(ev.clone()).map_err(|f| {
            Finding::new(
                Code::SesLog,
                format!("event {} cannot be replayed: {}", ev.seq, f.message),
            )
        })?;
    }
    Ok(s)
}

impl Session {
    pub fn load(c: &Catalog, path: impl AsRef<Path>) -> Result<Session, Finding> {
        replay(c, &read_log(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::Decision;
    use crate::specformat::Relevance;

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let c = Catalog::builtin();
        let mut s = Session::start(c, "p", None).unwrap();
        let path = dir.path().join(log_file_name(s.id()));
        let mut w = LogWriter::create(&path).unwrap();
        w.append_all(s.log()).unwrap();
        let ev = s
            .submit("O1".parse().unwrap(), Decision::applicable(Relevance::Essential, "x"))
            .unwrap()
            .clone();
        w.append(&ev).unwrap();
        assert!(LogWriter::create(&path).is_err());

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["kind"], "session_started");
        assert_eq!(first["seq"], 1);
        assert!(chrono::DateTime::parse_from_rfc3339(first["at"].as_str().unwrap()).is_ok());

        let loaded = Session::load(c, &path).unwrap();
        assert_eq!(loaded, s);
    }

    #[test]
    fn torn_tail_is_ignored_but_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let c = Catalog::builtin();
        let s = Session::start(c, "p", None).unwrap();
        let path = dir.path().join("s.psml-log");
        let mut text = serde_json::to_string(&s.log()[0]).unwrap();
        text.push_str("\n{\"seq\":2,\"at");
        std::fs::write(&path, &text).unwrap();
        assert_eq!(Session::load(c, &path).unwrap(), s);

        std::fs::write(&path, "garbage\n").unwrap();
        assert_eq!(Session::load(c, &path).unwrap_err().code, Code::SesLog);
        std::fs::write(&path, "").unwrap();
        assert_eq!(Session::load(c, &path).unwrap_err().code, Code::SesLog);
    }
}
