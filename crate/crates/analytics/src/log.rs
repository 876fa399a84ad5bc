//! The append-only event log.

use crate::event::AnalyticsEvent;
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io: {0}")]
    Io(#[from] io::Error),
    #[error("session `{session}`: timestamp {ts} is before {last}")]
    OutOfOrder { session: String, ts: u64, last: u64 },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

/// Appends events one JSON line at a time, flushing after each, and refuses
/// per-session timestamps that go backwards.
#[derive(Debug)]
pub struct EventLog<W: Write> {
    out: W,
    last_ts: HashMap<String, u64>,
    written: u64,
}

impl<W: Write> EventLog<W> {
    pub fn new(out: W) -> Self {
        Self { out, last_ts: HashMap::new(), written: 0 }
    }

    pub fn record(&mut self, event: &AnalyticsEvent) -> Result<(), LogError> {
        if let Some(&last) = self.last_ts.get(&event.session) {
            if event.ts < last {
                return Err(LogError::OutOfOrder { session: event.session.clone(), ts: event.ts, last });
            }
        }
        let mut line = event.to_line();
        line.push('\n');
        self.out.write_all(line.as_bytes())?;
        self.out.flush()?;
        self.last_ts.insert(event.session.clone(), event.ts);
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl EventLog<File> {
    /// Opens `path` for appending. Ordering is checked against the events
    /// already in the file.
    pub fn open(path: &Path) -> Result<Self, LogError> {
        let mut last_ts = HashMap::new();
        if path.exists() {
            for event in read_log(BufReader::new(File::open(path)?))? {
                last_ts.insert(event.session, event.ts);
            }
        }
        let out = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { out, last_ts, written: 0 })
    }
}

pub fn read_log(reader: impl BufRead) -> Result<Vec<AnalyticsEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?);
    }
    Ok(events)
}

pub fn parse_log(text: &str) -> Result<Vec<AnalyticsEvent>, LogError> {
    read_log(text.as_bytes())
}

pub fn serialize_log(events: &[AnalyticsEvent]) -> String {
    events.iter().map(|e| e.to_line() + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{AppEvent, EventKind};

    #[test]
    fn conversation_reads_back_verbatim() {
        let mut log = EventLog::new(Vec::new());
        let e = AnalyticsEvent::user(5, "s", "What is \"there\"?\n", Some("find_obstacle"));
        log.record(&e).unwrap();
        let text = String::from_utf8(log.into_inner()).unwrap();
        assert_eq!(parse_log(&text).unwrap(), vec![e]);
    }

    #[test]
    fn rejects_backwards_time_per_session() {
        let mut log = EventLog::new(Vec::new());
        log.record(&AnalyticsEvent::keep_alive(10, "a")).unwrap();
        log.record(&AnalyticsEvent::keep_alive(5, "b")).unwrap();
        log.record(&AnalyticsEvent::keep_alive(10, "a")).unwrap();
        assert!(matches!(log.record(&AnalyticsEvent::keep_alive(9, "a")), Err(LogError::OutOfOrder { .. })));
        assert_eq!(log.written(), 3);
    }

    #[test]
    fn ten_thousand_lines() {
        let mut log = EventLog::new(Vec::new());
        for i in 0..10_000u64 {
            log.record(&AnalyticsEvent::app(i, &format!("s{}", i % 7), AppEvent::Note)).unwrap();
        }
        let text = String::from_utf8(log.into_inner()).unwrap();
        assert_eq!(text.lines().count(), 10_000);
    }

    #[test]
    fn keep_alive_encoding() {
        let line = AnalyticsEvent::keep_alive(1, "s").to_line();
        assert_eq!(line, r#"{"ts":1,"session":"s","kind":"keep_alive","payload":{}}"#);
        assert!(matches!(parse_log(&line).unwrap()[0].kind, EventKind::KeepAlive {}));
    }

    #[test]
    fn reopened_file_keeps_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        EventLog::open(&path).unwrap().record(&AnalyticsEvent::keep_alive(100, "s")).unwrap();
        let mut log = EventLog::open(&path).unwrap();
        assert!(log.record(&AnalyticsEvent::keep_alive(50, "s")).is_err());
        log.record(&AnalyticsEvent::keep_alive(150, "s")).unwrap();
        assert_eq!(read_log(BufReader::new(File::open(&path).unwrap())).unwrap().len(), 2);
    }
}
