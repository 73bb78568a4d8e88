//! Append-only NDJSON event log.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::codec::{decode_event, encode_event, EncodingError};
use crate::domain::{ActionOrigin, ActionPhase, EventKind, EventPayload, EventRecord};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// Decoded log plus the bookkeeping needed to resume appending.
#[derive(Debug, Clone, Default)]
pub struct LogContents {
    pub records: Vec<EventRecord>,
    /// Raw lines, without terminators, parallel to `records`.
    pub lines: Vec<String>,
    /// Byte offset just past each line's terminator, parallel to `records`.
    pub ends: Vec<u64>,
    /// Whether an unterminated final line was dropped.
    pub torn_line: bool,
}

impl LogContents {
    /// Records of completed ticks: everything up to the last `policy_tick`,
    /// plus operator submissions queued right after it. Returns the count.
    pub fn completed_len(&self) -> usize {
        let Some(last_tick) = self
            .records
            .iter()
            .rposition(|r| r.kind() == EventKind::PolicyTick)
        else {
            return self.records.iter().take_while(|r| is_queued_at(r, 0)).count();
        };
        let t = self.records[last_tick].t;
        last_tick
            + 1
            + self.records[last_tick + 1..]
                .iter()
                .take_while(|r| is_queued_at(r, t))
                .count()
    }

    /// Byte length of the first `n` records.
    pub fn byte_len(&self, n: usize) -> u64 {
        if n == 0 {
            0
        } else {
            self.ends[n - 1]
        }
    }
}

fn is_queued_at(r: &EventRecord, t: u64) -> bool {
    r.t == t
        && matches!(&r.payload, EventPayload::Action(a)
            if a.phase == ActionPhase::Queued && a.origin == ActionOrigin::Operator)
}

/// Decodes a whole log. Sequence numbers must run 1, 2, 3, ... without gaps.
/// A line counts as written once its newline is, so an unterminated final
/// line is treated as a torn write and dropped even if it decodes. Any other
/// malformed line makes the log corrupt.
pub fn parse_log(text: &str) -> Result<LogContents, LogError> {
    let mut out = LogContents::default();
    let mut offset = 0u64;
    let mut rest = text;
    let mut lineno = 0;
    while !rest.is_empty() {
        lineno += 1;
        let (line, terminated, consumed) = match rest.find('\n') {
            Some(i) => (&rest[..i], true, i + 1),
            None => (rest, false, rest.len()),
        };
        rest = &rest[consumed..];
        offset += consumed as u64;
        if !terminated {
            out.torn_line = true;
            break;
        }
        let line = line.strip_suffix('\r').unwrap_or(line);
        let record = match decode_event(line) {
            Ok(r) => r,
            Err(e) => {
                return Err(LogError::Corrupt {
                    line: lineno,
                    reason: e.to_string(),
                })
            }
        };
        let want = out.records.len() as u64 + 1;
        if record.seq != want {
            return Err(LogError::Corrupt {
                line: lineno,
                reason: format!("expected seq {want}, found {}", record.seq),
            });
        }
        if let Some(prev) = out.records.last() {
            if record.t < prev.t {
                return Err(LogError::Corrupt {
                    line: lineno,
                    reason: format!("time went backwards from {} to {}", prev.t, record.t),
                });
            }
        }
        out.records.push(record);
        out.lines.push(line.to_string());
        out.ends.push(offset);
    }
    Ok(out)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<LogContents, LogError> {
    let path = path.as_ref();
    match std::fs::read(path) {
        Ok(bytes) => {
            let text = String::from_utf8(bytes).map_err(|e| LogError::Corrupt {
                line: 0,
                reason: format!("not UTF-8: {e}"),
            })?;
            parse_log(&text)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(LogContents::default()),
        Err(source) => Err(LogError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}

/// Appends encoded events, enforcing contiguous sequence numbers.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    next_seq: u64,
}

impl LogWriter {
    /// Creates (or truncates) a log.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|source| LogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
            next_seq: 1,
        })
    }

    /// Opens an existing log for appending after cutting it to `keep_bytes`.
    pub fn resume(path: impl AsRef<Path>, keep_bytes: u64, next_seq: u64) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| LogError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io)?;
        file.set_len(keep_bytes).map_err(io)?;
        let mut file = file;
        use std::io::Seek;
        file.seek(std::io::SeekFrom::End(0)).map_err(io)?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
            next_seq,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes one event and returns its encoded line.
    pub fn append(&mut self, event: &EventRecord) -> Result<String, LogError> {
        if event.seq != self.next_seq {
            return Err(LogError::Corrupt {
                line: self.next_seq as usize,
                reason: format!("append of seq {} where {} was expected", event.seq, self.next_seq),
            });
        }
        let line = encode_event(event)?;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|source| LogError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        self.next_seq += 1;
        Ok(line)
    }

    pub fn append_all<'a>(
        &mut self,
        events: impl IntoIterator<Item = &'a EventRecord>,
    ) -> Result<Vec<String>, LogError> {
        events.into_iter().map(|e| self.append(e)).collect()
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        self.out.flush().map_err(|source| LogError::Io {
            path: self.path.display().to_string(),
            source,
        })
    }
}
