//! Newline-delimited, hash-chained write-ahead log.
//!
//! Each line is a JSON object `{record, event, prev, hash}` where `hash`
//! covers the exact serialization of the other three fields and `prev` is
//! the previous line's hash (zeros for the first).

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::kernel::{Event, TransitionRecord};

#[derive(Debug, thiserror::Error)]
pub enum CommitError {
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
    #[error("write-back verification failed at offset {0}")]
    Verify(u64),
    #[error("injected commit fault at record {0}")]
    Injected(u64),
}

/// Where committed transitions go. The runtime adopts a new state only
/// after `append` returns `Ok`.
pub trait Persist {
    fn append(&mut self, record: &TransitionRecord, event: &Event) -> Result<(), CommitError>;
}

#[derive(Serialize)]
struct Body<'a> {
    record: &'a TransitionRecord,
    event: &'a Event,
    prev: Digest,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    record: TransitionRecord,
    event: Event,
    prev: Digest,
    hash: Digest,
}

fn body_hash(body: &str) -> Digest {
    Digest::of_bytes(body.as_bytes())
}

fn encode(record: &TransitionRecord, event: &Event, prev: Digest) -> (String, Digest) {
    let body = serde_json::to_string(&Body { record, event, prev }).expect("records serialize");
    let hash = body_hash(&body);
    // Splice the hash in as the last field of the same object.
    let line = format!("{},\"hash\":\"{}\"}}\n", &body[..body.len() - 1], hash.to_hex());
    (line, hash)
}

#[derive(Debug)]
pub struct FileWal {
    path: PathBuf,
    file: File,
    last: Digest,
    appended: u64,
    /// 1-based record number at which the next write is torn and fails.
    fault_at: Option<u64>,
}

impl FileWal {
    /// Creates or truncates the log.
    pub fn create(path: impl AsRef<Path>) -> io::Result<FileWal> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().read(true).write(true).create(true).truncate(true).open(&path)?;
        Ok(FileWal { path, file, last: Digest::ZERO, appended: 0, fault_at: None })
    }

    pub fn with_fault_at(mut self, record: Option<u64>) -> Self {
        self.fault_at = record;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> u64 {
        self.appended
    }
}

impl Persist for FileWal {
    fn append(&mut self, record: &TransitionRecord, event: &Event) -> Result<(), CommitError> {
        let (line, hash) = encode(record, event, self.last);
        let offset = self.file.seek(SeekFrom::End(0))?;
        let n = self.appended + 1;
        if self.fault_at == Some(n) {
            self.file.write_all(&line.as_bytes()[..line.len() / 2])?;
            self.file.sync_data()?;
            return Err(CommitError::Injected(n));
        }
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()?;
        let mut back = vec![0; line.len()];
        self.file.seek(SeekFrom::Start(offset))?;
        self.file.read_exact(&mut back)?;
        if back != line.as_bytes() {
            return Err(CommitError::Verify(offset));
        }
        self.last = hash;
        self.appended = n;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stop {
    /// The last line has no terminating newline.
    TornTail,
    Malformed,
    HashMismatch,
    ChainBreak,
}

#[derive(Debug, Clone)]
pub struct Scan {
    pub entries: Vec<(TransitionRecord, Event)>,
    /// Why reading stopped early, with the 1-based line number.
    pub stopped: Option<(usize, Stop)>,
}

/// Reads the valid prefix of a log, stopping at the first bad line.
pub fn scan(bytes: &[u8]) -> Scan {
    let mut entries = Vec::new();
    let (mut prev, mut chain) = (Digest::ZERO, Digest::ZERO);
    let mut rest = bytes;
    let mut lineno = 0;
    while !rest.is_empty() {
        lineno += 1;
        let Some(end) = rest.iter().position(|&b| b == b'\n') else {
            return Scan { entries, stopped: Some((lineno, Stop::TornTail)) };
        };
        let raw = &rest[..end];
        rest = &rest[end + 1..];
        let Ok(line) = std::str::from_utf8(raw).map_err(|_| ()).and_then(|s| serde_json::from_str::<Line>(s).map_err(|_| ())) else {
            return Scan { entries, stopped: Some((lineno, Stop::Malformed)) };
        };
        let (expected, hash) = encode(&line.record, &line.event, line.prev);
        if hash != line.hash || expected.as_bytes()[..expected.len() - 1] != *raw {
            return Scan { entries, stopped: Some((lineno, Stop::HashMismatch)) };
        }
        let r = &line.record;
        if line.prev != prev || r.prev_chain != chain || r.chain != r.expected_chain() || r.seq != lineno as u64 {
            return Scan { entries, stopped: Some((lineno, Stop::ChainBreak)) };
        }
        prev = line.hash;
        chain = r.chain;
        entries.push((line.record, line.event));
    }
    Scan { entries, stopped: None }
}

pub fn scan_file(path: impl AsRef<Path>) -> io::Result<Scan> {
    Ok(scan(&std::fs::read(path)?))
}
