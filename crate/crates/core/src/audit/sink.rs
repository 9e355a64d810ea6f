use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::ChainHead;

/// Destination for serialised audit lines.
pub trait AuditSink: Send {
    /// Persist `line` (no trailing newline) and the head after it.
    fn write_event(&mut self, line: &str, head: &ChainHead) -> io::Result<()>;
}

/// Append-only JSON-L file plus a `<path>.head` sidecar.
#[derive(Debug)]
pub struct FileSink {
    file: File,
    head_path: PathBuf,
}

impl FileSink {
    pub fn create(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(FileSink { file, head_path: Self::head_path(path) })
    }

    pub fn head_path(log: &Path) -> PathBuf {
        let mut name = log.as_os_str().to_owned();
        name.push(".head");
        PathBuf::from(name)
    }
}

impl AuditSink for FileSink {
    fn write_event(&mut self, line: &str, head: &ChainHead) -> io::Result<()> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        self.file.write_all(&buf)?;
        self.file.flush()?;
        let tmp = self.head_path.with_extension("head.tmp");
        std::fs::write(&tmp, serde_json::to_vec(head)?)?;
        std::fs::rename(&tmp, &self.head_path)
    }
}

/// In-memory sink for tests and demos; clones share the buffer.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    inner: Arc<Mutex<(Vec<u8>, Option<ChainHead>)>>,
    fail: Arc<Mutex<bool>>,
}

impl MemorySink {
    pub fn contents(&self) -> Vec<u8> {
        self.inner.lock().unwrap().0.clone()
    }

    pub fn lines(&self) -> Vec<String> {
        String::from_utf8(self.contents()).expect("sink holds utf-8").lines().map(str::to_string).collect()
    }

    pub fn head(&self) -> Option<ChainHead> {
        self.inner.lock().unwrap().1.clone()
    }

    /// Make subsequent writes fail with an I/O error.
    pub fn set_failing(&self, failing: bool) {
        *self.fail.lock().unwrap() = failing;
    }
}

impl AuditSink for MemorySink {
    fn write_event(&mut self, line: &str, head: &ChainHead) -> io::Result<()> {
        if *self.fail.lock().unwrap() {
            return Err(io::Error::other("audit sink unavailable"));
        }
        let mut inner = self.inner.lock().unwrap();
        inner.0.extend_from_slice(line.as_bytes());
        inner.0.push(b'\n');
        inner.1 = Some(head.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{verify_chain, AuditLog, EventFields, Outcome, VerifyResult};

    #[test]
    fn file_sink_writes_log_and_head() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/audit.jsonl");
        let log = AuditLog::new(b"k".to_vec(), Box::new(FileSink::create(&path).unwrap())).unwrap();
        for i in 0..3 {
            log.append(EventFields {
                ts: chrono::Utc::now(),
                agent_id: "a".into(),
                resource_url: format!("https://x.io/{i}"),
                outcome: Outcome::Allowed,
                detail: String::new(),
            })
            .unwrap();
        }
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.ends_with(b"\n") && !bytes.contains(&b'\r'));
        let head: ChainHead = serde_json::from_slice(&std::fs::read(FileSink::head_path(&path)).unwrap()).unwrap();
        assert_eq!(verify_chain(&bytes, b"k", Some(&head)), VerifyResult::Ok { events: 3 });
    }

    #[test]
    fn failed_write_does_not_advance_chain() {
        let sink = MemorySink::default();
        let log = AuditLog::new(b"k".to_vec(), Box::new(sink.clone())).unwrap();
        let f = || EventFields {
            ts: chrono::Utc::now(),
            agent_id: "a".into(),
            resource_url: "u".into(),
            outcome: Outcome::Error,
            detail: String::new(),
        };
        sink.set_failing(true);
        assert!(log.append(f()).is_err());
        assert_eq!(log.state().next_seq, 0);
        sink.set_failing(false);
        assert_eq!(log.append(f()).unwrap().seq, 0);
    }
}
