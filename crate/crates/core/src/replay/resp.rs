//! Minimal RESP (Redis protocol) client: `SET key 1 NX PX ttl_ms` only.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Mutex;
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration, Utc};

use super::{Fingerprint, Freshness, ReplayStore, StoreError};

/// External dedup store reached over TCP. The store's own clock governs
/// expiry; the `now` argument is unused.
#[derive(Debug)]
pub struct RespStore {
    addr: SocketAddr,
    timeout: StdDuration,
    prefix: String,
    conn: Mutex<Option<BufReader<TcpStream>>>,
}

impl RespStore {
    pub fn new(addr: SocketAddr, timeout: StdDuration) -> Self {
        RespStore { addr, timeout, prefix: "x402:replay:".to_string(), conn: Mutex::new(None) }
    }

    pub fn with_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.prefix = prefix.into();
        self
    }

    fn connect(&self) -> Result<BufReader<TcpStream>, StoreError> {
        let stream = TcpStream::connect_timeout(&self.addr, self.timeout)?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        stream.set_nodelay(true)?;
        Ok(BufReader::new(stream))
    }

    fn round_trip(conn: &mut BufReader<TcpStream>, command: &[u8]) -> Result<Freshness, StoreError> {
        conn.get_mut().write_all(command)?;
        let mut line = String::new();
        if conn.read_line(&mut line)? == 0 {
            return Err(StoreError::Protocol("connection closed".into()));
        }
        match line.trim_end() {
            "+OK" => Ok(Freshness::Fresh),
            "$-1" | "_" => Ok(Freshness::Duplicate),
            other => Err(StoreError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }
}

pub(crate) fn encode_command(args: &[&[u8]]) -> Vec<u8> {
    let mut out = format!("*{}\r\n", args.len()).into_bytes();
    for arg in args {
        out.extend_from_slice(format!("${}\r\n", arg.len()).as_bytes());
        out.extend_from_slice(arg);
        out.extend_from_slice(b"\r\n");
    }
    out
}

impl ReplayStore for RespStore {
    fn check_and_record(&self, fp: &Fingerprint, _now: DateTime<Utc>, ttl: Duration) -> Result<Freshness, StoreError> {
        let key = format!("{}{}", self.prefix, fp.to_hex());
        let ttl_ms = ttl.num_milliseconds().max(1).to_string();
        let command = encode_command(&[b"SET", key.as_bytes(), b"1", b"NX", b"PX", ttl_ms.as_bytes()]);

        let mut slot = self.conn.lock().unwrap();
        if slot.is_none() {
            *slot = Some(self.connect()?);
        }
        let result = Self::round_trip(slot.as_mut().expect("just connected"), &command);
        if result.is_err() {
            // Drop the connection; a half-read reply would desynchronise it.
            *slot = None;
        }
        result
    }
}
