use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Default)]
struct KvState {
    entries: Mutex<HashMap<Vec<u8>, Instant>>,
    failing: AtomicBool,
    stopped: AtomicBool,
}

/// Tiny RESP server understanding `SET key value NX PX ms`. It can be told to
/// start failing, which makes it drop every connection without replying.
#[derive(Debug)]
pub struct MockKvServer {
    addr: SocketAddr,
    state: Arc<KvState>,
}

impl MockKvServer {
    pub fn start() -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(KvState::default());
        let shared = state.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                if shared.stopped.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let state = shared.clone();
                thread::spawn(move || {
                    let _ = serve(stream, &state);
                });
            }
        });
        Ok(MockKvServer { addr, state })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn set_failing(&self, failing: bool) {
        self.state.failing.store(failing, Ordering::SeqCst);
    }

    pub fn len(&self) -> usize {
        self.state.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Drop for MockKvServer {
    fn drop(&mut self) {
        self.state.stopped.store(true, Ordering::SeqCst);
        // Wake the accept loop so it notices.
        let _ = TcpStream::connect(self.addr);
    }
}

fn serve(stream: TcpStream, state: &KvState) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    loop {
        let Some(args) = read_command(&mut reader)? else { return Ok(()) };
        if state.failing.load(Ordering::SeqCst) {
            return Ok(());
        }
        let reply = execute(&args, state);
        writer.write_all(reply.as_bytes())?;
    }
}

fn read_line(reader: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim_end_matches(['\r', '\n']).to_string()))
}

fn read_command(reader: &mut impl BufRead) -> io::Result<Option<Vec<Vec<u8>>>> {
    let Some(header) = read_line(reader)? else { return Ok(None) };
    let bad = || io::Error::new(io::ErrorKind::InvalidData, "bad RESP");
    let count: usize = header.strip_prefix('*').and_then(|n| n.parse().ok()).ok_or_else(bad)?;
    let mut args = Vec::with_capacity(count);
    for _ in 0..count {
        let len_line = read_line(reader)?.ok_or_else(bad)?;
        let len: usize = len_line.strip_prefix('$').and_then(|n| n.parse().ok()).ok_or_else(bad)?;
        let mut buf = vec![0; len + 2];
        reader.read_exact(&mut buf)?;
        buf.truncate(len);
        args.push(buf);
    }
    Ok(Some(args))
}

fn execute(args: &[Vec<u8>], state: &KvState) -> String {
    let upper: Vec<String> = args.iter().map(|a| String::from_utf8_lossy(a).to_ascii_uppercase()).collect();
    let is_set_nx_px = args.len() == 6 && upper[0] == "SET" && upper[3] == "NX" && upper[4] == "PX";
    if !is_set_nx_px {
        return "-ERR unsupported command\r\n".to_string();
    }
    let Ok(ms) = upper[5].parse::<u64>() else { return "-ERR bad expiry\r\n".to_string() };
    let now = Instant::now();
    let mut entries = state.entries.lock().unwrap();
    match entries.get(&args[1]) {
        Some(expiry) if *expiry > now => "$-1\r\n".to_string(),
        _ => {
            entries.insert(args[1].clone(), now + Duration::from_millis(ms));
            "+OK\r\n".to_string()
        }
    }
}
