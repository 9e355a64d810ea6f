use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crate::client::{HttpRequest, Method};

use super::{ServerBehaviour, Testbed};

/// Serves a [`Testbed`] over real loopback HTTP, for use with
/// [`crate::client::UreqTransport`].
pub struct LoopbackServer {
    bed: Testbed,
    addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    worker: Option<JoinHandle<()>>,
}

impl LoopbackServer {
    pub fn start(behaviour: ServerBehaviour) -> io::Result<Self> {
        let server = tiny_http::Server::http("127.0.0.1:0").map_err(io::Error::other)?;
        let addr = server.server_addr().to_ip().ok_or_else(|| io::Error::other("not an IP listener"))?;
        let server = Arc::new(server);
        let bed = Testbed::with_base(behaviour, &format!("http://{addr}"));
        let (srv, routed) = (server.clone(), bed.clone());
        let worker = thread::spawn(move || {
            for mut incoming in srv.incoming_requests() {
                let method = match incoming.method() {
                    tiny_http::Method::Post => Method::Post,
                    _ => Method::Get,
                };
                let path = incoming.url().to_string();
                let mut body = Vec::new();
                if incoming.as_reader().read_to_end(&mut body).is_err() {
                    continue;
                }
                let request = HttpRequest {
                    method,
                    url: path.clone(),
                    headers: incoming
                        .headers()
                        .iter()
                        .map(|h| (h.field.as_str().to_string(), h.value.as_str().to_string()))
                        .collect(),
                    body,
                };
                let response = routed.route(&path, &request);
                let _ =
                    incoming.respond(tiny_http::Response::from_data(response.body).with_status_code(response.status));
            }
        });
        Ok(LoopbackServer { bed, addr, server, worker: Some(worker) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn testbed(&self) -> &Testbed {
        &self.bed
    }
}

impl Drop for LoopbackServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}
