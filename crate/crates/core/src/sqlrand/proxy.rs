//! The de-randomizing proxy between clients and the database.

use std::io::{self, BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, RwLock};
use std::thread;

use super::keys::{key_update_apply, suffix_from_key};
use super::protocol::{Request, Response};
use super::{derandomize, KeywordSet, RandomizationKey};
use crate::provider::AlgorithmProvider;

/// Executes standard SQL on behalf of the proxy.
pub trait Upstream: Send + Sync {
    fn execute(&self, sql: &str) -> Result<Vec<u8>, String>;
}

/// Returns the query text it was given.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoUpstream;

impl Upstream for EchoUpstream {
    fn execute(&self, sql: &str) -> Result<Vec<u8>, String> {
        Ok(sql.as_bytes().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyMode {
    /// Fixed suffix; key changes are refused.
    Static,
    /// Accepts key-change messages and rotates the suffix each epoch.
    Dynamic,
}

#[derive(Debug, Clone)]
struct KeyState {
    /// Current localized key; key changes are applied against it.
    secret: Vec<u8>,
    key: RandomizationKey,
}

pub struct Proxy {
    provider: &'static dyn AlgorithmProvider,
    mode: ProxyMode,
    keywords: KeywordSet,
    state: RwLock<KeyState>,
    upstream: Arc<dyn Upstream>,
}

impl Proxy {
    /// `secret` is the localized key the suffix was derived from.
    pub fn new(
        provider: &'static dyn AlgorithmProvider,
        mode: ProxyMode,
        secret: Vec<u8>,
        upstream: Arc<dyn Upstream>,
    ) -> Self {
        let key = RandomizationKey {
            suffix: suffix_from_key(&secret),
            epoch: 0,
        };
        Self {
            provider,
            mode,
            keywords: KeywordSet::standard(),
            state: RwLock::new(KeyState { secret, key }),
            upstream,
        }
    }

    pub fn current_key(&self) -> RandomizationKey {
        self.state.read().expect("key state lock").key
    }

    pub fn handle(&self, req: &Request) -> Response {
        match req {
            Request::Query(sql) => {
                let key = self.current_key();
                match derandomize(sql, &key, &self.keywords) {
                    Err(reason) => {
                        log::info!("query rejected: {reason}");
                        Response::Reject(reason)
                    }
                    Ok(standard) => match self.upstream.execute(&standard) {
                        Ok(rows) => Response::Ok(rows),
                        Err(e) => {
                            log::warn!("upstream failure: {e}");
                            Response::Err
                        }
                    },
                }
            }
            Request::KeyChange(msg) => {
                if self.mode == ProxyMode::Static {
                    return Response::Err;
                }
                let mut st = self.state.write().expect("key state lock");
                match key_update_apply(self.provider, &st.secret, msg) {
                    Ok(new) => {
                        st.key = RandomizationKey {
                            suffix: suffix_from_key(&new),
                            epoch: st.key.epoch + 1,
                        };
                        st.secret = new;
                        log::info!("key rotated to epoch {}", st.key.epoch);
                        Response::Ack(st.key.epoch)
                    }
                    Err(_) => Response::Err,
                }
            }
        }
    }

    /// Serves one client until it disconnects or breaks framing.
    pub fn serve_connection(&self, stream: TcpStream) -> io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        while let Some(req) = Request::read_from(&mut reader)? {
            self.handle(&req).write_to(&mut writer)?;
        }
        Ok(())
    }

    /// Accepts connections forever, one thread each.
    pub fn serve(self: Arc<Self>, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let me = Arc::clone(&self);
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                if let Err(e) = me.serve_connection(stream) {
                    log::debug!("connection {peer:?} closed: {e}");
                }
            });
        }
        Ok(())
    }
}

pub fn run_proxy(addr: impl ToSocketAddrs, proxy: Arc<Proxy>) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    log::info!("proxy listening on {}", listener.local_addr()?);
    proxy.serve(listener)
}

/// Binds, then serves on a background thread. Returns the bound address.
pub fn spawn_proxy(addr: impl ToSocketAddrs, proxy: Arc<Proxy>) -> io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || proxy.serve(listener));
    Ok(local)
}

/// Blocking client for the proxy protocol.
pub struct ProxyClient {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl ProxyClient {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let s = TcpStream::connect(addr)?;
        Ok(Self {
            reader: BufReader::new(s.try_clone()?),
            writer: BufWriter::new(s),
        })
    }

    pub fn send(&mut self, req: &Request) -> io::Result<Response> {
        req.write_to(&mut self.writer)?;
        Response::read_from(&mut self.reader)
    }
}
