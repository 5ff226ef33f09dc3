//! Wire framing between clients and the de-randomizing proxy.
//!
//! ```text
//! length u32 big-endian, counts the body only
//! type   u8
//! body   length bytes
//! ```
//!
//! Requests: QUERY = 1 (UTF-8 SQL), KEYCHANGE = 2 (key-change message).
//! Responses: OK = 1 (upstream result), REJECT = 2 (one reason byte),
//! ACK = 3 (new epoch, u64 big-endian), ERR = 4 (empty).

use std::io::{self, Read, Write};

use super::RejectReason;

pub const MAX_BODY: u32 = 16 << 20;

pub const REQ_QUERY: u8 = 1;
pub const REQ_KEYCHANGE: u8 = 2;

pub const RESP_OK: u8 = 1;
pub const RESP_REJECT: u8 = 2;
pub const RESP_ACK: u8 = 3;
pub const RESP_ERR: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Query(String),
    KeyChange(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Ok(Vec<u8>),
    Reject(RejectReason),
    Ack(u64),
    Err,
}

fn invalid(msg: &'static str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn write_frame(w: &mut impl Write, kind: u8, body: &[u8]) -> io::Result<()> {
    let len = u32::try_from(body.len())
        .ok()
        .filter(|&l| l <= MAX_BODY)
        .ok_or_else(|| invalid("frame body too large"))?;
    let mut buf = Vec::with_capacity(5 + body.len());
    buf.extend_from_slice(&len.to_be_bytes());
    buf.push(kind);
    buf.extend_from_slice(body);
    w.write_all(&buf)?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream before any byte.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<(u8, Vec<u8>)>> {
    let mut head = [0u8; 5];
    let mut got = 0;
    while got < head.len() {
        match r.read(&mut head[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => got += n,
        }
    }
    let len = u32::from_be_bytes([head[0], head[1], head[2], head[3]]);
    if len > MAX_BODY {
        return Err(invalid("frame body too large"));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    Ok(Some((head[4], body)))
}

impl Request {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        match self {
            Request::Query(sql) => write_frame(w, REQ_QUERY, sql.as_bytes()),
            Request::KeyChange(msg) => write_frame(w, REQ_KEYCHANGE, msg),
        }
    }

    pub fn read_from(r: &mut impl Read) -> io::Result<Option<Self>> {
        let Some((kind, body)) = read_frame(r)? else {
            return Ok(None);
        };
        Ok(Some(match kind {
            REQ_QUERY => Request::Query(String::from_utf8(body).map_err(|_| invalid("query is not UTF-8"))?),
            REQ_KEYCHANGE => Request::KeyChange(body),
            _ => return Err(invalid("unknown request type")),
        }))
    }
}

impl Response {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        match self {
            Response::Ok(body) => write_frame(w, RESP_OK, body),
            Response::Reject(reason) => write_frame(w, RESP_REJECT, &[reason.code()]),
            Response::Ack(epoch) => write_frame(w, RESP_ACK, &epoch.to_be_bytes()),
            Response::Err => write_frame(w, RESP_ERR, &[]),
        }
    }

    pub fn read_from(r: &mut impl Read) -> io::Result<Self> {
        let (kind, body) = read_frame(r)?.ok_or_else(|| io::Error::from(io::ErrorKind::UnexpectedEof))?;
        Ok(match kind {
            RESP_OK => Response::Ok(body),
            RESP_REJECT => {
                let code = *body.first().ok_or_else(|| invalid("empty reject"))?;
                Response::Reject(RejectReason::from_code(code).ok_or_else(|| invalid("unknown reject code"))?)
            }
            RESP_ACK => {
                let b: [u8; 8] = body.as_slice().try_into().map_err(|_| invalid("bad ack"))?;
                Response::Ack(u64::from_be_bytes(b))
            }
            RESP_ERR => Response::Err,
            _ => return Err(invalid("unknown response type")),
        })
    }
}
