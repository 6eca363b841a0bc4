use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::protocol::*;
use crate::learners::Learner;
use crate::session::SessionReport;

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

fn proto(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

impl Client {
    /// Connect and complete the handshake; returns the welcome record.
    pub fn connect(addr: impl ToSocketAddrs, role: Role, mode: Mode) -> io::Result<(Client, ServerRecord)> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut c = Client { reader: BufReader::new(stream.try_clone()?), writer: stream };
        c.send(&ClientRecord::Hello { version: PROTOCOL_VERSION, role, mode })?;
        match c.recv()? {
            Some(w @ ServerRecord::Welcome { .. }) => Ok((c, w)),
            Some(ServerRecord::Error { message }) => Err(proto(message)),
            other => Err(proto(format!("expected welcome, got {other:?}"))),
        }
    }

    pub fn send(&mut self, rec: &ClientRecord) -> io::Result<()> {
        self.send_raw(&encode(rec))
    }

    pub fn send_raw(&mut self, line: &str) -> io::Result<()> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }

    /// Next record, or `None` once the server has closed the stream.
    pub fn recv(&mut self) -> io::Result<Option<ServerRecord>> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !line.trim().is_empty() {
                return serde_json::from_str(line.trim_end()).map(Some).map_err(|e| proto(e.to_string()));
            }
        }
    }

    pub fn close(mut self) -> io::Result<()> {
        self.send(&ClientRecord::Bye)
    }
}

/// Drive `learner` as the lockstep learner until the session ends.
pub fn run_learner(addr: impl ToSocketAddrs, learner: &mut dyn Learner) -> io::Result<SessionReport> {
    let (mut c, _) = Client::connect(addr, Role::Learner, Mode::Lockstep)?;
    learner.session_start();
    loop {
        match c.recv()? {
            Some(ServerRecord::Prompt { tick, input, reward }) => {
                let input = parse_sym(&input).map_err(proto)?;
                let out = learner.next(input, reward).map_err(|e| proto(e.to_string()))?;
                c.send(&ClientRecord::LearnerOutput { tick, symbol: sym(out) })?;
            }
            Some(ServerRecord::Event { event: WireEvent::SessionEnd { report }, .. }) => {
                learner.session_end();
                return Ok(*report);
            }
            Some(ServerRecord::Error { message }) => return Err(proto(message)),
            Some(_) => {}
            None => return Err(proto("server closed before session end")),
        }
    }
}

/// Everything an observer receives after its welcome, through session end.
pub fn observe(addr: impl ToSocketAddrs) -> io::Result<Vec<ServerRecord>> {
    let (mut c, _) = Client::connect(addr, Role::Observer, Mode::Lockstep)?;
    let mut out = Vec::new();
    while let Some(r) = c.recv()? {
        let end = matches!(r, ServerRecord::Event { event: WireEvent::SessionEnd { .. }, .. });
        out.push(r);
        if end {
            break;
        }
    }
    Ok(out)
}
