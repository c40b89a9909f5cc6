// SPDX-License-Identifier: Apache-2.0
//! Fork-server-shaped run protocol. The simulator stays resident; each
//! request resets the design and runs one testcase.

use std::io::{Read, Write};
use std::path::PathBuf;

use thiserror::Error;

use crate::harness::{Harness, Outcome};
use crate::sim::SimError;

/// Handshake written by the server before the first request.
pub const HELLO: [u8; 4] = *b"VGF\x01";
pub const STATUS_CLEAN: u32 = 0;
pub const STATUS_FAULT: u32 = 0xF0;
pub const MAX_PAYLOAD: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("truncated frame: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("payload of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Status word for a verdict: 0 when clean, `0xF0 | slot` on a fault.
pub fn status(outcome: &Outcome) -> u32 {
    match outcome {
        Outcome::Clean => STATUS_CLEAN,
        Outcome::Fault { slot, .. } => STATUS_FAULT | (*slot as u32 & 0x0F),
    }
}

pub struct ForkServer {
    harness: Harness,
    requests: u64,
    crash_dir: Option<PathBuf>,
    crashes: u64,
}

impl ForkServer {
    pub fn new(harness: Harness) -> Self {
        ForkServer {
            harness,
            requests: 0,
            crash_dir: None,
            crashes: 0,
        }
    }

    /// Persists every faulting input as `<dir>/<n>.bin`.
    pub fn with_crash_dir(mut self, dir: PathBuf) -> Self {
        self.crash_dir = Some(dir);
        self
    }

    pub fn requests(&self) -> u64 {
        self.requests
    }

    pub fn harness(&self) -> &Harness {
        &self.harness
    }

    /// In-process request: reset, run, return the status word.
    pub fn handle(&mut self, input: &[u8]) -> Result<u32, ProtocolError> {
        self.requests += 1;
        let v = self.harness.run(input)?;
        if v.is_fault() {
            if let Some(dir) = &self.crash_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("{}.bin", self.crashes)), input)?;
            }
            self.crashes += 1;
        }
        Ok(status(&v.outcome))
    }

    /// Serves framed requests until end of input: each request is a
    /// little-endian `u32` length followed by the payload; each response
    /// is a little-endian `u32` status.
    pub fn serve(&mut self, mut rx: impl Read, mut tx: impl Write) -> Result<u64, ProtocolError> {
        tx.write_all(&HELLO)?;
        tx.flush()?;
        let mut served = 0;
        loop {
            let mut len = [0u8; 4];
            let got = read_full(&mut rx, &mut len)?;
            if got == 0 {
                return Ok(served);
            }
            if got < 4 {
                return Err(ProtocolError::Truncated { expected: 4, got });
            }
            let n = u32::from_le_bytes(len) as usize;
            if n > MAX_PAYLOAD {
                return Err(ProtocolError::TooLarge(n));
            }
            let mut payload = vec![0u8; n];
            let got = read_full(&mut rx, &mut payload)?;
            if got < n {
                return Err(ProtocolError::Truncated { expected: n, got });
            }
            let s = self.handle(&payload)?;
            tx.write_all(&s.to_le_bytes())?;
            tx.flush()?;
            served += 1;
        }
    }
}

fn read_full(rx: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match rx.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

/// Client side of [`ForkServer::serve`].
pub struct ForkClient<R: Read, W: Write> {
    rx: R,
    tx: W,
}

impl<R: Read, W: Write> ForkClient<R, W> {
    /// Reads and checks the handshake.
    pub fn connect(mut rx: R, tx: W) -> Result<Self, ProtocolError> {
        let mut hello = [0u8; 4];
        let got = read_full(&mut rx, &mut hello)?;
        if got < 4 || hello != HELLO {
            return Err(ProtocolError::Truncated { expected: 4, got });
        }
        Ok(ForkClient { rx, tx })
    }

    pub fn run(&mut self, input: &[u8]) -> Result<u32, ProtocolError> {
        self.tx.write_all(&(input.len() as u32).to_le_bytes())?;
        self.tx.write_all(input)?;
        self.tx.flush()?;
        let mut s = [0u8; 4];
        let got = read_full(&mut self.rx, &mut s)?;
        if got < 4 {
            return Err(ProtocolError::Truncated { expected: 4, got });
        }
        Ok(u32::from_le_bytes(s))
    }
}
