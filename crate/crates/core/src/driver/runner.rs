//! Client side of the runner protocol.
//!
//! The runner is a long-lived process. For each execution the driver writes
//! the input to a file and sends one JSON line `{"input_path": "..."}` on the
//! runner's stdin; the runner answers with one line
//! `{"status": "ok"|"crash"|"timeout", "coverage": [["file.c", 12], ...]}`.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;

use crate::corpus::{Coverage, Line};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Crash,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub status: RunStatus,
    pub coverage: Coverage,
    pub wall: Duration,
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("cannot start runner: {0}")]
    Spawn(String),
    #[error("runner exited")]
    Exited,
    #[error("malformed runner response: {0}")]
    Protocol(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Request<'a> {
    input_path: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    status: RunStatus,
    #[serde(default)]
    coverage: Vec<Line>,
}

struct Live {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// A runner process plus the scratch file inputs are passed through.
pub struct Runner {
    command: Vec<String>,
    timeout: Duration,
    scratch: TempDir,
    live: Option<Live>,
}

impl Runner {
    pub fn new(command: Vec<String>, timeout: Duration) -> Result<Self, RunnerError> {
        if command.is_empty() {
            return Err(RunnerError::Spawn("empty runner command".into()));
        }
        Ok(Self {
            command,
            timeout,
            scratch: tempfile::tempdir()?,
            live: None,
        })
    }

    fn input_path(&self) -> PathBuf {
        self.scratch.path().join("input")
    }

    fn spawn(&mut self) -> Result<&mut Live, RunnerError> {
        if self.live.is_none() {
            let mut child = Command::new(&self.command[0])
                .args(&self.command[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|e| RunnerError::Spawn(format!("{}: {e}", self.command[0])))?;
            let stdin = child.stdin.take().expect("stdin is piped");
            let stdout = child.stdout.take().expect("stdout is piped");
            let (tx, rx) = mpsc::channel();
            thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
            self.live = Some(Live {
                child,
                stdin,
                lines: rx,
            });
        }
        Ok(self.live.as_mut().unwrap())
    }

    /// Kills the runner; the next execution starts a fresh one.
    pub fn kill(&mut self) {
        if let Some(mut live) = self.live.take() {
            let _ = live.child.kill();
            let _ = live.child.wait();
        }
    }

    /// Runs one input. A runner that does not answer in time is killed and
    /// the result is a timeout.
    pub fn run(&mut self, input: &[u8]) -> Result<RunResult, RunnerError> {
        let path = self.input_path();
        std::fs::write(&path, input)?;
        let request = serde_json::to_string(&Request {
            input_path: path.to_str().expect("temp paths are UTF-8"),
        })
        .expect("request serializes");
        let timeout = self.timeout;
        let start = Instant::now();
        let live = self.spawn()?;
        if writeln!(live.stdin, "{request}").and_then(|_| live.stdin.flush()).is_err() {
            self.kill();
            return Err(RunnerError::Exited);
        }
        let line = match live.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                self.kill();
                return Err(RunnerError::Io(e));
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                return Ok(RunResult {
                    status: RunStatus::Timeout,
                    coverage: Coverage::new(),
                    wall: start.elapsed(),
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.kill();
                return Err(RunnerError::Exited);
            }
        };
        let resp: Response = serde_json::from_str(&line).map_err(|e| RunnerError::Protocol(format!("{e}: {line}")))?;
        Ok(RunResult {
            status: resp.status,
            coverage: resp.coverage.into_iter().collect(),
            wall: start.elapsed(),
        })
    }
}

impl Drop for Runner {
    fn drop(&mut self) {
        self.kill();
    }
}
