use std::io::Read;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExternalError {
    #[error("timed out")]
    Timeout,
    #[error("wrote more than {limit} bytes")]
    OutputTooLarge { limit: u64 },
    #[error("exited with status {0:?}")]
    NonzeroExit(Option<i32>),
    #[error("could not start: {0}")]
    Spawn(String),
    #[error("produced {got} bytes, expected {expected}")]
    WrongLength { expected: u64, got: u64 },
}

/// Runs a generator command line through `sh -c` and returns its stdout.
///
/// `{seed}`, `{max_bytes}` and `{field}` in `cmd` are replaced, and the same
/// values are exported as `TESTFORGE_SEED`, `TESTFORGE_MAX_BYTES` and
/// `TESTFORGE_FIELD`.
pub fn run_external_generator(
    cmd: &str,
    seed: u64,
    field: &str,
    max_bytes: u64,
    timeout: Duration,
) -> Result<Vec<u8>, ExternalError> {
    let line = cmd
        .replace("{seed}", &seed.to_string())
        .replace("{max_bytes}", &max_bytes.to_string())
        .replace("{field}", field);
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&line)
        .env("TESTFORGE_SEED", seed.to_string())
        .env("TESTFORGE_MAX_BYTES", max_bytes.to_string())
        .env("TESTFORGE_FIELD", field)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| ExternalError::Spawn(e.to_string()))?;

    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        let res = stdout.take(max_bytes + 1).read_to_end(&mut buf).map(|_| buf);
        let _ = tx.send(res);
    });

    let deadline = Instant::now() + timeout;
    let out = match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
        Ok(Ok(buf)) => buf,
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Spawn(e.to_string()));
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout);
        }
    };
    if out.len() as u64 > max_bytes {
        let _ = child.kill();
        let _ = child.wait();
        return Err(ExternalError::OutputTooLarge { limit: max_bytes });
    }
    loop {
        match child.try_wait() {
            Ok(Some(status)) if status.success() => return Ok(out),
            Ok(Some(status)) => return Err(ExternalError::NonzeroExit(status.code())),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExternalError::Timeout);
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(ExternalError::Spawn(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: Duration = Duration::from_secs(5);

    #[test]
    fn substitutes_placeholders_and_env() {
        let out = run_external_generator("printf '%s:%s:%s' {seed} {max_bytes} {field}", 42, "INPUT.x", 64, T).unwrap();
        assert_eq!(out, b"42:64:INPUT.x");
        let out = run_external_generator("printf '%s' \"$TESTFORGE_SEED$TESTFORGE_FIELD\"", 9, "f", 64, T).unwrap();
        assert_eq!(out, b"9f");
    }

    #[test]
    fn nonzero_exit_is_reported() {
        assert_eq!(
            run_external_generator("false", 0, "f", 16, T),
            Err(ExternalError::NonzeroExit(Some(1)))
        );
    }

    #[test]
    fn output_over_cap_is_rejected() {
        let r = run_external_generator("head -c 17 /dev/zero", 0, "f", 16, T);
        assert_eq!(r, Err(ExternalError::OutputTooLarge { limit: 16 }));
        assert_eq!(run_external_generator("head -c 16 /dev/zero", 0, "f", 16, T).unwrap().len(), 16);
    }

    #[test]
    fn slow_generator_times_out() {
        let start = Instant::now();
        let r = run_external_generator("sleep 5", 0, "f", 16, Duration::from_millis(100));
        assert_eq!(r, Err(ExternalError::Timeout));
        assert!(start.elapsed() < Duration::from_secs(3));
    }
}
