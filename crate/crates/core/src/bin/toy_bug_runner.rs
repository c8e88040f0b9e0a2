//! Test runner that crashes on any input containing `BUG`. Coverage grows
//! with the longest prefix of `BUG` present, so the fuzzer gets a gradient.

use std::io::{BufRead, Write};

const NEEDLE: &[u8] = b"BUG";

fn longest_prefix(data: &[u8]) -> usize {
    (1..=NEEDLE.len())
        .rev()
        .find(|&k| data.windows(k).any(|w| w == &NEEDLE[..k]))
        .unwrap_or(0)
}

fn main() {
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let req: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => break,
        };
        let data = std::fs::read(req["input_path"].as_str().unwrap_or_default()).unwrap_or_default();
        let depth = longest_prefix(&data);
        let mut coverage = vec![("toy.c", 1u32)];
        coverage.extend((1..=depth).map(|k| ("toy.c", 10 + k as u32)));
        coverage.push(("toy.c", 100 + (data.len().min(64) as u32)));
        let status = if depth == NEEDLE.len() { "crash" } else { "ok" };
        let resp = serde_json::json!({"status": status, "coverage": coverage});
        if writeln!(out, "{resp}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
