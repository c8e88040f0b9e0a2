use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const DEFAULT_MAX_TOKEN_SIZE: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DictParseError {
    pub line: usize,
    pub message: String,
}

/// A deduplicated set of tokens in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    tokens: Vec<Vec<u8>>,
}

impl Dictionary {
    /// Drops empty, duplicate, and oversized tokens.
    pub fn new<I, T>(tokens: I, max_token_size: usize) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Vec<u8>>,
    {
        let mut out: Vec<Vec<u8>> = Vec::new();
        for t in tokens {
            let t = t.into();
            if !t.is_empty() && t.len() <= max_token_size && !out.contains(&t) {
                out.push(t);
            }
        }
        Self { tokens: out }
    }

    /// One token per line. `\xNN`, `\\`, `\n`, `\r` and `\t` are unescaped;
    /// blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, max_token_size: usize) -> Result<Self, DictParseError> {
        let mut tokens = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            tokens.push(unescape(line).map_err(|message| DictParseError { line: i + 1, message })?);
        }
        Ok(Self::new(tokens, max_token_size))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(&escape(t));
            s.push('\n');
        }
        s
    }

    pub fn tokens(&self) -> &[Vec<u8>] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn choose(&self, rng: &mut ChaCha8Rng) -> Option<&[u8]> {
        self.tokens.choose(rng).map(Vec::as_slice)
    }
}

fn unescape(line: &str) -> Result<Vec<u8>, String> {
    let b = line.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] != b'\\' {
            out.push(b[i]);
            i += 1;
            continue;
        }
        match b.get(i + 1) {
            Some(b'\\') => out.push(b'\\'),
            Some(b'n') => out.push(b'\n'),
            Some(b'r') => out.push(b'\r'),
            Some(b't') => out.push(b'\t'),
            Some(b'x') => {
                let hex = line.get(i + 2..i + 4).ok_or("truncated \\x escape")?;
                out.push(u8::from_str_radix(hex, 16).map_err(|_| format!("bad hex escape `\\x{hex}`"))?);
                i += 4;
                continue;
            }
            Some(&c) => return Err(format!("unknown escape `\\{}`", c as char)),
            None => return Err("trailing backslash".into()),
        }
        i += 2;
    }
    Ok(out)
}

fn escape(token: &[u8]) -> String {
    let mut s = String::new();
    for &c in token {
        match c {
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            b'\r' => s.push_str("\\r"),
            b'\t' => s.push_str("\\t"),
            0x20..=0x7e => s.push(c as char),
            _ => {
                let _ = write!(s, "\\x{c:02x}");
            }
        }
    }
    s
}

/// `token` inserted at a random offset.
pub fn dict_insert(raw: &[u8], token: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let at = rng.gen_range(0..=raw.len());
    [&raw[..at], token, &raw[at..]].concat()
}

/// A random span of `raw` (length uniform in [1, |raw|]) replaced by `token`.
pub fn dict_replace_chunk(raw: &[u8], token: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    if raw.is_empty() {
        return token.to_vec();
    }
    let len = rng.gen_range(1..=raw.len());
    let at = rng.gen_range(0..=raw.len() - len);
    [&raw[..at], token, &raw[at + len..]].concat()
}

/// Up to eight bytes of `raw` overwritten in place by a prefix of `token`.
pub fn dict_replace_bytes(raw: &[u8], token: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = raw.to_vec();
    let cap = 8.min(token.len()).min(raw.len());
    if cap == 0 {
        return out;
    }
    let k = rng.gen_range(1..=cap);
    let at = rng.gen_range(0..=raw.len() - k);
    out[at..at + k].copy_from_slice(&token[..k]);
    out
}
