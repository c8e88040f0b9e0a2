use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DIGITS: &[u8] = b"0123456789";
const HEX: &[u8] = b"0123456789abcdef";

/// Exactly `n` bytes from a named builtin generator. Unknown names yield
/// printable ASCII.
pub fn run_builtin(name: &str, args: &BTreeMap<String, serde_json::Value>, n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    match name {
        "ascii_digits" => pick(DIGITS, n, rng),
        "uuid_like" => (0..n)
            .map(|i| match i % 37 {
                8 | 13 | 18 | 23 | 36 => b'-',
                _ => *HEX.choose(rng).unwrap(),
            })
            .collect(),
        "utf8_text" => utf8_text(n, rng),
        _ => {
            let alphabet: Vec<u8> = args
                .get("alphabet")
                .and_then(|v| v.as_str())
                .map(|s| s.bytes().filter(u8::is_ascii).collect())
                .filter(|a: &Vec<u8>| !a.is_empty())
                .unwrap_or_else(|| (0x20..=0x7e).collect());
            pick(&alphabet, n, rng)
        }
    }
}

fn pick(alphabet: &[u8], n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// Valid UTF-8 of exactly `n` bytes mixing one-, two- and three-byte chars.
fn utf8_text(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = String::with_capacity(n);
    while out.len() < n {
        let room = n - out.len();
        let width = rng.gen_range(1..=room.min(3));
        let c = match width {
            1 => rng.gen_range(0x20u32..0x7f),
            2 => rng.gen_range(0xa0u32..0x800),
            _ => rng.gen_range(0x800u32..0xd800),
        };
        out.push(char::from_u32(c).unwrap());
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn builtins_hit_exact_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let none = BTreeMap::new();
        for n in 0..80 {
            for name in ["ascii_digits", "ascii_printable", "utf8_text", "uuid_like"] {
                let out = run_builtin(name, &none, n, &mut rng);
                assert_eq!(out.len(), n, "{name}");
            }
            assert!(run_builtin("ascii_digits", &none, n, &mut rng).iter().all(u8::is_ascii_digit));
            assert!(std::str::from_utf8(&run_builtin("utf8_text", &none, n, &mut rng)).is_ok());
        }
    }

    #[test]
    fn uuid_like_has_dashes_in_place() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = run_builtin("uuid_like", &BTreeMap::new(), 36, &mut rng);
        let s = String::from_utf8(out).unwrap();
        let parts: Vec<usize> = s.split('-').map(str::len).collect();
        assert_eq!(parts, [8, 4, 4, 4, 12]);
    }

    #[test]
    fn alphabet_arg_restricts_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let args = BTreeMap::from([("alphabet".to_string(), serde_json::json!("ab"))]);
        let out = run_builtin("ascii_printable", &args, 50, &mut rng);
        assert!(out.iter().all(|b| *b == b'a' || *b == b'b'));
    }
}
