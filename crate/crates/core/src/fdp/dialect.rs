//! Per-dialect decode rules. Everything the two consumers share (in-range
//! integer accumulation, bool, byte slices, float mapping) lives in the
//! encoder; only the parts where they diverge are here.

use crate::int::IntType;

use super::{Dialect, StringPolicy};

/// Byte pair that ends a random-length string: a backslash followed by a
/// byte other than a backslash.
const STRING_TERMINATOR: [u8; 2] = [b'\\', 0];

pub(crate) trait DialectRules {
    /// Offset the consumer's full-width integral read must decode to, i.e. the
    /// raw value before it is mapped onto the target type.
    fn unranged_offset(&self, ty: IntType, value: i128) -> u64;

    /// Front bytes for a string producer. `Err` carries the reason the text is
    /// not producible; only returned when `checked`.
    fn string_bytes(
        &self,
        text: &str,
        policy: StringPolicy,
        ascii: bool,
        checked: bool,
    ) -> Result<Vec<u8>, String>;
}

pub(crate) fn rules(dialect: Dialect) -> &'static dyn DialectRules {
    match dialect {
        Dialect::Llvm => &Llvm,
        Dialect::Jazzer => &Jazzer,
    }
}

/// libFuzzer: `ConsumeIntegral<T>()` is `ConsumeIntegralInRange(min, max)`,
/// so a raw offset of zero decodes to the type's minimum. Strings are plain
/// byte strings.
struct Llvm;

/// Jazzer: `consumeInt()` reads an unsigned value and reinterprets the bits,
/// so zero decodes to zero. Strings are decoded as UTF-8 text with lengths in
/// UTF-16 code units; the ASCII variants mask every byte to seven bits.
struct Jazzer;

impl DialectRules for Llvm {
    fn unranged_offset(&self, ty: IntType, value: i128) -> u64 {
        ty.to_bits(value.wrapping_sub(ty.min_value()))
    }

    fn string_bytes(
        &self,
        text: &str,
        policy: StringPolicy,
        ascii: bool,
        checked: bool,
    ) -> Result<Vec<u8>, String> {
        let mut bytes = text.as_bytes().to_vec();
        if ascii && !text.is_ascii() {
            if checked {
                return Err("libFuzzer has no ASCII-only string consumer for non-ASCII text".into());
            }
            bytes.iter_mut().for_each(|b| *b &= 0x7f);
        }
        match policy {
            StringPolicy::Exact | StringPolicy::Remaining => Ok(bytes),
            StringPolicy::RandomLength { max_len } => {
                if bytes.len() > max_len {
                    if checked {
                        return Err(format!(
                            "string of {} bytes exceeds max_length {max_len}",
                            bytes.len()
                        ));
                    }
                    bytes.truncate(max_len);
                }
                let terminated = bytes.len() < max_len;
                Ok(escape(&bytes, terminated))
            }
        }
    }
}

impl DialectRules for Jazzer {
    fn unranged_offset(&self, ty: IntType, value: i128) -> u64 {
        ty.to_bits(value)
    }

    fn string_bytes(
        &self,
        text: &str,
        policy: StringPolicy,
        ascii: bool,
        checked: bool,
    ) -> Result<Vec<u8>, String> {
        // (encoded bytes of one char, UTF-16 units it counts for)
        let chars: Vec<(Vec<u8>, usize)> = if ascii {
            if checked && !text.is_ascii() {
                return Err("non-ASCII text for an ASCII-only string consumer".into());
            }
            text.chars().map(|c| (vec![(c as u32 & 0x7f) as u8], 1)).collect()
        } else {
            text.chars()
                .map(|c| {
                    let mut buf = [0u8; 4];
                    (c.encode_utf8(&mut buf).as_bytes().to_vec(), c.len_utf16())
                })
                .collect()
        };
        match policy {
            StringPolicy::Exact => {
                if checked {
                    return Err("Jazzer has no fixed-length string consumer".into());
                }
                Ok(chars.into_iter().flat_map(|(b, _)| b).collect())
            }
            StringPolicy::Remaining => Ok(chars.into_iter().flat_map(|(b, _)| b).collect()),
            StringPolicy::RandomLength { max_len } => {
                let units: usize = chars.iter().map(|(_, u)| u).sum();
                let mut kept = Vec::with_capacity(chars.len());
                let mut used = 0;
                for (bytes, u) in chars {
                    if used + u > max_len {
                        if checked {
                            return Err(format!(
                                "string of {units} UTF-16 units exceeds max_length {max_len}"
                            ));
                        }
                        break;
                    }
                    used += u;
                    kept.push(bytes);
                }
                let terminated = used < max_len;
                let mut out = Vec::new();
                for bytes in kept {
                    if bytes == *b"\\" {
                        out.extend_from_slice(b"\\\\");
                    } else {
                        out.extend_from_slice(&bytes);
                    }
                }
                if terminated {
                    out.extend_from_slice(&STRING_TERMINATOR);
                }
                Ok(out)
            }
        }
    }
}

fn escape(bytes: &[u8], terminated: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() + 2);
    for &b in bytes {
        if b == b'\\' {
            out.push(b'\\');
        }
        out.push(b);
    }
    if terminated {
        out.extend_from_slice(&STRING_TERMINATOR);
    }
    out
}
