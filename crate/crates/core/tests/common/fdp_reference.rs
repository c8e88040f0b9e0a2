//! Reference FuzzedDataProvider consumers.
//!
//! A line-by-line transcription of the upstream consumer algorithms
//! (libFuzzer's `FuzzedDataProvider.h`, Jazzer's native data provider). It
//! shares nothing with the encoder and is the oracle for every FDP round-trip
//! test. Consumers never fail: once the buffer is drained they return the
//! same defaults upstream does.

use testforge::fdp::{Dialect, FdpCall, FdpOp, StringPolicy};
use testforge::int::IntType;

/// One consumer call.
#[derive(Clone, Debug, PartialEq)]
pub enum Consume {
    Bytes(usize),
    RemainingBytes,
    RandomLengthString { max_len: usize, ascii: bool },
    BytesAsString(usize),
    RemainingString { ascii: bool },
    Bool,
    Integral(IntType),
    IntegralInRange { ty: IntType, min: i128, max: i128 },
    FloatInRange { min: f64, max: f64 },
    Probability,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decoded {
    Bytes(Vec<u8>),
    /// libFuzzer strings are byte strings; Jazzer strings are re-encoded as UTF-8.
    Str(Vec<u8>),
    Bool(bool),
    Int(i128),
    Float(f64),
}

pub struct Consumer<'a> {
    dialect: Dialect,
    data: &'a [u8],
    start: usize,
    remaining: usize,
}

impl<'a> Consumer<'a> {
    pub fn new(dialect: Dialect, data: &'a [u8]) -> Self {
        Self {
            dialect,
            data,
            start: 0,
            remaining: data.len(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    fn advance(&mut self, n: usize) {
        self.start += n;
        self.remaining -= n;
    }

    pub fn consume(&mut self, c: &Consume) -> Decoded {
        match *c {
            Consume::Bytes(n) => Decoded::Bytes(self.bytes(n)),
            Consume::RemainingBytes => {
                let n = self.remaining;
                Decoded::Bytes(self.bytes(n))
            }
            Consume::RandomLengthString { max_len, ascii } => Decoded::Str(match self.dialect {
                Dialect::Llvm => self.llvm_random_length_string(max_len),
                Dialect::Jazzer => self.jazzer_string(max_len, ascii, true),
            }),
            Consume::BytesAsString(n) => Decoded::Str(self.bytes(n)),
            Consume::RemainingString { ascii } => Decoded::Str(match self.dialect {
                Dialect::Llvm => {
                    let n = self.remaining;
                    self.bytes(n)
                }
                Dialect::Jazzer => self.jazzer_string(usize::MAX, ascii, false),
            }),
            Consume::Bool => Decoded::Bool(self.bool()),
            Consume::Integral(ty) => Decoded::Int(self.integral(ty)),
            Consume::IntegralInRange { ty, min, max } => {
                Decoded::Int(self.integral_in_range(ty, min, max))
            }
            Consume::FloatInRange { min, max } => Decoded::Float(self.float_in_range(min, max)),
            Consume::Probability => Decoded::Float(self.probability()),
        }
    }

    fn bytes(&mut self, n: usize) -> Vec<u8> {
        let n = n.min(self.remaining);
        let out = self.data[self.start..self.start + n].to_vec();
        self.advance(n);
        out
    }

    /// `ConsumeIntegralInRange`: identical in both providers.
    fn integral_in_range(&mut self, ty: IntType, min: i128, max: i128) -> i128 {
        assert!(min <= max, "consumer aborts on min > max");
        let bits = ty.width.bits() as usize;
        // static_cast<uint64_t> of the bounds: two's complement truncation
        let min_u = min as u64;
        let max_u = max as u64;
        let range = max_u.wrapping_sub(min_u);
        let mut result: u64 = 0;
        let mut offset = 0usize;
        while offset < bits && (range >> offset) > 0 && self.remaining != 0 {
            self.remaining -= 1;
            result = (result << 8) | self.data[self.start + self.remaining] as u64;
            offset += 8;
        }
        if range != u64::MAX {
            result %= range + 1;
        }
        ty.from_bits(min_u.wrapping_add(result))
    }

    fn integral(&mut self, ty: IntType) -> i128 {
        match self.dialect {
            Dialect::Llvm => self.integral_in_range(ty, ty.min_value(), ty.max_value()),
            Dialect::Jazzer => {
                let unsigned = IntType::new(ty.width, false);
                let raw = self.integral_in_range(unsigned, 0, unsigned.max_value());
                ty.from_bits(raw as u64)
            }
        }
    }

    fn bool(&mut self) -> bool {
        let u8t = IntType::new(testforge::int::IntWidth::W8, false);
        1 & self.integral_in_range(u8t, 0, 255) != 0
    }

    fn probability(&mut self) -> f64 {
        let u64t = IntType::new(testforge::int::IntWidth::W64, false);
        let raw = self.integral_in_range(u64t, 0, u64::MAX as i128) as u64;
        let mut result = raw as f64;
        result /= u64::MAX as f64;
        result
    }

    fn float_in_range(&mut self, min: f64, max: f64) -> f64 {
        assert!(min <= max);
        let range;
        let mut result = min;
        if max > 0.0 && min < 0.0 && max > min + f64::MAX {
            range = (max / 2.0) - (min / 2.0);
            if self.bool() {
                result += range;
            }
        } else {
            range = max - min;
        }
        result + range * self.probability()
    }

    fn llvm_random_length_string(&mut self, max_length: usize) -> Vec<u8> {
        let mut result = Vec::new();
        let mut i = 0;
        while i < max_length && self.remaining != 0 {
            let mut next = self.data[self.start];
            self.advance(1);
            if next == b'\\' && self.remaining != 0 {
                next = self.data[self.start];
                self.advance(1);
                if next != b'\\' {
                    break;
                }
            }
            result.push(next);
            i += 1;
        }
        result
    }

    /// Jazzer string decode: UTF-8 text with lengths counted in UTF-16 units;
    /// undecodable bytes become U+FFFD; ASCII mode masks to seven bits.
    fn jazzer_string(&mut self, max_len: usize, ascii: bool, stop_on_backslash: bool) -> Vec<u8> {
        let mut out = String::new();
        let mut units = 0usize;
        while self.remaining > 0 && units < max_len {
            let b = self.data[self.start];
            if stop_on_backslash && b == b'\\' && self.remaining > 1 {
                let next = self.data[self.start + 1];
                self.advance(2);
                if next != b'\\' {
                    break;
                }
                out.push('\\');
                units += 1;
                continue;
            }
            if ascii {
                out.push((b & 0x7f) as char);
                self.advance(1);
                units += 1;
                continue;
            }
            let window = &self.data[self.start..self.start + self.remaining.min(4)];
            let decoded = (1..=window.len())
                .find_map(|len| std::str::from_utf8(&window[..len]).ok().map(|s| (s, len)));
            match decoded {
                Some((s, len)) => {
                    let c = s.chars().next().unwrap();
                    if units + c.len_utf16() > max_len {
                        break;
                    }
                    out.push(c);
                    units += c.len_utf16();
                    self.advance(len);
                }
                None => {
                    out.push('\u{FFFD}');
                    units += 1;
                    self.advance(1);
                }
            }
        }
        out.into_bytes()
    }
}

/// The consume sequence a harness mirroring `calls` would run, and the
/// values it should observe.
pub fn mirror(calls: &[FdpCall]) -> (Vec<Consume>, Vec<Decoded>) {
    calls
        .iter()
        .map(|call| match &call.op {
            FdpOp::Bytes(b) => (Consume::Bytes(b.len()), Decoded::Bytes(b.clone())),
            FdpOp::RemainingBytes(b) => (Consume::RemainingBytes, Decoded::Bytes(b.clone())),
            FdpOp::String {
                text,
                policy,
                ascii,
            } => {
                let plan = match *policy {
                    StringPolicy::RandomLength { max_len } => Consume::RandomLengthString {
                        max_len,
                        ascii: *ascii,
                    },
                    StringPolicy::Exact => Consume::BytesAsString(text.len()),
                    StringPolicy::Remaining => Consume::RemainingString { ascii: *ascii },
                };
                (plan, Decoded::Str(text.as_bytes().to_vec()))
            }
            FdpOp::Bool(v) => (Consume::Bool, Decoded::Bool(*v)),
            FdpOp::Int { ty, value } => (Consume::Integral(*ty), Decoded::Int(*value)),
            FdpOp::IntInRange {
                ty,
                min,
                max,
                value,
            } => (
                Consume::IntegralInRange {
                    ty: *ty,
                    min: *min,
                    max: *max,
                },
                Decoded::Int(*value),
            ),
            FdpOp::FloatInRange { min, max, value } => (
                Consume::FloatInRange {
                    min: *min,
                    max: *max,
                },
                Decoded::Float(*value),
            ),
            FdpOp::Probability(v) => (Consume::Probability, Decoded::Float(*v)),
        })
        .unzip()
}

pub fn reference_consume(dialect: Dialect, blob: &[u8], plan: &[Consume]) -> Vec<Decoded> {
    let mut c = Consumer::new(dialect, blob);
    plan.iter().map(|p| c.consume(p)).collect()
}
