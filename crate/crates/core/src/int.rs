//! Fixed-width integer types shared by the format model and the FDP codec.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntWidth {
    W8,
    W16,
    W32,
    W64,
}

impl IntWidth {
    pub fn from_bits(bits: u64) -> Option<Self> {
        match bits {
            8 => Some(Self::W8),
            16 => Some(Self::W16),
            32 => Some(Self::W32),
            64 => Some(Self::W64),
            _ => None,
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::W8 => 8,
            Self::W16 => 16,
            Self::W32 => 32,
            Self::W64 => 64,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endian {
    Big,
    Little,
}

/// An integer type: width plus signedness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntType {
    pub width: IntWidth,
    pub signed: bool,
}

impl IntType {
    pub const fn new(width: IntWidth, signed: bool) -> Self {
        Self { width, signed }
    }

    pub fn min_value(self) -> i128 {
        if self.signed {
            -(1i128 << (self.width.bits() - 1))
        } else {
            0
        }
    }

    pub fn max_value(self) -> i128 {
        if self.signed {
            (1i128 << (self.width.bits() - 1)) - 1
        } else {
            (1i128 << self.width.bits()) - 1
        }
    }

    pub fn contains(self, value: i128) -> bool {
        (self.min_value()..=self.max_value()).contains(&value)
    }

    /// Two's-complement bit pattern of `value`, truncated to the width.
    pub fn to_bits(self, value: i128) -> u64 {
        let mask = if self.width == IntWidth::W64 {
            u64::MAX
        } else {
            (1u64 << self.width.bits()) - 1
        };
        (value as u64) & mask
    }

    /// Interpret the low `width` bits of `raw` as a value of this type.
    pub fn from_bits(self, raw: u64) -> i128 {
        let bits = self.width.bits();
        let raw = self.to_bits(raw as i128);
        if self.signed && bits < 128 && (raw >> (bits - 1)) & 1 == 1 {
            raw as i128 - (1i128 << bits)
        } else {
            raw as i128
        }
    }

    pub fn encode(self, value: i128, endian: Endian) -> Vec<u8> {
        let raw = self.to_bits(value).to_be_bytes();
        let mut out = raw[8 - self.width.bytes()..].to_vec();
        if endian == Endian::Little {
            out.reverse();
        }
        out
    }

    pub fn decode(self, bytes: &[u8], endian: Endian) -> i128 {
        debug_assert_eq!(bytes.len(), self.width.bytes());
        let mut raw = 0u64;
        let mut push = |b: u8| raw = (raw << 8) | b as u64;
        match endian {
            Endian::Big => bytes.iter().copied().for_each(&mut push),
            Endian::Little => bytes.iter().rev().copied().for_each(&mut push),
        }
        self.from_bits(raw)
    }
}

impl fmt::Display for IntType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { 'i' } else { 'u' }, self.width.bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        let i32t = IntType::new(IntWidth::W32, true);
        assert_eq!(i32t.min_value(), i32::MIN as i128);
        assert_eq!(i32t.max_value(), i32::MAX as i128);
        let u64t = IntType::new(IntWidth::W64, false);
        assert_eq!(u64t.max_value(), u64::MAX as i128);
    }

    #[test]
    fn encode_decode_both_endians() {
        let t = IntType::new(IntWidth::W16, true);
        assert_eq!(t.encode(-2, Endian::Big), vec![0xff, 0xfe]);
        assert_eq!(t.encode(0x1234, Endian::Little), vec![0x34, 0x12]);
        assert_eq!(t.decode(&[0xff, 0xfe], Endian::Big), -2);
        assert_eq!(t.decode(&[0x34, 0x12], Endian::Little), 0x1234);
        let u = IntType::new(IntWidth::W64, false);
        assert_eq!(u.decode(&u.encode(u64::MAX as i128, Endian::Big), Endian::Big), u64::MAX as i128);
    }
}
