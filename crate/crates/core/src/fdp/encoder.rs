use crate::int::IntType;

use super::dialect::{rules, DialectRules};
use super::{Dialect, FdpCall, FdpErrorCode, FdpOp, FdpSemanticError, StringPolicy};

/// Dual-ended byte accumulator.
///
/// `front` holds data consumed from the start of the buffer. `back` holds
/// primitive bytes in the order the consumer reads them from the end, so the
/// final buffer is `front ++ reverse(back)`.
#[derive(Clone, Debug)]
pub struct FdpEncoder {
    dialect: Dialect,
    front: Vec<u8>,
    back: Vec<u8>,
    exhausted: bool,
    calls: usize,
}

impl FdpEncoder {
    pub fn new(dialect: Dialect) -> Self {
        Self {
            dialect,
            front: Vec::new(),
            back: Vec::new(),
            exhausted: false,
            calls: 0,
        }
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Number of producer calls issued so far.
    pub fn call_count(&self) -> usize {
        self.calls
    }

    pub fn finalize(self) -> Vec<u8> {
        let mut out = self.front;
        out.extend(self.back.iter().rev());
        out
    }

    pub fn apply(&mut self, call: &FdpCall) -> Result<(), FdpSemanticError> {
        let checked = call.checked;
        match &call.op {
            FdpOp::Bytes(b) => self.produce_bytes(b, checked),
            FdpOp::RemainingBytes(b) => self.produce_remaining_bytes(b, checked),
            FdpOp::String {
                text,
                policy,
                ascii,
            } => self.produce_string(text, *policy, *ascii, checked),
            FdpOp::Bool(v) => self.produce_bool(*v, checked),
            FdpOp::Int { ty, value } => self.produce_int(*ty, *value, checked),
            FdpOp::IntInRange {
                ty,
                min,
                max,
                value,
            } => self.produce_int_in_range(*ty, *min, *max, *value, checked),
            FdpOp::FloatInRange { min, max, value } => {
                self.produce_float_in_range(*min, *max, *value, checked)
            }
            FdpOp::Probability(v) => self.produce_probability(*v, checked),
        }
    }

    pub fn produce_bytes(&mut self, payload: &[u8], checked: bool) -> Result<(), FdpSemanticError> {
        if self.start(checked)? {
            self.front.extend_from_slice(payload);
        }
        Ok(())
    }

    pub fn produce_remaining_bytes(
        &mut self,
        payload: &[u8],
        checked: bool,
    ) -> Result<(), FdpSemanticError> {
        if self.start(checked)? {
            self.front.extend_from_slice(payload);
            self.exhausted = true;
        }
        Ok(())
    }

    pub fn produce_string(
        &mut self,
        text: &str,
        policy: StringPolicy,
        ascii: bool,
        checked: bool,
    ) -> Result<(), FdpSemanticError> {
        if !self.start(checked)? {
            return Ok(());
        }
        let bytes = self
            .rules()
            .string_bytes(text, policy, ascii, checked)
            .map_err(|msg| self.error(FdpErrorCode::ValueNotProducible, msg))?;
        self.front.extend_from_slice(&bytes);
        if policy == StringPolicy::Remaining {
            self.exhausted = true;
        }
        Ok(())
    }

    pub fn produce_bool(&mut self, value: bool, checked: bool) -> Result<(), FdpSemanticError> {
        if self.start(checked)? {
            self.push_integral(value as u64, u8::MAX as u64, 8);
        }
        Ok(())
    }

    /// Mirror of a full-width `ConsumeIntegral<T>()`.
    pub fn produce_int(
        &mut self,
        ty: IntType,
        value: i128,
        checked: bool,
    ) -> Result<(), FdpSemanticError> {
        if !self.start(checked)? {
            return Ok(());
        }
        if checked && !ty.contains(value) {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("{value} does not fit {ty}"),
            ));
        }
        let offset = self.rules().unranged_offset(ty, value);
        self.push_integral(offset, ty.to_bits(-1), ty.width.bits());
        Ok(())
    }

    /// Mirror of `ConsumeIntegralInRange<T>(min, max)`.
    pub fn produce_int_in_range(
        &mut self,
        ty: IntType,
        min: i128,
        max: i128,
        value: i128,
        checked: bool,
    ) -> Result<(), FdpSemanticError> {
        if !self.start(checked)? {
            return Ok(());
        }
        if min > max || !ty.contains(min) || !ty.contains(max) {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("[{min}, {max}] is not a valid {ty} range"),
            ));
        }
        if checked && !(min..=max).contains(&value) {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("{value} is outside [{min}, {max}]"),
            ));
        }
        // range < 2^64 because both bounds fit a 64-bit type
        let range = (max - min) as u64;
        let offset = if range == u64::MAX {
            (value - min) as u64
        } else {
            (value - min).rem_euclid(range as i128 + 1) as u64
        };
        self.push_integral(offset, range, ty.width.bits());
        Ok(())
    }

    /// Mirror of `ConsumeFloatingPointInRange<double>(min, max)`.
    pub fn produce_float_in_range(
        &mut self,
        min: f64,
        max: f64,
        value: f64,
        checked: bool,
    ) -> Result<(), FdpSemanticError> {
        if !self.start(checked)? {
            return Ok(());
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(self.error(
                FdpErrorCode::NonFiniteFloat,
                format!("range bounds must be finite, got [{min}, {max}]"),
            ));
        }
        if min > max {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("empty range [{min}, {max}]"),
            ));
        }
        let value = if value.is_finite() {
            value
        } else if checked {
            return Err(self.error(FdpErrorCode::NonFiniteFloat, format!("value {value}")));
        } else if value == f64::INFINITY {
            max
        } else {
            min
        };
        if checked && !(min..=max).contains(&value) {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("{value} is outside [{min}, {max}]"),
            ));
        }
        let inv = invert_float(min, max, value);
        let chosen = match (checked, inv.exact) {
            (_, Some(exact)) => exact,
            (false, None) => inv.nearest,
            (true, None) => {
                return Err(self.error(
                    FdpErrorCode::ValueNotProducible,
                    format!(
                        "{value:e} is not producible in [{min}, {max}]; nearest is {:e}",
                        inv.nearest.decoded
                    ),
                ))
            }
        };
        if let Some(flag) = chosen.upper_half {
            self.push_integral(flag as u64, u8::MAX as u64, 8);
        }
        self.push_integral(chosen.raw, u64::MAX, 64);
        Ok(())
    }

    /// Mirror of `ConsumeProbability<double>()`.
    pub fn produce_probability(&mut self, value: f64, checked: bool) -> Result<(), FdpSemanticError> {
        if !self.start(checked)? {
            return Ok(());
        }
        let value = if value.is_finite() {
            value
        } else if checked {
            return Err(self.error(FdpErrorCode::NonFiniteFloat, format!("value {value}")));
        } else if value == f64::INFINITY {
            1.0
        } else {
            0.0
        };
        if checked && !(0.0..=1.0).contains(&value) {
            return Err(self.error(
                FdpErrorCode::RangeViolation,
                format!("probability {value} is outside [0, 1]"),
            ));
        }
        let found = search_raw(0.0, 1.0, value);
        match found.exact {
            Some(raw) => self.push_integral(raw, u64::MAX, 64),
            None if !checked => self.push_integral(found.nearest.0, u64::MAX, 64),
            None => {
                return Err(self.error(
                    FdpErrorCode::ValueNotProducible,
                    format!("probability {value:e} is not producible"),
                ))
            }
        }
        Ok(())
    }

    fn rules(&self) -> &'static dyn DialectRules {
        rules(self.dialect)
    }

    /// Registers one producer call. `Ok(false)` means an unchecked call after
    /// exhaustion, which is dropped.
    fn start(&mut self, checked: bool) -> Result<bool, FdpSemanticError> {
        self.calls += 1;
        if !self.exhausted {
            Ok(true)
        } else if checked {
            Err(self.error(
                FdpErrorCode::ProduceAfterExhaustion,
                "producer called after all remaining bytes were consumed".into(),
            ))
        } else {
            Ok(false)
        }
    }

    fn error(&self, code: FdpErrorCode, message: String) -> FdpSemanticError {
        FdpSemanticError {
            code,
            call_index: self.calls - 1,
            message,
        }
    }

    /// Appends the bytes an in-range integral read of a `bits`-wide type with
    /// the given `range` pulls off the buffer end. The consumer reads
    /// ceil(bitlen(range) / 8) bytes, most significant first.
    fn push_integral(&mut self, offset: u64, range: u64, bits: u32) {
        let mut n = 0u32;
        while n * 8 < bits && (range >> (n * 8)) > 0 {
            n += 1;
        }
        for i in (0..n).rev() {
            self.back.push((offset >> (8 * i)) as u8);
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct FloatChoice {
    /// Value of the leading `ConsumeBool` when the range is split in halves.
    upper_half: Option<bool>,
    raw: u64,
    decoded: f64,
}

struct FloatInversion {
    exact: Option<FloatChoice>,
    nearest: FloatChoice,
}

fn probability(raw: u64) -> f64 {
    raw as f64 / u64::MAX as f64
}

fn invert_float(min: f64, max: f64, value: f64) -> FloatInversion {
    let split = max > 0.0 && min < 0.0 && max > min + f64::MAX;
    let halves: Vec<(Option<bool>, f64, f64)> = if split {
        let range = max / 2.0 - min / 2.0;
        vec![(Some(false), min, range), (Some(true), min + range, range)]
    } else {
        vec![(None, min, max - min)]
    };
    let mut exact = None;
    let mut nearest: Option<FloatChoice> = None;
    for (upper_half, base, range) in halves {
        let found = search_raw(base, range, value);
        if let (None, Some(raw)) = (exact, found.exact) {
            exact = Some(FloatChoice {
                upper_half,
                raw,
                decoded: value,
            });
        }
        let candidate = FloatChoice {
            upper_half,
            raw: found.nearest.0,
            decoded: found.nearest.1,
        };
        if nearest.is_none_or(|n| (candidate.decoded - value).abs() < (n.decoded - value).abs()) {
            nearest = Some(candidate);
        }
    }
    FloatInversion {
        exact,
        nearest: nearest.expect("at least one half"),
    }
}

struct RawSearch {
    exact: Option<u64>,
    nearest: (u64, f64),
}

/// Finds a 64-bit raw value whose decode `base + range * raw / u64::MAX`
/// equals `value`. The decode is monotone in `raw`, so a binary search for
/// the first raw value decoding to at least `value` settles both the exact
/// and the nearest answer.
fn search_raw(base: f64, range: f64, value: f64) -> RawSearch {
    let decode = |raw: u64| base + range * probability(raw);
    let (mut lo, mut hi) = (0u64, u64::MAX);
    if decode(hi) < value {
        lo = hi;
    } else {
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if decode(mid) >= value {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
    }
    let at = decode(lo);
    let exact = (at == value).then_some(lo);
    let mut nearest = (lo, at);
    if lo > 0 {
        let below = decode(lo - 1);
        if (value - below).abs() < (at - value).abs() {
            nearest = (lo - 1, below);
        }
    }
    RawSearch { exact, nearest }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int::IntWidth;

    const U8: IntType = IntType::new(IntWidth::W8, false);
    const U16: IntType = IntType::new(IntWidth::W16, false);
    const U32: IntType = IntType::new(IntWidth::W32, false);

    #[test]
    fn in_range_byte_count_follows_range_width() {
        let mut e = FdpEncoder::new(Dialect::Llvm);
        e.produce_int_in_range(U32, 0, 255, 0x41, true).unwrap();
        assert_eq!(e.clone().finalize(), vec![0x41]);
        e.produce_int_in_range(U32, 0, 1000, 0x102, true).unwrap();
        // second value is consumed after the first, so it sits just before it
        assert_eq!(e.finalize(), vec![0x02, 0x01, 0x41]);
    }

    #[test]
    fn degenerate_range_emits_nothing() {
        let mut e = FdpEncoder::new(Dialect::Llvm);
        e.produce_int_in_range(U32, 7, 7, 7, true).unwrap();
        assert!(e.finalize().is_empty());
    }

    #[test]
    fn checked_range_violation() {
        let mut e = FdpEncoder::new(Dialect::Jazzer);
        let err = e.produce_int_in_range(U16, 10, 100, 101, true).unwrap_err();
        assert_eq!(err.code, FdpErrorCode::RangeViolation);
        assert_eq!(err.call_index, 0);
        let err = e.produce_int_in_range(U32, 7, 7, 8, true).unwrap_err();
        assert_eq!(err.call_index, 1);
    }

    #[test]
    fn unchecked_int_reduces_modulo_range() {
        let mut e = FdpEncoder::new(Dialect::Llvm);
        e.produce_int_in_range(U8, 10, 19, 25, false).unwrap();
        // 25 - 10 = 15 ≡ 5 (mod 10)
        assert_eq!(e.finalize(), vec![5]);
    }

    #[test]
    fn exhaustion_is_monotone() {
        let mut e = FdpEncoder::new(Dialect::Llvm);
        e.produce_remaining_bytes(b"x", true).unwrap();
        for _ in 0..3 {
            let err = e.produce_bool(true, true).unwrap_err();
            assert_eq!(err.code, FdpErrorCode::ProduceAfterExhaustion);
        }
        assert_eq!(e.call_count(), 4);
        e.produce_bool(true, false).unwrap();
        assert_eq!(e.finalize(), b"x");
    }

    #[test]
    fn non_finite_float_rejected() {
        let mut e = FdpEncoder::new(Dialect::Llvm);
        let err = e.produce_float_in_range(0.0, 1.0, f64::NAN, true).unwrap_err();
        assert_eq!(err.code, FdpErrorCode::NonFiniteFloat);
        let err = e.produce_float_in_range(0.0, f64::INFINITY, 1.0, false).unwrap_err();
        assert_eq!(err.code, FdpErrorCode::NonFiniteFloat);
    }

    #[test]
    fn raw_search_hits_endpoints() {
        assert_eq!(search_raw(0.0, 1.0, 0.0).exact, Some(0));
        assert_eq!(search_raw(0.0, 1.0, 1.0).exact.map(probability), Some(1.0));
        // half-way is representable: 2^63 / (2^64 - 1) rounds to 0.5
        assert!(search_raw(0.0, 1.0, 0.5).exact.is_some());
    }
}
