//! Fixed-step binary encodings of bounded numeric variables.
//!
//! A value `v ∈ [lo, hi]` is represented as `lo + step · Σ_k 2^k f_k` with
//! the fewest bits that still reach `hi`.

use serde::{Deserialize, Serialize};

use super::QuboError;

/// What an encoded block of bits stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Zeta,
    Integer(usize),
    /// Slack of compiled row `i`.
    Slack(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryEncoding {
    pub owner: Owner,
    pub step: f64,
    /// Value of the all-zeros codeword.
    pub offset: f64,
    pub n_bits: usize,
    /// Index of bit 0 in the surrounding QUBO.
    pub first_bit: usize,
}

impl BinaryEncoding {
    /// Highest bit index, `None` for a constant (zero-bit) encoding.
    pub fn k_max(&self) -> Option<usize> {
        self.n_bits.checked_sub(1)
    }

    pub fn max_code(&self) -> u64 {
        max_code(self.n_bits)
    }

    /// Largest representable value.
    pub fn upper(&self) -> f64 {
        self.value_of(self.max_code())
    }

    pub fn value_of(&self, code: u64) -> f64 {
        self.offset + self.step * code as f64
    }

    pub fn bits(&self) -> std::ops::Range<usize> {
        self.first_bit..self.first_bit + self.n_bits
    }

    /// Codeword read from a full QUBO assignment.
    pub fn code(&self, bits: &[u8]) -> u64 {
        self.bits()
            .enumerate()
            .fold(0u64, |acc, (k, b)| acc | (u64::from(bits[b] & 1) << k))
    }

    /// `offset + step · code`, with the code assembled exactly in integers.
    pub fn decode(&self, bits: &[u8]) -> f64 {
        self.value_of(self.code(bits))
    }

    /// Nearest codeword to `v`, clamped to the representable range.
    pub fn quantize(&self, v: f64) -> u64 {
        let k = ((v - self.offset) / self.step).round();
        if k <= 0.0 {
            0
        } else {
            (k as u64).min(self.max_code())
        }
    }

    /// Writes the codeword of `v` into a full QUBO assignment.
    pub fn write(&self, v: f64, bits: &mut [u8]) {
        let code = self.quantize(v);
        for (k, b) in self.bits().enumerate() {
            bits[b] = ((code >> k) & 1) as u8;
        }
    }
}

pub(crate) fn max_code(n_bits: usize) -> u64 {
    if n_bits == 0 {
        0
    } else {
        u64::MAX >> (64 - n_bits)
    }
}

/// Largest number of bits any single encoding may use.
pub const MAX_BITS: usize = 52;

/// Encoding of `[lo, hi]` with the given step and the minimum bit count:
/// `step · (2^n − 1) >= hi − lo` and `n − 1` bits fall short.
pub fn encode_value(owner: Owner, lo: f64, hi: f64, step: f64) -> Result<BinaryEncoding, QuboError> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(QuboError::InvalidRange { owner, lo, hi, step });
    }
    // `hi − lo` picks up rounding error when the bounds are decimal; a
    // step count within that error of an integer is taken as the integer
    let units = (hi - lo) / step;
    let nearest = units.round();
    let units = if (units - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { units.ceil() };
    let n_bits = (0..=MAX_BITS)
        .find(|&n| max_code(n) as f64 >= units)
        .ok_or(QuboError::RangeOverflow { owner, lo, hi, step })?;
    Ok(BinaryEncoding {
        owner,
        step,
        offset: lo,
        n_bits,
        first_bit: 0,
    })
}

/// Bits needed for an integer in `[0, upper]`.
pub fn bits_for_integer(upper: i64) -> usize {
    if upper <= 0 {
        0
    } else {
        64 - (upper as u64).leading_zeros() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integer_range_zero_to_five() {
        let e = encode_value(Owner::Integer(0), 0.0, 5.0, 1.0).unwrap();
        assert_eq!(e.k_max(), Some(2));
        assert_eq!(e.upper(), 7.0);
    }

    #[test]
    fn decode_with_fine_step() {
        let e = encode_value(Owner::Zeta, 0.0, 0.07, 0.01).unwrap();
        assert_eq!(e.n_bits, 3);
        assert_eq!(e.decode(&[1, 0, 1]), 0.01 * 5.0);
        assert!((e.decode(&[1, 0, 1]) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn all_zero_and_all_one_codewords() {
        let e = encode_value(Owner::Zeta, -3.5, 10.0, 0.5).unwrap();
        assert_eq!(e.decode(&vec![0; e.n_bits]), -3.5);
        assert_eq!(e.decode(&vec![1; e.n_bits]), -3.5 + 0.5 * ((1u64 << e.n_bits) - 1) as f64);
    }

    #[test]
    fn degenerate_range_has_no_bits() {
        let e = encode_value(Owner::Integer(1), 2.0, 2.0, 1.0).unwrap();
        assert_eq!(e.n_bits, 0);
        assert_eq!(e.k_max(), None);
        assert_eq!(e.decode(&[]), 2.0);
    }

    #[test]
    fn objective_scale_zeta_needs_about_twenty_bits() {
        let e = encode_value(Owner::Zeta, 0.0, 1e5, 0.1).unwrap();
        assert_eq!(e.n_bits, 20);
    }

    #[test]
    fn decimal_bounds_do_not_gain_a_bit() {
        let lo = -87.3;
        let e = encode_value(Owner::Zeta, lo, lo + 0.3, 0.3).unwrap();
        assert_eq!(e.n_bits, 1);
        let e = encode_value(Owner::Zeta, 0.1, 0.1 + 0.7, 0.1).unwrap();
        assert_eq!(e.n_bits, 3);
    }

    #[test]
    fn invalid_ranges() {
        assert!(encode_value(Owner::Zeta, 1.0, 0.0, 1.0).is_err());
        assert!(encode_value(Owner::Zeta, 0.0, 1.0, 0.0).is_err());
        assert!(encode_value(Owner::Zeta, 0.0, 1e30, 1e-3).is_err());
    }

    #[test]
    fn integer_bits() {
        assert_eq!(bits_for_integer(0), 0);
        assert_eq!(bits_for_integer(1), 1);
        assert_eq!(bits_for_integer(3), 2);
        assert_eq!(bits_for_integer(4), 3);
    }

    proptest! {
        #[test]
        fn halving_step_adds_one_bit(units in 1u64..1_000_000, exp in -6i32..4) {
            let step = 2f64.powi(exp);
            let width = step * units as f64;
            let a = encode_value(Owner::Zeta, 0.0, width, step).unwrap();
            let b = encode_value(Owner::Zeta, 0.0, width, step / 2.0).unwrap();
            prop_assert_eq!(b.n_bits, a.n_bits + 1);
        }
    }
}
