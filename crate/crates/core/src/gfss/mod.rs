//! Secret sharing over prime fields.
//!
//! Two constructions are provided. [`shamir`] is a threshold scheme built on
//! random polynomials: the secret is a block of `g` polynomial evaluations
//! and the threshold equals the channel count, so strictly fewer than all
//! shares reveal nothing about any secret coordinate. [`linear`] builds
//! schemes from linear codes, where the recoverable share subsets form an
//! explicit access structure read off the parity-check row space.
//!
//! Shares travel over rated key channels one-time-padded with field elements
//! extracted from the channel key stream; [`element_from_bits`] performs that
//! extraction by rejection sampling so pad elements stay uniform.

mod field;
pub mod linear;
pub mod shamir;

pub use field::{Polynomial, PrimeField};
pub use linear::{
    access_structure_code, lc_deal, lc_minimal_access, lc_recovery_vector, lc_validate,
    parse_code_document, recover_with_vector, AccessReport, LcDeal, LinearCode,
};
pub use shamir::{
    shamir_deal, shamir_deal_with_polynomial, shamir_leakage_check, shamir_pad, shamir_recover,
    shamir_unpad, LeakageReport, PadOutcome, ShamirDeal, ThresholdScheme,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GfssError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the supported bound 2^31")]
    FieldTooLarge(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u64, q: u64 },
    #[error("invalid threshold parameters q={q}, n={n}, g={g}: need 1 <= g < n and q > n+g")]
    BadThresholdParams { q: u64, n: usize, g: usize },
    #[error("evaluation inputs must be pairwise distinct")]
    DuplicateInputs,
    #[error("expected {expected} shares, got {got}")]
    WrongShareCount { expected: usize, got: usize },
    #[error("channel key stream exhausted")]
    KeyStreamExhausted,
    #[error("instance too large for exhaustive analysis ({0} cases)")]
    InstanceTooLarge(u128),
    #[error("matrix dimensions are inconsistent: {0}")]
    Dimensions(String),
    #[error("parity row {row} is not orthogonal to generator row {col}")]
    NotOrthogonal { row: usize, col: usize },
    #[error("{matrix} matrix must have rank {expected}, found {got}")]
    RankDeficient {
        matrix: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("secret column of the generator matrix is zero")]
    ZeroSecretColumn,
    #[error("participant index {0} is out of range")]
    BadParticipant(usize),
    #[error("code document is malformed: {0}")]
    BadCodeDocument(String),
}

/// Extract one uniform element of `field` from a key bit stream.
///
/// Bits are consumed most-significant first in windows of the field's bit
/// width; windows that encode `q` or more are rejected and the next window is
/// drawn. Returns the element and the number of bits consumed (a multiple of
/// the window width). The expected consumption per element is
/// `w * 2^w / q` bits for window width `w`.
pub fn element_from_bits(
    field: &PrimeField,
    mut next_bit: impl FnMut() -> Option<bool>,
) -> Result<(u64, u64), GfssError> {
    let width = field.bits();
    let mut consumed = 0u64;
    loop {
        let mut window = 0u64;
        for _ in 0..width {
            let bit = next_bit().ok_or(GfssError::KeyStreamExhausted)?;
            window = window << 1 | u64::from(bit);
            consumed += 1;
        }
        if window < field.q() {
            return Ok((window, consumed));
        }
    }
}

/// Serialize a field element to its fixed-width bit window, MSB first.
///
/// Inverse of the accepting window in [`element_from_bits`].
pub fn element_to_bits(field: &PrimeField, value: u64) -> Vec<bool> {
    let width = field.bits();
    (0..width).rev().map(|i| value >> i & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn rejection_sampling_trace() {
        // q = 7 has 3-bit windows; "111" encodes 7 and is rejected.
        let field = PrimeField::new(7).unwrap();
        let stream = bits("111010");
        let mut iter = stream.into_iter();
        let (element, consumed) = element_from_bits(&field, || iter.next()).unwrap();
        assert_eq!(element, 0b010);
        assert_eq!(consumed, 6);
    }

    #[test]
    fn accepting_window_consumes_exactly_width() {
        let field = PrimeField::new(7).unwrap();
        let stream = bits("110");
        let mut iter = stream.into_iter();
        let (element, consumed) = element_from_bits(&field, || iter.next()).unwrap();
        assert_eq!(element, 6);
        assert_eq!(consumed, 3);
    }

    #[test]
    fn exhausted_stream_is_an_error() {
        let field = PrimeField::new(7).unwrap();
        let stream = bits("11");
        let mut iter = stream.into_iter();
        assert_eq!(
            element_from_bits(&field, || iter.next()),
            Err(GfssError::KeyStreamExhausted)
        );
    }

    #[test]
    fn gf2_never_rejects() {
        let field = PrimeField::new(2).unwrap();
        let stream = bits("101");
        let mut iter = stream.into_iter();
        for expected in [1, 0, 1] {
            let (element, consumed) = element_from_bits(&field, || iter.next()).unwrap();
            assert_eq!((element, consumed), (expected, 1));
        }
    }

    #[test]
    fn element_bits_round_trip() {
        let field = PrimeField::new(11).unwrap();
        for value in 0..11 {
            let encoded = element_to_bits(&field, value);
            assert_eq!(encoded.len(), 4);
            let mut iter = encoded.into_iter();
            let (decoded, consumed) = element_from_bits(&field, || iter.next()).unwrap();
            assert_eq!((decoded, consumed), (value, 4));
        }
    }

    #[test]
    fn expected_consumption_matches_rejection_analysis() {
        // Expected bits per element is w * 2^w / q; check empirically.
        let field = PrimeField::new(7).unwrap();
        let mut stream = crate::prng::KeyStream::new(99, "consumption");
        let trials = 4000u64;
        let mut total = 0u64;
        for _ in 0..trials {
            let (_, consumed) = element_from_bits(&field, || Some(stream.next_bit())).unwrap();
            total += consumed;
        }
        let mean = total as f64 / trials as f64;
        let expected = 3.0 * 8.0 / 7.0;
        assert!((mean - expected).abs() < 0.1, "mean consumption {mean}");
    }
}
