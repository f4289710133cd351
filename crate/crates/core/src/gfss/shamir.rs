//! Threshold secret sharing from random polynomials.
//!
//! The dealer draws a uniform polynomial of degree below the channel count
//! `n`, publishes `n + g` distinct evaluation inputs, keeps the first `g`
//! evaluations as the secret block, and sends one remaining evaluation per
//! channel as that channel's share. Since the polynomial has `n` coefficients
//! the threshold is `t = n`: all shares are needed for reconstruction, and up
//! to `delta = t - g` exposed shares leave every secret coordinate uniform.

use super::field::{lagrange_eval, Polynomial, PrimeField};
use super::{element_from_bits, GfssError};
use crate::prng::SplitMix64;

/// Parameters of one threshold scheme instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdScheme {
    field: PrimeField,
    n: usize,
    g: usize,
    inputs: Vec<u64>,
}

impl ThresholdScheme {
    /// Scheme with the default input assignment `x_i = i`.
    pub fn new(q: u64, n: usize, g: usize) -> Result<Self, GfssError> {
        let inputs = (0..(n + g) as u64).collect();
        Self::with_inputs(q, n, g, inputs)
    }

    /// Scheme over custom distinct evaluation inputs; the first `g` carry the
    /// secret, the remaining `n` are the per-channel share points.
    pub fn with_inputs(q: u64, n: usize, g: usize, inputs: Vec<u64>) -> Result<Self, GfssError> {
        let field = PrimeField::new(q)?;
        if g < 1 || g >= n || q <= (n + g) as u64 {
            return Err(GfssError::BadThresholdParams { q, n, g });
        }
        if inputs.len() != n + g {
            return Err(GfssError::WrongShareCount {
                expected: n + g,
                got: inputs.len(),
            });
        }
        for &x in &inputs {
            field.check(x)?;
        }
        let mut seen = inputs.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != inputs.len() {
            return Err(GfssError::DuplicateInputs);
        }
        Ok(Self {
            field,
            n,
            g,
            inputs,
        })
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn secret_len(&self) -> usize {
        self.g
    }

    /// Threshold of the underlying polynomial; equals the channel count.
    pub fn threshold(&self) -> usize {
        self.n
    }

    /// Largest number of exposed shares that reveals nothing: t - g.
    pub fn delta(&self) -> usize {
        self.n - self.g
    }

    pub fn secret_inputs(&self) -> &[u64] {
        &self.inputs[..self.g]
    }

    pub fn share_inputs(&self) -> &[u64] {
        &self.inputs[self.g..]
    }
}

/// One dealt instance: the polynomial, the secret block, and the shares
/// paired with their public inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShamirDeal {
    pub polynomial: Polynomial,
    pub secret: Vec<u64>,
    pub shares: Vec<(u64, u64)>,
}

/// Deal with coefficients drawn uniformly from the seed.
pub fn shamir_deal(scheme: &ThresholdScheme, seed: u64) -> ShamirDeal {
    let mut rng = SplitMix64::new(seed);
    let coeffs = (0..scheme.n)
        .map(|_| scheme.field.sample(&mut rng))
        .collect();
    let polynomial = Polynomial::new(&scheme.field, coeffs).expect("sampled in range");
    shamir_deal_with_polynomial(scheme, polynomial)
}

/// Deal from an explicit polynomial (degree bound must equal the threshold).
pub fn shamir_deal_with_polynomial(scheme: &ThresholdScheme, polynomial: Polynomial) -> ShamirDeal {
    assert_eq!(
        polynomial.degree_bound(),
        scheme.n,
        "polynomial must have t = n coefficients"
    );
    let secret = scheme
        .secret_inputs()
        .iter()
        .map(|&x| polynomial.eval(&scheme.field, x))
        .collect();
    let shares = scheme
        .share_inputs()
        .iter()
        .map(|&x| (x, polynomial.eval(&scheme.field, x)))
        .collect();
    ShamirDeal {
        polynomial,
        secret,
        shares,
    }
}

/// Reconstruct the secret block from all n shares by Lagrange interpolation.
pub fn shamir_recover(
    scheme: &ThresholdScheme,
    shares: &[(u64, u64)],
) -> Result<Vec<u64>, GfssError> {
    if shares.len() != scheme.n {
        return Err(GfssError::WrongShareCount {
            expected: scheme.n,
            got: shares.len(),
        });
    }
    let mut xs: Vec<u64> = shares.iter().map(|&(x, _)| x).collect();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() != shares.len() {
        return Err(GfssError::DuplicateInputs);
    }
    scheme
        .secret_inputs()
        .iter()
        .map(|&x| lagrange_eval(&scheme.field, shares, x))
        .collect()
}

/// Ciphertexts and per-channel key consumption from padding a share batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadOutcome {
    pub ciphertexts: Vec<u64>,
    pub bits_consumed: Vec<u64>,
}

/// One-time-pad each share with a field element extracted from its channel's
/// key bits: `c = s + k mod q`.
pub fn shamir_pad(
    field: &PrimeField,
    shares: &[u64],
    channel_keys: &[Vec<bool>],
) -> Result<PadOutcome, GfssError> {
    if shares.len() != channel_keys.len() {
        return Err(GfssError::WrongShareCount {
            expected: shares.len(),
            got: channel_keys.len(),
        });
    }
    let mut ciphertexts = Vec::with_capacity(shares.len());
    let mut bits_consumed = Vec::with_capacity(shares.len());
    for (&share, key) in shares.iter().zip(channel_keys) {
        field.check(share)?;
        let mut iter = key.iter().copied();
        let (pad, consumed) = element_from_bits(field, || iter.next())?;
        ciphertexts.push(field.add(share, pad));
        bits_consumed.push(consumed);
    }
    Ok(PadOutcome {
        ciphertexts,
        bits_consumed,
    })
}

/// Invert [`shamir_pad`] given the same channel key bits.
pub fn shamir_unpad(
    field: &PrimeField,
    ciphertexts: &[u64],
    channel_keys: &[Vec<bool>],
) -> Result<Vec<u64>, GfssError> {
    if ciphertexts.len() != channel_keys.len() {
        return Err(GfssError::WrongShareCount {
            expected: ciphertexts.len(),
            got: channel_keys.len(),
        });
    }
    let mut shares = Vec::with_capacity(ciphertexts.len());
    for (&cipher, key) in ciphertexts.iter().zip(channel_keys) {
        field.check(cipher)?;
        let mut iter = key.iter().copied();
        let (pad, _) = element_from_bits(field, || iter.next())?;
        shares.push(field.sub(cipher, pad));
    }
    Ok(shares)
}

/// Distribution of each secret coordinate over all polynomials consistent
/// with a set of exposed shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakageReport {
    /// `coordinate_counts[i][value]` = number of consistent polynomials whose
    /// i-th secret coordinate equals `value`.
    pub coordinate_counts: Vec<Vec<u64>>,
    pub consistent_polynomials: u64,
}

impl LeakageReport {
    /// True iff every secret coordinate is exactly uniform.
    pub fn all_coordinates_uniform(&self) -> bool {
        self.coordinate_counts.iter().all(|counts| {
            let first = counts[0];
            first > 0 && counts.iter().all(|&c| c == first)
        })
    }

    /// True iff exactly one secret is consistent.
    pub fn fully_determined(&self) -> bool {
        self.consistent_polynomials >= 1
            && self
                .coordinate_counts
                .iter()
                .all(|counts| counts.iter().filter(|&&c| c > 0).count() == 1)
    }
}

const LEAKAGE_ENUMERATION_CAP: u128 = 2_000_000;

/// Exhaustively enumerate all q^t polynomials and tally the secret
/// coordinates of those consistent with the exposed `(input, share)` pairs.
pub fn shamir_leakage_check(
    scheme: &ThresholdScheme,
    exposed: &[(u64, u64)],
) -> Result<LeakageReport, GfssError> {
    let q = scheme.field.q();
    let total = (q as u128).pow(scheme.n as u32);
    if total > LEAKAGE_ENUMERATION_CAP {
        return Err(GfssError::InstanceTooLarge(total));
    }
    for &(x, y) in exposed {
        scheme.field.check(x)?;
        scheme.field.check(y)?;
    }
    let mut coordinate_counts = vec![vec![0u64; q as usize]; scheme.g];
    let mut consistent = 0u64;
    let mut coeffs = vec![0u64; scheme.n];
    loop {
        let poly = Polynomial::new(&scheme.field, coeffs.clone()).expect("in range");
        if exposed
            .iter()
            .all(|&(x, y)| poly.eval(&scheme.field, x) == y)
        {
            consistent += 1;
            for (i, &x) in scheme.secret_inputs().iter().enumerate() {
                coordinate_counts[i][poly.eval(&scheme.field, x) as usize] += 1;
            }
        }
        // odometer over GF(q)^n
        let mut position = 0;
        loop {
            if position == coeffs.len() {
                return Ok(LeakageReport {
                    coordinate_counts,
                    consistent_polynomials: consistent,
                });
            }
            coeffs[position] += 1;
            if coeffs[position] < q {
                break;
            }
            coeffs[position] = 0;
            position += 1;
        }
    }
}
