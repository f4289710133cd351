//! Prime-field arithmetic substrate.

use super::GfssError;

/// The field GF(q) for a prime modulus q, bounded to 2^31.
///
/// Primality is established by deterministic trial division at construction,
/// so every constructed field is valid by type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, GfssError> {
        if q > 1 << 31 {
            return Err(GfssError::FieldTooLarge(q));
        }
        if !is_prime(q) {
            return Err(GfssError::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Window width for serializing elements: the bit length of q - 1.
    pub fn bits(&self) -> u32 {
        64 - (self.q - 1).leading_zeros()
    }

    pub fn check(&self, value: u64) -> Result<u64, GfssError> {
        if value < self.q {
            Ok(value)
        } else {
            Err(GfssError::OutOfRange { value, q: self.q })
        }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.q - b % self.q) % self.q
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.q - a % self.q) % self.q
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // operands stay below 2^31, so the product fits in u64
        (a % self.q) * (b % self.q) % self.q
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut base = base % self.q;
        let mut acc = 1 % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64, GfssError> {
        if a.is_multiple_of(self.q) {
            return Err(GfssError::ZeroInverse);
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Uniform element drawn from a seeded generator.
    pub fn sample(&self, rng: &mut crate::prng::SplitMix64) -> u64 {
        rng.next_below(self.q)
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut d = 3u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Polynomial over GF(q) given by its coefficient list `a_0..a_{t-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<u64>,
}

impl Polynomial {
    pub fn new(field: &PrimeField, coeffs: Vec<u64>) -> Result<Self, GfssError> {
        for &c in &coeffs {
            field.check(c)?;
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, field: &PrimeField, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = field.add(field.mul(acc, x), c);
        }
        acc
    }
}

/// Interpolate the unique polynomial of degree < points.len() through the
/// given points and evaluate it at `x`.
pub fn lagrange_eval(field: &PrimeField, points: &[(u64, u64)], x: u64) -> Result<u64, GfssError> {
    let mut acc = 0u64;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut numerator = 1u64;
        let mut denominator = 1u64;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            numerator = field.mul(numerator, field.sub(x, xj));
            denominator = field.mul(denominator, field.sub(xi, xj));
        }
        if denominator == 0 {
            return Err(GfssError::DuplicateInputs);
        }
        let weight = field.mul(numerator, field.inv(denominator)?);
        acc = field.add(acc, field.mul(yi, weight));
    }
    Ok(acc)
}
