//! Deterministic pseudo-random expansion used everywhere randomness is needed.
//!
//! Simulations and secret-sharing deals must be reproducible from an explicit
//! seed, so no global randomness source is used anywhere in the crate. The
//! expansion function is fixed so that golden-file tests stay portable:
//!
//! - [`SplitMix64`] is the SplitMix64 generator (Steele et al.): state advances
//!   by the 64-bit golden ratio and each output is the finalizer mix of the
//!   new state.
//! - A labeled key stream for `(seed, label)` is the SplitMix64 sequence
//!   seeded with `seed ^ fnv1a64(label)`; bit `j` of the stream is bit
//!   `j % 64` (least significant first) of output word `j / 64`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 pseudo-random generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Uniform value in `[0, bound)` by rejection on the top multiple of `bound`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}

/// FNV-1a 64-bit hash, used to derive per-label stream seeds and key digests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic bit stream for a labeled key source.
///
/// Identical `(seed, label)` always yields identical bits; distinct labels
/// give independent-looking streams.
#[derive(Debug, Clone)]
pub struct KeyStream {
    rng: SplitMix64,
    word: u64,
    bits_left: u32,
    position: u64,
}

impl KeyStream {
    pub fn new(seed: u64, label: &str) -> Self {
        Self {
            rng: SplitMix64::new(seed ^ fnv1a64(label.as_bytes())),
            word: 0,
            bits_left: 0,
            position: 0,
        }
    }

    /// Index of the next bit this stream will emit.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn next_bit(&mut self) -> bool {
        if self.bits_left == 0 {
            self.word = self.rng.next_u64();
            self.bits_left = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.bits_left -= 1;
        self.position += 1;
        bit
    }

    pub fn take(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.next_bit()).collect()
    }
}

/// FNV-1a digest of a bit string, packed most-significant-bit first per byte.
pub fn digest_bits(bits: &[bool]) -> u64 {
    let mut bytes = Vec::with_capacity(bits.len() / 8 + 1);
    for chunk in bits.chunks(8) {
        let mut b = 0u8;
        for (i, &bit) in chunk.iter().enumerate() {
            if bit {
                b |= 1 << (7 - i);
            }
        }
        bytes.push(b);
    }
    bytes.push(bits.len() as u8);
    fnv1a64(&bytes)
}
