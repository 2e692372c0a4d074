//! Seeded stand-in for `d` independent, fully random hash functions.

use thiserror::Error;

/// Keys are opaque 64-bit values; see [`key_from_bytes`] for byte strings.
pub type Key = u64;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("hash index {index} outside [1, {d}]")]
pub struct IndexError {
    pub index: usize,
    pub d: usize,
}

const SEED_SALT: u64 = 0x6a09_e667_f3bc_c908;
const INDEX_MUL: u64 = 0x9e37_79b9_7f4a_7c15;
const RETRY_MUL: u64 = 0xd6e8_feb8_6659_fd93;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pre-hash an arbitrary byte string to a 64-bit key.
pub fn key_from_bytes(bytes: &[u8]) -> Key {
    let mut h = SEED_SALT ^ bytes.len() as u64;
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = mix64(h ^ u64::from_le_bytes(word)).wrapping_add(INDEX_MUL);
    }
    mix64(h)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashOracle {
    seed: u64,
    seed_key: u64,
    n: usize,
    d: usize,
}

impl HashOracle {
    pub fn new(seed: u64, n: usize, d: usize) -> Self {
        assert!(n > 0, "hash range must be non-empty");
        HashOracle {
            seed,
            seed_key: mix64(seed ^ SEED_SALT),
            n,
            d,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `h_i(x)` for `i` in `[1, d]`.
    pub fn hash(&self, x: Key, i: usize) -> Result<usize, IndexError> {
        if i == 0 || i > self.d {
            return Err(IndexError { index: i, d: self.d });
        }
        Ok(self.slot(x, i))
    }

    /// `(h_1(x), ..., h_k(x))`.
    pub fn hashes_up_to(&self, x: Key, k: usize) -> Result<Vec<usize>, IndexError> {
        if k == 0 || k > self.d {
            return Err(IndexError { index: k, d: self.d });
        }
        Ok((1..=k).map(|i| self.slot(x, i)).collect())
    }

    /// Unchecked `h_i(x)`; callers guarantee `1 <= i <= d`.
    #[inline]
    pub(crate) fn slot(&self, x: Key, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.d);
        let base = mix64(self.seed_key ^ mix64(x));
        let word = |retry: u64| {
            mix64(base.wrapping_add((i as u64).wrapping_mul(INDEX_MUL)) ^ retry.wrapping_mul(RETRY_MUL))
        };
        reduce(self.n as u64, word) as usize
    }
}

/// Lemire's multiply-high reduction with rejection: unbiased over `[0, n)`.
#[inline]
fn reduce(n: u64, mut word: impl FnMut(u64) -> u64) -> u64 {
    let mut retry = 0u64;
    let mut m = (word(retry) as u128) * (n as u128);
    if (m as u64) < n {
        let threshold = n.wrapping_neg() % n;
        while (m as u64) < threshold {
            retry += 1;
            m = (word(retry) as u128) * (n as u128);
        }
    }
    (m >> 64) as u64
}
