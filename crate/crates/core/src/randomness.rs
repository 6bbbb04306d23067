//! Bit-counting entropy source and the per-robot bit ledger.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RandomnessError {
    #[error("weight list is empty")]
    NoWeights,
    #[error("weights sum to zero")]
    ZeroTotalWeight,
    #[error("weights overflow a 64-bit total")]
    WeightOverflow,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a batch: `splitmix64(splitmix64(master) ^ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Bits needed to write any value in `0..k`, i.e. `ceil(log2 k)`; 0 for `k ≤ 1`.
pub fn word_width(k: u64) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

/// `ceil(log2 k)` for arbitrary-precision `k`.
pub fn word_width_big(k: &BigUint) -> u64 {
    if k <= &BigUint::one() {
        0
    } else {
        (k - 1u32).bits()
    }
}

/// A seeded stream of raw bits that counts everything it hands out.
///
/// Uniform choices use rejection sampling on `ceil(log2 k)`-bit words: draw a
/// word, retry while it is `≥ k`. Every attempt is charged in full, so each call
/// costs at least `ceil(log2 k)` bits and `k = 1` costs nothing.
#[derive(Clone, Debug)]
pub struct BitSource {
    seed: u64,
    rng: ChaCha8Rng,
    buffer: u64,
    buffered: u32,
    bits_drawn: u64,
}

impl BitSource {
    pub fn new(seed: u64) -> Self {
        BitSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            buffer: 0,
            buffered: 0,
            bits_drawn: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total raw bits consumed so far.
    pub fn bits_drawn(&self) -> u64 {
        self.bits_drawn
    }

    /// `width` fresh bits (`width ≤ 64`) as the low bits of a word.
    pub fn draw_bits(&mut self, width: u32) -> u64 {
        assert!(width <= 64, "at most 64 bits per word");
        self.bits_drawn += u64::from(width);
        let mut out = 0u64;
        let mut filled = 0u32;
        while filled < width {
            if self.buffered == 0 {
                self.buffer = self.rng.next_u64();
                self.buffered = 64;
            }
            let take = (width - filled).min(self.buffered);
            let chunk = if take == 64 {
                self.buffer
            } else {
                self.buffer & ((1u64 << take) - 1)
            };
            out |= chunk << filled;
            self.buffer = if take == 64 { 0 } else { self.buffer >> take };
            self.buffered -= take;
            filled += take;
        }
        out
    }

    /// `width` fresh bits as an arbitrary-precision natural.
    pub fn draw_big_bits(&mut self, width: u64) -> BigUint {
        let mut digits = Vec::with_capacity(width.div_ceil(64) as usize);
        let mut left = width;
        while left > 0 {
            let w = left.min(64) as u32;
            digits.push(self.draw_bits(w));
            left -= u64::from(w);
        }
        let mut out = BigUint::zero();
        for d in digits.into_iter().rev() {
            out <<= 64u32;
            out += d;
        }
        out
    }

    /// Exactly uniform over `0..k`. Panics if `k == 0`.
    pub fn uniform_index(&mut self, k: u64) -> u64 {
        assert!(k >= 1, "uniform_index needs k >= 1");
        let width = word_width(k);
        loop {
            let v = self.draw_bits(width);
            if v < k {
                return v;
            }
        }
    }

    /// Exactly uniform over `0..k` for arbitrary-precision `k`.
    pub fn uniform_index_big(&mut self, k: &BigUint) -> BigUint {
        assert!(!k.is_zero(), "uniform_index needs k >= 1");
        if let Some(small) = k.to_u64() {
            return BigUint::from(self.uniform_index(small));
        }
        let width = word_width_big(k);
        loop {
            let v = self.draw_big_bits(width);
            if &v < k {
                return v;
            }
        }
    }

    /// Index `i` with probability `weights[i] / W`: a uniform draw over `0..W`
    /// followed by a bucket lookup, so it costs the same bits as `uniform_index(W)`.
    pub fn weighted_index(&mut self, weights: &[u64]) -> Result<usize, RandomnessError> {
        if weights.is_empty() {
            return Err(RandomnessError::NoWeights);
        }
        let total = weights
            .iter()
            .try_fold(0u64, |acc, &w| acc.checked_add(w))
            .ok_or(RandomnessError::WeightOverflow)?;
        if total == 0 {
            return Err(RandomnessError::ZeroTotalWeight);
        }
        let mut ticket = self.uniform_index(total);
        for (i, &w) in weights.iter().enumerate() {
            if ticket < w {
                return Ok(i);
            }
            ticket -= w;
        }
        unreachable!("ticket below total weight")
    }
}

/// Random bits charged to robots, keyed by `(robot, round)`.
///
/// Only robots standing on a point of multiplicity at least 2 when they Look
/// are charged; bits spent by already-scattered robots are dropped here, so
/// protocols stay oblivious to accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitLedger {
    entries: BTreeMap<(usize, u64), u64>,
    per_robot: Vec<u64>,
    total: u64,
}

impl BitLedger {
    pub fn new(robots: usize) -> Self {
        BitLedger {
            entries: BTreeMap::new(),
            per_robot: vec![0; robots],
            total: 0,
        }
    }

    /// Records `bits` for `robot` in `round`; returns whether they were counted.
    pub fn record(
        &mut self,
        robot: usize,
        round: u64,
        bits: u64,
        look_multiplicity: usize,
    ) -> bool {
        if look_multiplicity < 2 {
            return false;
        }
        *self.entries.entry((robot, round)).or_insert(0) += bits;
        self.per_robot[robot] += bits;
        self.total += bits;
        true
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn robot_total(&self, robot: usize) -> u64 {
        self.per_robot[robot]
    }

    pub fn entry(&self, robot: usize, round: u64) -> Option<u64> {
        self.entries.get(&(robot, round)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, u64), u64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Largest charge of any robot within `round`.
    pub fn round_max(&self, round: u64) -> u64 {
        self.entries
            .iter()
            .filter(|((_, r), _)| *r == round)
            .map(|(_, &b)| b)
            .max()
            .unwrap_or(0)
    }

    /// Largest charge of any single `(robot, round)` entry.
    pub fn max_entry(&self) -> u64 {
        self.entries.values().copied().max().unwrap_or(0)
    }
}
