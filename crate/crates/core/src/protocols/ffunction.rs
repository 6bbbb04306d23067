//! Non-decreasing surjections ℕ → ℕ that set the convergence speed of the
//! `sa:*` protocols, together with their "largest preimage" inverses.

use std::fmt;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

/// Inverses wider than this many bits are reported as unrepresentable.
pub const MAX_INVERSE_BITS: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FFunctionError {
    #[error("inverse at {y} does not fit in {MAX_INVERSE_BITS} bits")]
    Unrepresentable { y: u64 },
    #[error("g does not grow within a horizon of {horizon}")]
    NonDiverging { horizon: u64 },
}

/// A member of the family of non-decreasing surjective maps ℕ → ℕ.
///
/// `inverse(y)` is the largest `x` with `f(x) = y`, so `f(inverse(y)) = y` and
/// `f(inverse(y) + 1) = y + 1`.
pub trait FFunction: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn eval(&self, x: u64) -> u64;
    fn inverse(&self, y: u64) -> Result<BigUint, FFunctionError>;
}

fn all_ones(bits: u64) -> BigUint {
    (BigUint::one() << bits) - 1u32
}

/// `floor(log2(floor(log2 x)))`, with `f(x) = 0` for `x ≤ 3`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogLog;

impl FFunction for LogLog {
    fn name(&self) -> &str {
        "loglog"
    }

    fn eval(&self, x: u64) -> u64 {
        if x < 4 {
            0
        } else {
            u64::from(x.ilog2().ilog2())
        }
    }

    /// `2^(2^(y+1)) − 1`.
    fn inverse(&self, y: u64) -> Result<BigUint, FFunctionError> {
        let bits = 1u64.checked_shl(u32::try_from(y + 1).unwrap_or(u32::MAX));
        match bits {
            Some(b) if b <= MAX_INVERSE_BITS => Ok(all_ones(b)),
            _ => Err(FFunctionError::Unrepresentable { y }),
        }
    }
}

/// Iterated logarithm: number of `floor(log2 ·)` applications until the value
/// is at most 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogStar;

impl FFunction for LogStar {
    fn name(&self) -> &str {
        "logstar"
    }

    fn eval(&self, mut x: u64) -> u64 {
        let mut steps = 0;
        while x > 1 {
            x = u64::from(x.ilog2());
            steps += 1;
        }
        steps
    }

    /// `1, 3, 15, 65535, 2^65536 − 1, …`: each value is `2^(prev + 1) − 1`.
    fn inverse(&self, y: u64) -> Result<BigUint, FFunctionError> {
        let mut value = BigUint::one();
        for _ in 0..y {
            let bits = u64::try_from(&value + 1u32)
                .ok()
                .filter(|b| *b <= MAX_INVERSE_BITS)
                .ok_or(FFunctionError::Unrepresentable { y })?;
            value = all_ones(bits);
        }
        Ok(value)
    }
}

/// Diagonal Ackermann values `A(y, y)` for `y = 0..=3`. `A(4, 4)` has no
/// machine representation.
const ACKERMANN_DIAGONAL: [u64; 4] = [1, 3, 7, 61];

/// Inverse Ackermann: the least `y` with `A(y, y) ≥ x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct InverseAckermann;

impl FFunction for InverseAckermann {
    fn name(&self) -> &str {
        "invack"
    }

    fn eval(&self, x: u64) -> u64 {
        ACKERMANN_DIAGONAL
            .iter()
            .position(|&a| a >= x)
            .unwrap_or(ACKERMANN_DIAGONAL.len()) as u64
    }

    fn inverse(&self, y: u64) -> Result<BigUint, FFunctionError> {
        ACKERMANN_DIAGONAL
            .get(y as usize)
            .map(|&a| BigUint::from(a))
            .ok_or(FFunctionError::Unrepresentable { y })
    }
}

type GrowthFn = dyn Fn(u64) -> u64 + Send + Sync;

/// Member of the family built from an arbitrary diverging `g` by
/// `f(0) = 0`, `f(x) = min(max(g(x), f(x−1)), f(x−1) + 1)`.
///
/// Values are memoized; inverse searches give up past `horizon`.
pub struct FromG {
    name: String,
    g: Box<GrowthFn>,
    horizon: u64,
    memo: Mutex<Vec<u64>>,
}

/// Prefix of `g` inspected at construction to reject constant functions.
const CONSTANT_PROBE: u64 = 1 << 16;

impl FromG {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(u64) -> u64 + Send + Sync + 'static,
        horizon: u64,
    ) -> Result<Self, FFunctionError> {
        let probe = horizon.min(CONSTANT_PROBE);
        let g0 = g(0);
        if (1..=probe).all(|x| g(x) == g0) {
            return Err(FFunctionError::NonDiverging { horizon });
        }
        Ok(FromG {
            name: name.into(),
            g: Box::new(g),
            horizon,
            memo: Mutex::new(vec![0]),
        })
    }

    fn extend(&self, memo: &mut Vec<u64>, upto: usize) {
        while memo.len() <= upto {
            let x = memo.len() as u64;
            let prev = *memo.last().expect("memo starts with f(0)");
            memo.push((self.g)(x).max(prev).min(prev + 1));
        }
    }
}

impl fmt::Debug for FromG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FromG")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl FFunction for FromG {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: u64) -> u64 {
        let mut memo = self.memo.lock().expect("memo lock poisoned");
        self.extend(&mut memo, x as usize);
        memo[x as usize]
    }

    fn inverse(&self, y: u64) -> Result<BigUint, FFunctionError> {
        let mut memo = self.memo.lock().expect("memo lock poisoned");
        while *memo.last().expect("non-empty") <= y {
            if memo.len() as u64 > self.horizon {
                return Err(FFunctionError::NonDiverging {
                    horizon: self.horizon,
                });
            }
            let next = (memo.len() * 2).min(self.horizon as usize + 1);
            self.extend(&mut memo, next);
        }
        let first_above = memo.partition_point(|&v| v <= y);
        Ok(BigUint::from(first_above as u64 - 1))
    }
}

pub fn f_loglog() -> LogLog {
    LogLog
}

pub fn f_logstar() -> LogStar {
    LogStar
}

pub fn f_inv_ackermann() -> InverseAckermann {
    InverseAckermann
}

/// Default inverse-search horizon for [`f_from_g`].
pub const DEFAULT_HORIZON: u64 = 1 << 24;

pub fn f_from_g(g: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Result<FromG, FFunctionError> {
    FromG::new("from_g", g, DEFAULT_HORIZON)
}
