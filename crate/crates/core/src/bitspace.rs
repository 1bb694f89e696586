//! Bit strings, the generalized OneMax family and good/bad-bit accounting.
//!
//! Positions are 0-based in code. A string prints and parses as a sequence
//! of `0`/`1` characters with position 0 first.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampling::sample_k_subset;

const WORD: usize = 64;

/// Fixed-length binary string stored in 64-bit words.
///
/// Bits beyond `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        s.clear_tail();
        s
    }

    /// Uniformly random string.
    pub fn random(len: usize, rng: &mut RngStream) -> Self {
        let mut s = Self {
            words: (0..len.div_ceil(WORD)).map(|_| rng.next_u64()).collect(),
            len,
        };
        s.clear_tail();
        s
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % WORD == 0 {
                words.push(0);
            }
            if b {
                words[len / WORD] |= 1 << (len % WORD);
            }
            len += 1;
        }
        Self { words, len }
    }

    /// Builds a string from bytes that must each be 0 or 1.
    pub fn from_bytes(bits: &[u8]) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!(
                "bit value {bad} is neither 0 nor 1"
            )));
        }
        Ok(Self::from_bools(bits.iter().map(|&b| b == 1)))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub(crate) fn flip_in_place(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    /// Copy of `self` with the given positions flipped. Repeated positions
    /// flip repeatedly.
    pub fn with_flipped(&self, positions: &[usize]) -> Self {
        let mut out = self.clone();
        for &i in positions {
            out.flip_in_place(i);
        }
        out
    }

    pub fn complement(&self) -> Self {
        let mut out = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len == other.len {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            })
        }
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Positions where the two strings differ, ascending.
    pub fn diff_positions(&self, other: &Self) -> Result<Vec<usize>> {
        self.check_len(other)?;
        let mut out = Vec::new();
        for (w, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut x = a ^ b;
            while x != 0 {
                out.push(w * WORD + x.trailing_zeros() as usize);
                x &= x - 1;
            }
        }
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    /// Bits packed into an integer, position `i` at bit `i`. Only for
    /// strings of at most 64 bits.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= WORD);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mut s = Self {
            words: if len == 0 { vec![] } else { vec![index] },
            len,
        };
        s.clear_tail();
        s
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bools)
    }
}

/// `OM_z`: counts the positions where a string agrees with the target `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneMaxInstance {
    target: BitString,
}

impl OneMaxInstance {
    pub fn new(target: BitString) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::InvalidParameter("problem size must be positive".into()));
        }
        Ok(Self { target })
    }

    /// Classic OneMax: the target is the all-ones string.
    pub fn classic(n: usize) -> Result<Self> {
        Self::new(BitString::ones(n))
    }

    pub fn random(n: usize, rng: &mut RngStream) -> Result<Self> {
        Self::new(BitString::random(n, rng))
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &BitString {
        &self.target
    }

    fn check(&self, x: &BitString) -> Result<()> {
        if x.len() == self.n() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n(),
                actual: x.len(),
            })
        }
    }

    pub fn evaluate(&self, x: &BitString) -> Result<usize> {
        Ok(self.n() - self.fitness_distance(x)?)
    }

    /// `d(x) = n - OM_z(x)`, the number of disagreeing positions.
    pub fn fitness_distance(&self, x: &BitString) -> Result<usize> {
        self.check(x)?;
        x.hamming(&self.target)
    }

    /// True when position `i` of `x` disagrees with the target.
    #[inline]
    pub(crate) fn is_wrong(&self, x: &BitString, i: usize) -> bool {
        x.get(i) != self.target.get(i)
    }

    /// Good/bad-bit accounting of `xp` relative to the parent `x`, and of
    /// `y` relative to both when given.
    pub fn account(
        &self,
        x: &BitString,
        xp: &BitString,
        y: Option<&BitString>,
    ) -> Result<BitAccounting> {
        self.check(x)?;
        self.check(xp)?;
        if let Some(y) = y {
            self.check(y)?;
        }
        let mut acc = BitAccounting {
            surviving_good: y.map(|_| 0),
            surviving_bad: y.map(|_| 0),
            ..BitAccounting::default()
        };
        for i in x.diff_positions(xp)? {
            let good = self.is_wrong(x, i);
            let survived = y.is_some_and(|y| y.get(i) == xp.get(i));
            if good {
                acc.good += 1;
                if survived {
                    *acc.surviving_good.as_mut().unwrap() += 1;
                }
            } else {
                acc.bad += 1;
                if survived {
                    *acc.surviving_bad.as_mut().unwrap() += 1;
                }
            }
        }
        acc.hamming = acc.good + acc.bad;
        Ok(acc)
    }

    /// Random string at fitness distance exactly `d`; the wrong positions
    /// form a uniform `d`-subset.
    pub fn make_state_at_distance(&self, d: usize, rng: &mut RngStream) -> Result<BitString> {
        if d > self.n() {
            return Err(Error::OutOfRange {
                what: "fitness distance",
                value: d as u64,
                min: 0,
                max: self.n() as u64,
            });
        }
        let flips = sample_k_subset(self.n(), d, rng)?;
        Ok(self.target.with_flipped(&flips))
    }
}

/// Counts of good and bad bits between a parent and an offspring.
///
/// `good`: positions where the parent is wrong and the offspring differs
/// from it (so is right). `bad`: positions where the parent is right and
/// the offspring differs. The surviving counts restrict these to positions
/// where a third string `y` carries the offspring's bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BitAccounting {
    pub good: usize,
    pub bad: usize,
    pub surviving_good: Option<usize>,
    pub surviving_bad: Option<usize>,
    pub hamming: usize,
}
