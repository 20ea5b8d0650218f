//! Maximal elements: `p` with `π(p) = 2^{bit(p−1)}`.
//!
//! They are recognized by the shape of `p − 1`,
//!
//! ```text
//! 1 0^{b₀} 1^{2^{a₁}} 0^{b₁·2^{a₁}} … 1^{2^{a_r}} 0^{b_r·2^{a_r}},   a₁ < … < a_r
//! ```
//!
//! and the row of a maximal element lists the binary subsets of `p − 1` in
//! increasing order, so products are a bit scatter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::element::{bit_count, bit_length, check, ElementId};
use crate::error::{domain, Error, Result};
use crate::ld::Laver;

/// One `1^{2^a} 0^{b·2^a}` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub a: u32,
    pub b: u64,
}

/// The parsed shape of `p − 1` for a maximal `p ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalPattern {
    pub b0: u32,
    pub blocks: Vec<Block>,
}

impl MaximalPattern {
    /// Greedy most-significant-first parse of `p − 1`. `None` if `p − 1` has
    /// no such shape (including `p ≤ 1`).
    pub fn parse(p: u64) -> Option<Self> {
        if p < 2 {
            return None;
        }
        let word = p - 1;
        // Bits still unread below the cursor; the leader is consumed.
        let mut left = bit_length(word) - 1;
        let b0 = if left > 0 {
            run_length(word, left - 1, false)
        } else {
            0
        };
        left -= b0;
        let mut blocks: Vec<Block> = Vec::new();
        while left > 0 {
            let ones = run_length(word, left - 1, true);
            left -= ones;
            let mut run = ones as u64;
            while run != 0 {
                let a = run.trailing_zeros();
                if blocks.last().is_some_and(|last| last.a >= a) {
                    return None;
                }
                blocks.push(Block { a, b: 0 });
                run &= run - 1;
            }
            let zeros = if left > 0 {
                run_length(word, left - 1, false)
            } else {
                0
            };
            left -= zeros;
            let last = blocks.last_mut().unwrap();
            let unit = 1u64 << last.a;
            if !(zeros as u64).is_multiple_of(unit) {
                return None;
            }
            last.b = zeros as u64 / unit;
        }
        Some(Self { b0, blocks })
    }

    /// The word `p − 1`.
    pub fn word(&self) -> Result<u64> {
        let mut word: u64 = 1;
        let mut len: u32 = 1;
        let mut push = |bit: bool, count: u64| -> Result<()> {
            if count == 0 {
                return Ok(());
            }
            if len as u64 + count > 62 {
                return Err(Error::Overflow("maximal word exceeds 62 bits".into()));
            }
            let c = count as u32;
            word <<= c;
            if bit {
                word |= (1u64 << c) - 1;
            }
            len += c;
            Ok(())
        };
        push(false, self.b0 as u64)?;
        for blk in &self.blocks {
            if blk.a >= 62 {
                return Err(Error::Overflow("maximal word exceeds 62 bits".into()));
            }
            let unit = 1u64 << blk.a;
            push(true, unit)?;
            let zeros = blk
                .b
                .checked_mul(unit)
                .ok_or_else(|| Error::Overflow("maximal word exceeds 62 bits".into()))?;
            push(false, zeros)?;
        }
        Ok(word)
    }

    /// `log₂ π(p) = 1 + Σ 2^{a_i}`.
    pub fn period_exponent(&self) -> u32 {
        1 + self.blocks.iter().map(|b| 1u32 << b.a).sum::<u32>()
    }

    pub fn partition(&self) -> BinaryPartition {
        BinaryPartition {
            parts: self
                .blocks
                .iter()
                .map(|b| Part {
                    exponent: b.a,
                    multiplicity: b.b + 1,
                })
                .collect(),
        }
    }
}

/// Length of the run of `bit` values starting at `pos` and moving down.
fn run_length(word: u64, pos: u32, bit: bool) -> u32 {
    let below = if pos == 63 {
        word
    } else {
        word & ((2u64 << pos) - 1)
    };
    let shifted = below << (63 - pos);
    if bit {
        shifted.leading_ones().min(pos + 1)
    } else {
        shifted.leading_zeros().min(pos + 1)
    }
}

/// One part size `2^exponent` taken `multiplicity` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub exponent: u32,
    pub multiplicity: u64,
}

/// A partition into powers of two, parts kept in increasing size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryPartition {
    parts: Vec<Part>,
}

impl BinaryPartition {
    /// Sorts and merges the given parts; zero multiplicities are rejected.
    pub fn new(parts: impl IntoIterator<Item = Part>) -> Result<Self> {
        let mut parts: Vec<Part> = parts.into_iter().collect();
        if let Some(p) = parts.iter().find(|p| p.multiplicity == 0) {
            return Err(domain(format!("part 2^{} has multiplicity 0", p.exponent)));
        }
        if let Some(p) = parts.iter().find(|p| p.exponent >= 62) {
            return Err(domain(format!("part 2^{} is too large", p.exponent)));
        }
        parts.sort_by_key(|p| p.exponent);
        let mut merged: Vec<Part> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if last.exponent == p.exponent => {
                    last.multiplicity = last
                        .multiplicity
                        .checked_add(p.multiplicity)
                        .ok_or_else(|| Error::Overflow("multiplicity".into()))?;
                }
                _ => merged.push(p),
            }
        }
        Ok(Self { parts: merged })
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn sum(&self) -> u128 {
        self.parts
            .iter()
            .map(|p| (p.multiplicity as u128) << p.exponent)
            .sum()
    }
}

impl fmt::Display for BinaryPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("0");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "2^{} x {}", p.exponent, p.multiplicity)?;
        }
        Ok(())
    }
}

/// Parses the display form, e.g. `2^0 x 2 + 2^1 x 1`; `0` or an empty
/// string is the empty partition.
impl FromStr for BinaryPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "0" {
            return Ok(Self::default());
        }
        let mut parts = Vec::new();
        let mut offset = 0;
        for term in s.split('+') {
            let bad = |msg: &str| Error::Syntax {
                pos: offset,
                msg: msg.to_string(),
            };
            let t = term.trim();
            let (pow, mult) = t
                .split_once('x')
                .ok_or_else(|| bad("expected \"2^a x m\""))?;
            let exponent = pow
                .trim()
                .strip_prefix("2^")
                .and_then(|e| e.trim().parse::<u32>().ok())
                .ok_or_else(|| bad("expected \"2^a\""))?;
            let multiplicity = mult
                .trim()
                .parse::<u64>()
                .map_err(|_| bad("expected a multiplicity"))?;
            parts.push(Part {
                exponent,
                multiplicity,
            });
            offset += term.len() + 1;
        }
        Self::new(parts)
    }
}

/// Pattern test on `p − 1`. `1` is maximal.
pub fn is_maximal(p: u64) -> bool {
    p == 1 || MaximalPattern::parse(p).is_some()
}

/// `π(p) = 2^{bit(p−1)}` evaluated through the table engine.
pub fn is_maximal_by_period(engine: &Laver, p: u64) -> Result<bool> {
    check(p)?;
    if p == 0 {
        return Err(domain("0 has no period"));
    }
    Ok(engine.period(p)? == 1u64 << bit_count(p - 1))
}

/// Places the bits of `q mod 2^{bit(p−1)}` on the set bits of `p − 1`, low to high.
pub fn maximal_prod(p: u64, q: u64) -> Result<u64> {
    check(p)?;
    check(q)?;
    if p == 0 || !is_maximal(p) {
        return Err(Error::Precondition(format!("{p} is not maximal")));
    }
    Ok(scatter(p - 1, q))
}

pub(crate) fn scatter(mask: u64, mut q: u64) -> u64 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 && q != 0 {
        let low = m & m.wrapping_neg();
        if q & 1 == 1 {
            out |= low;
        }
        q >>= 1;
        m ^= low;
    }
    out
}

pub fn maximal_to_partition(p: u64) -> Result<BinaryPartition> {
    Ok(pattern_of(p)?.partition())
}

/// Same as [`maximal_to_partition`] but also returns `b₀`.
pub fn maximal_to_partition_with_gap(p: u64) -> Result<(BinaryPartition, u32)> {
    let pat = pattern_of(p)?;
    Ok((pat.partition(), pat.b0))
}

fn pattern_of(p: u64) -> Result<MaximalPattern> {
    check(p)?;
    MaximalPattern::parse(p).ok_or_else(|| {
        if p < 2 {
            domain(format!("{p} has no partition (need p >= 2)"))
        } else {
            Error::Precondition(format!("{p} is not maximal"))
        }
    })
}

/// The maximal element whose word is `1 0^{b₀}` followed by one block per part.
pub fn partition_to_maximal(partition: &BinaryPartition, b0: u32) -> Result<ElementId> {
    let pattern = MaximalPattern {
        b0,
        blocks: partition
            .parts()
            .iter()
            .map(|p| Block {
                a: p.exponent,
                b: p.multiplicity - 1,
            })
            .collect(),
    };
    let word = pattern.word()?;
    ElementId::new(word + 1)
}

/// All maximal `p` in `[lo, hi]`, increasing.
pub fn list_maximal(lo: u64, hi: u64) -> Result<Vec<u64>> {
    check(hi)?;
    if lo == 0 || lo > hi {
        return Err(domain(format!("need 1 <= lo <= hi, got [{lo}, {hi}]")));
    }
    Ok((lo..=hi).filter(|&p| is_maximal(p)).collect())
}

/// Binary partitions of `n` (OEIS A018819), via
/// `a(2m+1) = a(2m) = a(2m−1) + a(m)`.
pub fn count_binary_partitions(n: u64) -> Result<u128> {
    let mut a: Vec<u128> = vec![1];
    for i in 1..=n {
        let v = if i % 2 == 1 {
            a[(i - 1) as usize]
        } else {
            a[(i - 1) as usize]
                .checked_add(a[(i / 2) as usize])
                .ok_or_else(|| Error::Overflow(format!("A018819({n}) exceeds u128")))?
        };
        a.push(v);
    }
    Ok(a[n as usize])
}

/// Inserts `0^{b·2^a}` into `word` after its first `u` ones, where
/// `u ∈ [1, 2^{a+1}]` and the remaining count of ones is a multiple of `2^{a+1}`.
pub fn insert_zero_block(word: u64, a: u32, b: u64) -> Result<u64> {
    if word == 0 {
        return Err(Error::Structure(
            "cannot insert into a word without ones".into(),
        ));
    }
    if b == 0 {
        return Ok(word);
    }
    let overflow = || Error::Overflow("inserted word exceeds 62 bits".into());
    if a >= 62 {
        return Err(overflow());
    }
    let zeros = b.checked_mul(1u64 << a).ok_or_else(overflow)?;
    if bit_length(word) as u64 + zeros > 62 {
        return Err(overflow());
    }
    let modulus = 1u64 << (a + 1).min(63);
    let ones = bit_count(word) as u64;
    let in_u = (ones - 1) % modulus + 1;
    // Position just below the in_u-th one counted from the top.
    let mut seen = 0;
    let mut cut = 0;
    for pos in (0..bit_length(word)).rev() {
        if word >> pos & 1 == 1 {
            seen += 1;
            if seen == in_u {
                cut = pos;
                break;
            }
        }
    }
    let low = word & ((1u64 << cut) - 1);
    let high = word >> cut;
    Ok((high << (cut as u64 + zeros)) | low)
}
