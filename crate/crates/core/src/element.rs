//! Elements of the backwards table and the bit helpers shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exclusive upper bound on element values.
pub const ELEMENT_BOUND: u64 = 1 << 62;

/// A nonnegative table element, always below [`ELEMENT_BOUND`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct ElementId(pub(crate) u64);

impl ElementId {
    pub fn new(value: u64) -> Result<Self> {
        check(value)?;
        Ok(Self(value))
    }

    pub const fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for ElementId {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ElementId> for u64 {
    fn from(e: ElementId) -> u64 {
        e.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Rejects values at or above the element bound.
#[inline]
pub fn check(value: u64) -> Result<u64> {
    if value < ELEMENT_BOUND {
        Ok(value)
    } else {
        Err(Error::Bound(value))
    }
}

/// Highest power of two not exceeding `x`; zero for zero.
#[inline]
pub fn top_bit(x: u64) -> u64 {
    if x == 0 {
        0
    } else {
        1 << (63 - x.leading_zeros())
    }
}

/// Number of binary digits of `x` (zero for zero).
#[inline]
pub fn bit_length(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// Number of ones in the binary expansion.
#[inline]
pub fn bit_count(x: u64) -> u32 {
    x.count_ones()
}

#[inline]
pub fn is_power_of_two(x: u64) -> bool {
    x.is_power_of_two()
}

/// `a ⊏ b`: every binary digit of `a` is at most the matching digit of `b`.
#[inline]
pub fn subset_leq(a: u64, b: u64) -> bool {
    a & !b == 0
}

/// The increasing partial sums of the binary expansion of `p`:
/// `2^ν₁, 2^ν₁ + 2^ν₂, …, p`.
pub fn partial_sums(p: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(bit_count(p) as usize);
    let mut acc = 0;
    let mut rest = p;
    while rest != 0 {
        let low = rest & rest.wrapping_neg();
        acc |= low;
        rest ^= low;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_is_enforced() {
        assert!(ElementId::new(ELEMENT_BOUND - 1).is_ok());
        assert!(matches!(
            ElementId::new(ELEMENT_BOUND),
            Err(Error::Bound(_))
        ));
        assert!(check(u64::MAX).is_err());
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(top_bit(0), 0);
        assert_eq!(top_bit(494), 256);
        assert_eq!(bit_length(494), 9);
        assert_eq!(bit_count(494), 7);
        assert_eq!(partial_sums(494), vec![2, 6, 14, 46, 110, 238, 494]);
        assert!(partial_sums(0).is_empty());
    }

    #[test]
    fn subset_order() {
        assert!(subset_leq(5, 7));
        assert!(!subset_leq(2, 5));
        for x in 0..64 {
            assert!(subset_leq(0, x));
            assert!(subset_leq(x, x));
        }
    }

    #[test]
    fn serde_rejects_out_of_bound() {
        let ok: ElementId = serde_json::from_str("12").unwrap();
        assert_eq!(ok.get(), 12);
        assert!(serde_json::from_str::<ElementId>("4611686018427387904").is_err());
    }
}
