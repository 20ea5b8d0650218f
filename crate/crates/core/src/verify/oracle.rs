//! Independent ground truth: the operation on `[1, N]` built directly from
//! `p⋆1 = p+1 mod N` and `p⋆(q+1) = (p⋆q)⋆(p+1)`, descending on `p` and
//! ascending on `q`. Nothing here uses periods or thresholds.

use crate::error::{domain, Error, Result};

/// Largest `N` the oracle will tabulate.
pub const ORACLE_MAX: u64 = 1 << 12;

/// The full `N × N` table of `⋆` on `[1, N]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTable {
    size: usize,
    cells: Vec<u16>,
}

impl OracleTable {
    /// Builds the table for any `N ∈ [1, 2¹²]`; left distributivity only
    /// holds when `N` is a power of two.
    pub fn build(size: u64) -> Result<Self> {
        if size == 0 || size > ORACLE_MAX {
            return Err(domain(format!(
                "oracle size {size} outside [1, {ORACLE_MAX}]"
            )));
        }
        let n = size as usize;
        let mut cells = vec![0u16; n * n];
        let idx = |p: usize, q: usize| (p - 1) * n + (q - 1);
        for q in 1..=n {
            cells[idx(n, q)] = q as u16;
        }
        for p in (1..n).rev() {
            cells[idx(p, 1)] = (p + 1) as u16;
            for q in 1..n {
                let prev = cells[idx(p, q)] as usize;
                if prev <= p {
                    return Err(Error::Structure(format!(
                        "{p}⋆{q} = {prev} does not exceed {p} for N = {n}"
                    )));
                }
                cells[idx(p, q + 1)] = cells[idx(prev, p + 1)];
            }
        }
        Ok(Self { size: n, cells })
    }

    pub fn size(&self) -> u64 {
        self.size as u64
    }

    /// `p ⋆ q` for `p, q ∈ [1, N]`.
    pub fn star(&self, p: u64, q: u64) -> u64 {
        self.cells[(p as usize - 1) * self.size + (q as usize - 1)] as u64
    }

    /// `p * q = N − (N−p) ⋆ (N−q)` for `p, q ∈ [0, N)`.
    pub fn back(&self, p: u64, q: u64) -> u64 {
        let n = self.size as u64;
        n - self.star(n - p, n - q)
    }

    /// Row period of `p`: the first `q` with `p ⋆ q = N`.
    pub fn period(&self, p: u64) -> u64 {
        (1..=self.size as u64)
            .find(|&q| self.star(p, q) == self.size as u64)
            .unwrap_or(self.size as u64)
    }

    /// Exhaustive `p⋆(q⋆r) = (p⋆q)⋆(p⋆r)`; `O(N³)`.
    pub fn is_left_distributive(&self) -> bool {
        let n = self.size as u64;
        (1..=n).all(|p| {
            (1..=n).all(|q| {
                let pq = self.star(p, q);
                (1..=n).all(|r| self.star(p, self.star(q, r)) == self.star(pq, self.star(p, r)))
            })
        })
    }
}

/// The oracle for `N = max_p`.
pub fn brute_force_oracle(max_p: u64) -> Result<OracleTable> {
    OracleTable::build(max_p)
}
