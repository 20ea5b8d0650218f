//! Threshold-compressed storage of the backwards table.
//!
//! Only `θ(p)` is kept for each `p`. Periods follow from the doubling rule
//! along the partial bit-sums of `p`, and any single product `p*q` is
//! recovered by walking those partial sums from the top bit down, so the
//! full table is never materialized.

mod cache;
mod format;

use std::path::Path;

pub use cache::{RowCache, DEFAULT_CACHE_BYTES, MIN_CACHE_BYTES};
pub use format::{MAGIC, VERSION};

use crate::element::{bit_count, check, is_power_of_two, top_bit};
use crate::error::{Error, FormatError, Result};
use crate::ld::{self, Row};

/// Rows between two checkpoint callbacks during a scan.
pub const CHECKPOINT_ROWS: u64 = 1 << 16;

/// Largest prefix a store may hold; thresholds must fit in 32 bits.
pub const MAX_STORE_P: u64 = 1 << 32;

/// Dense `θ(p)` for `p = 2..=max_p`, plus the derived `log₂ π(p)`.
#[derive(Clone)]
pub struct ThresholdStore {
    // Indexed by p. Slots 0 and 1 hold the sentinel 0.
    thetas: Vec<u32>,
    // Derived on construction, never serialized.
    log_periods: Vec<u8>,
}

impl Default for ThresholdStore {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for ThresholdStore {
    fn eq(&self, other: &Self) -> bool {
        self.thetas == other.thetas
    }
}

impl Eq for ThresholdStore {}

impl std::fmt::Debug for ThresholdStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThresholdStore")
            .field("max_p", &self.max_p())
            .finish_non_exhaustive()
    }
}

impl ThresholdStore {
    /// The empty store, covering only `p = 1`.
    pub fn new() -> Self {
        Self {
            thetas: vec![0, 0],
            log_periods: vec![0, 0],
        }
    }

    /// Rebuilds a store from `θ(2), θ(3), …`, deriving and checking periods.
    pub fn from_thetas(thetas: &[u32]) -> Result<Self, FormatError> {
        let mut store = Self::new();
        store.thetas.reserve(thetas.len());
        store.log_periods.reserve(thetas.len());
        for (i, &theta) in thetas.iter().enumerate() {
            let p = i as u64 + 2;
            let lp = store
                .derive_log_period(p, theta)
                .ok_or(FormatError::Inconsistent { p, theta })?;
            store.thetas.push(theta);
            store.log_periods.push(lp);
        }
        Ok(store)
    }

    /// Largest stored `p` (1 for an empty store).
    #[inline]
    pub fn max_p(&self) -> u64 {
        self.thetas.len() as u64 - 1
    }

    /// `θ(2), …, θ(max_p)`.
    pub fn thetas(&self) -> &[u32] {
        &self.thetas[2..]
    }

    #[inline]
    pub fn covers(&self, p: u64) -> bool {
        p <= self.max_p()
    }

    fn require(&self, p: u64) -> Result<()> {
        if self.covers(p) {
            Ok(())
        } else {
            Err(Error::InsufficientStore {
                have: self.max_p(),
                need: p,
            })
        }
    }

    /// `θ(p)`, or `None` for `p ≤ 1` and uncovered `p`.
    pub fn threshold(&self, p: u64) -> Option<u32> {
        (p >= 2 && self.covers(p)).then(|| self.thetas[p as usize])
    }

    /// `π(p)` for `1 ≤ p ≤ max_p`, or `None`.
    pub fn period_of(&self, p: u64) -> Option<u64> {
        (p >= 1 && self.covers(p)).then(|| self.period(p))
    }

    #[inline]
    pub(crate) fn theta(&self, p: u64) -> u64 {
        self.thetas[p as usize] as u64
    }

    #[inline]
    pub(crate) fn log_period(&self, p: u64) -> u32 {
        self.log_periods[p as usize] as u32
    }

    /// `π(p)`; `p` must be in `1..=max_p`.
    #[inline]
    pub fn period(&self, p: u64) -> u64 {
        1 << self.log_periods[p as usize]
    }

    /// `p*q` for `p ≤ max_p` (not range checked beyond a debug assertion).
    ///
    /// Walks the partial bit-sums of `p` from the top: at each level the
    /// column either fell in the doubled half, or among the last `θ` entries,
    /// and gains that level's bit.
    #[inline]
    pub fn product(&self, p: u64, q: u64) -> u64 {
        debug_assert!(self.covers(p));
        if p == 0 {
            return q;
        }
        let mut r = q & (self.period(p) - 1);
        let mut acc = 0;
        let mut cur = p;
        loop {
            let top = top_bit(cur);
            let rest = cur ^ top;
            if rest == 0 {
                return acc | r;
            }
            let half = self.period(rest);
            if self.period(cur) > half {
                if r >= half {
                    acc |= top;
                    r -= half;
                }
            } else if r >= half - self.theta(cur) {
                acc |= top;
            }
            cur = rest;
        }
    }

    /// `p ⋆ₙ q` through the duality with the backwards operation.
    #[inline]
    pub fn star_product(&self, n: u32, p: u64, q: u64) -> u64 {
        let big = 1u64 << n;
        big - self.product(big - p, big - q)
    }

    /// Checked `p*q`.
    pub fn checked_product(&self, p: u64, q: u64) -> Result<u64> {
        check(q)?;
        self.require(p)?;
        Ok(self.product(p, q))
    }

    /// Rebuilds the row of `p` from the thresholds of its partial bit-sums.
    ///
    /// The row of the lowest bit `2^ν₁` is `0..2^ν₁`. Adding the next bit
    /// `2^ν` either doubles the row (second half = first half + `2^ν`) when
    /// the threshold equals the current period, or adds `2^ν` to the last
    /// `θ` entries.
    pub fn reconstruct_row(&self, p: u64) -> Result<Row> {
        if p == 0 {
            return Err(crate::error::domain("the row of 0 has no finite period"));
        }
        self.require(p)?;
        let low = p & p.wrapping_neg();
        let mut values: Vec<u64> = (0..low).collect();
        let mut prefix = low;
        let mut rest = p ^ low;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            prefix |= bit;
            let theta = self.theta(prefix) as usize;
            let len = values.len();
            if theta == len {
                values.extend_from_within(..);
                for v in &mut values[len..] {
                    *v += bit;
                }
            } else {
                for v in &mut values[len - theta..] {
                    *v += bit;
                }
            }
        }
        Ok(Row::new_unchecked(p, values))
    }

    /// `p*q` as column `q mod π(p)` of the reconstructed row, through `cache`.
    pub fn lookup_product(&self, cache: &RowCache, p: u64, q: u64) -> Result<u64> {
        check(q)?;
        if p == 0 {
            return Ok(q);
        }
        self.require(p)?;
        let row = cache.get_or_insert_with(p, || self.reconstruct_row(p))?;
        Ok(row.get(q))
    }

    /// Computes θ for every `p` in `max_p+1..=target`.
    pub fn extend_to(&mut self, target: u64) -> Result<()> {
        self.extend_with(target, |_| Ok(()))
    }

    /// Like [`extend_to`](Self::extend_to), calling `checkpoint` every
    /// [`CHECKPOINT_ROWS`] rows and once at the end.
    pub fn extend_with<F>(&mut self, target: u64, mut checkpoint: F) -> Result<()>
    where
        F: FnMut(&ThresholdStore) -> Result<()>,
    {
        if target > MAX_STORE_P {
            return Err(Error::Capacity {
                p: target,
                limit: MAX_STORE_P,
            });
        }
        if target <= self.max_p() {
            return Ok(());
        }
        let extra = (target - self.max_p()) as usize;
        self.thetas.reserve_exact(extra);
        self.log_periods.reserve_exact(extra);
        for p in self.max_p() + 1..=target {
            let (theta, lp) = self.next_row(p)?;
            self.thetas.push(theta);
            self.log_periods.push(lp);
            if p % CHECKPOINT_ROWS == 0 && p != target {
                checkpoint(self)?;
            }
        }
        checkpoint(self)
    }

    /// θ and log-period of `p = max_p + 1`.
    fn next_row(&self, p: u64) -> Result<(u32, u8)> {
        if is_power_of_two(p) {
            let lp = p.trailing_zeros() as u8;
            return Ok(((p / 2) as u32, lp));
        }
        let top = top_bit(p);
        let pred = p - 1;
        let theta = ld::count_descent_at_least(p, top, |v| self.product(v, pred))?;
        let theta = u32::try_from(theta).map_err(|_| Error::Overflow(format!("θ({p})")))?;
        let lp = self.derive_log_period(p, theta).ok_or_else(|| {
            Error::Structure(format!("θ({p}) = {theta} violates the threshold dichotomy"))
        })?;
        Ok((theta, lp))
    }

    /// log₂ π(p) from θ(p) and the already stored prefix, or `None` when θ
    /// is impossible for `p`.
    fn derive_log_period(&self, p: u64, theta: u32) -> Option<u8> {
        debug_assert_eq!(p, self.max_p() + 1);
        if is_power_of_two(p) {
            return (theta as u64 == p / 2).then_some(p.trailing_zeros() as u8);
        }
        let rest = p ^ top_bit(p);
        let half = self.period(rest);
        let lp = self.log_period(rest) as u8;
        match theta as u64 {
            t if t == half => Some(lp + 1),
            0 => None,
            t if t < half => Some(lp),
            _ => None,
        }
    }

    /// Store of `θ` up to `max_p`, continuing from `resume` when given.
    pub fn scan(max_p: u64, resume: Option<ThresholdStore>) -> Result<ThresholdStore> {
        Self::scan_with(max_p, resume, |_| Ok(()))
    }

    /// [`scan`](Self::scan) with a checkpoint callback.
    pub fn scan_with<F>(
        max_p: u64,
        resume: Option<ThresholdStore>,
        checkpoint: F,
    ) -> Result<ThresholdStore>
    where
        F: FnMut(&ThresholdStore) -> Result<()>,
    {
        if max_p < 2 {
            return Err(crate::error::domain("scan needs max_p >= 2"));
        }
        let mut store = resume.unwrap_or_default();
        if store.max_p() > max_p {
            store.truncate(max_p);
        }
        store.extend_with(max_p, checkpoint)?;
        Ok(store)
    }

    /// Drops every `p > max_p`.
    pub fn truncate(&mut self, max_p: u64) {
        let len = max_p.max(1) as usize + 1;
        self.thetas.truncate(len);
        self.log_periods.truncate(len);
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        format::save(self, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        format::load(path.as_ref())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        format::decode(bytes)
    }

    /// Number of stored entries whose θ was obtained from a doubling.
    pub fn doubling_count(&self) -> usize {
        (2..=self.max_p())
            .filter(|&p| !is_power_of_two(p) && self.period(p) > self.period(p ^ top_bit(p)))
            .count()
    }

    /// Partial bit-sum chain of `p` with each level's threshold and period.
    pub fn chain(&self, p: u64) -> Result<Vec<ChainStep>> {
        self.require(p)?;
        let mut out = Vec::with_capacity(bit_count(p) as usize);
        for prefix in crate::element::partial_sums(p) {
            out.push(ChainStep {
                prefix,
                threshold: self.threshold(prefix),
                period: self.period(prefix),
            });
        }
        Ok(out)
    }
}

/// One level of the partial-sum chain used by row reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainStep {
    pub prefix: u64,
    pub threshold: Option<u32>,
    pub period: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    const PERIODS_18: [u64; 18] = [1, 2, 2, 4, 2, 4, 4, 8, 2, 4, 4, 8, 4, 4, 4, 16, 2, 4];
    const THETAS_18: [u32; 17] = [1, 1, 2, 1, 2, 2, 4, 1, 2, 2, 4, 2, 1, 1, 8, 1, 2];

    #[test]
    fn scan_small_prefix() {
        let s = ThresholdStore::scan(18, None).unwrap();
        assert_eq!(s.thetas(), &THETAS_18);
        for (i, &pi) in PERIODS_18.iter().enumerate() {
            assert_eq!(s.period(i as u64 + 1), pi, "p = {}", i + 1);
        }
        assert_eq!(s.threshold(1), None);
        assert_eq!(s.threshold(19), None);
    }

    #[test]
    fn scan_two() {
        let s = ThresholdStore::scan(2, None).unwrap();
        assert_eq!(s.thetas(), &[1]);
        assert!(ThresholdStore::scan(1, None).is_err());
    }

    #[test]
    fn row_of_494() {
        let s = ThresholdStore::scan(494, None).unwrap();
        assert_eq!(s.threshold(494), Some(8));
        let row = s.reconstruct_row(494).unwrap();
        assert_eq!(
            row.values(),
            &[0, 1, 4, 13, 32, 225, 228, 237, 256, 257, 260, 269, 288, 481, 484, 493]
        );
        assert_eq!(
            s.reconstruct_row(110).unwrap().values(),
            &[0, 1, 4, 13, 32, 97, 100, 109]
        );
        assert_eq!(
            s.reconstruct_row(8).unwrap().values(),
            &[0, 1, 2, 3, 4, 5, 6, 7]
        );
        let chain: Vec<_> = s
            .chain(494)
            .unwrap()
            .iter()
            .map(|c| c.threshold.unwrap())
            .collect();
        assert_eq!(chain, vec![1, 2, 1, 4, 3, 3, 8]);
    }

    #[test]
    fn lookup_through_cache() {
        let s = ThresholdStore::scan(494, None).unwrap();
        let cache = RowCache::new(MIN_CACHE_BYTES);
        assert_eq!(s.lookup_product(&cache, 494, 21).unwrap(), 225);
        assert_eq!(s.lookup_product(&cache, 46, 7).unwrap(), 45);
        for p in 1..=494 {
            assert_eq!(s.lookup_product(&cache, p, 0).unwrap(), 0);
        }
        assert!(matches!(
            s.lookup_product(&cache, 495, 1),
            Err(Error::InsufficientStore { .. })
        ));
    }

    #[test]
    fn product_agrees_with_reconstruction() {
        let s = ThresholdStore::scan(1 << 10, None).unwrap();
        for p in 1..=s.max_p() {
            let row = s.reconstruct_row(p).unwrap();
            for q in 0..2 * row.period() {
                assert_eq!(s.product(p, q), row.get(q), "{p}*{q}");
            }
        }
    }

    #[test]
    fn resume_is_idempotent() {
        let full = ThresholdStore::scan(3000, None).unwrap();
        for k in [2, 17, 1024, 2999] {
            let part = ThresholdStore::scan(k, None).unwrap();
            assert_eq!(ThresholdStore::scan(3000, Some(part)).unwrap(), full);
        }
        let longer = ThresholdStore::scan(4000, None).unwrap();
        assert_eq!(ThresholdStore::scan(3000, Some(longer)).unwrap(), full);
    }

    #[test]
    fn checkpoints_fire_on_cadence() {
        let mut seen = Vec::new();
        ThresholdStore::scan_with(3 * CHECKPOINT_ROWS + 5, None, |s| {
            seen.push(s.max_p());
            Ok(())
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![
                CHECKPOINT_ROWS,
                2 * CHECKPOINT_ROWS,
                3 * CHECKPOINT_ROWS,
                3 * CHECKPOINT_ROWS + 5
            ]
        );
    }

    #[test]
    fn from_thetas_rejects_inconsistent() {
        assert!(ThresholdStore::from_thetas(&THETAS_18).is_ok());
        let mut bad = THETAS_18;
        bad[14] = 4; // θ(16) must be 8
        assert_eq!(
            ThresholdStore::from_thetas(&bad),
            Err(FormatError::Inconsistent { p: 16, theta: 4 })
        );
        // θ(14) is checked against π(6) = 4: anything below is structurally fine.
        let mut bad = THETAS_18;
        bad[12] = 3;
        assert!(ThresholdStore::from_thetas(&bad).is_ok());
        bad[12] = 5;
        assert!(ThresholdStore::from_thetas(&bad).is_err());
    }
}
