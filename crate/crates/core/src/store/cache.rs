use std::sync::{Arc, Mutex};

use lru::LruCache;

use crate::error::Result;
use crate::ld::Row;

pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;
pub const MIN_CACHE_BYTES: usize = 1 << 20;

const ROW_OVERHEAD: usize = 64;

/// Reconstructed rows keyed by owner, evicted least-recently-used once the
/// byte budget is exceeded. Safe to share between readers.
pub struct RowCache {
    budget: usize,
    inner: Mutex<Inner>,
}

struct Inner {
    rows: LruCache<u64, Arc<Row>>,
    bytes: usize,
}

impl RowCache {
    /// Budgets below [`MIN_CACHE_BYTES`] are raised to it.
    pub fn new(budget: usize) -> Self {
        Self {
            budget: budget.max(MIN_CACHE_BYTES),
            inner: Mutex::new(Inner {
                rows: LruCache::unbounded(),
                bytes: 0,
            }),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> usize {
        self.inner.lock().unwrap().bytes
    }

    pub fn clear(&self) {
        let mut inner = self.inner.lock().unwrap();
        inner.rows.clear();
        inner.bytes = 0;
    }

    pub fn get(&self, p: u64) -> Option<Arc<Row>> {
        self.inner.lock().unwrap().rows.get(&p).cloned()
    }

    /// Returns the cached row of `p`, building it with `make` on a miss.
    /// The lock is not held while `make` runs.
    pub fn get_or_insert_with<F>(&self, p: u64, make: F) -> Result<Arc<Row>>
    where
        F: FnOnce() -> Result<Row>,
    {
        if let Some(row) = self.get(p) {
            return Ok(row);
        }
        let row = Arc::new(make()?);
        let size = cost(&row);
        let mut inner = self.inner.lock().unwrap();
        if let Some(existing) = inner.rows.get(&p) {
            return Ok(existing.clone());
        }
        if size > self.budget {
            return Ok(row);
        }
        inner.rows.put(p, row.clone());
        inner.bytes += size;
        while inner.bytes > self.budget {
            match inner.rows.pop_lru() {
                Some((_, old)) => inner.bytes -= cost(&old),
                None => break,
            }
        }
        Ok(row)
    }
}

fn cost(row: &Row) -> usize {
    row.values().len() * 8 + ROW_OVERHEAD
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: u64, len: usize) -> Row {
        Row::new_unchecked(p, (0..len as u64).collect())
    }

    #[test]
    fn evicts_least_recently_used() {
        let cache = RowCache::new(MIN_CACHE_BYTES);
        // Each row costs 64 KiB + overhead; 15 fit under 1 MiB.
        let len = 8192;
        for p in 0..15 {
            cache.get_or_insert_with(p, || Ok(row(p, len))).unwrap();
        }
        assert_eq!(cache.len(), 15);
        cache.get(0).unwrap();
        cache.get_or_insert_with(100, || Ok(row(100, len))).unwrap();
        assert!(cache.get(0).is_some());
        assert!(cache.get(1).is_none());
        assert!(cache.bytes() <= cache.budget());
    }

    #[test]
    fn oversized_rows_bypass_the_cache() {
        let cache = RowCache::new(0);
        assert_eq!(cache.budget(), MIN_CACHE_BYTES);
        let r = cache
            .get_or_insert_with(7, || Ok(row(7, MIN_CACHE_BYTES)))
            .unwrap();
        assert_eq!(r.values().len(), MIN_CACHE_BYTES);
        assert!(cache.is_empty());
    }

    #[test]
    fn hit_does_not_rebuild() {
        let cache = RowCache::new(MIN_CACHE_BYTES);
        cache.get_or_insert_with(3, || Ok(row(3, 2))).unwrap();
        let again = cache
            .get_or_insert_with(3, || panic!("rebuilt a cached row"))
            .unwrap();
        assert_eq!(again.owner().get(), 3);
    }
}
