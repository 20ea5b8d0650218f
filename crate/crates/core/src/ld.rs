//! The backwards operation `*` on nonnegative integers, its conjugate `⋆ₙ`
//! on `[1, 2ⁿ]`, composition, periods, thresholds and left powers.
//!
//! Every row is built from smaller rows by the descending recurrence
//!
//! ```text
//! p*(2^L - 1)     = p - 1
//! p*(2^L - k - 1) = (p*(2^L - k)) * (p - 1)
//! ```
//!
//! which stops when it reaches `0`; the number of values produced is `π(p)`.
//! The [`Laver`] engine keeps a dense [`ThresholdStore`] prefix that grows on
//! demand up to a configurable limit. Beyond that limit, elements are
//! resolved through a memoized sparse evaluator that reduces the gap under
//! the top bit when it can.

use std::collections::HashMap;
use std::io::Write;
use std::ops::Deref;
use std::sync::{Mutex, OnceLock, RwLock, RwLockReadGuard};

use serde::{Deserialize, Serialize};

use crate::element::{
    bit_count, bit_length, check, is_power_of_two, subset_leq, top_bit, ElementId,
};
use crate::error::{domain, Error, Result};
use crate::store::{RowCache, ThresholdStore, DEFAULT_CACHE_BYTES};

/// Largest dense prefix the default engine will build.
pub const DEFAULT_DENSE_LIMIT: u64 = 1 << 24;

/// Descent steps the sparse evaluator may spend on a single query.
const SPARSE_STEP_BUDGET: u64 = 1 << 28;

/// Nesting of unresolved elements the sparse evaluator will follow.
const SPARSE_MAX_DEPTH: u32 = 512;

/// Longest row `compute_row` will materialize.
const MAX_ROW_LEN: u64 = 1 << 27;

/// Which of the two equivalent presentations a product uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// `*` on the nonnegative integers.
    Back,
    /// `⋆ₙ` on `[1, 2ⁿ]`.
    Star(u32),
}

impl Convention {
    pub fn star(n: u32) -> Result<Self> {
        check_order(n)?;
        Ok(Self::Star(n))
    }
}

pub(crate) fn check_order(n: u32) -> Result<u64> {
    if (1..=61).contains(&n) {
        Ok(1 << n)
    } else {
        Err(domain(format!("order exponent {n} outside 1..=61")))
    }
}

fn check_star_arg(n: u32, x: u64) -> Result<u64> {
    let big = check_order(n)?;
    if (1..=big).contains(&x) {
        Ok(big)
    } else {
        Err(domain(format!("{x} outside [1, 2^{n}]")))
    }
}

/// The increasing values `p*0, …, p*(π(p)−1)` of one row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    owner: ElementId,
    values: Vec<u64>,
}

impl Row {
    /// Validates the row shape: starts at 0, strictly increasing, ends at
    /// `owner − 1`, power-of-two length.
    pub fn new(owner: u64, values: Vec<u64>) -> Result<Self> {
        let owner_id = ElementId::new(owner)?;
        if owner == 0 {
            return Err(domain("the row of 0 has no finite period"));
        }
        let ok = values.len().is_power_of_two()
            && values[0] == 0
            && values.windows(2).all(|w| w[0] < w[1])
            && *values.last().unwrap() == owner - 1;
        if !ok {
            return Err(Error::Structure(format!("not a valid row of {owner}")));
        }
        Ok(Self {
            owner: owner_id,
            values,
        })
    }

    pub(crate) fn new_unchecked(owner: u64, values: Vec<u64>) -> Self {
        Self {
            owner: ElementId(owner),
            values,
        }
    }

    pub fn owner(&self) -> ElementId {
        self.owner
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u64> {
        self.values
    }

    pub fn period(&self) -> u64 {
        self.values.len() as u64
    }

    /// `owner * q`, using periodicity.
    pub fn get(&self, q: u64) -> u64 {
        self.values[(q & (self.period() - 1)) as usize]
    }

    /// θ by the counting rule: entries at or above the top bit of the owner.
    /// Powers of two get `2^{m−1}`; the owner 1 has none.
    pub fn threshold(&self) -> Option<u64> {
        let p = self.owner.get();
        if p < 2 {
            None
        } else if is_power_of_two(p) {
            Some(p / 2)
        } else {
            let top = top_bit(p);
            Some(self.values.iter().filter(|&&v| v >= top).count() as u64)
        }
    }
}

/// Period, threshold and their "co" variants for one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodInfo {
    pub p: ElementId,
    pub period: u64,
    pub threshold: Option<u64>,
    pub coperiod: u64,
    pub cothreshold: u64,
}

/// Runs the descending recurrence for the row of `p ≥ 1` to completion.
/// `times_pred(v)` must return `v * (p − 1)` for `v < p`.
pub(crate) fn descend_row<F>(p: u64, mut times_pred: F) -> Result<Vec<u64>>
where
    F: FnMut(u64) -> Result<u64>,
{
    let bound = 1u64 << bit_count(p - 1).min(62);
    let mut v = p - 1;
    let mut values = vec![v];
    while v != 0 {
        if values.len() as u64 >= bound.min(MAX_ROW_LEN) {
            return Err(if bound > MAX_ROW_LEN {
                Error::Capacity {
                    p,
                    limit: MAX_ROW_LEN,
                }
            } else {
                Error::Structure(format!("row of {p} exceeds 2^bit(p-1) entries"))
            });
        }
        let next = times_pred(v)?;
        if next >= v {
            return Err(Error::Structure(format!("row of {p} is not increasing")));
        }
        v = next;
        values.push(v);
    }
    values.reverse();
    Ok(values)
}

/// Runs the descending recurrence only while values stay `≥ floor`, and
/// returns how many did.
pub(crate) fn count_descent_at_least<F>(p: u64, floor: u64, mut times_pred: F) -> Result<u64>
where
    F: FnMut(u64) -> u64,
{
    let bound = 1u64 << bit_count(p - 1).min(62);
    let mut v = p - 1;
    let mut count = 0;
    while v >= floor {
        count += 1;
        if count > bound {
            return Err(Error::Structure(format!(
                "row of {p} exceeds 2^bit(p-1) entries"
            )));
        }
        let next = times_pred(v);
        if next >= v {
            return Err(Error::Structure(format!("row of {p} is not increasing")));
        }
        v = next;
    }
    Ok(count)
}

/// Honest row of `p` over a dense store covering `p − 1`.
pub fn row_by_recurrence(store: &ThresholdStore, p: u64) -> Result<Row> {
    if p == 0 {
        return Err(domain("the row of 0 has no finite period"));
    }
    if !store.covers(p - 1) {
        return Err(Error::InsufficientStore {
            have: store.max_p(),
            need: p - 1,
        });
    }
    let pred = p - 1;
    let values = descend_row(p, |v| Ok(store.product(v, pred)))?;
    Ok(Row::new_unchecked(p, values))
}

/// Memoized evaluator over a borrowed dense prefix that also answers for
/// elements beyond it, as long as they reduce to the prefix cheaply (for
/// instance by lowering a top bit that sits far above the rest).
///
/// It takes no locks, so it can be used while a [`TableView`] is held.
pub struct Resolver<'a> {
    dense: &'a ThresholdStore,
    memo: HashMap<u64, (u8, u64)>,
    steps_left: u64,
    depth: u32,
}

impl<'a> Resolver<'a> {
    pub fn new(dense: &'a ThresholdStore) -> Self {
        Self::with_memo(dense, HashMap::new())
    }

    fn with_memo(dense: &'a ThresholdStore, memo: HashMap<u64, (u8, u64)>) -> Self {
        Self {
            dense,
            memo,
            steps_left: SPARSE_STEP_BUDGET,
            depth: 0,
        }
    }

    fn reset_budget(&mut self) {
        self.steps_left = SPARSE_STEP_BUDGET;
        self.depth = 0;
    }

    /// `p*q`.
    pub fn back_prod(&mut self, p: u64, q: u64) -> Result<u64> {
        check(p)?;
        check(q)?;
        self.reset_budget();
        self.product(p, q)
    }

    /// `π(p)` for `p ≥ 1`.
    pub fn period(&mut self, p: u64) -> Result<u64> {
        check(p)?;
        if p == 0 {
            return Err(domain("π(0) is undefined: the row of 0 is the identity"));
        }
        self.reset_budget();
        Ok(1 << self.log_period(p)?)
    }

    /// `θ(p)` for `p ≥ 2`.
    pub fn threshold(&mut self, p: u64) -> Result<u64> {
        check(p)?;
        if p <= 1 {
            return Err(domain(format!("θ({p}) is undefined")));
        }
        self.reset_budget();
        Ok(self.info(p)?.1)
    }

    /// `p ⋆ₙ q` for `p, q ∈ [1, 2ⁿ]`.
    pub fn star_prod(&mut self, n: u32, p: u64, q: u64) -> Result<u64> {
        let big = check_star_arg(n, p)?;
        check_star_arg(n, q)?;
        Ok(big - self.back_prod(big - p, big - q)?)
    }

    /// `(log₂ π(x), θ(x))` for `x ≥ 1` (θ is 0 for `x = 1`).
    fn info(&mut self, x: u64) -> Result<(u32, u64)> {
        if self.dense.covers(x) {
            let theta = if x >= 2 { self.dense.theta(x) } else { 0 };
            return Ok((self.dense.log_period(x), theta));
        }
        if is_power_of_two(x) {
            return Ok((x.trailing_zeros(), x / 2));
        }
        if let Some(&(lp, theta)) = self.memo.get(&x) {
            return Ok((lp as u32, theta));
        }
        let top = top_bit(x);
        let rest = x ^ top;
        // Moving the top bit down to just above `rest` keeps period and threshold.
        let compressed = rest | (1 << bit_length(rest));
        if self.depth >= SPARSE_MAX_DEPTH {
            return Err(Error::Capacity {
                p: x,
                limit: self.dense.max_p(),
            });
        }
        self.depth += 1;
        let resolved = self.resolve_info(x, top, rest, compressed);
        self.depth -= 1;
        let (lp, theta) = resolved?;
        self.memo.insert(x, (lp as u8, theta));
        Ok((lp, theta))
    }

    fn resolve_info(&mut self, x: u64, top: u64, rest: u64, compressed: u64) -> Result<(u32, u64)> {
        Ok(if compressed != x {
            self.info(compressed)?
        } else {
            let pred = x - 1;
            let bound = 1u64 << bit_count(pred).min(62);
            let mut v = pred;
            let mut theta = 0;
            while v >= top {
                theta += 1;
                if theta > bound {
                    return Err(Error::Structure(format!(
                        "row of {x} exceeds 2^bit(p-1) entries"
                    )));
                }
                if self.steps_left == 0 {
                    return Err(Error::Capacity {
                        p: x,
                        limit: self.dense.max_p(),
                    });
                }
                self.steps_left -= 1;
                v = self.product(v, pred)?;
            }
            let (lp_rest, _) = self.info(rest)?;
            let half = 1u64 << lp_rest;
            let lp = if theta == half {
                lp_rest + 1
            } else if theta > 0 && theta < half {
                lp_rest
            } else {
                return Err(Error::Structure(format!(
                    "θ({x}) = {theta} violates the threshold dichotomy"
                )));
            };
            (lp, theta)
        })
    }

    fn log_period(&mut self, x: u64) -> Result<u32> {
        Ok(self.info(x)?.0)
    }

    fn product(&mut self, p: u64, q: u64) -> Result<u64> {
        if p == 0 {
            return Ok(q);
        }
        if self.dense.covers(p) {
            return Ok(self.dense.product(p, q));
        }
        let mut r = q & ((1u64 << self.log_period(p)?) - 1);
        let mut acc = 0;
        let mut cur = p;
        loop {
            let top = top_bit(cur);
            let rest = cur ^ top;
            if rest == 0 {
                return Ok(acc | r);
            }
            let (lp_cur, theta) = self.info(cur)?;
            let lp_rest = self.log_period(rest)?;
            let half = 1u64 << lp_rest;
            if lp_cur > lp_rest {
                if r >= half {
                    acc |= top;
                    r -= half;
                }
            } else if r >= half - theta {
                acc |= top;
            }
            cur = rest;
        }
    }
}

/// Read access to a built dense prefix. Drop it before asking the engine
/// for a larger one.
pub struct TableView<'a>(RwLockReadGuard<'a, ThresholdStore>);

impl Deref for TableView<'_> {
    type Target = ThresholdStore;

    fn deref(&self) -> &ThresholdStore {
        &self.0
    }
}

/// The table engine: a shared dense prefix, a row cache and a sparse memo.
///
/// The prefix is extended strictly in increasing `p` under the write lock;
/// published rows are never modified, so any number of readers may use a
/// [`TableView`] concurrently.
pub struct Laver {
    store: RwLock<ThresholdStore>,
    cache: RowCache,
    dense_limit: u64,
    sparse: Mutex<HashMap<u64, (u8, u64)>>,
}

impl Default for Laver {
    fn default() -> Self {
        Self::new()
    }
}

impl Laver {
    pub fn new() -> Self {
        Self::with_store(
            ThresholdStore::new(),
            DEFAULT_DENSE_LIMIT,
            DEFAULT_CACHE_BYTES,
        )
    }

    pub fn with_limit(dense_limit: u64) -> Self {
        Self::with_store(ThresholdStore::new(), dense_limit, DEFAULT_CACHE_BYTES)
    }

    pub fn with_store(store: ThresholdStore, dense_limit: u64, cache_bytes: usize) -> Self {
        Self {
            dense_limit: dense_limit
                .max(store.max_p())
                .min(crate::store::MAX_STORE_P),
            store: RwLock::new(store),
            cache: RowCache::new(cache_bytes),
            sparse: Mutex::new(HashMap::new()),
        }
    }

    /// Process-wide engine with the default limits.
    pub fn global() -> &'static Laver {
        static GLOBAL: OnceLock<Laver> = OnceLock::new();
        GLOBAL.get_or_init(Laver::new)
    }

    pub fn dense_limit(&self) -> u64 {
        self.dense_limit
    }

    pub fn cache(&self) -> &RowCache {
        &self.cache
    }

    /// Current dense prefix length.
    pub fn built(&self) -> u64 {
        self.store.read().unwrap().max_p()
    }

    pub fn snapshot(&self) -> ThresholdStore {
        self.store.read().unwrap().clone()
    }

    /// Extends the dense prefix to cover `max_p` and returns a read view.
    pub fn table(&self, max_p: u64) -> Result<TableView<'_>> {
        if max_p > self.dense_limit {
            return Err(Error::Capacity {
                p: max_p,
                limit: self.dense_limit,
            });
        }
        {
            let guard = self.store.read().unwrap();
            if guard.covers(max_p) {
                return Ok(TableView(guard));
            }
        }
        {
            let mut guard = self.store.write().unwrap();
            // Round up so that many slightly larger requests share one extension.
            let target = max_p.max(1024).next_power_of_two().min(self.dense_limit);
            guard.extend_to(target.max(max_p))?;
        }
        Ok(TableView(self.store.read().unwrap()))
    }

    /// Runs `f` against the dense prefix when `need` fits under the limit,
    /// otherwise against the sparse evaluator.
    fn resolve<R>(&self, need: u64, f: impl FnOnce(&mut Resolver<'_>) -> Result<R>) -> Result<R> {
        if need <= self.dense_limit {
            let view = self.table(need)?;
            return f(&mut Resolver::new(&view));
        }
        let view = self.table(self.dense_limit)?;
        let mut memo = self.sparse.lock().unwrap();
        let mut r = Resolver::with_memo(&view, std::mem::take(&mut *memo));
        let out = f(&mut r);
        *memo = r.memo;
        out
    }

    /// `p*q`.
    pub fn back_prod(&self, p: u64, q: u64) -> Result<u64> {
        check(p)?;
        check(q)?;
        if p == 0 {
            return Ok(q);
        }
        self.resolve(p, |s| s.product(p, q))
    }

    /// `p ⋆ₙ q` for `p, q ∈ [1, 2ⁿ]`.
    pub fn star_prod(&self, n: u32, p: u64, q: u64) -> Result<u64> {
        let big = check_star_arg(n, p)?;
        check_star_arg(n, q)?;
        Ok(big - self.back_prod(big - p, big - q)?)
    }

    /// `p*q` or `p ⋆ₙ q` depending on the convention.
    pub fn prod(&self, conv: Convention, p: u64, q: u64) -> Result<u64> {
        match conv {
            Convention::Back => self.back_prod(p, q),
            Convention::Star(n) => self.star_prod(n, p, q),
        }
    }

    /// `p ∘ q`: `p*(q−1)+1` for `p, q ≥ 1`, or the `⋆ₙ` composition
    /// characterized by `(p∘q)+1 = p⋆(q+1) mod 2ⁿ`.
    pub fn circ(&self, p: u64, q: u64, conv: Convention) -> Result<u64> {
        match conv {
            Convention::Back => {
                if p == 0 || q == 0 {
                    return Err(domain("∘ needs positive arguments"));
                }
                Ok(self.back_prod(p, q - 1)? + 1)
            }
            Convention::Star(n) => {
                let big = check_star_arg(n, p)?;
                check_star_arg(n, q)?;
                let succ = if q == big { 1 } else { q + 1 };
                let v = self.star_prod(n, p, succ)?;
                Ok(if v == 1 { big } else { v - 1 })
            }
        }
    }

    /// `π(p)` for `p ≥ 1`.
    pub fn period(&self, p: u64) -> Result<u64> {
        check(p)?;
        if p == 0 {
            return Err(domain("π(0) is undefined: the row of 0 is the identity"));
        }
        Ok(1 << self.resolve(p, |s| s.log_period(p))?)
    }

    /// `θ(p)` for `p ≥ 2`.
    pub fn threshold(&self, p: u64) -> Result<u64> {
        check(p)?;
        if p <= 1 {
            return Err(domain(format!("θ({p}) is undefined")));
        }
        Ok(self.resolve(p, |s| s.info(p))?.1)
    }

    fn co_shift(p: u64) -> Result<u64> {
        check(p)?;
        if p == 0 {
            return Err(domain("coperiod of 0 is undefined"));
        }
        check(p + (1u64 << bit_length(p)))
    }

    /// `π(p + 2ⁿ)` for the smallest `n` with `2ⁿ > p`.
    pub fn coperiod(&self, p: u64) -> Result<u64> {
        self.period(Self::co_shift(p)?)
    }

    /// `θ(p + 2ⁿ)` for the smallest `n` with `2ⁿ > p`.
    pub fn cothreshold(&self, p: u64) -> Result<u64> {
        self.threshold(Self::co_shift(p)?)
    }

    pub fn period_info(&self, p: u64) -> Result<PeriodInfo> {
        Ok(PeriodInfo {
            p: ElementId::new(p)?,
            period: self.period(p)?,
            threshold: if p >= 2 {
                Some(self.threshold(p)?)
            } else {
                None
            },
            coperiod: self.coperiod(p)?,
            cothreshold: self.cothreshold(p)?,
        })
    }

    /// Builds the row of `p` by the descending recurrence from rows below `p`.
    pub fn compute_row(&self, p: u64) -> Result<Row> {
        check(p)?;
        if p == 0 {
            return Err(domain("the row of 0 has no finite period"));
        }
        let pred = p - 1;
        let values = self.resolve(pred, |s| descend_row(p, |v| s.product(v, pred)))?;
        Ok(Row::new_unchecked(p, values))
    }

    /// Row of `p` rebuilt from the threshold chain of the dense prefix.
    pub fn reconstruct_row(&self, p: u64) -> Result<Row> {
        check(p)?;
        self.table(p.max(1))?.reconstruct_row(p)
    }

    /// `p*q` as a column of the cached reconstructed row.
    pub fn lookup_product(&self, p: u64, q: u64) -> Result<u64> {
        check(p)?;
        self.table(p.max(1))?.lookup_product(&self.cache, p, q)
    }

    /// `x^(k)` in `⋆ₙ`: `x^(1) = x`, `x^(k+1) = x^(k) ⋆ₙ x`. Costs `k` products.
    pub fn left_power(&self, n: u32, x: u64, k: u64) -> Result<u64> {
        check_star_arg(n, x)?;
        if k == 0 {
            return Err(domain("left powers start at k = 1"));
        }
        let mut acc = x;
        for _ in 1..k {
            acc = self.star_prod(n, acc, x)?;
        }
        Ok(acc)
    }

    /// Point set for the subset order or for the table, as `(x, y)` pairs.
    pub fn plot_points(&self, kind: PlotKind, max: u64) -> Result<Vec<(u64, u64)>> {
        check(max)?;
        if max == 0 {
            return Err(domain("plot needs max >= 1"));
        }
        match kind {
            PlotKind::SubsetOrder => Ok(subset_points(max)),
            PlotKind::Table => {
                let view = self.table(max)?;
                let mut out = Vec::new();
                for p in 1..=max {
                    out.extend((0..view.period(p)).map(|q| (p, view.product(p, q))));
                }
                Ok(out)
            }
        }
    }
}

/// Which point set [`Laver::plot_points`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Pairs `(a, b)` with `a ⊏ b`, `a ≠ b`, `b ≤ max`.
    SubsetOrder,
    /// Pairs `(p, p*q)` for `1 ≤ p ≤ max`, `q < π(p)`.
    Table,
}

fn subset_points(max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for b in 1..=max {
        // Enumerate the proper subsets of b in increasing order.
        let mut a = 0u64;
        loop {
            if a != b {
                debug_assert!(subset_leq(a, b));
                out.push((a, b));
            }
            if a == b {
                break;
            }
            a = (a.wrapping_sub(b)) & b;
        }
    }
    out
}

/// Writes points as `x,y` lines, LF-terminated, no header.
pub fn write_points_csv<W: Write>(points: &[(u64, u64)], mut out: W) -> std::io::Result<()> {
    for (x, y) in points {
        writeln!(out, "{x},{y}")?;
    }
    Ok(())
}
