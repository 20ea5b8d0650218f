//! Period statistics over a threshold store: frequencies `N_k(n)`, doubling
//! counts, the joint `(θ, π)` histogram and the growth of `π_n(1)`.
//!
//! All counts use the backwards convention over `p ∈ [1, 2ⁿ]`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ld::Laver;
use crate::store::ThresholdStore;

const CHUNK: u64 = 1 << 14;

fn require(store: &ThresholdStore, need: u64) -> Result<()> {
    if store.covers(need) {
        Ok(())
    } else {
        Err(Error::InsufficientStore {
            have: store.max_p(),
            need,
        })
    }
}

fn check_exponent(n: u32) -> Result<u64> {
    if n > 32 {
        return Err(domain(format!("exponent {n} exceeds 32")));
    }
    Ok(1u64 << n)
}

/// Sums `f(p)` histograms over `[lo, hi]` in parallel chunks.
fn histogram<F>(lo: u64, hi: u64, len: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, &mut [u64]) + Sync,
{
    if lo > hi {
        return vec![0; len];
    }
    let chunks = (hi - lo) / CHUNK + 1;
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0u64; len];
            let start = lo + c * CHUNK;
            let end = (start + CHUNK - 1).min(hi);
            for p in start..=end {
                f(p, &mut acc);
            }
            acc
        })
        .reduce(
            || vec![0u64; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// `N_k(n)`: how many `p ∈ [1, 2ⁿ]` have period `2ᵏ`, for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqReport {
    pub n: u32,
    pub counts: Vec<u64>,
}

impl FreqReport {
    /// `ω_k(n) = N_k(n) / 2ⁿ`.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = (1u64 << self.n) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Frequencies as percentages.
    pub fn percentages(&self) -> Vec<f64> {
        self.frequencies().into_iter().map(|f| f * 100.0).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["k", "count", "frequency"])?;
        for (k, (c, f)) in self.counts.iter().zip(self.frequencies()).enumerate() {
            w.serialize((k, c, f))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn frequency_table(store: &ThresholdStore, n: u32) -> Result<FreqReport> {
    let big = check_exponent(n)?;
    require(store, big)?;
    let counts = histogram(1, big, n as usize + 1, |p, acc| {
        acc[store.log_period(p) as usize] += 1;
    });
    Ok(FreqReport { n, counts })
}

/// Counts of periods that double when `2^{n−1}` is added.
///
/// `per_k[k] = P_k(n)`, the number of `p ∈ [1, 2^{n−1}]` with `π(p) = 2^{k−1}`
/// and `π(p + 2^{n−1}) = 2ᵏ`. `total` follows the indexing of the published
/// table of `𝒫(n)`: it counts `p ∈ [1, 2^{n+1}]` with
/// `π(p + 2^{n+1}) = 2π(p)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub n: u32,
    pub per_k: Vec<u64>,
    pub total: u64,
    /// Whether `N_k(n) = 2N_k(n−1) + P_k(n) − P_{k+1}(n)` held for every `k`.
    pub recursion_holds: bool,
}

impl DoublingReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["k", "count"])?;
        for (k, c) in self.per_k.iter().enumerate() {
            w.serialize((k, c))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of `p ∈ [1, 2ᵐ]` with `π(p + 2ᵐ) = 2π(p)`.
pub fn doublings_at(store: &ThresholdStore, m: u32) -> Result<u64> {
    let big = check_exponent(m)?;
    require(store, 2 * big)?;
    Ok(histogram(1, big, 1, |p, acc| {
        if store.log_period(p + big) > store.log_period(p) {
            acc[0] += 1;
        }
    })[0])
}

/// `P_k(n)` for `k = 0..=n`.
pub fn doubling_per_k(store: &ThresholdStore, n: u32) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(domain("doubling counts need n >= 1"));
    }
    let half = check_exponent(n - 1)?;
    require(store, 2 * half)?;
    Ok(histogram(1, half, n as usize + 1, |p, acc| {
        let lo = store.log_period(p);
        if store.log_period(p + half) > lo {
            acc[lo as usize + 1] += 1;
        }
    }))
}

/// Needs a store covering `2^{n+2}`.
pub fn doubling_counts(store: &ThresholdStore, n: u32) -> Result<DoublingReport> {
    let per_k = doubling_per_k(store, n)?;
    let total = doublings_at(store, n + 1)?;
    let now = frequency_table(store, n)?.counts;
    let before = frequency_table(store, n - 1)?.counts;
    let recursion_holds = (0..=n as usize).all(|k| {
        let prev = before.get(k).copied().unwrap_or(0);
        let next = per_k.get(k + 1).copied().unwrap_or(0);
        now[k] as i128 == 2 * prev as i128 + per_k[k] as i128 - next as i128
    });
    Ok(DoublingReport {
        n,
        per_k,
        total,
        recursion_holds,
    })
}

/// `θ = 2ⁱ − 2ʲ` for some `i > j ≥ 0`.
pub fn theta_has_form(theta: u64) -> bool {
    if theta == 0 {
        return false;
    }
    let t = theta >> theta.trailing_zeros();
    t & (t + 1) == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCell {
    pub theta: u64,
    pub period: u64,
    pub count: u64,
}

/// An element whose threshold is not of the form `2ⁱ − 2ʲ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaFlag {
    pub p: u64,
    pub theta: u64,
}

/// Histogram of `(θ(p), π(p))` for `p ∈ [2, max_p]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointReport {
    pub max_p: u64,
    pub cells: Vec<JointCell>,
    pub flagged: Vec<ThetaFlag>,
}

impl JointReport {
    pub fn count(&self, theta: u64, period: u64) -> u64 {
        self.cells
            .iter()
            .find(|c| c.theta == theta && c.period == period)
            .map_or(0, |c| c.count)
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["theta", "period", "count"])?;
        for c in &self.cells {
            w.serialize((c.theta, c.period, c.count))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn joint_table(store: &ThresholdStore, max_p: u64) -> Result<JointReport> {
    require(store, max_p)?;
    let mut cells: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut flagged = Vec::new();
    for p in 2..=max_p {
        let theta = store.theta(p);
        *cells.entry((theta, store.period(p))).or_default() += 1;
        if !theta_has_form(theta) {
            flagged.push(ThetaFlag { p, theta });
        }
    }
    Ok(JointReport {
        max_p,
        cells: cells
            .into_iter()
            .map(|((theta, period), count)| JointCell {
                theta,
                period,
                count,
            })
            .collect(),
        flagged,
    })
}

/// `π_n(1)`, the period of `2ⁿ − 1`, for `n = 1..=max_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub values: Vec<(u32, u64)>,
}

impl GrowthReport {
    /// The first `n` at which each value appears.
    pub fn first_attainment(&self) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        for &(n, v) in &self.values {
            if out.last().is_none_or(|&(last, _)| last != v) {
                out.push((v, n));
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["n", "period"])?;
        for v in &self.values {
            w.serialize(v)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn pi_of_one_growth(engine: &Laver, max_n: u32) -> Result<GrowthReport> {
    if !(1..=30).contains(&max_n) {
        return Err(domain(format!("max_n {max_n} outside 1..=30")));
    }
    let values = (1..=max_n)
        .map(|n| Ok((n, engine.period((1u64 << n) - 1)?)))
        .collect::<Result<_>>()?;
    Ok(GrowthReport { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(max: u64) -> ThresholdStore {
        ThresholdStore::scan(max, None).unwrap()
    }

    #[test]
    fn small_frequencies() {
        let s = store(64);
        assert_eq!(frequency_table(&s, 3).unwrap().counts, vec![1, 3, 3, 1]);
        let r = frequency_table(&s, 1).unwrap();
        assert_eq!(r.counts, vec![1, 1]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,count,frequency\n0,1,0.5\n1,1,0.5\n"
        );
        assert!(matches!(
            frequency_table(&s, 7),
            Err(Error::InsufficientStore { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = store(1 << 10);
        let r = frequency_table(&s, 8).unwrap();
        let back: FreqReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let d = doubling_counts(&s, 6).unwrap();
        let back: DoublingReport =
            serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let j = joint_table(&s, 300).unwrap();
        let back: JointReport = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn doubling_small() {
        let s = store(1 << 12);
        for n in 1..=10 {
            let r = doubling_counts(&s, n).unwrap();
            assert!(r.recursion_holds, "n = {n}");
            assert_eq!(r.total, doublings_at(&s, n + 1).unwrap());
        }
        // P_2(n) = N_1(n−1) = n − 1 for n ≥ 3.
        for n in 3..=10 {
            assert_eq!(doubling_per_k(&s, n).unwrap()[2], n as u64 - 1);
        }
        assert!(doubling_counts(&s, 11).is_err());
    }

    #[test]
    fn joint_small() {
        let s = store(18);
        let j = joint_table(&s, 18).unwrap();
        assert_eq!(j.total(), 17);
        assert_eq!(j.count(1, 2), 5);
        assert!(j.flagged.is_empty());
        let empty = joint_table(&s, 1).unwrap();
        let mut buf = Vec::new();
        empty.write_csv(&mut buf).unwrap();
        assert_eq!(buf, b"theta,period,count\n");
    }

    #[test]
    fn theta_forms() {
        for t in [1, 2, 3, 4, 6, 7, 8, 12, 14, 15, 2048] {
            assert!(theta_has_form(t), "{t}");
        }
        for t in [0, 5, 9, 10, 11, 13] {
            assert!(!theta_has_form(t), "{t}");
        }
    }

    #[test]
    fn growth() {
        let g = pi_of_one_growth(Laver::global(), 10).unwrap();
        assert_eq!(g.values[0], (1, 1));
        assert_eq!(g.values[2], (3, 4));
        assert!(g.first_attainment().contains(&(16, 9)));
        assert!(pi_of_one_growth(Laver::global(), 31).is_err());
    }
}
