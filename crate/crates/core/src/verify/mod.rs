//! Falsification suites for the structural facts about the table, each run
//! exhaustively or on seeded samples against the engine or the brute-force
//! oracle.

mod oracle;
mod suites;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ld::Laver;
use crate::store::ThresholdStore;

pub use oracle::{brute_force_oracle, OracleTable, ORACLE_MAX};
pub use suites::{reference_periods_256, PERIOD_THETA_18};

/// Counterexamples kept per suite; the total is always reported.
pub const MAX_REPORTED: usize = 20;

/// One violated rule and the inputs that reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Counterexample {
    pub rule: String,
    pub input: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub bound: u64,
    pub seed: u64,
    pub instances: u64,
    pub counterexample_count: u64,
    pub counterexamples: Vec<Counterexample>,
    /// Observations that do not count against the suite.
    pub findings: Vec<Counterexample>,
    pub notes: Vec<String>,
    pub millis: u64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.counterexample_count == 0
    }
}

/// What a suite's bound means and how far it may go.
#[derive(Debug, Clone, Copy)]
pub struct SuiteInfo {
    pub name: &'static str,
    pub default_bound: u64,
    pub max_bound: u64,
    pub bound_meaning: &'static str,
    coverage: fn(u64) -> u64,
    run: fn(&Ctx<'_>) -> Outcome,
}

pub(crate) struct Ctx<'a> {
    pub store: &'a ThresholdStore,
    pub bound: u64,
    pub seed: u64,
}

impl Ctx<'_> {
    pub fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Instance count plus the smallest counterexamples, mergeable across threads.
#[derive(Debug, Default)]
pub(crate) struct Tally {
    pub instances: u64,
    pub total: u64,
    pub failures: Vec<Counterexample>,
}

impl Tally {
    pub fn check(&mut self, ok: bool, rule: &str, input: impl FnOnce() -> Vec<u64>) {
        self.instances += 1;
        if !ok {
            self.fail(rule, input());
        }
    }

    pub fn fail(&mut self, rule: &str, input: Vec<u64>) {
        self.total += 1;
        self.failures.push(Counterexample {
            rule: rule.to_string(),
            input,
        });
        if self.failures.len() > 4 * MAX_REPORTED {
            self.trim();
        }
    }

    fn trim(&mut self) {
        self.failures.sort();
        self.failures.dedup();
        self.failures.truncate(MAX_REPORTED);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.instances += other.instances;
        self.total += other.total;
        self.failures.extend(other.failures);
        self.trim();
        self
    }

    /// Runs `f` over `items` in parallel and merges the tallies.
    pub fn par<I, T, F>(items: I, f: F) -> Tally
    where
        I: IntoParallelIterator<Item = T>,
        F: Fn(T, &mut Tally) + Sync + Send,
    {
        items
            .into_par_iter()
            .fold(Tally::default, |mut t, x| {
                f(x, &mut t);
                t
            })
            .reduce(Tally::default, Tally::merge)
    }
}

#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub tally: Tally,
    pub findings: Vec<Counterexample>,
    pub notes: Vec<String>,
}

impl From<Tally> for Outcome {
    fn from(tally: Tally) -> Self {
        Self {
            tally,
            ..Self::default()
        }
    }
}

pub fn suites() -> &'static [SuiteInfo] {
    suites::REGISTRY
}

pub fn suite_names() -> impl Iterator<Item = &'static str> {
    suites().iter().map(|s| s.name)
}

fn lookup(name: &str) -> Result<&'static SuiteInfo> {
    suites()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownSuite(name.to_string()))
}

fn resolve_bound(info: &SuiteInfo, bound: Option<u64>) -> Result<u64> {
    let b = bound.unwrap_or(info.default_bound);
    if b == 0 || b > info.max_bound {
        return Err(domain(format!(
            "bound {b} for suite {} outside 1..={} ({})",
            info.name, info.max_bound, info.bound_meaning
        )));
    }
    Ok(b)
}

fn execute(info: &SuiteInfo, store: &ThresholdStore, bound: u64, seed: u64) -> SuiteResult {
    let start = Instant::now();
    let ctx = Ctx { store, bound, seed };
    let mut out = (info.run)(&ctx);
    out.tally.trim();
    SuiteResult {
        suite: info.name.to_string(),
        bound,
        seed,
        instances: out.tally.instances,
        counterexample_count: out.tally.total,
        counterexamples: out.tally.failures,
        findings: out.findings,
        notes: out.notes,
        millis: start.elapsed().as_millis() as u64,
    }
}

/// Runs one suite. `bound` defaults to the suite's own default.
pub fn run_suite(engine: &Laver, name: &str, bound: Option<u64>, seed: u64) -> Result<SuiteResult> {
    let info = lookup(name)?;
    let bound = resolve_bound(info, bound)?;
    let view = engine.table((info.coverage)(bound))?;
    Ok(execute(info, &view, bound, seed))
}

/// Runs every suite at its default bound, concurrently.
pub fn run_all(engine: &Laver, seed: u64) -> Result<Vec<SuiteResult>> {
    let need = suites()
        .iter()
        .map(|s| (s.coverage)(s.default_bound))
        .max()
        .unwrap_or(2);
    let view = engine.table(need)?;
    let store: &ThresholdStore = &view;
    Ok(suites()
        .par_iter()
        .map(|info| execute(info, store, info.default_bound, seed))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_keeps_smallest_failures() {
        let mut a = Tally::default();
        for i in (0..100u64).rev() {
            a.check(i % 2 == 0, "odd", || vec![i]);
        }
        let b = Tally::default().merge(a);
        assert_eq!(b.instances, 100);
        assert_eq!(b.total, 50);
        assert_eq!(b.failures.len(), MAX_REPORTED);
        assert_eq!(b.failures[0].input, vec![1]);
    }

    #[test]
    fn unknown_suite_and_bad_bounds() {
        let l = Laver::global();
        assert!(matches!(
            run_suite(l, "nope", None, 0),
            Err(Error::UnknownSuite(_))
        ));
        assert!(run_suite(l, "distributivity", Some(0), 0).is_err());
        assert!(run_suite(l, "distributivity", Some(1 << 40), 0).is_err());
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = suite_names().collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
