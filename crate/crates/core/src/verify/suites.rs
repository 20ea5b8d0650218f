use rand::Rng;
use rayon::prelude::*;

use super::{oracle::OracleTable, Ctx, Outcome, SuiteInfo, Tally, MAX_REPORTED};
use crate::element::{bit_count, bit_length, is_power_of_two, top_bit};
use crate::ld::{row_by_recurrence, Resolver};
use crate::maximal::{
    count_binary_partitions, is_maximal, list_maximal, maximal_prod, maximal_to_partition_with_gap,
    partition_to_maximal,
};
use crate::stats::theta_has_form;
use crate::store::ThresholdStore;

const SAMPLES: usize = 20_000;
const SAMPLE_CHUNK: usize = 256;

macro_rules! suite {
    ($name:expr, $default:expr, $max:expr, $meaning:expr, $coverage:expr, $run:expr) => {
        SuiteInfo {
            name: $name,
            default_bound: $default,
            max_bound: $max,
            bound_meaning: $meaning,
            coverage: $coverage,
            run: $run,
        }
    };
}

pub(super) static REGISTRY: &[SuiteInfo] = &[
    suite!(
        "distributivity",
        256,
        1 << 12,
        "largest p, q, r",
        |b| b,
        distributivity
    ),
    suite!(
        "uniqueness",
        4,
        12,
        "largest order n",
        |b| 1 << b,
        uniqueness
    ),
    suite!(
        "power1",
        10,
        12,
        "largest exhaustive n",
        |b| (1 << (b + 1)).max(1 << 21),
        power1
    ),
    suite!(
        "power2",
        11,
        14,
        "largest exhaustive n",
        |b| (1 << (b + 1)).max(1 << 22),
        power2
    ),
    suite!("power3", 14, 18, "largest n", |b| 1 << (b + 1), power3),
    suite!(
        "idempotents",
        1 << 16,
        1 << 24,
        "largest p",
        |b| b,
        idempotents
    ),
    suite!("seuil2", 1 << 16, 1 << 22, "largest p", |b| b, seuil2),
    suite!("seuil", 1 << 16, 1 << 20, "largest q", |b| b, seuil),
    suite!("row-2n", 20, 24, "largest n", |b| 1 << b, row_2n),
    suite!(
        "row-double",
        16,
        20,
        "largest n",
        |b| 1 << (b + 1),
        row_double
    ),
    suite!("row3", 14, 18, "largest n", |b| 1 << (b + 1), row3),
    suite!(
        "draphom",
        16,
        16,
        "largest d (n <= 8)",
        |b| 1 << (b + 8),
        draphom
    ),
    suite!(
        "cordraphom",
        2,
        3,
        "largest n",
        |b| cordraphom_coverage(b),
        cordraphom
    ),
    suite!(
        "circ-axioms",
        5,
        6,
        "largest exhaustive order n",
        |b| (1 << b).max(BACK_SAMPLE_MAX),
        circ_axioms
    ),
    suite!(
        "projection",
        6,
        9,
        "largest order n",
        |b| (1 << (b + 1)).max(BACK_SAMPLE_MAX),
        projection
    ),
    suite!(
        "embedding",
        6,
        9,
        "largest order n",
        |b| 1 << (b + 1),
        embedding
    ),
    suite!(
        "dougherty-i",
        3,
        3,
        "largest k",
        |b| 1 << (1 << (b + 1)),
        dougherty_i
    ),
    suite!("dougherty-ii", 2, 2, "largest k", |_| 1 << 23, dougherty_ii),
    suite!(
        "maximal-oracle",
        1 << 16,
        1 << 22,
        "largest p",
        |b| b,
        maximal_oracle
    ),
    suite!(
        "maximal-stability",
        1 << 14,
        1 << 20,
        "largest element",
        |b| b,
        maximal_stability
    ),
    suite!(
        "maximal-bijection",
        20,
        24,
        "largest n",
        |b| 1 << b,
        maximal_bijection
    ),
    suite!(
        "theta-form",
        1 << 20,
        1 << 24,
        "largest p",
        |b| b,
        theta_form
    ),
    suite!(
        "period-table-256",
        256,
        256,
        "fixed",
        |_| 256,
        period_table_256
    ),
    suite!("period-theta-18", 18, 18, "fixed", |_| 18, period_theta_18),
];

const BACK_SAMPLE_MAX: u64 = 1 << 16;

fn cordraphom_coverage(b: u64) -> u64 {
    let big = 1u64 << (1 << b);
    big * big
}

/// Generates samples sequentially (so they depend only on the seed) and
/// checks them in parallel chunks, each with its own resolver.
fn sampled<T, G, F>(ctx: &Ctx<'_>, salt: u64, count: usize, mut gen: G, check: F) -> Tally
where
    T: Send + Sync,
    G: FnMut(&mut rand_chacha::ChaCha8Rng) -> T,
    F: Fn(&T, &mut Resolver<'_>, &mut Tally) + Sync + Send,
{
    let mut rng = ctx.rng(salt);
    let items: Vec<T> = (0..count).map(|_| gen(&mut rng)).collect();
    items
        .par_chunks(SAMPLE_CHUNK)
        .map(|chunk| {
            let mut res = Resolver::new(ctx.store);
            let mut t = Tally::default();
            for item in chunk {
                check(item, &mut res, &mut t);
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

fn distributivity(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound;
    Tally::par(1..=b, |p, t| {
        for q in 1..=b {
            let pq = s.product(p, q);
            for r in 1..=b {
                let lhs = s.product(p, s.product(q, r));
                let rhs = s.product(pq, s.product(p, r));
                t.check(lhs == rhs, "p*(q*r) = (p*q)*(p*r)", || vec![p, q, r]);
            }
        }
    })
    .into()
}

fn uniqueness(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for n in 0..=ctx.bound as u32 {
        let big = 1u64 << n;
        let oracle = OracleTable::build(big).expect("oracle size in range");
        let t = Tally::par(1..=big, |p, t| {
            for q in 1..=big {
                t.check(
                    oracle.star(p, q) == s.star_product(n, p, q),
                    "oracle = star_prod",
                    || vec![n as u64, p, q],
                );
            }
        });
        tally = tally.merge(t);
    }
    let t = Tally::par(1..=16u64, |size, t| {
        let oracle = OracleTable::build(size).expect("oracle size in range");
        t.check(
            oracle.is_left_distributive() == size.is_power_of_two(),
            "left distributive iff N is a power of two",
            || vec![size],
        );
    });
    tally.merge(t).into()
}

/// `(p+2^m)*q − p*q = 2^m` iff `(p+2^n)*q − p*q = 2^n`.
fn power1(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound as u32;
    let cells: Vec<(u32, u32, u64)> = (2..=b)
        .flat_map(|n| (1..n).flat_map(move |m| (1..1u64 << m).map(move |p| (n, m, p))))
        .collect();
    let mut tally = Tally::par(cells, |(n, m, p), t| {
        let pq = |q| s.product(p, q);
        for q in 0..1u64 << (m + 1) {
            let a = s.product(p + (1 << m), q) == pq(q) + (1 << m);
            let c = s.product(p + (1 << n), q) == pq(q) + (1 << n);
            t.check(a == c, "power1 iff", || vec![p, m as u64, n as u64, q]);
        }
    });
    let t = sampled(
        ctx,
        1,
        SAMPLES,
        |rng| {
            let m = rng.random_range(1..=20u32);
            let n = rng.random_range(m + 1..=61);
            let p = rng.random_range(1..1u64 << m);
            (p, m, n, rng.random_range(0..1u64 << 62))
        },
        |&(p, m, n, q), res, t| {
            let r = (|| -> crate::Result<bool> {
                let pq = res.back_prod(p, q)?;
                let a = res.back_prod(p + (1 << m), q)? == pq + (1 << m);
                let c = res.back_prod(p + (1 << n), q)? == pq + (1 << n);
                Ok(a == c)
            })();
            t.check(r.unwrap_or(false), "power1 iff (sampled)", || {
                vec![p, m as u64, n as u64, q]
            });
        },
    );
    tally = tally.merge(t);
    tally.into()
}

/// `(i, j)` with `(p+2^m+2^n)*q = p*q + i·2^m + j·2^n`, if it exists.
fn decompose(full: u64, base: u64, m: u32, n: u32) -> Option<(u64, u64)> {
    let d = full.checked_sub(base)?;
    let (i, j) = (d >> m & 1, d >> n & 1);
    (d == (i << m) + (j << n)).then_some((i, j))
}

fn power2(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound as u32;
    let pairs = |lo: u32| -> Vec<(u32, u32)> {
        (lo..b)
            .flat_map(|m| (m + 1..=b).map(move |n| (m, n)))
            .collect()
    };
    let ps: Vec<u64> = (1..1u64 << (b - 2)).collect();
    let mut tally = Tally::par(ps.clone(), |p, t| {
        let valid = pairs(bit_length(p) + 1);
        let span = 4 * s.period(p);
        for q in 0..span {
            let base = s.product(p, q);
            let mut first = None;
            for &(m, n) in &valid {
                let full = s.product(p + (1 << m) + (1 << n), q);
                let Some(ij) = decompose(full, base, m, n) else {
                    t.fail("decomposition exists", vec![p, m as u64, n as u64, q]);
                    continue;
                };
                match first {
                    None => first = Some((m, n, ij)),
                    Some((m0, n0, ij0)) => t.check(ij == ij0, "power2 iff", || {
                        vec![p, m0 as u64, n0 as u64, m as u64, n as u64, q]
                    }),
                }
            }
        }
    });
    let t = sampled(
        ctx,
        2,
        SAMPLES,
        |rng| {
            let p = rng.random_range(1..1u64 << 12);
            let lo = bit_length(p) + 1;
            let m = rng.random_range(lo..=20);
            let n = rng.random_range(m + 1..=61);
            let s2 = rng.random_range(lo..=20);
            let t2 = rng.random_range(s2 + 1..=61);
            (p, m, n, s2, t2, rng.random_range(0..1u64 << 62))
        },
        |&(p, m, n, s2, t2, q), res, t| {
            let r = (|| -> crate::Result<bool> {
                let base = res.back_prod(p, q)?;
                let a = decompose(res.back_prod(p + (1 << m) + (1 << n), q)?, base, m, n);
                let c = decompose(res.back_prod(p + (1 << s2) + (1 << t2), q)?, base, s2, t2);
                Ok(a.is_some() && a == c)
            })();
            t.check(r.unwrap_or(false), "power2 iff (sampled)", || {
                vec![p, m as u64, n as u64, s2 as u64, t2 as u64, q]
            });
        },
    );
    tally = tally.merge(t);

    // Outside the hypothesis p < 2^{m-1}: look for disagreement with a valid pair.
    let search = Tally::par(ps, |p, t| {
        let m = bit_length(p);
        let (s0, t0) = (m + 1, m + 2);
        for n in m + 1..=b {
            let span = 4 * s.period(p);
            for q in 0..span {
                let base = s.product(p, q);
                let a = decompose(s.product(p + (1 << m) + (1 << n), q), base, m, n);
                let c = decompose(s.product(p + (1 << s0) + (1 << t0), q), base, s0, t0);
                t.check(a == c, "power2 without p < 2^{m-1}", || {
                    vec![p, m as u64, n as u64, s0 as u64, t0 as u64, q]
                });
            }
        }
    });
    let mut out = Outcome::from(tally);
    out.notes.push(format!(
        "necessity search: {} of {} cases with 2^(m-1) <= p < 2^m disagree with a valid pair",
        search.total, search.instances
    ));
    let mut findings = search.failures;
    findings.sort();
    findings.truncate(MAX_REPORTED);
    out.findings = findings;
    out
}

fn power3(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound as u32;
    let cells: Vec<(u32, u32)> = (1..=b)
        .flat_map(|n| (1..n.saturating_sub(1)).map(move |m| (m, n)))
        .collect();
    let mut tally = Tally::par(cells, |(m, n), t| {
        for p in 1..1u64 << m {
            let hi = s.period(p + (1 << (m + 1)) + (1 << n));
            let mid = s.period(p + (1 << m) + (1 << n));
            t.check(hi <= mid && mid <= 2 * hi, "power3 sandwich", || {
                vec![p, m as u64, n as u64]
            });
        }
    });
    let witness = s.covers(53) && s.period(45) == 8 && s.period(53) == 4;
    tally.check(witness, "equality witness", || vec![5, 3, 5]);
    tally.into()
}

fn idempotents(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(1..=ctx.bound, |p, t| {
        t.check(
            (s.product(p, p) == 0) == is_power_of_two(p),
            "p*p = 0 iff p = 2^m",
            || vec![p],
        );
    })
    .into()
}

fn seuil2(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(1..=ctx.bound, |p, t| {
        let mut k = 0;
        while 1u64 << k < s.period(p) {
            let v = s.product(p, 1 << k);
            t.check(
                is_power_of_two(v) && v.trailing_zeros() >= k,
                "p*2^k = 2^l with l >= k",
                || vec![p, k as u64],
            );
            k += 1;
        }
    })
    .into()
}

/// Uses rows rebuilt by the recurrence, so stored thresholds are not trusted.
fn seuil(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(3..=ctx.bound, |q, t| {
        if is_power_of_two(q) {
            return;
        }
        let p = q ^ top_bit(q);
        let (rq, rp) = match (row_by_recurrence(s, q), row_by_recurrence(s, p)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return t.fail("row by recurrence", vec![q]),
        };
        let theta = rq.threshold().unwrap_or(0);
        let (pq, pp) = (rq.period(), rp.period());
        let ok = (theta == pp && pq == 2 * pp) || (2 * theta < pp && pq == pp);
        t.check(ok, "threshold dichotomy", || vec![q]);
    })
    .into()
}

fn row_2n(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(0..=ctx.bound as u32, |n, t| {
        let p = 1u64 << n;
        let ok = match row_by_recurrence(s, p) {
            Ok(row) => {
                row.values().iter().copied().eq(0..p)
                    && (n == 0 || row.threshold() == Some(p / 2))
                    && s.period(p) == p
            }
            Err(_) => false,
        };
        t.check(ok, "2^n*q = q mod 2^n", || vec![n as u64]);
    })
    .into()
}

fn row_double(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound as u32;
    let cells: Vec<(u32, u32)> = (1..=b).flat_map(|n| (0..n).map(move |m| (m, n))).collect();
    Tally::par(cells, |(m, n), t| {
        let p = (1u64 << m) + (1 << n);
        let input = || vec![m as u64, n as u64];
        let Ok(row) = row_by_recurrence(s, p) else {
            return t.fail("row by recurrence", input());
        };
        t.check(row.period() == 1 << (m + 1), "period 2^{m+1}", input);
        for q in 0..1u64 << m {
            t.check(
                row.get(q) == q && row.get(q + (1 << m)) == q + (1 << n),
                "row formula",
                || vec![m as u64, n as u64, q],
            );
        }
    })
    .into()
}

fn row3(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let b = ctx.bound as u32;
    let cells: Vec<(u32, u32, u32)> = (2..=b)
        .flat_map(|n| (1..n).flat_map(move |m| (0..m).map(move |l| (l, m, n))))
        .collect();
    let mut tally = Tally::par(cells, |(l, m, n), t| {
        let p = (1u64 << l) + (1 << m) + (1 << n);
        let input = || vec![l as u64, m as u64, n as u64];
        let Ok(row) = row_by_recurrence(s, p) else {
            return t.fail("row by recurrence", input());
        };
        if l % 2 == 0 {
            t.check(
                row.period() == 1 << (l + 2),
                "period 2^{l+2} for even l",
                input,
            );
        } else {
            t.check(
                row.period() == 1 << (l + 1) && row.threshold() == Some(1 << (l - 1)),
                "period 2^{l+1}, threshold 2^{l-1} for odd l",
                input,
            );
        }
    });
    let t = Tally::par(1..=b, |n, t| {
        let full = 1u64 << n;
        for p in 1..1u64 << (n + 1) {
            let pi = s.period(p);
            let special = p == full
                || p == full + full / 2
                || (n % 2 == 0 && n >= 2 && p == full + full / 2 + full / 4);
            t.check(
                pi <= full && (pi == full) == special,
                "maximal periods below 2^{n+1}",
                || vec![n as u64, p],
            );
        }
    });
    tally = tally.merge(t);
    tally.into()
}

/// Whether `x ↦ 2^d x` preserves the operation on `[1, 2^n]` (`star`) or
/// `[0, 2^n)` (back), with the first failing pair.
fn scaling_failure(s: &ThresholdStore, d: u32, n: u32, star: bool) -> Option<(u64, u64)> {
    let big = 1u64 << n;
    let range = if star { 1..big + 1 } else { 0..big };
    for p in range.clone() {
        for q in range.clone() {
            let ok = if star {
                (s.star_product(n, p, q) << d) == s.star_product(n + d, p << d, q << d)
            } else {
                (s.product(p, q) << d) == s.product(p << d, q << d)
            };
            if !ok {
                return Some((p, q));
            }
        }
    }
    None
}

fn draphom(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let cells: Vec<(u32, u32, bool)> = (1..=ctx.bound as u32)
        .flat_map(|d| (1..=8u32).flat_map(move |n| [(d, n, true), (d, n, false)]))
        .collect();
    Tally::par(cells, |(d, n, star), t| {
        let r = d.trailing_zeros();
        let predicted = (n as u64) <= 1u64 << (r + 1);
        let failure = scaling_failure(s, d, n, star);
        let tag = star as u64;
        match (predicted, failure) {
            (true, Some((p, q))) => t.fail(
                "homomorphism predicted",
                vec![tag, d as u64, n as u64, p, q],
            ),
            (false, None) => t.fail("failure predicted", vec![tag, d as u64, n as u64]),
            _ => t.instances += 1,
        }
    })
    .into()
}

fn cordraphom(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for n in 0..=ctx.bound as u32 {
        let big = 1u64 << (1 << n);
        let t = Tally::par(0..big, |r, t| {
            for q in 0..1u64 << 12 {
                let lhs = big * s.product(1 + r, q);
                let rhs = s.product(1 + r * big, q);
                t.check(lhs == rhs, "2^{2^n}((1+r)*q) = (1+r 2^{2^n})*q", || {
                    vec![n as u64, r, q]
                });
            }
        });
        tally = tally.merge(t);
        let t = sampled(
            ctx,
            3 + n as u64,
            SAMPLES,
            |rng| (rng.random_range(0..big), rng.random_range(0..1u64 << 62)),
            |&(r, q), _, t| {
                let lhs = big * s.product(1 + r, q);
                let rhs = s.product(1 + r * big, q);
                t.check(lhs == rhs, "2^{2^n}((1+r)*q) = (1+r 2^{2^n})*q", || {
                    vec![n as u64, r, q]
                });
            },
        );
        tally = tally.merge(t);
    }
    tally.into()
}

fn circ_axioms(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for n in 1..=ctx.bound as u32 {
        let big = 1u64 << n;
        let star = |p, q| s.star_product(n, p, q);
        let circ = |p, q| {
            let v = star(p, q % big + 1);
            if v == 1 {
                big
            } else {
                v - 1
            }
        };
        let t = Tally::par(1..=big, |p, t| {
            for q in 1..=big {
                let pq = circ(p, q);
                for r in 1..=big {
                    let inp = || vec![n as u64, p, q, r];
                    t.check(
                        star(p, circ(q, r)) == circ(star(p, q), star(p, r)),
                        "(01)",
                        inp,
                    );
                    t.check(star(pq, r) == star(p, star(q, r)), "(02)", inp);
                    t.check(circ(pq, r) == circ(p, circ(q, r)), "associativity", inp);
                }
                t.check(circ(star(p, q), p) == pq, "(03)", || vec![n as u64, p, q]);
                if n <= 5 {
                    let witnesses: Vec<u64> = (1..=big)
                        .filter(|&c| (1..=big).all(|r| star(p, star(q, r)) == star(c, r)))
                        .collect();
                    t.check(
                        witnesses == [pq],
                        "composition has a unique representative",
                        || vec![n as u64, p, q],
                    );
                }
            }
        });
        tally = tally.merge(t);
    }
    // Backwards form: p∘q = p*(q−1)+1, defined for q ≥ 1.
    let t = sampled(
        ctx,
        10,
        SAMPLES,
        |rng| {
            let mut x = || rng.random_range(1..=BACK_SAMPLE_MAX);
            (x(), x(), x())
        },
        |&(p, q, r), _, t| {
            let circ = |a: u64, b: u64| s.product(a, b - 1) + 1;
            let inp = || vec![p, q, r];
            t.check(
                circ(circ(p, q), r) == circ(p, circ(q, r)),
                "back associativity",
                inp,
            );
            t.check(
                s.product(circ(p, q), r) == s.product(p, s.product(q, r)),
                "back (02)",
                inp,
            );
            let pq = s.product(p, q);
            let pr = s.product(p, r);
            if pq >= 1 {
                t.check(circ(pq, p) == circ(p, q), "back (03)", inp);
                if pr >= 1 {
                    t.check(s.product(p, circ(q, r)) == circ(pq, pr), "back (01)", inp);
                }
            }
        },
    );
    tally.merge(t).into()
}

fn projection(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for n in 1..=ctx.bound as u32 {
        let big = 1u64 << n;
        let red = |x: u64| (x - 1) % big + 1;
        let t = Tally::par(1..=2 * big, |p, t| {
            for q in 1..=2 * big {
                t.check(
                    red(s.star_product(n + 1, p, q)) == s.star_product(n, red(p), red(q)),
                    "reduction mod N is a homomorphism",
                    || vec![n as u64, p, q],
                );
            }
        });
        tally = tally.merge(t);
    }
    let t = sampled(
        ctx,
        11,
        SAMPLES,
        |rng| {
            (
                rng.random_range(0..=BACK_SAMPLE_MAX),
                rng.random_range(0..1u64 << 62),
                rng.random_range(1..=20u32),
            )
        },
        |&(p, q, m), _, t| {
            let mask = (1u64 << m) - 1;
            t.check(
                s.product(p & mask, q & mask) == s.product(p, q) & mask,
                "backwards reduction mod 2^m",
                || vec![p, q, m as u64],
            );
        },
    );
    tally.merge(t).into()
}

fn embedding(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for n in 1..=ctx.bound as u32 {
        let big = 1u64 << n;
        let t = Tally::par(1..=big, |p, t| {
            t.check(
                s.star_product(n + 1, big, p) == p + big,
                "N ⋆ p = p + N",
                || vec![n as u64, p],
            );
            for q in 1..=big {
                t.check(
                    s.star_product(n, p, q) + big == s.star_product(n + 1, p + big, q + big),
                    "p ↦ p + N is a homomorphism",
                    || vec![n as u64, p, q],
                );
            }
        });
        tally = tally.merge(t);
    }
    tally.into()
}

fn dougherty_i(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut tally = Tally::default();
    for k in 0..=ctx.bound as u32 {
        let big = 1u64 << (1 << k);
        let t = Tally::par(0..big, |a, t| {
            for b in 0..big - 1 {
                let p = a * big + b + 1;
                t.check(s.period(p) <= big, "π(p) <= 2^{2^k}", || {
                    vec![k as u64, a, b]
                });
            }
        });
        tally = tally.merge(t);
    }
    tally.into()
}

fn dougherty_ii(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let cells: Vec<(u32, u32, u64)> = (0..=ctx.bound as u32)
        .flat_map(|k| (0..=3u32).flat_map(move |m| (1..64u64).map(move |z| (k, m, z))))
        .collect();
    let skipped = std::sync::atomic::AtomicU64::new(0);
    let tally = Tally::par(cells, |(k, m, z), t| {
        let n = 1u32 << k;
        let x = z << ((m + 1) * n);
        let l = s.period(x + 1).trailing_zeros();
        if l > n {
            skipped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return;
        }
        let mask = (1u64 << n) - 1;
        for y in 0..=mask {
            let p = x + 1 + (y << (m * n));
            let twin = (1u64 << (l + n)) - (1 << n) + y + 1;
            let input = || vec![k as u64, m as u64, z, y];
            t.check(s.period(p) == s.period(twin), "same period", input);
            for q in 0..s.period(twin) {
                let v = s.product(twin, q);
                let (w, y2) = (v >> n, v & mask);
                t.check(
                    s.product(p, q) == s.product(x + 1, w) + (y2 << (m * n)),
                    "product correspondence",
                    || vec![k as u64, m as u64, z, y, q],
                );
            }
        }
    });
    let mut out = Outcome::from(tally);
    out.notes.push(format!(
        "{} (k, m, z) cases skipped because π(x+1) > 2^n",
        skipped.into_inner()
    ));
    out
}

fn maximal_oracle(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(1..=ctx.bound, |p, t| {
        let by_period = s.period(p) == 1u64 << bit_count(p - 1);
        let by_pattern = is_maximal(p);
        t.check(
            by_pattern == by_period,
            "pattern test iff period definition",
            || vec![p],
        );
        if !by_pattern || p == 1 {
            return;
        }
        for q in 0..s.period(p) {
            t.check(
                maximal_prod(p, q).ok() == Some(s.product(p, q)),
                "bit-scatter product",
                || vec![p, q],
            );
        }
        for m in 1..bit_length(p - 1) {
            let low = ((p - 1) & ((1 << m) - 1)) + 1;
            t.check(is_maximal(low), "reduction mod 2^m stays maximal", || {
                vec![p, m as u64]
            });
        }
    })
    .into()
}

fn maximal_stability(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let members = list_maximal(1, ctx.bound).expect("bound in range");
    let mut out = if (members.len() as u64).pow(2) <= 1_000_000 {
        Tally::par(members.clone(), |p, t| {
            for &q in &members {
                stability_check(s, p, q, t);
            }
        })
    } else {
        let picks = members.len();
        sampled(
            ctx,
            12,
            100_000,
            |rng| {
                (
                    members[rng.random_range(0..picks)],
                    members[rng.random_range(0..picks)],
                )
            },
            |&(p, q), _, t| stability_check(s, p, q, t),
        )
    };
    out.trim();
    let mut o = Outcome::from(out);
    o.notes.push(format!(
        "{} maximal elements up to {}",
        members.len(),
        ctx.bound
    ));
    o
}

fn stability_check(s: &ThresholdStore, p: u64, q: u64, t: &mut Tally) {
    let v = s.product(p, q);
    t.check(v == 0 || is_maximal(v), "p*q maximal or 0", || vec![p, q]);
    let c = s.product(p, q - 1) + 1;
    t.check(is_maximal(c), "p∘q maximal", || vec![p, q]);
}

fn maximal_bijection(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    Tally::par(2..=ctx.bound as u32, |n, t| {
        let hi = 1u64 << n;
        let lo = hi / 2 + hi / 4;
        let found = list_maximal(lo + 1, hi).unwrap_or_default();
        let expected = count_binary_partitions(n as u64 - 1).unwrap_or(0);
        t.check(
            found.len() as u128 == expected,
            "count = A018819(n-1)",
            || vec![n as u64, found.len() as u64],
        );
        for p in found {
            let ok = match maximal_to_partition_with_gap(p) {
                Ok((part, b0)) => {
                    let exponent: u128 = 1 + part
                        .parts()
                        .iter()
                        .map(|x| 1u128 << x.exponent)
                        .sum::<u128>();
                    b0 == 0
                        && part.sum() == n as u128 - 1
                        && partition_to_maximal(&part, 0).map(|e| e.get()).ok() == Some(p)
                        && s.period(p) as u128 == 1u128 << exponent
                }
                Err(_) => false,
            };
            t.check(ok, "partition round trip", || vec![n as u64, p]);
        }
    })
    .into()
}

fn theta_form(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut scan = Tally::par(2..=ctx.bound, |p, t| {
        let theta = s.threshold(p).unwrap_or(0) as u64;
        t.check(theta_has_form(theta), "θ = 2^i - 2^j", || vec![p, theta]);
    });
    scan.trim();
    let mut out = Outcome {
        tally: Tally {
            instances: scan.instances,
            ..Tally::default()
        },
        findings: scan.failures,
        notes: Vec::new(),
    };
    out.notes.push(format!(
        "advisory: {} thresholds not of the form 2^i - 2^j",
        scan.total
    ));
    out
}

const PERIODS_256: [u8; 256] = [
    0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 2, 2, 4, //
    1, 2, 2, 3, 2, 2, 2, 4, 2, 2, 2, 4, 3, 3, 3, 5, //
    1, 2, 2, 3, 2, 2, 2, 4, 2, 2, 2, 4, 3, 3, 3, 5, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    1, 2, 2, 3, 2, 2, 2, 4, 2, 2, 2, 4, 3, 3, 3, 5, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    3, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 4, 3, 7, //
    1, 2, 2, 3, 2, 2, 2, 4, 2, 2, 2, 4, 3, 3, 3, 5, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    3, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 4, 3, 7, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    2, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 3, 3, 6, //
    4, 2, 2, 4, 2, 2, 2, 4, 2, 2, 2, 4, 4, 4, 3, 8, //
];

/// `π(p)` for `p ∈ [1, 256]` as printed, in row-major order.
pub fn reference_periods_256() -> impl Iterator<Item = (u64, u64)> {
    PERIODS_256
        .iter()
        .enumerate()
        .map(|(i, &e)| (i as u64 + 1, 1u64 << e))
}

/// `(p, π(p), θ(p))` for `p ∈ [1, 18]` as printed; θ(1) is not defined.
pub const PERIOD_THETA_18: [(u64, u64, Option<u64>); 18] = [
    (1, 1, None),
    (2, 2, Some(1)),
    (3, 2, Some(1)),
    (4, 4, Some(2)),
    (5, 2, Some(1)),
    (6, 4, Some(2)),
    (7, 4, Some(2)),
    (8, 8, Some(4)),
    (9, 2, Some(1)),
    (10, 4, Some(2)),
    (11, 4, Some(2)),
    (12, 8, Some(4)),
    (13, 4, Some(2)),
    (14, 4, Some(1)),
    (15, 4, Some(1)),
    (16, 16, Some(8)),
    (17, 2, Some(1)),
    (18, 4, Some(2)),
];

fn period_table_256(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut t = Tally::default();
    for (p, pi) in reference_periods_256() {
        t.check(s.period(p) == pi, "printed period", || {
            vec![p, s.period(p), pi]
        });
    }
    t.into()
}

fn period_theta_18(ctx: &Ctx<'_>) -> Outcome {
    let s = ctx.store;
    let mut t = Tally::default();
    for (p, pi, theta) in PERIOD_THETA_18 {
        let got = s.threshold(p).map(u64::from);
        t.check(
            s.period(p) == pi && got == theta,
            "printed period and threshold",
            || vec![p],
        );
    }
    t.into()
}
