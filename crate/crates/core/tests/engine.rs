use std::thread;

use laver::{Convention, Error, Laver};
use proptest::prelude::*;

#[test]
fn concurrent_growth_and_queries() {
    let engine = Laver::with_limit(1 << 18);
    thread::scope(|s| {
        for t in 0..8u64 {
            let engine = &engine;
            s.spawn(move || {
                for i in 0..200u64 {
                    let p = 1 + (i * 7919 + t * 104_729) % (1 << 18);
                    let row = engine.compute_row(p).unwrap();
                    assert_eq!(row.period(), engine.period(p).unwrap());
                    assert_eq!(engine.back_prod(p, 5).unwrap(), row.get(5));
                }
            });
        }
    });
    assert!(engine.built() <= 1 << 18);
}

#[test]
fn conventions_agree() {
    let e = Laver::global();
    for n in 1..=6u32 {
        let big = 1u64 << n;
        for p in 1..=big {
            for q in 1..=big {
                let star = e.prod(Convention::star(n).unwrap(), p, q).unwrap();
                let back = e.back_prod(big - p, big - q).unwrap();
                assert_eq!(star, big - back);
            }
        }
    }
    assert!(Convention::star(0).is_err());
    assert!(matches!(e.star_prod(3, 9, 1), Err(Error::Domain(_))));
    assert!(e.back_prod(1 << 62, 1).is_err());
}

#[test]
fn small_dense_limit_still_answers() {
    let small = Laver::with_limit(1 << 10);
    let e = Laver::global();
    for p in [
        2000u64,
        4097,
        1 << 20 | 5,
        (1 << 40) + 1234,
        (1 << 61) + 999,
    ] {
        assert_eq!(small.period(p).unwrap(), e.period(p).unwrap(), "p = {p}");
        for q in [0u64, 1, 7, 12345] {
            assert_eq!(small.back_prod(p, q).unwrap(), e.back_prod(p, q).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn left_distributive(p in 0u64..1 << 20, q in 0u64..1 << 20, r in 0u64..1 << 62) {
        let e = Laver::global();
        let lhs = e.back_prod(p, e.back_prod(q, r).unwrap()).unwrap();
        let rhs = e.back_prod(e.back_prod(p, q).unwrap(), e.back_prod(p, r).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn coperiod_is_stable(p in 1u64..1 << 16, shift in 17u32..61) {
        let e = Laver::global();
        prop_assert_eq!(e.coperiod(p).unwrap(), e.period(p + (1 << shift)).unwrap());
        let ratio = e.coperiod(p).unwrap() / e.period(p).unwrap();
        prop_assert!(ratio == 1 || ratio == 2);
    }

    #[test]
    fn circ_is_associative(p in 1u64..1 << 20, q in 1u64..1 << 20, r in 1u64..1 << 20) {
        let e = Laver::global();
        let c = |a, b| e.circ(a, b, Convention::Back).unwrap();
        prop_assert_eq!(c(c(p, q), r), c(p, c(q, r)));
    }
}
