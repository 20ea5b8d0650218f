use laver::term::{equal_in, LdTerm};
use laver::Laver;
use proptest::prelude::*;

fn term(max_atom: u64) -> impl Strategy<Value = LdTerm> {
    let leaf = (1..=max_atom).prop_map(|x| LdTerm::atom(x).unwrap());
    leaf.prop_recursive(6, 64, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| LdTerm::op(a, b))
    })
}

#[test]
fn left_powers_of_one() {
    let e = Laver::global();
    for n in 1..=8u32 {
        let big = 1u64 << n;
        for k in 1..=big {
            assert_eq!(LdTerm::left_power(1, k).unwrap().eval(e, n).unwrap(), k);
        }
        let wrap = LdTerm::left_power(1, big + 1).unwrap();
        assert_eq!(wrap.eval(e, n).unwrap(), 1, "n = {n}");
        assert_eq!(e.left_power(n, 1, big + 1).unwrap(), 1);
    }
}

#[test]
fn order_three_example() {
    assert_eq!(
        LdTerm::parse("(2*3)")
            .unwrap()
            .eval(Laver::global(), 3)
            .unwrap(),
        7
    );
}

proptest! {
    #[test]
    fn text_round_trip(t in term(64)) {
        prop_assert_eq!(LdTerm::parse(&t.unparse()).unwrap(), t);
    }

    #[test]
    fn left_distributivity_is_sound(a in term(32), b in term(32), c in term(32), n in 5u32..10) {
        let e = Laver::global();
        let lhs = LdTerm::op(a.clone(), LdTerm::op(b.clone(), c.clone()));
        let rhs = LdTerm::op(LdTerm::op(a.clone(), b), LdTerm::op(a, c));
        prop_assert!(equal_in(e, n, &lhs, &rhs).unwrap());
    }

    #[test]
    fn reduction_commutes_with_evaluation(t in term(64), m in 7u32..12) {
        let e = Laver::global();
        let half = 1u64 << (m - 1);
        let r = |x: u64| (x - 1) % half + 1;
        let top = t.eval(e, m).unwrap();
        prop_assert_eq!(r(top), relabel(&t, r).eval(e, m - 1).unwrap());
    }
}

/// Rewrites every atom through `f` by way of the text form.
fn relabel(t: &LdTerm, f: impl Fn(u64) -> u64) -> LdTerm {
    let text = t.unparse();
    let mut out = String::new();
    let mut num = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_digit() {
            num.push(ch);
        } else {
            if !num.is_empty() {
                out.push_str(&f(num.parse().unwrap()).to_string());
                num.clear();
            }
            if ch != ' ' {
                out.push(ch);
            }
        }
    }
    LdTerm::parse(&out).unwrap()
}
