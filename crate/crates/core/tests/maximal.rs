use std::collections::{BTreeSet, VecDeque};

use laver::element::{bit_count, bit_length};
use laver::maximal::{
    insert_zero_block, is_maximal, is_maximal_by_period, list_maximal, maximal_prod,
    maximal_to_partition_with_gap, BinaryPartition, MaximalPattern,
};
use laver::Laver;
use proptest::prelude::*;

const WORD_BITS: u32 = 16;

/// Closure of `1^k` under all insertions that keep the word within `WORD_BITS`.
fn generated(k: u32) -> BTreeSet<u64> {
    let start = (1u64 << k) - 1;
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        for a in 0..WORD_BITS {
            for b in 1.. {
                let zeros = b << a;
                if bit_length(w) as u64 + zeros > WORD_BITS as u64 {
                    break;
                }
                let next = insert_zero_block(w, a, b).unwrap();
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// With an even number of ones no split leaves exactly one 1 in `u`, so a gap
/// right after the leading one (`b₀ > 0`) is never produced.
#[test]
fn insertions_generate_the_gapless_maximal_words() {
    for k in 1..=6 {
        let expected: BTreeSet<u64> = (1u64..1 << WORD_BITS)
            .filter(|&w| bit_count(w) == k && is_maximal(w + 1))
            .filter(|&w| k % 2 == 1 || maximal_to_partition_with_gap(w + 1).unwrap().1 == 0)
            .collect();
        assert_eq!(generated(k), expected, "k = {k}");
    }
    assert!(is_maximal(0b101 + 1));
    assert!(!generated(2).contains(&0b101));
}

#[test]
fn insertion_examples() {
    assert_eq!(insert_zero_block(0b11, 0, 2).unwrap(), 0b1100);
    assert!(is_maximal(0b1100 + 1));
    assert_eq!(insert_zero_block(0b1011, 3, 0).unwrap(), 0b1011);
    assert!(insert_zero_block(0, 0, 1).is_err());
    assert!(insert_zero_block(1, 61, 1).is_err());
}

#[test]
fn pattern_matches_period_definition() {
    let engine = Laver::global();
    for p in 1..=1u64 << 12 {
        assert_eq!(
            is_maximal(p),
            is_maximal_by_period(engine, p).unwrap(),
            "p = {p}"
        );
    }
}

#[test]
fn listing_and_products() {
    assert_eq!(
        list_maximal(1, 16).unwrap(),
        vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 16]
    );
    assert!(list_maximal(0, 4).is_err());
    let p = 0b1010110000111100000000 + 1;
    assert_eq!(
        maximal_prod(p, 0b11000101).unwrap(),
        0b1010000000010100000000
    );
    assert_eq!(
        Laver::global().back_prod(p, 0b11000101).unwrap(),
        0b1010000000010100000000
    );
    assert!(maximal_prod(14, 1).is_err());
}

proptest! {
    #[test]
    fn insertion_preserves_patterns(
        p in prop::sample::select(list_maximal(2, 1 << 16).unwrap()),
        a in 0u32..4,
        b in 0u64..4,
    ) {
        let w = p - 1;
        let out = insert_zero_block(w, a, b).unwrap();
        prop_assert!(MaximalPattern::parse(out + 1).is_some());
        prop_assert_eq!(bit_count(out), bit_count(w));
    }

    #[test]
    fn partitions_round_trip_through_text(parts in proptest::collection::vec((0u32..10, 1u64..5), 0..6)) {
        let partition = BinaryPartition::new(parts.into_iter().map(|(exponent, multiplicity)| {
            laver::maximal::Part { exponent, multiplicity }
        })).unwrap();
        let text = partition.to_string();
        prop_assert_eq!(text.parse::<BinaryPartition>().unwrap(), partition);
    }
}
