use laver::ld::row_by_recurrence;
use laver::{Error, FormatError, Laver, RowCache, ThresholdStore};
use proptest::prelude::*;

fn store() -> &'static ThresholdStore {
    static STORE: std::sync::OnceLock<ThresholdStore> = std::sync::OnceLock::new();
    STORE.get_or_init(|| ThresholdStore::scan(1 << 15, None).unwrap())
}

#[test]
fn save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.lvrt");
    let s = ThresholdStore::scan(5000, None).unwrap();
    s.save(&path).unwrap();
    let loaded = ThresholdStore::load(&path).unwrap();
    assert_eq!(loaded.max_p(), 5000);
    assert_eq!(loaded.thetas(), s.thetas());
    assert_eq!(
        std::fs::read(&path).unwrap().len(),
        4 + 4 + 8 + 4 * 4999 + 4
    );
}

#[test]
fn damaged_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.lvrt");
    let bytes = ThresholdStore::scan(64, None).unwrap().to_bytes();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(ThresholdStore::load(&path), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        ThresholdStore::from_bytes(&bad),
        Err(FormatError::BadMagic { .. })
    ));
    assert!(matches!(
        ThresholdStore::load(dir.path().join("missing")),
        Err(Error::Io(_))
    ));
}

#[test]
fn engine_over_a_loaded_store() {
    let s = ThresholdStore::scan(1 << 12, None).unwrap();
    let engine = Laver::with_store(s, 1 << 12, 1 << 20);
    assert_eq!(engine.built(), 1 << 12);
    assert_eq!(engine.period(45).unwrap(), 8);
    assert!(matches!(engine.table(1 << 13), Err(Error::Capacity { .. })));
}

proptest! {
    #[test]
    fn three_ways_to_a_row(p in 1u64..1 << 15) {
        let s = store();
        let honest = row_by_recurrence(s, p).unwrap();
        let rebuilt = s.reconstruct_row(p).unwrap();
        prop_assert_eq!(honest.values(), rebuilt.values());
        prop_assert_eq!(honest.period(), s.period(p));
        for (q, &v) in honest.values().iter().enumerate() {
            prop_assert_eq!(s.product(p, q as u64), v);
        }
        if p >= 2 {
            prop_assert_eq!(honest.threshold(), s.threshold(p).map(u64::from));
        }
    }

    #[test]
    fn cached_lookup_matches(p in 1u64..1 << 15, q in 0u64..1 << 40) {
        let cache = RowCache::new(1 << 20);
        prop_assert_eq!(store().lookup_product(&cache, p, q).unwrap(), store().product(p, q));
    }

    #[test]
    fn resume_from_any_prefix(k in 2u64..3000) {
        let partial = ThresholdStore::scan(k, None).unwrap();
        let resumed = ThresholdStore::scan(3000, Some(partial)).unwrap();
        prop_assert_eq!(resumed.to_bytes(), ThresholdStore::scan(3000, None).unwrap().to_bytes());
    }

    #[test]
    fn row_bounds(p in 1u64..1 << 15) {
        let s = store();
        let pi = s.period(p);
        prop_assert!(pi <= 1 << (p - 1).count_ones());
        prop_assert_eq!(s.product(p, pi - 1), p - 1);
        for q in 0..pi {
            prop_assert_eq!(s.product(p, q) & !(p - 1), 0);
        }
    }
}
