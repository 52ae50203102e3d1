use truncmeta::imputation::Method;
use truncmeta::inference::meta_analyze_matrix;
use truncmeta::model::{PanelSchema, StudyMode, Transform};
use truncmeta::numerics::SeededRng;
use truncmeta::store::{is_store, read_store, truncate_matrix, write_store, TruncatedStore};

fn schema() -> PanelSchema {
    PanelSchema::new(vec![
        StudyMode::Observed,
        StudyMode::Censored { threshold: 0.001 },
        StudyMode::Observed,
        StudyMode::Censored { threshold: 0.01 },
        StudyMode::Censored { threshold: 0.01 },
        StudyMode::Observed,
        StudyMode::Censored { threshold: 0.05 },
    ])
    .unwrap()
}

fn matrix(n: usize) -> (Vec<u64>, Vec<Vec<f64>>) {
    let mut rng = SeededRng::new(4);
    let ids = (0..n as u64).map(|i| 1_000_000 + 3 * i).collect();
    let p = (0..n)
        .map(|_| (0..7).map(|_| rng.open01().powi(3)).collect())
        .collect();
    (ids, p)
}

fn build() -> (TruncatedStore, Vec<Vec<f64>>) {
    let (ids, p) = matrix(1000);
    let thr: Vec<Option<f64>> = schema()
        .modes()
        .iter()
        .map(|m| match *m {
            StudyMode::Observed => None,
            StudyMode::Censored { threshold } => Some(threshold),
        })
        .collect();
    let (store, _) = truncate_matrix(&ids, &p, &thr).unwrap();
    (store, p)
}

#[test]
fn file_round_trip_preserves_every_bit() {
    let (store, _) = build();
    assert_eq!(store.schema(), &schema());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.tpv");
    write_store(&store, &path).unwrap();
    assert!(is_store(&path).unwrap());
    let back = read_store(&path).unwrap();
    assert_eq!(back, store);
    assert_eq!(back.to_bytes(), store.to_bytes());
}

#[test]
fn stored_rows_analyze_like_truncated_input() {
    let (store, p) = build();
    let s = schema();
    let rows = store.to_rows();
    for (row, full) in rows.iter().zip(&p) {
        assert_eq!(row.panel, s.apply(full).unwrap());
    }
    let a = meta_analyze_matrix(&rows, Method::Mean, Transform::Fisher, 1, 0).unwrap();
    let again = TruncatedStore::from_rows(&s, &rows).unwrap();
    let b = meta_analyze_matrix(&again.to_rows(), Method::Mean, Transform::Fisher, 1, 0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_single_byte_corruption_is_rejected() {
    let (store, _) = build();
    let bytes = store.to_bytes();
    let step = (bytes.len() / 997).max(1);
    for pos in (0..bytes.len()).step_by(step) {
        let mut c = bytes.clone();
        c[pos] ^= 0x10;
        assert!(TruncatedStore::from_bytes(&c).is_err(), "flip at {pos}");
    }
    assert!(TruncatedStore::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(TruncatedStore::from_bytes(&longer).is_err());
}

#[test]
fn non_store_files_are_recognised() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "id,a\n1,0.5\n").unwrap();
    assert!(!is_store(&path).unwrap());
    assert!(read_store(&path).is_err());
}
