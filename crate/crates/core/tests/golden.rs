//! Regression tests against frozen fixture files. Set `SIBUYA_BLESS=1` to
//! rewrite the fixtures from the current implementation.

use std::path::PathBuf;

use sibuya_core::export::{from_csv, from_json, to_csv, to_json, StirlingRecord, TriangleEntry};
use sibuya_core::simulate::{leaf_statistics, LeafSummary, RngStream};
use sibuya_core::stirling::build_triangle;
use sibuya_core::AlphaParam;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn check_or_bless(name: &str, fresh: &str) -> String {
    let path = fixture(name);
    if std::env::var_os("SIBUYA_BLESS").is_some() {
        std::fs::write(&path, fresh).unwrap();
    }
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn stirling_table_half() {
    let alpha = AlphaParam::new(1, 2).unwrap();
    let record = StirlingRecord::from_table(&build_triangle(&alpha, 12)).unwrap();
    let frozen = check_or_bless("stirling_1_2_n12.csv", &to_csv(&record.stirling).unwrap());
    let rows: Vec<TriangleEntry> = from_csv(&frozen).unwrap();
    assert_eq!(rows, record.stirling);
    // S_{3,2} = S_{2,1} + (2 − 2α)S_{2,2} = 1/2 + 1.
    assert_eq!(
        rows.iter()
            .find(|e| e.n == 3 && e.k == 2)
            .unwrap()
            .value()
            .unwrap()
            .to_string(),
        "3/2"
    );
}

#[test]
fn stirling_table_third_json() {
    let alpha = AlphaParam::new(1, 3).unwrap();
    let record = StirlingRecord::from_table(&build_triangle(&alpha, 10)).unwrap();
    let frozen = check_or_bless("stirling_1_3_n10.json", &to_json(&record).unwrap());
    assert_eq!(from_json::<StirlingRecord>(&frozen).unwrap(), record);
}

#[test]
fn leaf_statistics_seed_42() {
    let alpha = AlphaParam::new(1, 2).unwrap();
    let summary = leaf_statistics(&alpha, 1000, 200, &RngStream::new(42, 0)).unwrap();
    let frozen = check_or_bless("leaves_1_2_n1000_seed42.json", &to_json(&summary).unwrap());
    assert_eq!(from_json::<LeafSummary>(&frozen).unwrap(), summary);
    assert_eq!(summary.histogram.iter().map(|b| b.count).sum::<u64>(), 200);
}
