mod support;

use screener_core::exec::Execution;
use screener_stats::{concordance_report, read_pairs};
use support::fixture132;

#[test]
fn report_matches_generator() {
    let recs = read_pairs(&fixture132::csv_path()).unwrap();
    assert_eq!(recs.len(), 132);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let report = serde_json::to_value(concordance_report(&recs, exec).unwrap()).unwrap();
        let c = fixture132::compare(&report);
        assert!(c.mismatches.is_empty(), "{exec:?}:\n{}", c.mismatches.join("\n"));
        assert_eq!((c.exact_fields, c.float_fields), (19, 12));
    }
}
