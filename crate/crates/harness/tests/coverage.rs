//! A smoke run emits a record for every anchor in scope.

use std::collections::BTreeSet;
use std::path::Path;

use mehler_harness::anchors::{anchor_of, base_label, IN_SCOPE};
use mehler_harness::{run_suites, Config, Context, Suite};

#[test]
fn smoke_run_covers_every_anchor() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml");
    let ctx = Context::new(Config::load(&path).unwrap()).unwrap();
    let runs = run_suites(&ctx, &Suite::ALL).unwrap();
    let mut seen = BTreeSet::new();
    for r in runs.iter().flat_map(|r| &r.reports) {
        assert_eq!(anchor_of(&r.inequality_id), Some(r.anchor.as_str()), "{}", r.inequality_id);
        seen.insert(base_label(&r.anchor).to_string());
    }
    let missing: Vec<_> = IN_SCOPE.iter().filter(|l| !seen.contains(**l)).collect();
    assert!(missing.is_empty(), "anchors without records: {missing:?}");
}
