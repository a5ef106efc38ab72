//! The sequential fallback produces the same results as the thread pool.
//! Kept in its own binary because the switch is process-wide.

use weakforms::duality::duality_check;
use weakforms::exec;
use weakforms::spaces::{gap_sets, Space};
use weakforms::trace::TraceTable;
use weakforms::weak::weak_basis;

fn snapshot() -> (Vec<String>, String, String, String) {
    let t = TraceTable::compute(19, 4, 60).unwrap();
    let traces = (1..=60).map(|n| t.trace(n).to_string()).collect();
    let d = serde_json::to_string(&duality_check(17, 6, (-4, 10), (-2, 12)).unwrap()).unwrap();
    let g = serde_json::to_string(&gap_sets(29, 12).unwrap()).unwrap();
    let b = serde_json::to_string(&weak_basis(23, -2, Space::S, 6, 10).unwrap()).unwrap();
    (traces, d, g, b)
}

#[test]
fn sequential_matches_parallel() {
    exec::set_parallel(true);
    let par = snapshot();
    exec::set_parallel(false);
    assert!(!exec::parallel_enabled());
    let seq = snapshot();
    exec::set_parallel(true);
    assert_eq!(par, seq);
}
