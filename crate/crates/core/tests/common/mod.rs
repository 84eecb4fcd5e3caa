#![allow(dead_code)]

use gcrm::estimators::{estimate_canonical_corr, z_score, Z_GATE};
use gcrm::kernels::{CorrelationIndex, PartitionSpec};
use gcrm::samplers::PairBatch;

pub fn idx(n: &[usize]) -> CorrelationIndex {
    CorrelationIndex::new(n.to_vec())
}

#[track_caller]
pub fn assert_z(estimate: f64, exact: f64, std_error: f64, what: &str) {
    let z = z_score(estimate, exact, std_error);
    assert!(z.abs() <= Z_GATE, "{what}: estimate {estimate} vs exact {exact} (se {std_error}, z {z:.2})");
}

#[track_caller]
pub fn assert_rho(batch: &PairBatch, part: &PartitionSpec, n: &[usize], exact: f64) {
    let (est, se) = estimate_canonical_corr(batch, part, &idx(n)).unwrap();
    assert_z(est, exact, se, &format!("rho{:?}", n));
}

/// Mean and standard error of `f` over the rows of one side of a batch.
pub fn side_mean(batch: &PairBatch, y_side: bool, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let mut acc = gcrm::estimators::MeanAccumulator::default();
    for row in 0..batch.len() {
        acc.push(f(if y_side { batch.y(row) } else { batch.x(row) }));
    }
    (acc.mean(), acc.std_error())
}
