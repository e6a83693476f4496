//! One module per subcommand.

pub mod classical_limit;
pub mod entropy_scan;
pub mod simulate;
pub mod smooth;
pub mod verify;

use retrosmooth::trajectory::Instrument;

/// Labels of a record joined by spaces.
pub fn record_label(labels: &[String]) -> String {
    labels.join(" ")
}

/// Labels of an index record.
pub fn labels_of(instrument: &Instrument<f64>, record: &[usize]) -> Vec<String> {
    record.iter().map(|&y| instrument.outcomes()[y].clone()).collect()
}

/// Every record of length `len` over `n` outcomes in lexicographic order.
pub fn all_records(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|r| {
                (0..n).map(move |y| {
                    let mut r = r.clone();
                    r.push(y);
                    r
                })
            })
            .collect();
    }
    out
}
