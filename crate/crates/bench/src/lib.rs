//! Synthetic workloads shared by the benchmarks.

use dendrolearn::rng::SplitMix64;
use dendrolearn::{AttributeSchema, Dataset};

/// `n` records over `r` attributes of cardinality `card`; each attribute
/// copies its predecessor half of the time, giving a chain-like dependence.
pub fn chain_dataset(r: usize, card: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| {
            let mut row = Vec::with_capacity(r);
            for j in 0..r {
                let v = if j > 0 && rng.below(2) == 0 {
                    row[j - 1]
                } else {
                    rng.below(card as u64) as u32
                };
                row.push(v);
            }
            row
        })
        .collect();
    let schema = AttributeSchema::anonymous(vec![card; r]).expect("valid cardinalities");
    Dataset::from_codes(schema, &rows).expect("codes within range")
}
