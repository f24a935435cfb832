//! Plug-in entropy and mutual information over count tables, in bits.
//!
//! Entropies are returned in total form (summed over the `n` records);
//! mutual information is per record. Cells with zero count contribute zero.

use crate::dataset::{CondCountTable, PairCounts};
use crate::error::{Error, Result};
use crate::Bits;

/// `-sum c * log2(c / total)` over nonzero cells.
fn entropy_of(counts: &[u64], total: u64) -> Bits {
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            -c * (c / total).log2()
        })
        .sum()
}

/// Total empirical entropy `n * H` of a count vector.
pub fn empirical_entropy(counts: &[u64]) -> Result<Bits> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::argument("entropy of an all-zero count vector"));
    }
    Ok(entropy_of(counts, n))
}

/// Total conditional empirical entropy `sum_s sum_q -n[q,s] log2(n[q,s]/n[s])`.
pub fn conditional_empirical_entropy(table: &CondCountTable) -> Bits {
    table
        .rows()
        .zip(table.state_totals())
        .map(|(row, &total)| entropy_of(row, total))
        .sum()
}

/// Per-record mutual information of the two attributes in `pc`.
pub fn mutual_information(pc: &PairCounts) -> Bits {
    let n = pc.n();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let rows = pc.row_sums();
    let cols = pc.col_sums();
    let (r, c) = pc.shape();
    let mut mi = 0.0;
    for u in 0..r {
        for v in 0..c {
            let joint = pc.get(u, v);
            if joint == 0 {
                continue;
            }
            let joint = joint as f64;
            // p(u,v) / (p(u) p(v)) = n * n(u,v) / (n(u) n(v))
            mi += joint * (nf * joint / (rows[u] as f64 * cols[v] as f64)).log2();
        }
    }
    // rounding can leave a tiny negative value for independent tables
    (mi / nf).max(0.0)
}
