//! Bayesian belief network structure search under a fixed node ordering.
//!
//! The description length decomposes over nodes, so each node's parent set
//! is chosen independently among its predecessors in the ordering. The
//! exhaustive search is therefore globally optimal for that ordering; the
//! greedy search adds one parent at a time and carries no such guarantee.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{order_positions, DendroidStructure};
use crate::scoring::{
    check_structure, description_length, node_description_length, ModelClass, ParentSets, Penalty,
    ScoreBreakdown,
};
use crate::Bits;

pub const DEFAULT_MAX_PARENTS: usize = 4;

/// Default cap on the number of parent subsets scored by
/// [`learn_bbn_exhaustive`].
pub const DEFAULT_SUBSET_BUDGET: u64 = 1 << 22;

/// Greedy additions must lower a node's score by more than this many bits.
const GREEDY_MIN_IMPROVEMENT: Bits = 1e-9;

/// A DAG whose parents all precede their child in `order`. Parent lists are
/// kept sorted by attribute index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbnStructure {
    order: Vec<usize>,
    parents: Vec<Vec<usize>>,
}

impl BbnStructure {
    /// `parents[node]` lists the parents of attribute `node`.
    pub fn new(order: Vec<usize>, mut parents: Vec<Vec<usize>>) -> Result<Self> {
        let position = order_positions(&order, parents.len())?;
        for (node, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            if ps.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::argument(format!("node {node} lists a parent twice")));
            }
            for &p in ps.iter() {
                if p >= position.len() || position[p] >= position[node] {
                    return Err(Error::argument(format!(
                        "parent {p} of node {node} does not precede it in the order"
                    )));
                }
            }
        }
        Ok(Self { order, parents })
    }

    /// No arcs, natural order.
    pub fn empty(nodes: usize) -> Self {
        Self {
            order: (0..nodes).collect(),
            parents: vec![Vec::new(); nodes],
        }
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }
}

impl From<&DendroidStructure> for BbnStructure {
    fn from(d: &DendroidStructure) -> Self {
        Self {
            order: d.order().to_vec(),
            parents: (0..d.num_nodes()).map(|n| d.parents(n).to_vec()).collect(),
        }
    }
}

impl ParentSets for BbnStructure {
    fn num_nodes(&self) -> usize {
        self.parents.len()
    }

    fn order(&self) -> &[usize] {
        &self.order
    }

    fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    fn model_class(&self) -> ModelClass {
        ModelClass::OrderedDags {
            nodes: self.parents.len(),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All subsets of `items` with at most `max` elements, sorted by size and
/// then lexicographically.
fn subsets_up_to(items: &[usize], max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max.min(items.len()) {
        let mut next = Vec::new();
        for set in &frontier {
            let start = set.last().map_or(0, |&last| {
                items.iter().position(|&x| x == last).expect("member") + 1
            });
            for &x in &items[start..] {
                let mut s = set.clone();
                s.push(x);
                next.push(s);
            }
        }
        for s in &mut next {
            s.sort_unstable();
        }
        next.sort();
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn predecessors(order: &[usize], d: &Dataset) -> Result<Vec<Vec<usize>>> {
    order_positions(order, d.num_attrs())?;
    let mut preds = vec![Vec::new(); order.len()];
    for (k, &node) in order.iter().enumerate() {
        let mut p = order[..k].to_vec();
        p.sort_unstable();
        preds[node] = p;
    }
    Ok(preds)
}

/// Exhaustive per-node parent-set search, `|parents| <= max_parents`.
pub fn learn_bbn_exhaustive(
    d: &Dataset,
    order: &[usize],
    penalty: Penalty,
    max_parents: usize,
) -> Result<BbnStructure> {
    learn_bbn_exhaustive_budgeted(d, order, penalty, max_parents, DEFAULT_SUBSET_BUDGET)
}

pub fn learn_bbn_exhaustive_budgeted(
    d: &Dataset,
    order: &[usize],
    penalty: Penalty,
    max_parents: usize,
    budget: u64,
) -> Result<BbnStructure> {
    let preds = predecessors(order, d)?;
    let needed: u64 = preds
        .iter()
        .map(|p| {
            (0..=max_parents.min(p.len()) as u64)
                .map(|k| binomial(p.len() as u64, k))
                .fold(0u64, u64::saturating_add)
        })
        .fold(0u64, u64::saturating_add);
    if needed > budget {
        return Err(Error::capacity(format!(
            "exhaustive search would score {needed} parent sets (budget {budget}); \
             lower max_parents or use the greedy search"
        )));
    }
    let parents = preds
        .par_iter()
        .enumerate()
        .map(|(node, p)| best_parent_set(d, node, p, penalty, max_parents))
        .collect::<Result<Vec<_>>>()?;
    BbnStructure::new(order.to_vec(), parents)
}

fn best_parent_set(
    d: &Dataset,
    node: usize,
    candidates: &[usize],
    penalty: Penalty,
    max_parents: usize,
) -> Result<Vec<usize>> {
    let mut best: Option<(Vec<usize>, Bits)> = None;
    // subsets arrive smallest first, then lexicographic, so only a strictly
    // lower score replaces the incumbent
    for set in subsets_up_to(candidates, max_parents) {
        let score = node_description_length(d, node, &set, penalty)?;
        if best.as_ref().map_or(true, |(_, b)| score < b - 1e-9) {
            best = Some((set, score));
        }
    }
    Ok(best.expect("the empty set is always scored").0)
}

/// Greedy parent addition per node.
pub fn learn_bbn_greedy(
    d: &Dataset,
    order: &[usize],
    penalty: Penalty,
    max_parents: usize,
) -> Result<BbnStructure> {
    let preds = predecessors(order, d)?;
    let parents = preds
        .par_iter()
        .enumerate()
        .map(|(node, candidates)| {
            let mut chosen: Vec<usize> = Vec::new();
            let mut current = node_description_length(d, node, &chosen, penalty)?;
            while chosen.len() < max_parents {
                let mut step: Option<(usize, Bits)> = None;
                for &c in candidates.iter().filter(|c| !chosen.contains(c)) {
                    let mut trial = chosen.clone();
                    trial.push(c);
                    trial.sort_unstable();
                    let score = node_description_length(d, node, &trial, penalty)?;
                    if step.map_or(true, |(_, s)| score < s) {
                        step = Some((c, score));
                    }
                }
                match step {
                    Some((c, score)) if score < current - GREEDY_MIN_IMPROVEMENT => {
                        chosen.push(c);
                        chosen.sort_unstable();
                        current = score;
                    }
                    _ => break,
                }
            }
            Ok(chosen)
        })
        .collect::<Result<Vec<_>>>()?;
    BbnStructure::new(order.to_vec(), parents)
}

pub fn bbn_description_length(s: &BbnStructure, d: &Dataset, penalty: Penalty) -> Result<ScoreBreakdown> {
    check_structure(s, d.schema())?;
    description_length(s, d, penalty, false)
}
