//! Dependency-forest learning.
//!
//! Every attribute pair gets an edge gain
//!
//! ```text
//! gain(i, j) = n * I(i; j) - (card(i) - 1) * (card(j) - 1) * c(n) / 2
//! ```
//!
//! in total bits: the exact drop in description length when the edge joins
//! two separate trees. [`learn_forest`] runs Kruskal's sweep over the
//! positive-gain edges in descending order and so returns a forest that
//! minimizes the description length among all forests. With `c(n) = 0` it
//! reduces to the classic maximum-mutual-information spanning tree.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::infotheory::{empirical_entropy, mutual_information};
use crate::scoring::{ModelClass, ParentSets, Penalty, ScoreBreakdown};
use crate::Bits;

/// Largest node count [`brute_force_best_forest`] accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 6;

/// A candidate edge and its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub i: usize,
    pub j: usize,
    /// Per-record mutual information.
    pub mi: Bits,
    /// Total-bit gain from adding the edge.
    pub gain: Bits,
}

/// Union-find over `0..len` with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            rank: vec![0; len],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Joins the sets of `a` and `b`. Returns false if they were already one
    /// set.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// An undirected forest over `nodes` attributes. Edges are stored as sorted
/// `(i, j)` pairs with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestStructure {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl ForestStructure {
    pub fn empty(nodes: usize) -> Self {
        Self {
            nodes,
            edges: Vec::new(),
        }
    }

    /// Validates range and acyclicity.
    pub fn new(nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut sets = DisjointSets::new(nodes);
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= nodes || b >= nodes || a == b {
                return Err(Error::argument(format!("invalid edge ({a}, {b}) for {nodes} nodes")));
            }
            if !sets.union(a, b) {
                return Err(Error::argument(format!("edge ({a}, {b}) closes a cycle")));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        Ok(Self { nodes, edges: out })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// A rooted forest: each node has at most one parent, which precedes it in
/// `order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DendroidStructure {
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
}

impl DendroidStructure {
    pub fn new(order: Vec<usize>, parent: Vec<Option<usize>>) -> Result<Self> {
        let r = parent.len();
        let position = order_positions(&order, r)?;
        for (node, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= r || position[p] >= position[node] {
                    return Err(Error::argument(format!(
                        "parent {p} of node {node} does not precede it in the order"
                    )));
                }
            }
        }
        Ok(Self { order, parent })
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn parents_vec(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// Undirected edge set.
    pub fn to_forest(&self) -> ForestStructure {
        ForestStructure::new(
            self.parent.len(),
            self.parent
                .iter()
                .enumerate()
                .filter_map(|(c, p)| p.map(|p| (p, c))),
        )
        .expect("a valid dendroid is acyclic")
    }
}

impl ParentSets for DendroidStructure {
    fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    fn order(&self) -> &[usize] {
        &self.order
    }

    fn parents(&self, node: usize) -> &[usize] {
        self.parent[node].as_slice()
    }

    fn model_class(&self) -> ModelClass {
        ModelClass::Forests {
            nodes: self.parent.len(),
        }
    }
}

/// Position of every node in `order`, checking it is a permutation of `0..r`.
pub(crate) fn order_positions(order: &[usize], r: usize) -> Result<Vec<usize>> {
    if order.len() != r {
        return Err(Error::argument(format!(
            "ordering has {} entries, expected {r}",
            order.len()
        )));
    }
    let mut position = vec![usize::MAX; r];
    for (k, &node) in order.iter().enumerate() {
        if node >= r || position[node] != usize::MAX {
            return Err(Error::argument(format!("ordering {order:?} is not a permutation")));
        }
        position[node] = k;
    }
    Ok(position)
}

/// Gain of joining attributes `i` and `j`.
pub fn edge_gain(d: &Dataset, i: usize, j: usize, penalty: Penalty) -> Result<WeightedEdge> {
    let pc = d.pair_counts(i, j)?;
    let mi = mutual_information(&pc);
    let (ai, aj) = pc.shape();
    let gain = d.n() as f64 * mi - ((ai - 1) * (aj - 1)) as f64 * penalty.value(d.n()) / 2.0;
    Ok(WeightedEdge {
        i: i.min(j),
        j: i.max(j),
        mi,
        gain,
    })
}

/// Gains of all `R(R-1)/2` pairs in `(i, j)` lexicographic order.
pub fn all_edge_gains(d: &Dataset, penalty: Penalty) -> Vec<WeightedEdge> {
    let r = d.num_attrs();
    let pairs: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| edge_gain(d, i, j, penalty).expect("indices are in range and distinct"))
        .collect()
}

/// Descending gain, then ascending `(i, j)`.
fn queue_order(a: &WeightedEdge, b: &WeightedEdge) -> Ordering {
    b.gain
        .total_cmp(&a.gain)
        .then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
}

/// MDL-thresholded Kruskal sweep.
pub fn learn_forest(d: &Dataset, penalty: Penalty) -> ForestStructure {
    let mut queue = all_edge_gains(d, penalty);
    queue.sort_by(queue_order);
    let r = d.num_attrs();
    let mut sets = DisjointSets::new(r);
    let mut edges = Vec::new();
    for edge in queue {
        if edge.gain <= 0.0 || edges.len() + 1 == r {
            break;
        }
        if sets.union(edge.i, edge.j) {
            edges.push((edge.i, edge.j));
        }
    }
    edges.sort_unstable();
    ForestStructure { nodes: r, edges }
}

/// Roots each component at its smallest node and orders nodes breadth-first,
/// components by root index.
pub fn orient_forest(forest: &ForestStructure) -> DendroidStructure {
    let r = forest.nodes;
    let adj = forest.adjacency();
    let mut parent = vec![None; r];
    let mut seen = vec![false; r];
    let mut order = Vec::with_capacity(r);
    let mut queue = VecDeque::new();
    for root in 0..r {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(node) = queue.pop_front() {
            order.push(node);
            for &next in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some(node);
                    queue.push_back(next);
                }
            }
        }
    }
    DendroidStructure { order, parent }
}

/// Scores dendroid structures from cached marginal entropies and pairwise
/// mutual information:
///
/// ```text
/// l = sum_N n H(X_N) - sum_{edges} n I(X_N; X_q[N]) + k c(n) / 2
/// k = sum_N (card(N) - 1) * card(q[N])        (card of "no parent" = 1)
/// ```
#[derive(Debug, Clone)]
pub struct ForestScorer {
    cards: Vec<usize>,
    n: usize,
    c: f64,
    marginal_fit: Bits,
    /// `n * I(i; j)`, row-major `R x R`.
    pair_info: Vec<Bits>,
}

impl ForestScorer {
    pub fn new(d: &Dataset, penalty: Penalty) -> Self {
        let r = d.num_attrs();
        let n = d.n();
        let marginal_fit = (0..r)
            .map(|j| {
                let t = d.conditional_counts(j, &[]).expect("no parents");
                empirical_entropy(t.state_row(0)).expect("n >= 1")
            })
            .sum();
        let mut pair_info = vec![0.0; r * r];
        for e in all_edge_gains(d, penalty) {
            let info = n as f64 * e.mi;
            pair_info[e.i * r + e.j] = info;
            pair_info[e.j * r + e.i] = info;
        }
        Self {
            cards: d.schema().cards().to_vec(),
            n,
            c: penalty.value(n),
            marginal_fit,
            pair_info,
        }
    }

    pub fn score(&self, s: &DendroidStructure) -> Result<ScoreBreakdown> {
        let r = self.cards.len();
        if s.num_nodes() != r {
            return Err(Error::schema(format!(
                "structure has {} nodes but the data has {r} attributes",
                s.num_nodes()
            )));
        }
        let mut fit = self.marginal_fit;
        let mut k = 0u64;
        for node in 0..r {
            let parent_card = match s.parent(node) {
                Some(p) => {
                    fit -= self.pair_info[node * r + p];
                    self.cards[p]
                }
                None => 1,
            };
            k += ((self.cards[node] - 1) * parent_card) as u64;
        }
        Ok(ScoreBreakdown::new(fit, k, self.c, 0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Description length of a dendroid structure in the mutual-information
/// form. Agrees with [`crate::scoring::description_length`] on the same
/// structure.
pub fn forest_description_length(
    s: &DendroidStructure,
    d: &Dataset,
    penalty: Penalty,
) -> Result<ScoreBreakdown> {
    ForestScorer::new(d, penalty).score(s)
}

/// Scores every forest on `R <= 6` nodes and returns a minimizer. Ties within
/// 1e-9 bits go to the lexicographically smallest edge list.
pub fn brute_force_best_forest(d: &Dataset, penalty: Penalty) -> Result<(ForestStructure, Bits)> {
    let r = d.num_attrs();
    if r > BRUTE_FORCE_MAX_NODES {
        return Err(Error::capacity(format!(
            "brute-force forest search supports at most {BRUTE_FORCE_MAX_NODES} attributes, got {r}"
        )));
    }
    let scorer = ForestScorer::new(d, penalty);
    let pairs: Vec<(usize, usize)> = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .collect();
    let mut best: Option<(ForestStructure, Bits)> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let chosen = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e);
        let Ok(forest) = ForestStructure::new(r, chosen) else {
            continue;
        };
        let total = scorer.score(&orient_forest(&forest))?.total;
        let better = match &best {
            None => true,
            Some((bf, bt)) => {
                total < bt - 1e-9 || ((total - bt).abs() <= 1e-9 && forest.edges < bf.edges)
            }
        };
        if better {
            best = Some((forest, total));
        }
    }
    Ok(best.expect("the empty forest is always a candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::AttributeSchema;
    use crate::rng::SplitMix64;
    use crate::scoring::description_length;

    fn dataset(cards: &[usize], rows: &[Vec<u32>]) -> Dataset {
        Dataset::from_codes(AttributeSchema::anonymous(cards.to_vec()).unwrap(), rows).unwrap()
    }

    fn random_dataset(rng: &mut SplitMix64, r: usize, max_card: u64, n: usize) -> Dataset {
        let cards: Vec<usize> = (0..r).map(|_| 1 + rng.below(max_card) as usize).collect();
        // correlated columns: copy an earlier column with some probability
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                let mut row: Vec<u32> = Vec::with_capacity(r);
                for j in 0..r {
                    let v = if j > 0 && rng.below(3) == 0 {
                        let src = rng.below(j as u64) as usize;
                        row[src] % cards[j] as u32
                    } else {
                        rng.below(cards[j] as u64) as u32
                    };
                    row.push(v);
                }
                row
            })
            .collect();
        dataset(&cards, &rows)
    }

    /// Samples a chain x0 -> x1 -> x2 with copy probability `keep`.
    fn chain_data(n: usize, keep: f64, seed: u64) -> Dataset {
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|_| {
                let a = rng.below(2) as u32;
                let b = if rng.next_f64() < keep { a } else { 1 - a };
                let c = if rng.next_f64() < keep { b } else { 1 - b };
                vec![a, b, c]
            })
            .collect();
        dataset(&[2, 2, 2], &rows)
    }

    #[test]
    fn disjoint_sets_basics() {
        let mut s = DisjointSets::new(5);
        assert!(s.union(0, 1));
        assert!(s.union(3, 4));
        assert!(!s.union(1, 0));
        assert_eq!(s.find(0), s.find(1));
        assert_ne!(s.find(1), s.find(3));
        assert!(s.union(1, 4));
        assert_eq!(s.find(0), s.find(3));
        let f = s.find(2);
        assert_eq!(s.find(f), f);
    }

    #[test]
    fn gain_perfectly_correlated() {
        let rows: Vec<Vec<u32>> = (0..100).map(|k| vec![(k % 2) as u32; 2]).collect();
        let d = dataset(&[2, 2], &rows);
        let e = edge_gain(&d, 0, 1, Penalty::Mdl).unwrap();
        assert!((e.gain - (100.0 - 100f64.log2() / 2.0)).abs() < 1e-9);
        assert!((e.gain - 96.678072).abs() < 1e-6);
        assert!((e.gain - (d.n() as f64 * e.mi - 100f64.log2() / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn gain_independent_and_constant() {
        let rows: Vec<Vec<u32>> = (0..100).map(|k| vec![(k % 2) as u32, (k / 2 % 2) as u32, 0]).collect();
        let d = dataset(&[2, 2, 1], &rows);
        let e = edge_gain(&d, 0, 1, Penalty::Mdl).unwrap();
        assert!((e.gain + 100f64.log2() / 2.0).abs() < 1e-9);
        let e = edge_gain(&d, 0, 2, Penalty::Mdl).unwrap();
        assert_eq!(e.gain, 0.0);
    }

    #[test]
    fn independent_data_gives_empty_forest() {
        let mut rng = SplitMix64::new(1);
        let rows: Vec<Vec<u32>> = (0..5000)
            .map(|_| (0..4).map(|_| rng.below(3) as u32).collect())
            .collect();
        let d = dataset(&[3, 3, 3, 3], &rows);
        for e in all_edge_gains(&d, Penalty::Mdl) {
            assert!(e.gain < 0.0);
        }
        assert!(learn_forest(&d, Penalty::Mdl).edges().is_empty());
    }

    #[test]
    fn chain_recovered() {
        let d = chain_data(5000, 0.9, 7);
        let f = learn_forest(&d, Penalty::Mdl);
        assert_eq!(f.edges(), &[(0, 1), (1, 2)]);
        let (best, score) = brute_force_best_forest(&d, Penalty::Mdl).unwrap();
        assert_eq!(best, f);
        let learned = forest_description_length(&orient_forest(&f), &d, Penalty::Mdl).unwrap();
        assert!((learned.total - score).abs() < 1e-9);
    }

    #[test]
    fn orientation_examples() {
        let f = ForestStructure::new(3, [(0, 1), (1, 2)]).unwrap();
        let o = orient_forest(&f);
        assert_eq!(o.parents_vec(), &[None, Some(0), Some(1)]);
        let o = orient_forest(&ForestStructure::empty(3));
        assert_eq!(o.parents_vec(), &[None, None, None]);
        let f = ForestStructure::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let o = orient_forest(&f);
        assert_eq!(o.parents_vec(), &[None, Some(0), Some(0), Some(0)]);
        assert_eq!(o.to_forest(), f);
    }

    #[test]
    fn orientation_components_by_root() {
        let f = ForestStructure::new(5, [(3, 4), (1, 2), (2, 4)]).unwrap();
        let o = orient_forest(&f);
        assert_eq!(o.order(), &[0, 1, 2, 4, 3]);
        assert_eq!(o.parents_vec(), &[None, None, Some(1), Some(4), Some(2)]);
    }

    #[test]
    fn cyclic_forest_rejected() {
        assert!(ForestStructure::new(3, [(0, 1), (1, 2), (0, 2)]).is_err());
        assert!(ForestStructure::new(3, [(0, 0)]).is_err());
        assert!(ForestStructure::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn empty_forest_score() {
        let mut rng = SplitMix64::new(9);
        let d = random_dataset(&mut rng, 4, 3, 60);
        let s = forest_description_length(&orient_forest(&ForestStructure::empty(4)), &d, Penalty::Mdl)
            .unwrap();
        let mut expected = 0.0;
        for j in 0..4 {
            let t = d.conditional_counts(j, &[]).unwrap();
            expected += empirical_entropy(t.state_row(0)).unwrap()
                + (d.schema().card(j) - 1) as f64 * Penalty::Mdl.value(60) / 2.0;
        }
        assert!((s.total - expected).abs() < 1e-9);
    }

    #[test]
    fn matches_generic_score() {
        let mut rng = SplitMix64::new(31);
        for _ in 0..50 {
            let r = 2 + rng.below(4) as usize;
            let n = 20 + rng.below(100) as usize;
            let d = random_dataset(&mut rng, r, 3, n);
            let f = learn_forest(&d, Penalty::Ml);
            let o = orient_forest(&f);
            for p in [Penalty::Mdl, Penalty::Aic, Penalty::Custom(0.7)] {
                let a = forest_description_length(&o, &d, p).unwrap();
                let b = description_length(&o, &d, p, false).unwrap();
                assert!((a.total - b.total).abs() < 1e-9, "{} vs {}", a.total, b.total);
                assert_eq!(a.k, b.k);
            }
        }
    }

    #[test]
    fn adding_edge_drops_score_by_gain() {
        let mut rng = SplitMix64::new(2);
        for _ in 0..20 {
            let d = random_dataset(&mut rng, 4, 3, 150);
            let base = ForestStructure::new(4, [(0, 1)]).unwrap();
            let plus = ForestStructure::new(4, [(0, 1), (2, 3)]).unwrap();
            let e = edge_gain(&d, 2, 3, Penalty::Mdl).unwrap();
            let a = forest_description_length(&orient_forest(&base), &d, Penalty::Mdl).unwrap();
            let b = forest_description_length(&orient_forest(&plus), &d, Penalty::Mdl).unwrap();
            assert!((a.total - b.total - e.gain).abs() < 1e-9);
        }
    }

    #[test]
    fn optimal_against_brute_force() {
        let mut rng = SplitMix64::new(77);
        for case in 0..60 {
            let r = 2 + rng.below(4) as usize;
            let n = 10 + rng.below(150) as usize;
            let d = random_dataset(&mut rng, r, 3, n);
            let p = [Penalty::Mdl, Penalty::Aic, Penalty::Custom(1.0)][case % 3];
            let learned = forest_description_length(&orient_forest(&learn_forest(&d, p)), &d, p)
                .unwrap()
                .total;
            let (_, best) = brute_force_best_forest(&d, p).unwrap();
            assert!((learned - best).abs() < 1e-9, "case {case}: {learned} vs {best}");
        }
    }

    #[test]
    fn rooting_does_not_change_score() {
        let mut rng = SplitMix64::new(5);
        let d = random_dataset(&mut rng, 5, 3, 120);
        let f = ForestStructure::new(5, [(0, 2), (2, 3), (1, 4)]).unwrap();
        let reference = forest_description_length(&orient_forest(&f), &d, Penalty::Mdl).unwrap();
        // root the bigger tree at 3 instead of 0, and the edge (1,4) at 4
        let alt = DendroidStructure::new(
            vec![3, 2, 0, 4, 1],
            vec![Some(2), Some(4), Some(3), None, None],
        )
        .unwrap();
        let s = forest_description_length(&alt, &d, Penalty::Mdl).unwrap();
        assert!((s.total - reference.total).abs() < 1e-9);
    }

    #[test]
    fn ml_penalty_spans() {
        let mut rng = SplitMix64::new(44);
        let d = random_dataset(&mut rng, 4, 3, 200);
        if all_edge_gains(&d, Penalty::Ml).iter().all(|e| e.gain > 0.0) {
            assert_eq!(learn_forest(&d, Penalty::Ml).edges().len(), 3);
            let (b, _) = brute_force_best_forest(&d, Penalty::Ml).unwrap();
            assert_eq!(b.edges().len(), 3);
        }
    }

    #[test]
    fn brute_force_capacity() {
        let rows = vec![vec![0u32; 7]];
        let d = dataset(&[1; 7], &rows);
        assert!(brute_force_best_forest(&d, Penalty::Mdl).unwrap_err().is_capacity());
    }

    #[test]
    fn dendroid_validation() {
        assert!(DendroidStructure::new(vec![0, 1], vec![Some(1), None]).is_err());
        assert!(DendroidStructure::new(vec![0, 0], vec![None, None]).is_err());
        assert!(DendroidStructure::new(vec![1, 0], vec![Some(1), None]).is_ok());
    }
}
