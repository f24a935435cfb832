//! Counting and enumerating state-decomposition models.
//!
//! A state-decomposition model partitions the joint predictor domain into
//! states that share one conditional class distribution. On an `m`-cell
//! domain there are Bell(`m`) such models.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dataset::{CondCountTable, Dataset};
use crate::error::{Error, Result};
use crate::infotheory::conditional_empirical_entropy;
use crate::scoring::{log2_biguint, stage_param_count, Penalty};
use crate::Bits;

/// Largest domain [`enumerate_state_models`] and
/// [`best_state_decomposition`] accept.
pub const MAX_ENUMERATION_DOMAIN: usize = 12;

/// Largest `m` for which Bell numbers are computed.
pub const MAX_COUNT_DOMAIN: usize = 4096;

/// A partition of `0..m` into states, labeled `1..=S` in order of first
/// occurrence (so cell 0 is always in state 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateModel {
    assignment: Vec<u32>,
    states: u32,
}

impl StateModel {
    /// Validates canonical form.
    pub fn new(assignment: Vec<u32>) -> Result<Self> {
        let mut max = 0;
        for &s in &assignment {
            if s == 0 || s > max + 1 {
                return Err(Error::argument(format!(
                    "assignment {assignment:?} is not in canonical first-occurrence form"
                )));
            }
            max = max.max(s);
        }
        if assignment.is_empty() {
            return Err(Error::argument("empty assignment"));
        }
        Ok(Self {
            assignment,
            states: max,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.assignment.len()
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    /// State label (1-based) of every cell.
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }
}

/// Bell numbers `B_0..=B_m` via the Bell triangle.
fn bell_numbers(m: usize) -> Vec<BigUint> {
    let mut bells = vec![BigUint::one()];
    let mut row = vec![BigUint::one()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().expect("nonempty").clone());
        for x in &row {
            let v = next.last().expect("nonempty") + x;
            next.push(v);
        }
        bells.push(next[0].clone());
        row = next;
    }
    bells.truncate(m + 1);
    bells
}

fn check_domain(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::argument("model count needs a domain of at least one cell"));
    }
    if m > MAX_COUNT_DOMAIN {
        return Err(Error::capacity(format!(
            "domain of {m} cells exceeds the counting limit {MAX_COUNT_DOMAIN}"
        )));
    }
    Ok(())
}

/// Number of state-decomposition models on an `m`-cell domain (the Bell
/// number), in exact integers.
pub fn count_models(m: usize) -> Result<BigUint> {
    check_domain(m)?;
    Ok(bell_numbers(m).pop().expect("m + 1 entries"))
}

/// The same count by the alternating double sum
/// `sum_{S=1}^m sum_{T=1}^S T^m (-1)^(S-T) / ((S-T)! T!)`, evaluated in
/// exact rationals. Quadratic in `m`; intended as a cross-check.
pub fn count_models_alternating(m: usize) -> Result<BigUint> {
    check_domain(m)?;
    let mut factorials = vec![BigInt::one()];
    for i in 1..=m {
        let f = &factorials[i - 1] * BigInt::from(i);
        factorials.push(f);
    }
    let mut sum = BigRational::zero();
    for s in 1..=m {
        for t in 1..=s {
            let mut term = BigRational::new(
                BigInt::from(t).pow(m as u32),
                &factorials[s - t] * &factorials[t],
            );
            if (s - t) % 2 == 1 {
                term = -term;
            }
            sum += term;
        }
    }
    if !sum.is_integer() {
        return Err(Error::argument(format!("alternating sum for m = {m} is not an integer")));
    }
    Ok(sum
        .to_integer()
        .to_biguint()
        .expect("Bell numbers are positive"))
}

/// Size of the model space for a sequence of stages where stage `N` predicts
/// attribute `N+1` from all earlier attributes, and the number of pairwise
/// comparisons needed to select within each stage:
///
/// ```text
/// models      = prod_{N=0}^{R-1} f[prod_{j<=N} card_j]
/// comparisons = sum_{N=0}^{R-1} f[prod_{j<=N} card_j] - R
/// ```
pub fn count_model_space(cards: &[usize]) -> Result<(BigUint, BigUint)> {
    if cards.is_empty() {
        return Err(Error::argument("need at least one cardinality"));
    }
    if let Some(c) = cards.iter().find(|&&c| c < 1) {
        return Err(Error::argument(format!("cardinality {c} is below 1")));
    }
    let mut domains = Vec::with_capacity(cards.len());
    let mut domain = 1usize;
    for (stage, &c) in cards.iter().enumerate() {
        domains.push(domain);
        if stage + 1 < cards.len() {
            domain = domain
                .checked_mul(c)
                .filter(|&d| d <= MAX_COUNT_DOMAIN)
                .ok_or_else(|| {
                    Error::capacity(format!(
                        "predictor domain exceeds the counting limit {MAX_COUNT_DOMAIN}"
                    ))
                })?;
        }
    }
    let bells = bell_numbers(*domains.iter().max().expect("nonempty"));
    let mut models = BigUint::one();
    let mut sum = BigUint::zero();
    for &m in &domains {
        models *= &bells[m];
        sum += &bells[m];
    }
    Ok((models, sum - BigUint::from(cards.len())))
}

/// Iterator over canonical state models in lexicographic order of their
/// assignments (restricted growth strings).
#[derive(Debug, Clone)]
pub struct StateModels {
    /// 0-based restricted growth string; `None` once exhausted.
    current: Option<Vec<u32>>,
}

impl Iterator for StateModels {
    type Item = StateModel;

    fn next(&mut self) -> Option<StateModel> {
        let cur = self.current.as_mut()?;
        let states = cur.iter().max().copied().unwrap_or(0) + 1;
        let out = StateModel {
            assignment: cur.iter().map(|&s| s + 1).collect(),
            states,
        };
        // prefix maxima
        let mut prefix_max = vec![0u32; cur.len()];
        for i in 1..cur.len() {
            prefix_max[i] = prefix_max[i - 1].max(cur[i - 1]);
        }
        match (1..cur.len()).rev().find(|&i| cur[i] <= prefix_max[i]) {
            Some(i) => {
                cur[i] += 1;
                for x in &mut cur[i + 1..] {
                    *x = 0;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Every state model on an `m`-cell domain, `m <= 12`.
pub fn enumerate_state_models(m: usize) -> Result<StateModels> {
    if m == 0 {
        return Err(Error::argument("domain must have at least one cell"));
    }
    if m > MAX_ENUMERATION_DOMAIN {
        return Err(Error::capacity(format!(
            "enumerating partitions of {m} cells exceeds the limit {MAX_ENUMERATION_DOMAIN}"
        )));
    }
    Ok(StateModels {
        current: Some(vec![0; m]),
    })
}

/// Conditional count table obtained by merging the rows of `cells`
/// (`m x card`) according to `model`.
pub fn merge_cells(cells: &CondCountTable, model: &StateModel) -> CondCountTable {
    let card = cells.card();
    let mut counts = vec![0u64; model.states() as usize * card];
    for (cell, &label) in model.assignment().iter().enumerate() {
        let s = label as usize - 1;
        for (q, &c) in cells.state_row(cell).iter().enumerate() {
            counts[s * card + q] += c;
        }
    }
    CondCountTable::from_counts(cells.child(), card, counts)
}

/// `H(class | states) + S (card - 1) c(n) / 2` for one model.
pub fn state_model_score(cells: &CondCountTable, model: &StateModel, penalty: Penalty) -> Bits {
    let merged = merge_cells(cells, model);
    let k = stage_param_count(merged.states() as u64, merged.card() as u64);
    conditional_empirical_entropy(&merged) + k as f64 * penalty.value(cells.n() as usize) / 2.0
}

/// Exhaustive search over all partitions of the predictor domain.
///
/// Ties within 1e-9 bits prefer fewer states, then the lexicographically
/// smaller assignment.
pub fn best_state_decomposition(
    d: &Dataset,
    class_attr: usize,
    predictors: &[usize],
    penalty: Penalty,
) -> Result<(StateModel, Bits)> {
    let cells = d.conditional_counts_capped(class_attr, predictors, MAX_ENUMERATION_DOMAIN)?;
    let mut best: Option<(StateModel, Bits)> = None;
    for model in enumerate_state_models(cells.states())? {
        let score = state_model_score(&cells, &model, penalty);
        let better = match &best {
            None => true,
            Some((b, bs)) => {
                score < bs - 1e-9 || ((score - bs).abs() <= 1e-9 && model.states() < b.states())
            }
        };
        if better {
            best = Some((model, score));
        }
    }
    Ok(best.expect("at least one model"))
}

/// Code length `log2 |G|` of a uniform code over a model family of the given
/// size.
pub fn uniform_model_code_length(size: &BigUint) -> Bits {
    log2_biguint(size)
}

/// The probability `2^-log2|G| = 1/|G|` a uniform code assigns to one model.
pub fn uniform_model_probability(size: &BigUint) -> Result<BigRational> {
    if size.is_zero() {
        return Err(Error::argument("empty model family"));
    }
    Ok(BigRational::new(BigInt::one(), BigInt::from(size.clone())))
}

/// Exact Kraft sum `sum 2^-l` given each model's codeword probability.
pub fn kraft_sum(probabilities: impl IntoIterator<Item = BigRational>) -> BigRational {
    probabilities
        .into_iter()
        .fold(BigRational::zero(), |acc, p| acc + p)
}
