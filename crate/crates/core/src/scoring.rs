//! Description lengths of structures over a dataset.
//!
//! The asymptotic score of a structure is
//!
//! ```text
//! total = fit + complexity + model_code
//! fit        = sum over nodes of the conditional empirical entropy (bits)
//! complexity = k * c(n) / 2
//! ```
//!
//! where `k` counts free parameters and `c(n)` is the [`Penalty`]. The exact
//! Dirichlet mixture code length is available through
//! [`exact_bayes_code_length`] for comparison.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::dataset::{AttributeSchema, CondCountTable, Dataset};
use crate::error::{Error, Result};
use crate::infotheory::conditional_empirical_entropy;
use crate::Bits;

/// Per-parameter complexity weight `c(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `c(n) = log2 n`
    Mdl,
    /// `c(n) = 2`
    Aic,
    /// `c(n) = 0`, plain maximum likelihood.
    Ml,
    Custom(f64),
}

impl Penalty {
    pub fn custom(c: f64) -> Result<Self> {
        if c.is_finite() && c >= 0.0 {
            Ok(Penalty::Custom(c))
        } else {
            Err(Error::argument(format!("custom penalty must be finite and >= 0, got {c}")))
        }
    }

    /// Evaluates `c(n)`; `n` is clamped to at least 1.
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            Penalty::Mdl => (n.max(1) as f64).log2(),
            Penalty::Aic => 2.0,
            Penalty::Ml => 0.0,
            Penalty::Custom(c) => c,
        }
    }
}

/// Alias matching the free-function naming used elsewhere.
pub fn penalty_value(p: Penalty, n: usize) -> f64 {
    p.value(n)
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Mdl => f.write_str("mdl"),
            Penalty::Aic => f.write_str("aic"),
            Penalty::Ml => f.write_str("ml"),
            Penalty::Custom(c) => write!(f, "custom:{c}"),
        }
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mdl" => Ok(Penalty::Mdl),
            "aic" => Ok(Penalty::Aic),
            "ml" => Ok(Penalty::Ml),
            other => match other.strip_prefix("custom:") {
                Some(c) => {
                    let c: f64 = c
                        .parse()
                        .map_err(|_| Error::argument(format!("bad custom penalty `{s}`")))?;
                    Penalty::custom(c)
                }
                None => Err(Error::argument(format!(
                    "unknown penalty `{s}` (expected mdl, aic, ml or custom:<c>)"
                ))),
            },
        }
    }
}

/// The terms of a description length, all in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub fit: Bits,
    pub complexity: Bits,
    pub model_code: Bits,
    pub total: Bits,
    /// Number of free parameters.
    pub k: u64,
}

impl ScoreBreakdown {
    pub fn new(fit: Bits, k: u64, c: f64, model_code: Bits) -> Self {
        let complexity = k as f64 * c / 2.0;
        Self {
            fit,
            complexity,
            model_code,
            total: fit + complexity + model_code,
            k,
        }
    }
}

/// The family a structure was selected from; used for the model-code term
/// `log2 |G|` under a uniform code over the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    /// All forests (acyclic undirected edge sets) on the labeled nodes.
    Forests { nodes: usize },
    /// All DAGs compatible with one fixed node ordering.
    OrderedDags { nodes: usize },
}

impl ModelClass {
    /// Number of structures in the family.
    pub fn size(&self) -> BigUint {
        match *self {
            ModelClass::Forests { nodes } => labeled_forest_count(nodes),
            ModelClass::OrderedDags { nodes } => {
                let edges = nodes * nodes.saturating_sub(1) / 2;
                BigUint::one() << edges
            }
        }
    }

    /// `log2 |G|` in bits.
    pub fn code_length(&self) -> Bits {
        log2_biguint(&self.size())
    }
}

/// Number of forests on `n` labeled vertices: choose the tree holding the
/// first vertex (size `k`, `C(n-1, k-1) * k^(k-2)` ways) and recurse.
pub fn labeled_forest_count(n: usize) -> BigUint {
    let mut forests = vec![BigUint::one()];
    for m in 1..=n {
        let mut total = BigUint::zero();
        let mut binom = BigUint::one(); // C(m-1, k-1)
        for k in 1..=m {
            if k > 1 {
                binom = binom * (m - k + 1) / (k - 1);
            }
            let trees = if k <= 2 {
                BigUint::one()
            } else {
                BigUint::from(k).pow(k as u32 - 2)
            };
            total += &binom * trees * &forests[m - k];
        }
        forests.push(total);
    }
    forests.swap_remove(n)
}

pub(crate) fn log2_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().expect("64-bit value").log2() + shift as f64
}

/// A directed structure: every node has a (possibly empty) parent list, and
/// parents precede their children in [`order`](ParentSets::order).
pub trait ParentSets {
    fn num_nodes(&self) -> usize;

    /// Topological order of the nodes.
    fn order(&self) -> &[usize];

    /// Parents of `node`, in state-encoding order (first most significant).
    fn parents(&self, node: usize) -> &[usize];

    fn model_class(&self) -> ModelClass;
}

/// `S * (alpha - 1)`: free parameters of one conditional table.
pub fn stage_param_count(states: u64, alpha: u64) -> u64 {
    states * alpha.saturating_sub(1)
}

/// Number of parent states `prod_{j in parents} card(j)`, saturating.
pub(crate) fn parent_state_count(schema: &AttributeSchema, parents: &[usize]) -> u64 {
    parents
        .iter()
        .fold(1u64, |s, &p| s.saturating_mul(schema.card(p) as u64))
}

/// Total free parameters of a structure.
pub fn model_param_count(structure: &impl ParentSets, schema: &AttributeSchema) -> u64 {
    (0..structure.num_nodes())
        .map(|node| {
            stage_param_count(
                parent_state_count(schema, structure.parents(node)),
                schema.card(node) as u64,
            )
        })
        .sum()
}

pub(crate) fn check_structure(structure: &impl ParentSets, schema: &AttributeSchema) -> Result<()> {
    if structure.num_nodes() != schema.len() {
        return Err(Error::schema(format!(
            "structure has {} nodes but the data has {} attributes",
            structure.num_nodes(),
            schema.len()
        )));
    }
    Ok(())
}

/// Fit term and parameter count of one node given its parents.
pub fn node_fit(d: &Dataset, child: usize, parents: &[usize]) -> Result<(Bits, u64)> {
    let table = d.conditional_counts(child, parents)?;
    let k = stage_param_count(table.states() as u64, table.card() as u64);
    Ok((conditional_empirical_entropy(&table), k))
}

/// Asymptotic description length of one node: fit plus `k * c(n) / 2`.
pub fn node_description_length(
    d: &Dataset,
    child: usize,
    parents: &[usize],
    penalty: Penalty,
) -> Result<Bits> {
    let (fit, k) = node_fit(d, child, parents)?;
    Ok(fit + k as f64 * penalty.value(d.n()) / 2.0)
}

/// Description length of `structure` over `d`.
///
/// The model-code term `log2 |G|` is only included on request; it is
/// constant across one model class and cancels in comparisons.
pub fn description_length(
    structure: &impl ParentSets,
    d: &Dataset,
    penalty: Penalty,
    include_model_code: bool,
) -> Result<ScoreBreakdown> {
    check_structure(structure, d.schema())?;
    let mut fit = 0.0;
    let mut k = 0;
    for node in 0..structure.num_nodes() {
        let (f, kn) = node_fit(d, node, structure.parents(node))?;
        fit += f;
        k += kn;
    }
    let model_code = if include_model_code {
        structure.model_class().code_length()
    } else {
        0.0
    };
    Ok(ScoreBreakdown::new(fit, k, penalty.value(d.n()), model_code))
}

/// `-log2` of the Dirichlet(`a`) mixture probability of the child values in
/// `table`, state by state, via log-gamma:
///
/// ```text
/// prod_s  Gamma(alpha a) prod_q Gamma(n[q,s] + a)
///         ---------------------------------------
///         Gamma(a)^alpha Gamma(n[s] + alpha a)
/// ```
pub fn exact_bayes_code_length(table: &CondCountTable, a: f64) -> Result<Bits> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::argument(format!("Dirichlet parameter must be > 0, got {a}")));
    }
    let alpha = table.card() as f64;
    let lg_a = ln_gamma(a);
    let lg_alpha_a = ln_gamma(alpha * a);
    let mut nats = 0.0;
    for (row, &total) in table.rows().zip(table.state_totals()) {
        if total == 0 {
            continue;
        }
        let mut ln_p = lg_alpha_a - ln_gamma(total as f64 + alpha * a);
        for &c in row {
            if c > 0 {
                ln_p += ln_gamma(c as f64 + a) - lg_a;
            }
        }
        nats -= ln_p;
    }
    Ok(nats / std::f64::consts::LN_2)
}

/// Exact Dirichlet(`a`) code length of the whole dataset under `structure`.
pub fn exact_structure_code_length(structure: &impl ParentSets, d: &Dataset, a: f64) -> Result<Bits> {
    check_structure(structure, d.schema())?;
    let mut total = 0.0;
    for node in 0..structure.num_nodes() {
        total += exact_bayes_code_length(&d.conditional_counts(node, structure.parents(node))?, a)?;
    }
    Ok(total)
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}
