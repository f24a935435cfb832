//! Fitted models: a structure plus smoothed conditional probability tables.
//!
//! Each table entry is estimated as
//!
//! ```text
//! p[q | s] = (n[q, s] + a) / (n[s] + a * card)
//! ```
//!
//! with `a = 1/2` by default, so every entry of a fitted table is strictly
//! positive and states never seen in the data get the uniform row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bbn::BbnStructure;
use crate::dataset::{AttributeSchema, Dataset, Dictionary, MixedRadix};
use crate::error::{Error, Result};
use crate::forest::DendroidStructure;
use crate::rng::SplitMix64;
use crate::scoring::{check_structure, ModelClass, ParentSets, Penalty};

pub const DEFAULT_DIRICHLET_A: f64 = 0.5;

/// First line of every model file.
pub const MODEL_FILE_HEADER: &str = "dendrolearn-model v1";

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// A learned structure of either family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structure {
    Bbn(BbnStructure),
    Dendroid(DendroidStructure),
}

impl Structure {
    fn kind(&self) -> &'static str {
        match self {
            Structure::Bbn(_) => "bbn",
            Structure::Dendroid(_) => "dendroid",
        }
    }

    /// Number of arcs (edges for a forest).
    pub fn arc_count(&self) -> usize {
        (0..self.num_nodes()).map(|n| self.parents(n).len()).sum()
    }
}

impl From<BbnStructure> for Structure {
    fn from(s: BbnStructure) -> Self {
        Structure::Bbn(s)
    }
}

impl From<DendroidStructure> for Structure {
    fn from(s: DendroidStructure) -> Self {
        Structure::Dendroid(s)
    }
}

impl ParentSets for Structure {
    fn num_nodes(&self) -> usize {
        match self {
            Structure::Bbn(s) => s.num_nodes(),
            Structure::Dendroid(s) => s.num_nodes(),
        }
    }

    fn order(&self) -> &[usize] {
        match self {
            Structure::Bbn(s) => s.order(),
            Structure::Dendroid(s) => s.order(),
        }
    }

    fn parents(&self, node: usize) -> &[usize] {
        match self {
            Structure::Bbn(s) => s.parents(node),
            Structure::Dendroid(s) => s.parents(node),
        }
    }

    fn model_class(&self) -> ModelClass {
        match self {
            Structure::Bbn(s) => s.model_class(),
            Structure::Dendroid(s) => s.model_class(),
        }
    }
}

/// Conditional table of one node, row-major `states x card`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    radix: MixedRadix,
    card: usize,
    probs: Vec<f64>,
}

impl NodeTable {
    pub fn states(&self) -> usize {
        self.radix.size()
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.card..(state + 1) * self.card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.card)
    }
}

/// Conditional tables of all nodes, indexed by attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTable {
    nodes: Vec<NodeTable>,
}

impl ParamTable {
    pub fn node(&self, attr: usize) -> &NodeTable {
        &self.nodes[attr]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// How a model was fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMeta {
    /// Number of records used for fitting.
    pub n: usize,
    /// Penalty used for structure selection, when known.
    pub penalty: Option<Penalty>,
    /// Dirichlet smoothing parameter.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    schema: AttributeSchema,
    dictionary: Dictionary,
    structure: Structure,
    params: ParamTable,
    pub meta: FitMeta,
}

/// Estimates every conditional table of `structure` from `d`.
pub fn fit_parameters(structure: impl Into<Structure>, d: &Dataset, a: f64) -> Result<FittedModel> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::argument(format!("Dirichlet parameter must be > 0, got {a}")));
    }
    let structure = structure.into();
    check_structure(&structure, d.schema())?;
    let mut nodes = Vec::with_capacity(structure.num_nodes());
    for node in 0..structure.num_nodes() {
        let parents = structure.parents(node);
        let table = d.conditional_counts(node, parents)?;
        let card = table.card();
        let denom_extra = a * card as f64;
        let mut probs = Vec::with_capacity(table.states() * card);
        for (row, &total) in table.rows().zip(table.state_totals()) {
            let denom = total as f64 + denom_extra;
            probs.extend(row.iter().map(|&c| (c as f64 + a) / denom));
        }
        let radix = MixedRadix::new(
            parents.iter().map(|&p| d.schema().card(p)).collect(),
            usize::MAX,
        )?;
        nodes.push(NodeTable { radix, card, probs });
    }
    Ok(FittedModel {
        schema: d.schema().clone(),
        dictionary: d.dictionary().clone(),
        structure,
        params: ParamTable { nodes },
        meta: FitMeta {
            n: d.n(),
            penalty: None,
            a,
        },
    })
}

impl FittedModel {
    /// Assembles a model from explicit tables (`tables[node]` row-major
    /// `states x card`). Rows must sum to 1 within 1e-6 and entries must lie
    /// in `[0, 1]`.
    pub fn from_parts(
        schema: AttributeSchema,
        dictionary: Dictionary,
        structure: Structure,
        tables: Vec<Vec<f64>>,
        meta: FitMeta,
    ) -> Result<Self> {
        check_structure(&structure, &schema)?;
        if tables.len() != schema.len() {
            return Err(Error::schema(format!(
                "{} tables for {} attributes",
                tables.len(),
                schema.len()
            )));
        }
        if dictionary.len() != schema.len()
            || (0..schema.len()).any(|j| dictionary.labels(j).len() != schema.card(j))
        {
            return Err(Error::schema("value dictionary does not match the schema"));
        }
        let mut nodes = Vec::with_capacity(tables.len());
        for (node, probs) in tables.into_iter().enumerate() {
            let radix = MixedRadix::new(
                structure.parents(node).iter().map(|&p| schema.card(p)).collect(),
                usize::MAX,
            )?;
            let card = schema.card(node);
            if probs.len() != radix.size() * card {
                return Err(Error::schema(format!(
                    "table of `{}` has {} entries, expected {} states x {card}",
                    schema.name(node),
                    probs.len(),
                    radix.size()
                )));
            }
            let table = NodeTable { radix, card, probs };
            for (s, row) in table.rows().enumerate() {
                check_row(schema.name(node), s, row)?;
            }
            nodes.push(table);
        }
        Ok(Self {
            schema,
            dictionary,
            structure,
            params: ParamTable { nodes },
            meta,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn params(&self) -> &ParamTable {
        &self.params
    }

    fn state_of(&self, node: usize, record: &[u32]) -> usize {
        let table = &self.params.nodes[node];
        self.structure
            .parents(node)
            .iter()
            .zip(table.radix.radices())
            .fold(0, |s, (&p, &r)| s * r + record[p] as usize)
    }

    pub(crate) fn check_record(&self, record: &[u32]) -> Result<()> {
        if record.len() != self.schema.len() {
            return Err(Error::argument(format!(
                "record has {} values, model has {} attributes",
                record.len(),
                self.schema.len()
            )));
        }
        for (j, &v) in record.iter().enumerate() {
            if v as usize >= self.schema.card(j) {
                return Err(Error::argument(format!(
                    "value {v} out of range for `{}` (cardinality {})",
                    self.schema.name(j),
                    self.schema.card(j)
                )));
            }
        }
        Ok(())
    }

    /// Probability of a complete record, multiplied along the structure
    /// order.
    pub fn joint_probability(&self, record: &[u32]) -> Result<f64> {
        self.check_record(record)?;
        Ok(self.joint_unchecked(record))
    }

    pub(crate) fn joint_unchecked(&self, record: &[u32]) -> f64 {
        self.structure
            .order()
            .iter()
            .map(|&node| {
                let s = self.state_of(node, record);
                self.params.nodes[node].row(s)[record[node] as usize]
            })
            .product()
    }

    /// Ancestral sampling with inverse-CDF draws from a SplitMix64 stream.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::argument("sample size must be at least 1"));
        }
        let mut rng = SplitMix64::new(seed);
        let r = self.schema.len();
        let mut rows = Vec::with_capacity(n);
        let mut record = vec![0u32; r];
        for _ in 0..n {
            for &node in self.structure.order() {
                let s = self.state_of(node, &record);
                let row = self.params.nodes[node].row(s);
                let u = rng.next_f64();
                let mut cum = 0.0;
                let mut pick = row.len() - 1;
                for (q, &p) in row.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        pick = q;
                        break;
                    }
                }
                // never land on a zero-probability tail value through rounding
                while row[pick] == 0.0 && pick > 0 {
                    pick -= 1;
                }
                record[node] = pick as u32;
            }
            rows.push(record.clone());
        }
        Dataset::from_codes(self.schema.clone(), &rows)?.with_dictionary(self.dictionary.clone())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Line-oriented text form; probabilities carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let penalty = self.meta.penalty.map_or("none".to_string(), |p| p.to_string());
        writeln!(out, "{MODEL_FILE_HEADER}").unwrap();
        writeln!(out, "kind {}", self.structure.kind()).unwrap();
        writeln!(out, "n {}", self.meta.n).unwrap();
        writeln!(out, "penalty {penalty}").unwrap();
        writeln!(out, "a {}", self.meta.a).unwrap();
        writeln!(out, "schema {}", self.schema.len()).unwrap();
        for j in 0..self.schema.len() {
            writeln!(out, "{}:{}", self.schema.name(j), self.schema.card(j)).unwrap();
        }
        writeln!(out, "values").unwrap();
        for j in 0..self.schema.len() {
            writeln!(out, "{j}={}", self.dictionary.labels(j).join(",")).unwrap();
        }
        writeln!(out, "structure").unwrap();
        for &node in self.structure.order() {
            let parents: Vec<String> = self
                .structure
                .parents(node)
                .iter()
                .map(|p| p.to_string())
                .collect();
            writeln!(out, "{node}: {}", parents.join(",")).unwrap();
        }
        writeln!(out, "params").unwrap();
        for &node in self.structure.order() {
            for (s, row) in self.params.nodes[node].rows().enumerate() {
                write!(out, "{node} {s}").unwrap();
                for p in row {
                    write!(out, " {p:.16e}").unwrap();
                }
                out.push('\n');
            }
        }
        writeln!(out, "end").unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        ModelParser::new(text).parse()
    }
}

fn check_row(name: &str, state: usize, row: &[f64]) -> Result<()> {
    if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::schema(format!(
            "`{name}` state {state}: probability {p} outside [0, 1]"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::schema(format!(
            "`{name}` state {state}: row sums to {sum}, not 1"
        )));
    }
    Ok(())
}

struct ModelParser<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> ModelParser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text
                .split('\n')
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .collect(),
            pos: 0,
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::schema(format!("model file line {}: {msg}", self.pos))
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let line = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::schema(format!("model file line {}: unexpected end of file", self.pos + 1)))?;
        self.pos += 1;
        Ok(line)
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} <value>`, found `{line}`")))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let line = self.next_line()?;
        if line == word {
            Ok(())
        } else {
            Err(self.err(format!("expected `{word}`, found `{line}`")))
        }
    }

    fn number<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("bad {what} `{s}`")))
    }

    fn parse(mut self) -> Result<FittedModel> {
        let header = self.next_line()?;
        if header != MODEL_FILE_HEADER {
            return Err(if header.starts_with("dendrolearn-model ") {
                self.err(format!(
                    "unsupported model file version `{header}` (expected `{MODEL_FILE_HEADER}`)"
                ))
            } else {
                self.err(format!("not a model file (header `{header}`)"))
            });
        }
        let kind = self.keyed("kind")?;
        if kind != "bbn" && kind != "dendroid" {
            return Err(self.err(format!("unknown structure kind `{kind}`")));
        }
        let n = self.keyed("n")?;
        let n: usize = self.number(n, "record count")?;
        let penalty = match self.keyed("penalty")? {
            "none" => None,
            p => Some(p.parse::<Penalty>().map_err(|e| self.err(e))?),
        };
        let a = self.keyed("a")?;
        let a: f64 = self.number(a, "Dirichlet parameter")?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(self.err(format!("Dirichlet parameter must be > 0, got {a}")));
        }
        let r = self.keyed("schema")?;
        let r: usize = self.number(r, "attribute count")?;

        let mut names = Vec::with_capacity(r);
        let mut cards = Vec::with_capacity(r);
        for _ in 0..r {
            let line = self.next_line()?;
            let (name, card) = line
                .rsplit_once(':')
                .ok_or_else(|| self.err(format!("expected `name:cardinality`, found `{line}`")))?;
            names.push(name.to_string());
            cards.push(self.number::<usize>(card, "cardinality")?);
        }
        let schema = AttributeSchema::new(names, cards).map_err(|e| self.err(e))?;

        self.expect("values")?;
        let mut labels = Vec::with_capacity(r);
        for j in 0..r {
            let line = self.next_line()?;
            let (idx, values) = line
                .split_once('=')
                .ok_or_else(|| self.err(format!("expected `index=values`, found `{line}`")))?;
            if self.number::<usize>(idx, "attribute index")? != j {
                return Err(self.err(format!("expected values of attribute {j}")));
            }
            let values: Vec<String> = values.split(',').map(str::to_string).collect();
            if values.len() != schema.card(j) {
                return Err(self.err(format!(
                    "{} values listed for `{}` of cardinality {}",
                    values.len(),
                    schema.name(j),
                    schema.card(j)
                )));
            }
            labels.push(values);
        }
        let dictionary = Dictionary::from_labels(labels).map_err(|e| self.err(e))?;

        self.expect("structure")?;
        let mut order = Vec::with_capacity(r);
        let mut parents = vec![Vec::new(); r];
        for _ in 0..r {
            let line = self.next_line()?;
            let (node, list) = line
                .split_once(':')
                .ok_or_else(|| self.err(format!("expected `node: parents`, found `{line}`")))?;
            let node: usize = self.number(node, "node index")?;
            if node >= r {
                return Err(self.err(format!("node {node} out of range")));
            }
            let list = list.trim();
            if !list.is_empty() {
                for p in list.split(',') {
                    parents[node].push(self.number::<usize>(p, "parent index")?);
                }
            }
            order.push(node);
        }
        let structure = if kind == "bbn" {
            let s = BbnStructure::new(order, parents.clone()).map_err(|e| self.err(e))?;
            // stored parent order fixes the state encoding
            if s.parent_sets() != parents.as_slice() {
                return Err(self.err("bbn parent lists must be sorted ascending"));
            }
            Structure::Bbn(s)
        } else {
            if parents.iter().any(|p| p.len() > 1) {
                return Err(self.err("dendroid nodes have at most one parent"));
            }
            let single = parents.iter().map(|p| p.first().copied()).collect();
            Structure::Dendroid(DendroidStructure::new(order, single).map_err(|e| self.err(e))?)
        };

        self.expect("params")?;
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); r];
        let expected_rows: usize = (0..r)
            .map(|node| {
                structure
                    .parents(node)
                    .iter()
                    .map(|&p| schema.card(p))
                    .product::<usize>()
            })
            .sum();
        for _ in 0..expected_rows {
            let line = self.next_line()?;
            let mut fields = line.split(' ');
            let node: usize = self.number(fields.next().unwrap_or(""), "node index")?;
            let state: usize = self.number(fields.next().unwrap_or(""), "state index")?;
            if node >= r {
                return Err(self.err(format!("node {node} out of range")));
            }
            if state * schema.card(node) != tables[node].len() {
                return Err(self.err(format!("expected the next state of node {node}")));
            }
            let row: Vec<f64> = fields
                .map(|f| self.number::<f64>(f, "probability"))
                .collect::<Result<_>>()?;
            if row.len() != schema.card(node) {
                return Err(self.err(format!(
                    "{} probabilities for `{}` of cardinality {}",
                    row.len(),
                    schema.name(node),
                    schema.card(node)
                )));
            }
            check_row(schema.name(node), state, &row).map_err(|e| self.err(e))?;
            tables[node].extend(row);
        }
        self.expect("end")?;
        if self.lines[self.pos..].iter().any(|l| !l.is_empty()) {
            self.pos += 1;
            return Err(self.err("trailing content after `end`"));
        }
        FittedModel::from_parts(schema, dictionary, structure, tables, FitMeta { n, penalty, a })
            .map_err(|e| self.err(e))
    }
}
