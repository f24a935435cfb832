//! Categorical datasets, value dictionaries, and the occurrence counts the
//! learners consume.
//!
//! Raw CSV values are dictionary-encoded per attribute in order of first
//! appearance, so the same input file always yields the same codes.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Largest parent-state space [`Dataset::conditional_counts`] will build.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

/// Attribute names and cardinalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    names: Vec<String>,
    cards: Vec<usize>,
}

impl AttributeSchema {
    pub fn new(names: Vec<String>, cards: Vec<usize>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::schema("schema has no attributes"));
        }
        if names.len() != cards.len() {
            return Err(Error::schema(format!(
                "{} names but {} cardinalities",
                names.len(),
                cards.len()
            )));
        }
        for (j, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::schema(format!("attribute {j} has an empty name")));
            }
            if names[..j].contains(name) {
                return Err(Error::schema(format!("duplicate attribute name `{name}`")));
            }
        }
        if let Some(j) = cards.iter().position(|&c| c == 0) {
            return Err(Error::schema(format!(
                "attribute `{}` has cardinality 0",
                names[j]
            )));
        }
        Ok(Self { names, cards })
    }

    /// Schema with generated names `x1, x2, ...`.
    pub fn anonymous(cards: Vec<usize>) -> Result<Self> {
        let names = (1..=cards.len()).map(|j| format!("x{j}")).collect();
        Self::new(names, cards)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn card(&self, j: usize) -> usize {
        self.cards[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn check_index(&self, j: usize) -> Result<()> {
        if j < self.len() {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "attribute index {j} out of range (R = {})",
                self.len()
            )))
        }
    }
}

/// Per-attribute bijection between raw string values and codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    labels: Vec<Vec<String>>,
    index: Vec<HashMap<String, u32>>,
}

impl Dictionary {
    /// Builds a dictionary from per-attribute label lists (code order).
    pub fn from_labels(labels: Vec<Vec<String>>) -> Result<Self> {
        let mut index = Vec::with_capacity(labels.len());
        for (j, attr) in labels.iter().enumerate() {
            let mut map = HashMap::with_capacity(attr.len());
            for (code, label) in attr.iter().enumerate() {
                if map.insert(label.clone(), code as u32).is_some() {
                    return Err(Error::schema(format!(
                        "attribute {j}: duplicate value `{label}`"
                    )));
                }
            }
            index.push(map);
        }
        Ok(Self { labels, index })
    }

    /// Decimal labels `0..card` for every attribute.
    pub fn numeric(cards: &[usize]) -> Self {
        let labels = cards
            .iter()
            .map(|&c| (0..c).map(|v| v.to_string()).collect())
            .collect();
        Self::from_labels(labels).expect("decimal labels are distinct")
    }

    pub fn encode(&self, attr: usize, raw: &str) -> Option<u32> {
        self.index.get(attr)?.get(raw).copied()
    }

    pub fn decode(&self, attr: usize, code: u32) -> &str {
        &self.labels[attr][code as usize]
    }

    pub fn labels(&self, attr: usize) -> &[String] {
        &self.labels[attr]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Extends attribute `attr` with generated labels until it has `card`
    /// entries. Generated labels are the code in decimal, suffixed with `_`
    /// until unique.
    fn pad(&mut self, attr: usize, card: usize) {
        while self.labels[attr].len() < card {
            let code = self.labels[attr].len();
            let mut label = code.to_string();
            while self.index[attr].contains_key(&label) {
                label.push('_');
            }
            self.index[attr].insert(label.clone(), code as u32);
            self.labels[attr].push(label);
        }
    }
}

/// Complete categorical records, stored column-major as value codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    columns: Vec<Vec<u32>>,
    dictionary: Dictionary,
}

/// One non-empty CSV line split on commas.
pub(crate) struct CsvLine<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

/// Splits CSV text into the header and data lines. Trailing empty lines are
/// dropped; `\r\n` endings are accepted.
pub(crate) fn split_csv(text: &str) -> Result<(Vec<&str>, Vec<CsvLine<'_>>)> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let Some((header, body)) = lines.split_first() else {
        return Err(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        });
    };
    let header: Vec<&str> = header.split(',').collect();
    for (j, name) in header.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header field {} is empty", j + 1),
            });
        }
        if header[..j].contains(name) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("duplicate header `{name}`"),
            });
        }
    }
    let mut out = Vec::with_capacity(body.len());
    for (k, raw) in body.iter().enumerate() {
        let line = k + 2;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        out.push(CsvLine { line, fields });
    }
    Ok((header, out))
}

impl Dataset {
    /// Builds a dataset directly from coded records (row-major).
    pub fn from_codes(schema: AttributeSchema, rows: &[Vec<u32>]) -> Result<Self> {
        let r = schema.len();
        if rows.is_empty() {
            return Err(Error::argument("dataset has no records"));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); r];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != r {
                return Err(Error::argument(format!(
                    "record {k} has {} values, expected {r}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v as usize >= schema.card(j) {
                    return Err(Error::schema(format!(
                        "record {k}: value {v} out of range for `{}` (cardinality {})",
                        schema.name(j),
                        schema.card(j)
                    )));
                }
                columns[j].push(v);
            }
        }
        let dictionary = Dictionary::numeric(schema.cards());
        Ok(Self {
            schema,
            columns,
            dictionary,
        })
    }

    /// Reads a CSV file. See [`Dataset::from_csv_str`].
    pub fn load_csv(path: impl AsRef<Path>, declared: Option<&AttributeSchema>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text, declared)
    }

    /// Parses CSV text, assigning codes in first-appearance order.
    ///
    /// Without a declared schema each cardinality is the number of distinct
    /// values observed. With one, header names must match and every column
    /// must fit in its declared cardinality.
    pub fn from_csv_str(text: &str, declared: Option<&AttributeSchema>) -> Result<Self> {
        let (header, lines) = split_csv(text)?;
        if lines.is_empty() {
            return Err(Error::Parse {
                line: 2,
                msg: "no data rows".into(),
            });
        }
        if let Some(schema) = declared {
            if schema.names() != header.as_slice() {
                return Err(Error::schema(format!(
                    "header [{}] does not match declared attributes [{}]",
                    header.join(","),
                    schema.names().join(",")
                )));
            }
        }
        let r = header.len();
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); r];
        let mut index: Vec<HashMap<String, u32>> = vec![HashMap::new(); r];
        let mut columns = vec![Vec::with_capacity(lines.len()); r];
        for CsvLine { line, fields } in &lines {
            for (j, field) in fields.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::MissingValue {
                        line: *line,
                        column: header[j].to_string(),
                    });
                }
                let code = match index[j].get(*field) {
                    Some(&c) => c,
                    None => {
                        let c = labels[j].len() as u32;
                        if let Some(schema) = declared {
                            if c as usize >= schema.card(j) {
                                return Err(Error::schema(format!(
                                    "line {line}: value `{field}` is the {}th distinct value of `{}`, \
                                     which declares cardinality {}",
                                    c + 1,
                                    header[j],
                                    schema.card(j)
                                )));
                            }
                        }
                        index[j].insert(field.to_string(), c);
                        labels[j].push(field.to_string());
                        c
                    }
                };
                columns[j].push(code);
            }
        }
        let schema = match declared {
            Some(s) => s.clone(),
            None => AttributeSchema::new(
                header.iter().map(|s| s.to_string()).collect(),
                labels.iter().map(Vec::len).collect(),
            )?,
        };
        let mut dictionary = Dictionary { labels, index };
        for j in 0..r {
            dictionary.pad(j, schema.card(j));
        }
        Ok(Self {
            schema,
            columns,
            dictionary,
        })
    }

    /// Parses CSV text against an existing schema and dictionary, e.g. to
    /// score new data under a saved model. Unknown values are schema errors.
    pub fn from_csv_with_dictionary(
        text: &str,
        schema: &AttributeSchema,
        dictionary: &Dictionary,
    ) -> Result<Self> {
        let (header, lines) = split_csv(text)?;
        if schema.names() != header.as_slice() {
            return Err(Error::schema(format!(
                "header [{}] does not match model attributes [{}]",
                header.join(","),
                schema.names().join(",")
            )));
        }
        if lines.is_empty() {
            return Err(Error::Parse {
                line: 2,
                msg: "no data rows".into(),
            });
        }
        let mut columns = vec![Vec::with_capacity(lines.len()); schema.len()];
        for CsvLine { line, fields } in &lines {
            for (j, field) in fields.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::MissingValue {
                        line: *line,
                        column: header[j].to_string(),
                    });
                }
                let code = dictionary.encode(j, field).ok_or_else(|| {
                    Error::schema(format!(
                        "line {line}: unknown value `{field}` for `{}`",
                        header[j]
                    ))
                })?;
                columns[j].push(code);
            }
        }
        Ok(Self {
            schema: schema.clone(),
            columns,
            dictionary: dictionary.clone(),
        })
    }

    /// Replaces the dictionary, e.g. after sampling from a model whose
    /// labels should be kept.
    pub fn with_dictionary(mut self, dictionary: Dictionary) -> Result<Self> {
        if dictionary.len() != self.schema.len()
            || (0..self.schema.len()).any(|j| dictionary.labels(j).len() != self.schema.card(j))
        {
            return Err(Error::schema("dictionary does not match schema"));
        }
        self.dictionary = dictionary;
        Ok(self)
    }

    /// Renders the dataset as CSV using the raw dictionary labels.
    pub fn to_csv_string(&self) -> String {
        let mut out = self.schema.names().join(",");
        out.push('\n');
        for k in 0..self.n() {
            for j in 0..self.num_attrs() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(self.dictionary.decode(j, self.columns[j][k]));
            }
            out.push('\n');
        }
        out
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// Number of records.
    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    /// Number of attributes.
    pub fn num_attrs(&self) -> usize {
        self.schema.len()
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, attr: usize) -> u32 {
        self.columns[attr][row]
    }

    pub fn record(&self, row: usize) -> Vec<u32> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Co-occurrence counts of attributes `i` and `j`.
    pub fn pair_counts(&self, i: usize, j: usize) -> Result<PairCounts> {
        self.schema.check_index(i)?;
        self.schema.check_index(j)?;
        if i == j {
            return Err(Error::argument(format!("pair_counts needs two attributes, got {i} twice")));
        }
        let (rows, cols) = (self.schema.card(i), self.schema.card(j));
        let mut table = vec![0u64; rows * cols];
        for (&u, &v) in self.columns[i].iter().zip(&self.columns[j]) {
            table[u as usize * cols + v as usize] += 1;
        }
        Ok(PairCounts {
            i,
            j,
            rows,
            cols,
            table,
        })
    }

    /// Parent-state index of every record, plus the encoder that produced it.
    pub fn state_indices(&self, attrs: &[usize], cap: usize) -> Result<(MixedRadix, Vec<usize>)> {
        for &a in attrs {
            self.schema.check_index(a)?;
        }
        let radix = MixedRadix::new(attrs.iter().map(|&a| self.schema.card(a)).collect(), cap)?;
        let mut states = vec![0usize; self.n()];
        for (&a, &base) in attrs.iter().zip(radix.radices()) {
            for (s, &v) in states.iter_mut().zip(&self.columns[a]) {
                *s = *s * base + v as usize;
            }
        }
        Ok((radix, states))
    }

    /// Counts of `child` per joint configuration of `parents`.
    pub fn conditional_counts(&self, child: usize, parents: &[usize]) -> Result<CondCountTable> {
        self.conditional_counts_capped(child, parents, DEFAULT_STATE_CAP)
    }

    pub fn conditional_counts_capped(
        &self,
        child: usize,
        parents: &[usize],
        cap: usize,
    ) -> Result<CondCountTable> {
        self.schema.check_index(child)?;
        if parents.contains(&child) {
            return Err(Error::argument(format!(
                "attribute {child} cannot be its own parent"
            )));
        }
        let (radix, states) = self.state_indices(parents, cap)?;
        let card = self.schema.card(child);
        let mut counts = vec![0u64; radix.size() * card];
        for (&s, &q) in states.iter().zip(&self.columns[child]) {
            counts[s * card + q as usize] += 1;
        }
        Ok(CondCountTable::from_counts(child, card, counts))
    }
}

/// Mixed-radix encoder for joint configurations; the first digit is the most
/// significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedRadix {
    radices: Vec<usize>,
    size: usize,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>, cap: usize) -> Result<Self> {
        let mut size = 1usize;
        for &r in &radices {
            size = size
                .checked_mul(r)
                .filter(|&s| s <= cap)
                .ok_or_else(|| {
                    Error::capacity(format!(
                        "joint state space of cardinalities {radices:?} exceeds {cap} states"
                    ))
                })?;
        }
        Ok(Self { radices, size })
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Number of joint states (1 for an empty radix list).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, digits: &[u32]) -> usize {
        debug_assert_eq!(digits.len(), self.radices.len());
        digits
            .iter()
            .zip(&self.radices)
            .fold(0, |s, (&d, &r)| s * r + d as usize)
    }

    pub fn decode(&self, mut state: usize) -> Vec<u32> {
        let mut digits = vec![0u32; self.radices.len()];
        for (d, &r) in digits.iter_mut().zip(&self.radices).rev() {
            *d = (state % r) as u32;
            state /= r;
        }
        digits
    }
}

/// Co-occurrence counts of two attributes, row-major `card(i) x card(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    pub i: usize,
    pub j: usize,
    rows: usize,
    cols: usize,
    table: Vec<u64>,
}

impl PairCounts {
    /// Builds a table from explicit counts (row-major).
    pub fn from_table(i: usize, j: usize, rows: usize, cols: usize, table: Vec<u64>) -> Result<Self> {
        if table.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::argument(format!(
                "pair table of length {} does not have shape {rows}x{cols}",
                table.len()
            )));
        }
        Ok(Self {
            i,
            j,
            rows,
            cols,
            table,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, u: usize, v: usize) -> u64 {
        self.table[u * self.cols + v]
    }

    pub fn n(&self) -> u64 {
        self.table.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.table.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0; self.cols];
        for row in self.table.chunks(self.cols) {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let mut table = vec![0; self.table.len()];
        for u in 0..self.rows {
            for v in 0..self.cols {
                table[v * self.rows + u] = self.get(u, v);
            }
        }
        Self {
            i: self.j,
            j: self.i,
            rows: self.cols,
            cols: self.rows,
            table,
        }
    }
}

/// Occurrence counts `n[q, s]` of a child value `q` in parent state `s`, and
/// the state totals `n[s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondCountTable {
    child: usize,
    card: usize,
    counts: Vec<u64>,
    state_totals: Vec<u64>,
}

impl CondCountTable {
    /// `counts` is row-major `states x card`.
    ///
    /// Panics if `card` is zero or does not divide `counts.len()`.
    pub fn from_counts(child: usize, card: usize, counts: Vec<u64>) -> Self {
        assert!(card > 0 && counts.len() % card == 0 && !counts.is_empty());
        let state_totals = counts.chunks(card).map(|r| r.iter().sum()).collect();
        Self {
            child,
            card,
            counts,
            state_totals,
        }
    }

    pub fn child(&self) -> usize {
        self.child
    }

    /// Cardinality of the child attribute.
    pub fn card(&self) -> usize {
        self.card
    }

    pub fn states(&self) -> usize {
        self.state_totals.len()
    }

    pub fn count(&self, state: usize, q: usize) -> u64 {
        self.counts[state * self.card + q]
    }

    pub fn state_row(&self, state: usize) -> &[u64] {
        &self.counts[state * self.card..(state + 1) * self.card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.card)
    }

    pub fn state_totals(&self) -> &[u64] {
        &self.state_totals
    }

    pub fn n(&self) -> u64 {
        self.state_totals.iter().sum()
    }
}
