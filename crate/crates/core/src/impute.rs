//! Filling in missing attribute values with a fitted model.
//!
//! The posterior over completions is computed by enumerating every
//! assignment of the missing attributes and normalizing the model's joint
//! probabilities, so results can be audited against the full joint table.

use crate::dataset::{split_csv, AttributeSchema, CsvLine, Dictionary, MixedRadix};
use crate::error::{Error, Result};
use crate::model::FittedModel;

/// Cap on the number of completions [`posterior`] enumerates.
pub const MAX_COMPLETIONS: usize = 1_000_000;

/// CSV token marking a missing cell.
pub const MISSING_TOKEN: &str = "?";

/// A record with some values unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRecord {
    values: Vec<Option<u32>>,
}

impl PartialRecord {
    /// At least one value must be known.
    pub fn new(values: Vec<Option<u32>>) -> Result<Self> {
        if values.iter().all(Option::is_none) {
            return Err(Error::argument("record has no known values"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }

    /// Indices of the missing attributes, ascending.
    pub fn missing(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.is_none().then_some(j))
            .collect()
    }
}

/// Normalized distribution over completions of one partial record.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    missing: Vec<usize>,
    entries: Vec<(Vec<u32>, f64)>,
}

impl Posterior {
    /// Missing attributes, in the order completions vary (first slowest).
    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    /// `(full record, probability)` pairs in lexicographic order of the
    /// missing values.
    pub fn entries(&self) -> &[(Vec<u32>, f64)] {
        &self.entries
    }

    /// Most probable completion; ties go to the earliest (lexicographically
    /// smallest) one.
    pub fn map(&self) -> (&[u32], f64) {
        let mut best = &self.entries[0];
        for e in &self.entries[1..] {
            if e.1 > best.1 * (1.0 + 1e-12) {
                best = e;
            }
        }
        (&best.0, best.1)
    }

    /// Marginal distribution of one missing attribute.
    pub fn marginal(&self, attr: usize, card: usize) -> Vec<f64> {
        let mut out = vec![0.0; card];
        for (rec, p) in &self.entries {
            out[rec[attr] as usize] += p;
        }
        out
    }
}

/// Posterior over all completions of `r`.
pub fn posterior(m: &FittedModel, r: &PartialRecord) -> Result<Posterior> {
    let schema = m.schema();
    if r.values.len() != schema.len() {
        return Err(Error::argument(format!(
            "record has {} values, model has {} attributes",
            r.values.len(),
            schema.len()
        )));
    }
    let missing = r.missing();
    let radix = MixedRadix::new(
        missing.iter().map(|&j| schema.card(j)).collect(),
        MAX_COMPLETIONS,
    )?;
    let mut record: Vec<u32> = r.values.iter().map(|v| v.unwrap_or(0)).collect();
    m.check_record(&record)?;
    let mut entries = Vec::with_capacity(radix.size());
    let mut total = 0.0;
    for s in 0..radix.size() {
        for (&j, v) in missing.iter().zip(radix.decode(s)) {
            record[j] = v;
        }
        let p = m.joint_unchecked(&record);
        total += p;
        entries.push((record.clone(), p));
    }
    if !(total > 0.0) {
        return Err(Error::argument("the observed values have zero probability under the model"));
    }
    for e in &mut entries {
        e.1 /= total;
    }
    Ok(Posterior { missing, entries })
}

/// Most probable completion of `r`.
pub fn map_impute(m: &FittedModel, r: &PartialRecord) -> Result<Vec<u32>> {
    Ok(posterior(m, r)?.map().0.to_vec())
}

/// Parses CSV text whose missing cells hold `?`, encoding values with the
/// model's dictionary. Unknown values are schema errors.
pub fn read_partial_csv(
    text: &str,
    schema: &AttributeSchema,
    dictionary: &Dictionary,
) -> Result<Vec<PartialRecord>> {
    let (header, lines) = split_csv(text)?;
    if schema.names() != header.as_slice() {
        return Err(Error::schema(format!(
            "header [{}] does not match model attributes [{}]",
            header.join(","),
            schema.names().join(",")
        )));
    }
    let mut out = Vec::with_capacity(lines.len());
    for CsvLine { line, fields } in lines {
        let mut values = Vec::with_capacity(fields.len());
        for (j, field) in fields.iter().enumerate() {
            if *field == MISSING_TOKEN {
                values.push(None);
                continue;
            }
            if field.is_empty() {
                return Err(Error::MissingValue {
                    line,
                    column: header[j].to_string(),
                });
            }
            let code = dictionary.encode(j, field).ok_or_else(|| {
                Error::schema(format!("line {line}: unknown value `{field}` for `{}`", header[j]))
            })?;
            values.push(Some(code));
        }
        out.push(PartialRecord::new(values).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbn::BbnStructure;
    use crate::dataset::Dataset;
    use crate::forest::{orient_forest, ForestStructure};
    use crate::model::{fit_parameters, FitMeta, Structure};
    use crate::rng::SplitMix64;

    fn chain_model(eps: f64) -> FittedModel {
        let schema = AttributeSchema::anonymous(vec![2, 2]).unwrap();
        FittedModel::from_parts(
            schema.clone(),
            Dictionary::numeric(schema.cards()),
            BbnStructure::new(vec![0, 1], vec![vec![], vec![0]]).unwrap().into(),
            vec![vec![0.5, 0.5], vec![1.0 - eps, eps, eps, 1.0 - eps]],
            FitMeta { n: 0, penalty: None, a: 0.5 },
        )
        .unwrap()
    }

    fn random_model(rng: &mut SplitMix64, cards: &[usize]) -> FittedModel {
        let r = cards.len();
        let rows: Vec<Vec<u32>> = (0..40)
            .map(|_| {
                let mut row: Vec<u32> = Vec::new();
                for (j, &c) in cards.iter().enumerate() {
                    let v = if j > 0 && rng.below(2) == 0 {
                        row[rng.below(j as u64) as usize] % c as u32
                    } else {
                        rng.below(c as u64) as u32
                    };
                    row.push(v);
                }
                row
            })
            .collect();
        let d = Dataset::from_codes(AttributeSchema::anonymous(cards.to_vec()).unwrap(), &rows).unwrap();
        let s: Structure = if rng.below(2) == 0 {
            let parents: Vec<Vec<usize>> = (0..r)
                .map(|j| (0..j).filter(|_| rng.below(2) == 0).collect())
                .collect();
            BbnStructure::new((0..r).collect(), parents).unwrap().into()
        } else {
            let edges: Vec<(usize, usize)> = (1..r).map(|j| (rng.below(j as u64) as usize, j)).collect();
            orient_forest(&ForestStructure::new(r, edges).unwrap()).into()
        };
        fit_parameters(s, &d, 0.5).unwrap()
    }

    #[test]
    fn nothing_missing() {
        let m = chain_model(0.1);
        let r = PartialRecord::new(vec![Some(1), Some(0)]).unwrap();
        let post = posterior(&m, &r).unwrap();
        assert_eq!(post.entries(), &[(vec![1, 0], 1.0)]);
    }

    #[test]
    fn chain_query() {
        let m = chain_model(0.01);
        let r = PartialRecord::new(vec![Some(1), None]).unwrap();
        let post = posterior(&m, &r).unwrap();
        assert!(post.marginal(1, 2)[1] > 0.95);
        assert_eq!(map_impute(&m, &r).unwrap(), vec![1, 1]);
        // the reverse direction goes through Bayes' rule
        let r = PartialRecord::new(vec![None, Some(0)]).unwrap();
        assert_eq!(map_impute(&m, &r).unwrap(), vec![0, 0]);
    }

    #[test]
    fn uniform_model_ties_to_zeros() {
        let schema = AttributeSchema::anonymous(vec![3, 2, 2]).unwrap();
        let m = FittedModel::from_parts(
            schema.clone(),
            Dictionary::numeric(schema.cards()),
            BbnStructure::empty(3).into(),
            vec![vec![1.0 / 3.0; 3], vec![0.5; 2], vec![0.5; 2]],
            FitMeta { n: 0, penalty: None, a: 0.5 },
        )
        .unwrap();
        let r = PartialRecord::new(vec![None, Some(1), None]).unwrap();
        assert_eq!(map_impute(&m, &r).unwrap(), vec![0, 1, 0]);
    }

    #[test]
    fn matches_joint_table_oracle() {
        let mut rng = SplitMix64::new(13);
        for cards in [vec![2usize, 3], vec![2, 2, 3], vec![3, 2, 2, 2]] {
            let m = random_model(&mut rng, &cards);
            let radix = MixedRadix::new(cards.clone(), usize::MAX).unwrap();
            let joint: Vec<f64> = (0..radix.size())
                .map(|s| m.joint_probability(&radix.decode(s)).unwrap())
                .collect();
            let r = cards.len();
            let truth = radix.decode(rng.below(radix.size() as u64) as usize);
            for mask in 1u32..(1 << r) {
                if mask.count_ones() > 2 || mask.count_ones() as usize == r {
                    continue;
                }
                let values: Vec<Option<u32>> =
                    (0..r).map(|j| (mask >> j & 1 == 0).then_some(truth[j])).collect();
                let post = posterior(&m, &PartialRecord::new(values.clone()).unwrap()).unwrap();
                let consistent: Vec<usize> = (0..radix.size())
                    .filter(|&s| {
                        let rec = radix.decode(s);
                        values.iter().zip(&rec).all(|(v, x)| v.map_or(true, |v| v == *x))
                    })
                    .collect();
                let z: f64 = consistent.iter().map(|&s| joint[s]).sum();
                assert_eq!(post.entries().len(), consistent.len());
                for (rec, p) in post.entries() {
                    let oracle = joint[radix.encode(rec)] / z;
                    assert!((p - oracle).abs() < 1e-9);
                    assert!(*p > 0.0);
                }
                let sum: f64 = post.entries().iter().map(|e| e.1).sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_missing_marginalizes_to_one_missing() {
        let mut rng = SplitMix64::new(21);
        let cards = [2usize, 3, 2, 2];
        let m = random_model(&mut rng, &cards);
        // P(x1 | x3) from the 2-missing query {x1, x2} observed x0, x3 vs. a
        // direct sum over x2 of the joint
        let two = posterior(&m, &PartialRecord::new(vec![Some(1), None, None, Some(0)]).unwrap()).unwrap();
        let marg = two.marginal(1, 3);
        let mut direct = vec![0.0; 3];
        for v1 in 0..3u32 {
            for v2 in 0..2u32 {
                direct[v1 as usize] += m.joint_probability(&[1, v1, v2, 0]).unwrap();
            }
        }
        let z: f64 = direct.iter().sum();
        for (a, b) in marg.iter().zip(&direct) {
            assert!((a - b / z).abs() < 1e-9);
        }
    }

    #[test]
    fn map_agrees_with_top_entry() {
        let mut rng = SplitMix64::new(5);
        let cards = [2usize, 3, 2, 3];
        let m = random_model(&mut rng, &cards);
        for _ in 0..100 {
            let values: Vec<Option<u32>> = cards
                .iter()
                .map(|&c| (rng.below(2) == 0).then(|| rng.below(c as u64) as u32))
                .collect();
            let Ok(r) = PartialRecord::new(values) else { continue };
            let post = posterior(&m, &r).unwrap();
            let top = post
                .entries()
                .iter()
                .fold(None::<&(Vec<u32>, f64)>, |best, e| match best {
                    Some(b) if b.1 >= e.1 => Some(b),
                    _ => Some(e),
                })
                .unwrap();
            assert_eq!(map_impute(&m, &r).unwrap(), top.0);
        }
    }

    #[test]
    fn errors() {
        assert!(PartialRecord::new(vec![None, None]).is_err());
        let m = chain_model(0.1);
        assert!(posterior(&m, &PartialRecord::new(vec![Some(2), None]).unwrap()).is_err());
        assert!(posterior(&m, &PartialRecord::new(vec![Some(0)]).unwrap()).is_err());

        let schema = AttributeSchema::anonymous(vec![1000; 3]).unwrap();
        let big = FittedModel::from_parts(
            schema.clone(),
            Dictionary::numeric(schema.cards()),
            BbnStructure::empty(3).into(),
            vec![vec![1e-3; 1000]; 3],
            FitMeta { n: 0, penalty: None, a: 0.5 },
        )
        .unwrap();
        let r = PartialRecord::new(vec![Some(0), None, None]).unwrap();
        assert!(posterior(&big, &r).is_ok());
        let r = PartialRecord::new(vec![None, None, Some(0)]).unwrap();
        assert!(posterior(&big, &r).is_ok());
        let schema = AttributeSchema::anonymous(vec![1001, 1000, 2]).unwrap();
        let big = FittedModel::from_parts(
            schema.clone(),
            Dictionary::numeric(schema.cards()),
            BbnStructure::empty(3).into(),
            vec![vec![1.0 / 1001.0; 1001], vec![1e-3; 1000], vec![0.5; 2]],
            FitMeta { n: 0, penalty: None, a: 0.5 },
        )
        .unwrap();
        let r = PartialRecord::new(vec![None, None, Some(0)]).unwrap();
        assert!(posterior(&big, &r).unwrap_err().is_capacity());
    }

    #[test]
    fn partial_csv() {
        let schema = AttributeSchema::new(vec!["a".into(), "b".into()], vec![2, 2]).unwrap();
        let dict = Dictionary::from_labels(vec![
            vec!["x".into(), "y".into()],
            vec!["u".into(), "v".into()],
        ])
        .unwrap();
        let recs = read_partial_csv("a,b\nx,?\n?,v\ny,u\n", &schema, &dict).unwrap();
        assert_eq!(recs[0].values(), &[Some(0), None]);
        assert_eq!(recs[1].values(), &[None, Some(1)]);
        assert_eq!(recs[2].values(), &[Some(1), Some(0)]);
        assert!(read_partial_csv("a,b\nz,?\n", &schema, &dict).unwrap_err().to_string().contains("unknown"));
        assert!(read_partial_csv("a,c\nx,?\n", &schema, &dict).is_err());
        assert!(read_partial_csv("a,b\n?,?\n", &schema, &dict).is_err());
    }
}
