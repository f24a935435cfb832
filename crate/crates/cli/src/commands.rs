use std::fs;
use std::io::Write;
use std::path::Path;

use dendrolearn::bbn::{learn_bbn_exhaustive, learn_bbn_greedy};
use dendrolearn::forest::{all_edge_gains, learn_forest, orient_forest};
use dendrolearn::impute::{posterior, read_partial_csv};
use dendrolearn::model::{fit_parameters, FittedModel, Structure};
use dendrolearn::partitions::{count_model_space, count_models as bell};
use dendrolearn::scoring::{description_length, exact_structure_code_length, ParentSets};
use dendrolearn::{AttributeSchema, Dataset, Error, Penalty, Result, ScoreBreakdown};

use crate::{CountArgs, GenerateArgs, ImputeArgs, LearnArgs, Method, ScoreArgs};

/// Resolves `natural` or a comma list of names / 1-based positions.
pub fn parse_ordering(text: &str, schema: &AttributeSchema) -> Result<Vec<usize>> {
    if text.trim() == "natural" {
        return Ok((0..schema.len()).collect());
    }
    let mut order = Vec::new();
    for token in text.split(',').map(str::trim) {
        let idx = match schema.index_of(token) {
            Some(j) => j,
            None => match token.parse::<usize>() {
                Ok(p) if (1..=schema.len()).contains(&p) => p - 1,
                _ => {
                    return Err(Error::Argument(format!(
                        "ordering entry `{token}` is neither a column name nor a position in 1..={}",
                        schema.len()
                    )))
                }
            },
        };
        order.push(idx);
    }
    let mut seen = vec![false; schema.len()];
    for &j in &order {
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::Argument(format!("ordering lists `{}` twice", schema.name(j))));
        }
    }
    if order.len() != schema.len() {
        return Err(Error::Argument(format!(
            "ordering has {} entries but the data has {} attributes",
            order.len(),
            schema.len()
        )));
    }
    Ok(order)
}

fn write_score(
    out: &mut impl Write,
    structure: &Structure,
    schema: &AttributeSchema,
    n: usize,
    penalty: Penalty,
    score: &ScoreBreakdown,
) -> Result<()> {
    writeln!(out, "penalty={penalty}")?;
    writeln!(out, "n={n}")?;
    writeln!(out, "fit={}", score.fit)?;
    writeln!(out, "complexity={}", score.complexity)?;
    writeln!(out, "model_code={}", score.model_code)?;
    writeln!(out, "total={}", score.total)?;
    writeln!(out, "k={}", score.k)?;
    writeln!(out, "edges={}", structure.arc_count())?;
    for node in 0..schema.len() {
        let parents: Vec<&str> = structure
            .parents(node)
            .iter()
            .map(|&p| schema.name(p))
            .collect();
        writeln!(out, "parents.{}={}", schema.name(node), parents.join(","))?;
    }
    Ok(())
}

pub fn learn(args: &LearnArgs, verbose: u8, out: &mut impl Write) -> Result<()> {
    if !(args.a > 0.0 && args.a.is_finite()) {
        return Err(Error::Argument(format!("--a must be > 0, got {}", args.a)));
    }
    let data = Dataset::load_csv(&args.input, None)?;
    let schema = data.schema();
    let structure: Structure = match args.method {
        Method::Forest => {
            if verbose > 0 {
                for e in all_edge_gains(&data, args.penalty) {
                    eprintln!(
                        "gain {}-{}: mi={} gain={}",
                        schema.name(e.i),
                        schema.name(e.j),
                        e.mi,
                        e.gain
                    );
                }
            }
            orient_forest(&learn_forest(&data, args.penalty)).into()
        }
        Method::BbnGreedy => {
            let order = parse_ordering(&args.ordering, schema)?;
            learn_bbn_greedy(&data, &order, args.penalty, args.max_parents)?.into()
        }
        Method::BbnExhaustive => {
            let order = parse_ordering(&args.ordering, schema)?;
            learn_bbn_exhaustive(&data, &order, args.penalty, args.max_parents)?.into()
        }
    };
    let score = description_length(&structure, &data, args.penalty, true)?;
    let mut model = fit_parameters(structure, &data, args.a)?;
    model.meta.penalty = Some(args.penalty);
    model.save(&args.out)?;
    let method = match args.method {
        Method::Forest => "forest",
        Method::BbnGreedy => "bbn-greedy",
        Method::BbnExhaustive => "bbn-exhaustive",
    };
    writeln!(out, "method={method}")?;
    write_score(out, model.structure(), schema, data.n(), args.penalty, &score)
}

pub fn score(args: &ScoreArgs, out: &mut impl Write) -> Result<()> {
    let model = FittedModel::load(&args.model)?;
    let text = fs::read_to_string(&args.input)?;
    let data = Dataset::from_csv_with_dictionary(&text, model.schema(), model.dictionary())?;
    let penalty = args.penalty.or(model.meta.penalty).unwrap_or(Penalty::Mdl);
    let structure = model.structure();
    let score = description_length(structure, &data, penalty, true)?;
    write_score(out, structure, model.schema(), data.n(), penalty, &score)?;
    if args.exact {
        let a = args.a.unwrap_or(model.meta.a);
        let exact = exact_structure_code_length(structure, &data, a)?;
        let asymptotic = score.fit + score.k as f64 * Penalty::Mdl.value(data.n()) / 2.0;
        writeln!(out, "exact_a={a}")?;
        writeln!(out, "exact={exact}")?;
        writeln!(out, "asymptotic={asymptotic}")?;
        writeln!(out, "exact_gap={}", exact - asymptotic)?;
    }
    Ok(())
}

pub fn impute(args: &ImputeArgs, out: &mut impl Write) -> Result<()> {
    let model = FittedModel::load(&args.model)?;
    let text = fs::read_to_string(&args.input)?;
    let records = read_partial_csv(&text, model.schema(), model.dictionary())?;
    let schema = model.schema();
    let dict = model.dictionary();
    let mut csv = schema.names().join(",");
    if args.posterior {
        csv.push_str(",posterior");
    }
    csv.push('\n');
    for record in &records {
        let post = posterior(&model, record)?;
        let (completion, p) = post.map();
        let fields: Vec<&str> = completion
            .iter()
            .enumerate()
            .map(|(j, &v)| dict.decode(j, v))
            .collect();
        csv.push_str(&fields.join(","));
        if args.posterior {
            csv.push_str(&format!(",{p}"));
        }
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv, out)
}

pub fn generate(args: &GenerateArgs, out: &mut impl Write) -> Result<()> {
    if args.n == 0 {
        return Err(Error::Argument("--n must be at least 1".into()));
    }
    let model = FittedModel::load(&args.model)?;
    let data = model.sample(args.n, args.seed)?;
    emit(args.out.as_deref(), &data.to_csv_string(), out)
}

pub fn count_models(args: &CountArgs, out: &mut impl Write) -> Result<()> {
    if let Some(m) = args.m {
        writeln!(out, "models={}", bell(m)?)?;
    }
    if let Some(cards) = &args.cards {
        let cards: Vec<usize> = cards
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad cardinality `{c}`")))
            })
            .collect::<Result<_>>()?;
        let (models, comparisons) = count_model_space(&cards)?;
        writeln!(out, "models={models}")?;
        writeln!(out, "comparisons={comparisons}")?;
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str, out: &mut impl Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}
