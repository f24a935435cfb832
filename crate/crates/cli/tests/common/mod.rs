#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dendrolearn::dataset::Dictionary;
use dendrolearn::forest::DendroidStructure;
use dendrolearn::model::{FitMeta, FittedModel};
use dendrolearn::rng::SplitMix64;
use dendrolearn::{AttributeSchema, Dataset};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dendrolearn")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("DENDROLEARN_THREADS")
        .output()
        .expect("spawn dendrolearn")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

/// Value of `key=` in key=value output.
pub fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .to_string()
}

pub struct TempDir(PathBuf);

impl TempDir {
    pub fn new(tag: &str) -> Self {
        let mut p = std::env::temp_dir();
        p.push(format!("dendrolearn-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        std::fs::create_dir_all(&p).unwrap();
        TempDir(p)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.0
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// Random dataset whose columns copy an earlier column about a third of the
/// time, so pairwise dependence varies.
pub fn random_dataset(rng: &mut SplitMix64, r: usize, max_card: u64, n: usize) -> Dataset {
    let cards: Vec<usize> = (0..r).map(|_| 1 + rng.below(max_card) as usize).collect();
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
    Dataset::from_codes(AttributeSchema::anonymous(cards).unwrap(), &rows).unwrap()
}

/// Two trees over five attributes: x1 - x2 - x3 and x4 - x5, each child
/// copying its parent with probability 0.9 (uniform otherwise).
pub fn two_tree_model() -> FittedModel {
    let cards = vec![3usize, 3, 2, 2, 3];
    let schema = AttributeSchema::anonymous(cards.clone()).unwrap();
    let parent = vec![None, Some(0), Some(1), None, Some(3)];
    let structure = DendroidStructure::new(vec![0, 1, 2, 3, 4], parent.clone()).unwrap();
    let tables = (0..5)
        .map(|node| {
            let card = cards[node];
            match parent[node] {
                None => vec![1.0 / card as f64; card],
                Some(p) => {
                    let mut t = Vec::new();
                    for s in 0..cards[p] {
                        let hit = s % card;
                        for q in 0..card {
                            let base = 0.1 / card as f64;
                            t.push(if q == hit { 0.9 + base } else { base });
                        }
                    }
                    t
                }
            }
        })
        .collect();
    FittedModel::from_parts(
        schema.clone(),
        Dictionary::numeric(schema.cards()),
        structure.into(),
        tables,
        FitMeta { n: 0, penalty: None, a: 0.5 },
    )
    .unwrap()
}

pub const TWO_TREE_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (3, 4)];
