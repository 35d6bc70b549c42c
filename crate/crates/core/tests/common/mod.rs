#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use analogy_audit::dataset::AnalogyProblem;
use analogy_audit::{Method, VectorStore};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub const FIXTURE_A: &str = "6 3
debug 1 0 0
debugging 0.96 0.28 0
scream 0 1 0
screaming 0.28 0.96 0
dog 0 0 1
cat 0.6 0 0.8
";

pub const FIXTURE_A_QUESTIONS: &str = ": gram-progressive
debug debugging scream screaming
";

pub fn canonical_dataset() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/questions-words.txt")
}

pub fn fixture_a() -> VectorStore {
    VectorStore::from_rows(
        3,
        true,
        [
            ("debug", vec![1.0, 0.0, 0.0]),
            ("debugging", vec![0.96, 0.28, 0.0]),
            ("scream", vec![0.0, 1.0, 0.0]),
            ("screaming", vec![0.28, 0.96, 0.0]),
            ("dog", vec![0.0, 0.0, 1.0]),
            ("cat", vec![0.6, 0.0, 0.8]),
        ],
    )
    .unwrap()
}

/// Random Gaussian rows, returned raw and as a store.
pub fn random_space(n: usize, dim: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>, VectorStore) {
    let mut rng = StdRng::seed_from_u64(seed);
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let store = VectorStore::from_rows(
        dim,
        false,
        words
            .iter()
            .zip(&raw)
            .map(|(w, r)| (w.as_str(), r.iter().map(|&x| x as f32).collect())),
    )
    .unwrap();
    (words, raw, store)
}

/// Four distinct random words per problem.
pub fn random_problems(words: &[String], count: usize, seed: u64) -> Vec<AnalogyProblem> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let q: Vec<&String> = words.choose_multiple(&mut rng, 4).collect();
            AnalogyProblem::new(
                q[0].clone(),
                q[1].clone(),
                q[2].clone(),
                q[3].clone(),
                format!("c{}", i % 5),
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Skip(&'static str),
    Predicted { id: usize, correct: bool },
}

/// Brute-force double-precision reference solver.
pub struct Oracle {
    pub words: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl Oracle {
    pub fn new(words: &[String], raw: &[Vec<f64>]) -> Self {
        let rows = raw
            .iter()
            .map(|r| {
                let n = dot(r, r).sqrt();
                r.iter().map(|x| x / n).collect()
            })
            .collect::<Vec<Vec<f64>>>();
        let norms = rows.iter().map(|r| dot(r, r).sqrt()).collect();
        Oracle {
            words: words.to_vec(),
            rows,
            norms,
            index: words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect(),
        }
    }

    /// Cosine of every row with `y`.
    pub fn cosines(&self, y: &[f64]) -> Vec<f64> {
        let ny = dot(y, y).sqrt();
        self.rows
            .iter()
            .zip(&self.norms)
            .map(|(x, nx)| dot(x, y) / (nx * ny))
            .collect()
    }

    pub fn index(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn solve(&self, p: &AnalogyProblem, method: Method) -> OracleOutcome {
        let reversed = matches!(method, Method::ReverseAdd | Method::ReverseOnlyB);
        let (a, s, b, g) = if reversed {
            (&p.a_star, &p.a, &p.b_star, &p.b)
        } else {
            (&p.a, &p.a_star, &p.b, &p.b_star)
        };
        let (Some(a), Some(s), Some(b)) = (self.index(a), self.index(s), self.index(b)) else {
            return OracleOutcome::Skip("OOV");
        };
        let gold = self.index(g);
        let (ra, rs, rb) = (&self.rows[a], &self.rows[s], &self.rows[b]);
        let weights = match method {
            Method::Vanilla | Method::Add | Method::ReverseAdd => Some((-1.0, 1.0, 1.0)),
            Method::OnlyB | Method::ReverseOnlyB => Some((0.0, 0.0, 1.0)),
            Method::IgnoreA => Some((0.0, 1.0, 1.0)),
            Method::AddOpposite => Some((1.0, -1.0, 1.0)),
            Method::Multiply => None,
        };
        let scores: Vec<f64> = match weights {
            Some((wa, ws, wb)) => {
                let q: Vec<f64> = (0..ra.len()).map(|i| wa * ra[i] + ws * rs[i] + wb * rb[i]).collect();
                if dot(&q, &q).sqrt() < 1e-6 {
                    return OracleOutcome::Skip("DEGENERATE");
                }
                self.cosines(&q)
            }
            None => {
                let sh = |c: f64| (c + 1.0) / 2.0;
                let (ca, cs, cb) = (self.cosines(ra), self.cosines(rs), self.cosines(rb));
                (0..self.rows.len())
                    .map(|x| sh(cs[x]) * sh(cb[x]) / (sh(ca[x]) + 0.001))
                    .collect()
            }
        };
        let excluded: Vec<usize> = if method == Method::Vanilla {
            vec![]
        } else {
            vec![a, s, b]
        };
        let candidates = (0..scores.len()).filter(|i| !excluded.contains(i));
        let max = candidates.clone().map(|i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
        let id = candidates.clone().find(|&i| scores[i] >= max - 1e-5).unwrap();
        OracleOutcome::Predicted {
            id,
            correct: Some(id) == gold,
        }
    }
}
