//! Analogy solvers: exact argmax searches over a [`VectorStore`].
//!
//! Every solver scores all rows against the three input words and returns
//! the best candidate outside an exclusion set. Additive methods rank by the
//! cosine between each row and `wa·a + wa*·a* + wb·b`; because rows are unit
//! vectors this equals the weighted sum of the rows' cosines with each input
//! divided by the norm of the composed query, which is how it is computed.
//! Multiplicative scoring combines the same three cosine columns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::AnalogyProblem;
use crate::store::{QueryError, VectorStore};

/// Scores within this distance of the best score are ties.
pub const TIE_TOLERANCE: f32 = 1e-5;
/// Default denominator offset for the multiplicative objective.
pub const DEFAULT_EPSILON: f64 = 0.001;
/// Composed queries shorter than this are treated as the zero vector.
pub const DEGENERATE_NORM: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vanilla,
    Add,
    OnlyB,
    IgnoreA,
    AddOpposite,
    Multiply,
    ReverseAdd,
    ReverseOnlyB,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Vanilla,
        Method::Add,
        Method::OnlyB,
        Method::IgnoreA,
        Method::AddOpposite,
        Method::Multiply,
        Method::ReverseAdd,
        Method::ReverseOnlyB,
    ];

    pub const DEFAULT: [Method; 3] = [Method::Add, Method::OnlyB, Method::IgnoreA];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Add => "add",
            Method::OnlyB => "only-b",
            Method::IgnoreA => "ignore-a",
            Method::AddOpposite => "add-opposite",
            Method::Multiply => "multiply",
            Method::ReverseAdd => "reverse-add",
            Method::ReverseOnlyB => "reverse-only-b",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::as_str).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown method '{name}' (valid: {valid})")]
pub struct UnknownMethod {
    pub name: String,
    pub valid: String,
}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod {
                name: s.to_string(),
                valid: Method::valid_names(),
            })
    }
}

/// Weights on `a`, `a*` and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub a: f32,
    pub a_star: f32,
    pub b: f32,
}

impl Weights {
    pub const fn new(a: f32, a_star: f32, b: f32) -> Self {
        Weights { a, a_star, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.a_star == 0.0 && self.b == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Form {
    Additive(Weights),
    /// `s(cos(x,a*))·s(cos(x,b)) / (s(cos(x,a)) + epsilon)` with `s(c) = (c+1)/2`.
    Multiplicative {
        epsilon: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub form: Form,
    pub exclude_inputs: bool,
    /// Solve the reversed problem `a* : a :: b* : ?` instead.
    pub reversed: bool,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self::with_epsilon(method, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(method: Method, epsilon: f64) -> Self {
        let offset = Form::Additive(Weights::new(-1.0, 1.0, 1.0));
        let (form, exclude_inputs, reversed) = match method {
            Method::Vanilla => (offset, false, false),
            Method::Add => (offset, true, false),
            Method::OnlyB => (Form::Additive(Weights::new(0.0, 0.0, 1.0)), true, false),
            Method::IgnoreA => (Form::Additive(Weights::new(0.0, 1.0, 1.0)), true, false),
            Method::AddOpposite => (Form::Additive(Weights::new(1.0, -1.0, 1.0)), true, false),
            Method::Multiply => (Form::Multiplicative { epsilon }, true, false),
            Method::ReverseAdd => (offset, true, true),
            Method::ReverseOnlyB => (Form::Additive(Weights::new(0.0, 0.0, 1.0)), true, true),
        };
        MethodSpec {
            method,
            form,
            exclude_inputs,
            reversed,
        }
    }

    pub fn name(&self) -> &'static str {
        self.method.as_str()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: String,
    pub predicted_id: usize,
    /// Cosine with the composed query (additive) or the multiplicative score.
    pub predicted_score: f64,
    /// 1-based rank of the gold answer among the candidates; absent when the
    /// gold word is unknown or excluded.
    pub gold_rank: Option<usize>,
    pub excluded: Vec<String>,
}

impl Prediction {
    pub fn is_correct(&self) -> bool {
        self.gold_rank == Some(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    /// One of `a`, `a*`, `b` is not in the store.
    #[serde(rename = "OOV")]
    Oov,
    /// The gold answer is not in the store.
    #[serde(rename = "GOLD-OOV")]
    GoldOov,
    /// The composed additive query is the zero vector.
    #[serde(rename = "DEGENERATE")]
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Predicted(Prediction),
    Skipped(SkipReason),
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("row id {0} is out of range")]
    InvalidRow(usize),
    #[error("all three weights are zero")]
    ZeroWeights,
    #[error("composed query has zero norm")]
    DegenerateQuery,
    #[error("every word in the vocabulary is excluded")]
    AllExcluded,
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Row ids of an analogy's words in a store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolved {
    pub a: usize,
    pub a_star: usize,
    pub b: usize,
    pub b_star: Option<usize>,
}

impl Resolved {
    /// Resolves `problem` (reversed first when asked). `Err` carries the
    /// skip reason for an unknown input word.
    pub fn of(store: &VectorStore, problem: &AnalogyProblem, reversed: bool) -> Result<Self, SkipReason> {
        let (a, a_star, b, b_star) = if reversed {
            (&problem.a_star, &problem.a, &problem.b_star, &problem.b)
        } else {
            (&problem.a, &problem.a_star, &problem.b, &problem.b_star)
        };
        match (store.lookup(a), store.lookup(a_star), store.lookup(b)) {
            (Some(a), Some(a_star), Some(b)) => Ok(Resolved {
                a,
                a_star,
                b,
                b_star: store.lookup(b_star),
            }),
            _ => Err(SkipReason::Oov),
        }
    }

    pub fn inputs(&self) -> [usize; 3] {
        [self.a, self.a_star, self.b]
    }
}

/// Cosine columns of every row against `a`, `a*` and `b`.
pub(crate) struct Columns<'a> {
    pub a: &'a [f32],
    pub a_star: &'a [f32],
    pub b: &'a [f32],
}

/// Norm of `wa·a + wa*·a* + wb·b`, accumulated in double precision.
pub fn composed_norm(store: &VectorStore, ids: [usize; 3], w: Weights) -> f64 {
    composed_query(store, ids, w).iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn composed_query(store: &VectorStore, ids: [usize; 3], w: Weights) -> Vec<f64> {
    let (ra, rs, rb) = (store.row(ids[0]), store.row(ids[1]), store.row(ids[2]));
    (0..store.dim())
        .map(|k| {
            f64::from(w.a) * f64::from(ra[k])
                + f64::from(w.a_star) * f64::from(rs[k])
                + f64::from(w.b) * f64::from(rb[k])
        })
        .collect()
}

/// Fills `out` with one score per row.
pub(crate) fn score_columns(form: Form, cols: &Columns<'_>, query_norm: f64, out: &mut Vec<f32>) {
    out.clear();
    match form {
        Form::Additive(w) => {
            let inv = (1.0 / query_norm) as f32;
            let iter = cols.a.iter().zip(cols.a_star).zip(cols.b);
            out.extend(iter.map(|((&ca, &cs), &cb)| {
                let mut s = 0.0f32;
                if w.a != 0.0 {
                    s += w.a * ca;
                }
                if w.a_star != 0.0 {
                    s += w.a_star * cs;
                }
                if w.b != 0.0 {
                    s += w.b * cb;
                }
                s * inv
            }));
        }
        Form::Multiplicative { epsilon } => {
            let eps = epsilon as f32;
            let shift = |c: f32| (c + 1.0) * 0.5;
            let iter = cols.a.iter().zip(cols.a_star).zip(cols.b);
            out.extend(iter.map(|((&ca, &cs), &cb)| shift(cs) * shift(cb) / (shift(ca) + eps)));
        }
    }
}

/// The winning row and where the gold answer landed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub best: usize,
    pub score: f32,
    pub gold_rank: Option<usize>,
}

/// Picks the best non-excluded row: the lowest row id among rows scoring
/// within [`TIE_TOLERANCE`] of the maximum.
///
/// The gold rank orders candidates by score, then by row id, except that the
/// selected row always ranks first; so the rank is 1 exactly when the gold
/// word is the selection. Excluded rows are overwritten in `scores`.
pub fn select(scores: &mut [f32], excluded: &[usize], gold: Option<usize>) -> Result<Selection, SolveError> {
    for &e in excluded {
        scores[e] = f32::NEG_INFINITY;
    }
    let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if max == f32::NEG_INFINITY {
        return Err(SolveError::AllExcluded);
    }
    let floor = max - TIE_TOLERANCE;
    let best = scores.iter().position(|&s| s >= floor).expect("max is attained");
    let gold_rank = gold.filter(|g| !excluded.contains(g)).map(|g| {
        if g == best {
            return 1;
        }
        let sg = scores[g];
        let ahead = |i: usize, s: f32| s > sg || (s == sg && i < g);
        let strictly_ahead = scores
            .iter()
            .enumerate()
            .filter(|&(i, &s)| i != g && ahead(i, s))
            .count();
        let best_counted = ahead(best, scores[best]);
        strictly_ahead + usize::from(!best_counted) + 1
    });
    Ok(Selection {
        best,
        score: scores[best],
        gold_rank,
    })
}

fn check_rows(store: &VectorStore, ids: &[usize]) -> Result<(), SolveError> {
    match ids.iter().find(|&&id| id >= store.len()) {
        Some(&id) => Err(SolveError::InvalidRow(id)),
        None => Ok(()),
    }
}

fn input_columns(store: &VectorStore, ids: [usize; 3]) -> Result<Vec<Vec<f32>>, SolveError> {
    let rows: Vec<&[f32]> = ids.iter().map(|&id| store.row(id)).collect();
    Ok(store.score_many(&rows)?)
}

fn prediction(store: &VectorStore, sel: Selection, excluded: &[usize]) -> Prediction {
    Prediction {
        predicted: store.word(sel.best).to_string(),
        predicted_id: sel.best,
        predicted_score: f64::from(sel.score),
        gold_rank: sel.gold_rank,
        excluded: excluded.iter().map(|&id| store.word(id).to_string()).collect(),
    }
}

fn dedup(ids: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(ids.len());
    for &id in ids {
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

/// Best candidate for the composed query `wa·a + wa*·a* + wb·b`.
pub fn solve_additive(
    store: &VectorStore,
    ids: [usize; 3],
    weights: Weights,
    exclusions: &[usize],
    gold: Option<usize>,
) -> Result<Prediction, SolveError> {
    check_rows(store, &ids)?;
    check_rows(store, exclusions)?;
    if weights.is_zero() {
        return Err(SolveError::ZeroWeights);
    }
    let norm = composed_norm(store, ids, weights);
    if norm < DEGENERATE_NORM {
        return Err(SolveError::DegenerateQuery);
    }
    let cols = input_columns(store, ids)?;
    let cols = Columns {
        a: &cols[0],
        a_star: &cols[1],
        b: &cols[2],
    };
    let mut scores = Vec::with_capacity(store.len());
    score_columns(Form::Additive(weights), &cols, norm, &mut scores);
    let excluded = dedup(exclusions);
    let sel = select(&mut scores, &excluded, gold)?;
    Ok(prediction(store, sel, &excluded))
}

/// Best candidate under the shifted-cosine multiplicative objective.
pub fn solve_multiplicative(
    store: &VectorStore,
    ids: [usize; 3],
    exclusions: &[usize],
    epsilon: f64,
    gold: Option<usize>,
) -> Result<Prediction, SolveError> {
    check_rows(store, &ids)?;
    check_rows(store, exclusions)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(SolveError::InvalidEpsilon(epsilon));
    }
    let cols = input_columns(store, ids)?;
    let cols = Columns {
        a: &cols[0],
        a_star: &cols[1],
        b: &cols[2],
    };
    let mut scores = Vec::with_capacity(store.len());
    score_columns(Form::Multiplicative { epsilon }, &cols, 1.0, &mut scores);
    let excluded = dedup(exclusions);
    let sel = select(&mut scores, &excluded, gold)?;
    Ok(prediction(store, sel, &excluded))
}

/// Solves one problem with one method. Unknown input words and degenerate
/// queries become skip outcomes; an unknown gold word leaves `gold_rank`
/// empty.
pub fn solve(store: &VectorStore, problem: &AnalogyProblem, method: &MethodSpec) -> Result<Outcome, SolveError> {
    let resolved = match Resolved::of(store, problem, method.reversed) {
        Ok(r) => r,
        Err(reason) => return Ok(Outcome::Skipped(reason)),
    };
    let exclusions: &[usize] = if method.exclude_inputs { &resolved.inputs() } else { &[] };
    let result = match method.form {
        Form::Additive(w) => solve_additive(store, resolved.inputs(), w, exclusions, resolved.b_star),
        Form::Multiplicative { epsilon } => {
            solve_multiplicative(store, resolved.inputs(), exclusions, epsilon, resolved.b_star)
        }
    };
    match result {
        Ok(p) => Ok(Outcome::Predicted(p)),
        Err(SolveError::DegenerateQuery) => Ok(Outcome::Skipped(SkipReason::Degenerate)),
        Err(e) => Err(e),
    }
}

/// Top-`k` neighbours of a signed sum of words, by cosine, best first.
/// A query consisting of a single positive word leaves that word out.
pub fn nearest(store: &VectorStore, terms: &[(usize, f32)], k: usize) -> Result<Vec<(usize, f64)>, SolveError> {
    let ids: Vec<usize> = terms.iter().map(|&(id, _)| id).collect();
    check_rows(store, &ids)?;
    let mut query = vec![0.0f64; store.dim()];
    for &(id, w) in terms {
        for (q, &v) in query.iter_mut().zip(store.row(id)) {
            *q += f64::from(w) * f64::from(v);
        }
    }
    let norm = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return Err(SolveError::DegenerateQuery);
    }
    let query: Vec<f32> = query.iter().map(|&v| v as f32).collect();
    let scores = store.score_all(&query)?;
    let skip = match terms {
        [(id, w)] if *w > 0.0 => Some(*id),
        _ => None,
    };
    let mut order: Vec<usize> = (0..store.len()).filter(|&i| Some(i) != skip).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| (i, f64::from(scores[i]) / norm))
        .collect())
}
