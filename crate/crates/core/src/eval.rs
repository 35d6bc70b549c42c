//! Method × problem evaluation grids and the statistics built on them.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analogy::{
    composed_norm, score_columns, select, Columns, Form, Method, MethodSpec, Outcome, Prediction, Resolved, SkipReason,
    SolveError, DEGENERATE_NORM,
};
use crate::dataset::{reverse_set, AnalogySet};
use crate::store::VectorStore;

/// Upper bound on cached similarity columns held at once.
const COLUMN_BUDGET_BYTES: usize = 256 << 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no methods requested")]
    NoMethods,
    #[error("analogy set is empty")]
    EmptySet,
    #[error("embedding store is empty")]
    EmptyStore,
    #[error("method '{0}' is not part of this evaluation")]
    MissingMethod(Method),
    #[error("method '{0}' attempted no problems")]
    NothingAttempted(Method),
    #[error("no problem was attempted")]
    NoAttempted,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub attempted: usize,
    pub correct: usize,
    pub skipped_oov: usize,
    pub skipped_gold_oov: usize,
    pub skipped_degenerate: usize,
}

impl Tally {
    pub fn skipped(&self) -> usize {
        self.skipped_oov + self.skipped_gold_oov + self.skipped_degenerate
    }

    pub fn total(&self) -> usize {
        self.attempted + self.skipped()
    }

    pub fn accuracy(&self) -> Option<f64> {
        accuracy(self.correct, self.attempted)
    }

    fn record(&mut self, outcome: &Outcome) {
        match outcome {
            Outcome::Predicted(p) => {
                self.attempted += 1;
                self.correct += usize::from(p.is_correct());
            }
            Outcome::Skipped(SkipReason::Oov) => self.skipped_oov += 1,
            Outcome::Skipped(SkipReason::GoldOov) => self.skipped_gold_oov += 1,
            Outcome::Skipped(SkipReason::Degenerate) => self.skipped_degenerate += 1,
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.attempted += other.attempted;
        self.correct += other.correct;
        self.skipped_oov += other.skipped_oov;
        self.skipped_gold_oov += other.skipped_gold_oov;
        self.skipped_degenerate += other.skipped_degenerate;
    }
}

/// `correct / attempted`, or `None` when nothing was attempted.
pub fn accuracy(correct: usize, attempted: usize) -> Option<f64> {
    debug_assert!(correct <= attempted);
    (attempted > 0).then(|| correct as f64 / attempted as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// Index into the evaluated set.
    pub problem: usize,
    pub method: Method,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    set: AnalogySet,
    methods: Vec<MethodSpec>,
    categories: Vec<String>,
    /// `tallies[m][c]` for method `m` and category `c`.
    tallies: Vec<Vec<Tally>>,
    /// Problem-major: all methods of problem 0, then problem 1, ...
    records: Vec<Record>,
}

impl EvaluationResult {
    pub fn set(&self) -> &AnalogySet {
        &self.set
    }

    pub fn methods(&self) -> &[MethodSpec] {
        &self.methods
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn outcome(&self, problem: usize, method: Method) -> Option<&Outcome> {
        let m = self.method_index(method)?;
        self.records.get(problem * self.methods.len() + m).map(|r| &r.outcome)
    }

    fn method_index(&self, method: Method) -> Option<usize> {
        self.methods.iter().position(|s| s.method == method)
    }

    pub fn has_method(&self, method: Method) -> bool {
        self.method_index(method).is_some()
    }

    /// Per-category tallies in category order.
    pub fn tallies(&self, method: Method) -> Result<&[Tally], EvalError> {
        let m = self.method_index(method).ok_or(EvalError::MissingMethod(method))?;
        Ok(&self.tallies[m])
    }

    pub fn tally(&self, method: Method, category: &str) -> Result<Tally, EvalError> {
        let tallies = self.tallies(method)?;
        Ok(self
            .categories
            .iter()
            .position(|c| c == category)
            .map(|c| tallies[c])
            .unwrap_or_default())
    }

    pub fn total_tally(&self, method: Method) -> Result<Tally, EvalError> {
        let mut total = Tally::default();
        for t in self.tallies(method)? {
            total.merge(t);
        }
        Ok(total)
    }

    /// Category accuracies in category order.
    pub fn accuracies(&self, method: Method) -> Result<Vec<Option<f64>>, EvalError> {
        Ok(self.tallies(method)?.iter().map(Tally::accuracy).collect())
    }

    /// Total correct over total attempted across categories.
    pub fn overall_accuracy(&self, method: Method) -> Result<f64, EvalError> {
        self.total_tally(method)?
            .accuracy()
            .ok_or(EvalError::NothingAttempted(method))
    }

    /// Unweighted mean of the defined category accuracies.
    pub fn macro_accuracy(&self, method: Method) -> Result<Option<f64>, EvalError> {
        Ok(mean(
            &self.accuracies(method)?.into_iter().flatten().collect::<Vec<_>>(),
        ))
    }

    /// Fails with the first category/method pair whose tallies do not account
    /// for every problem of the category.
    pub fn check_accounting(&self) -> Result<(), String> {
        for (m, spec) in self.methods.iter().enumerate() {
            let mut sum = 0;
            for (c, name) in self.categories.iter().enumerate() {
                let t = self.tallies[m][c];
                let expected = self.set.count(name).unwrap_or(0);
                if t.total() != expected || t.correct > t.attempted {
                    return Err(format!(
                        "{}/{}: tallies cover {} of {} problems",
                        spec.name(),
                        name,
                        t.total(),
                        expected
                    ));
                }
                sum += t.total();
            }
            if sum != self.set.len() {
                return Err(format!(
                    "{}: {} of {} problems tallied",
                    spec.name(),
                    sum,
                    self.set.len()
                ));
            }
        }
        Ok(())
    }
}

pub fn overall_accuracy(result: &EvaluationResult, method: Method) -> Result<f64, EvalError> {
    result.overall_accuracy(method)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn diff(x: Option<f64>, y: Option<f64>) -> Option<f64> {
    Some(x? - y?)
}

/// Accuracy advantage of one method over a baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub method: Method,
    pub baseline: Method,
    /// `(category, method accuracy − baseline accuracy)` in category order.
    pub categories: Vec<(String, Option<f64>)>,
    pub overall: Option<f64>,
}

pub fn baseline_gap(result: &EvaluationResult, method: Method, baseline: Method) -> Result<Gap, EvalError> {
    let acc = result.accuracies(method)?;
    let base = result.accuracies(baseline)?;
    let categories = result
        .categories
        .iter()
        .zip(acc.iter().zip(&base))
        .map(|(c, (&x, &y))| (c.clone(), diff(x, y)))
        .collect();
    let overall = diff(
        result.total_tally(method)?.accuracy(),
        result.total_tally(baseline)?.accuracy(),
    );
    Ok(Gap {
        method,
        baseline,
        categories,
        overall,
    })
}

/// Evaluates every method on every problem.
///
/// Problems whose inputs are unknown are skipped as OOV and problems whose
/// gold answer is unknown as GOLD-OOV; the rest are solved exactly. The
/// result is independent of the size of the rayon pool.
pub fn evaluate(store: &VectorStore, set: &AnalogySet, methods: &[MethodSpec]) -> Result<EvaluationResult, EvalError> {
    if methods.is_empty() {
        return Err(EvalError::NoMethods);
    }
    if set.is_empty() {
        return Err(EvalError::EmptySet);
    }
    if store.is_empty() {
        return Err(EvalError::EmptyStore);
    }
    for spec in methods {
        if let Form::Multiplicative { epsilon } = spec.form {
            if epsilon.is_nan() || epsilon <= 0.0 {
                return Err(SolveError::InvalidEpsilon(epsilon).into());
            }
        }
    }

    let problems = set.problems();
    // (problem, method) → resolved ids or a skip reason
    let plans: Vec<Vec<Result<Resolved, SkipReason>>> = problems
        .iter()
        .map(|p| {
            methods
                .iter()
                .map(|spec| {
                    let r = Resolved::of(store, p, spec.reversed)?;
                    if r.b_star.is_none() {
                        return Err(SkipReason::GoldOov);
                    }
                    Ok(r)
                })
                .collect()
        })
        .collect();

    let column_bytes = store.len().max(1) * std::mem::size_of::<f32>();
    let max_columns = (COLUMN_BUDGET_BYTES / column_bytes).max(3);

    let mut records = Vec::with_capacity(problems.len() * methods.len());
    let mut start = 0;
    while start < problems.len() {
        // grow the chunk while its distinct input words fit the column budget
        let mut words: Vec<usize> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut end = start;
        while end < problems.len() {
            let needed: Vec<usize> = plans[end]
                .iter()
                .flatten()
                .flat_map(|r| r.inputs())
                .filter(|id| !slot.contains_key(id))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            if end > start && words.len() + needed.len() > max_columns {
                break;
            }
            for id in needed {
                slot.insert(id, words.len());
                words.push(id);
            }
            end += 1;
        }

        let rows: Vec<&[f32]> = words.iter().map(|&id| store.row(id)).collect();
        let columns = store.score_many(&rows).map_err(SolveError::from)?;

        let chunk: Vec<Result<Record, SolveError>> = (start..end)
            .into_par_iter()
            .flat_map_iter(|p| (0..methods.len()).map(move |m| (p, m)))
            .map_init(Vec::new, |scratch, (p, m)| {
                let spec = &methods[m];
                let outcome = match plans[p][m] {
                    Err(reason) => Outcome::Skipped(reason),
                    Ok(r) => {
                        let cols = Columns {
                            a: &columns[slot[&r.a]],
                            a_star: &columns[slot[&r.a_star]],
                            b: &columns[slot[&r.b]],
                        };
                        solve_cached(store, spec, r, &cols, scratch)?
                    }
                };
                Ok(Record {
                    problem: p,
                    method: spec.method,
                    outcome,
                })
            })
            .collect();
        for r in chunk {
            records.push(r?);
        }
        start = end;
    }

    let categories = set.category_names();
    let cat_index: HashMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut tallies = vec![vec![Tally::default(); categories.len()]; methods.len()];
    for (i, r) in records.iter().enumerate() {
        let m = i % methods.len();
        let c = cat_index[problems[r.problem].category.as_str()];
        tallies[m][c].record(&r.outcome);
    }

    Ok(EvaluationResult {
        set: set.clone(),
        methods: methods.to_vec(),
        categories,
        tallies,
        records,
    })
}

fn solve_cached(
    store: &VectorStore,
    spec: &MethodSpec,
    r: Resolved,
    cols: &Columns<'_>,
    scratch: &mut Vec<f32>,
) -> Result<Outcome, SolveError> {
    let inputs = r.inputs();
    let norm = match spec.form {
        Form::Additive(w) => {
            let norm = composed_norm(store, inputs, w);
            if norm < DEGENERATE_NORM {
                return Ok(Outcome::Skipped(SkipReason::Degenerate));
            }
            norm
        }
        Form::Multiplicative { .. } => 1.0,
    };
    score_columns(spec.form, cols, norm, scratch);
    let mut excluded: Vec<usize> = Vec::with_capacity(3);
    if spec.exclude_inputs {
        for id in inputs {
            if !excluded.contains(&id) {
                excluded.push(id);
            }
        }
    }
    let sel = select(scratch, &excluded, r.b_star)?;
    Ok(Outcome::Predicted(Prediction {
        predicted: store.word(sel.best).to_string(),
        predicted_id: sel.best,
        predicted_score: f64::from(sel.score),
        gold_rank: sel.gold_rank,
        excluded: excluded.iter().map(|&id| store.word(id).to_string()).collect(),
    }))
}

/// Sample Pearson correlation in double precision; `None` for mismatched or
/// too-short inputs and for zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalRow {
    pub category: String,
    pub forward: Option<f64>,
    pub reversed: Option<f64>,
    /// `reversed − forward`.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReversal {
    pub method: Method,
    pub rows: Vec<ReversalRow>,
    /// Unweighted mean of the defined category deltas.
    pub mean_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalAnalysis {
    pub methods: Vec<MethodReversal>,
    /// Correlation across categories between the add and only-b deltas.
    pub pearson_r: Option<f64>,
    /// Categories entering the correlation.
    pub correlated_categories: usize,
}

/// Compares add and only-b on the set and on its reversal.
pub fn reversal_analysis(store: &VectorStore, set: &AnalogySet, epsilon: f64) -> Result<ReversalAnalysis, EvalError> {
    let methods = [
        MethodSpec::with_epsilon(Method::Add, epsilon),
        MethodSpec::with_epsilon(Method::OnlyB, epsilon),
    ];
    let forward = evaluate(store, set, &methods)?;
    let reversed = evaluate(store, &reverse_set(set), &methods)?;
    reversal_from(&forward, &reversed, &[Method::Add, Method::OnlyB])
}

/// Builds a reversal analysis from two evaluations of the same categories.
/// The correlation is taken between the first two methods.
pub fn reversal_from(
    forward: &EvaluationResult,
    reversed: &EvaluationResult,
    methods: &[Method],
) -> Result<ReversalAnalysis, EvalError> {
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let fwd = forward.accuracies(method)?;
        let rev = reversed.accuracies(method)?;
        let rows: Vec<ReversalRow> = forward
            .categories()
            .iter()
            .zip(fwd.iter().zip(&rev))
            .map(|(c, (&f, &r))| ReversalRow {
                category: c.clone(),
                forward: f,
                reversed: r,
                delta: diff(r, f),
            })
            .collect();
        let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta).collect();
        out.push(MethodReversal {
            method,
            mean_delta: mean(&deltas),
            rows,
        });
    }
    let (pearson_r, correlated_categories) = match out.as_slice() {
        [x, y, ..] => {
            let (dx, dy): (Vec<f64>, Vec<f64>) = x
                .rows
                .iter()
                .zip(&y.rows)
                .filter_map(|(p, q)| Some((p.delta?, q.delta?)))
                .unzip();
            (pearson(&dx, &dy), dx.len())
        }
        _ => (None, 0),
    };
    Ok(ReversalAnalysis {
        methods: out,
        pearson_r,
        correlated_categories,
    })
}

/// Where Vanilla's answer falls relative to the problem's own words.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub attempted: usize,
    pub b: usize,
    pub a_star: usize,
    pub a: usize,
    pub other: usize,
}

impl Degeneracy {
    /// Fractions `(b, a*, a, other)` of attempted problems.
    pub fn fractions(&self) -> Option<[f64; 4]> {
        (self.attempted > 0).then(|| {
            let n = self.attempted as f64;
            [self.b, self.a_star, self.a, self.other].map(|c| c as f64 / n)
        })
    }

    pub fn input_fraction(&self) -> Option<f64> {
        self.fractions().map(|[b, s, a, _]| b + s + a)
    }
}

pub fn vanilla_degeneracy(store: &VectorStore, set: &AnalogySet) -> Result<Degeneracy, EvalError> {
    let result = evaluate(store, set, &[MethodSpec::new(Method::Vanilla)])?;
    degeneracy_from(store, &result)
}

/// Classifies the Vanilla predictions of an existing evaluation. A word that
/// fills several roles counts as the first of b, a*, a.
pub fn degeneracy_from(store: &VectorStore, result: &EvaluationResult) -> Result<Degeneracy, EvalError> {
    if !result.has_method(Method::Vanilla) {
        return Err(EvalError::MissingMethod(Method::Vanilla));
    }
    let mut d = Degeneracy::default();
    for (i, problem) in result.set().problems().iter().enumerate() {
        let Some(Outcome::Predicted(p)) = result.outcome(i, Method::Vanilla) else {
            continue;
        };
        d.attempted += 1;
        let is = |w: &str| store.lookup(w) == Some(p.predicted_id);
        if is(&problem.b) {
            d.b += 1;
        } else if is(&problem.a_star) {
            d.a_star += 1;
        } else if is(&problem.a) {
            d.a += 1;
        } else {
            d.other += 1;
        }
    }
    if d.attempted == 0 {
        return Err(EvalError::NoAttempted);
    }
    Ok(d)
}
