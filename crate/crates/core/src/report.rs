//! Report assembly and serialization (JSON, CSV, markdown).
//!
//! JSON documents carry full-precision numbers plus run metadata and parse
//! back into the same values. CSV and markdown round to four decimals
//! (ties to even) and leave undefined accuracies empty / `n/a`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analogy::{Method, MethodSpec, TIE_TOLERANCE};
use crate::dataset::{reporting_order, AnalogySet, CategoryCount};
use crate::eval::{Degeneracy, EvaluationResult, ReversalAnalysis, Tally};
use crate::store::{LoadSummary, VectorStore};

pub const TOOL: &str = "analogy-audit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write report: {0}")]
    Io(#[from] io::Error),
    #[error("cannot write {}: {source}", path.display())]
    Persist {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("space '{label}' lacks method '{method}'")]
    MissingMethod { label: String, method: Method },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(format!(
                "unknown output format '{other}' (expected json, csv or markdown)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub accuracy: Option<f64>,
    #[serde(flatten)]
    pub tally: Tally,
}

impl From<Tally> for Cell {
    fn from(tally: Tally) -> Self {
        Cell {
            accuracy: tally.accuracy(),
            tally,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub method: Method,
    /// One cell per grid category.
    pub cells: Vec<Cell>,
    /// Micro average over all categories.
    pub overall: Cell,
    /// Unweighted mean of the defined category accuracies.
    pub macro_accuracy: Option<f64>,
}

/// Methods × categories accuracy grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub categories: Vec<String>,
    pub rows: Vec<HeatmapRow>,
}

/// Grid in the evaluation's method order, standard categories first.
pub fn build_heatmap(result: &EvaluationResult) -> HeatmapGrid {
    let categories = reporting_order(result.categories());
    let rows = result
        .methods()
        .iter()
        .map(|spec| {
            let method = spec.method;
            let cells = categories
                .iter()
                .map(|c| Cell::from(result.tally(method, c).expect("method is evaluated")))
                .collect();
            HeatmapRow {
                method,
                cells,
                overall: Cell::from(result.total_tally(method).expect("method is evaluated")),
                macro_accuracy: result.macro_accuracy(method).expect("method is evaluated"),
            }
        })
        .collect();
    HeatmapGrid { categories, rows }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryComparison {
    pub category: String,
    pub add: Option<f64>,
    pub ignore_a: Option<f64>,
    pub only_b: Option<f64>,
    pub add_minus_ignore_a: Option<f64>,
    pub add_minus_only_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceRow {
    pub label: String,
    pub add: Option<f64>,
    pub ignore_a: Option<f64>,
    pub only_b: Option<f64>,
    pub add_minus_ignore_a: Option<f64>,
    pub add_minus_only_b: Option<f64>,
    pub add_macro: Option<f64>,
    pub categories: Vec<CategoryComparison>,
}

/// Overall add accuracy and its margin over the two baselines, per space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceComparison {
    pub categories: Vec<String>,
    pub spaces: Vec<SpaceRow>,
}

fn gap(x: Option<f64>, y: Option<f64>) -> Option<f64> {
    Some(x? - y?)
}

pub fn build_space_comparison(results: &[(String, &EvaluationResult)]) -> Result<SpaceComparison, ReportError> {
    let mut names: Vec<String> = Vec::new();
    for (_, r) in results {
        for c in r.categories() {
            if !names.contains(c) {
                names.push(c.clone());
            }
        }
    }
    let categories = reporting_order(&names);

    let mut spaces = Vec::with_capacity(results.len());
    for (label, result) in results {
        let need = |method: Method| -> Result<(), ReportError> {
            if result.has_method(method) {
                Ok(())
            } else {
                Err(ReportError::MissingMethod {
                    label: label.clone(),
                    method,
                })
            }
        };
        for m in [Method::Add, Method::IgnoreA, Method::OnlyB] {
            need(m)?;
        }
        let overall = |m: Method| result.total_tally(m).ok().and_then(|t| t.accuracy());
        let per_cat = |m: Method, c: &str| result.tally(m, c).ok().and_then(|t| t.accuracy());
        let (add, ignore_a, only_b) = (overall(Method::Add), overall(Method::IgnoreA), overall(Method::OnlyB));
        let rows = categories
            .iter()
            .map(|c| {
                let (add, ignore_a, only_b) = (
                    per_cat(Method::Add, c),
                    per_cat(Method::IgnoreA, c),
                    per_cat(Method::OnlyB, c),
                );
                CategoryComparison {
                    category: c.clone(),
                    add,
                    ignore_a,
                    only_b,
                    add_minus_ignore_a: gap(add, ignore_a),
                    add_minus_only_b: gap(add, only_b),
                }
            })
            .collect();
        spaces.push(SpaceRow {
            label: label.clone(),
            add,
            ignore_a,
            only_b,
            add_minus_ignore_a: gap(add, ignore_a),
            add_minus_only_b: gap(add, only_b),
            add_macro: result.macro_accuracy(Method::Add).ok().flatten(),
            categories: rows,
        });
    }
    Ok(SpaceComparison { categories, spaces })
}

/// Combined output of one `eval` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub heatmap: HeatmapGrid,
    pub reversal: Option<ReversalAnalysis>,
    pub vanilla_degeneracy: Option<Degeneracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreInfo {
    pub label: String,
    pub source: Option<PathBuf>,
    pub format: Option<String>,
    pub case_fold: bool,
    pub max_vocab: Option<usize>,
    pub vocab_size: usize,
    pub dim: usize,
    pub load: LoadSummary,
}

impl StoreInfo {
    pub fn new(label: impl Into<String>, store: &VectorStore) -> Self {
        let meta = store.meta();
        StoreInfo {
            label: label.into(),
            source: meta.source.clone(),
            format: meta.format.map(|f| f.to_string()),
            case_fold: meta.case_fold,
            max_vocab: meta.max_vocab,
            vocab_size: store.len(),
            dim: store.dim(),
            load: meta.summary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: Option<PathBuf>,
    pub problems: usize,
    pub categories: Vec<CategoryCount>,
}

impl DatasetInfo {
    pub fn new(set: &AnalogySet) -> Self {
        DatasetInfo {
            source: set.source().map(Path::to_path_buf),
            problems: set.len(),
            categories: set.categories().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// Seconds since the epoch; the only field that varies between
    /// identical runs.
    pub generated_at: Option<u64>,
    pub stores: Vec<StoreInfo>,
    pub dataset: Option<DatasetInfo>,
    pub methods: Vec<MethodSpec>,
    pub tie_tolerance: f32,
}

impl RunMetadata {
    pub fn new(stores: Vec<StoreInfo>, dataset: Option<DatasetInfo>, methods: Vec<MethodSpec>) -> Self {
        RunMetadata {
            generated_at: None,
            stores,
            dataset,
            methods,
            tie_tolerance: TIE_TOLERANCE,
        }
    }

    /// Stamps the current time, or `SOURCE_DATE_EPOCH` when set.
    pub fn stamped(mut self) -> Self {
        let from_env = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok());
        self.generated_at = from_env.or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        });
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<R> {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub metadata: RunMetadata,
    pub report: R,
}

/// A report that renders as a CSV table and as markdown.
pub trait Tabular: Serialize {
    const KIND: &'static str;

    fn csv_header(&self) -> &'static [&'static str];
    fn csv_rows(&self) -> Vec<Vec<String>>;
    fn markdown(&self) -> String;
}

/// Four decimals, ties to even; empty for undefined values.
pub fn fmt4(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn md4(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    out.push_str(&line(&vec!["---".to_string(); header.len()]));
    for r in rows {
        out.push_str(&line(r));
    }
}

pub fn emit<R: Tabular, W: Write>(
    report: &R,
    metadata: &RunMetadata,
    format: OutputFormat,
    mut sink: W,
) -> Result<(), ReportError> {
    match format {
        OutputFormat::Json => {
            let doc = Document {
                tool: TOOL.into(),
                version: VERSION.into(),
                kind: R::KIND.into(),
                metadata: metadata.clone(),
                report,
            };
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            sink.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut sink);
            w.write_record(report.csv_header())?;
            for row in report.csv_rows() {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        OutputFormat::Markdown => sink.write_all(report.markdown().as_bytes())?,
    }
    sink.flush()?;
    Ok(())
}

pub fn emit_to_vec<R: Tabular>(
    report: &R,
    metadata: &RunMetadata,
    format: OutputFormat,
) -> Result<Vec<u8>, ReportError> {
    let mut out = Vec::new();
    emit(report, metadata, format, &mut out)?;
    Ok(out)
}

pub fn parse_json<R: DeserializeOwned>(bytes: &[u8]) -> Result<Document<R>, ReportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Writes `bytes` through a sibling temp file and a rename, so readers
/// never observe a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let persist_err = |source| ReportError::Persist {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(persist_err)?;
    tmp.write_all(bytes).map_err(persist_err)?;
    tmp.as_file().sync_all().map_err(persist_err)?;
    tmp.persist(path).map_err(|e| persist_err(e.error))?;
    Ok(())
}

pub fn read_report<R: DeserializeOwned>(path: &Path) -> Result<Document<R>, ReportError> {
    parse_json(&fs::read(path)?)
}

const HEATMAP_COLUMNS: [&str; 7] = [
    "method",
    "category",
    "accuracy",
    "attempted",
    "skipped_oov",
    "skipped_gold_oov",
    "skipped_degenerate",
];

impl Tabular for HeatmapGrid {
    const KIND: &'static str = "heatmap";

    fn csv_header(&self) -> &'static [&'static str] {
        &HEATMAP_COLUMNS
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for row in &self.rows {
            for (category, cell) in self.categories.iter().zip(&row.cells) {
                rows.push(vec![
                    row.method.to_string(),
                    category.clone(),
                    fmt4(cell.accuracy),
                    cell.tally.attempted.to_string(),
                    cell.tally.skipped_oov.to_string(),
                    cell.tally.skipped_gold_oov.to_string(),
                    cell.tally.skipped_degenerate.to_string(),
                ]);
            }
        }
        rows
    }

    fn markdown(&self) -> String {
        let mut header = vec!["method".to_string()];
        header.extend(self.categories.iter().cloned());
        header.extend(["overall".to_string(), "macro".to_string()]);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.method.to_string()];
                cells.extend(r.cells.iter().map(|c| md4(c.accuracy)));
                cells.push(md4(r.overall.accuracy));
                cells.push(md4(r.macro_accuracy));
                cells
            })
            .collect();
        let mut out = String::from("## Accuracy by category\n\n");
        md_table(&mut out, &header, &rows);
        out.push_str("\n| method | attempted | skipped_oov | skipped_gold_oov | skipped_degenerate |\n");
        out.push_str("| --- | --- | --- | --- | --- |\n");
        for r in &self.rows {
            let t = r.overall.tally;
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                r.method, t.attempted, t.skipped_oov, t.skipped_gold_oov, t.skipped_degenerate
            );
        }
        out
    }
}

impl Tabular for SpaceComparison {
    const KIND: &'static str = "space-comparison";

    fn csv_header(&self) -> &'static [&'static str] {
        &[
            "space",
            "category",
            "add",
            "ignore_a",
            "only_b",
            "add_minus_ignore_a",
            "add_minus_only_b",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for s in &self.spaces {
            rows.push(vec![
                s.label.clone(),
                "(overall)".into(),
                fmt4(s.add),
                fmt4(s.ignore_a),
                fmt4(s.only_b),
                fmt4(s.add_minus_ignore_a),
                fmt4(s.add_minus_only_b),
            ]);
            for c in &s.categories {
                rows.push(vec![
                    s.label.clone(),
                    c.category.clone(),
                    fmt4(c.add),
                    fmt4(c.ignore_a),
                    fmt4(c.only_b),
                    fmt4(c.add_minus_ignore_a),
                    fmt4(c.add_minus_only_b),
                ]);
            }
        }
        rows
    }

    fn markdown(&self) -> String {
        let mut out = String::from("## Overall\n\n");
        let header: Vec<String> = ["space", "add", "add - ignore-a", "add - only-b"]
            .map(String::from)
            .to_vec();
        let rows: Vec<Vec<String>> = self
            .spaces
            .iter()
            .map(|s| {
                vec![
                    s.label.clone(),
                    md4(s.add),
                    md4(s.add_minus_ignore_a),
                    md4(s.add_minus_only_b),
                ]
            })
            .collect();
        md_table(&mut out, &header, &rows);
        for (title, pick) in [
            (
                "add",
                (|c: &CategoryComparison| c.add) as fn(&CategoryComparison) -> Option<f64>,
            ),
            ("add - ignore-a", |c| c.add_minus_ignore_a),
            ("add - only-b", |c| c.add_minus_only_b),
        ] {
            let _ = write!(out, "\n## {title} by category\n\n");
            let mut header = vec!["category".to_string()];
            header.extend(self.spaces.iter().map(|s| s.label.clone()));
            let rows: Vec<Vec<String>> = self
                .categories
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mut r = vec![c.clone()];
                    r.extend(self.spaces.iter().map(|s| md4(pick(&s.categories[i]))));
                    r
                })
                .collect();
            md_table(&mut out, &header, &rows);
        }
        out
    }
}

impl Tabular for ReversalAnalysis {
    const KIND: &'static str = "reversal";

    fn csv_header(&self) -> &'static [&'static str] {
        &["method", "category", "forward", "reversed", "delta"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for m in &self.methods {
            for r in &m.rows {
                rows.push(vec![
                    m.method.to_string(),
                    r.category.clone(),
                    fmt4(r.forward),
                    fmt4(r.reversed),
                    fmt4(r.delta),
                ]);
            }
            rows.push(vec![
                m.method.to_string(),
                "(mean)".into(),
                String::new(),
                String::new(),
                fmt4(m.mean_delta),
            ]);
        }
        rows
    }

    fn markdown(&self) -> String {
        let mut out = String::from("## Reversal\n\n");
        let mut header = vec!["category".to_string()];
        for m in &self.methods {
            header.extend([
                format!("{} forward", m.method),
                format!("{} reversed", m.method),
                format!("{} delta", m.method),
            ]);
        }
        let n = self.methods.first().map_or(0, |m| m.rows.len());
        let mut rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                let mut r = vec![self.methods[0].rows[i].category.clone()];
                for m in &self.methods {
                    let row = &m.rows[i];
                    r.extend([md4(row.forward), md4(row.reversed), md4(row.delta)]);
                }
                r
            })
            .collect();
        let mut mean = vec!["(mean)".to_string()];
        for m in &self.methods {
            mean.extend([String::new(), String::new(), md4(m.mean_delta)]);
        }
        rows.push(mean);
        md_table(&mut out, &header, &rows);
        let _ = writeln!(
            out,
            "\nPearson r between delta(add) and delta(only-b): {} (categories: {})",
            md4(self.pearson_r),
            self.correlated_categories
        );
        out
    }
}

impl Tabular for Degeneracy {
    const KIND: &'static str = "vanilla-degeneracy";

    fn csv_header(&self) -> &'static [&'static str] {
        &["prediction", "count", "fraction"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let fr = self.fractions();
        [("b", self.b), ("a*", self.a_star), ("a", self.a), ("other", self.other)]
            .iter()
            .enumerate()
            .map(|(i, (name, count))| vec![name.to_string(), count.to_string(), fmt4(fr.map(|f| f[i]))])
            .collect()
    }

    fn markdown(&self) -> String {
        let mut out = format!("## Vanilla predictions ({} attempted)\n\n", self.attempted);
        let header = ["prediction", "count", "fraction"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = self
            .csv_rows()
            .into_iter()
            .map(|mut r| {
                if r[2].is_empty() {
                    r[2] = "n/a".into();
                }
                r
            })
            .collect();
        md_table(&mut out, &header, &rows);
        out
    }
}

impl Tabular for EvalReport {
    const KIND: &'static str = "eval";

    fn csv_header(&self) -> &'static [&'static str] {
        self.heatmap.csv_header()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.heatmap.csv_rows()
    }

    fn markdown(&self) -> String {
        let mut out = self.heatmap.markdown();
        if let Some(r) = &self.reversal {
            out.push('\n');
            out.push_str(&r.markdown());
        }
        if let Some(d) = &self.vanilla_degeneracy {
            out.push('\n');
            out.push_str(&d.markdown());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analogy::MethodSpec;
    use crate::dataset::AnalogyProblem;
    use crate::eval::evaluate;

    fn store() -> VectorStore {
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

    fn result(methods: &[Method]) -> EvaluationResult {
        let set = AnalogySet::from_problems(vec![
            AnalogyProblem::new("debug", "debugging", "scream", "screaming", "gram5-present-participle"),
            AnalogyProblem::new("scream", "screaming", "debug", "debugging", "gram5-present-participle"),
            AnalogyProblem::new("dog", "cat", "debug", "unicorn", "family"),
            AnalogyProblem::new("dog", "cat", "scream", "debug", "capital-world"),
        ]);
        let specs: Vec<MethodSpec> = methods.iter().map(|&m| MethodSpec::new(m)).collect();
        evaluate(&store(), &set, &specs).unwrap()
    }

    #[test]
    fn heatmap_shape_and_null_cells() {
        let grid = build_heatmap(&result(&[Method::Add, Method::OnlyB]));
        assert_eq!(grid.rows.len(), 2);
        assert_eq!(grid.categories, ["capital-world", "family", "gram5-present-participle"]);
        for row in &grid.rows {
            assert_eq!(row.cells.len(), 3);
            // family only has a gold-OOV problem
            assert_eq!(row.cells[1].accuracy, None);
            assert_eq!(row.cells[1].tally.skipped_gold_oov, 1);
        }
    }

    #[test]
    fn csv_layout() {
        let grid = build_heatmap(&result(&[Method::Add]));
        let text =
            String::from_utf8(emit_to_vec(&grid, &RunMetadata::new(vec![], None, vec![]), OutputFormat::Csv).unwrap())
                .unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,category,accuracy,attempted,skipped_oov,skipped_gold_oov,skipped_degenerate"
        );
        assert_eq!(lines.clone().count(), 3);
        assert!(text.contains("add,family,,0,0,1,0\n"));
    }

    #[test]
    fn single_cell_csv() {
        let grid = HeatmapGrid {
            categories: vec!["c".into()],
            rows: vec![HeatmapRow {
                method: Method::Add,
                cells: vec![Cell::from(Tally {
                    attempted: 4,
                    correct: 2,
                    ..Tally::default()
                })],
                overall: Cell::from(Tally::default()),
                macro_accuracy: None,
            }],
        };
        let meta = RunMetadata::new(vec![], None, vec![]);
        let text = String::from_utf8(emit_to_vec(&grid, &meta, OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(
            text,
            "method,category,accuracy,attempted,skipped_oov,skipped_gold_oov,skipped_degenerate\nadd,c,0.5000,4,0,0,0\n"
        );
    }

    #[test]
    fn comparison_gaps() {
        let r = result(&[Method::Add, Method::IgnoreA, Method::OnlyB]);
        let cmp = build_space_comparison(&[("x".into(), &r), ("y".into(), &r)]).unwrap();
        assert_eq!(cmp.spaces[0].categories, cmp.spaces[1].categories);
        let s = &cmp.spaces[0];
        assert_eq!(s.add_minus_only_b, Some(s.add.unwrap() - s.only_b.unwrap()));

        let missing = result(&[Method::Add, Method::OnlyB]);
        assert!(matches!(
            build_space_comparison(&[("z".into(), &missing)]),
            Err(ReportError::MissingMethod {
                method: Method::IgnoreA,
                ..
            })
        ));
    }

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(fmt4(Some(0.03125)), "0.0312");
        assert_eq!(fmt4(Some(0.09375)), "0.0938");
        assert_eq!(fmt4(Some(0.5)), "0.5000");
        assert_eq!(fmt4(Some(0.12345678)), "0.1235");
        assert_eq!(fmt4(None), "");
    }

    #[test]
    fn markdown_renders_tables() {
        let grid = build_heatmap(&result(&[Method::Add]));
        let md = grid.markdown();
        assert!(md.contains("| method | capital-world | family | gram5-present-participle | overall | macro |"));
        assert!(md.contains("n/a"));
    }

    #[test]
    fn output_format_names() {
        assert_eq!("json".parse::<OutputFormat>(), Ok(OutputFormat::Json));
        assert_eq!("md".parse::<OutputFormat>(), Ok(OutputFormat::Markdown));
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
