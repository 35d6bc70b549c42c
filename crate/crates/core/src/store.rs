//! Immutable, unit-normalized embedding store and the brute-force cosine
//! scoring kernel every solver runs on.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows per parallel work unit in [`VectorStore::score_all`].
const ROW_BLOCK: usize = 1024;
/// Queries sharing one pass over the matrix in [`VectorStore::score_many`].
const QUERY_BLOCK: usize = 8;
const LANES: usize = 8;

/// On-disk embedding formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Word2vecBin,
    Word2vecTxt,
    GloveTxt,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Word2vecBin, Format::Word2vecTxt, Format::GloveTxt];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Word2vecBin => "word2vec-bin",
            Format::Word2vecTxt => "word2vec-txt",
            Format::GloveTxt => "glove-txt",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| {
            format!("unknown embedding format '{s}' (expected one of: word2vec-bin, word2vec-txt, glove-txt)")
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub format: Format,
    /// Lowercase every word at load and every lookup query.
    pub case_fold: bool,
    /// Read at most this many rows from the file.
    pub max_vocab: Option<usize>,
}

impl LoadOptions {
    pub fn new(format: Format) -> Self {
        LoadOptions {
            format,
            case_fold: true,
            max_vocab: None,
        }
    }

    pub fn case_fold(mut self, case_fold: bool) -> Self {
        self.case_fold = case_fold;
        self
    }

    pub fn max_vocab(mut self, max_vocab: Option<usize>) -> Self {
        self.max_vocab = max_vocab;
        self
    }
}

/// Row accounting produced while building a store.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped_duplicate: usize,
    pub dropped_zero_norm: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub source: Option<PathBuf>,
    pub format: Option<Format>,
    pub case_fold: bool,
    pub max_vocab: Option<usize>,
    pub summary: LoadSummary,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse '{token}' as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: non-finite value in vector for '{word}'")]
    NonFinite { line: usize, word: String },
    #[error("line {line}: empty word")]
    EmptyWord { line: usize },
    #[error("header declares {declared} rows, file holds {found}")]
    RowCount { declared: usize, found: usize },
    #[error("unexpected end of file in row {row}")]
    Truncated { row: usize },
    #[error("embedding file yields an empty vocabulary")]
    EmptyVocabulary,
    #[error("invalid load option: {0}")]
    InvalidOption(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query has dimension {found}, store has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("query vector has zero norm")]
    ZeroNorm,
}

/// Vocabulary plus a row-major matrix whose rows all have unit L2 norm.
///
/// Row order is file order after duplicates are removed, so row ids in a
/// frequency-sorted file rank words by frequency.
#[derive(Clone, Debug)]
pub struct VectorStore {
    vocab: Vec<String>,
    dim: usize,
    matrix: Vec<f32>,
    index: HashMap<String, usize>,
    meta: StoreMeta,
}

impl VectorStore {
    /// Builds a store from in-memory rows, applying the same folding,
    /// deduplication and normalization rules as file loading.
    pub fn from_rows<S, I>(dim: usize, case_fold: bool, rows: I) -> Result<Self, LoadError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, Vec<f32>)>,
    {
        let mut builder = Builder::new(dim, case_fold)?;
        for (n, (word, values)) in rows.into_iter().enumerate() {
            if values.len() != dim {
                return Err(LoadError::DimensionMismatch {
                    line: n + 1,
                    expected: dim,
                    found: values.len(),
                });
            }
            builder.push(n + 1, word.as_ref(), &values)?;
        }
        builder.finish(None, None, None)
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, id: usize) -> &str {
        &self.vocab[id]
    }

    pub fn row(&self, id: usize) -> &[f32] {
        &self.matrix[id * self.dim..(id + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn meta(&self) -> &StoreMeta {
        &self.meta
    }

    pub fn case_fold(&self) -> bool {
        self.meta.case_fold
    }

    /// Folds `word` the way the store folded its vocabulary.
    pub fn normalize_word<'a>(&self, word: &'a str) -> Cow<'a, str> {
        fold(word, self.meta.case_fold)
    }

    pub fn lookup(&self, word: &str) -> Option<usize> {
        self.index.get(self.normalize_word(word).as_ref()).copied()
    }

    /// Dot product of every row with `query`.
    ///
    /// Rows are unit length, so each score is the cosine scaled by the
    /// query norm; the scaling is shared by all rows and leaves the ranking
    /// intact. Every row is accumulated in the same fixed order, so the
    /// result does not depend on the thread pool.
    pub fn score_all(&self, query: &[f32]) -> Result<Vec<f32>, QueryError> {
        self.check_query(query)?;
        let mut scores = vec![0.0f32; self.len()];
        scores.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(block, out)| {
            let start = block * ROW_BLOCK;
            for (k, s) in out.iter_mut().enumerate() {
                *s = dot(self.row(start + k), query);
            }
        });
        Ok(scores)
    }

    /// Scores several queries, returning one score column per query.
    ///
    /// Bit-identical to calling [`score_all`](Self::score_all) once per query;
    /// queries are grouped so each pass over the matrix serves a block of them.
    pub fn score_many(&self, queries: &[&[f32]]) -> Result<Vec<Vec<f32>>, QueryError> {
        for q in queries {
            self.check_query(q)?;
        }
        let mut columns = vec![vec![0.0f32; self.len()]; queries.len()];
        columns
            .par_chunks_mut(QUERY_BLOCK)
            .zip(queries.par_chunks(QUERY_BLOCK))
            .for_each(|(cols, qs)| {
                for id in 0..self.len() {
                    let row = self.row(id);
                    for (col, q) in cols.iter_mut().zip(qs) {
                        col[id] = dot(row, q);
                    }
                }
            });
        Ok(columns)
    }

    fn check_query(&self, query: &[f32]) -> Result<(), QueryError> {
        if query.len() != self.dim {
            return Err(QueryError::Dimension {
                expected: self.dim,
                found: query.len(),
            });
        }
        if query.iter().all(|&x| x == 0.0) {
            return Err(QueryError::ZeroNorm);
        }
        Ok(())
    }

    /// Serializes the (normalized) rows in one of the supported formats.
    pub fn write<W: Write>(&self, mut w: W, format: Format) -> io::Result<()> {
        if format != Format::GloveTxt {
            writeln!(w, "{} {}", self.len(), self.dim)?;
        }
        for (id, word) in self.vocab.iter().enumerate() {
            match format {
                Format::Word2vecBin => {
                    w.write_all(word.as_bytes())?;
                    w.write_all(b" ")?;
                    for v in self.row(id) {
                        w.write_all(&v.to_le_bytes())?;
                    }
                    w.write_all(b"\n")?;
                }
                Format::Word2vecTxt | Format::GloveTxt => {
                    w.write_all(word.as_bytes())?;
                    for v in self.row(id) {
                        write!(w, " {v}")?;
                    }
                    w.write_all(b"\n")?;
                }
            }
        }
        w.flush()
    }
}

/// Loads an embedding file into a normalized store.
pub fn load_store(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<VectorStore, LoadError> {
    let path = path.as_ref();
    if opts.max_vocab == Some(0) {
        return Err(LoadError::InvalidOption("max_vocab must be at least 1".into()));
    }
    let io_err = |source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let builder = match opts.format {
        Format::Word2vecBin => read_word2vec_bin(&mut reader, opts).map_err(|e| with_path(e, path))?,
        Format::Word2vecTxt | Format::GloveTxt => read_text(&mut reader, opts).map_err(|e| with_path(e, path))?,
    };
    builder.finish(Some(path.to_path_buf()), Some(opts.format), opts.max_vocab)
}

fn with_path(err: LoadError, path: &Path) -> LoadError {
    match err {
        LoadError::Io { source, .. } => LoadError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

fn raw_io(source: io::Error) -> LoadError {
    LoadError::Io {
        path: PathBuf::new(),
        source,
    }
}

fn read_text<R: BufRead>(reader: &mut R, opts: &LoadOptions) -> Result<Builder, LoadError> {
    let mut line = String::new();
    let mut line_no = 0usize;
    let mut next_line = |line: &mut String, line_no: &mut usize| -> Result<bool, LoadError> {
        loop {
            line.clear();
            if reader.read_line(line).map_err(raw_io)? == 0 {
                return Ok(false);
            }
            *line_no += 1;
            if !line.trim().is_empty() {
                return Ok(true);
            }
        }
    };

    let declared = if opts.format == Format::Word2vecTxt {
        if !next_line(&mut line, &mut line_no)? {
            return Err(LoadError::MalformedHeader("file is empty".into()));
        }
        let (rows, dim) = parse_header(&line)?;
        Some((rows, dim))
    } else {
        None
    };

    let mut builder: Option<Builder> = match declared {
        Some((_, dim)) => Some(Builder::new(dim, opts.case_fold)?),
        None => None,
    };
    let mut values = Vec::new();
    let cap = opts.max_vocab.unwrap_or(usize::MAX);
    let limit = declared.map_or(cap, |(n, _)| n.min(cap));
    let mut rows = 0usize;
    while rows < limit && next_line(&mut line, &mut line_no)? {
        let mut tokens = line.split_whitespace();
        let word = tokens.next().ok_or(LoadError::EmptyWord { line: line_no })?;
        values.clear();
        for tok in tokens {
            let v: f32 = tok.parse().map_err(|_| LoadError::BadNumber {
                line: line_no,
                token: tok.to_string(),
            })?;
            values.push(v);
        }
        let b = match builder.as_mut() {
            Some(b) => b,
            None => {
                if values.is_empty() {
                    return Err(LoadError::MalformedHeader(format!(
                        "line {line_no}: first row carries no vector values"
                    )));
                }
                builder.insert(Builder::new(values.len(), opts.case_fold)?)
            }
        };
        if values.len() != b.dim {
            return Err(LoadError::DimensionMismatch {
                line: line_no,
                expected: b.dim,
                found: values.len(),
            });
        }
        b.push(line_no, word, &values)?;
        rows += 1;
    }

    if let Some((declared_rows, _)) = declared {
        if rows < limit {
            return Err(LoadError::RowCount {
                declared: declared_rows,
                found: rows,
            });
        }
        // rows past a max_vocab cap are never read, so surplus is only checked uncapped
        if cap > declared_rows && next_line(&mut line, &mut line_no)? {
            return Err(LoadError::RowCount {
                declared: declared_rows,
                found: rows + 1,
            });
        }
    }
    builder.ok_or(LoadError::EmptyVocabulary)
}

fn parse_header(line: &str) -> Result<(usize, usize), LoadError> {
    let mut parts = line.split_whitespace();
    let (Some(rows), Some(dim), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(LoadError::MalformedHeader(format!(
            "expected '<vocab_size> <dim>', got '{}'",
            line.trim()
        )));
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| LoadError::MalformedHeader(format!("'{s}' is not a non-negative integer")))
    };
    let (rows, dim) = (parse(rows)?, parse(dim)?);
    if dim == 0 {
        return Err(LoadError::MalformedHeader("dimension must be positive".into()));
    }
    Ok((rows, dim))
}

fn read_word2vec_bin<R: BufRead>(reader: &mut R, opts: &LoadOptions) -> Result<Builder, LoadError> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(raw_io)?;
    if header.is_empty() {
        return Err(LoadError::MalformedHeader("file is empty".into()));
    }
    let header = String::from_utf8_lossy(&header);
    let (declared, dim) = parse_header(&header)?;
    let mut builder = Builder::new(dim, opts.case_fold)?;
    let limit = declared.min(opts.max_vocab.unwrap_or(usize::MAX));

    let mut word = Vec::new();
    let mut bytes = vec![0u8; dim * 4];
    let mut values = vec![0.0f32; dim];
    for row in 1..=limit {
        word.clear();
        let n = reader.read_until(b' ', &mut word).map_err(raw_io)?;
        if n == 0 || word.last() != Some(&b' ') {
            return Err(LoadError::RowCount {
                declared,
                found: row - 1,
            });
        }
        word.pop();
        reader.read_exact(&mut bytes).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                LoadError::Truncated { row }
            } else {
                raw_io(e)
            }
        })?;
        for (v, chunk) in values.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        // a trailing newline after the vector is optional
        if reader.fill_buf().map_err(raw_io)?.first() == Some(&b'\n') {
            reader.consume(1);
        }
        let text = String::from_utf8_lossy(&word);
        builder.push(row + 1, text.trim_start_matches('\n'), &values)?;
    }
    Ok(builder)
}

fn fold(word: &str, case_fold: bool) -> Cow<'_, str> {
    if case_fold && word.chars().any(char::is_uppercase) {
        Cow::Owned(word.to_lowercase())
    } else {
        Cow::Borrowed(word)
    }
}

struct Builder {
    dim: usize,
    case_fold: bool,
    vocab: Vec<String>,
    matrix: Vec<f32>,
    index: HashMap<String, usize>,
    summary: LoadSummary,
}

impl Builder {
    fn new(dim: usize, case_fold: bool) -> Result<Self, LoadError> {
        if dim == 0 {
            return Err(LoadError::MalformedHeader("dimension must be positive".into()));
        }
        Ok(Builder {
            dim,
            case_fold,
            vocab: Vec::new(),
            matrix: Vec::new(),
            index: HashMap::new(),
            summary: LoadSummary::default(),
        })
    }

    fn push(&mut self, line: usize, word: &str, values: &[f32]) -> Result<(), LoadError> {
        self.summary.rows_read += 1;
        if word.is_empty() {
            return Err(LoadError::EmptyWord { line });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LoadError::NonFinite {
                line,
                word: word.to_string(),
            });
        }
        let norm = values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
        if norm == 0.0 {
            self.summary.dropped_zero_norm += 1;
            return Ok(());
        }
        let word = fold(word, self.case_fold);
        if self.index.contains_key(word.as_ref()) {
            self.summary.dropped_duplicate += 1;
            return Ok(());
        }
        let id = self.vocab.len();
        self.index.insert(word.to_string(), id);
        self.vocab.push(word.into_owned());
        self.matrix.extend(values.iter().map(|&v| (f64::from(v) / norm) as f32));
        Ok(())
    }

    fn finish(
        mut self,
        source: Option<PathBuf>,
        format: Option<Format>,
        max_vocab: Option<usize>,
    ) -> Result<VectorStore, LoadError> {
        if self.vocab.is_empty() {
            return Err(LoadError::EmptyVocabulary);
        }
        self.summary.rows_kept = self.vocab.len();
        Ok(VectorStore {
            vocab: self.vocab,
            dim: self.dim,
            matrix: self.matrix,
            index: self.index,
            meta: StoreMeta {
                source,
                format,
                case_fold: self.case_fold,
                max_vocab,
                summary: self.summary,
            },
        })
    }
}

/// Dot product with a fixed lane-strided accumulation order.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..LANES {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}
