//! Google-format analogy question sets.
//!
//! A file is a sequence of `: category` header lines, each followed by data
//! lines of exactly four whitespace-separated words `a a* b b*`.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One problem `a : a* :: b : b*`, where `b*` is the gold answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalogyProblem {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
    pub category: String,
}

impl AnalogyProblem {
    pub fn new(
        a: impl Into<String>,
        a_star: impl Into<String>,
        b: impl Into<String>,
        b_star: impl Into<String>,
        category: impl Into<String>,
    ) -> Self {
        AnalogyProblem {
            a: a.into(),
            a_star: a_star.into(),
            b: b.into(),
            b_star: b_star.into(),
            category: category.into(),
        }
    }

    /// `a* : a :: b* : b`, same category.
    pub fn reversed(&self) -> Self {
        AnalogyProblem {
            a: self.a_star.clone(),
            a_star: self.a.clone(),
            b: self.b_star.clone(),
            b_star: self.b.clone(),
            category: self.category.clone(),
        }
    }
}

pub fn reverse_problem(p: &AnalogyProblem) -> AnalogyProblem {
    p.reversed()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub name: String,
    pub count: usize,
}

/// Ordered problems with per-category counts in first-appearance order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogySet {
    problems: Vec<AnalogyProblem>,
    categories: Vec<CategoryCount>,
    source: Option<PathBuf>,
}

impl AnalogySet {
    pub fn from_problems(problems: Vec<AnalogyProblem>) -> Self {
        let mut categories: Vec<CategoryCount> = Vec::new();
        let mut slots: HashMap<String, usize> = HashMap::new();
        for p in &problems {
            let slot = *slots.entry(p.category.clone()).or_insert_with(|| {
                categories.push(CategoryCount {
                    name: p.category.clone(),
                    count: 0,
                });
                categories.len() - 1
            });
            categories[slot].count += 1;
        }
        AnalogySet {
            problems,
            categories,
            source: None,
        }
    }

    pub fn problems(&self) -> &[AnalogyProblem] {
        &self.problems
    }

    pub fn categories(&self) -> &[CategoryCount] {
        &self.categories
    }

    pub fn category_names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn count(&self, category: &str) -> Option<usize> {
        self.categories.iter().find(|c| c.name == category).map(|c| c.count)
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Every problem reversed; counts and order are unchanged.
    pub fn reversed(&self) -> Self {
        AnalogySet {
            problems: self.problems.iter().map(AnalogyProblem::reversed).collect(),
            categories: self.categories.clone(),
            source: self.source.clone(),
        }
    }

    /// Renders the set back into the text format, one header per run of
    /// problems sharing a category.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for p in &self.problems {
            if current != Some(p.category.as_str()) {
                out.push_str(": ");
                out.push_str(&p.category);
                out.push('\n');
                current = Some(&p.category);
            }
            out.push_str(&format!("{} {} {} {}\n", p.a, p.a_star, p.b, p.b_star));
        }
        out
    }
}

pub fn reverse_set(set: &AnalogySet) -> AnalogySet {
    set.reversed()
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected 4 words, found {found}")]
    TokenCount { line: usize, found: usize },
    #[error("line {line}: data line before any ': category' header")]
    NoHeader { line: usize },
    #[error("line {line}: category header has no name")]
    EmptyCategory { line: usize },
    #[error("analogy file contains no problems")]
    Empty,
}

pub fn parse_dataset(path: impl AsRef<Path>, case_fold: bool) -> Result<AnalogySet, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut set = parse_str(&text, case_fold)?;
    set.source = Some(path.to_path_buf());
    Ok(set)
}

pub fn parse_str(text: &str, case_fold: bool) -> Result<AnalogySet, DatasetError> {
    let fold = |w: &str| {
        if case_fold {
            w.to_lowercase()
        } else {
            w.to_string()
        }
    };
    let mut problems = Vec::new();
    let mut category: Option<String> = None;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix(':') {
            let name = name.trim();
            if name.is_empty() {
                return Err(DatasetError::EmptyCategory { line: line_no });
            }
            category = Some(name.to_string());
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(DatasetError::TokenCount {
                line: line_no,
                found: tokens.len(),
            });
        }
        let Some(cat) = category.as_ref() else {
            return Err(DatasetError::NoHeader { line: line_no });
        };
        problems.push(AnalogyProblem::new(
            fold(tokens[0]),
            fold(tokens[1]),
            fold(tokens[2]),
            fold(tokens[3]),
            cat.clone(),
        ));
    }
    if problems.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(AnalogySet::from_problems(problems))
}

/// A category of the standard 14-category analogy set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CategoryInfo {
    /// Header name used in the data file.
    pub key: &'static str,
    pub label: &'static str,
    pub example: (&'static str, &'static str),
    pub count: usize,
}

const fn info(
    key: &'static str,
    label: &'static str,
    example: (&'static str, &'static str),
    count: usize,
) -> CategoryInfo {
    CategoryInfo {
        key,
        label,
        example,
        count,
    }
}

/// The standard categories in reporting order.
pub const STANDARD_CATEGORIES: [CategoryInfo; 14] = [
    info("capital-common-countries", "Common capitals", ("athens", "greece"), 506),
    info("capital-world", "All capitals", ("abuja", "nigeria"), 4524),
    info("city-in-state", "US cities", ("chicago", "illinois"), 2467),
    info("currency", "Currencies", ("algeria", "dinar"), 866),
    info(
        "gram6-nationality-adjective",
        "Nationalities",
        ("albania", "albanian"),
        1599,
    ),
    info("family", "Gender", ("boy", "girl"), 506),
    info("gram8-plural", "Plurals", ("banana", "bananas"), 1332),
    info("gram5-present-participle", "Base to gerund", ("code", "coding"), 1056),
    info("gram7-past-tense", "Gerund to past", ("dancing", "danced"), 1560),
    info(
        "gram9-plural-verbs",
        "Base to third person",
        ("decrease", "decreases"),
        870,
    ),
    info(
        "gram1-adjective-to-adverb",
        "Adj. to adverb",
        ("amazing", "amazingly"),
        992,
    ),
    info("gram3-comparative", "Adj. to comparative", ("bad", "worse"), 1332),
    info("gram4-superlative", "Adj. to superlative", ("bad", "worst"), 1122),
    info(
        "gram2-opposite",
        "Adj. un- prefixation",
        ("acceptable", "unacceptable"),
        812,
    ),
];

pub fn standard_category(key: &str) -> Option<(usize, &'static CategoryInfo)> {
    STANDARD_CATEGORIES.iter().enumerate().find(|(_, c)| c.key == key)
}

/// Standard categories first in reporting order, then any others in the
/// order given.
pub fn reporting_order<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    let mut known: Vec<(usize, String)> = Vec::new();
    let mut other = Vec::new();
    for name in names {
        let name = name.as_ref();
        match standard_category(name) {
            Some((rank, _)) => known.push((rank, name.to_string())),
            None => other.push(name.to_string()),
        }
    }
    known.sort_by_key(|(rank, _)| *rank);
    known.into_iter().map(|(_, n)| n).chain(other).collect()
}
