//! Word-analogy evaluation of embedding spaces with the offset method and
//! baselines that expose neighbourhood effects.
//!
//! ```no_run
//! use analogy_audit::{evaluate, load_store, parse_dataset, Format, LoadOptions, Method, MethodSpec};
//!
//! let store = load_store("vectors.txt", &LoadOptions::new(Format::Word2vecTxt))?;
//! let set = parse_dataset("questions-words.txt", true)?;
//! let methods: Vec<MethodSpec> = Method::DEFAULT.into_iter().map(MethodSpec::new).collect();
//! let result = evaluate(&store, &set, &methods)?;
//! println!("add: {:.4}", result.overall_accuracy(Method::Add)?);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analogy;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod report;
pub mod store;
pub mod synthetic;

pub use analogy::{solve, Method, MethodSpec, Outcome, Prediction, SkipReason};
pub use dataset::{parse_dataset, reverse_set, AnalogyProblem, AnalogySet};
pub use eval::{baseline_gap, evaluate, pearson, reversal_analysis, vanilla_degeneracy, EvaluationResult};
pub use store::{load_store, Format, LoadOptions, VectorStore};
pub use synthetic::{generate, SynthSpec};
