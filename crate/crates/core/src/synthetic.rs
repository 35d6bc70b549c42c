//! Seeded vector spaces with planted analogy relations.
//!
//! Each relation plants `pairs` base/target word pairs. A target is its base
//! plus the relation's offset plus per-pair Gaussian noise, so with zero
//! noise every pair realizes exactly the same raw offset. Neighborhood
//! density is controlled separately: every base word gets `satellites`
//! distractors placed at a fixed cosine from it,
//!
//! ```text
//! cos(satellite, base) = 1 − (1 − cos(target, base)) · (1 + margin) · exp(−neighbor_gap)
//! ```
//!
//! With `neighbor_gap = 0` the satellites sit strictly farther from the base
//! than its target; as the gap grows they close in until the base's nearest
//! neighbours are satellites rather than its target. The remaining
//! vocabulary is filled with isotropic Gaussian distractors.
//!
//! Planting happens in raw space; the store normalizes rows afterwards,
//! which perturbs the offsets slightly.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AnalogyProblem, AnalogySet};
use crate::store::{LoadError, VectorStore};

/// Satellites sit this much farther (in `1 − cos`) than the target at zero gap.
pub const SATELLITE_MARGIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Offset {
    Vector(Vec<f64>),
    /// Random direction with the given norm.
    Random {
        norm: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub name: String,
    pub pairs: usize,
    pub offset: Offset,
    /// Expected norm of the per-pair offset noise.
    pub offset_noise: f64,
    pub neighbor_gap: f64,
    pub satellites: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
    pub relations: Vec<RelationSpec>,
}

impl SynthSpec {
    /// Words occupied by planted pairs and satellites.
    pub fn planted_words(&self) -> usize {
        self.relations.iter().map(|r| r.pairs * (2 + r.satellites)).sum()
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("spec plants {planted} words but the vocabulary holds {vocab_size}")]
    Infeasible { planted: usize, vocab_size: usize },
    #[error("relation '{relation}': {reason}")]
    InvalidRelation { relation: String, reason: String },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error(transparent)]
    Store(#[from] LoadError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub relation: usize,
    /// Row ids in [`SyntheticSpace::words`].
    pub base: usize,
    pub target: usize,
}

/// A generated space before normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpace {
    pub words: Vec<String>,
    pub raw: Vec<Vec<f64>>,
    pub pairs: Vec<PlantedPair>,
    /// Realized offset per relation.
    pub offsets: Vec<Vec<f64>>,
    pub set: AnalogySet,
}

impl SyntheticSpace {
    pub fn to_store(&self) -> Result<VectorStore, LoadError> {
        VectorStore::from_rows(
            self.raw.first().map_or(0, Vec::len),
            false,
            self.words
                .iter()
                .zip(&self.raw)
                .map(|(w, v)| (w.as_str(), v.iter().map(|&x| x as f32).collect())),
        )
    }
}

fn gaussian(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian(rng, dim);
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (norm(x) * norm(y))
}

/// Unit vector at cosine `c` from the unit vector `base`, in a random
/// direction orthogonal to it.
fn at_cosine(rng: &mut StdRng, base: &[f64], c: f64) -> Vec<f64> {
    let z = loop {
        let mut z = gaussian(rng, base.len());
        let along: f64 = z.iter().zip(base).map(|(a, b)| a * b).sum();
        z.iter_mut().zip(base).for_each(|(x, b)| *x -= along * b);
        let n = norm(&z);
        if n > 1e-12 {
            break z.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - c * c).max(0.0).sqrt();
    base.iter().zip(&z).map(|(b, z)| c * b + s * z).collect()
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.dim == 0 {
        return Err(SynthError::ZeroDimension);
    }
    for r in &spec.relations {
        let bad = |reason: &str| SynthError::InvalidRelation {
            relation: r.name.clone(),
            reason: reason.into(),
        };
        if r.offset_noise < 0.0 || r.neighbor_gap < 0.0 || !r.offset_noise.is_finite() || !r.neighbor_gap.is_finite() {
            return Err(bad("scales must be finite and non-negative"));
        }
        if r.pairs < 2 {
            return Err(bad("at least two pairs are needed to form a problem"));
        }
        match &r.offset {
            Offset::Vector(v) if v.len() != spec.dim => return Err(bad("offset length differs from dim")),
            Offset::Random { norm } if norm.is_nan() || *norm < 0.0 => {
                return Err(bad("offset norm must be non-negative"))
            }
            _ => {}
        }
    }
    let planted = spec.planted_words();
    if planted > spec.vocab_size {
        return Err(SynthError::Infeasible {
            planted,
            vocab_size: spec.vocab_size,
        });
    }
    Ok(())
}

/// Generates the raw space; deterministic in `spec.seed`.
pub fn generate_space(spec: &SynthSpec) -> Result<SyntheticSpace, SynthError> {
    validate(spec)?;
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let dim = spec.dim;
    let mut words = Vec::with_capacity(spec.vocab_size);
    let mut raw = Vec::with_capacity(spec.vocab_size);
    let mut pairs = Vec::new();
    let mut offsets = Vec::new();
    let mut problems = Vec::new();

    for (ri, rel) in spec.relations.iter().enumerate() {
        let offset = match &rel.offset {
            Offset::Vector(v) => v.clone(),
            Offset::Random { norm } => unit(&mut rng, dim).into_iter().map(|x| x * norm).collect(),
        };
        let mut planted = Vec::with_capacity(rel.pairs);
        for i in 0..rel.pairs {
            let base = unit(&mut rng, dim);
            let noise_scale = rel.offset_noise / (dim as f64).sqrt();
            let noise = gaussian(&mut rng, dim);
            let target: Vec<f64> = base
                .iter()
                .zip(&offset)
                .zip(&noise)
                .map(|((b, o), n)| b + o + noise_scale * n)
                .collect();
            let closeness = 1.0 - cosine(&base, &target);
            let sat_cos = (1.0 - closeness * (1.0 + SATELLITE_MARGIN) * (-rel.neighbor_gap).exp()).clamp(-1.0, 1.0);
            let satellites: Vec<Vec<f64>> = (0..rel.satellites)
                .map(|_| at_cosine(&mut rng, &base, sat_cos))
                .collect();

            let base_id = words.len();
            words.push(format!("{}_base{i}", rel.name));
            raw.push(base);
            words.push(format!("{}_target{i}", rel.name));
            raw.push(target);
            for (k, s) in satellites.into_iter().enumerate() {
                words.push(format!("{}_sat{i}_{k}", rel.name));
                raw.push(s);
            }
            planted.push(PlantedPair {
                relation: ri,
                base: base_id,
                target: base_id + 1,
            });
        }
        for p in &planted {
            for q in &planted {
                if p != q {
                    problems.push(AnalogyProblem::new(
                        words[p.base].clone(),
                        words[p.target].clone(),
                        words[q.base].clone(),
                        words[q.target].clone(),
                        rel.name.clone(),
                    ));
                }
            }
        }
        pairs.extend(planted);
        offsets.push(offset);
    }

    let mut d = 0;
    while words.len() < spec.vocab_size {
        words.push(format!("distractor{d}"));
        raw.push(unit(&mut rng, dim));
        d += 1;
    }

    Ok(SyntheticSpace {
        words,
        raw,
        pairs,
        offsets,
        set: AnalogySet::from_problems(problems),
    })
}

/// Generates and normalizes a space together with its analogy set.
pub fn generate(spec: &SynthSpec) -> Result<(VectorStore, AnalogySet), SynthError> {
    let space = generate_space(spec)?;
    let store = space.to_store()?;
    Ok((store, space.set))
}

/// Planted consistent offsets and satellites crowding every base word:
/// the offset method should succeed while the nearest-neighbour baseline
/// should not.
pub fn consistent_offsets_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        vocab_size: 5000,
        dim: 100,
        seed,
        relations: (0..3)
            .map(|r| RelationSpec {
                name: format!("consistent{r}"),
                pairs: 20,
                offset: Offset::Random { norm: 1.0 },
                offset_noise: 0.0,
                neighbor_gap: 3.0,
                satellites: 3,
            })
            .collect(),
    }
}

/// Noisy offsets with every target the nearest neighbour of its base.
pub fn tight_neighborhood_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        vocab_size: 5000,
        dim: 100,
        seed,
        relations: (0..3)
            .map(|r| RelationSpec {
                name: format!("tight{r}"),
                pairs: 20,
                offset: Offset::Random { norm: 0.5 },
                offset_noise: 1.0,
                neighbor_gap: 0.0,
                satellites: 3,
            })
            .collect(),
    }
}
