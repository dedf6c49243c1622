//! The instance file format and a seeded random-prior generator.
//!
//! ```json
//! {
//!   "m": 2,
//!   "edges": [
//!     {"items": [0], "support": [{"value": 0.0, "prob": 0.5}, {"value": 1.0, "prob": 0.5}]}
//!   ],
//!   "feasibility": {"kind": "all"}
//! }
//! ```
//!
//! Items are 0-based. Edges left out have weight identically zero.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::model::{DiscreteDist, FeasibilityFamily, Hyperedge, HypergraphPrior, ItemSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub items: Hyperedge,
    pub support: DiscreteDist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub m: usize,
    pub edges: Vec<EdgeEntry>,
    #[serde(default = "all")]
    pub feasibility: FeasibilityFamily,
}

fn all() -> FeasibilityFamily {
    FeasibilityFamily::All
}

impl Instance {
    pub fn from_prior(prior: &HypergraphPrior) -> Self {
        Instance {
            m: prior.m(),
            edges: prior
                .edges()
                .iter()
                .map(|(e, d)| EdgeEntry {
                    items: *e,
                    support: d.clone(),
                })
                .collect(),
            feasibility: prior.feasibility().clone(),
        }
    }

    pub fn to_prior(&self) -> Result<HypergraphPrior> {
        HypergraphPrior::new(
            self.m,
            self.edges.iter().map(|e| (e.items, e.support.clone())),
            self.feasibility.clone(),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Parse(e.to_string()))
    }

    /// Parses and validates in one step.
    pub fn parse_prior(text: &str) -> Result<HypergraphPrior> {
        Instance::parse(text)?.to_prior().map_err(|e| match e {
            LabError::Invalid(msg) => LabError::Parse(msg),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instances always serialize");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("instances always serialize");
        hex::encode(Sha256::digest(canonical))
    }
}

/// Parameter ranges for [`random_prior`].
///
/// The item count is uniform in `m_min..=m`. Values are drawn from the grid `{0, 0.5, …, max_value}`, probabilities
/// are integer weights in `1..=4` normalized, and the feasibility family is
/// All with probability 1/2, a cardinality bound `k ∈ 1..=m` with 1/4, and
/// the downward closure of one or two random sets with 1/4. Every drawn
/// edge is feasible and active.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomSpec {
    pub m_min: usize,
    pub m: usize,
    pub max_edges: usize,
    pub max_support: usize,
    pub max_value: f64,
    pub substitutes: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            m_min: 3,
            m: 3,
            max_edges: 3,
            max_support: 3,
            max_value: 4.0,
            substitutes: true,
        }
    }
}

pub fn random_prior(spec: &RandomSpec, seed: u64) -> Result<HypergraphPrior> {
    if spec.m_min == 0 || spec.m_min > spec.m || spec.m > 16 {
        return Err(LabError::Domain(format!(
            "random priors need 1 ≤ m_min ≤ m ≤ 16, got {}..={}",
            spec.m_min, spec.m
        )));
    }
    if spec.max_edges == 0 || spec.max_support == 0 || !(spec.max_value >= 0.5) {
        return Err(LabError::Domain(
            "random priors need max_edges ≥ 1, max_support ≥ 1 and max_value ≥ 0.5".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(spec.m_min..=spec.m);
    let full = (1u64 << m) - 1;
    let feasibility = if !spec.substitutes {
        FeasibilityFamily::All
    } else {
        match rng.gen_range(0..4) {
            0 | 1 => FeasibilityFamily::All,
            2 => FeasibilityFamily::Cardinality { k: rng.gen_range(1..=m) },
            _ => {
                let count = rng.gen_range(1..=2);
                let maximal_sets = (0..count).map(|_| ItemSet::from_bits(rng.gen_range(1..=full))).collect();
                FeasibilityFamily::Explicit { maximal_sets }
            }
        }
    };
    let mut candidates: Vec<u64> = (1..=full).filter(|&b| feasibility.contains(ItemSet::from_bits(b))).collect();
    candidates.shuffle(&mut rng);
    let count = rng.gen_range(1..=spec.max_edges).min(candidates.len());

    let steps = (spec.max_value * 2.0).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / 2.0).collect();
    let mut edges = Vec::with_capacity(count);
    for &bits in &candidates[..count] {
        let size = rng.gen_range(1..=spec.max_support).min(grid.len());
        let mut values: Vec<f64> = grid.choose_multiple(&mut rng, size).copied().collect();
        if values.iter().all(|&v| v == 0.0) {
            values[0] = grid[rng.gen_range(1..grid.len())];
        }
        values.sort_by(f64::total_cmp);
        let weights: Vec<f64> = values.iter().map(|_| rng.gen_range(1..=4) as f64).collect();
        let total: f64 = weights.iter().sum();
        let dist = DiscreteDist::new(values, weights.iter().map(|w| w / total).collect())?;
        edges.push((Hyperedge::new(ItemSet::from_bits(bits))?, dist));
    }
    HypergraphPrior::new(m, edges, feasibility)
}
