use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dist::DiscreteDist;
use super::itemset::{Hyperedge, ItemSet, MAX_ITEMS};
use crate::error::{LabError, Result};

/// A downward-closed set system over the items.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeasibilityFamily {
    /// Every set is feasible.
    All,
    /// Sets of at most `k` items.
    Cardinality { k: usize },
    /// The downward closure of the listed maximal sets.
    Explicit { maximal_sets: Vec<ItemSet> },
}

impl FeasibilityFamily {
    /// Membership test. `∅` is always feasible.
    pub fn contains(&self, s: ItemSet) -> bool {
        match self {
            FeasibilityFamily::All => true,
            FeasibilityFamily::Cardinality { k } => s.len() <= *k,
            FeasibilityFamily::Explicit { maximal_sets } => {
                s.is_empty() || maximal_sets.iter().any(|c| s.is_subset(*c))
            }
        }
    }

    pub fn is_all(&self) -> bool {
        matches!(self, FeasibilityFamily::All)
    }

    fn span(&self) -> usize {
        match self {
            FeasibilityFamily::Explicit { maximal_sets } => {
                maximal_sets.iter().map(|s| s.span()).max().unwrap_or(0)
            }
            _ => 0,
        }
    }
}

/// Independent per-hyperedge weight distributions plus a feasibility family.
#[derive(Clone, Debug, PartialEq)]
pub struct HypergraphPrior {
    m: usize,
    edges: BTreeMap<Hyperedge, DiscreteDist>,
    feasibility: FeasibilityFamily,
    active: Vec<Hyperedge>,
}

impl HypergraphPrior {
    /// Edges missing from `edges` have weight identically zero. An edge whose
    /// distribution is not a point mass at zero must be feasible.
    pub fn new<I>(m: usize, edges: I, feasibility: FeasibilityFamily) -> Result<Self>
    where
        I: IntoIterator<Item = (Hyperedge, DiscreteDist)>,
    {
        if m == 0 || m > MAX_ITEMS {
            return Err(LabError::Invalid(format!("item count {m} outside 1..={MAX_ITEMS}")));
        }
        if feasibility.span() > m {
            return Err(LabError::Invalid("feasible set mentions an item outside 0..m".into()));
        }
        let mut map = BTreeMap::new();
        for (edge, dist) in edges {
            if edge.items().span() > m {
                return Err(LabError::Invalid(format!("edge {edge} mentions an item outside 0..{m}")));
            }
            if !dist.is_zero() && !feasibility.contains(edge.items()) {
                return Err(LabError::Invalid(format!(
                    "edge {edge} carries weight but is not feasible"
                )));
            }
            if map.insert(edge, dist).is_some() {
                return Err(LabError::Invalid(format!("edge {edge} listed twice")));
            }
        }
        let active = map
            .iter()
            .filter(|(_, d)| !d.is_zero())
            .map(|(e, _)| *e)
            .collect();
        Ok(HypergraphPrior {
            m,
            edges: map,
            feasibility,
            active,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }

    pub fn feasibility(&self) -> &FeasibilityFamily {
        &self.feasibility
    }

    /// All listed edges, including ones that are identically zero.
    pub fn edges(&self) -> &BTreeMap<Hyperedge, DiscreteDist> {
        &self.edges
    }

    pub fn dist(&self, edge: Hyperedge) -> Option<&DiscreteDist> {
        self.edges.get(&edge)
    }

    /// Edges with `Pr[w(T) = 0] < 1`, in lexicographic order.
    pub fn active_edges(&self) -> &[Hyperedge] {
        &self.active
    }

    pub fn active_dists(&self) -> impl Iterator<Item = (Hyperedge, &DiscreteDist)> + '_ {
        self.active.iter().map(move |e| (*e, &self.edges[e]))
    }

    /// Number of weight profiles, as a float so huge priors do not overflow.
    pub fn profile_count(&self) -> f64 {
        self.active_dists().map(|(_, d)| d.len() as f64).product()
    }

    /// Max over items of the number of active edges containing it.
    pub fn complementarity_degree(&self) -> usize {
        item_degree(self.m, &self.active)
    }

    /// The same prior with every support value multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|(e, d)| Ok((*e, d.scaled(alpha)?)))
            .collect::<Result<Vec<_>>>()?;
        HypergraphPrior::new(self.m, edges, self.feasibility.clone())
    }

    /// Sum of the largest support values over active edges.
    pub fn max_total_weight(&self) -> f64 {
        self.active_dists().map(|(_, d)| d.max()).sum()
    }
}

/// Max over items of the number of edges containing the item.
pub fn item_degree(m: usize, edges: &[Hyperedge]) -> usize {
    (0..m)
        .map(|i| edges.iter().filter(|e| e.items().contains(i)).count())
        .max()
        .unwrap_or(0)
}
