use serde::{Deserialize, Serialize};

use super::itemset::{Hyperedge, ItemSet};
use super::prior::FeasibilityFamily;
use crate::error::{LabError, Result};

/// Default cap on the number of subsets `value` may enumerate.
pub const DEFAULT_SUBSET_CAP: usize = 1 << 24;

/// One realized weight for every active edge, sorted by edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    entries: Vec<(Hyperedge, f64)>,
}

impl WeightProfile {
    pub fn new(mut entries: Vec<(Hyperedge, f64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(LabError::Invalid(format!("edge {} weighted twice", w[0].0)));
            }
        }
        if let Some((e, w)) = entries.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(LabError::Invalid(format!("edge {e} has weight {w}")));
        }
        Ok(WeightProfile { entries })
    }

    pub(crate) fn from_sorted(entries: Vec<(Hyperedge, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        WeightProfile { entries }
    }

    /// `w(T)`; zero for edges not in the profile.
    pub fn weight(&self, edge: Hyperedge) -> f64 {
        self.entries
            .binary_search_by(|(e, _)| e.cmp(&edge))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(Hyperedge, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (Hyperedge, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Copy with `w(edge)` replaced. The edge must already be present.
    pub fn with_weight(&self, edge: Hyperedge, weight: f64) -> Self {
        let mut out = self.clone();
        if let Ok(i) = out.entries.binary_search_by(|(e, _)| e.cmp(&edge)) {
            out.entries[i].1 = weight;
        }
        out
    }

    /// `Σ_{T ⊆ s} w(T)`.
    pub fn contained_weight(&self, s: ItemSet) -> f64 {
        self.entries
            .iter()
            .filter(|(e, _)| e.items().is_subset(s))
            .map(|(_, w)| w)
            .sum()
    }
}

/// `v(S) = max_{T ⊆ S, T ∈ F} Σ_{U ⊆ T} w(U)` by exhaustive enumeration of
/// the subsets of `S`.
pub fn value(profile: &WeightProfile, feasibility: &FeasibilityFamily, s: ItemSet) -> Result<f64> {
    value_capped(profile, feasibility, s, DEFAULT_SUBSET_CAP)
}

pub fn value_capped(
    profile: &WeightProfile,
    feasibility: &FeasibilityFamily,
    s: ItemSet,
    subset_cap: usize,
) -> Result<f64> {
    let needed = 2f64.powi(s.len() as i32);
    if needed > subset_cap as f64 {
        return Err(LabError::capacity("subset enumeration", needed, subset_cap as f64));
    }
    Ok(s.subsets()
        .filter(|t| feasibility.contains(*t))
        .map(|t| profile.contained_weight(t))
        .fold(0.0, f64::max))
}

/// `v(S)` for every `S ⊆ {0..m-1}`, indexed by the bitmask of `S`.
///
/// Built with two subset-lattice passes: a sum pass giving `Σ_{U ⊆ T} w(U)`
/// and a max pass over feasible `T ⊆ S`.
pub fn value_table(profile: &WeightProfile, feasibility: &FeasibilityFamily, m: usize) -> Vec<f64> {
    let n = 1usize << m;
    let mut g = vec![0.0; n];
    for (e, w) in profile.iter() {
        g[e.items().bits() as usize] += w;
    }
    for bit in 0..m {
        let b = 1usize << bit;
        for mask in 0..n {
            if mask & b != 0 {
                g[mask] += g[mask ^ b];
            }
        }
    }
    if !feasibility.is_all() {
        for (mask, gv) in g.iter_mut().enumerate() {
            if !feasibility.contains(ItemSet::from_bits(mask as u64)) {
                *gv = f64::NEG_INFINITY;
            }
        }
        for bit in 0..m {
            let b = 1usize << bit;
            for mask in 0..n {
                if mask & b != 0 && g[mask ^ b] > g[mask] {
                    g[mask] = g[mask ^ b];
                }
            }
        }
    }
    g
}

/// The heaviest edge of the profile, ties broken lexicographically.
///
/// Inactive edges weigh zero, so when no edge is positive the answer is the
/// lexicographically first nonempty set, the singleton `{0}`.
pub fn region(profile: &WeightProfile) -> Hyperedge {
    let mut best: Option<(Hyperedge, f64)> = None;
    for (e, w) in profile.iter() {
        if w > 0.0 && best.map_or(true, |(_, bw)| w > bw) {
            best = Some((e, w));
        }
    }
    best.map_or(Hyperedge::singleton(0), |(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(items: &[usize]) -> Hyperedge {
        Hyperedge::from_items(items.iter().copied()).unwrap()
    }

    fn set(items: &[usize]) -> ItemSet {
        ItemSet::from_items(items.iter().copied()).unwrap()
    }

    fn two_edge(w1: f64, w2: f64) -> WeightProfile {
        WeightProfile::new(vec![(edge(&[0]), w1), (edge(&[0, 1]), w2)]).unwrap()
    }

    #[test]
    fn value_examples() {
        let p = two_edge(1.0, 2.0);
        assert_eq!(value(&p, &FeasibilityFamily::All, set(&[0, 1])).unwrap(), 3.0);
        assert_eq!(value(&p, &FeasibilityFamily::All, ItemSet::EMPTY).unwrap(), 0.0);
        let f = FeasibilityFamily::Explicit {
            maximal_sets: vec![set(&[0]), set(&[1])],
        };
        assert_eq!(value(&p, &f, set(&[0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn value_cap_is_enforced() {
        let p = two_edge(1.0, 2.0);
        let err = value_capped(&p, &FeasibilityFamily::All, set(&[0, 1]), 2).unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn table_matches_direct_enumeration() {
        let p = WeightProfile::new(vec![
            (edge(&[0]), 1.0),
            (edge(&[1, 2]), 2.5),
            (edge(&[0, 1, 2]), 0.5),
            (edge(&[2]), 0.75),
        ])
        .unwrap();
        let fams = [
            FeasibilityFamily::All,
            FeasibilityFamily::Cardinality { k: 2 },
            FeasibilityFamily::Explicit {
                maximal_sets: vec![set(&[0, 2]), set(&[1, 2])],
            },
        ];
        for f in &fams {
            let t = value_table(&p, f, 3);
            for mask in 0..8u64 {
                let s = ItemSet::from_bits(mask);
                let direct = value(&p, f, s).unwrap();
                assert!((t[mask as usize] - direct).abs() < 1e-12, "{f:?} {s}");
            }
        }
    }

    #[test]
    fn region_examples() {
        assert_eq!(region(&two_edge(1.0, 2.0)), edge(&[0, 1]));
        let tie = WeightProfile::new(vec![(edge(&[0]), 1.0), (edge(&[1]), 1.0)]).unwrap();
        assert_eq!(region(&tie), edge(&[0]));
        let zero = WeightProfile::new(vec![(edge(&[1]), 0.0), (edge(&[2]), 0.0)]).unwrap();
        assert_eq!(region(&zero), edge(&[0]));
    }
}
