//! The valuation model: hypergraph priors with independent edge weights,
//! downward-closed feasibility, and the valuation
//! `v(S) = max_{T ⊆ S, T ∈ F} Σ_{U ⊆ T} w(U)`.

mod dist;
mod itemset;
mod prior;
mod profile;
mod space;

pub use dist::{Atom, DiscreteDist};
pub use itemset::{Hyperedge, ItemSet, MAX_ITEMS};
pub use prior::{item_degree, FeasibilityFamily, HypergraphPrior};
pub use profile::{region, value, value_capped, value_table, WeightProfile, DEFAULT_SUBSET_CAP};
pub use space::{
    enumerate_profiles, enumerate_profiles_capped, sample_profile, Caps, Coverage, ProfileSet,
    TypeSpace,
};

/// Max over items of the number of active edges containing it.
pub fn complementarity_degree(prior: &HypergraphPrior) -> usize {
    prior.complementarity_degree()
}
