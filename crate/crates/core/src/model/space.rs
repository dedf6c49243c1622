use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dist::DiscreteDist;
use super::itemset::Hyperedge;
use super::prior::{FeasibilityFamily, HypergraphPrior};
use super::profile::{value_table, WeightProfile};
use crate::error::{LabError, Result};
use crate::exec;

/// Enumeration and LP size limits. Exceeding one is a typed error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    /// Weight profiles in an exact enumeration.
    pub profiles: usize,
    /// Subsets visited by a single `value` call.
    pub subsets: usize,
    /// Stored value-table cells, `|V| · 2^m`.
    pub table_cells: usize,
    /// LP structural variables, `|V| · 2^m + |V|`.
    pub lp_vars: usize,
    /// Dense simplex tableau cells.
    pub lp_cells: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            profiles: 1_000_000,
            subsets: 1 << 24,
            table_cells: 1 << 25,
            lp_vars: 5_000,
            lp_cells: 12_000_000,
        }
    }
}

/// How a [`ProfileSet`] relates to the true prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coverage {
    /// Every profile with its exact probability.
    Exact,
    /// Profiles deviating from each edge's most likely atom on at most
    /// `max_deviations` edges; `residual` is the exact missing mass.
    Truncated { max_deviations: usize, residual: f64 },
    /// `draws` i.i.d. samples, each weighted `1/draws`.
    Sampled { draws: usize, seed: u64 },
}

/// Weighted weight profiles: an exact enumeration, a truncated one, or a
/// Monte Carlo sample.
#[derive(Clone, Debug)]
pub struct ProfileSet {
    profiles: Vec<WeightProfile>,
    probs: Vec<f64>,
    coverage: Coverage,
}

impl ProfileSet {
    pub fn exact(prior: &HypergraphPrior, cap: usize) -> Result<Self> {
        let (profiles, probs) = enumerate_profiles_capped(prior, cap)?.into_iter().unzip();
        Ok(ProfileSet {
            profiles,
            probs,
            coverage: Coverage::Exact,
        })
    }

    pub fn sampled(prior: &HypergraphPrior, draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(LabError::Domain("Monte Carlo mode needs at least one draw".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profiles: Vec<_> = (0..draws).map(|_| sample_profile(prior, &mut rng)).collect();
        Ok(ProfileSet {
            profiles,
            probs: vec![1.0 / draws as f64; draws],
            coverage: Coverage::Sampled { draws, seed },
        })
    }

    /// Profiles that move at most `max_deviations` edges off their most
    /// likely atom. The omitted mass is computed exactly and reported.
    pub fn truncated(prior: &HypergraphPrior, max_deviations: usize, cap: usize) -> Result<Self> {
        let dists: Vec<_> = prior.active_dists().collect();
        let base: Vec<usize> = dists.iter().map(|(_, d)| mode_index(d)).collect();

        // count[j] = number of profiles with exactly j deviations.
        let mut count = vec![0f64; max_deviations + 1];
        count[0] = 1.0;
        // dev[j] = Pr[exactly j deviations], over all j.
        let mut dev = vec![0f64; dists.len() + 1];
        dev[0] = 1.0;
        for (k, (_, d)) in dists.iter().enumerate() {
            let alternatives = (d.len() - 1) as f64;
            for j in (1..=max_deviations).rev() {
                count[j] += count[j - 1] * alternatives;
            }
            let q = 1.0 - d.pmf()[base[k]];
            for j in (1..=k + 1).rev() {
                dev[j] = dev[j] * (1.0 - q) + dev[j - 1] * q;
            }
            dev[0] *= 1.0 - q;
        }
        let total: f64 = count.iter().sum();
        if total > cap as f64 {
            return Err(LabError::profile_capacity(total, cap as f64));
        }
        let residual: f64 = dev.iter().skip(max_deviations + 1).sum();

        let mut profiles = Vec::new();
        let mut probs = Vec::new();
        let mut idx = base.clone();
        truncated_walk(&dists, &base, &mut idx, 0, max_deviations, &mut |idx| {
            let (p, prob) = materialize(&dists, idx);
            profiles.push(p);
            probs.push(prob);
        });
        Ok(ProfileSet {
            profiles,
            probs,
            coverage: Coverage::Truncated {
                max_deviations,
                residual,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[WeightProfile] {
        &self.profiles
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn coverage(&self) -> &Coverage {
        &self.coverage
    }

    pub fn is_exact(&self) -> bool {
        self.coverage == Coverage::Exact
    }

    /// Probability mass not represented by the set (zero unless truncated).
    pub fn residual(&self) -> f64 {
        match self.coverage {
            Coverage::Truncated { residual, .. } => residual,
            _ => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WeightProfile, f64)> + '_ {
        self.profiles.iter().zip(self.probs.iter().copied())
    }

    /// `Σ prob · f(profile)` with `f` evaluated in parallel.
    pub fn expect<F>(&self, f: F) -> f64
    where
        F: Fn(&WeightProfile) -> f64 + Sync + Send,
    {
        exec::sum_range(self.len(), |i| self.probs[i] * f(&self.profiles[i]))
    }
}

fn mode_index(d: &DiscreteDist) -> usize {
    let mut best = 0;
    for (i, &p) in d.pmf().iter().enumerate() {
        if p > d.pmf()[best] {
            best = i;
        }
    }
    best
}

fn truncated_walk<F: FnMut(&[usize])>(
    dists: &[(Hyperedge, &DiscreteDist)],
    base: &[usize],
    idx: &mut Vec<usize>,
    pos: usize,
    budget: usize,
    emit: &mut F,
) {
    if pos == dists.len() {
        emit(idx);
        return;
    }
    for k in 0..dists[pos].1.len() {
        let deviates = k != base[pos];
        if deviates && budget == 0 {
            continue;
        }
        idx[pos] = k;
        truncated_walk(dists, base, idx, pos + 1, budget - deviates as usize, emit);
    }
    idx[pos] = base[pos];
}

fn materialize(dists: &[(Hyperedge, &DiscreteDist)], idx: &[usize]) -> (WeightProfile, f64) {
    let mut prob = 1.0;
    let entries = dists
        .iter()
        .zip(idx)
        .map(|((e, d), &k)| {
            prob *= d.pmf()[k];
            (*e, d.support()[k])
        })
        .collect();
    (WeightProfile::from_sorted(entries), prob)
}

/// Every weight profile of the prior with its probability, using the default
/// cap of 10^6 profiles.
pub fn enumerate_profiles(prior: &HypergraphPrior) -> Result<Vec<(WeightProfile, f64)>> {
    enumerate_profiles_capped(prior, Caps::default().profiles)
}

/// Mixed-radix walk over the active edges' supports (last edge fastest).
pub fn enumerate_profiles_capped(
    prior: &HypergraphPrior,
    cap: usize,
) -> Result<Vec<(WeightProfile, f64)>> {
    let count = prior.profile_count();
    if count > cap as f64 {
        return Err(LabError::profile_capacity(count, cap as f64));
    }
    let dists: Vec<_> = prior.active_dists().collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; dists.len()];
    loop {
        out.push(materialize(&dists, &idx));
        let mut pos = dists.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dists[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Draws each active edge's weight independently.
pub fn sample_profile<R: Rng + ?Sized>(prior: &HypergraphPrior, rng: &mut R) -> WeightProfile {
    let entries = prior
        .active_dists()
        .map(|(e, d)| (e, d.support()[d.quantile_index(rng.gen::<f64>())]))
        .collect();
    WeightProfile::from_sorted(entries)
}

/// A profile set together with each profile's full value table.
#[derive(Clone, Debug)]
pub struct TypeSpace {
    m: usize,
    feasibility: FeasibilityFamily,
    set: ProfileSet,
    tables: Vec<Vec<f64>>,
}

impl TypeSpace {
    pub fn new(prior: &HypergraphPrior, set: ProfileSet, caps: &Caps) -> Result<Self> {
        let m = prior.m();
        let cells = set.len() as f64 * 2f64.powi(m as i32);
        if cells > caps.table_cells as f64 {
            return Err(LabError::capacity("value tables", cells, caps.table_cells as f64));
        }
        let feas = prior.feasibility();
        let tables = exec::map(set.profiles(), |p| value_table(p, feas, m));
        Ok(TypeSpace {
            m,
            feasibility: feas.clone(),
            set,
            tables,
        })
    }

    pub fn exact(prior: &HypergraphPrior, caps: &Caps) -> Result<Self> {
        TypeSpace::new(prior, ProfileSet::exact(prior, caps.profiles)?, caps)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn feasibility(&self) -> &FeasibilityFamily {
        &self.feasibility
    }

    pub fn set(&self) -> &ProfileSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.set.probs[i]
    }

    pub fn profile(&self, i: usize) -> &WeightProfile {
        &self.set.profiles[i]
    }

    /// `v_i(S)` indexed by the bitmask of `S`.
    pub fn table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    /// `v_i(M)`.
    pub fn grand(&self, i: usize) -> f64 {
        self.tables[i][(1usize << self.m) - 1]
    }

    /// `Σ_i prob_i · f(i)` with `f` evaluated in parallel.
    pub fn expect<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        exec::sum_range(self.len(), |i| self.prob(i) * f(i))
    }
}
