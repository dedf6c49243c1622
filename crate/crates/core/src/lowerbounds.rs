//! Lower-bound instances where item pricing and grand bundling both lose a
//! factor growing with the complementarity, plus the competing degree
//! measures those instances separate.
//!
//! The `e`-th edge (indices `1+a ..= |E|+a`) has weight `2^e` with
//! probability `2^{-e}` and 0 otherwise, so any price `p` sells with
//! probability about `2/p` while posting each edge at its own price
//! collects about 1 per edge.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec;
use crate::mechanisms::{brev, edge_menu_revenue, srev_upper_eval, ItemPricing};
use crate::model::{
    Caps, Coverage, DiscreteDist, FeasibilityFamily, Hyperedge, HypergraphPrior, ItemSet, ProfileSet, TypeSpace,
};

/// Largest edge index `|E| + a`; `2^{-50}` is still far above `f64`
/// resolution near 1.
pub const MAX_EDGE_INDEX: usize = 50;
/// Edge-list size limit for the edge-family generators.
pub const MAX_GENERATED_EDGES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundInstance {
    pub prior: HypergraphPrior,
    pub a: usize,
    /// Edges in index order: `edges[j]` has index `j + 1 + a`.
    pub edges: Vec<Hyperedge>,
}

impl LowerBoundInstance {
    pub fn index(&self, j: usize) -> usize {
        j + 1 + self.a
    }

    /// Recognizes a prior built by [`gen_lb_instance`], recovering the edge
    /// order from the `2^e` atoms.
    pub fn detect(prior: &HypergraphPrior) -> Option<Self> {
        if !prior.feasibility().is_all() || prior.edges().is_empty() {
            return None;
        }
        let mut indexed = Vec::with_capacity(prior.edges().len());
        for (&e, d) in prior.edges() {
            if d.len() != 2 || d.support()[0] != 0.0 {
                return None;
            }
            let top = d.support()[1];
            let idx = top.log2().round();
            if !(1.0..=MAX_EDGE_INDEX as f64).contains(&idx) || 2f64.powi(idx as i32) != top {
                return None;
            }
            indexed.push((idx as usize, e));
        }
        indexed.sort();
        let a = indexed[0].0 - 1;
        let edges: Vec<Hyperedge> = indexed.iter().map(|&(_, e)| e).collect();
        let inst = gen_lb_instance(&edges, a).ok()?;
        (inst.prior == *prior).then_some(inst)
    }

    /// Each edge offered at `2^e`.
    pub fn menu(&self) -> Vec<(ItemSet, f64)> {
        (0..self.edges.len())
            .map(|j| (self.edges[j].items(), 2f64.powi(self.index(j) as i32)))
            .collect()
    }
}

/// `m` is the smallest item count covering every edge (at least 1).
pub fn gen_lb_instance(edges: &[Hyperedge], a: usize) -> Result<LowerBoundInstance> {
    if a == 0 {
        return Err(LabError::Domain("offset a must be at least 1".into()));
    }
    if edges.len() + a > MAX_EDGE_INDEX {
        return Err(LabError::Domain(format!(
            "|E| + a = {} exceeds the index cap {MAX_EDGE_INDEX}",
            edges.len() + a
        )));
    }
    let m = edges.iter().map(|e| e.items().span()).max().unwrap_or(0).max(1);
    let dists = edges
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let idx = (j + 1 + a) as i32;
            let p = 2f64.powi(-idx);
            Ok((e, DiscreteDist::new(vec![0.0, 2f64.powi(idx)], vec![1.0 - p, p])?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LowerBoundInstance {
        prior: HypergraphPrior::new(m, dists, FeasibilityFamily::All)?,
        a,
        edges: edges.to_vec(),
    })
}

/// Circulant `d`-regular graph: item `i` joined to `i ± 1, …, i ± ⌊d/2⌋`
/// (mod m), plus `i + m/2` when `d` is odd.
pub fn gen_regular_graph(m: usize, d: usize) -> Result<Vec<Hyperedge>> {
    if d >= m || (m * d) % 2 == 1 {
        return Err(LabError::Domain(format!(
            "a {d}-regular simple graph on {m} nodes needs d < m and m·d even"
        )));
    }
    let mut edges = Vec::with_capacity(m * d / 2);
    for i in 0..m {
        for k in 1..=d / 2 {
            let j = (i + k) % m;
            edges.push(Hyperedge::from_items([i, j])?);
        }
        if d % 2 == 1 && i < m / 2 {
            edges.push(Hyperedge::from_items([i, i + m / 2])?);
        }
    }
    edges.sort();
    edges.dedup();
    Ok(edges)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sorts by size, then lexicographically, so every edge's supersets come
/// after it and get larger indices (and menu prices).
fn inclusion_order(edges: &mut [Hyperedge]) {
    edges.sort_by_key(|e| (e.len(), *e));
}

/// True if no edge precedes one of its subsets. The edge menu only
/// collects about 1 per edge under such an order: otherwise a buyer
/// valuing only a small edge buys a cheaper superset.
pub fn extends_inclusion(edges: &[Hyperedge]) -> bool {
    edges
        .iter()
        .enumerate()
        .all(|(j, e)| edges[j + 1..].iter().all(|f| !f.items().is_subset(e.items())))
}

/// Every nonempty set of at most `k` items, by size then lexicographically.
pub fn gen_ph_k(m: usize, k: usize) -> Result<Vec<Hyperedge>> {
    if m == 0 || m > 63 || k == 0 {
        return Err(LabError::Domain(format!("PH-k needs 1 ≤ m ≤ 63 and k ≥ 1 (m = {m}, k = {k})")));
    }
    let count: f64 = (1..=k.min(m)).map(|i| binomial(m, i)).sum();
    if count > MAX_GENERATED_EDGES as f64 {
        return Err(LabError::capacity("hyperedges", count, MAX_GENERATED_EDGES as f64));
    }
    let mut edges: Vec<Hyperedge> = ItemSet::full(m)
        .subsets()
        .filter(|s| !s.is_empty() && s.len() <= k)
        .map(Hyperedge::new)
        .collect::<Result<_>>()?;
    inclusion_order(&mut edges);
    Ok(edges)
}

/// Items split into consecutive blocks of `k + 1`; every nonempty subset of
/// each block, by size then lexicographically.
pub fn gen_ps_k(m: usize, k: usize) -> Result<Vec<Hyperedge>> {
    if m == 0 || m > 63 || m % (k + 1) != 0 {
        return Err(LabError::Domain(format!("PS-k needs (k + 1) | m (m = {m}, k = {k})")));
    }
    let count = (m / (k + 1)) as f64 * (2f64.powi(k as i32 + 1) - 1.0);
    if count > MAX_GENERATED_EDGES as f64 {
        return Err(LabError::capacity("hyperedges", count, MAX_GENERATED_EDGES as f64));
    }
    let mut edges = Vec::new();
    for start in (0..m).step_by(k + 1) {
        let block = ItemSet::from_items(start..start + k + 1)?;
        edges.extend(block.subsets().filter(|s| !s.is_empty()).map(|s| Hyperedge::new(s).unwrap()));
    }
    inclusion_order(&mut edges);
    Ok(edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// Max number of active edges sharing an item.
    pub our_degree: usize,
    /// Largest active edge.
    pub ph_degree: usize,
    /// Max number of other items an item shares an active edge with.
    pub ps_degree: usize,
}

pub fn classify(prior: &HypergraphPrior) -> Classification {
    let edges = prior.active_edges();
    let ps_degree = (0..prior.m())
        .map(|i| {
            edges
                .iter()
                .filter(|e| e.items().contains(i))
                .fold(ItemSet::EMPTY, |acc, e| acc.union(e.items()))
                .without(i)
                .len()
        })
        .max()
        .unwrap_or(0);
    Classification {
        our_degree: prior.complementarity_degree(),
        ph_degree: edges.iter().map(|e| e.len()).max().unwrap_or(0),
        ps_degree,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LbConfig {
    /// Points per item in the optimistic item-pricing grid.
    pub grid_points: usize,
    /// Skip the grid when pricings × profiles × sets exceeds this.
    pub max_grid_work: f64,
    /// Deviations kept when the prior is too large to enumerate.
    pub max_deviations: usize,
    pub caps: Caps,
}

impl Default for LbConfig {
    fn default() -> Self {
        LbConfig {
            grid_points: 100,
            max_grid_work: 2e9,
            max_deviations: 3,
            caps: Caps::default(),
        }
    }
}

/// One pass/fail line of [`verify_lb`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `None` when not evaluated.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbReport {
    pub m: usize,
    pub edges: usize,
    pub a: usize,
    /// Whether the edge order extends inclusion; see [`extends_inclusion`].
    pub inclusion_ordered: bool,
    pub classification: Classification,
    pub coverage: Coverage,
    /// Bundle revenue over the enumerated profiles.
    pub brev: f64,
    /// Upper bound on the true BREV, valid despite truncation.
    pub brev_upper: f64,
    /// Best optimistic item-pricing revenue over the grid.
    pub srev_upper_grid: Option<f64>,
    /// `m · brev_upper`: bounds optimistic item pricing at every price.
    pub srev_upper_certified: f64,
    /// Edge-menu revenue; a lower bound when truncated.
    pub edge_menu: f64,
    pub menu_target: f64,
    /// `edge_menu / max(brev_upper, srev_upper_certified)`: a lower bound on
    /// `REV / max(BREV, SREV)`.
    pub ratio: f64,
    /// `edge_menu / max(brev, srev_upper_grid)` when the grid ran.
    pub ratio_grid: Option<f64>,
    pub checks: Vec<LbCheck>,
}

impl LbReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }
}

/// `Pr[at least k edges nonzero]`, exactly.
fn at_least_nonzero(prior: &HypergraphPrior, k: usize) -> f64 {
    let mut dist = vec![1.0];
    for (_, d) in prior.active_dists() {
        let q = d.pr_gt(0.0);
        let mut next = vec![0.0; dist.len() + 1];
        for (j, &p) in dist.iter().enumerate() {
            next[j] += p * (1.0 - q);
            next[j + 1] += p * q;
        }
        dist = next;
    }
    dist.iter().skip(k).sum()
}

/// `sup_p p · Pr[v(M) ≥ p]` bounded above despite truncation.
///
/// `v(M) ≥ p` needs some nonzero edge with `2^e ≥ p/2`, because distinct
/// smaller powers of two sum below `p`; the union bound over those edges
/// is `U(p)`. A profile left out of a truncation to `r` nonzero edges has
/// such an edge plus at least `r` other nonzero edges, so by independence
/// the missing mass above `p` is at most `U(p) · Pr[≥ r nonzero]`.
fn brev_upper_bound(inst: &LowerBoundInstance, ts: &TypeSpace, coverage: &Coverage) -> f64 {
    let idx: Vec<i32> = (0..inst.edges.len()).map(|j| inst.index(j) as i32).collect();
    let union = |p: f64| -> f64 {
        idx.iter()
            .filter(|&&e| 2f64.powi(e) >= p / 2.0)
            .map(|&e| 2f64.powi(-e))
            .sum()
    };
    let spill = match coverage {
        Coverage::Truncated { max_deviations, .. } => at_least_nonzero(&inst.prior, *max_deviations),
        _ => 0.0,
    };
    let mut grand: Vec<(f64, f64)> = (0..ts.len()).map(|i| (ts.grand(i), ts.prob(i))).collect();
    grand.sort_by(|x, y| x.0.total_cmp(&y.0));
    let covered = |p: f64| -> f64 { grand.iter().filter(|(v, _)| *v >= p).map(|(_, q)| q).sum() };
    // Both tail functions are left-continuous steps, so the supremum is
    // attained at a breakpoint.
    let mut candidates: Vec<f64> = grand.iter().map(|g| g.0).filter(|&v| v > 0.0).collect();
    candidates.extend(idx.iter().map(|&e| 2f64.powi(e + 1)));
    candidates
        .into_iter()
        .map(|p| {
            let u = union(p);
            p * (covered(p) + u * spill).min(u).min(1.0)
        })
        .fold(0.0, f64::max)
}

/// `grid_points` prices per item, geometric from 1 to twice the largest
/// grand-bundle value.
fn lb_grid(top: f64, points: usize) -> Vec<f64> {
    let hi = (2.0 * top).max(2.0);
    if points <= 1 {
        return vec![hi];
    }
    (0..points)
        .map(|k| hi.powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn best_on_grid(ts: &TypeSpace, grid: &[f64]) -> f64 {
    let m = ts.m();
    let n = grid.len();
    let total = n.pow(m as u32);
    let values = exec::map_range(total, |mut code| {
        let mut prices = vec![0.0; m];
        for p in prices.iter_mut() {
            *p = grid[code % n];
            code /= n;
        }
        srev_upper_eval(ts, &ItemPricing::new(prices))
    });
    values.into_iter().fold(0.0, f64::max)
}

/// Checks the three claims behind the lower bound: bundling earns at most
/// 2, item pricing at most `2m`, and the edge menu about `|E|`.
pub fn verify_lb(inst: &LowerBoundInstance, cfg: &LbConfig) -> Result<LbReport> {
    let prior = &inst.prior;
    let m = prior.m();
    let set = match ProfileSet::exact(prior, cfg.caps.profiles) {
        Ok(s) if (s.len() as f64) * 2f64.powi(m as i32) <= cfg.caps.table_cells as f64 => s,
        Ok(_) => ProfileSet::truncated(prior, cfg.max_deviations, cfg.caps.profiles)?,
        Err(e) if e.is_capacity() => ProfileSet::truncated(prior, cfg.max_deviations, cfg.caps.profiles)?,
        Err(e) => return Err(e),
    };
    let residual = set.residual();
    let coverage = set.coverage().clone();
    if matches!(coverage, Coverage::Sampled { .. }) {
        return Err(LabError::Domain("lower-bound checks need exact or truncated enumeration".into()));
    }
    let ts = TypeSpace::new(prior, set, &cfg.caps)?;

    let bundle = brev(&ts);
    let brev_upper = brev_upper_bound(inst, &ts, &coverage);
    let srev_upper_certified = m as f64 * brev_upper;
    let work = (cfg.grid_points as f64).powi(m as i32) * ts.len() as f64 * 2f64.powi(m as i32);
    let srev_upper_grid = (residual == 0.0 && work <= cfg.max_grid_work && !inst.edges.is_empty()).then(|| {
        let top = (0..ts.len()).map(|i| ts.grand(i)).fold(0.0, f64::max);
        best_on_grid(&ts, &lb_grid(top, cfg.grid_points))
    });
    let srev_upper_grid = if inst.edges.is_empty() { Some(0.0) } else { srev_upper_grid };
    let edge_menu = edge_menu_revenue(&ts, &inst.menu());
    let menu_target = inst.edges.len() as f64 * (1.0 - 2f64.powi(-(inst.a as i32)));

    let ratio_of = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let ratio = ratio_of(edge_menu, brev_upper.max(srev_upper_certified));
    let ratio_grid = srev_upper_grid.map(|g| ratio_of(edge_menu, bundle.revenue.max(g)));

    let two_m = 2.0 * m as f64;
    let checks = vec![
        LbCheck {
            name: "brev_le_2",
            value: brev_upper,
            bound: 2.0,
            pass: Some(brev_upper <= 2.0 + 1e-12),
        },
        LbCheck {
            name: "srev_grid_le_2m",
            value: srev_upper_grid.unwrap_or(f64::NAN),
            bound: two_m,
            pass: srev_upper_grid.map(|g| g <= two_m + 1e-9),
        },
        LbCheck {
            name: "srev_certified_le_2m",
            value: srev_upper_certified,
            bound: two_m,
            pass: Some(srev_upper_certified <= two_m + 1e-12),
        },
        LbCheck {
            name: "edge_menu_ge_target",
            value: edge_menu,
            bound: menu_target,
            pass: Some(edge_menu >= menu_target * (1.0 - 1e-12)),
        },
    ];
    Ok(LbReport {
        m,
        edges: inst.edges.len(),
        a: inst.a,
        inclusion_ordered: extends_inclusion(&inst.edges),
        classification: classify(prior),
        coverage,
        brev: bundle.revenue,
        brev_upper,
        srev_upper_grid,
        srev_upper_certified,
        edge_menu,
        menu_target,
        ratio,
        ratio_grid,
        checks,
    })
}
