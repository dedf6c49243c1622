//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's valuation, ironing or mechanism code; priors are only read.
#![allow(dead_code)]

use cal_lab::model::{FeasibilityFamily, Hyperedge, HypergraphPrior, ItemSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A prior flattened to bitmasks and (value, prob) lists.
pub struct Oracle {
    pub m: usize,
    /// Active edges in the prior's (lexicographic) order.
    pub edges: Vec<u64>,
    pub dists: Vec<Vec<(f64, f64)>>,
    feasible: Vec<bool>,
}

fn feasible(fam: &FeasibilityFamily, s: u64) -> bool {
    match fam {
        FeasibilityFamily::All => true,
        FeasibilityFamily::Cardinality { k } => s.count_ones() as usize <= *k,
        FeasibilityFamily::Explicit { maximal_sets } => s == 0 || maximal_sets.iter().any(|c| s & !c.bits() == 0),
    }
}

impl Oracle {
    pub fn new(prior: &HypergraphPrior) -> Self {
        let m = prior.m();
        let mut edges = Vec::new();
        let mut dists = Vec::new();
        for (e, d) in prior.edges() {
            if d.support().iter().zip(d.pmf()).any(|(&v, &p)| v > 0.0 && p > 0.0) {
                edges.push(e.items().bits());
                dists.push(d.support().iter().copied().zip(d.pmf().iter().copied()).collect());
            }
        }
        let feasible = (0..1u64 << m).map(|s| feasible(prior.feasibility(), s)).collect();
        Oracle { m, edges, dists, feasible }
    }

    pub fn full(&self) -> u64 {
        (1u64 << self.m) - 1
    }

    /// Every weight vector with its probability (atoms of probability 0 dropped).
    pub fn profiles(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = vec![(Vec::new(), 1.0)];
        for d in &self.dists {
            let mut next = Vec::new();
            for (w, p) in &out {
                for &(x, q) in d {
                    if q > 0.0 {
                        let mut w2: Vec<f64> = w.clone();
                        w2.push(x);
                        next.push((w2, p * q));
                    }
                }
            }
            out = next;
        }
        out
    }

    /// `max over feasible T ⊆ s` of the weight of edges inside `T`.
    pub fn value(&self, w: &[f64], s: u64) -> f64 {
        let mut best = 0.0f64;
        let mut t = s;
        loop {
            if self.feasible[t as usize] {
                let total: f64 = self.edges.iter().zip(w).filter(|(&e, _)| e & !t == 0).map(|(_, &x)| x).sum();
                best = best.max(total);
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & s;
        }
        best
    }

    /// Heaviest positive edge, earliest on ties.
    pub fn region(&self, w: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (j, &x) in w.iter().enumerate() {
            if x > 0.0 && best.map_or(true, |b| x > w[b]) {
                best = Some(j);
            }
        }
        best
    }

    /// Best grand-bundle price, searched over every realized `v(M)`.
    pub fn brev(&self) -> f64 {
        let profiles = self.profiles();
        let vals: Vec<(f64, f64)> = profiles.iter().map(|(w, p)| (self.value(w, self.full()), *p)).collect();
        vals.iter()
            .map(|&(price, _)| price * vals.iter().filter(|(v, _)| *v >= price).map(|(_, p)| p).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn single(&self) -> f64 {
        let ironed: Vec<Vec<f64>> = self.dists.iter().map(|d| ironed_phi(d)).collect();
        self.profiles()
            .iter()
            .map(|(w, p)| match self.region(w) {
                Some(a) => {
                    let k = self.dists[a].iter().position(|&(x, _)| x == w[a]).unwrap();
                    p * ironed[a][k].max(0.0)
                }
                None => 0.0,
            })
            .sum()
    }

    pub fn nonfav(&self) -> f64 {
        self.profiles()
            .iter()
            .map(|(w, p)| {
                let mut w = w.clone();
                if let Some(a) = self.region(&w) {
                    w[a] = 0.0;
                }
                p * self.value(&w, self.full())
            })
            .sum()
    }

    /// Myerson revenue of the copies auction: `E[max_j max(0, phi_bar_j)]`.
    pub fn opt_copies(&self) -> f64 {
        let ironed: Vec<Vec<f64>> = self.dists.iter().map(|d| ironed_phi(d)).collect();
        self.profiles()
            .iter()
            .map(|(w, p)| {
                let best = w
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let k = self.dists[j].iter().position(|&(y, _)| y == x).unwrap();
                        ironed[j][k]
                    })
                    .fold(0.0, f64::max);
                p * best
            })
            .sum()
    }

    /// Menu of (set, price): the buyer takes a utility-maximizing entry,
    /// cheapest on ties, or nothing when every utility is negative.
    pub fn menu_revenue(&self, menu: &[(u64, f64)]) -> f64 {
        self.profiles()
            .iter()
            .map(|(w, p)| {
                let mut pick: Option<(f64, f64)> = None;
                for &(s, price) in menu {
                    let u = self.value(w, s) - price;
                    if u >= 0.0 && pick.map_or(true, |(bu, bp)| u > bu || (u == bu && price < bp)) {
                        pick = Some((u, price));
                    }
                }
                p * pick.map_or(0.0, |(_, price)| price)
            })
            .sum()
    }
}

/// Ironed virtual values at each atom, as slopes of the upper concave hull
/// of the revenue curve `(Pr[X ≥ x_i], x_i Pr[X ≥ x_i])` plus `(0, 0)`.
pub fn ironed_phi(dist: &[(f64, f64)]) -> Vec<f64> {
    let n = dist.len();
    let mut q = vec![0.0; n + 1];
    for i in (0..n).rev() {
        q[i] = q[i + 1] + dist[i].1;
    }
    // Points from q = 0 upwards: index n is the origin, then atoms n-1 .. 0.
    let pts: Vec<(f64, f64)> = (0..=n).rev().map(|i| if i == n { (0.0, 0.0) } else { (q[i], dist[i].0 * q[i]) }).collect();
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..pts.len() {
        while hull.len() >= 2 {
            let (a, b) = (pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]]);
            let c = pts[k];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    // Atom i spans quantiles (q[i+1], q[i]], i.e. points k-1 .. k with k = n - i.
    (0..n)
        .map(|i| {
            let k = n - i;
            let seg = hull.windows(2).find(|s| s[0] <= k - 1 && k <= s[1]).unwrap();
            let (a, b) = (pts[seg[0]], pts[seg[1]]);
            (b.1 - a.1) / (b.0 - a.0)
        })
        .collect()
}

/// Best posted price revenue, searched over the support.
pub fn best_posted_price(dist: &[(f64, f64)]) -> f64 {
    dist.iter()
        .map(|&(x, _)| x * dist.iter().filter(|(y, _)| *y >= x).map(|(_, p)| p).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn pr_ge(dist: &[(f64, f64)], x: f64) -> f64 {
    dist.iter().filter(|(y, _)| *y >= x).map(|(_, p)| p).sum()
}

/// `|E|` distinct random nonempty subsets of `m` items.
pub fn random_edges(rng: &mut ChaCha8Rng, m: usize, max_edges: usize) -> Vec<Hyperedge> {
    let full = (1u64 << m) - 1;
    let count = rng.gen_range(0..=max_edges.min(full as usize));
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < count {
        seen.insert(rng.gen_range(1..=full));
    }
    seen.into_iter().map(|b| Hyperedge::new(ItemSet::from_bits(b)).unwrap()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random discrete distribution: distinct values from `{0, 1/2, .., 5}`,
/// integer weights normalized.
pub fn random_dist(rng: &mut ChaCha8Rng, max_support: usize) -> Vec<(f64, f64)> {
    let size = rng.gen_range(1..=max_support);
    let mut values: Vec<f64> = Vec::new();
    while values.len() < size {
        let v = rng.gen_range(0..=10) as f64 / 2.0;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values.sort_by(f64::total_cmp);
    let weights: Vec<f64> = values.iter().map(|_| rng.gen_range(1..=9) as f64).collect();
    let total: f64 = weights.iter().sum();
    values.into_iter().zip(weights.into_iter().map(|w| w / total)).collect()
}

pub fn edge(items: &[usize]) -> Hyperedge {
    Hyperedge::from_items(items.iter().copied()).unwrap()
}

/// The worked two-edge prior: `w({0}) ∈ {0, 1}`, `w({0,1}) ∈ {0, 2}`, fair coins.
pub fn two_edge_prior() -> HypergraphPrior {
    use cal_lab::model::DiscreteDist;
    HypergraphPrior::new(
        2,
        vec![
            (edge(&[0]), DiscreteDist::from_pairs(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()),
            (edge(&[0, 1]), DiscreteDist::from_pairs(&[(0.0, 0.5), (2.0, 0.5)]).unwrap()),
        ],
        FeasibilityFamily::All,
    )
    .unwrap()
}
