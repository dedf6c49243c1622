//! Simple mechanisms: grand-bundle pricing, pessimistic and optimistic item
//! pricing, and menus of priced bundles.

use serde::Serialize;

use crate::exec;
use crate::model::{ItemSet, TypeSpace};
use crate::myerson::best_price;

/// Utilities within this (relative) distance of zero count as zero.
const UTIL_TOL: f64 = 1e-9;

fn tol(v: f64) -> f64 {
    UTIL_TOL * v.abs().max(1.0)
}

/// Per-item prices; `f64::INFINITY` means the item is not offered.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemPricing {
    pub prices: Vec<f64>,
}

impl ItemPricing {
    pub fn new(prices: Vec<f64>) -> Self {
        debug_assert!(prices.iter().all(|p| *p >= 0.0));
        ItemPricing { prices }
    }

    /// No item offered.
    pub fn closed(m: usize) -> Self {
        ItemPricing::new(vec![f64::INFINITY; m])
    }

    pub fn m(&self) -> usize {
        self.prices.len()
    }

    /// `Σ_{i∈S} p_i` for every bitmask `S`.
    fn set_prices(&self) -> Vec<f64> {
        let n = 1usize << self.m();
        let mut out = vec![0.0; n];
        for s in 1..n {
            let low = s.trailing_zeros() as usize;
            out[s] = out[s & (s - 1)] + self.prices[low];
        }
        out
    }

    fn positive_mask(&self) -> usize {
        self.prices
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    fn charge(&self, sold: usize) -> f64 {
        ItemSet::from_bits(sold as u64).iter().map(|i| self.prices[i]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BundleQuote {
    pub price: f64,
    pub revenue: f64,
}

/// How a buyer with exactly zero utility for a set is treated when deciding
/// which items count as sold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Indifference {
    /// Sets with zero utility are not wanted (`u(S) > 0` literally).
    Strict,
    /// Each positive price is read as approached from below, so a nonempty
    /// set with zero utility is wanted if it holds a positively priced item.
    /// The revenue is a limit of revenues of actual pricings, so it never
    /// exceeds the supremum over pricings.
    Limit,
}

/// `max_p p · Pr[v(M) ≥ p]` over the support of `v(M)`, lower price on ties.
pub fn brev(ts: &TypeSpace) -> BundleQuote {
    let values: Vec<f64> = (0..ts.len()).map(|i| ts.grand(i)).collect();
    let (price, revenue) = best_price(&values, ts.set().probs());
    BundleQuote { price, revenue }
}

/// Items sold to one type: those in every set it strictly wants, if it wants
/// any set at all.
fn pessimistic_sold(table: &[f64], set_price: &[f64], positive: usize, rule: Indifference) -> usize {
    let mut common = usize::MAX;
    let mut wanted = false;
    for s in 1..table.len() {
        let u = table[s] - set_price[s];
        let t = tol(table[s]);
        let wants = match rule {
            Indifference::Strict => u > t,
            Indifference::Limit => u > t || (u >= -t && s & positive != 0),
        };
        if wants {
            common &= s;
            wanted = true;
            if common == 0 {
                break;
            }
        }
    }
    if wanted {
        common
    } else {
        0
    }
}

/// `E[Σ_i P_i · p_i]`: item `i` counts as sold only if every set with
/// positive utility contains it.
pub fn srev_star_eval(ts: &TypeSpace, pricing: &ItemPricing) -> f64 {
    srev_star_eval_with(ts, pricing, Indifference::Strict)
}

pub fn srev_star_eval_with(ts: &TypeSpace, pricing: &ItemPricing, rule: Indifference) -> f64 {
    assert_eq!(pricing.m(), ts.m(), "pricing size must match the item count");
    let set_price = pricing.set_prices();
    let positive = pricing.positive_mask();
    ts.expect(|i| pricing.charge(pessimistic_sold(ts.table(i), &set_price, positive, rule)))
}

/// `Σ_i p_i · Pr[∃ S ∋ i : v(S) ≥ Σ_{j∈S} p_j]`.
pub fn srev_upper_eval(ts: &TypeSpace, pricing: &ItemPricing) -> f64 {
    assert_eq!(pricing.m(), ts.m(), "pricing size must match the item count");
    let set_price = pricing.set_prices();
    ts.expect(|i| {
        let table = ts.table(i);
        let mut any = 0usize;
        for s in 1..table.len() {
            if table[s] - set_price[s] >= -tol(table[s]) {
                any |= s;
            }
        }
        pricing.charge(any)
    })
}

/// Expected payment when the buyer picks a utility-maximizing entry of
/// `menu`. Among maximizers the cheapest entry wins; the buyer leaves only
/// if every entry has negative utility.
pub fn edge_menu_revenue(ts: &TypeSpace, menu: &[(ItemSet, f64)]) -> f64 {
    if menu.is_empty() {
        return 0.0;
    }
    ts.expect(|i| {
        let table = ts.table(i);
        let utils: Vec<f64> = menu.iter().map(|&(s, p)| table[s.bits() as usize] - p).collect();
        let best = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best < -tol(best) {
            return 0.0;
        }
        menu.iter()
            .zip(&utils)
            .filter(|(_, &u)| u >= best - tol(best))
            .map(|(&(_, p), _)| p)
            .fold(f64::INFINITY, f64::min)
    })
}

/// Candidate prices and search budget for [`srev_star_opt`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    /// Finite positive candidates kept per item (besides 0 and ∞).
    pub density: usize,
    /// Cross-products with at most this many pricings are searched
    /// exhaustively; larger ones by coordinate ascent.
    pub exhaustive_limit: usize,
    pub max_rounds: usize,
    /// Profiles (evenly spaced) mined for candidate prices.
    pub sample_profiles: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            density: 8,
            exhaustive_limit: 10_000,
            max_rounds: 8,
            sample_profiles: 512,
        }
    }
}

/// Keeps `k` evenly spaced values of a sorted, deduplicated list.
fn thin(values: &[f64], k: usize) -> Vec<f64> {
    if values.len() <= k {
        return values.to_vec();
    }
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![values[values.len() / 2]];
    }
    let mut out: Vec<f64> = (0..k)
        .map(|j| values[(j * (values.len() - 1) + (k - 1) / 2) / (k - 1)])
        .collect();
    out.dedup();
    out
}

/// Per-item candidates: 0, ∞, and average and marginal values
/// `v(S)/|S|`, `v(S) − v(S∖{i})` over small sets and the grand set,
/// thinned to `density` values.
pub fn price_grid(ts: &TypeSpace, cfg: &GridConfig) -> Vec<Vec<f64>> {
    let m = ts.m();
    let full = (1usize << m) - 1;
    let stride = (ts.len() / cfg.sample_profiles.max(1)).max(1);
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); m];
    for idx in (0..ts.len()).step_by(stride) {
        let table = ts.table(idx);
        for (i, cands) in raw.iter_mut().enumerate() {
            let bit = 1usize << i;
            let mut sets = vec![bit, full];
            sets.extend((0..m).filter(|&j| j != i).map(|j| bit | (1 << j)));
            for s in sets {
                let v = table[s];
                if !v.is_finite() {
                    continue;
                }
                cands.push(v / s.count_ones() as f64);
                let rest = table[s & !bit];
                if rest.is_finite() {
                    cands.push(v - rest);
                }
            }
        }
    }
    raw.into_iter()
        .map(|mut c| {
            c.retain(|x| x.is_finite() && *x > 0.0);
            c.sort_by(f64::total_cmp);
            c.dedup();
            let mut grid = vec![0.0];
            grid.extend(thin(&c, cfg.density));
            grid.push(f64::INFINITY);
            grid
        })
        .collect()
}

/// Best pricing found over `grid` (searched exhaustively or by coordinate
/// ascent) and `seeds`, evaluated with [`Indifference::Limit`]. A lower
/// bound on the optimal pessimistic item-pricing revenue.
pub fn srev_star_opt(
    ts: &TypeSpace,
    grid: &[Vec<f64>],
    seeds: &[ItemPricing],
    cfg: &GridConfig,
) -> (ItemPricing, f64) {
    let m = ts.m();
    let eval = |p: &ItemPricing| srev_star_eval_with(ts, p, Indifference::Limit);
    let mut best = (ItemPricing::closed(m), 0.0);
    let consider = |best: &mut (ItemPricing, f64), cand: (ItemPricing, f64)| {
        if cand.1 > best.1 + tol(best.1) {
            *best = cand;
        }
    };
    for s in seeds {
        consider(&mut best, (s.clone(), eval(s)));
    }
    if grid.iter().any(|g| g.is_empty()) || m == 0 {
        return best;
    }

    let total = grid.iter().map(|g| g.len() as f64).product::<f64>();
    if total <= cfg.exhaustive_limit as f64 {
        let pricings: Vec<ItemPricing> = (0..total as usize)
            .map(|mut code| {
                let prices = grid
                    .iter()
                    .map(|g| {
                        let x = g[code % g.len()];
                        code /= g.len();
                        x
                    })
                    .collect();
                ItemPricing::new(prices)
            })
            .collect();
        let revenues = exec::map(&pricings, |p| eval(p));
        for (p, r) in pricings.into_iter().zip(revenues) {
            consider(&mut best, (p, r));
        }
        return best;
    }

    for _ in 0..cfg.max_rounds {
        let before = best.1;
        for i in 0..m {
            let cands: Vec<ItemPricing> = grid[i]
                .iter()
                .map(|&x| {
                    let mut p = best.0.clone();
                    p.prices[i] = x;
                    p
                })
                .collect();
            let revenues = exec::map(&cands, |p| eval(p));
            for (p, r) in cands.into_iter().zip(revenues) {
                consider(&mut best, (p, r));
            }
        }
        if best.1 <= before + tol(before) {
            break;
        }
    }
    best
}
