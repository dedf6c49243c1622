//! Single-parameter machinery: discrete virtual values, ironing, posted
//! prices, the copies benchmark and its randomized per-edge pricing.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::model::{DiscreteDist, Hyperedge, HypergraphPrior, ProfileSet};

/// Relative slack under which two revenues count as tied.
const TIE_TOL: f64 = 1e-12;

/// Virtual and ironed virtual values at each support point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VirtualValueTable {
    support: Vec<f64>,
    pmf: Vec<f64>,
    phi: Vec<f64>,
    phi_bar: Vec<f64>,
}

impl VirtualValueTable {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_bar(&self) -> &[f64] {
        &self.phi_bar
    }

    fn index(&self, x: f64) -> Result<usize> {
        self.support
            .iter()
            .position(|&s| s == x)
            .ok_or_else(|| LabError::Domain(format!("{x} is not a support point")))
    }

    pub fn phi_at(&self, x: f64) -> Result<f64> {
        Ok(self.phi[self.index(x)?])
    }

    pub fn phi_bar_at(&self, x: f64) -> Result<f64> {
        Ok(self.phi_bar[self.index(x)?])
    }

    /// Index of the least support point whose ironed virtual value is at
    /// least `t`, if any.
    pub fn first_at_least(&self, t: f64) -> Option<usize> {
        self.phi_bar.iter().position(|&v| v >= t)
    }

    /// The law of `max(0, phi_bar(X))` as sorted `(value, prob)` atoms.
    pub fn copies_variable(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.support.len());
        for (&v, &p) in self.phi_bar.iter().zip(&self.pmf) {
            let y = v.max(0.0);
            match out.last_mut() {
                Some(last) if last.0 == y => last.1 += p,
                _ => out.push((y, p)),
            }
        }
        out
    }
}

fn raw_virtual_values(dist: &DiscreteDist) -> Vec<f64> {
    let x = dist.support();
    let f = dist.pmf();
    let n = x.len();
    let mut phi = vec![0.0; n];
    let mut above = 0.0;
    for k in (0..n).rev() {
        phi[k] = if k + 1 == n {
            x[k]
        } else {
            x[k] - (x[k + 1] - x[k]) * above / f[k]
        };
        above += f[k];
    }
    phi
}

/// `phi(x) = x − (x⁺ − x)·Pr[X > x]/f(x)`, with `x⁺` the next support point.
pub fn virtual_value(dist: &DiscreteDist, x: f64) -> Result<f64> {
    let k = dist
        .index_of(x)
        .ok_or_else(|| LabError::Domain(format!("{x} is not in the support")))?;
    Ok(raw_virtual_values(dist)[k])
}

/// Irons by pooling adjacent violators of `phi` weighted by the pmf, which
/// yields the slopes of the concave envelope of the revenue curve.
pub fn iron(dist: &DiscreteDist) -> VirtualValueTable {
    let phi = raw_virtual_values(dist);
    let pmf = dist.pmf();
    // (weighted sum, weight, points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(phi.len());
    for (&v, &w) in phi.iter().zip(pmf) {
        blocks.push((v * w, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, n1) = blocks[blocks.len() - 1];
            let (s0, w0, n0) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push((s0 + s1, w0 + w1, n0 + n1));
        }
    }
    let mut phi_bar = Vec::with_capacity(phi.len());
    for (s, w, n) in blocks {
        // Unpooled points keep their exact virtual value.
        let level = if n == 1 { phi[phi_bar.len()] } else { s / w };
        phi_bar.extend(std::iter::repeat(level).take(n));
    }
    VirtualValueTable {
        support: dist.support().to_vec(),
        pmf: pmf.to_vec(),
        phi,
        phi_bar,
    }
}

/// Best take-it-or-leave-it price for weighted values, searched over the
/// values themselves; ties go to the lower price. Values need not be sorted
/// or distinct and weights need not sum to one.
pub fn best_price(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut above: f64 = weights.iter().sum();
    let (mut price, mut revenue) = (0.0, 0.0f64);
    let mut i = 0;
    while i < order.len() {
        let x = values[order[i]];
        let rev = x * above;
        if rev > revenue + TIE_TOL * revenue.max(1.0) {
            price = x;
            revenue = rev;
        }
        while i < order.len() && values[order[i]] == x {
            above -= weights[order[i]];
            i += 1;
        }
    }
    if revenue == 0.0 {
        price = 0.0;
    }
    (price, revenue)
}

/// `(price, revenue)` maximizing `p · Pr[X ≥ p]` over the support.
pub fn optimal_posted_price(dist: &DiscreteDist) -> (f64, f64) {
    best_price(dist.support(), dist.pmf())
}

/// Ironed tables for every active edge, in edge order.
pub fn edge_tables(prior: &HypergraphPrior) -> Vec<(Hyperedge, VirtualValueTable)> {
    prior.active_dists().map(|(e, d)| (e, iron(d))).collect()
}

/// `E[max_T max(0, phi_bar_T(w(T)))]`, computed exactly from the product of
/// the per-edge CDFs; no enumeration is needed.
pub fn opt_copies(prior: &HypergraphPrior) -> f64 {
    let vars: Vec<_> = edge_tables(prior).iter().map(|(_, t)| t.copies_variable()).collect();
    let mut levels: Vec<f64> = vars.iter().flatten().map(|a| a.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let cdf = |y: f64| -> f64 {
        vars.iter()
            .map(|v| v.iter().filter(|a| a.0 <= y).map(|a| a.1).sum::<f64>())
            .product()
    };
    let mut prev = 0.0;
    let mut total = 0.0;
    for y in levels {
        let c = cdf(y);
        total += y * (c - prev);
        prev = c;
    }
    total
}

/// The same expectation as [`opt_copies`], averaged over a profile set.
pub fn opt_copies_over(prior: &HypergraphPrior, set: &ProfileSet) -> f64 {
    let tables = edge_tables(prior);
    set.expect(|w| {
        tables
            .iter()
            .map(|(e, t)| {
                let k = t.support.iter().position(|&s| s == w.weight(*e)).unwrap_or(0);
                t.phi_bar[k].max(0.0)
            })
            .fold(0.0, f64::max)
    })
}

/// One edge's randomized price: threshold `low_threshold` (with price
/// `low_price`) with probability `low_prob`, otherwise `high_threshold`
/// (price `high_price`). An infinite threshold or price means no sale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgePricing {
    pub edge: Hyperedge,
    /// Probability that this edge's copy holds the maximal ironed value.
    pub share: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub low_prob: f64,
    pub low_price: f64,
    pub high_price: f64,
    /// `Pr[max(0, phi_bar) ≥ threshold]` averaged over the randomization.
    pub threshold_prob: f64,
    /// `E[p · Pr[w ≥ p]]` over the randomization.
    pub revenue: f64,
    /// `E[Pr[w ≥ p]]` over the randomization.
    pub sale_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomizedEdgePricing {
    pub q: f64,
    pub edges: Vec<EdgePricing>,
}

impl RandomizedEdgePricing {
    pub fn total_revenue(&self) -> f64 {
        self.edges.iter().map(|e| e.revenue).sum()
    }

    pub fn total_sale_prob(&self) -> f64 {
        self.edges.iter().map(|e| e.sale_prob).sum()
    }
}

/// Probability that each variable is the maximum, ties going to the
/// earliest variable.
fn max_shares(vars: &[Vec<(f64, f64)>]) -> Vec<f64> {
    let below = |v: &[(f64, f64)], y: f64, strict: bool| -> f64 {
        v.iter()
            .filter(|a| if strict { a.0 < y } else { a.0 <= y })
            .map(|a| a.1)
            .sum()
    };
    (0..vars.len())
        .map(|j| {
            vars[j]
                .iter()
                .map(|&(y, p)| {
                    let mut pr = p;
                    for (i, v) in vars.iter().enumerate() {
                        if i != j {
                            pr *= below(v, y, i < j);
                        }
                    }
                    pr
                })
                .sum()
        })
        .collect()
}

/// Randomized per-edge prices that sell with total probability at most `q`
/// while recovering a `q` fraction of the copies benchmark.
///
/// Edge `T` gets a threshold `t` on `X_T = max(0, phi_bar_T)`, mixed between
/// two adjacent atoms so that `Pr[X_T ≥ t] = q · q_T`, and the price is the
/// least value whose ironed virtual value reaches `t`.
pub fn cpp_prices(prior: &HypergraphPrior, q: f64) -> Result<RandomizedEdgePricing> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(LabError::Domain(format!("q = {q} must lie in (0, 1]")));
    }
    let tables = edge_tables(prior);
    let vars: Vec<_> = tables.iter().map(|(_, t)| t.copies_variable()).collect();
    let shares = max_shares(&vars);

    let edges = tables
        .iter()
        .zip(&vars)
        .zip(&shares)
        .map(|(((edge, table), x), &share)| {
            let target = q * share;
            // survival[k] = Pr[X ≥ x[k]]; survival[len] = 0 for the "never" threshold.
            let mut survival = vec![0.0; x.len() + 1];
            for k in (0..x.len()).rev() {
                survival[k] = survival[k + 1] + x[k].1;
            }
            let mut k = x.len() - 1;
            while k > 0 && survival[k] < target {
                k -= 1;
            }
            let (s_lo, s_hi) = (survival[k], survival[k + 1]);
            let low_prob = if s_lo > s_hi {
                ((target - s_hi) / (s_lo - s_hi)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let low_threshold = x[k].0;
            let high_threshold = x.get(k + 1).map_or(f64::INFINITY, |a| a.0);

            let price_of = |t: f64| -> (f64, f64) {
                match table.first_at_least(t) {
                    Some(i) if t.is_finite() => (table.support[i], table.pmf[i..].iter().sum()),
                    _ => (f64::INFINITY, 0.0),
                }
            };
            let (low_price, low_sell) = price_of(low_threshold);
            let (high_price, high_sell) = price_of(high_threshold);
            let rev = |p: f64, s: f64| if s > 0.0 { p * s } else { 0.0 };
            EdgePricing {
                edge: *edge,
                share,
                low_threshold,
                high_threshold,
                low_prob,
                low_price,
                high_price,
                threshold_prob: low_prob * s_lo + (1.0 - low_prob) * s_hi,
                revenue: low_prob * rev(low_price, low_sell) + (1.0 - low_prob) * rev(high_price, high_sell),
                sale_prob: low_prob * low_sell + (1.0 - low_prob) * high_sell,
            }
        })
        .collect();
    Ok(RandomizedEdgePricing { q, edges })
}
