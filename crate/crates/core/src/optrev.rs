//! Optimal revenue over all truthful mechanisms for a discrete type space,
//! as a linear program over menus of lotteries.
//!
//! Variables are `x_{v,S} ≥ 0` for every type `v` and nonempty `S ⊆ M`
//! (the empty set takes the remaining probability) and a free payment
//! `p_v = p⁺_v − p⁻_v`. Every constraint has the form `… ≤ 0` or `… ≤ 1`,
//! so the zero mechanism is the starting vertex.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::model::{value_capped, Caps, HypergraphPrior, ItemSet, ProfileSet, TypeSpace, WeightProfile};
use crate::simplex::{self, LinearProgram};

/// Constraint residual allowed by [`verify_solution`].
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Allowed gap between a reported and a recomputed objective.
pub const OBJECTIVE_TOL: f64 = 1e-7;
const LOTTERY_TOL: f64 = 1e-9;

/// The revenue LP for a type space, with values normalized to at most one.
#[derive(Clone, Debug)]
pub struct RevenueLP {
    m: usize,
    probs: Vec<f64>,
    scale: f64,
    program: LinearProgram,
}

impl RevenueLP {
    pub fn types(&self) -> usize {
        self.probs.len()
    }

    /// Allocation variables including the empty set, plus one payment per type.
    pub fn num_variables(&self) -> usize {
        self.types() * (1 << self.m) + self.types()
    }

    pub fn ic_rows(&self) -> usize {
        self.types() * self.types().saturating_sub(1)
    }

    pub fn ir_rows(&self) -> usize {
        self.types()
    }

    pub fn simplex_rows(&self) -> usize {
        self.types()
    }

    pub fn program(&self) -> &LinearProgram {
        &self.program
    }
}

/// Builds the LP for an exactly enumerated type space.
pub fn build_lp(ts: &TypeSpace, caps: &Caps) -> Result<RevenueLP> {
    if !ts.set().is_exact() {
        return Err(LabError::Domain("the revenue LP needs an exact type enumeration".into()));
    }
    let n = ts.len();
    let m = ts.m();
    let sets = (1usize << m) - 1;
    let vars = n as f64 * (1u64 << m) as f64 + n as f64;
    if vars > caps.lp_vars as f64 {
        return Err(LabError::capacity("LP variables", vars, caps.lp_vars as f64));
    }
    let rows = (n * n + n) as f64;
    let cells = (rows + 1.0) * (n * sets + 2 * n) as f64 + (rows + 1.0) * (rows + 1.0);
    if cells > caps.lp_cells as f64 {
        return Err(LabError::capacity("LP tableau cells", cells, caps.lp_cells as f64));
    }

    let peak = (0..n).map(|i| ts.grand(i)).fold(0.0, f64::max);
    let scale = if peak > 0.0 { peak } else { 1.0 };
    // Per type, `v(S)/scale` for nonempty `S` (index `S − 1`).
    let values: Vec<Vec<f64>> = (0..n).map(|i| ts.table(i)[1..].iter().map(|v| v / scale).collect()).collect();

    let x = |v: usize, s: usize| v * sets + s;
    let p_plus = |v: usize| n * sets + 2 * v;
    let p_minus = |v: usize| n * sets + 2 * v + 1;

    let mut lp = LinearProgram::new(n * sets + 2 * n);
    for v in 0..n {
        let f = ts.prob(v);
        lp.objective[p_plus(v)] = f;
        lp.objective[p_minus(v)] = -f;
    }
    for v in 0..n {
        lp.add_row((0..sets).map(|s| (x(v, s), 1.0)).collect(), 1.0);
    }
    // IR: p_v − Σ_S v(S) x_{v,S} ≤ 0.
    for v in 0..n {
        let mut row: Vec<(usize, f64)> = vec![(p_plus(v), 1.0), (p_minus(v), -1.0)];
        row.extend((0..sets).filter(|&s| values[v][s] != 0.0).map(|s| (x(v, s), -values[v][s])));
        lp.add_row(row, 0.0);
    }
    // IC: Σ_S v(S) (x_{w,S} − x_{v,S}) + p_v − p_w ≤ 0 for v ≠ w.
    for v in 0..n {
        for w in 0..n {
            if v == w {
                continue;
            }
            let mut row: Vec<(usize, f64)> = vec![
                (p_plus(v), 1.0),
                (p_minus(v), -1.0),
                (p_plus(w), -1.0),
                (p_minus(w), 1.0),
            ];
            for s in 0..sets {
                let a = values[v][s];
                if a != 0.0 {
                    row.push((x(w, s), a));
                    row.push((x(v, s), -a));
                }
            }
            lp.add_row(row, 0.0);
        }
    }
    Ok(RevenueLP {
        m,
        probs: (0..n).map(|i| ts.prob(i)).collect(),
        scale,
        program: lp,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LotteryEntry {
    pub set: ItemSet,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeOutcome {
    pub profile: WeightProfile,
    pub prob: f64,
    pub payment: f64,
    /// Sets received with positive probability, the empty set included.
    pub lottery: Vec<LotteryEntry>,
}

/// An optimal menu: one lottery and payment per type. Serializes to the
/// solution dump format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismSolution {
    pub m: usize,
    pub revenue: f64,
    pub pivots: usize,
    pub types: Vec<TypeOutcome>,
}

impl MechanismSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Pivot budget: generous relative to the tableau size.
fn pivot_budget(lp: &LinearProgram) -> usize {
    50 * (lp.num_vars() + lp.num_rows()) + 1000
}

pub fn solve(lp: &RevenueLP, profiles: &[WeightProfile]) -> Result<MechanismSolution> {
    let sol = simplex::solve(&lp.program, pivot_budget(&lp.program))?;
    let n = lp.types();
    let sets = (1usize << lp.m) - 1;
    let types = (0..n)
        .map(|v| {
            let mut lottery = Vec::new();
            let mut taken = 0.0;
            for s in 0..sets {
                let p = sol.x[v * sets + s];
                if p > LOTTERY_TOL {
                    lottery.push(LotteryEntry {
                        set: ItemSet::from_bits(s as u64 + 1),
                        prob: p,
                    });
                }
                taken += p;
            }
            if 1.0 - taken > LOTTERY_TOL {
                lottery.insert(
                    0,
                    LotteryEntry {
                        set: ItemSet::EMPTY,
                        prob: 1.0 - taken,
                    },
                );
            }
            let payment = (sol.x[n * sets + 2 * v] - sol.x[n * sets + 2 * v + 1]) * lp.scale;
            TypeOutcome {
                profile: profiles[v].clone(),
                prob: lp.probs[v],
                payment,
                lottery,
            }
        })
        .collect();
    Ok(MechanismSolution {
        m: lp.m,
        revenue: sol.objective * lp.scale,
        pivots: sol.pivots,
        types,
    })
}

/// Builds and solves the LP for the prior's exact type space.
pub fn optimal_revenue(prior: &HypergraphPrior, caps: &Caps) -> Result<MechanismSolution> {
    let ts = TypeSpace::exact(prior, caps)?;
    solve_space(&ts, caps)
}

pub fn solve_space(ts: &TypeSpace, caps: &Caps) -> Result<MechanismSolution> {
    let lp = build_lp(ts, caps)?;
    solve(&lp, ts.set().profiles())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub ok: bool,
    /// Largest violation over lottery, IR and IC constraints.
    pub max_residual: f64,
    pub objective_gap: f64,
}

/// Recomputes every constraint from scratch, evaluating each type's value
/// for each set with the direct enumeration in `model` (not the tables used
/// to build the LP).
pub fn verify_solution(prior: &HypergraphPrior, set: &ProfileSet, sol: &MechanismSolution) -> Result<Verification> {
    if sol.types.len() != set.len() {
        return Err(LabError::Domain(format!(
            "solution has {} types, type space has {}",
            sol.types.len(),
            set.len()
        )));
    }
    let feas = prior.feasibility();
    let mut residual: f64 = 0.0;
    // utility[v][w]: type v reporting w.
    let n = sol.types.len();
    let mut worth = vec![vec![0.0; n]; n];
    for (v, profile) in set.profiles().iter().enumerate() {
        for (w, out) in sol.types.iter().enumerate() {
            let mut total = 0.0;
            for e in &out.lottery {
                total += e.prob * value_capped(profile, feas, e.set, usize::MAX)?;
            }
            worth[v][w] = total;
        }
    }
    for (v, out) in sol.types.iter().enumerate() {
        let mass: f64 = out.lottery.iter().map(|e| e.prob).sum();
        residual = residual.max((mass - 1.0).abs());
        for e in &out.lottery {
            residual = residual.max(-e.prob);
        }
        let own = worth[v][v] - out.payment;
        residual = residual.max(-own);
        for (w, other) in sol.types.iter().enumerate() {
            if w != v {
                residual = residual.max(worth[v][w] - other.payment - own);
            }
        }
    }
    let recomputed: f64 = sol.types.iter().zip(set.probs()).map(|(t, p)| p * t.payment).sum();
    let objective_gap = (recomputed - sol.revenue).abs();
    let ok = residual <= FEASIBILITY_TOL && objective_gap <= OBJECTIVE_TOL * sol.revenue.abs().max(1.0);
    Ok(Verification {
        ok,
        max_residual: residual,
        objective_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::brev;
    use crate::model::{DiscreteDist, FeasibilityFamily, Hyperedge};
    use crate::myerson::optimal_posted_price;

    fn edge(items: &[usize]) -> Hyperedge {
        Hyperedge::from_items(items.iter().copied()).unwrap()
    }

    fn dist(pairs: &[(f64, f64)]) -> DiscreteDist {
        DiscreteDist::from_pairs(pairs).unwrap()
    }

    fn prior(m: usize, edges: Vec<(Hyperedge, DiscreteDist)>) -> HypergraphPrior {
        HypergraphPrior::new(m, edges, FeasibilityFamily::All).unwrap()
    }

    #[test]
    fn counts() {
        let caps = Caps::default();
        let one_item = prior(1, vec![(edge(&[0]), dist(&[(1.0, 0.5), (2.0, 0.5)]))]);
        let lp = build_lp(&TypeSpace::exact(&one_item, &caps).unwrap(), &caps).unwrap();
        assert_eq!((lp.num_variables(), lp.ic_rows(), lp.ir_rows()), (6, 2, 2));

        let single = prior(1, vec![(edge(&[0]), DiscreteDist::point_mass(2.0).unwrap())]);
        let lp = build_lp(&TypeSpace::exact(&single, &caps).unwrap(), &caps).unwrap();
        assert_eq!(lp.ic_rows(), 0);

        let half = dist(&[(0.0, 0.5), (1.0, 0.5)]);
        let two = prior(2, vec![(edge(&[0]), half.clone()), (edge(&[1]), half)]);
        let lp = build_lp(&TypeSpace::exact(&two, &caps).unwrap(), &caps).unwrap();
        assert_eq!(lp.num_variables(), 20);
        assert_eq!(lp.program().num_rows(), 4 + 4 + 12);
    }

    #[test]
    fn single_item_optima() {
        let caps = Caps::default();
        let pm = prior(1, vec![(edge(&[0]), DiscreteDist::point_mass(3.0).unwrap())]);
        assert!((optimal_revenue(&pm, &caps).unwrap().revenue - 3.0).abs() < 1e-9);

        let d = dist(&[(1.0, 0.5), (2.0, 0.5)]);
        let p = prior(1, vec![(edge(&[0]), d.clone())]);
        let sol = optimal_revenue(&p, &caps).unwrap();
        assert!((sol.revenue - optimal_posted_price(&d).1).abs() < 1e-9);
    }

    #[test]
    fn verification_catches_corruption() {
        let caps = Caps::default();
        let p = prior(
            2,
            vec![
                (edge(&[0]), dist(&[(0.0, 0.5), (1.0, 0.5)])),
                (edge(&[0, 1]), dist(&[(0.0, 0.5), (2.0, 0.5)])),
            ],
        );
        let ts = TypeSpace::exact(&p, &caps).unwrap();
        let sol = solve_space(&ts, &caps).unwrap();
        assert!(sol.revenue >= brev(&ts).revenue - 1e-9);
        let ok = verify_solution(&p, ts.set(), &sol).unwrap();
        assert!(ok.ok, "{ok:?}");

        let mut bad = sol.clone();
        let richest = (0..bad.types.len()).max_by(|&a, &b| ts.grand(a).total_cmp(&ts.grand(b))).unwrap();
        bad.types[richest].payment += 0.1;
        bad.revenue += 0.1 * ts.prob(richest);
        assert!(!verify_solution(&p, ts.set(), &bad).unwrap().ok);

        let zero = MechanismSolution {
            m: 2,
            revenue: 0.0,
            pivots: 0,
            types: ts
                .set()
                .profiles()
                .iter()
                .zip(ts.set().probs())
                .map(|(w, &prob)| TypeOutcome {
                    profile: w.clone(),
                    prob,
                    payment: 0.0,
                    lottery: vec![LotteryEntry { set: ItemSet::EMPTY, prob: 1.0 }],
                })
                .collect(),
        };
        assert!(verify_solution(&p, ts.set(), &zero).unwrap().ok);
    }

    #[test]
    fn scaling_is_covariant() {
        let caps = Caps::default();
        let p = prior(
            2,
            vec![
                (edge(&[0]), dist(&[(0.0, 0.3), (1.0, 0.7)])),
                (edge(&[1]), dist(&[(1.0, 0.4), (3.0, 0.6)])),
                (edge(&[0, 1]), dist(&[(0.0, 0.5), (2.0, 0.5)])),
            ],
        );
        let a = optimal_revenue(&p, &caps).unwrap().revenue;
        let b = optimal_revenue(&p.scaled(2.0).unwrap(), &caps).unwrap().revenue;
        assert!((2.0 * a - b).abs() < 1e-9);
    }

    #[test]
    fn caps_and_sampling_rejected() {
        let half = dist(&[(0.0, 0.5), (1.0, 0.5)]);
        let p = prior(2, vec![(edge(&[0]), half.clone()), (edge(&[1]), half)]);
        let tight = Caps { lp_vars: 19, ..Caps::default() };
        let ts = TypeSpace::exact(&p, &tight).unwrap();
        assert!(build_lp(&ts, &tight).unwrap_err().is_capacity());

        let sampled = TypeSpace::new(&p, ProfileSet::sampled(&p, 10, 1).unwrap(), &Caps::default()).unwrap();
        assert!(matches!(build_lp(&sampled, &Caps::default()), Err(LabError::Domain(_))));
    }
}
