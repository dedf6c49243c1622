//! Dense-tableau primal simplex for `max cᵀx s.t. Ax ≤ b, x ≥ 0` with
//! `b ≥ 0`, so the all-slack basis is feasible and no phase one is needed.
//!
//! Entering columns are chosen by largest reduced cost. After a run of
//! degenerate pivots the rule switches to smallest index (Bland) until the
//! objective moves again, which rules out cycling. All ties go to the
//! smallest index, so the pivot sequence is fully deterministic.

use crate::error::{LabError, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
/// Steps below this count as degenerate.
const STEP_TOL: f64 = 1e-12;
/// Primal infeasibility the ratio test may accept to get a larger pivot.
const FEAS_TOL: f64 = 1e-9;
/// Pivots between rebuilds of the tableau from the original data.
const REINVERT_EVERY: usize = 1000;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

/// A row of `A` as `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, row: SparseRow, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Cells of the dense tableau this program needs.
    pub fn tableau_cells(&self) -> f64 {
        (self.num_rows() as f64 + 1.0) * (self.num_vars() + self.num_rows() + 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    pub bland_pivots: usize,
}

struct Tableau {
    width: usize,
    cells: Vec<f64>,
    /// Basic variable of each constraint row.
    basis: Vec<usize>,
    rows: usize,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    /// The objective row holds reduced costs; its last cell is `-z`.
    fn objective_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.cells[r * w + c] = 1.0;
        let nonzero: Vec<usize> = (0..w).filter(|&j| self.cells[r * w + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nonzero.iter().map(|&j| self.cells[r * w + j]).collect();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let factor = self.cells[i * w + c];
            if factor == 0.0 {
                continue;
            }
            let base = i * w;
            for (&j, &p) in nonzero.iter().zip(&pivot_row) {
                self.cells[base + j] -= factor * p;
            }
            self.cells[base + c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Recomputes the tableau for the current basis from `original` by
    /// Gaussian elimination with partial pivoting, discarding accumulated
    /// rounding. Leaves the tableau alone if the basis looks singular.
    fn reinvert(&mut self, original: &[f64]) -> bool {
        let m = self.rows;
        let mut fresh = Tableau {
            width: self.width,
            cells: original.to_vec(),
            basis: (self.width - 1 - m..self.width - 1).collect(),
            rows: m,
        };
        let mut cols = self.basis.clone();
        cols.sort_unstable();
        let mut done = vec![false; m];
        for c in cols {
            let Some((r, a)) = (0..m)
                .filter(|&i| !done[i])
                .map(|i| (i, fresh.at(i, c).abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            else {
                return false;
            };
            if a < PIVOT_TOL {
                return false;
            }
            fresh.pivot(r, c);
            done[r] = true;
        }
        *self = fresh;
        true
    }
}

/// Solves the program, failing with a solver error if it is unbounded,
/// malformed or does not converge within `max_pivots`.
pub fn solve(lp: &LinearProgram, max_pivots: usize) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    if lp.rhs.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
        return Err(LabError::Solver("right-hand sides must be finite and non-negative".into()));
    }
    let width = n + m + 1;
    let mut cells = vec![0.0; (m + 1) * width];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in row {
            if j >= n || !a.is_finite() {
                return Err(LabError::Solver(format!("bad coefficient ({i}, {j}) = {a}")));
            }
            cells[i * width + j] += a;
        }
        cells[i * width + n + i] = 1.0;
        cells[i * width + width - 1] = lp.rhs[i];
    }
    for (j, &c) in lp.objective.iter().enumerate() {
        cells[m * width + j] = c;
    }
    let original = cells.clone();
    let mut t = Tableau {
        width,
        cells,
        basis: (n..n + m).collect(),
        rows: m,
    };

    let mut pivots = 0;
    let mut bland_pivots = 0;
    let mut degenerate = 0;
    let mut fresh = false;
    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let obj = t.row(t.objective_row());
        let entering = if bland {
            (0..width - 1).find(|&j| obj[j] > COST_TOL)
        } else {
            let mut best: Option<usize> = None;
            for j in 0..width - 1 {
                if obj[j] > COST_TOL && best.map_or(true, |b| obj[j] > obj[b]) {
                    best = Some(j);
                }
            }
            best
        };
        let Some(c) = entering else {
            // Confirm optimality on a freshly rebuilt tableau.
            if pivots > 0 && !fresh && t.reinvert(&original) {
                fresh = true;
                continue;
            }
            break;
        };

        // Harris ratio test. Pass one bounds the step allowing each basic
        // variable to go `FEAS_TOL` negative; pass two takes, among rows
        // within that bound, the largest pivot element (Bland: the smallest
        // basic index), so tiny pivots are avoided.
        let mut bound = f64::INFINITY;
        for i in 0..m {
            let a = t.at(i, c);
            if a > PIVOT_TOL {
                bound = bound.min((t.at(i, width - 1).max(0.0) + FEAS_TOL) / a);
            }
        }
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t.at(i, c);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = t.at(i, width - 1).max(0.0) / a;
            if ratio > bound {
                continue;
            }
            let better = match leave {
                None => true,
                Some((r, _)) if bland => t.basis[i] < t.basis[r],
                Some((r, _)) => a > t.at(r, c) || (a == t.at(r, c) && t.basis[i] < t.basis[r]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(LabError::Solver(format!("objective unbounded along column {c}")));
        };
        if pivots >= max_pivots {
            return Err(LabError::Solver(format!(
                "no convergence after {pivots} pivots ({m} rows, {n} columns)"
            )));
        }
        if ratio <= STEP_TOL {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        if bland {
            bland_pivots += 1;
        }
        t.pivot(r, c);
        let rhs = t.at(r, width - 1);
        if rhs < 0.0 {
            t.cells[r * width + width - 1] = 0.0;
        }
        pivots += 1;
        fresh = false;
        if pivots % REINVERT_EVERY == 0 {
            fresh = t.reinvert(&original);
        }
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.at(i, width - 1).max(0.0);
        }
    }
    let objective = x.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots,
        bland_pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(c: &[f64], a: &[&[f64]], b: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(c.len());
        lp.objective = c.to_vec();
        for (row, &rhs) in a.iter().zip(b) {
            lp.add_row(row.iter().copied().enumerate().filter(|x| x.1 != 0.0).collect(), rhs);
        }
        lp
    }

    #[test]
    fn textbook() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let lp = dense(&[3.0, 5.0], &[&[1.0, 0.0], &[0.0, 2.0], &[3.0, 2.0]], &[4.0, 12.0, 18.0]);
        let s = solve(&lp, 100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Cycles under the pure largest-coefficient rule; optimum 1/20.
        let lp = dense(
            &[0.75, -150.0, 0.02, -6.0],
            &[&[0.25, -60.0, -0.04, 9.0], &[0.5, -90.0, -0.02, 3.0], &[0.0, 0.0, 1.0, 0.0]],
            &[0.0, 0.0, 1.0],
        );
        let s = solve(&lp, 1000).unwrap();
        assert!((s.objective - 0.05).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_bad_rhs() {
        let lp = dense(&[1.0, 0.0], &[&[0.0, 1.0]], &[1.0]);
        assert!(matches!(solve(&lp, 100), Err(LabError::Solver(_))));
        let lp = dense(&[1.0], &[&[1.0]], &[-1.0]);
        assert!(solve(&lp, 100).is_err());
    }

    #[test]
    fn empty_program() {
        let s = solve(&LinearProgram::new(3), 10).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.x, vec![0.0; 3]);
    }

    /// Best vertex by brute force: every choice of `n` tight constraints
    /// among the rows and the bounds `x ≥ 0`.
    fn vertex_oracle(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = c.len();
        let mut cons: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            cons.push((e, 0.0));
        }
        let k = cons.len();
        let mut best = f64::NEG_INFINITY;
        let mut choose = vec![0usize; n];
        fn next(choose: &mut [usize], k: usize) -> bool {
            let n = choose.len();
            let mut i = n;
            while i > 0 {
                i -= 1;
                if choose[i] < k - n + i {
                    choose[i] += 1;
                    for j in i + 1..n {
                        choose[j] = choose[j - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }
        for (i, v) in choose.iter_mut().enumerate() {
            *v = i;
        }
        loop {
            // Gaussian elimination on the chosen tight system.
            let mut m: Vec<Vec<f64>> = choose
                .iter()
                .map(|&r| {
                    let mut row = cons[r].0.clone();
                    row.push(cons[r].1);
                    row
                })
                .collect();
            let mut ok = true;
            for col in 0..n {
                let p = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
                if m[p][col].abs() < 1e-9 {
                    ok = false;
                    break;
                }
                m.swap(col, p);
                for r in 0..n {
                    if r != col {
                        let f = m[r][col] / m[col][col];
                        for j in col..=n {
                            m[r][j] -= f * m[col][j];
                        }
                    }
                }
            }
            if ok {
                let x: Vec<f64> = (0..n).map(|i| m[i][n] / m[i][i]).collect();
                let feasible = cons
                    .iter()
                    .all(|(row, rhs)| row.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() <= rhs + 1e-7);
                if feasible {
                    best = best.max(c.iter().zip(&x).map(|(c, x)| c * x).sum());
                }
            }
            if !next(&mut choose, k) {
                break;
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_vertex_enumeration(
            n in 1usize..=3,
            rows in proptest::collection::vec(
                (proptest::collection::vec(-3i32..=4, 3), 0i32..=6), 1..=4),
            c in proptest::collection::vec(-2i32..=5, 3),
        ) {
            // A bounding row keeps every instance bounded.
            let mut a: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r[..n].iter().map(|&v| v as f64).collect()).collect();
            let mut b: Vec<f64> = rows.iter().map(|(_, rhs)| *rhs as f64).collect();
            a.push(vec![1.0; n]);
            b.push(10.0);
            let c: Vec<f64> = c[..n].iter().map(|&v| v as f64).collect();
            let refs: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
            let s = solve(&dense(&c, &refs, &b), 10_000).unwrap();
            let oracle = vertex_oracle(&c, &a, &b);
            prop_assert!((s.objective - oracle).abs() < 1e-7, "simplex {} vs oracle {}", s.objective, oracle);
            for (row, rhs) in a.iter().zip(&b) {
                let lhs: f64 = row.iter().zip(&s.x).map(|(a, x)| a * x).sum();
                prop_assert!(lhs <= rhs + 1e-9);
            }
        }
    }
}
