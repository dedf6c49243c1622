use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

const PMF_SUM_TOL: f64 = 1e-12;

/// A finite-support distribution over non-negative values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscreteDist {
    support: Vec<f64>,
    pmf: Vec<f64>,
}

/// One `(value, probability)` pair of a [`DiscreteDist`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

impl DiscreteDist {
    /// Support must be strictly increasing, finite and non-negative; every
    /// probability positive and the total within 1e-12 of one.
    pub fn new(support: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != pmf.len() {
            return Err(LabError::Invalid(format!(
                "distribution needs matching nonempty support and pmf (got {} and {})",
                support.len(),
                pmf.len()
            )));
        }
        for (i, &x) in support.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(LabError::Invalid(format!("support value {x} is not a finite non-negative number")));
            }
            if i > 0 && x <= support[i - 1] {
                return Err(LabError::Invalid(format!(
                    "support must be strictly increasing ({} then {x})",
                    support[i - 1]
                )));
            }
        }
        for &p in &pmf {
            if !(p > 0.0 && p <= 1.0) {
                return Err(LabError::Invalid(format!("probability {p} outside (0, 1]")));
            }
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(LabError::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDist { support, pmf })
    }

    /// Like [`DiscreteDist::new`] but accepts atoms in any order.
    pub fn from_atoms(mut atoms: Vec<Atom>) -> Result<Self> {
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        let (support, pmf) = atoms.into_iter().map(|a| (a.value, a.prob)).unzip();
        DiscreteDist::new(support, pmf)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        DiscreteDist::from_atoms(pairs.iter().map(|&(value, prob)| Atom { value, prob }).collect())
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        DiscreteDist::new(vec![value], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.support
            .iter()
            .zip(&self.pmf)
            .map(|(&value, &prob)| Atom { value, prob })
    }

    /// Position of `x` in the support (exact match).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.support.iter().position(|&s| s == x)
    }

    /// `Pr[X = 0] = 1`: the edge never contributes.
    pub fn is_zero(&self) -> bool {
        self.support.len() == 1 && self.support[0] == 0.0
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|a| a.value * a.prob).sum()
    }

    /// `Pr[X >= support[i]]`.
    pub fn survival_at(&self, i: usize) -> f64 {
        self.pmf[i..].iter().sum()
    }

    pub fn pr_ge(&self, x: f64) -> f64 {
        self.atoms().filter(|a| a.value >= x).map(|a| a.prob).sum()
    }

    pub fn pr_gt(&self, x: f64) -> f64 {
        self.atoms().filter(|a| a.value > x).map(|a| a.prob).sum()
    }

    pub fn pr_le(&self, x: f64) -> f64 {
        self.atoms().filter(|a| a.value <= x).map(|a| a.prob).sum()
    }

    /// Support index selected by a uniform draw `u ∈ [0, 1)`.
    pub fn quantile_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.pmf.len() - 1
    }

    /// Every support value multiplied by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LabError::Domain(format!("scale factor {alpha} must be positive")));
        }
        DiscreteDist::new(self.support.iter().map(|x| x * alpha).collect(), self.pmf.clone())
    }
}

impl TryFrom<Vec<Atom>> for DiscreteDist {
    type Error = LabError;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        DiscreteDist::from_atoms(atoms)
    }
}

impl From<DiscreteDist> for Vec<Atom> {
    fn from(d: DiscreteDist) -> Self {
        d.atoms().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DiscreteDist::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec![-1.0], vec![1.0]).is_err());
        assert!(DiscreteDist::new(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(DiscreteDist::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(DiscreteDist::from_pairs(&[(2.0, 0.5), (1.0, 0.5)]).is_ok());
    }

    #[test]
    fn tail_probabilities() {
        let d = DiscreteDist::from_pairs(&[(0.0, 0.5), (1.0, 0.25), (2.0, 0.25)]).unwrap();
        assert_eq!(d.pr_gt(0.0), 0.5);
        assert_eq!(d.pr_ge(1.0), 0.5);
        assert_eq!(d.survival_at(2), 0.25);
        assert_eq!(d.pr_le(1.0), 0.75);
        assert_eq!(d.quantile_index(0.6), 1);
        assert!(!d.is_zero());
        assert!(DiscreteDist::point_mass(0.0).unwrap().is_zero());
    }
}
