use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::statistics::ParticleStatistics;

/// One particle species and its momentum grid.
#[derive(Debug, Clone)]
pub struct Species {
    pub label: String,
    pub mass: f64,
    pub statistics: ParticleStatistics,
    pub grid: MomentumGrid,
}

/// `ν̃_kj`: coefficient of `(K_kj − f_k)` in the equation for species `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionFrequencies {
    s: usize,
    nu: Vec<f64>,
}

impl CollisionFrequencies {
    /// Same frequency for every ordered pair including `k = j`.
    pub fn uniform(species: usize, nu: f64) -> Self {
        CollisionFrequencies {
            s: species,
            nu: vec![nu; species * species],
        }
    }

    /// Row-major `S × S` matrix.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let s = rows.len();
        if rows.iter().any(|r| r.len() != s) {
            return Err(Error::Config("collision frequency matrix must be square".into()));
        }
        let nu: Vec<f64> = rows.into_iter().flatten().collect();
        let out = CollisionFrequencies { s, nu };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..self.s {
            for j in 0..self.s {
                let v = self.get(k, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Config(format!("collision frequency nu({},{}) = {v} is invalid", k + 1, j + 1)));
                }
                if k != j && v != self.get(j, k) {
                    return Err(Error::Config(format!(
                        "collision frequencies must be symmetric: nu({},{}) = {v} but nu({},{}) = {}",
                        k + 1,
                        j + 1,
                        j + 1,
                        k + 1,
                        self.get(j, k)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn species(&self) -> usize {
        self.s
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.nu[k * self.s + j]
    }

    pub fn set(&mut self, k: usize, j: usize, v: f64) {
        self.nu[k * self.s + j] = v;
    }

    /// `Σ_j ν̃_kj` including `j = k`.
    pub fn row_sum(&self, k: usize) -> f64 {
        (0..self.s).map(|j| self.get(k, j)).sum()
    }

    /// `Σ_{j≠k} ν̃_kj`.
    pub fn cross_sum(&self, k: usize) -> f64 {
        (0..self.s).filter(|&j| j != k).map(|j| self.get(k, j)).sum()
    }
}

/// Species list with their pairwise collision frequencies.
#[derive(Debug, Clone)]
pub struct SpeciesSet {
    pub species: Vec<Species>,
    pub freqs: CollisionFrequencies,
}

impl SpeciesSet {
    pub fn new(species: Vec<Species>, freqs: CollisionFrequencies) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::Config("at least one species is required".into()));
        }
        if freqs.species() != species.len() {
            return Err(Error::Config(format!(
                "{} species but a {}x{} frequency matrix",
                species.len(),
                freqs.species(),
                freqs.species()
            )));
        }
        freqs.validate()?;
        for sp in &species {
            if !(sp.mass > 0.0) {
                return Err(Error::Config(format!("species '{}' has non-positive mass", sp.label)));
            }
        }
        Ok(SpeciesSet { species, freqs })
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    /// Unordered pairs `(k, j)`, `k < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let s = self.len();
        (0..s).flat_map(|k| (k + 1..s).map(move |j| (k, j))).collect()
    }

    /// Position of the unordered pair in [`SpeciesSet::pairs`].
    pub fn pair_index(&self, k: usize, j: usize) -> usize {
        let (a, b) = if k < j { (k, j) } else { (j, k) };
        let s = self.len();
        a * (2 * s - a - 1) / 2 + (b - a - 1)
    }

    pub fn nodes(&self, k: usize) -> usize {
        self.species[k].grid.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sp(label: &str) -> Species {
        Species {
            label: label.into(),
            mass: 1.0,
            statistics: ParticleStatistics::Classical,
            grid: MomentumGrid::with_intervals(1.0, Vector3::zeros(), 1.0, 4).unwrap(),
        }
    }

    #[test]
    fn pair_indexing() {
        let set = SpeciesSet::new(vec![sp("a"), sp("b"), sp("c"), sp("d")], CollisionFrequencies::uniform(4, 1.0)).unwrap();
        let pairs = set.pairs();
        assert_eq!(pairs.len(), 6);
        for (i, (k, j)) in pairs.iter().enumerate() {
            assert_eq!(set.pair_index(*k, *j), i);
            assert_eq!(set.pair_index(*j, *k), i);
        }
    }

    #[test]
    fn asymmetric_frequencies_rejected() {
        let r = CollisionFrequencies::from_matrix(vec![vec![1.0, 2.0], vec![1.0, 1.0]]);
        assert!(matches!(r, Err(Error::Config(_))));
        let f = CollisionFrequencies::from_matrix(vec![vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(f.row_sum(1), 5.0);
        assert_eq!(f.cross_sum(1), 2.0);
    }
}
