//! Exact probability mass functions on R^d, keyed by positions rounded to a 1e-9 grid.

use std::collections::BTreeMap;

const GRID: f64 = 1e9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pmf {
    atoms: BTreeMap<Vec<i64>, f64>,
}

fn key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * GRID).round() as i64).collect()
}

impl Pmf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, position: &[f64], p: f64) {
        *self.atoms.entry(key(position)).or_insert(0.0) += p;
    }

    pub fn get(&self, position: &[f64]) -> f64 {
        self.atoms.get(&key(position)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.atoms
            .iter()
            .map(|(k, &p)| (k.iter().map(|&v| v as f64 / GRID).collect(), p))
    }

    /// Largest atom-wise difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &p) in &self.atoms {
            worst = worst.max((p - other.atoms.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, &q) in &other.atoms {
            if !self.atoms.contains_key(k) {
                worst = worst.max(q.abs());
            }
        }
        worst
    }

    /// The atom with the largest difference: (position, p_self, p_other).
    pub fn worst_atom(&self, other: &Pmf) -> Option<(Vec<f64>, f64, f64)> {
        let mut keys: Vec<&Vec<i64>> = self.atoms.keys().chain(other.atoms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let p = self.atoms.get(k).copied().unwrap_or(0.0);
                let q = other.atoms.get(k).copied().unwrap_or(0.0);
                (k, p, q)
            })
            .max_by(|a, b| (a.1 - a.2).abs().total_cmp(&(b.1 - b.2).abs()))
            .map(|(k, p, q)| (k.iter().map(|&v| v as f64 / GRID).collect(), p, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_nearby_positions() {
        let mut p = Pmf::new();
        p.add(&[0.1 + 0.2], 0.5);
        p.add(&[0.3], 0.25);
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(&[0.3]), 0.75);
        let mut q = Pmf::new();
        q.add(&[0.3], 0.5);
        q.add(&[1.0], 0.5);
        assert_eq!(p.max_abs_diff(&q), 0.5);
        assert_eq!(p.worst_atom(&q), Some((vec![1.0], 0.0, 0.5)));
        assert_eq!(q.total(), 1.0);
    }
}
