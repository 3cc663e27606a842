//! Random recursive forest with Bernoulli bond percolation and cluster spins.
//!
//! Vertex v ≥ 2 attaches to a uniform earlier vertex and keeps that edge with
//! probability α. Each cluster carries an independent μ-spin on its smallest
//! label, and S_n = Σ |c_{i,n}|·Θ_i has the law of the reinforced walk.

mod dsu;
mod exact;

pub use dsu::DisjointSets;
pub use exact::{exact_forest_pmf, FOREST_EXACT_MAX_N};

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::StepDistribution;

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    parent: Vec<u32>,
    kept: Vec<bool>,
    sets: DisjointSets,
    sizes: Vec<u64>,
    clusters: usize,
}

impl Default for Forest {
    fn default() -> Self {
        Self::new()
    }
}

impl Forest {
    /// The forest F_1: one vertex labelled 1.
    pub fn new() -> Self {
        let mut sets = DisjointSets::new();
        sets.push();
        Self {
            parent: vec![0],
            kept: vec![false],
            sets,
            sizes: vec![1],
            clusters: 1,
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut f = Self::new();
        f.parent.reserve(n);
        f.kept.reserve(n);
        f.sizes.reserve(n);
        f
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Adds vertex n + 1 below `parent`, keeping the edge if `kept`.
    pub fn attach(&mut self, parent: u32, kept: bool) -> Result<u32> {
        let v = self.n() as u32 + 1;
        if parent == 0 || parent >= v {
            return Err(Error::InvalidParameter(format!(
                "vertex {v} cannot attach to {parent}"
            )));
        }
        self.sets.push();
        self.parent.push(parent);
        self.kept.push(kept);
        if kept {
            let root = self.sets.union(parent, v);
            self.sizes[root as usize - 1] += 1;
            self.sizes.push(0);
        } else {
            self.sizes.push(1);
            self.clusters += 1;
        }
        Ok(v)
    }

    /// Builds a forest from parent labels (0 for vertex 1) and kept flags.
    pub fn from_parts(parents: &[u32], kept: &[bool]) -> Result<Self> {
        if parents.is_empty() || parents.len() != kept.len() {
            return Err(Error::InvalidParameter("parents and kept flags must have equal, nonzero length".into()));
        }
        let mut f = Self::with_capacity(parents.len());
        for (&p, &k) in parents.iter().zip(kept).skip(1) {
            f.attach(p, k)?;
        }
        Ok(f)
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        match self.parent[v as usize - 1] {
            0 => None,
            p => Some(p),
        }
    }

    /// ξ_v; false for vertex 1 by convention.
    pub fn kept(&self, v: u32) -> bool {
        self.kept[v as usize - 1]
    }

    pub fn root(&mut self, v: u32) -> u32 {
        self.sets.find(v)
    }

    /// |c_{i,n}|, zero unless i is a root.
    pub fn cluster_size(&self, i: u32) -> u64 {
        self.sizes[i as usize - 1]
    }

    pub fn cluster_sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn roots(&self) -> impl Iterator<Item = u32> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(i, _)| i as u32 + 1)
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    /// Line-oriented dump: `# n=<n> alpha=<alpha>` then `v parent kept` per vertex ≥ 2.
    pub fn write_text<W: Write>(&self, mut w: W, alpha: f64) -> Result<()> {
        writeln!(w, "# n={} alpha={alpha}", self.n())?;
        for v in 2..=self.n() as u32 {
            writeln!(w, "{v} {} {}", self.parent[v as usize - 1], u8::from(self.kept(v)))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<(Self, f64)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty forest file".into()))??;
        let mut n = None;
        let mut alpha = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = field.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("alpha=") {
                alpha = v.parse::<f64>().ok();
            }
        }
        let (Some(n), Some(alpha)) = (n, alpha) else {
            return Err(Error::Format(format!("bad forest header: {header}")));
        };
        let mut f = Self::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("line {}: expected `v parent kept`, got {line:?}", i + 2));
            if parts.len() != 3 {
                return Err(bad());
            }
            let v: u32 = parts[0].parse().map_err(|_| bad())?;
            let p: u32 = parts[1].parse().map_err(|_| bad())?;
            let k = match parts[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            if v as usize != f.n() + 1 {
                return Err(bad());
            }
            f.attach(p, k)?;
        }
        if f.n() != n {
            return Err(Error::Format(format!("header says n={n} but {} vertices found", f.n())));
        }
        Ok((f, alpha))
    }
}

/// Grows F_n: vertex v picks its parent uniformly in {1..v−1}, then keeps the edge with probability α.
pub fn grow_forest<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<Forest> {
    if n == 0 {
        return Err(Error::InvalidParameter("forest needs at least one vertex".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mut f = Forest::with_capacity(n);
    for v in 2..=n as u32 {
        let parent = rng.random_range(1..v);
        let kept = rng.random::<f64>() < alpha;
        f.attach(parent, kept)?;
    }
    Ok(f)
}

/// Spins Θ_1..Θ_n, one μ-draw per label.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinAssignment {
    d: usize,
    spins: Vec<f64>,
}

impl SpinAssignment {
    pub fn sample<R: Rng + ?Sized>(n: usize, dist: &StepDistribution, rng: &mut R) -> Self {
        let d = dist.dim();
        let mut spins = vec![0.0; n * d];
        for chunk in spins.chunks_exact_mut(d) {
            dist.sample_into(rng, chunk);
        }
        Self { d, spins }
    }

    pub fn from_vectors(vs: &[Vec<f64>]) -> Result<Self> {
        let d = vs.first().map(Vec::len).unwrap_or(0);
        if d == 0 || vs.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidParameter("spins must be nonempty vectors of one dimension".into()));
        }
        Ok(Self { d, spins: vs.concat() })
    }

    pub fn len(&self) -> usize {
        self.spins.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spin(&self, i: u32) -> &[f64] {
        let k = i as usize - 1;
        &self.spins[k * self.d..(k + 1) * self.d]
    }
}

/// S_n = Σ_i |c_{i,n}| Θ_i.
pub fn walk_from_forest(forest: &Forest, spins: &SpinAssignment) -> Result<Vec<f64>> {
    truncated_sum(forest, spins, forest.n())
}

fn truncated_sum(forest: &Forest, spins: &SpinAssignment, k: usize) -> Result<Vec<f64>> {
    if spins.len() < forest.n() {
        return Err(Error::InvalidParameter(format!(
            "{} spins for {} vertices",
            spins.len(),
            forest.n()
        )));
    }
    let mut s = vec![0.0; spins.d];
    for i in forest.roots().take_while(|&i| i as usize <= k) {
        let c = forest.cluster_size(i) as f64;
        for (x, t) in s.iter_mut().zip(spins.spin(i)) {
            *x += c * t;
        }
    }
    Ok(s)
}

/// Normalised cluster sizes |c_{i,n}|/n^α at the requested times, for every
/// root present at the largest time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTrace {
    pub ns: Vec<u64>,
    pub roots: Vec<u32>,
    /// `values[r][k]` is the normalised size of `roots[r]` at `ns[k]`.
    pub values: Vec<Vec<f64>>,
}

impl ClusterTrace {
    pub fn series(&self, root: u32) -> Option<&[f64]> {
        self.roots
            .iter()
            .position(|&r| r == root)
            .map(|k| self.values[k].as_slice())
    }
}

pub fn cluster_size_trace<R: Rng + ?Sized>(
    ns: &[u64],
    alpha: f64,
    rng: &mut R,
) -> Result<ClusterTrace> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("times must be positive and strictly increasing".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let last = *ns.last().unwrap() as usize;
    let mut f = Forest::with_capacity(last);
    let mut snapshots: Vec<Vec<u64>> = Vec::with_capacity(ns.len());
    let mut next = 0;
    if ns[0] == 1 {
        snapshots.push(f.cluster_sizes().to_vec());
        next = 1;
    }
    for v in 2..=last as u32 {
        let parent = rng.random_range(1..v);
        let kept = rng.random::<f64>() < alpha;
        f.attach(parent, kept)?;
        if next < ns.len() && v as u64 == ns[next] {
            snapshots.push(f.cluster_sizes().to_vec());
            next += 1;
        }
    }
    let roots: Vec<u32> = f.roots().collect();
    let values = roots
        .iter()
        .map(|&i| {
            ns.iter()
                .zip(&snapshots)
                .map(|(&n, snap)| {
                    let size = snap.get(i as usize - 1).copied().unwrap_or(0);
                    size as f64 / (n as f64).powf(alpha)
                })
                .collect()
        })
        .collect();
    Ok(ClusterTrace { ns: ns.to_vec(), roots, values })
}

/// Least-squares slope of log|x_{k+1} − x_k| against k, ignoring zero
/// differences. Negative means the successive differences shrink.
pub fn difference_decay_slope(series: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .windows(2)
        .enumerate()
        .filter_map(|(k, w)| {
            let d = (w[1] - w[0]).abs();
            (d > 0.0).then(|| (k as f64, d.ln()))
        })
        .collect();
    crate::stats::ols_slope(&pts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WEstimate {
    /// S_n / n^α.
    pub full: Vec<f64>,
    /// Σ_{i ≤ K} (1 − ξ_i)(|c_{i,n}|/n^α) Θ_i.
    pub truncated: Vec<f64>,
}

pub fn estimate_w<R: Rng + ?Sized>(
    alpha: f64,
    dist: &StepDistribution,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<WEstimate> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the superdiffusive limit needs alpha in (1/2, 1], got {alpha}"
        )));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("truncation {k} exceeds n = {n}")));
    }
    let forest = grow_forest(n, alpha, rng)?;
    let spins = SpinAssignment::sample(n, dist, rng);
    let scale = (n as f64).powf(alpha);
    let full = walk_from_forest(&forest, &spins)?.into_iter().map(|x| x / scale).collect();
    let truncated = truncated_sum(&forest, &spins, k)?.into_iter().map(|x| x / scale).collect();
    Ok(WEstimate { full, truncated })
}
