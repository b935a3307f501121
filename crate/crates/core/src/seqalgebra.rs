//! Sequences of n-particle operators and their ⊛-algebra.
//!
//! A sequence holds a scalar vacuum component and matrices for `n = 1..=N`.
//! Every product over a set partition is symmetrized with `S_n` from the left,
//! after the factors have been placed on their labels.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::partitions::{factorial, mobius_weight, partitions_of, partitions_of_items, subsets, ClusterSet};
use crate::tensorspace::{
    embed_many, max_abs_diff, scalar_matrix, symmetrizer, trace_norm, trace_out_last, CMatrix, Space, Statistics, ONE,
    ZERO,
};

/// Tolerance for the vacuum preconditions of [`exp_star`] and [`ln_star`].
const VACUUM_TOL: f64 = 1e-12;

/// The n-particle spaces for `n ≤ cutoff` under a fixed statistics, with cached symmetrizers.
#[derive(Debug, Clone)]
pub struct FockSpace {
    space: Space,
    cutoff: usize,
    stats: Statistics,
    symmetrizers: Vec<CMatrix>,
}

impl FockSpace {
    /// Fails with a budget error when `d^cutoff` exceeds the space's budget.
    pub fn new(space: Space, cutoff: usize, stats: Statistics) -> Result<Self> {
        space.dim(cutoff)?;
        let symmetrizers = (0..=cutoff).map(|n| symmetrizer(&space, n, stats)).collect::<Result<_>>()?;
        Ok(FockSpace { space, cutoff, stats, symmetrizers })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn d(&self) -> usize {
        self.space.d()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn dim(&self, n: usize) -> usize {
        self.space.dim(n).expect("dimension checked at construction")
    }

    pub fn check_particles(&self, n: usize) -> Result<()> {
        if n > self.cutoff {
            return Err(Error::CutoffExceeded { requested: n, cutoff: self.cutoff });
        }
        Ok(())
    }

    pub fn symmetrizer(&self, n: usize) -> &CMatrix {
        &self.symmetrizers[n]
    }

    /// `S_n · op`.
    pub fn symmetrize_left(&self, n: usize, op: &CMatrix) -> CMatrix {
        match self.stats {
            Statistics::Boltzmann => op.clone(),
            _ if n <= 1 => op.clone(),
            _ => &self.symmetrizers[n] * op,
        }
    }

    /// `S_n · op · S_n`, the projection of an operator onto the symmetry sector.
    pub fn project(&self, n: usize, op: &CMatrix) -> CMatrix {
        match self.stats {
            Statistics::Boltzmann => op.clone(),
            _ if n <= 1 => op.clone(),
            _ => &self.symmetrizers[n] * op * &self.symmetrizers[n],
        }
    }

    /// Same single-particle space and statistics with a smaller cutoff.
    pub fn truncated(&self, cutoff: usize) -> Result<FockSpace> {
        self.check_particles(cutoff)?;
        Ok(FockSpace {
            space: self.space,
            cutoff,
            stats: self.stats,
            symmetrizers: self.symmetrizers[..=cutoff].to_vec(),
        })
    }
}

/// `(f_0, f_1, …, f_N)` with `f_0` a scalar and `f_n` a `d^n × d^n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSequence {
    vacuum: Complex64,
    components: Vec<CMatrix>,
}

impl OperatorSequence {
    /// `components[k]` is the `(k+1)`-particle component; their number is the cutoff.
    pub fn new(fs: &FockSpace, vacuum: Complex64, components: Vec<CMatrix>) -> Result<Self> {
        if components.len() != fs.cutoff() {
            return Err(Error::DimensionMismatch { expected: fs.cutoff(), found: components.len() });
        }
        for (k, c) in components.iter().enumerate() {
            let dim = fs.dim(k + 1);
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.nrows() });
            }
        }
        Ok(OperatorSequence { vacuum, components })
    }

    pub fn zeros(fs: &FockSpace) -> Self {
        let components = (1..=fs.cutoff()).map(|n| CMatrix::zeros(fs.dim(n), fs.dim(n))).collect();
        OperatorSequence { vacuum: ZERO, components }
    }

    /// The unit `𝟏 = (1, 0, 0, …)`.
    pub fn unit(fs: &FockSpace) -> Self {
        OperatorSequence { vacuum: ONE, ..Self::zeros(fs) }
    }

    /// Sequence whose only nonzero component is the one-particle operator.
    pub fn one_particle(fs: &FockSpace, op: CMatrix) -> Result<Self> {
        let mut seq = Self::zeros(fs);
        seq.set_component(1, op)?;
        Ok(seq)
    }

    pub fn cutoff(&self) -> usize {
        self.components.len()
    }

    pub fn vacuum(&self) -> Complex64 {
        self.vacuum
    }

    pub fn set_vacuum(&mut self, value: Complex64) {
        self.vacuum = value;
    }

    /// The `n`-particle component, `1 ≤ n ≤ N`.
    pub fn component(&self, n: usize) -> &CMatrix {
        assert!(n >= 1 && n <= self.components.len(), "component {n} outside 1..={}", self.components.len());
        &self.components[n - 1]
    }

    pub fn components(&self) -> &[CMatrix] {
        &self.components
    }

    pub fn set_component(&mut self, n: usize, op: CMatrix) -> Result<()> {
        if n == 0 || n > self.components.len() {
            return Err(Error::CutoffExceeded { requested: n, cutoff: self.components.len() });
        }
        let dim = self.components[n - 1].nrows();
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
        }
        self.components[n - 1] = op;
        Ok(())
    }

    /// Component `n` as a matrix, the vacuum becoming a 1×1 matrix.
    pub fn matrix(&self, n: usize) -> CMatrix {
        if n == 0 {
            scalar_matrix(self.vacuum)
        } else {
            self.component(n).clone()
        }
    }

    pub fn truncated(&self, cutoff: usize) -> Self {
        OperatorSequence {
            vacuum: self.vacuum,
            components: self.components[..cutoff.min(self.components.len())].to_vec(),
        }
    }

    pub fn map(&self, mut f: impl FnMut(usize, &CMatrix) -> CMatrix) -> Self {
        OperatorSequence {
            vacuum: self.vacuum,
            components: self.components.iter().enumerate().map(|(k, c)| f(k + 1, c)).collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        OperatorSequence {
            vacuum: self.vacuum * factor,
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        OperatorSequence {
            vacuum: self.vacuum + other.vacuum,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-ONE))
    }

    /// Largest entrywise deviation over all components including the vacuum.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold((self.vacuum - other.vacuum).norm(), f64::max)
    }

    /// Per-component trace-norm distances, `n = 1..=N`.
    pub fn trace_norm_diffs(&self, other: &Self) -> Vec<f64> {
        self.components.iter().zip(&other.components).map(|(a, b)| trace_norm(&(a - b))).collect()
    }

    /// Every component commutes with the symmetrizer within `tol`.
    pub fn is_state_like(&self, fs: &FockSpace, tol: f64) -> bool {
        self.components.iter().enumerate().all(|(k, c)| {
            let s = fs.symmetrizer(k + 1);
            max_abs_diff(&(s * c), &(c * s)) <= tol * crate::tensorspace::max_abs(c).max(1.0)
        })
    }
}

/// Sequence indexed by a base cluster of `base` particles: component `n` acts on
/// `base + n` particles, the cluster occupying the first `base` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterIndexedSequence {
    base: usize,
    components: Vec<CMatrix>,
}

impl ClusterIndexedSequence {
    pub fn new(space: &Space, base: usize, components: Vec<CMatrix>) -> Result<Self> {
        for (n, c) in components.iter().enumerate() {
            let dim = space.dim(base + n)?;
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.nrows() });
            }
        }
        Ok(ClusterIndexedSequence { base, components })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Number of components, i.e. `N - base + 1` for a sequence cut at `N`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, n: usize) -> &CMatrix {
        &self.components[n]
    }

    pub fn components(&self) -> &[CMatrix] {
        &self.components
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.base, other.base, "base cluster mismatch");
        ClusterIndexedSequence {
            base: self.base,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max)
    }
}

fn labels(range: std::ops::Range<usize>) -> Vec<usize> {
    range.collect()
}

/// `S_n Σ_P w(|P|) Π_i comp(|X_i|)(X_i)` over partitions of `0..n`.
fn symmetrized_partition_sum<'a>(
    fs: &FockSpace,
    n: usize,
    weight: impl Fn(usize) -> f64,
    comp: impl Fn(usize) -> &'a CMatrix,
) -> Result<CMatrix> {
    let ground = labels(0..n);
    let dim = fs.dim(n);
    let mut total = CMatrix::zeros(dim, dim);
    for partition in partitions_of(&ground) {
        let factors: Vec<(&CMatrix, &[usize])> =
            partition.blocks.iter().map(|block| (comp(block.len()), block.as_slice())).collect();
        let term = embed_many(fs.space(), &factors, n)?;
        total += term * Complex64::new(weight(partition.len()), 0.0);
    }
    Ok(fs.symmetrize_left(n, &total))
}

/// `(f⊛g)_n = S_n Σ_{Z⊆Y} f_{|Z|}(Z) g_{n-|Z|}(Y∖Z)`.
pub fn star_product(fs: &FockSpace, f: &OperatorSequence, g: &OperatorSequence) -> Result<OperatorSequence> {
    check_cutoff(fs, f)?;
    check_cutoff(fs, g)?;
    let mut out = OperatorSequence::zeros(fs);
    out.vacuum = f.vacuum * g.vacuum;
    for n in 1..=fs.cutoff() {
        let ground = labels(0..n);
        let dim = fs.dim(n);
        let mut total = CMatrix::zeros(dim, dim);
        for z in subsets(&ground) {
            let rest: Vec<usize> = ground.iter().copied().filter(|l| !z.contains(l)).collect();
            let (fz, gr) = (f.matrix(z.len()), g.matrix(rest.len()));
            total += embed_many(fs.space(), &[(&fz, &z), (&gr, &rest)], n)?;
        }
        out.components[n - 1] = fs.symmetrize_left(n, &total);
    }
    Ok(out)
}

fn check_cutoff(fs: &FockSpace, f: &OperatorSequence) -> Result<()> {
    if f.cutoff() != fs.cutoff() {
        return Err(Error::DimensionMismatch { expected: fs.cutoff(), found: f.cutoff() });
    }
    Ok(())
}

/// Cluster expansion: `(Exp⊛ h)_n = S_n Σ_P Π_i h_{|X_i|}(X_i)`, vacuum 1.
pub fn exp_star(fs: &FockSpace, h: &OperatorSequence) -> Result<OperatorSequence> {
    check_cutoff(fs, h)?;
    if h.vacuum.norm() > VACUUM_TOL {
        return Err(Error::InvalidVacuum { expected: 0.0, found: h.vacuum.to_string() });
    }
    let mut out = OperatorSequence::unit(fs);
    for n in 1..=fs.cutoff() {
        out.components[n - 1] = symmetrized_partition_sum(fs, n, |_| 1.0, |k| h.component(k))?;
    }
    Ok(out)
}

/// Inverse cluster expansion: `(Ln⊛ u)_n = S_n Σ_P (-1)^{|P|-1}(|P|-1)! Π_i u_{|X_i|}(X_i)`, vacuum 0.
pub fn ln_star(fs: &FockSpace, u: &OperatorSequence) -> Result<OperatorSequence> {
    check_cutoff(fs, u)?;
    if (u.vacuum - ONE).norm() > VACUUM_TOL {
        return Err(Error::InvalidVacuum { expected: 1.0, found: u.vacuum.to_string() });
    }
    let mut out = OperatorSequence::zeros(fs);
    for n in 1..=fs.cutoff() {
        out.components[n - 1] = symmetrized_partition_sum(fs, n, mobius_weight, |k| u.component(k))?;
    }
    Ok(out)
}

/// Reindexing at a base of `s` particles: component `n` is `f_{s+n}`.
pub fn d_labels(fs: &FockSpace, f: &OperatorSequence, s: usize) -> Result<ClusterIndexedSequence> {
    fs.check_particles(s)?;
    let components = (s..=fs.cutoff()).map(|m| f.matrix(m)).collect();
    Ok(ClusterIndexedSequence { base: s, components })
}

/// Correlations of the cluster `{0..s}` with further particles, computed from
/// density operators: component `n` is
/// `S_{s+n} Σ_{P'} (-1)^{|P'|-1}(|P'|-1)! Π_k D(θ(block_k))` over partitions of
/// the cluster set `({0..s}, s, …, s+n-1)`.
pub fn cluster_correlations(fs: &FockSpace, densities: &OperatorSequence, s: usize) -> Result<ClusterIndexedSequence> {
    check_cutoff(fs, densities)?;
    if s == 0 {
        return Err(Error::Invalid("the base cluster must be nonempty".into()));
    }
    fs.check_particles(s)?;
    let base = labels(0..s);
    let mut components = Vec::with_capacity(fs.cutoff() - s + 1);
    for n in 0..=fs.cutoff() - s {
        let total_n = s + n;
        let extra = labels(s..total_n);
        let mut clusters = vec![base.clone()];
        clusters.extend(extra.iter().map(|&l| vec![l]));
        let dim = fs.dim(total_n);
        let mut total = CMatrix::zeros(dim, dim);
        for blocks in partitions_of_items(&clusters) {
            let merged: Vec<Vec<usize>> = blocks
                .iter()
                .map(|block| {
                    let mut labels: Vec<usize> = block.iter().flatten().copied().collect();
                    labels.sort_unstable();
                    labels
                })
                .collect();
            let factors: Vec<(&CMatrix, &[usize])> =
                merged.iter().map(|l| (densities.component(l.len()), l.as_slice())).collect();
            total += embed_many(fs.space(), &factors, total_n)? * Complex64::new(mobius_weight(blocks.len()), 0.0);
        }
        components.push(fs.symmetrize_left(total_n, &total));
    }
    Ok(ClusterIndexedSequence { base: s, components })
}

/// Cluster correlations of a correlation sequence `g` at a base cluster of `s` particles.
/// For `s = 1` this is `g` itself reindexed by one.
pub fn d_cluster(fs: &FockSpace, g: &OperatorSequence, s: usize) -> Result<ClusterIndexedSequence> {
    cluster_correlations(fs, &exp_star(fs, g)?, s)
}

/// The ⊛-product of two cluster-indexed sequences: the first base cluster takes
/// the first labels, the second base cluster the next ones, and the remaining
/// particles are shared out over all subsets.
pub fn star_product_indexed(
    fs: &FockSpace,
    f: &ClusterIndexedSequence,
    g: &ClusterIndexedSequence,
) -> Result<ClusterIndexedSequence> {
    let base = f.base + g.base;
    fs.check_particles(base)?;
    let first = labels(0..f.base);
    let second = labels(f.base..base);
    let len = (fs.cutoff() - base + 1).min(f.len().saturating_sub(g.base)).min(g.len().saturating_sub(f.base));
    let mut components = Vec::with_capacity(len);
    for n in 0..len {
        let total_n = base + n;
        let extra = labels(base..total_n);
        let dim = fs.dim(total_n);
        let mut total = CMatrix::zeros(dim, dim);
        for z in subsets(&extra) {
            let rest: Vec<usize> = extra.iter().copied().filter(|l| !z.contains(l)).collect();
            let on_f: Vec<usize> = first.iter().chain(&z).copied().collect();
            let on_g: Vec<usize> = second.iter().chain(&rest).copied().collect();
            total += embed_many(
                fs.space(),
                &[(&f.components[z.len()], &on_f), (&g.components[rest.len()], &on_g)],
                total_n,
            )?;
        }
        components.push(fs.symmetrize_left(total_n, &total));
    }
    Ok(ClusterIndexedSequence { base, components })
}

/// A plain sequence viewed as cluster-indexed with an empty base.
pub fn as_indexed(f: &OperatorSequence) -> ClusterIndexedSequence {
    ClusterIndexedSequence { base: 0, components: (0..=f.cutoff()).map(|n| f.matrix(n)).collect() }
}

/// `(e^𝔞 f)_s = Σ_n (1/n!) Tr_{s+1..s+n} f_{s+n}`, the series cut at `N`.
pub fn annihilation_exp(fs: &FockSpace, f: &OperatorSequence) -> Result<OperatorSequence> {
    let indexed = annihilation_exp_indexed(fs, &as_indexed(f))?;
    let mut out = OperatorSequence::zeros(fs);
    out.vacuum = indexed.components[0][(0, 0)];
    for n in 1..=fs.cutoff() {
        out.components[n - 1] = indexed.components[n].clone();
    }
    Ok(out)
}

/// `e^𝔞` on a cluster-indexed sequence: component `k` becomes
/// `Σ_n (1/n!) Tr_{last n} h_{k+n}`.
pub fn annihilation_exp_indexed(fs: &FockSpace, h: &ClusterIndexedSequence) -> Result<ClusterIndexedSequence> {
    let mut components = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        let particles = h.base + k;
        let dim = fs.space().dim(particles)?;
        let mut acc = CMatrix::zeros(dim, dim);
        for n in 0..h.len() - k {
            let traced = trace_out_last(fs.space(), &h.components[k + n], particles + n, n)?;
            acc += traced / Complex64::new(factorial(n), 0.0);
        }
        components.push(acc);
    }
    Ok(ClusterIndexedSequence { base: h.base, components })
}

/// Operators split by how many particles were traced out to produce them.
///
/// `level(s)[k]` is an `s`-particle operator obtained from `s + k` particles, so its
/// grade is `s + k`. Arithmetic keeps only terms of total grade at most the cutoff,
/// which is how truncated series are compared across representations.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSequence {
    levels: Vec<Vec<CMatrix>>,
}

impl GradedSequence {
    /// `level(s)[k] = (1/k!) Tr_{last k} f_{s+k}`, for `s = 0..=N` (level 0 is 1×1).
    pub fn from_traces(fs: &FockSpace, f: &OperatorSequence) -> Result<Self> {
        let mut levels = Vec::with_capacity(fs.cutoff() + 1);
        for s in 0..=fs.cutoff() {
            let mut level = Vec::with_capacity(fs.cutoff() - s + 1);
            for k in 0..=fs.cutoff() - s {
                let traced = trace_out_last(fs.space(), &f.matrix(s + k), s + k, k)?;
                level.push(traced / Complex64::new(factorial(k), 0.0));
            }
            levels.push(level);
        }
        Ok(GradedSequence { levels })
    }

    /// `level(s)[k] = (1/k!) Tr_{last k} h_{k}` for one base cluster `s` (other levels zero).
    pub fn from_indexed_traces(fs: &FockSpace, h: &ClusterIndexedSequence) -> Result<Self> {
        let mut out = Self::zeros(fs);
        let s = h.base;
        for k in 0..h.len().min(fs.cutoff() + 1 - s) {
            let traced = trace_out_last(fs.space(), &h.components[k], s + k, k)?;
            out.levels[s][k] = traced / Complex64::new(factorial(k), 0.0);
        }
        Ok(out)
    }

    pub fn zeros(fs: &FockSpace) -> Self {
        let levels = (0..=fs.cutoff())
            .map(|s| (0..=fs.cutoff() - s).map(|_| CMatrix::zeros(fs.dim(s), fs.dim(s))).collect())
            .collect();
        GradedSequence { levels }
    }

    pub fn level(&self, s: usize) -> &[CMatrix] {
        &self.levels[s]
    }

    pub fn set(&mut self, s: usize, k: usize, op: CMatrix) {
        self.levels[s][k] = op;
    }

    /// Sum over all grades of level `s`.
    pub fn total(&self, s: usize) -> CMatrix {
        let mut it = self.levels[s].iter();
        let first = it.next().expect("every level has grade-0 part").clone();
        it.fold(first, |acc, m| acc + m)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)))
            .fold(0.0, f64::max)
    }
}

/// For each excess grade `k ≤ max_k`: `S_s Σ_P w(|P|) Σ_{k_1+…=k} Π_i level(|X_i|)[k_i](X_i)`.
fn graded_partition_sum(
    fs: &FockSpace,
    s: usize,
    max_k: usize,
    weight: impl Fn(usize) -> f64,
    levels: &[Vec<CMatrix>],
) -> Result<Vec<CMatrix>> {
    let dim = fs.dim(s);
    let mut by_grade = vec![CMatrix::zeros(dim, dim); max_k + 1];
    let ground = labels(0..s);
    for partition in partitions_of(&ground) {
        let w = Complex64::new(weight(partition.len()), 0.0);
        let blocks = &partition.blocks;
        for grades in grade_tuples(blocks.len(), max_k) {
            let k: usize = grades.iter().sum();
            let factors: Vec<(&CMatrix, &[usize])> =
                blocks.iter().zip(&grades).map(|(block, &g)| (&levels[block.len()][g], block.as_slice())).collect();
            by_grade[k] += embed_many(fs.space(), &factors, s)? * w;
        }
    }
    Ok(by_grade.iter().map(|m| fs.symmetrize_left(s, m)).collect())
}

/// All tuples of `parts` nonnegative integers with sum at most `max`.
fn grade_tuples(parts: usize, max: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max {
        for mut rest in grade_tuples(parts - 1, max - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Graded cluster expansion over levels `s ≥ 1`; the result's level 0 is `1` at grade 0.
pub fn exp_star_graded(fs: &FockSpace, g: &GradedSequence) -> Result<GradedSequence> {
    let mut out = GradedSequence::zeros(fs);
    out.levels[0][0] = scalar_matrix(ONE);
    for s in 1..=fs.cutoff() {
        out.levels[s] = graded_partition_sum(fs, s, fs.cutoff() - s, |_| 1.0, &g.levels)?;
    }
    Ok(out)
}

/// Graded inverse cluster expansion over levels `s ≥ 1`; level 0 of the input is ignored.
pub fn ln_star_graded(fs: &FockSpace, f: &GradedSequence) -> Result<GradedSequence> {
    let mut out = GradedSequence::zeros(fs);
    for s in 1..=fs.cutoff() {
        out.levels[s] = graded_partition_sum(fs, s, fs.cutoff() - s, mobius_weight, &f.levels)?;
    }
    Ok(out)
}

/// Coefficients of `1/z(x)` for the power series `z(x) = Σ_m z_m x^m`, up to `x^max`.
pub fn invert_series(z: &[Complex64], max: usize) -> Result<Vec<Complex64>> {
    let z0 = *z.first().ok_or_else(|| Error::Invalid("empty series".into()))?;
    if z0.norm() == 0.0 {
        return Err(Error::Invalid("series with zero constant term is not invertible".into()));
    }
    let mut inv = vec![ZERO; max + 1];
    inv[0] = ONE / z0;
    for m in 1..=max {
        let mut acc = ZERO;
        for j in 1..=m.min(z.len() - 1) {
            acc += z[j] * inv[m - j];
        }
        inv[m] = -acc / z0;
    }
    Ok(inv)
}

/// Cluster set `({0..s}, s, s+1, …, s+n-1)`.
pub fn base_clusters(s: usize, n: usize) -> ClusterSet {
    ClusterSet::with_base(&labels(0..s), &labels(s..s + n)).expect("disjoint by construction")
}
