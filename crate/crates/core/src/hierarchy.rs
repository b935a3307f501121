//! Evolution of correlation operators, of correlations of particle clusters and
//! of marginal (reduced) operators.
//!
//! The symmetrizer `S_n` is applied last: after the cumulant of the propagator
//! groups and after the interaction commutators. Products of correlation
//! operators on the blocks of a partition are not symmetric by themselves, so
//! this ordering is what makes the solution agree with propagating the density
//! operators and taking the inverse cluster expansion.

use std::ops::Deref;

use num_complex::Complex64;

use crate::dynamics::{Dynamics, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::partitions::{declasterize, factorial, nonempty_subsets, partitions_of, partitions_of_items, ClusterSet};
use crate::seqalgebra::{
    base_clusters, d_cluster, exp_star, invert_series, ln_star, ClusterIndexedSequence, FockSpace, GradedSequence,
    OperatorSequence,
};
use crate::tensorspace::{embed_many, max_abs, max_abs_diff, scalar_matrix, trace_norm, trace_out_last, CMatrix, ONE};

/// A sequence of correlation operators: zero vacuum component.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState(OperatorSequence);

impl CorrelationState {
    pub fn new(g: OperatorSequence) -> Result<Self> {
        if g.vacuum().norm() != 0.0 {
            return Err(Error::InvalidVacuum { expected: 0.0, found: g.vacuum().to_string() });
        }
        Ok(CorrelationState(g))
    }

    /// Chaos datum: only the one-particle component is nonzero.
    pub fn chaos(fs: &FockSpace, g1: CMatrix) -> Result<Self> {
        Self::new(OperatorSequence::one_particle(fs, g1)?)
    }

    pub fn into_inner(self) -> OperatorSequence {
        self.0
    }
}

impl Deref for CorrelationState {
    type Target = OperatorSequence;

    fn deref(&self) -> &OperatorSequence {
        &self.0
    }
}

fn labels(range: std::ops::Range<usize>) -> Vec<usize> {
    range.collect()
}

fn weight(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Statistics, cutoff and Hamiltonian together: everything the evolution needs.
#[derive(Debug, Clone)]
pub struct CorrelationDynamics {
    fs: FockSpace,
    dynamics: Dynamics,
}

impl CorrelationDynamics {
    pub fn new(fs: FockSpace, spec: HamiltonianSpec) -> Result<Self> {
        let dynamics = Dynamics::new(*fs.space(), spec, fs.cutoff())?;
        Ok(CorrelationDynamics { fs, dynamics })
    }

    pub fn fock(&self) -> &FockSpace {
        &self.fs
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn cutoff(&self) -> usize {
        self.fs.cutoff()
    }

    /// `Π_i f_{|X_i|}(X_i)` over the blocks of a partition of `0..n`.
    fn block_product(&self, blocks: &[Vec<usize>], f: &OperatorSequence, n: usize) -> Result<CMatrix> {
        let factors: Vec<(&CMatrix, &[usize])> = blocks.iter().map(|b| (f.component(b.len()), b.as_slice())).collect();
        embed_many(self.fs.space(), &factors, n)
    }

    /// Right-hand side of the hierarchy: component `n` is
    /// `-𝒩_n g_n + S_n Σ_{|P|>1} (-𝒩^int(X_1,…,X_|P|)) Π_i g_{|X_i|}(X_i)`.
    pub fn generator(&self, g: &CorrelationState) -> Result<OperatorSequence> {
        let mut out = OperatorSequence::zeros(&self.fs);
        for n in 1..=self.cutoff() {
            let mut coupling = CMatrix::zeros(self.fs.dim(n), self.fs.dim(n));
            for partition in partitions_of(&labels(0..n)).filter(|p| p.len() > 1) {
                let product = self.block_product(&partition.blocks, g, n)?;
                let cs = ClusterSet::new(partition.blocks)?;
                coupling -= self.dynamics.cluster_interaction(&cs, &product)?;
            }
            let free = self.dynamics.liouvillian(g.component(n))?;
            out.set_component(n, self.fs.symmetrize_left(n, &coupling) - free)?;
        }
        Ok(out)
    }

    /// The same generator written with pair potentials only: the coupling sums
    /// over splits into two parts and over one particle from each part.
    pub fn pair_generator(&self, g: &CorrelationState) -> Result<OperatorSequence> {
        let mut out = OperatorSequence::zeros(&self.fs);
        for n in 1..=self.cutoff() {
            let mut coupling = CMatrix::zeros(self.fs.dim(n), self.fs.dim(n));
            if n >= 2 {
                for (first, second) in crate::partitions::partitions_into_two(&labels(0..n))? {
                    let product = self.block_product(&[first.clone(), second.clone()], g, n)?;
                    for &i in &first {
                        for &j in &second {
                            coupling -= self.dynamics.interaction_liouvillian(&[vec![i], vec![j]], &product)?;
                        }
                    }
                }
            }
            let free = self.dynamics.liouvillian(g.component(n))?;
            out.set_component(n, self.fs.symmetrize_left(n, &coupling) - free)?;
        }
        Ok(out)
    }

    /// Solution of the hierarchy (the nonlinear group applied to `g0`):
    /// `g_n(t) = S_n Σ_P 𝔄_{|P|}(t, X_1,…,X_|P|) Π_i g_{|X_i|}(0, X_i)`.
    pub fn evolve(&self, g0: &CorrelationState, t: f64) -> Result<CorrelationState> {
        let mut out = OperatorSequence::zeros(&self.fs);
        for n in 1..=self.cutoff() {
            let mut total = CMatrix::zeros(self.fs.dim(n), self.fs.dim(n));
            for partition in partitions_of(&labels(0..n)) {
                let product = self.block_product(&partition.blocks, g0, n)?;
                let cs = ClusterSet::new(partition.blocks)?;
                total += self.dynamics.cumulant(&cs, &product, t)?;
            }
            out.set_component(n, self.fs.symmetrize_left(n, &total))?;
        }
        CorrelationState::new(out)
    }

    /// Chaos solution `g_n(t) = S_n 𝔄_n(t, 1,…,n) Π_i g_1(0, i)`.
    pub fn evolve_chaos(&self, g1: &CMatrix, t: f64) -> Result<CorrelationState> {
        let mut out = OperatorSequence::zeros(&self.fs);
        for n in 1..=self.cutoff() {
            let product = self.product_of_one(g1, n)?;
            let cumulant = self.dynamics.cumulant(&ClusterSet::singletons(&labels(0..n)), &product, t)?;
            out.set_component(n, self.fs.symmetrize_left(n, &cumulant))?;
        }
        CorrelationState::new(out)
    }

    /// Chaos solution through scattering operators:
    /// `g_n(t) = S_n 𝔄̂_n(t) Π_i g_1(t, i)` with `g_1(t) = 𝒢_1(-t) g_1(0)`.
    pub fn evolve_chaos_scattering(&self, g1: &CMatrix, t: f64) -> Result<CorrelationState> {
        let moved = self.dynamics.propagate(g1, t)?;
        let mut out = OperatorSequence::zeros(&self.fs);
        for n in 1..=self.cutoff() {
            let product = self.product_of_one(&moved, n)?;
            let cumulant = self.dynamics.scattering_cumulant(&ClusterSet::singletons(&labels(0..n)), &product, t)?;
            out.set_component(n, self.fs.symmetrize_left(n, &cumulant))?;
        }
        CorrelationState::new(out)
    }

    fn product_of_one(&self, g1: &CMatrix, n: usize) -> Result<CMatrix> {
        let singles: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let factors: Vec<(&CMatrix, &[usize])> = singles.iter().map(|l| (g1, l.as_slice())).collect();
        embed_many(self.fs.space(), &factors, n)
    }

    /// `D_n(t) = 𝒢_n(-t) D_n(0)`; the vacuum is unchanged.
    pub fn propagate_densities(&self, densities: &OperatorSequence, t: f64) -> Result<OperatorSequence> {
        let mut out = densities.clone();
        for n in 1..=self.cutoff() {
            out.set_component(n, self.dynamics.propagate(densities.component(n), t)?)?;
        }
        Ok(out)
    }

    /// Independent route to `evolve`: expand into densities, propagate each
    /// component with its own group, and take the inverse expansion.
    pub fn evolve_by_densities(&self, g0: &CorrelationState, t: f64) -> Result<CorrelationState> {
        let densities = self.propagate_densities(&exp_star(&self.fs, g0)?, t)?;
        CorrelationState::new(ln_star(&self.fs, &densities)?)
    }

    /// Correlations of the cluster `{0..s}` at time `t` from particle correlations at 0:
    /// component `n` is `S Σ_P 𝔄_{|P|}(t, θ(X_1),…) Π_i g(0, X_i)` over partitions of
    /// the cluster set `({0..s}, s,…,s+n-1)`, the block holding the cluster carrying
    /// the initial cluster correlation.
    pub fn evolve_cluster(&self, g0: &CorrelationState, s: usize, t: f64) -> Result<ClusterIndexedSequence> {
        let initial = d_cluster(&self.fs, g0, s)?;
        let mut components = Vec::with_capacity(self.cutoff() - s + 1);
        for n in 0..=self.cutoff() - s {
            let total_n = s + n;
            let cs = base_clusters(s, n);
            let mut total = CMatrix::zeros(self.fs.dim(total_n), self.fs.dim(total_n));
            for blocks in partitions_of_items(cs.clusters()) {
                let merged: Vec<Vec<usize>> = blocks
                    .iter()
                    .map(|block| {
                        let mut l: Vec<usize> = block.iter().flatten().copied().collect();
                        l.sort_unstable();
                        l
                    })
                    .collect();
                // the first block always holds the base cluster
                let factors: Vec<(&CMatrix, &[usize])> = merged
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let op = if i == 0 { initial.component(l.len() - s) } else { g0.component(l.len()) };
                        (op, l.as_slice())
                    })
                    .collect();
                let product = embed_many(self.fs.space(), &factors, total_n)?;
                total += self.dynamics.cumulant(&ClusterSet::new(merged)?, &product, t)?;
            }
            components.push(self.fs.symmetrize_left(total_n, &total));
        }
        ClusterIndexedSequence::new(self.fs.space(), s, components)
    }

    /// Chaos form for clusters: component `n` is
    /// `S_{s+n} 𝔄_{1+n}(t, {0..s}, s,…,s+n-1) Π_i g_1(0, i)`.
    pub fn evolve_cluster_chaos(&self, g1: &CMatrix, s: usize, t: f64) -> Result<ClusterIndexedSequence> {
        self.fs.check_particles(s)?;
        let mut components = Vec::with_capacity(self.cutoff() - s + 1);
        for n in 0..=self.cutoff() - s {
            let product = self.product_of_one(g1, s + n)?;
            let cumulant = self.dynamics.cumulant(&base_clusters(s, n), &product, t)?;
            components.push(self.fs.symmetrize_left(s + n, &cumulant));
        }
        ClusterIndexedSequence::new(self.fs.space(), s, components)
    }

    /// `F_s(t) = Σ_n (1/n!) Tr_{s+1..s+n} 𝔄_{1+n}(t, {Y}, X∖Y) F_{s+n}(0)`, where
    /// `initial[k]` is `F_{k+1}(0)`.
    pub fn bbgky_solution(&self, initial: &[CMatrix], s: usize, t: f64) -> Result<CMatrix> {
        self.check_marginals(initial, s)?;
        let mut acc = CMatrix::zeros(self.fs.dim(s), self.fs.dim(s));
        for n in 0..=self.cutoff() - s {
            let cumulant = self.dynamics.cumulant(&base_clusters(s, n), &initial[s + n - 1], t)?;
            acc += trace_out_last(self.fs.space(), &cumulant, s + n, n)? / weight(factorial(n));
        }
        Ok(acc)
    }

    fn check_marginals(&self, marginals: &[CMatrix], s: usize) -> Result<()> {
        if s == 0 {
            return Err(Error::Invalid("marginal operators start at one particle".into()));
        }
        self.fs.check_particles(s)?;
        if marginals.len() < self.cutoff() {
            return Err(Error::CutoffExceeded { requested: self.cutoff(), cutoff: marginals.len() });
        }
        Ok(())
    }

    /// Right-hand side of the BBGKY hierarchy truncated at the cutoff:
    /// `-𝒩_s F_s + Σ_n (1/n!) Tr_{s+1..s+n} Σ_{∅≠Z⊆Y} (-𝒩^(|Z|+n)_int)(Z, s+1,…,s+n) F_{s+n}`.
    pub fn bbgky_rhs(&self, marginals: &[CMatrix], s: usize) -> Result<CMatrix> {
        self.check_marginals(marginals, s)?;
        let mut acc = -self.dynamics.liouvillian(&marginals[s - 1])?;
        let base = labels(0..s);
        for n in 1..=self.cutoff() - s {
            let extra = labels(s..s + n);
            let f = &marginals[s + n - 1];
            let mut inner = CMatrix::zeros(f.nrows(), f.ncols());
            for z in nonempty_subsets(&base) {
                inner -= self.dynamics.interaction_liouvillian(&[z, extra.clone()], f)?;
            }
            acc += trace_out_last(self.fs.space(), &inner, s + n, n)? / weight(factorial(n));
        }
        Ok(acc)
    }

    /// Chaos marginal densities:
    /// `F_s(t) = Σ_n (1/n!) Tr_{s+1..s+n} S_{s+n} 𝔄_{1+n}(t, {Y}, X∖Y) Π_i F_1(0, i)`.
    pub fn chaos_marginal_density(&self, f1: &CMatrix, s: usize, t: f64) -> Result<CMatrix> {
        let clusters = self.evolve_cluster_chaos(f1, s, t)?;
        marginal_density(&self.fs, &clusters)
    }

    /// Chaos marginal correlations:
    /// `G_s(t) = Σ_n (1/n!) Tr_{s+1..s+n} S_{s+n} 𝔄_{s+n}(t, 1,…,s+n) Π_i G_1(0, i)`.
    pub fn chaos_marginal_correlation(&self, g1: &CMatrix, s: usize, t: f64) -> Result<CMatrix> {
        self.fs.check_particles(s)?;
        let mut acc = CMatrix::zeros(self.fs.dim(s), self.fs.dim(s));
        for n in 0..=self.cutoff() - s {
            let product = self.product_of_one(g1, s + n)?;
            let cumulant = self.dynamics.cumulant(&ClusterSet::singletons(&labels(0..s + n)), &product, t)?;
            let sym = self.fs.symmetrize_left(s + n, &cumulant);
            acc += trace_out_last(self.fs.space(), &sym, s + n, n)? / weight(factorial(n));
        }
        Ok(acc)
    }

    /// Ursell operators `g_1 = e^{-βK}` and `g_2 = S_2 e^{-β(K⊗I+I⊗K)}(e^{-βΦ^(2)} - I)`,
    /// padded with zeros up to the cutoff.
    pub fn ursell(&self, beta: f64) -> Result<CorrelationState> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::NonPositiveBeta(beta));
        }
        let spec = self.dynamics.spec();
        let g1 = hermitian_exp(&spec.kinetic, -beta);
        let mut g = OperatorSequence::one_particle(&self.fs, g1.clone())?;
        if self.cutoff() >= 2 {
            let id = CMatrix::identity(g1.nrows(), g1.ncols());
            let interaction = match spec.potential(2) {
                Some(phi) => hermitian_exp(phi, -beta) - CMatrix::identity(phi.nrows(), phi.ncols()),
                None => CMatrix::zeros(id.nrows().pow(2), id.nrows().pow(2)),
            };
            let free = g1.kronecker(&g1);
            g.set_component(2, self.fs.symmetrize_left(2, &(free * interaction)))?;
        }
        CorrelationState::new(g)
    }

    /// Max-norms of the hierarchy generator at components 1 and 2 of the Ursell sequence.
    pub fn ursell_residual(&self, beta: f64) -> Result<[f64; 2]> {
        let rhs = self.generator(&self.ursell(beta)?)?;
        let second = if self.cutoff() >= 2 { max_abs(rhs.component(2)) } else { 0.0 };
        Ok([max_abs(rhs.component(1)), second])
    }

    /// Per-component errors of the central difference of `evolve` at `t` against the
    /// generator, relative to the generator's max-norm (floor 1).
    pub fn strong_solution_residual(&self, g0: &CorrelationState, t: f64, step: f64) -> Result<Vec<f64>> {
        let forward = self.evolve(g0, t + step)?;
        let backward = self.evolve(g0, t - step)?;
        let exact = self.generator(&self.evolve(g0, t)?)?;
        Ok((1..=self.cutoff())
            .map(|n| {
                let fd = (forward.component(n) - backward.component(n)) / weight(2.0 * step);
                max_abs_diff(&fd, exact.component(n)) / max_abs(exact.component(n)).max(1.0)
            })
            .collect())
    }

    /// Central difference of `bbgky_solution` at `t` against `bbgky_rhs` of the
    /// solution, relative to the max-norm of the latter (floor 1).
    pub fn bbgky_residual(&self, initial: &[CMatrix], s: usize, t: f64, step: f64) -> Result<f64> {
        let at = |time: f64| -> Result<Vec<CMatrix>> {
            (1..=self.cutoff()).map(|k| self.bbgky_solution(initial, k, time)).collect()
        };
        let forward = self.bbgky_solution(initial, s, t + step)?;
        let backward = self.bbgky_solution(initial, s, t - step)?;
        let fd = (forward - backward) / weight(2.0 * step);
        let exact = self.bbgky_rhs(&at(t)?, s)?;
        Ok(max_abs_diff(&fd, &exact) / max_abs(&exact).max(1.0))
    }

    /// `Tr((𝒩_s f) g_s) + Σ_{|P|>1} Tr((𝒩^int(X_1,…) f) Π_i g(X_i))`, the time derivative
    /// of `Tr(f g_s(t))` for an observable `f` acting on the symmetry sector.
    pub fn weak_derivative(&self, f: &CMatrix, g: &CorrelationState, s: usize) -> Result<Complex64> {
        let mut value = (self.dynamics.liouvillian(f)? * g.component(s)).trace();
        for partition in partitions_of(&labels(0..s)).filter(|p| p.len() > 1) {
            let product = self.block_product(&partition.blocks, g, s)?;
            let cs = ClusterSet::new(partition.blocks)?;
            value += (self.dynamics.cluster_interaction(&cs, f)? * product).trace();
        }
        Ok(value)
    }

    /// The same functional with the symmetrizer placed next to the block product,
    /// `Tr((𝒩^int f) S_s Π_i g(X_i))`; kept for comparison.
    pub fn weak_derivative_inner_symmetrizer(&self, f: &CMatrix, g: &CorrelationState, s: usize) -> Result<Complex64> {
        let mut value = (self.dynamics.liouvillian(f)? * g.component(s)).trace();
        for partition in partitions_of(&labels(0..s)).filter(|p| p.len() > 1) {
            let product = self.fs.symmetrize_left(s, &self.block_product(&partition.blocks, g, s)?);
            let cs = ClusterSet::new(partition.blocks)?;
            value += (self.dynamics.cluster_interaction(&cs, f)? * product).trace();
        }
        Ok(value)
    }
}

/// `e^{x A}` for Hermitian `A`.
pub fn hermitian_exp(a: &CMatrix, x: f64) -> CMatrix {
    let eig = a.clone().symmetric_eigen();
    let diag = CMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new((x * e).exp(), 0.0)));
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}

/// `‖(𝔄_t(f))_n‖_1 ≤ n! e^{3n} c^n` with `c = max(1, max_{k≤n} ‖f_k‖_1)`.
pub fn nonlinear_group_bound(f: &OperatorSequence, n: usize) -> f64 {
    let c = (1..=n).map(|k| trace_norm(f.component(k))).fold(1.0, f64::max);
    factorial(n) * (3.0 * n as f64).exp() * c.powi(n as i32)
}

/// `F_s = Σ_n (1/n!) Tr_{s+1..s+n} h_n` for cluster correlations `h` of a base of `s` particles.
pub fn marginal_density(fs: &FockSpace, clusters: &ClusterIndexedSequence) -> Result<CMatrix> {
    Ok(GradedSequence::from_indexed_traces(fs, clusters)?.total(clusters.base()))
}

/// `G_s = Σ_n (1/n!) Tr_{s+1..s+n} g_{s+n}`.
pub fn marginal_correlation(fs: &FockSpace, g: &CorrelationState, s: usize) -> Result<CMatrix> {
    if s == 0 {
        return Err(Error::Invalid("marginal operators start at one particle".into()));
    }
    fs.check_particles(s)?;
    Ok(GradedSequence::from_traces(fs, g)?.total(s))
}

/// All marginal densities from the cluster route, split by grade; level 0 is `1`.
pub fn marginal_densities_graded(fs: &FockSpace, g: &CorrelationState) -> Result<GradedSequence> {
    let mut out = GradedSequence::zeros(fs);
    out.set(0, 0, scalar_matrix(ONE));
    for s in 1..=fs.cutoff() {
        let graded = GradedSequence::from_indexed_traces(fs, &d_cluster(fs, g, s)?)?;
        for (k, op) in graded.level(s).iter().enumerate() {
            out.set(s, k, op.clone());
        }
    }
    Ok(out)
}

/// Grand-canonical marginal density `F_s = (I,D)^{-1} Σ_n (1/n!) Tr_{s+1..s+n} D_{s+n}`
/// with the normalizer `(I,D) = Σ_n (1/n!) Tr D_n` (vacuum included).
pub fn marginal_density_grandcanonical(fs: &FockSpace, densities: &OperatorSequence, s: usize) -> Result<CMatrix> {
    let graded = GradedSequence::from_traces(fs, densities)?;
    let z = graded.total(0)[(0, 0)];
    if z.norm() == 0.0 {
        return Err(Error::Invalid("normalizer (I,D) vanishes".into()));
    }
    Ok(graded.total(s) / z)
}

/// Grand-canonical marginal densities with the normalizer inverted as a series in
/// the particle number and every product cut at total grade `N`.
pub fn marginal_densities_grandcanonical_graded(
    fs: &FockSpace,
    densities: &OperatorSequence,
) -> Result<GradedSequence> {
    let graded = GradedSequence::from_traces(fs, densities)?;
    let z: Vec<Complex64> = graded.level(0).iter().map(|m| m[(0, 0)]).collect();
    let inverse = invert_series(&z, fs.cutoff())?;
    let mut out = GradedSequence::zeros(fs);
    for s in 0..=fs.cutoff() {
        for j in 0..=fs.cutoff() - s {
            let mut acc = CMatrix::zeros(fs.dim(s), fs.dim(s));
            for k in 0..=j {
                acc += &graded.level(s)[k] * inverse[j - k];
            }
            out.set(s, j, acc);
        }
    }
    Ok(out)
}

/// The cluster set `({0..s}, s,…,s+n-1)` declasterizes to `0..s+n`.
pub fn base_cluster_labels(s: usize, n: usize) -> Vec<usize> {
    declasterize(&base_clusters(s, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampler;
    use crate::tensorspace::{Space, Statistics};

    fn system(stats: Statistics, cutoff: usize, seed: u64, orders: &[usize]) -> (CorrelationDynamics, Sampler) {
        let space = Space::with_budget(2, 4096).unwrap();
        let fs = FockSpace::new(space, cutoff, stats).unwrap();
        let mut rng = Sampler::new(seed);
        let mut spec = HamiltonianSpec::free(rng.hermitian(2, 1.0));
        for &k in orders {
            spec = spec.with_potential(k, rng.symmetric_potential(&space, k, 0.6));
        }
        (CorrelationDynamics::new(fs, spec).unwrap(), rng)
    }

    fn random_state(sys: &CorrelationDynamics, rng: &mut Sampler) -> CorrelationState {
        CorrelationState::new(rng.state_like_sequence(sys.fock(), 0.3)).unwrap()
    }

    #[test]
    fn evolution_at_zero_is_identity() {
        let (sys, mut rng) = system(Statistics::Bose, 3, 1, &[2, 3]);
        let g0 = random_state(&sys, &mut rng);
        assert!(sys.evolve(&g0, 0.0).unwrap().max_abs_diff(&g0) < 1e-15);
    }

    #[test]
    fn evolution_matches_density_route() {
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 3, 2, &[2, 3]);
            let g0 = random_state(&sys, &mut rng);
            for t in [0.3, 1.1] {
                let a = sys.evolve(&g0, t).unwrap();
                let b = sys.evolve_by_densities(&g0, t).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-10, "{stats} t={t}");
            }
        }
    }

    #[test]
    fn chaos_data_reduce_to_single_cumulants() {
        let (sys, mut rng) = system(Statistics::Fermi, 3, 3, &[2]);
        let g1 = rng.density_matrix(2);
        let g0 = CorrelationState::chaos(sys.fock(), g1.clone()).unwrap();
        let general = sys.evolve(&g0, 0.9).unwrap();
        let chaos = sys.evolve_chaos(&g1, 0.9).unwrap();
        assert!(general.max_abs_diff(&chaos) < 1e-12);
        let scattering = sys.evolve_chaos_scattering(&g1, 0.9).unwrap();
        assert!(scattering.max_abs_diff(&chaos) < 1e-10);
    }

    #[test]
    fn no_interaction_no_correlations() {
        let (sys, mut rng) = system(Statistics::Bose, 3, 4, &[]);
        let g1 = rng.density_matrix(2);
        let g = sys.evolve_chaos(&g1, 1.7).unwrap();
        assert!(max_abs(g.component(2)) < 1e-12 && max_abs(g.component(3)) < 1e-12);
        let zero = CorrelationState::new(OperatorSequence::zeros(sys.fock())).unwrap();
        assert!(max_abs(sys.evolve(&zero, 1.0).unwrap().component(3)) == 0.0);
    }

    #[test]
    fn generator_low_components() {
        let (sys, mut rng) = system(Statistics::Bose, 3, 5, &[2]);
        let g = random_state(&sys, &mut rng);
        let rhs = sys.generator(&g).unwrap();
        let d = sys.dynamics();
        assert!(max_abs_diff(rhs.component(1), &-d.liouvillian(g.component(1)).unwrap()) < 1e-14);
        let g1 = g.component(1);
        let pair = -d.interaction_liouvillian(&[vec![0], vec![1]], &g1.kronecker(g1)).unwrap();
        let expected = sys.fock().symmetrize_left(2, &pair) - d.liouvillian(g.component(2)).unwrap();
        assert!(max_abs_diff(rhs.component(2), &expected) < 1e-14);
        let two_body = sys.pair_generator(&g).unwrap();
        assert!(two_body.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn strong_solution() {
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 3, 6, &[2, 3]);
            let g0 = random_state(&sys, &mut rng);
            let residual = sys.strong_solution_residual(&g0, 0.4, 1e-4).unwrap();
            assert!(residual.iter().all(|&r| r < 1e-6), "{stats} {residual:?}");
        }
    }

    #[test]
    fn group_law() {
        let (sys, mut rng) = system(Statistics::Bose, 3, 7, &[2, 3]);
        let g0 = random_state(&sys, &mut rng);
        let two_steps = sys.evolve(&sys.evolve(&g0, 0.5).unwrap(), 0.3).unwrap();
        assert!(two_steps.max_abs_diff(&sys.evolve(&g0, 0.8).unwrap()) < 1e-10);
        let back = sys.evolve(&sys.evolve(&g0, 1.0).unwrap(), -1.0).unwrap();
        assert!(back.max_abs_diff(&g0) < 1e-10);
    }

    #[test]
    fn cluster_evolution_matches_density_route() {
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 4, 8, &[2, 3]);
            let g0 = random_state(&sys, &mut rng);
            for s in 1..=2 {
                let route = sys.evolve_cluster(&g0, s, 0.6).unwrap();
                let oracle = d_cluster(sys.fock(), &sys.evolve_by_densities(&g0, 0.6).unwrap(), s).unwrap();
                assert!(route.max_abs_diff(&oracle) < 1e-10, "{stats} s={s}");
            }
            let single = sys.evolve_cluster(&g0, 1, 0.6).unwrap();
            let g = sys.evolve(&g0, 0.6).unwrap();
            for n in 0..4 {
                assert!(max_abs_diff(single.component(n), g.component(n + 1)) < 1e-10);
            }
        }
    }

    #[test]
    fn cluster_chaos_matches_general_form() {
        let (sys, mut rng) = system(Statistics::Bose, 4, 9, &[2]);
        let g1 = rng.density_matrix(2);
        let g0 = CorrelationState::chaos(sys.fock(), g1.clone()).unwrap();
        let general = sys.evolve_cluster(&g0, 2, 0.5).unwrap();
        let chaos = sys.evolve_cluster_chaos(&g1, 2, 0.5).unwrap();
        assert!(general.max_abs_diff(&chaos) < 1e-12);
        // the zeroth component at t = 0 is the symmetrized product
        let at_zero = sys.evolve_cluster_chaos(&g1, 2, 0.0).unwrap();
        assert!(max_abs_diff(at_zero.component(0), &sys.fock().symmetrize_left(2, &g1.kronecker(&g1))) < 1e-14);
    }

    #[test]
    fn bbgky_solution_at_zero_and_residual() {
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 3, 10, &[2, 3]);
            // the hierarchy needs permutation-symmetric marginals, which the Boltzmann sampler does not give
            let symmetric = FockSpace::new(*sys.fock().space(), 3, Statistics::Bose).unwrap();
            let densities = rng.density_sequence(&symmetric);
            let initial: Vec<CMatrix> = densities.components().to_vec();
            for s in 1..=3 {
                assert!(max_abs_diff(&sys.bbgky_solution(&initial, s, 0.0).unwrap(), &initial[s - 1]) < 1e-14);
            }
            let residual = sys.bbgky_residual(&initial, 1, 0.5, 1e-4).unwrap();
            assert!(residual < 1e-6, "{stats} {residual}");
        }
    }

    #[test]
    fn factorized_bbgky_data_reduce_to_chaos_series_for_boltzmann() {
        let (sys, mut rng) = system(Statistics::Boltzmann, 3, 11, &[2]);
        let f1 = rng.density_matrix(2);
        let initial: Vec<CMatrix> = (1..=3).map(|n| sys.product_of_one(&f1, n).unwrap()).collect();
        for s in 1..=2 {
            let direct = sys.bbgky_solution(&initial, s, 0.7).unwrap();
            let chaos = sys.chaos_marginal_density(&f1, s, 0.7).unwrap();
            assert!(max_abs_diff(&direct, &chaos) < 1e-12);
        }
    }

    #[test]
    fn chaos_marginals_match_cluster_route() {
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 3, 12, &[2, 3]);
            let f1 = rng.density_matrix(2) * Complex64::new(0.3, 0.0);
            let g0 = CorrelationState::chaos(sys.fock(), f1.clone()).unwrap();
            let g = sys.evolve(&g0, 0.8).unwrap();
            for s in 1..=3 {
                let via_clusters = marginal_density(sys.fock(), &d_cluster(sys.fock(), &g, s).unwrap()).unwrap();
                let series = sys.chaos_marginal_density(&f1, s, 0.8).unwrap();
                assert!(max_abs_diff(&via_clusters, &series) < 1e-10, "{stats} F s={s}");
                let g_series = sys.chaos_marginal_correlation(&f1, s, 0.8).unwrap();
                let g_direct = marginal_correlation(sys.fock(), &g, s).unwrap();
                assert!(max_abs_diff(&g_series, &g_direct) < 1e-10, "{stats} G s={s}");
            }
        }
    }

    #[test]
    fn first_marginals_coincide() {
        let (sys, mut rng) = system(Statistics::Fermi, 3, 13, &[2]);
        let g = random_state(&sys, &mut rng);
        let f1 = marginal_density(sys.fock(), &d_cluster(sys.fock(), &g, 1).unwrap()).unwrap();
        let g1 = marginal_correlation(sys.fock(), &g, 1).unwrap();
        assert!(max_abs_diff(&f1, &g1) < 1e-12);
    }

    #[test]
    fn marginal_cluster_expansion_for_boltzmann() {
        let (sys, mut rng) = system(Statistics::Boltzmann, 4, 14, &[2]);
        let g = random_state(&sys, &mut rng);
        let fs = sys.fock();
        let marginals = marginal_densities_graded(fs, &g).unwrap();
        let correlations = GradedSequence::from_traces(fs, &g).unwrap();
        let expanded = crate::seqalgebra::exp_star_graded(fs, &correlations).unwrap();
        for s in 1..=4 {
            assert!(max_abs_diff(&expanded.total(s), &marginals.total(s)) < 1e-12);
        }
        let densities = exp_star(fs, &g).unwrap();
        let grand = marginal_densities_grandcanonical_graded(fs, &densities).unwrap();
        for s in 1..=4 {
            assert!(max_abs_diff(&grand.total(s), &marginals.total(s)) < 1e-12);
        }
    }

    #[test]
    fn ursell_examples() {
        let (free, _) = system(Statistics::Bose, 2, 15, &[]);
        let g = free.ursell(0.7).unwrap();
        assert_eq!(max_abs(g.component(2)), 0.0);
        assert!(free.ursell(0.0).is_err());
        assert!(free.ursell(-1.0).is_err());
        let (sys, _) = system(Statistics::Bose, 2, 15, &[2]);
        let g = sys.ursell(0.5).unwrap();
        let k = &sys.dynamics().spec().kinetic;
        assert!(max_abs_diff(&(g.component(1) * k), &(k * g.component(1))) < 1e-13);
        let [r1, _] = sys.ursell_residual(0.5).unwrap();
        assert!(r1 < 1e-13);
    }

    #[test]
    fn ursell_steady_when_potential_commutes_with_kinetic() {
        let space = Space::with_budget(2, 64).unwrap();
        let fs = FockSpace::new(space, 3, Statistics::Bose).unwrap();
        let kinetic = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.3, 0.0),
            Complex64::new(-0.8, 0.0),
        ]));
        let phi = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [0.5, -0.2, -0.2, 0.9].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        ));
        let sys = CorrelationDynamics::new(fs, HamiltonianSpec::free(kinetic).with_potential(2, phi)).unwrap();
        let [r1, r2] = sys.ursell_residual(1.3).unwrap();
        assert!(r1 < 1e-14 && r2 < 1e-13);
    }

    #[test]
    fn weak_derivative_matches_integrated_change() {
        use crate::numerics::GaussLegendre;
        for stats in Statistics::ALL {
            let (sys, mut rng) = system(stats, 3, 16, &[2, 3]);
            let g0 = random_state(&sys, &mut rng);
            let rule = GaussLegendre::new(16);
            for s in 1..=3 {
                let f = sys.fock().project(s, &rng.hermitian(1 << s, 1.0));
                let t = 0.9;
                let change = (&f * sys.evolve(&g0, t).unwrap().component(s)).trace() - (&f * g0.component(s)).trace();
                let integral = rule
                    .integrate(0.0, t, 4, |tau| sys.weak_derivative(&f, &sys.evolve(&g0, tau).unwrap(), s).unwrap().re);
                let imag = rule
                    .integrate(0.0, t, 4, |tau| sys.weak_derivative(&f, &sys.evolve(&g0, tau).unwrap(), s).unwrap().im);
                assert!((change - Complex64::new(integral, imag)).norm() < 1e-10, "{stats} s={s}");
            }
        }
    }
}
