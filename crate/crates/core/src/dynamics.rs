//! Hamiltonians, the von Neumann group and its generators, cumulants of groups
//! of operators, and scattering operators.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{richardson, GaussLegendre};
use crate::partitions::{declasterize, mobius_weight, nonempty_subsets, partitions_of_clusterset, subsets, ClusterSet};
use crate::tensorspace::{
    embed, embed_many, is_hermitian, max_abs, max_abs_diff, permutation_operator, CMatrix, Permutation, Space,
};

/// Tolerance for Hermiticity and permutation symmetry of Hamiltonian inputs.
pub const HAMILTONIAN_TOL: f64 = 1e-12;

/// Accepted reconstruction error of the spectral factorization, relative to `max|H|`.
pub const FACTORIZATION_TOL: f64 = 1e-10;

/// Steps used for finite-difference generator estimates.
pub const GENERATOR_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// One-body kinetic matrix plus k-body potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub kinetic: CMatrix,
    pub potentials: BTreeMap<usize, CMatrix>,
    pub hbar: f64,
}

impl HamiltonianSpec {
    pub fn free(kinetic: CMatrix) -> Self {
        HamiltonianSpec { kinetic, potentials: BTreeMap::new(), hbar: 1.0 }
    }

    pub fn with_potential(mut self, k: usize, phi: CMatrix) -> Self {
        self.potentials.insert(k, phi);
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn potential(&self, k: usize) -> Option<&CMatrix> {
        self.potentials.get(&k)
    }

    /// No potential of order two or more.
    pub fn is_free(&self) -> bool {
        self.potentials.keys().all(|&k| k < 2)
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        check_hermitian("kinetic", &self.kinetic, space.dim(1)?)?;
        for (&k, phi) in &self.potentials {
            if k == 0 {
                return Err(Error::Invalid("potentials[0]: order must be at least 1".into()));
            }
            let name = format!("potentials[{k}]");
            check_hermitian(&name, phi, space.dim(k)?)?;
            for perm in Permutation::all(k) {
                let p = permutation_operator(space, &perm)?;
                if max_abs_diff(&(&p * phi), &(phi * &p)) > HAMILTONIAN_TOL * max_abs(phi).max(1.0) {
                    return Err(Error::Invalid(format!("{name}: not symmetric under relabeling of its particles")));
                }
            }
        }
        Ok(())
    }
}

fn check_hermitian(name: &str, op: &CMatrix, dim: usize) -> Result<()> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::Invalid(format!(
            "{name}: expected a {dim}x{dim} matrix, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    if !is_hermitian(op, HAMILTONIAN_TOL) {
        return Err(Error::Invalid(format!("{name}: matrix is not Hermitian")));
    }
    Ok(())
}

/// `H_n = Σ_i K(i) + Σ_k Σ_{i_1<…<i_k} Φ^(k)(i_1,…,i_k)`.
pub fn assemble_hamiltonian(space: &Space, spec: &HamiltonianSpec, n: usize) -> Result<CMatrix> {
    let dim = space.dim(n)?;
    let mut h = CMatrix::zeros(dim, dim);
    let all: Vec<usize> = (0..n).collect();
    for i in 0..n {
        h += embed(space, &spec.kinetic, n, &[i])?;
    }
    for (&k, phi) in &spec.potentials {
        if k > n {
            continue;
        }
        for group in subsets(&all).filter(|s| s.len() == k) {
            h += embed(space, phi, n, &group)?;
        }
    }
    Ok(h)
}

/// `𝒩 f = -(i/ħ)(f H - H f)`.
pub fn liouvillian(h: &CMatrix, f: &CMatrix, hbar: f64) -> CMatrix {
    (f * h - h * f) * Complex64::new(0.0, -1.0 / hbar)
}

/// Spectral factorization of `H_n`, reused for every time.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    eigvals: DVector<f64>,
    eigvecs: CMatrix,
    hbar: f64,
}

impl Propagator {
    pub fn new(h: &CMatrix, n: usize, hbar: f64) -> Result<Self> {
        if !is_hermitian(h, HAMILTONIAN_TOL) {
            return Err(Error::Invalid(format!("{n}-particle Hamiltonian is not Hermitian")));
        }
        let eig = h.clone().symmetric_eigen();
        let propagator = Propagator { n, eigvals: eig.eigenvalues, eigvecs: eig.eigenvectors, hbar };
        let (rebuild, gram) = propagator.accuracy(h);
        if rebuild > FACTORIZATION_TOL * max_abs(h).max(1.0) || gram > FACTORIZATION_TOL {
            return Err(Error::Invalid(format!(
                "{n}-particle spectral factorization inaccurate: |VΛV†-H| = {rebuild:e}, |V†V-I| = {gram:e}"
            )));
        }
        Ok(propagator)
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &CMatrix {
        &self.eigvecs
    }

    /// `e^{-itH/ħ}`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = self.eigvals.map(|e| Complex64::from_polar(1.0, -t * e / self.hbar));
        let mut scaled = self.eigvecs.clone();
        for (j, phase) in phases.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.eigvecs.adjoint()
    }

    /// `𝒢(-t) f = e^{-itH/ħ} f e^{itH/ħ}`.
    pub fn apply(&self, f: &CMatrix, t: f64) -> CMatrix {
        if t == 0.0 {
            return f.clone();
        }
        let u = self.unitary(t);
        &u * f * u.adjoint()
    }

    /// `max |V Λ V† - H|` and `max |V†V - I|`.
    pub fn accuracy(&self, h: &CMatrix) -> (f64, f64) {
        let lambda = CMatrix::from_diagonal(&self.eigvals.map(|e| Complex64::new(e, 0.0)));
        let rebuilt = &self.eigvecs * lambda * self.eigvecs.adjoint();
        let dim = self.eigvecs.nrows();
        let gram = self.eigvecs.adjoint() * &self.eigvecs;
        (max_abs_diff(&rebuilt, h), max_abs_diff(&gram, &CMatrix::identity(dim, dim)))
    }
}

/// Finite-difference estimate of a generator at `t = 0`.
#[derive(Debug, Clone)]
pub struct GeneratorEstimate {
    pub steps: Vec<f64>,
    pub quotients: Vec<CMatrix>,
    pub extrapolated: CMatrix,
}

impl GeneratorEstimate {
    /// `(1/h)(map(h) - map(0))` at every step, extrapolated to `h = 0`.
    pub fn forward(steps: &[f64], at_zero: &CMatrix, mut map: impl FnMut(f64) -> Result<CMatrix>) -> Result<Self> {
        let mut quotients = Vec::with_capacity(steps.len());
        for &h in steps {
            quotients.push((map(h)? - at_zero) / Complex64::new(h, 0.0));
        }
        let extrapolated = richardson(steps, &quotients);
        Ok(GeneratorEstimate { steps: steps.to_vec(), quotients, extrapolated })
    }

    /// Max entrywise error against `exact`, relative to the max-norm of `exact` (floor 1).
    pub fn relative_error(&self, exact: &CMatrix) -> f64 {
        max_abs_diff(&self.extrapolated, exact) / max_abs(exact).max(1.0)
    }
}

/// Propagators for `n = 1..=max_particles` of one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Dynamics {
    space: Space,
    spec: HamiltonianSpec,
    hamiltonians: Vec<CMatrix>,
    propagators: Vec<Propagator>,
}

impl Dynamics {
    pub fn new(space: Space, spec: HamiltonianSpec, max_particles: usize) -> Result<Self> {
        spec.validate(&space)?;
        let mut hamiltonians = Vec::with_capacity(max_particles);
        let mut propagators = Vec::with_capacity(max_particles);
        for n in 1..=max_particles {
            let h = assemble_hamiltonian(&space, &spec, n)?;
            propagators.push(Propagator::new(&h, n, spec.hbar)?);
            hamiltonians.push(h);
        }
        Ok(Dynamics { space, spec, hamiltonians, propagators })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn hbar(&self) -> f64 {
        self.spec.hbar
    }

    pub fn max_particles(&self) -> usize {
        self.propagators.len()
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.propagators.len() {
            return Err(Error::CutoffExceeded { requested: n, cutoff: self.propagators.len() });
        }
        Ok(())
    }

    pub fn hamiltonian(&self, n: usize) -> Result<&CMatrix> {
        self.check_n(n)?;
        Ok(&self.hamiltonians[n - 1])
    }

    pub fn propagator(&self, n: usize) -> Result<&Propagator> {
        self.check_n(n)?;
        Ok(&self.propagators[n - 1])
    }

    fn particles_of(&self, f: &CMatrix) -> Result<usize> {
        let n = self.space.particles_of(f)?;
        self.check_n(n)?;
        Ok(n)
    }

    /// `𝒢_n(-t) f_n`.
    pub fn propagate(&self, f: &CMatrix, t: f64) -> Result<CMatrix> {
        let n = self.particles_of(f)?;
        Ok(self.propagators[n - 1].apply(f, t))
    }

    /// `𝒩_n f_n`.
    pub fn liouvillian(&self, f: &CMatrix) -> Result<CMatrix> {
        let n = self.particles_of(f)?;
        Ok(liouvillian(&self.hamiltonians[n - 1], f, self.hbar()))
    }

    /// Product of `e^{-itH_{|X|}/ħ}` over clusters `X`, each on its own labels, inside `n` particles.
    pub fn cluster_unitary(&self, n: usize, clusters: &[Vec<usize>], t: f64) -> Result<CMatrix> {
        let unitaries: Vec<CMatrix> =
            clusters.iter().map(|c| self.propagator(c.len()).map(|p| p.unitary(t))).collect::<Result<_>>()?;
        let factors: Vec<(&CMatrix, &[usize])> =
            unitaries.iter().zip(clusters).map(|(u, c)| (u, c.as_slice())).collect();
        embed_many(&self.space, &factors, n)
    }

    /// `Π_X 𝒢_{|X|}(-t, X) f` over disjoint clusters covering `f`'s particles.
    pub fn propagate_clusters(&self, clusters: &[Vec<usize>], f: &CMatrix, t: f64) -> Result<CMatrix> {
        let n = self.particles_of(f)?;
        if t == 0.0 {
            return Ok(f.clone());
        }
        let u = self.cluster_unitary(n, clusters, t)?;
        Ok(&u * f * u.adjoint())
    }

    fn check_cover(&self, cs: &ClusterSet, f: &CMatrix) -> Result<usize> {
        let n = self.particles_of(f)?;
        if declasterize(cs) != (0..n).collect::<Vec<_>>() {
            return Err(Error::Invalid(format!("clusters {:?} do not cover particles 0..{n}", cs.clusters())));
        }
        Ok(n)
    }

    /// `𝔄_{|cs|}(t, cs) f = Σ_{P'} (-1)^{|P'|-1}(|P'|-1)! Π_k 𝒢(-t, θ(Z_k)) f`.
    pub fn cumulant(&self, cs: &ClusterSet, f: &CMatrix, t: f64) -> Result<CMatrix> {
        self.check_cover(cs, f)?;
        let dim = f.nrows();
        let mut total = CMatrix::zeros(dim, dim);
        for blocks in partitions_of_clusterset(cs) {
            let merged: Vec<Vec<usize>> = blocks.iter().map(declasterize).collect();
            let term = self.propagate_clusters(&merged, f, t)?;
            total += term * Complex64::new(mobius_weight(blocks.len()), 0.0);
        }
        Ok(total)
    }

    /// `-(i/ħ)[f, Φ^(Σ|Z_r|)(Z_1 ∪ … ∪ Z_m)]`; zero when that potential order is absent.
    pub fn interaction_liouvillian(&self, groups: &[Vec<usize>], f: &CMatrix) -> Result<CMatrix> {
        let n = self.space.particles_of(f)?;
        let mut union: Vec<usize> = groups.iter().flatten().copied().collect();
        union.sort_unstable();
        let Some(phi) = self.spec.potential(union.len()) else {
            return Ok(CMatrix::zeros(f.nrows(), f.ncols()));
        };
        let placed = embed(&self.space, phi, n, &union)?;
        Ok(liouvillian(&placed, f, self.hbar()))
    }

    /// `𝒩^int(cs) f`: the sum of interaction Liouvillians over every choice of
    /// nonempty `Z_r ⊆ X_r`, one subset per cluster.
    pub fn cluster_interaction(&self, cs: &ClusterSet, f: &CMatrix) -> Result<CMatrix> {
        self.check_cover(cs, f)?;
        let mut total = CMatrix::zeros(f.nrows(), f.ncols());
        let choices: Vec<Vec<Vec<usize>>> = cs.clusters().iter().map(|c| nonempty_subsets(c).collect()).collect();
        let mut index = vec![0usize; choices.len()];
        loop {
            let groups: Vec<Vec<usize>> = index.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
            total += self.interaction_liouvillian(&groups, f)?;
            let mut pos = 0;
            while pos < index.len() {
                index[pos] += 1;
                if index[pos] < choices[pos].len() {
                    break;
                }
                index[pos] = 0;
                pos += 1;
            }
            if pos == index.len() {
                return Ok(total);
            }
        }
    }

    /// Finite-difference estimate of `d/dt 𝔄(t, cs) f` at `t = 0`; its exact value is
    /// `-𝒩^int(cs) f` for `|cs| ≥ 2`.
    pub fn cumulant_generator_check(&self, cs: &ClusterSet, f: &CMatrix, steps: &[f64]) -> Result<GeneratorEstimate> {
        let at_zero = self.cumulant(cs, f, 0.0)?;
        GeneratorEstimate::forward(steps, &at_zero, |h| self.cumulant(cs, f, h))
    }

    /// `Σ_{k≥2} Σ_{i_1<…<i_k} 𝒩^(k)_int(i_1,…,i_k) f` over all particles of `f`.
    pub fn total_interaction(&self, f: &CMatrix) -> Result<CMatrix> {
        let n = self.particles_of(f)?;
        let all: Vec<usize> = (0..n).collect();
        let mut total = CMatrix::zeros(f.nrows(), f.ncols());
        for group in subsets(&all).filter(|g| g.len() >= 2) {
            total += self.interaction_liouvillian(&[group], f)?;
        }
        Ok(total)
    }

    /// Unitary of the scattering operator on cluster `X` (sorted labels):
    /// `Ĝ_t(X) f = 𝒢(-t, X) Π_{k∈X} 𝒢_1(t, k) f = W f W†`.
    fn scattering_unitary(&self, n: usize, cluster: &[usize], t: f64) -> Result<CMatrix> {
        let joint = self.cluster_unitary(n, &[cluster.to_vec()], t)?;
        let singles: Vec<Vec<usize>> = cluster.iter().map(|&k| vec![k]).collect();
        let backwards = self.cluster_unitary(n, &singles, -t)?;
        Ok(joint * backwards)
    }

    /// `Ĝ_t(Y) f` on all particles of `f`.
    pub fn scattering(&self, f: &CMatrix, t: f64) -> Result<CMatrix> {
        let n = self.particles_of(f)?;
        let w = self.scattering_unitary(n, &(0..n).collect::<Vec<_>>(), t)?;
        Ok(&w * f * w.adjoint())
    }

    /// Cumulant of scattering operators: `Σ_P (-1)^{|P|-1}(|P|-1)! Π_{X∈P} Ĝ_t(θ(X)) f`.
    pub fn scattering_cumulant(&self, cs: &ClusterSet, f: &CMatrix, t: f64) -> Result<CMatrix> {
        let n = self.check_cover(cs, f)?;
        let mut total = CMatrix::zeros(f.nrows(), f.ncols());
        for blocks in partitions_of_clusterset(cs) {
            let mut w = CMatrix::identity(f.nrows(), f.ncols());
            for block in &blocks {
                w *= self.scattering_unitary(n, &declasterize(block), t)?;
            }
            total += (&w * f * w.adjoint()) * Complex64::new(mobius_weight(blocks.len()), 0.0);
        }
        Ok(total)
    }

    /// Second-order Duhamel integral
    /// `∫_0^t 𝒢_2(-t+s)(-𝒩^(2)_int) 𝒢_1(-s)𝒢_1(-s) f ds` by composite Gauss-Legendre.
    pub fn duhamel_pair(&self, f: &CMatrix, t: f64, rule: &GaussLegendre, panels: usize) -> Result<CMatrix> {
        if self.particles_of(f)? != 2 {
            return Err(Error::Invalid("the pair Duhamel integral acts on two-particle operators".into()));
        }
        let pair = self.propagator(2)?;
        let single = self.propagator(1)?;
        let mut failure = None;
        let value = rule.integrate_matrix(0.0, t, panels, |s| {
            let u1 = single.unitary(s);
            let both = u1.kronecker(&u1);
            let free = &both * f * both.adjoint();
            match self.interaction_liouvillian(&[vec![0], vec![1]], &free) {
                Ok(kick) => pair.apply(&(-kick), t - s),
                Err(e) => {
                    failure = Some(e);
                    CMatrix::zeros(f.nrows(), f.ncols())
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}
