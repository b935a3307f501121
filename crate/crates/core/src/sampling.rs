//! Seeded random operators for tests, examples and scenario generation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seqalgebra::{FockSpace, OperatorSequence};
use crate::tensorspace::{permutation_operator, CMatrix, Permutation, Space};

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Entries uniform in the unit square of the complex plane, times `scale`.
    pub fn matrix(&mut self, dim: usize, scale: f64) -> CMatrix {
        CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0)) * scale
        })
    }

    pub fn hermitian(&mut self, dim: usize, scale: f64) -> CMatrix {
        let m = self.matrix(dim, scale);
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Positive semidefinite with unit trace.
    pub fn density_matrix(&mut self, dim: usize) -> CMatrix {
        let a = self.matrix(dim, 1.0);
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    /// Hermitian potential on `k` particles, invariant under relabeling.
    pub fn symmetric_potential(&mut self, space: &Space, k: usize, scale: f64) -> CMatrix {
        let dim = space.dim(k).expect("potential within budget");
        let x = self.hermitian(dim, scale);
        let perms = Permutation::all(k);
        let mut acc = CMatrix::zeros(dim, dim);
        for perm in &perms {
            let p = permutation_operator(space, perm).expect("within budget");
            acc += &p * &x * p.adjoint();
        }
        acc / Complex64::new(perms.len() as f64, 0.0)
    }

    /// Zero vacuum and independent Hermitian components (not symmetrized).
    pub fn hermitian_sequence(&mut self, fs: &FockSpace, scale: f64) -> OperatorSequence {
        let components = (1..=fs.cutoff()).map(|n| self.hermitian(fs.dim(n), scale)).collect();
        OperatorSequence::new(fs, Complex64::new(0.0, 0.0), components).expect("shapes match")
    }

    /// Zero vacuum, components `S_n X_n S_n` with `X_n` Hermitian: a random correlation sequence.
    pub fn state_like_sequence(&mut self, fs: &FockSpace, scale: f64) -> OperatorSequence {
        let raw = self.hermitian_sequence(fs, scale);
        raw.map(|n, c| fs.project(n, c))
    }

    /// Unit vacuum and positive symmetric components `S_n ρ_n S_n` with `ρ_n` a density matrix.
    pub fn density_sequence(&mut self, fs: &FockSpace) -> OperatorSequence {
        let components = (1..=fs.cutoff()).map(|n| fs.project(n, &self.density_matrix(fs.dim(n)))).collect();
        OperatorSequence::new(fs, Complex64::new(1.0, 0.0), components).expect("shapes match")
    }
}
