//! Finite-dimensional n-particle tensor spaces.
//!
//! The n-particle basis is the lexicographic product basis of `(C^d)^{⊗n}`
//! with particle 0 as the slowest-varying index. Labels are 0-based.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Row budget used when `CORRDYN_BUDGET` is not set.
pub const DEFAULT_BUDGET: usize = 1024;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Bose,
    Fermi,
    /// Distinguishable particles; the symmetrizer is the identity.
    Boltzmann,
}

impl Statistics {
    pub const ALL: [Statistics; 3] = [Statistics::Bose, Statistics::Fermi, Statistics::Boltzmann];

    /// Sign attached to an odd permutation.
    fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Fermi => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
            Statistics::Boltzmann => "boltzmann",
        };
        f.write_str(name)
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bose" => Ok(Statistics::Bose),
            "fermi" => Ok(Statistics::Fermi),
            "boltzmann" | "maxwell-boltzmann" => Ok(Statistics::Boltzmann),
            other => Err(Error::Invalid(format!("unknown statistics `{other}`"))),
        }
    }
}

/// Single-particle dimension together with the row budget for n-particle matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    d: usize,
    budget: usize,
}

impl Space {
    /// Budget is read from `CORRDYN_BUDGET`, falling back to [`DEFAULT_BUDGET`].
    pub fn new(d: usize) -> Result<Self> {
        let budget =
            std::env::var("CORRDYN_BUDGET").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(DEFAULT_BUDGET);
        Self::with_budget(d, budget)
    }

    pub fn with_budget(d: usize, budget: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("single-particle dimension must be positive".into()));
        }
        Ok(Space { d, budget })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `d^n`, rejected when it exceeds the budget.
    pub fn dim(&self, n: usize) -> Result<usize> {
        let dim = u32::try_from(n)
            .ok()
            .and_then(|e| self.d.checked_pow(e))
            .ok_or_else(|| Error::Overflow(format!("{}^{n}", self.d)))?;
        if dim > self.budget {
            return Err(Error::DimensionBudget { n, dim, budget: self.budget });
        }
        Ok(dim)
    }

    /// Particle count of a square matrix of this space.
    pub fn particles_of(&self, op: &CMatrix) -> Result<usize> {
        if op.nrows() != op.ncols() {
            return Err(Error::DimensionMismatch { expected: op.nrows(), found: op.ncols() });
        }
        let mut n = 0;
        let mut dim = 1;
        while dim < op.nrows() {
            dim *= self.d;
            n += 1;
        }
        if dim != op.nrows() {
            return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
        }
        Ok(n)
    }

    fn check_dim(&self, op: &CMatrix, n: usize) -> Result<usize> {
        let dim = self.dim(n)?;
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
        }
        Ok(dim)
    }

    pub fn identity(&self, n: usize) -> Result<CMatrix> {
        Ok(CMatrix::identity(self.dim(n)?, self.dim(n)?))
    }

    /// Base-`d` digits of a basis index, particle 0 first.
    pub fn digits(&self, mut index: usize, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.d + x)
    }
}

/// A permutation of `0..n`, stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n {
                return Err(Error::LabelOutOfRange { label: x, n });
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::DuplicateLabel(x));
            }
        }
        Ok(Permutation(images))
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(Error::LabelOutOfRange { label: a.max(b), n });
        }
        images.swap(a, b);
        Ok(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// The permutation `c` with `p_c = p_self · p_other`, i.e. `c(k) = other(self(k))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&k| other.0[k]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (k, &v) in self.0.iter().enumerate() {
            inv[v] = k;
        }
        Permutation(inv)
    }

    /// Transposition parity: `n` minus the number of cycles.
    pub fn parity(&self) -> usize {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut cycles = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.0[k];
            }
        }
        n - cycles
    }

    /// All `n!` permutations in lexicographic order of their image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation(current.clone()));
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }
}

/// Matrix of `p_π`: it sends `e_{i_0}⊗…⊗e_{i_{n-1}}` to `e_{i_{π(0)}}⊗…⊗e_{i_{π(n-1)}}`.
pub fn permutation_operator(space: &Space, perm: &Permutation) -> Result<CMatrix> {
    let n = perm.len();
    let dim = space.dim(n)?;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let digits = space.digits(col, n);
        let moved: Vec<usize> = (0..n).map(|k| digits[perm.image(k)]).collect();
        out[(space.index_of(&moved), col)] = ONE;
    }
    Ok(out)
}

/// The (anti)symmetrization projector on `n` particles.
pub fn symmetrizer(space: &Space, n: usize, stats: Statistics) -> Result<CMatrix> {
    let dim = space.dim(n)?;
    if stats == Statistics::Boltzmann || n <= 1 {
        return Ok(CMatrix::identity(dim, dim));
    }
    let perms = Permutation::all(n);
    let weight = 1.0 / perms.len() as f64;
    let sign = stats.exchange_sign();
    let mut out = CMatrix::zeros(dim, dim);
    let mut digits = vec![0; n];
    let mut moved = vec![0; n];
    for perm in &perms {
        let coef = Complex64::new(weight * sign.powi(perm.parity() as i32), 0.0);
        for col in 0..dim {
            let mut rest = col;
            for slot in digits.iter_mut().rev() {
                *slot = rest % space.d;
                rest /= space.d;
            }
            for k in 0..n {
                moved[k] = digits[perm.image(k)];
            }
            out[(space.index_of(&moved), col)] += coef;
        }
    }
    Ok(out)
}

fn check_labels(labels: &[usize], n: usize, seen: &mut [bool]) -> Result<()> {
    for &label in labels {
        if label >= n {
            return Err(Error::LabelOutOfRange { label, n });
        }
        if std::mem::replace(&mut seen[label], true) {
            return Err(Error::DuplicateLabel(label));
        }
    }
    Ok(())
}

/// Tensor product of several operators, each placed on its own labels, with the
/// identity on every uncovered particle. The label order of each factor is honored:
/// the factor's `j`-th particle is placed on `labels[j]`.
pub fn embed_many(space: &Space, factors: &[(&CMatrix, &[usize])], n: usize) -> Result<CMatrix> {
    let dim = space.dim(n)?;
    let mut covered = vec![false; n];
    for (op, labels) in factors {
        check_labels(labels, n, &mut covered)?;
        space.check_dim(op, labels.len())?;
    }
    let free: Vec<usize> = (0..n).filter(|&k| !covered[k]).collect();

    // Per basis index: sub-index inside each factor and the index of the uncovered digits.
    let mut sub = vec![vec![0usize; dim]; factors.len()];
    let mut rest = vec![0usize; dim];
    for i in 0..dim {
        let digits = space.digits(i, n);
        for (f, (_, labels)) in factors.iter().enumerate() {
            sub[f][i] = labels.iter().fold(0, |acc, &l| acc * space.d + digits[l]);
        }
        rest[i] = free.iter().fold(0, |acc, &l| acc * space.d + digits[l]);
    }

    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if rest[i] != rest[j] {
                continue;
            }
            let mut value = ONE;
            for (f, (op, _)) in factors.iter().enumerate() {
                value *= op[(sub[f][i], sub[f][j])];
                if value == ZERO {
                    break;
                }
            }
            out[(i, j)] = value;
        }
    }
    Ok(out)
}

/// `op` acting on the particles `labels` (in the given order) inside `n` particles.
pub fn embed(space: &Space, op: &CMatrix, n: usize, labels: &[usize]) -> Result<CMatrix> {
    embed_many(space, &[(op, labels)], n)
}

/// Trace over every particle not in `keep`. The kept particles appear in increasing
/// label order; an empty `keep` yields the 1×1 matrix holding the full trace.
pub fn partial_trace(space: &Space, op: &CMatrix, n: usize, keep: &[usize]) -> Result<CMatrix> {
    space.check_dim(op, n)?;
    let mut flags = vec![false; n];
    check_labels(keep, n, &mut flags)?;
    let kept: Vec<usize> = (0..n).filter(|&k| flags[k]).collect();
    let traced: Vec<usize> = (0..n).filter(|&k| !flags[k]).collect();
    let kdim = space.dim(kept.len())?;
    let tdim = space.dim(traced.len())?;

    let mut digits = vec![0; n];
    let mut table = vec![0usize; kdim * tdim];
    for a in 0..kdim {
        for r in 0..tdim {
            let kd = space.digits(a, kept.len());
            let td = space.digits(r, traced.len());
            for (pos, &l) in kept.iter().enumerate() {
                digits[l] = kd[pos];
            }
            for (pos, &l) in traced.iter().enumerate() {
                digits[l] = td[pos];
            }
            table[a * tdim + r] = space.index_of(&digits);
        }
    }

    let mut out = CMatrix::zeros(kdim, kdim);
    for a in 0..kdim {
        for b in 0..kdim {
            let mut acc = ZERO;
            for r in 0..tdim {
                acc += op[(table[a * tdim + r], table[b * tdim + r])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Trace over the last `m` of `n` particles.
pub fn trace_out_last(space: &Space, op: &CMatrix, n: usize, m: usize) -> Result<CMatrix> {
    if m > n {
        return Err(Error::CutoffExceeded { requested: m, cutoff: n });
    }
    let keep: Vec<usize> = (0..n - m).collect();
    partial_trace(space, op, n, &keep)
}

pub fn trace_norm(op: &CMatrix) -> f64 {
    if op.is_empty() {
        return 0.0;
    }
    op.clone().svd(false, false).singular_values.sum()
}

pub fn max_abs(op: &CMatrix) -> f64 {
    op.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Entrywise Hermiticity within `tol` scaled by the max-norm (floor 1).
pub fn is_hermitian(op: &CMatrix, tol: f64) -> bool {
    op.is_square() && max_abs_diff(op, &op.adjoint()) <= tol * max_abs(op).max(1.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn scalar_matrix(value: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(d: usize) -> Space {
        Space::with_budget(d, 4096).unwrap()
    }

    fn numbered(dim: usize, offset: f64) -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| Complex64::new((i * dim + j) as f64 + offset, (i as f64) - (j as f64) * 0.5))
    }

    #[test]
    fn symmetrizer_ranks_d2() {
        let s = space(2);
        assert_eq!(symmetrizer(&s, 1, Statistics::Bose).unwrap(), CMatrix::identity(2, 2));
        let bose = symmetrizer(&s, 2, Statistics::Bose).unwrap();
        let fermi = symmetrizer(&s, 2, Statistics::Fermi).unwrap();
        let eig =
            |m: &CMatrix| m.clone().symmetric_eigen().eigenvalues.iter().filter(|&&x| (x - 1.0).abs() < 1e-9).count();
        assert_eq!(eig(&bose), 3);
        assert_eq!(eig(&fermi), 1);
    }

    #[test]
    fn symmetrizer_is_orthogonal_projector() {
        for d in 2..=3 {
            let s = space(d);
            for n in 1..=4 {
                if s.dim(n).is_err() {
                    continue;
                }
                for stats in Statistics::ALL {
                    let p = symmetrizer(&s, n, stats).unwrap();
                    assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
                    assert!(max_abs_diff(&p.adjoint(), &p) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transpositions_act_by_sign_on_range() {
        let s = space(2);
        for stats in [Statistics::Bose, Statistics::Fermi] {
            let sym = symmetrizer(&s, 3, stats).unwrap();
            let sign = if stats == Statistics::Fermi { -1.0 } else { 1.0 };
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let p = permutation_operator(&s, &Permutation::transposition(3, a, b).unwrap()).unwrap();
                assert!(max_abs_diff(&(&p * &sym), &(&sym * Complex64::new(sign, 0.0))) < 1e-12);
            }
        }
    }

    #[test]
    fn permutation_operators_compose() {
        let s = space(2);
        let perms = Permutation::all(3);
        assert_eq!(perms.len(), 6);
        for a in &perms {
            for b in &perms {
                let lhs = permutation_operator(&s, a).unwrap() * permutation_operator(&s, b).unwrap();
                let rhs = permutation_operator(&s, &a.compose(b)).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        assert_eq!(permutation_operator(&s, &Permutation::identity(3)).unwrap(), CMatrix::identity(8, 8));
    }

    #[test]
    fn permutation_action_on_basis() {
        let s = space(3);
        let perm = Permutation::from_images(vec![2, 0, 1]).unwrap();
        let p = permutation_operator(&s, &perm).unwrap();
        // e_0 ⊗ e_1 ⊗ e_2 ↦ e_{i_2} ⊗ e_{i_0} ⊗ e_{i_1} = e_2 ⊗ e_0 ⊗ e_1
        let col = s.index_of(&[0, 1, 2]);
        let row = s.index_of(&[2, 0, 1]);
        assert_eq!(p[(row, col)], ONE);
    }

    #[test]
    fn parity_by_cycles() {
        assert_eq!(Permutation::identity(4).parity(), 0);
        assert_eq!(Permutation::transposition(4, 1, 3).unwrap().parity(), 1);
        assert_eq!(Permutation::from_images(vec![1, 2, 0]).unwrap().parity(), 2);
    }

    #[test]
    fn embed_single_particle_is_identity_map() {
        let s = space(2);
        let a = numbered(2, 0.3);
        assert_eq!(embed(&s, &a, 1, &[0]).unwrap(), a);
    }

    #[test]
    fn embed_product_on_labels_zero_and_two() {
        let s = space(2);
        let a = numbered(2, 1.0);
        let b = numbered(2, -2.0);
        let ab = a.kronecker(&b);
        let big = embed(&s, &ab, 3, &[0, 2]).unwrap();
        let expected = embed_many(&s, &[(&a, &[0]), (&b, &[2])], 3).unwrap();
        assert!(max_abs_diff(&big, &expected) < 1e-14);
        // basis check: (A e_i) ⊗ e_j ⊗ (B e_k)
        for col in 0..8 {
            let [i, j, k] = s.digits(col, 3)[..] else { unreachable!() };
            for row in 0..8 {
                let [p, q, r] = s.digits(row, 3)[..] else { unreachable!() };
                let value = if q == j { a[(p, i)] * b[(r, k)] } else { ZERO };
                assert_eq!(big[(row, col)], value);
            }
        }
    }

    #[test]
    fn embed_trace_scales_by_dimension() {
        let s = space(3);
        let a = numbered(3, 0.5);
        let big = embed(&s, &a, 2, &[0]).unwrap();
        assert!((big.trace() - a.trace() * 3.0).norm() < 1e-12);
    }

    #[test]
    fn embed_rejects_bad_labels() {
        let s = space(2);
        let a = numbered(4, 0.0);
        assert_eq!(embed(&s, &a, 2, &[0, 2]), Err(Error::LabelOutOfRange { label: 2, n: 2 }));
        assert_eq!(embed(&s, &a, 3, &[1, 1]), Err(Error::DuplicateLabel(1)));
    }

    #[test]
    fn embed_commutes_with_relabeling() {
        let s = space(2);
        let phi = numbered(4, 0.1);
        let perm = Permutation::from_images(vec![2, 0, 1]).unwrap();
        let p = permutation_operator(&s, &perm).unwrap();
        let labels = [0usize, 1];
        let moved = embed(&s, &phi, 3, &labels).unwrap();
        // conjugating by p relabels particle l to perm^{-1}(l)
        let inv = perm.inverse();
        let relabeled: Vec<usize> = labels.iter().map(|&l| inv.image(l)).collect();
        let expected = embed(&s, &phi, 3, &relabeled).unwrap();
        assert!(max_abs_diff(&(&p * moved * p.adjoint()), &expected) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let s = space(2);
        let a = numbered(2, 1.0);
        let b = numbered(2, 3.0);
        let reduced = partial_trace(&s, &a.kronecker(&b), 2, &[0]).unwrap();
        assert!(max_abs_diff(&reduced, &(&a * b.trace())) < 1e-12);
        let other = partial_trace(&s, &a.kronecker(&b), 2, &[1]).unwrap();
        assert!(max_abs_diff(&other, &(&b * a.trace())) < 1e-12);
        let op = numbered(8, 0.0);
        assert_eq!(partial_trace(&s, &op, 3, &[0, 1, 2]).unwrap(), op);
        let full = partial_trace(&s, &op, 3, &[]).unwrap();
        assert_eq!(full[(0, 0)], op.trace());
    }

    #[test]
    fn partial_trace_of_bose_symmetrizer() {
        let s = space(2);
        let sym = symmetrizer(&s, 2, Statistics::Bose).unwrap();
        let reduced = partial_trace(&s, &sym, 2, &[0]).unwrap();
        // (1/2)(Tr_2 I + Tr_2 SWAP) = (1/2)(2 I + I)
        assert!(max_abs_diff(&reduced, &(CMatrix::identity(2, 2) * Complex64::new(1.5, 0.0))) < 1e-14);
        assert!((reduced.trace().re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let s = Space::with_budget(2, 16).unwrap();
        assert!(s.dim(4).is_ok());
        assert_eq!(s.dim(5), Err(Error::DimensionBudget { n: 5, dim: 32, budget: 16 }));
        assert!(symmetrizer(&s, 5, Statistics::Bose).is_err());
    }

    #[test]
    fn trace_norm_of_hermitian_is_abs_eigen_sum() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        assert!((trace_norm(&m) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn statistics_round_trip_through_strings() {
        for stats in Statistics::ALL {
            assert_eq!(stats.to_string().parse::<Statistics>().unwrap(), stats);
        }
        assert!("anyon".parse::<Statistics>().is_err());
    }
}
