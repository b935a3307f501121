//! Average values and dispersions in the density, correlation and marginal
//! representations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hierarchy::{marginal_correlation, marginal_density, CorrelationState};
use crate::partitions::{factorial, subsets};
use crate::seqalgebra::{d_cluster, FockSpace, GradedSequence, OperatorSequence};
use crate::tensorspace::{embed, is_hermitian, CMatrix};

/// An observable `A^(s) = (0,…,0,a_s,…,Σ_{i_1<…<i_s} a_s(i_1,…,i_s),…)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    order: usize,
    kernel: CMatrix,
}

impl Observable {
    /// `Σ_i a_1(i)` on every sector.
    pub fn additive(fs: &FockSpace, a1: CMatrix) -> Result<Self> {
        Self::new(fs, 1, a1)
    }

    /// `kernel` acts on `order` particles and must be Hermitian and commute with
    /// permutations of its arguments.
    pub fn new(fs: &FockSpace, order: usize, kernel: CMatrix) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("observable order must be at least 1".into()));
        }
        fs.check_particles(order)?;
        let dim = fs.dim(order);
        if kernel.nrows() != dim || kernel.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: kernel.nrows() });
        }
        if !is_hermitian(&kernel, 1e-12) {
            return Err(Error::Invalid("observable kernel is not Hermitian".into()));
        }
        for pi in crate::tensorspace::Permutation::all(order).into_iter().skip(1) {
            let p = crate::tensorspace::permutation_operator(fs.space(), &pi)?;
            if crate::tensorspace::max_abs_diff(&(&p * &kernel), &(&kernel * &p)) > 1e-12 {
                return Err(Error::Invalid("observable kernel is not permutation symmetric".into()));
            }
        }
        Ok(Observable { order, kernel })
    }

    /// The particle number `(0, I, 2I, …)`.
    pub fn number(fs: &FockSpace) -> Self {
        Observable { order: 1, kernel: CMatrix::identity(fs.d(), fs.d()) }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kernel(&self) -> &CMatrix {
        &self.kernel
    }

    /// `A_n`, zero below the order of the observable.
    pub fn component(&self, fs: &FockSpace, n: usize) -> Result<CMatrix> {
        let dim = fs.dim(n);
        let mut out = CMatrix::zeros(dim, dim);
        if n < self.order {
            return Ok(out);
        }
        let all: Vec<usize> = (0..n).collect();
        for tuple in subsets(&all).filter(|s| s.len() == self.order) {
            out += embed(fs.space(), &self.kernel, n, &tuple)?;
        }
        Ok(out)
    }

    /// `(1/s!) Tr a_s F_s`.
    pub fn average_marginal(&self, marginal: &CMatrix) -> Complex64 {
        (&self.kernel * marginal).trace() / factorial(self.order)
    }
}

fn normalizer(densities: &OperatorSequence) -> Result<Complex64> {
    let mut z = densities.vacuum();
    for n in 1..=densities.cutoff() {
        z += densities.component(n).trace() / factorial(n);
    }
    if z.norm() == 0.0 {
        return Err(Error::Invalid("normalizer (I,D) vanishes".into()));
    }
    Ok(z)
}

/// `(I,D)^{-1} Σ_n (1/n!) Tr A_n D_n` over the cutoff.
pub fn average_grandcanonical(fs: &FockSpace, a: &Observable, densities: &OperatorSequence) -> Result<Complex64> {
    let z = normalizer(densities)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in a.order()..=fs.cutoff() {
        sum += (a.component(fs, n)? * densities.component(n)).trace() / factorial(n);
    }
    Ok(sum / z)
}

/// Grand-canonical average with the normalizer inverted as a series in the
/// particle number, terms of total order above the cutoff dropped.
pub fn average_grandcanonical_graded(
    fs: &FockSpace,
    a: &Observable,
    densities: &OperatorSequence,
) -> Result<Complex64> {
    let marginals = crate::hierarchy::marginal_densities_grandcanonical_graded(fs, densities)?;
    Ok(a.average_marginal(&marginals.total(a.order())))
}

/// `(1/s!) Σ_n (1/n!) Tr a_s g_{1+n}({1..s}, s+1, …, s+n)`.
pub fn average_correlation(fs: &FockSpace, a: &Observable, g: &CorrelationState) -> Result<Complex64> {
    let clusters = d_cluster(fs, g, a.order())?;
    Ok(a.average_marginal(&marginal_density(fs, &clusters)?))
}

/// `Σ_n (1/n!) Tr g_{1+n}`.
pub fn mean_particle_number(fs: &FockSpace, g: &CorrelationState) -> Result<Complex64> {
    Ok(marginal_correlation(fs, g, 1)?.trace())
}

/// Dispersion of an additive observable from correlation operators:
/// `Tr (a² - ⟨A⟩²) G_1 + Tr a(1)a(2) G_2` with `⟨A⟩ = Tr a G_1`.
pub fn dispersion(fs: &FockSpace, a1: &CMatrix, g: &CorrelationState) -> Result<Complex64> {
    let g1 = marginal_correlation(fs, g, 1)?;
    let g2 = if fs.cutoff() >= 2 { Some(marginal_correlation(fs, g, 2)?) } else { None };
    Ok(dispersion_terms(a1, &g1, g2.as_ref()))
}

fn dispersion_terms(a1: &CMatrix, first: &CMatrix, second: Option<&CMatrix>) -> Complex64 {
    let mean = (a1 * first).trace();
    let square = a1 * a1 - CMatrix::identity(a1.nrows(), a1.ncols()) * (mean * mean);
    let mut value = (square * first).trace();
    if let Some(second) = second {
        value += (a1.kronecker(a1) * second).trace();
    }
    value
}

/// Dispersion from marginal densities:
/// `Tr (a² - ⟨A⟩²) F_1 + Tr a(1)a(2) (F_2 - S_2 F_1 F_1)`.
pub fn dispersion_from_marginals(fs: &FockSpace, a1: &CMatrix, f1: &CMatrix, f2: Option<&CMatrix>) -> Complex64 {
    let correlation = f2.map(|f2| f2 - fs.symmetrize_left(2, &f1.kronecker(f1)));
    dispersion_terms(a1, f1, correlation.as_ref())
}

/// Dispersion from graded marginals, the product `F_1 F_1` cut at total grade `N`.
pub fn dispersion_from_graded_marginals(fs: &FockSpace, a1: &CMatrix, marginals: &GradedSequence) -> Complex64 {
    let f1 = marginals.total(1);
    if fs.cutoff() < 2 {
        return dispersion_terms(a1, &f1, None);
    }
    let levels = marginals.level(1);
    let mut product = CMatrix::zeros(fs.dim(2), fs.dim(2));
    for (j, left) in levels.iter().enumerate() {
        for right in levels.iter().take(fs.cutoff() - 1 - j) {
            product += left.kronecker(right);
        }
    }
    let correlation = marginals.total(2) - fs.symmetrize_left(2, &product);
    dispersion_terms(a1, &f1, Some(&correlation))
}
