//! Correlation operators of finite quantum many-particle systems: cluster expansions,
//! cumulant-based evolution, marginal densities and observables.

pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod numerics;
pub mod observables;
pub mod partitions;
pub mod sampling;
pub mod seqalgebra;
pub mod tensorspace;
