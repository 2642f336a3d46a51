//! Minimal parametrizations of density matrices with degenerate spectra.
//!
//! A density matrix is written `ρ = U D U†`. The unitary is a word of
//! phase and plane-rotation atoms, the eigenvalues come from polar angles on
//! a sphere, and the factors that commute with `D` are pruned so the chart
//! has exactly as many parameters as the orbit of `D` has dimensions.

pub mod builder;
pub mod charts;
pub mod decompose;
pub mod degeneracy;
pub mod error;
pub mod numerics;
pub mod words;

pub use builder::{
    build_commutant, build_density, canonical_order, jacobian_rank, prune_equivalence, validate_density,
    BlockParam, CommutantSpec, DensityChart, DensityReport, Pruned, RankOptions,
};
pub use charts::{fit_chart, EigenChart};
pub use decompose::{decompose, reconstruct, DecompositionResult};
pub use degeneracy::DegeneracyPattern;
pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, ComplexScalar};
pub use words::{normalize, Atom, Pair, Word, WordForm};
