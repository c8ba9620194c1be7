//! Banded Hermitian operators on the integers: finite sections, weighted
//! commutator diagnostics, a limsup criterion for essential self-adjointness
//! and a deficiency probe for one-sided Jacobi matrices.

pub mod criterion;
pub mod deficiency;
pub mod diagnostics;
pub mod operator;
pub mod report;
pub mod section;
