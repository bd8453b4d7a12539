//! Desk-scale laboratory for a skew-product counterexample to polynomial multiple
//! convergence: two conjugate measure-preserving systems `T` and `S = R⁻¹TR` on
//! `Y × {0,1}^Z` whose multiple averages along `p₁(n)`, `p₂(n)` fail to converge.

pub mod base;
pub mod cli;
pub mod dynamics;
pub mod experiments;
pub mod numeric;
pub mod perm;
pub mod symbolic;
