//! Numerical toolkit for coherence resource theories on bosonic Fock space.
//!
//! The library models pure states and density operators on the symmetric
//! Fock space of `M` bosonic modes, truncated to finitely many total-number
//! sectors. On top of that representation it provides
//!
//! * constructors for the named two-mode and paired-mode states used in
//!   coherence distillation studies ([`states`]),
//! * entropy functionals and the three coherence quantifiers `C_N`, `C`,
//!   and `C^A` ([`coherence`]),
//! * membership tests for the free-state families `Delta^A` (Fock-diagonal
//!   mixtures) and pure two-mode `Delta^B` (linear-optical orbits of Fock
//!   states), plus an incoherent-Kraus check ([`freesets`]),
//! * analytic distillation rates, closed forms, and asymptotic bounds
//!   ([`distill`]),
//! * a Monte-Carlo simulator of the type-class measurement protocol with
//!   exact small-instance enumeration ([`protocol`]), and
//! * parameter sweeps and an independent constrained-entropy maximizer
//!   ([`optimize`]).
//!
//! Amplitude bookkeeping that would overflow or underflow `f64` in linear
//! space (factorials up to 10^6, binomials at N = 4000) runs in signed
//! log-space ([`logspace`]) backed by exact big-integer combinatorics.
//! All randomized operations take explicit seeds and derive per-task
//! substreams deterministically, so results do not depend on scheduling.

pub mod coherence;
pub mod distill;
pub mod error;
pub mod fock;
pub mod freesets;
pub mod linalg;
pub mod logspace;
pub mod optimize;
pub mod protocol;
pub mod states;
pub mod tolerance;

pub use error::{FockcohError, Result};
pub use fock::{DensityMatrix, FockSpaceState, OccupationVector};
pub use logspace::LogWeight;
