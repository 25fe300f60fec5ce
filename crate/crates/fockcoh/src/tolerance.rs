//! Numerical tolerances, stated once and reused everywhere.
//!
//! Every comparison in the crate routes through one of these constants so
//! that the accuracy contract of the whole library can be audited in a
//! single file. Values are chosen for `f64` arithmetic at the problem sizes
//! the crate targets (total particle number up to a few thousand, sector
//! dimensions up to a few thousand).

/// Norms of constructed states and traces of density matrices must lie
/// within this distance of 1.
pub const NORM_TOL: f64 = 1e-12;

/// A Hermitian block counts as positive semidefinite when its smallest
/// eigenvalue is at least `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;

/// Entrywise tolerance when comparing operator blocks or amplitude vectors.
pub const BLOCK_EQ_TOL: f64 = 1e-12;

/// Eigenvalues below this threshold are dropped from von Neumann entropy
/// sums; they are indistinguishable from PSD rounding noise.
pub const EIGENVALUE_DROP: f64 = 1e-14;

/// Relative threshold below which amplitudes produced by cancelling
/// convolutions are snapped to exact zero.
pub const ZERO_SNAP_REL: f64 = 1e-14;

/// Truncation rule for states of indefinite particle number: the sector
/// cutoff is chosen so the analytic tail mass stays below this bound.
pub const TAIL_MASS_BOUND: f64 = 1e-12;

/// Default chordal-metric radius when clustering polynomial roots into
/// projective directions. Clusters of multiplicity `m` computed from a
/// degree-`d` polynomial scatter like `eps^(1/m)`, so callers working with
/// high multiplicities must widen this (the membership test does so
/// automatically from its own multiplicity estimate).
pub const ROOT_CLUSTER_TOL: f64 = 1e-6;

/// Verdicts whose decisive residual lands in `[tol/10, tol]` are flagged
/// uncertain: root clustering and spinor orthogonality are ill-conditioned
/// near degeneracies.
pub const UNCERTAIN_BAND: f64 = 10.0;

/// A sector is treated as occupied when its weight exceeds this floor;
/// conditional states on lighter sectors are numerically meaningless.
pub const SECTOR_WEIGHT_FLOOR: f64 = 1e-15;

/// Expected-particle-number preconditions (e.g. for the indefinite-number
/// rate) are enforced to this absolute tolerance.
pub const ENERGY_PRECONDITION_TOL: f64 = 1e-6;

/// Guard on materialized basis states for product-state constructors.
pub const MATERIALIZATION_GUARD: u64 = 1_000_000;

/// Guard on total single-copy samples (`n * shots`) in the simulator.
pub const SIMULATION_SAMPLE_GUARD: u64 = 1_000_000_000;

/// Guard on explicitly enumerated type classes in exact-expectation mode.
pub const TYPE_ENUMERATION_GUARD: u64 = 1_000_000;

/// Largest per-shot copy count for which type-class multiplicities are
/// compared as exact big integers; beyond it a log-space estimate is used,
/// falling back to exact arithmetic only when the floor is ambiguous.
pub const EXACT_MULTIPLICITY_MAX: u64 = 4096;
