//! Membership tests for the free sets of the two resource orderings, plus
//! the incoherent-Kraus test and energy-density preservation checks.
//!
//! The Fock-diagonal set is easy: a density matrix belongs iff every
//! off-diagonal entry vanishes. The linear-optical orbit of Fock states is
//! subtler. A pure two-mode state of sector N factors (up to phase) as a
//! product of N single-particle creation operators; it lies in the orbit iff
//! those factors span at most two directions and, when exactly two, the
//! directions are orthogonal. Equivalently the state is an eigenvector of a
//! spin projection J·n for some axis n, which is the test actually used for
//! the verdict here: the smallest eigenvalue of the spin covariance matrix
//! is the squared residual min_n ‖(J·n − ⟨J·n⟩)ψ‖², so the verdict reduces
//! to a 3x3 eigenvalue problem that stays well conditioned at any
//! multiplicity. Factor directions are still extracted by polynomial root
//! finding and reported as evidence.

use num_complex::Complex64;
use serde::Serialize;

use crate::coherence::{OutcomeLabel, ProbabilityTable};
use crate::error::{FockcohError, Result};
use crate::fock::{dephase_fock, swap_modes, DensityMatrix, FockSpaceState, TwoModeUnitary};
use crate::linalg::{hermitian_eigen, CMat};
use crate::tolerance::{PSD_TOL, ROOT_CLUSTER_TOL, UNCERTAIN_BAND};

/// Outcome of a membership test, with enough numbers to audit the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub verdict: bool,
    /// Set when the decisive residual lands within a factor of
    /// [`UNCERTAIN_BAND`] below the tolerance; such verdicts are fragile.
    pub uncertain: bool,
    pub tolerance_used: f64,
    pub evidence: MembershipEvidence,
}

/// Test-specific diagnostics backing a [`MembershipReport`] verdict.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MembershipEvidence {
    /// Fock-diagonal test: largest off-diagonal magnitudes found.
    FockDiagonal {
        max_offdiagonal: f64,
        max_cross_sector: f64,
    },
    /// Linear-optical-orbit test on a pure sector-N state.
    SpinAxis {
        sector: u64,
        /// Best candidate rotation axis (unit vector).
        axis: [f64; 3],
        /// Spin projection along `axis`.
        eigenvalue: f64,
        /// √λ_min of the spin covariance, scaled by the spin length N/2.
        relative_residual: f64,
        /// Factor directions recovered from the amplitude polynomial.
        root_clusters: Vec<RootCluster>,
        distinct_directions: usize,
        /// |⟨s₁|s₂⟩| for the two direction spinors when exactly two
        /// clusters are found.
        orthogonality_residual: Option<f64>,
    },
    /// Incoherent-Kraus test.
    KrausIncoherence {
        completeness_defect: f64,
        /// Largest second-ranked column entry across all operators; zero
        /// for a family whose operators touch each column at most once.
        max_secondary_column_entry: f64,
    },
}

/// One cluster of polynomial roots on the Riemann sphere.
#[derive(Debug, Clone, Serialize)]
pub struct RootCluster {
    /// Representative root as (re, im); `None` is the point at infinity.
    pub root: Option<[f64; 2]>,
    pub multiplicity: usize,
}

fn near_tolerance(residual: f64, tol: f64) -> bool {
    residual <= tol && residual >= tol / UNCERTAIN_BAND
}

/// Test whether a density matrix is diagonal in the Fock basis.
pub fn is_delta_a(rho: &DensityMatrix, tol: f64) -> MembershipReport {
    let max_offdiagonal = rho.max_offdiag();
    let max_cross_sector = rho.max_cross_sector_entry();
    MembershipReport {
        verdict: max_offdiagonal <= tol,
        uncertain: near_tolerance(max_offdiagonal, tol),
        tolerance_used: tol,
        evidence: MembershipEvidence::FockDiagonal {
            max_offdiagonal,
            max_cross_sector,
        },
    }
}

/// Spin ladder images J₊ψ and J₋ψ of a sector-N amplitude vector, indexed
/// by the mode-2 occupation k. J₊ = a₁†a₂ moves k → k−1 with weight
/// √(k(N−k+1)); J₋ is its adjoint.
fn ladder_images(c: &[Complex64], n: u64) -> (Vec<Complex64>, Vec<Complex64>) {
    let dim = c.len();
    let mut plus = vec![Complex64::new(0.0, 0.0); dim];
    let mut minus = vec![Complex64::new(0.0, 0.0); dim];
    for k in 1..dim {
        let f = ((k as f64) * ((n as f64) - (k as f64) + 1.0)).sqrt();
        plus[k - 1] += c[k] * f;
    }
    for k in 0..dim.saturating_sub(1) {
        let f = (((n as f64) - (k as f64)) * ((k as f64) + 1.0)).sqrt();
        minus[k + 1] += c[k] * f;
    }
    (plus, minus)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Mean spin vector and symmetrized second-moment matrix ⟨{J_a,J_b}⟩/2.
fn spin_moments(c: &[Complex64], n: u64) -> ([f64; 3], [[f64; 3]; 3]) {
    let dim = c.len();
    let (plus, minus) = ladder_images(c, n);
    let half = Complex64::new(0.5, 0.0);
    let half_over_i = Complex64::new(0.0, -0.5);
    let images: [Vec<Complex64>; 3] = [
        (0..dim).map(|k| (plus[k] + minus[k]) * half).collect(),
        (0..dim)
            .map(|k| (plus[k] - minus[k]) * half_over_i)
            .collect(),
        (0..dim)
            .map(|k| c[k] * (0.5 * ((n as f64) - 2.0 * (k as f64))))
            .collect(),
    ];
    let mut mean = [0.0f64; 3];
    let mut second = [[0.0f64; 3]; 3];
    for a in 0..3 {
        mean[a] = inner(c, &images[a]).re;
        for b in a..3 {
            let v = inner(&images[a], &images[b]).re;
            second[a][b] = v;
            second[b][a] = v;
        }
    }
    (mean, second)
}

/// Smallest eigenpair of a real symmetric 3x3 matrix.
fn min_eigenpair(m: &[[f64; 3]; 3]) -> (f64, [f64; 3]) {
    let mut cm = CMat::zeros(3);
    for i in 0..3 {
        for j in 0..3 {
            cm.set(i, j, Complex64::new(m[i][j], 0.0));
        }
    }
    let eig = hermitian_eigen(&cm);
    let mut axis = [0.0f64; 3];
    let mut norm = 0.0f64;
    for i in 0..3 {
        let z = eig.vectors.get(i, 0);
        axis[i] = z.re;
        norm += z.re * z.re;
    }
    // The matrix is real, so the eigenvector is real up to a global phase;
    // normalizing the real part recovers it.
    let norm = norm.sqrt();
    if norm > 0.0 {
        for a in &mut axis {
            *a /= norm;
        }
    } else {
        axis = [0.0, 0.0, 1.0];
    }
    (eig.values[0], axis)
}

/// Chordal distance between two points of the Riemann sphere, with `None`
/// as the point at infinity. Bounded by 1 in this normalization.
fn chordal_distance(a: Option<Complex64>, b: Option<Complex64>) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (Some(z), None) | (None, Some(z)) => 1.0 / (1.0 + z.norm_sqr()).sqrt(),
        (Some(z), Some(w)) => (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt(),
    }
}

/// Unit spinor for a projective direction: root z of the dehomogenized
/// amplitude polynomial corresponds to the creation-operator direction
/// (−z, 1)/√(1+|z|²); the point at infinity to (1, 0).
fn direction_spinor(root: Option<Complex64>) -> [Complex64; 2] {
    match root {
        None => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        Some(z) => {
            let scale = 1.0 / (1.0 + z.norm_sqr()).sqrt();
            [-z * scale, Complex64::new(scale, 0.0)]
        }
    }
}

/// All roots of Σ coeffs[k] z^k by the Aberth-Ehrlich simultaneous
/// iteration. The leading coefficient must be nonzero.
fn aberth_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    assert!(d >= 1 && coeffs[d].norm_sqr() > 0.0);
    if d == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let mut radius = (coeffs[0].norm() / coeffs[d].norm()).powf(1.0 / d as f64);
    if !radius.is_finite() || radius < 1e-6 {
        radius = 1.0;
    }
    let mut z: Vec<Complex64> = (0..d)
        .map(|i| {
            // Irrational angle offset keeps guesses away from real-axis
            // symmetries of real-coefficient inputs.
            let angle = 2.0 * std::f64::consts::PI * (i as f64) / (d as f64) + 0.437;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..500 {
        let mut largest_step = 0.0f64;
        let mut next = z.clone();
        for i in 0..d {
            // Horner pass for p and p' at z[i].
            let mut p = coeffs[d];
            let mut dp = Complex64::new(0.0, 0.0);
            for k in (0..d).rev() {
                dp = dp * z[i] + p;
                p = p * z[i] + coeffs[k];
            }
            if p.norm_sqr() == 0.0 {
                continue;
            }
            let newton = p / dp;
            let newton = if newton.re.is_finite() && newton.im.is_finite() {
                newton
            } else {
                Complex64::new(1e-3, 1e-3)
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i] - zj;
                    if diff.norm_sqr() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm_sqr() > 0.0 {
                newton / denom
            } else {
                newton
            };
            next[i] = z[i] - step;
            largest_step = largest_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        z = next;
        if largest_step <= 1e-14 {
            break;
        }
    }
    z
}

/// Factor directions of a sector-N two-mode amplitude vector: roots of the
/// dehomogenized polynomial Σ d_k z^k with d_k = c_k/√((N−k)! k!), grouped
/// on the Riemann sphere.
///
/// Repeated roots scatter like ε^(1/m) under rounding, so the clustering
/// radius widens with the degree; the result is diagnostic evidence, not
/// the verdict.
fn factor_direction_clusters(c: &[Complex64], n: u64) -> Vec<RootCluster> {
    let dim = c.len();
    // d_k in log scale to survive large N, then rescaled to max 1.
    let mut d: Vec<Complex64> = Vec::with_capacity(dim);
    let mut ln_scale: Vec<f64> = Vec::with_capacity(dim);
    for k in 0..dim {
        let ln_norm = 0.5
            * (crate::logspace::ln_factorial((n - k as u64) as u64)
                + crate::logspace::ln_factorial(k as u64));
        ln_scale.push(-ln_norm);
        d.push(c[k]);
    }
    let max_ln = (0..dim)
        .filter(|&k| d[k].norm_sqr() > 0.0)
        .map(|k| d[k].norm().ln() + ln_scale[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|k| {
            if d[k].norm_sqr() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let ln_mag = d[k].norm().ln() + ln_scale[k] - max_ln;
                Complex64::from_polar(ln_mag.exp(), d[k].arg())
            }
        })
        .collect();

    // Coefficients below this floor are treated as exact zeros: they can
    // change true roots only at the clustering scale itself.
    let floor = 1e-13;
    let degree = match (0..dim).rev().find(|&k| coeffs[k].norm() > floor) {
        Some(k) => k,
        None => 0,
    };
    let at_infinity = dim - 1 - degree;
    let low = (0..=degree)
        .find(|&k| coeffs[k].norm() > floor)
        .unwrap_or(degree);
    let at_zero = low;

    let mut finite: Vec<Complex64> = Vec::new();
    finite.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(at_zero));
    if degree > low {
        finite.extend(aberth_roots(&coeffs[low..=degree]));
    }

    let total_degree = (dim - 1).max(1);
    let radius = ROOT_CLUSTER_TOL.max(1e-13f64.powf(1.0 / total_degree as f64));

    let mut clusters: Vec<(Option<Complex64>, usize)> = Vec::new();
    if at_infinity > 0 {
        clusters.push((None, at_infinity));
    }
    for root in finite {
        let mut assigned = false;
        for (rep, count) in clusters.iter_mut() {
            if chordal_distance(*rep, Some(root)) <= radius {
                if let Some(r) = rep {
                    // Running mean keeps the representative centered.
                    let w = *count as f64;
                    *r = (*r * w + root) / (w + 1.0);
                }
                *count += 1;
                assigned = true;
                break;
            }
        }
        if !assigned {
            clusters.push((Some(root), 1));
        }
    }
    clusters.sort_by(|a, b| b.1.cmp(&a.1));
    clusters
        .into_iter()
        .map(|(rep, multiplicity)| RootCluster {
            root: rep.map(|z| [z.re, z.im]),
            multiplicity,
        })
        .collect()
}

/// Test whether a pure two-mode state of a single particle sector lies in
/// the orbit of Fock states under number-conserving linear optics.
///
/// The verdict comes from the spin covariance: the state is in the orbit
/// iff some spin projection J·n has zero variance on it. The residual
/// reported is √λ_min(V)/(N/2), so tolerances are scale free in N.
///
/// Amplitude rounding of size δ inflates the residual to O(√δ), so a state
/// carried through a few floating-point operations lands near 3e-7 even
/// when it is exactly in the orbit; genuine non-members sit at Ω(1/√N).
/// A tolerance of 1e-6 separates the two with orders of magnitude to
/// spare, while 1e-9 would misclassify numerically rotated members.
pub fn pure_in_delta_b(state: &FockSpaceState, tol: f64) -> Result<MembershipReport> {
    if state.modes() != 2 {
        return Err(FockcohError::InvalidArguments(format!(
            "the linear-optical orbit test covers two-mode states, got {} modes",
            state.modes()
        )));
    }
    let sector = state.single_sector().ok_or_else(|| {
        FockcohError::InvalidArguments(
            "the linear-optical orbit test needs support on a single particle sector".into(),
        )
    })?;
    let c = state
        .dense_sector(sector)
        .expect("two-mode states store dense sectors")
        .to_vec();
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if !(norm - 1.0).abs().is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(FockcohError::InvalidArguments(format!(
            "state norm² = {norm:.12} is too far from 1 for a membership verdict"
        )));
    }

    let (mean, second) = spin_moments(&c, sector);
    let mut covariance = [[0.0f64; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            covariance[a][b] = second[a][b] - mean[a] * mean[b];
        }
    }
    let (lambda_min, axis) = min_eigenpair(&covariance);
    let spin_length = (sector as f64 / 2.0).max(1.0);
    let relative_residual = lambda_min.max(0.0).sqrt() / spin_length;
    let eigenvalue = mean[0] * axis[0] + mean[1] * axis[1] + mean[2] * axis[2];

    let root_clusters = factor_direction_clusters(&c, sector);
    let distinct_directions = root_clusters.len();
    let orthogonality_residual = if distinct_directions == 2 {
        let s1 = direction_spinor(root_clusters[0].root.map(|r| Complex64::new(r[0], r[1])));
        let s2 = direction_spinor(root_clusters[1].root.map(|r| Complex64::new(r[0], r[1])));
        Some((s1[0].conj() * s2[0] + s1[1].conj() * s2[1]).norm())
    } else {
        None
    };

    Ok(MembershipReport {
        verdict: relative_residual <= tol,
        uncertain: near_tolerance(relative_residual, tol),
        tolerance_used: tol,
        evidence: MembershipEvidence::SpinAxis {
            sector,
            axis,
            eigenvalue,
            relative_residual,
            root_clusters,
            distinct_directions,
            orthogonality_residual,
        },
    })
}

/// Density-matrix entry point for the orbit test. Accepts only states that
/// are numerically pure; the orbit criterion does not extend to mixtures,
/// so anything else is refused rather than approximated.
pub fn is_delta_b(rho: &DensityMatrix, tol: f64) -> Result<MembershipReport> {
    let eig = hermitian_eigen(rho.matrix());
    let top = *eig
        .values
        .last()
        .ok_or_else(|| FockcohError::InvalidArguments("empty density matrix".into()))?;
    if (top - 1.0).abs() > PSD_TOL {
        return Err(FockcohError::MixedStateUnsupported(format!(
            "largest eigenvalue {top:.12}; the linear-optical orbit test covers pure states only"
        )));
    }
    let dim = rho.dim();
    let column = eig.vectors.dim() - 1;
    let components = (0..dim).map(|i| (rho.basis()[i].clone(), eig.vectors.get(i, column)));
    let pure = FockSpaceState::from_components(rho.modes(), components, 0.0);
    pure_in_delta_b(&pure, tol)
}

/// Test whether a Kraus family is trace preserving and incoherent: each
/// operator may touch each Fock basis column at most once, so every
/// selective outcome maps diagonal states to diagonal states.
pub fn kraus_in_e_a(kraus_set: &[CMat], tol: f64) -> Result<MembershipReport> {
    let first = kraus_set
        .first()
        .ok_or_else(|| FockcohError::InvalidArguments("empty Kraus family".into()))?;
    let dim = first.dim();
    if kraus_set.iter().any(|k| k.dim() != dim) {
        return Err(FockcohError::InvalidArguments(
            "Kraus operators must share dimensions".into(),
        ));
    }

    let mut completeness = CMat::zeros(dim);
    for k in kraus_set {
        completeness = completeness.add(&k.adjoint().matmul(k));
    }
    let identity = CMat::identity(dim);
    let completeness_defect = completeness.sub(&identity).max_abs_entry();

    let mut max_secondary = 0.0f64;
    for k in kraus_set {
        for col in 0..dim {
            let mut best = 0.0f64;
            let mut second = 0.0f64;
            for row in 0..dim {
                let mag = k.get(row, col).norm();
                if mag > best {
                    second = best;
                    best = mag;
                } else if mag > second {
                    second = mag;
                }
            }
            max_secondary = max_secondary.max(second);
        }
    }

    let residual = completeness_defect.max(max_secondary);
    Ok(MembershipReport {
        verdict: residual <= tol,
        uncertain: near_tolerance(residual, tol),
        tolerance_used: tol,
        evidence: MembershipEvidence::KrausIncoherence {
            completeness_defect,
            max_secondary_column_entry: max_secondary,
        },
    })
}

/// Number-conserving operations whose effect on per-pair particle budgets
/// can be audited.
#[derive(Debug, Clone)]
pub enum EnergyOp {
    Identity,
    SwapModes { i: usize, j: usize },
    PairUnitary { i: usize, j: usize, unitary: TwoModeUnitary },
    /// Projective measurement in the occupation basis (type-class readout);
    /// its selective outcomes never move diagonal weight between
    /// occupations, so expectations are computed on the dephased state.
    TypeClassMeasurement,
}

fn pair_expectation_from_table(table: &ProbabilityTable, pair: (usize, usize)) -> f64 {
    let mut acc = crate::logspace::CompensatedSum::new();
    for (label, weight) in table.iter() {
        if let OutcomeLabel::Occupation(occ) = label {
            let particles = f64::from(occ.get(pair.0)) + f64::from(occ.get(pair.1));
            acc.add(weight.to_f64() * particles);
        }
    }
    acc.value()
}

/// Check that an operation preserves the expected particle number in every
/// declared mode pair, probing it on the supplied states.
pub fn preserves_energy_density(
    op: &EnergyOp,
    mode_pairs: &[(usize, usize)],
    probes: &[FockSpaceState],
    tol: f64,
) -> Result<bool> {
    for probe in probes {
        probe.validate()?;
        for &(i, j) in mode_pairs {
            if i >= probe.modes() || j >= probe.modes() {
                return Err(FockcohError::InvalidArguments(format!(
                    "pair ({i}, {j}) out of range for a {}-mode probe",
                    probe.modes()
                )));
            }
            let before = probe.expected_particle_number(&[i, j]);
            let after = match op {
                EnergyOp::Identity => before,
                EnergyOp::SwapModes { i: a, j: b } => {
                    swap_modes(probe, *a, *b)?.expected_particle_number(&[i, j])
                }
                EnergyOp::PairUnitary { i: a, j: b, unitary } => unitary
                    .apply_on_modes(probe, *a, *b)?
                    .expected_particle_number(&[i, j]),
                EnergyOp::TypeClassMeasurement => {
                    pair_expectation_from_table(&dephase_fock(probe), (i, j))
                }
            };
            if (after - before).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{random_number_conserving_unitary, OccupationVector};
    use crate::states;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn report_residual(report: &MembershipReport) -> f64 {
        match &report.evidence {
            MembershipEvidence::SpinAxis {
                relative_residual, ..
            } => *relative_residual,
            _ => panic!("expected spin-axis evidence"),
        }
    }

    #[test]
    fn diagonal_mixture_is_fock_diagonal() {
        let half: f64 = 0.5;
        let s0 = states::parse_named_state("fock(n1=2,n2=0)").unwrap();
        let s1 = states::parse_named_state("fock(n1=0,n2=2)").unwrap();
        let d0 = DensityMatrix::from_pure(&s0).unwrap();
        let d1 = DensityMatrix::from_pure(&s1).unwrap();
        let mixed = DensityMatrix::mixture(&[(half, &d0), (half, &d1)]).unwrap();
        let report = is_delta_a(&mixed, 1e-12);
        assert!(report.verdict);
        assert!(!report.uncertain);
    }

    #[test]
    fn mc1_projector_has_off_diagonal_one_half() {
        let mc1 = states::mc(1);
        let rho = DensityMatrix::from_pure(&mc1).unwrap();
        let report = is_delta_a(&rho, 1e-12);
        assert!(!report.verdict);
        match report.evidence {
            MembershipEvidence::FockDiagonal {
                max_offdiagonal, ..
            } => assert!((max_offdiagonal - 0.5).abs() < 1e-15),
            _ => panic!("wrong evidence kind"),
        }
    }

    #[test]
    fn dephased_states_are_fock_diagonal() {
        for spec in ["mc(n=3)", "bec(n=4)", "psi(theta=0.7,m=2,n=5)"] {
            let state = states::parse_named_state(spec).unwrap();
            let rho = DensityMatrix::from_pure(&state).unwrap().dephased();
            assert!(is_delta_a(&rho, 1e-12).verdict, "{spec}");
        }
    }

    #[test]
    fn noon_two_is_in_the_orbit_with_orthogonal_directions() {
        let state = states::noon(2).unwrap();
        let report = pure_in_delta_b(&state, 1e-6).unwrap();
        assert!(report.verdict);
        match &report.evidence {
            MembershipEvidence::SpinAxis {
                distinct_directions,
                orthogonality_residual,
                root_clusters,
                ..
            } => {
                assert_eq!(*distinct_directions, 2);
                let ortho = orthogonality_residual.expect("two clusters");
                assert!(ortho < 1e-9, "orthogonality residual {ortho}");
                // Roots are ±i.
                for cluster in root_clusters {
                    let r = cluster.root.expect("finite roots");
                    assert!(r[0].abs() < 1e-9 && (r[1].abs() - 1.0).abs() < 1e-9);
                }
            }
            _ => panic!("wrong evidence kind"),
        }
    }

    #[test]
    fn noon_states_beyond_two_leave_the_orbit() {
        for n in 3..=8 {
            let state = states::noon(n).unwrap();
            let report = pure_in_delta_b(&state, 1e-6).unwrap();
            assert!(!report.verdict, "noon({n})");
            assert!(
                report_residual(&report) > 1e-2,
                "noon({n}) residual {}",
                report_residual(&report)
            );
        }
    }

    #[test]
    fn hom_output_state_membership_tracks_the_coefficients() {
        let coeff = |c1: f64| {
            let c2 = (1.0 - c1 * c1).sqrt();
            states::hom_phi(Complex64::new(c1, 0.0), Complex64::new(c2, 0.0)).unwrap()
        };
        assert!(!pure_in_delta_b(&coeff(0.6), 1e-6).unwrap().verdict);
        assert!(pure_in_delta_b(&coeff(1.0), 1e-6).unwrap().verdict);
        assert!(pure_in_delta_b(&coeff(0.0), 1e-6).unwrap().verdict);
    }

    #[test]
    fn fock_states_and_vacuum_are_trivially_in_the_orbit() {
        for spec in [
            "fock(n1=5,n2=0)",
            "fock(n1=0,n2=7)",
            "fock(n1=3,n2=4)",
            "vacuum",
        ] {
            let state = states::parse_named_state(spec).unwrap();
            let report = pure_in_delta_b(&state, 1e-6).unwrap();
            assert!(report.verdict, "{spec}");
        }
    }

    #[test]
    fn interferometer_outputs_follow_the_grid_criterion() {
        // Product-of-two-factors states: in the orbit iff the factor
        // directions are orthogonal, i.e. the mixing angle is π/4, or one
        // factor is absent (m ∈ {0, N}).
        let n = 8;
        for &theta in &[0.3, std::f64::consts::FRAC_PI_4] {
            for &m in &[0u64, 1, n / 2] {
                let state = states::psi(states::PsiParams { theta, m, n }).unwrap();
                let expected =
                    (theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12 || m == 0 || m == n;
                let report = pure_in_delta_b(&state, 1e-6).unwrap();
                assert_eq!(report.verdict, expected, "theta={theta}, m={m}");
            }
        }
    }

    #[test]
    fn orbit_membership_is_invariant_under_passive_unitaries() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0bb1);
        for trial in 0..100u64 {
            let n = rng.gen_range(1..=20u64);
            let state = match trial % 4 {
                0 => states::noon(n).unwrap(),
                1 => states::mc(n),
                2 => states::psi(states::PsiParams {
                    theta: 0.3,
                    m: n / 2,
                    n,
                })
                .unwrap(),
                _ => states::parse_named_state(&format!("fock(n1={},n2={})", n / 2, n - n / 2))
                    .unwrap(),
            };
            let unitary = random_number_conserving_unitary(rng.gen());
            let rotated = unitary.apply(&state).unwrap();
            let before = pure_in_delta_b(&state, 1e-6).unwrap().verdict;
            let after = pure_in_delta_b(&rotated, 1e-6).unwrap().verdict;
            assert_eq!(before, after, "trial {trial}, n {n}");
        }
    }

    #[test]
    fn multi_sector_states_are_rejected() {
        let state = states::phi(2).unwrap();
        assert!(matches!(
            pure_in_delta_b(&state, 1e-6),
            Err(FockcohError::InvalidArguments(_))
        ));
    }

    #[test]
    fn mixed_density_matrices_are_refused() {
        let s0 = states::parse_named_state("fock(n1=2,n2=0)").unwrap();
        let s1 = states::parse_named_state("fock(n1=0,n2=2)").unwrap();
        let d0 = DensityMatrix::from_pure(&s0).unwrap();
        let d1 = DensityMatrix::from_pure(&s1).unwrap();
        let mixed = DensityMatrix::mixture(&[(0.5, &d0), (0.5, &d1)]).unwrap();
        assert!(matches!(
            is_delta_b(&mixed, 1e-9),
            Err(FockcohError::MixedStateUnsupported(_))
        ));
        let pure = DensityMatrix::from_pure(&states::noon(2).unwrap()).unwrap();
        assert!(is_delta_b(&pure, 1e-9).unwrap().verdict);
    }

    fn fock_projector_pair(n: u32) -> (CMat, CMat) {
        // Sector-n basis in colex order: |n,0⟩ first, |0,n⟩ last; the
        // projector P keeps exactly those two extremes.
        let dim = (n + 1) as usize;
        let mut p = CMat::zeros(dim);
        p.set(0, 0, Complex64::new(1.0, 0.0));
        p.set(dim - 1, dim - 1, Complex64::new(1.0, 0.0));
        let mut q = CMat::identity(dim);
        q.set(0, 0, Complex64::new(0.0, 0.0));
        q.set(dim - 1, dim - 1, Complex64::new(0.0, 0.0));
        (p, q)
    }

    #[test]
    fn extremal_projector_pair_is_incoherent() {
        let (p, q) = fock_projector_pair(4);
        let report = kraus_in_e_a(&[p, q], 1e-12).unwrap();
        assert!(report.verdict);
    }

    #[test]
    fn hadamard_like_kraus_is_coherent() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut h = CMat::zeros(2);
        h.set(0, 0, Complex64::new(r, 0.0));
        h.set(0, 1, Complex64::new(r, 0.0));
        h.set(1, 0, Complex64::new(r, 0.0));
        h.set(1, 1, Complex64::new(-r, 0.0));
        let report = kraus_in_e_a(&[h], 1e-12).unwrap();
        assert!(!report.verdict);
        match report.evidence {
            MembershipEvidence::KrausIncoherence {
                completeness_defect,
                max_secondary_column_entry,
            } => {
                assert!(completeness_defect < 1e-15);
                assert!((max_secondary_column_entry - r).abs() < 1e-15);
            }
            _ => panic!("wrong evidence kind"),
        }
    }

    #[test]
    fn permutations_are_incoherent_and_index_relabeling_is_irrelevant() {
        let dim = 5;
        let mut cycle = CMat::zeros(dim);
        for i in 0..dim {
            cycle.set((i + 1) % dim, i, Complex64::new(1.0, 0.0));
        }
        let report = kraus_in_e_a(&[cycle.clone()], 1e-12).unwrap();
        assert!(report.verdict);

        let (p, q) = fock_projector_pair(4);
        let forward = kraus_in_e_a(&[p.clone(), q.clone()], 1e-12).unwrap();
        let backward = kraus_in_e_a(&[q, p], 1e-12).unwrap();
        assert_eq!(forward.verdict, backward.verdict);
    }

    #[test]
    fn kraus_dimension_mismatch_is_an_error() {
        let a = CMat::identity(2);
        let b = CMat::identity(3);
        assert!(matches!(
            kraus_in_e_a(&[a, b], 1e-12),
            Err(FockcohError::InvalidArguments(_))
        ));
    }

    #[test]
    fn identity_and_type_readout_preserve_pair_budgets() {
        let probe = states::bec(3, 2).unwrap();
        let pairs = [(0usize, 1usize), (2usize, 3usize)];
        assert!(preserves_energy_density(&EnergyOp::Identity, &pairs, &[probe.clone()], 1e-12)
            .unwrap());
        assert!(preserves_energy_density(
            &EnergyOp::TypeClassMeasurement,
            &pairs,
            &[probe],
            1e-12
        )
        .unwrap());
    }

    #[test]
    fn swapping_across_pairs_moves_the_budget() {
        let probe = FockSpaceState::basis_state(OccupationVector::new(vec![3, 0, 0, 0]));
        let pairs = [(0usize, 1usize), (2usize, 3usize)];
        let op = EnergyOp::SwapModes { i: 0, j: 2 };
        assert!(!preserves_energy_density(&op, &pairs, &[probe.clone()], 1e-12).unwrap());
        // Swapping within a pair is harmless.
        let within = EnergyOp::SwapModes { i: 0, j: 1 };
        assert!(preserves_energy_density(&within, &pairs, &[probe], 1e-12).unwrap());
    }

    #[test]
    fn pair_local_unitaries_preserve_pair_budgets() {
        let probe = states::bec(2, 2).unwrap();
        let pairs = [(0usize, 1usize), (2usize, 3usize)];
        let op = EnergyOp::PairUnitary {
            i: 2,
            j: 3,
            unitary: random_number_conserving_unitary(7),
        };
        assert!(preserves_energy_density(&op, &pairs, &[probe], 1e-12).unwrap());
    }
}
