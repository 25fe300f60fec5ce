//! Entropy functionals and the coherence quantifiers built on them.
//!
//! Three quantifiers are exposed: `sector_coherence` (relative entropy of
//! coherence of one particle-number sector), `weighted_coherence` (sector
//! values averaged by sector weight), and `total_coherence` (dephasing
//! entropy gain over the full Fock basis, including cross-sector
//! coherences). All values are reported in bits; natural-log to bits
//! conversion is centralized in [`crate::logspace::nats_to_bits`].

use crate::error::{FockcohError, Result};
use crate::fock::{OccupationVector, StateOrDensity};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::logspace::{self, CompensatedSum, LogWeight};
use crate::tolerance;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Label of one measurement outcome: a concrete occupation pattern or an
/// abstract symbol (used by type-class bookkeeping over truncated
/// alphabets).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OutcomeLabel {
    Occupation(OccupationVector),
    Symbol(String),
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutcomeLabel::Occupation(occ) => write!(f, "{occ}"),
            OutcomeLabel::Symbol(s) => write!(f, "{s}"),
        }
    }
}

/// Discrete distribution over outcome labels, normalized at construction.
///
/// Probabilities are stored as [`LogWeight`] so extreme tails (for example
/// binomial tails at N = 4000) survive without underflow. The deviation of
/// the raw input mass from 1 is recorded rather than silently discarded.
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    entries: Vec<(OutcomeLabel, LogWeight)>,
    raw_mass_deviation: f64,
}

impl ProbabilityTable {
    /// Build from nonnegative linear-scale weights; duplicates merge.
    pub fn from_weights<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (OutcomeLabel, f64)>,
    {
        Self::from_log_weights(
            weights
                .into_iter()
                .map(|(label, w)| (label, LogWeight::from_f64(w))),
        )
    }

    /// Build from nonnegative log-scale weights; duplicates merge.
    pub fn from_log_weights<I>(weights: I) -> Self
    where
        I: IntoIterator<Item = (OutcomeLabel, LogWeight)>,
    {
        let mut entries: Vec<(OutcomeLabel, LogWeight)> = Vec::new();
        for (label, w) in weights {
            assert!(w.sign() >= 0, "probability weights must be nonnegative");
            if w.is_zero() {
                continue;
            }
            entries.push((label, w));
        }
        assert!(!entries.is_empty(), "probability table needs positive mass");
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        // Merge duplicate labels.
        let mut merged: Vec<(OutcomeLabel, LogWeight)> = Vec::with_capacity(entries.len());
        for (label, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == label => *acc = acc.add(&w),
                _ => merged.push((label, w)),
            }
        }
        let mut total = LogWeight::zero();
        for (_, w) in &merged {
            total = total.add(w);
        }
        let raw_mass_deviation = (total.to_f64() - 1.0).abs();
        for (_, w) in merged.iter_mut() {
            *w = w.div(&total);
        }
        ProbabilityTable { entries: merged, raw_mass_deviation }
    }

    /// Uniform distribution over the given labels.
    pub fn uniform<I>(labels: I) -> Self
    where
        I: IntoIterator<Item = OutcomeLabel>,
    {
        Self::from_weights(labels.into_iter().map(|l| (l, 1.0)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutcomeLabel, LogWeight)> + '_ {
        self.entries.iter().map(|(l, w)| (l, *w))
    }

    pub fn probability(&self, label: &OutcomeLabel) -> LogWeight {
        match self.entries.binary_search_by(|(l, _)| l.cmp(label)) {
            Ok(i) => self.entries[i].1,
            Err(_) => LogWeight::zero(),
        }
    }

    /// |raw input mass - 1| before normalization.
    pub fn raw_mass_deviation(&self) -> f64 {
        self.raw_mass_deviation
    }

    /// Shannon entropy in bits with compensated accumulation.
    pub fn entropy_bits(&self) -> f64 {
        let mut sum = CompensatedSum::new();
        for (_, w) in &self.entries {
            let p = w.to_f64();
            if p > 0.0 {
                sum.add(-p * w.ln_magnitude());
            }
        }
        logspace::nats_to_bits(sum.value())
    }

    /// Normalization check (post-construction this is a tautology unless
    /// the entries were mutated through serialization round trips).
    pub fn validate(&self) -> Result<()> {
        let mut total = LogWeight::zero();
        for (_, w) in &self.entries {
            if w.sign() < 0 {
                return Err(FockcohError::Internal("negative probability".into()));
            }
            total = total.add(w);
        }
        if (total.to_f64() - 1.0).abs() > tolerance::NORM_TOL {
            return Err(FockcohError::Internal(format!(
                "probability mass {:.15} deviates from 1",
                total.to_f64()
            )));
        }
        Ok(())
    }
}

/// Shannon entropy of a table, in bits.
pub fn shannon_entropy(p: &ProbabilityTable) -> f64 {
    p.entropy_bits()
}

/// Entropy of the binomial law B(n, p) in bits, by exact log-space
/// summation over all n+1 outcomes.
pub fn binomial_entropy(n: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "binomial parameter out of range");
    if n == 0 || p == 0.0 || p == 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut sum = CompensatedSum::new();
    for k in 0..=n {
        let ln_pk = logspace::ln_binomial(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q;
        sum.add(-ln_pk.exp() * ln_pk);
    }
    logspace::nats_to_bits(sum.value())
}

/// Entropy in bits of the equiprobable multinomial over `cells` cells with
/// `n` trials: the distribution of the full count vector.
///
/// Uses the chain rule over cells: the first count is B(n, 1/cells) and,
/// conditioned on it, the rest is an equiprobable multinomial on one fewer
/// cell. A dynamic program over remaining totals evaluates the recursion
/// in O(cells * n^2).
pub fn multinomial_entropy(n: u64, cells: usize) -> f64 {
    assert!(cells >= 2, "multinomial needs at least two cells");
    let n = n as usize;
    // h[r] = entropy (nats) of the equiprobable multinomial with r trials
    // over the current number of cells; one cell has zero entropy.
    let mut h = vec![0.0f64; n + 1];
    for j in 2..=cells {
        let ln_pj = -(j as f64).ln();
        let ln_qj = ((j - 1) as f64).ln() - (j as f64).ln();
        let mut next = vec![0.0f64; n + 1];
        for r in 1..=n {
            let mut level = CompensatedSum::new();
            let mut cond = CompensatedSum::new();
            for k in 0..=r {
                let ln_pmf = logspace::ln_binomial(r as u64, k as u64)
                    + k as f64 * ln_pj
                    + (r - k) as f64 * ln_qj;
                let pmf = ln_pmf.exp();
                level.add(-pmf * ln_pmf);
                cond.add(pmf * h[r - k]);
            }
            next[r] = level.value() + cond.value();
        }
        h = next;
    }
    logspace::nats_to_bits(h[n])
}

/// Von Neumann entropy in bits of a Hermitian PSD matrix with trace 1;
/// eigenvalues below [`tolerance::EIGENVALUE_DROP`] are dropped as
/// numerical noise.
pub fn vn_entropy_bits(mat: &CMat) -> f64 {
    let mut sum = CompensatedSum::new();
    for lambda in hermitian_eigenvalues(mat) {
        if lambda > tolerance::EIGENVALUE_DROP {
            sum.add(-lambda * lambda.ln());
        }
    }
    logspace::nats_to_bits(sum.value())
}

fn snap_nonnegative(c: f64, what: &str) -> Result<f64> {
    if c < -1e-9 {
        return Err(FockcohError::Internal(format!(
            "{what} evaluated to {c:.3e}, far below zero"
        )));
    }
    Ok(c.max(0.0))
}

/// Relative entropy of coherence of the sector-`n` conditional state:
/// entropy of its Fock-basis diagonal minus its von Neumann entropy.
pub fn sector_coherence<'a, S>(input: S, n: u64) -> Result<f64>
where
    S: Into<StateOrDensity<'a>>,
{
    match input.into() {
        StateOrDensity::Pure(state) => {
            let w = state.sector_weight(n);
            if w <= tolerance::SECTOR_WEIGHT_FLOOR {
                return Err(FockcohError::UndefinedSector { sector: n, weight: w });
            }
            // Pure conditional: coherence is the entropy of the normalized
            // within-sector Fock distribution.
            let mut sum = CompensatedSum::new();
            for (occ, amp) in state.components() {
                if occ.total() != n {
                    continue;
                }
                let p = amp.norm_sqr() / w;
                if p > 0.0 {
                    sum.add(-p * p.ln());
                }
            }
            Ok(logspace::nats_to_bits(sum.value()))
        }
        StateOrDensity::Mixed(rho) => {
            let (_, block, _) = rho.sector_conditional(n)?;
            let mut diag = CompensatedSum::new();
            for i in 0..block.dim() {
                let p = block.get(i, i).re;
                if p > tolerance::EIGENVALUE_DROP {
                    diag.add(-p * p.ln());
                }
            }
            let c = logspace::nats_to_bits(diag.value()) - vn_entropy_bits(&block);
            snap_nonnegative(c, "sector coherence")
        }
    }
}

/// Sector coherences averaged with the sector weights:
/// `sum_N tr(Q_N rho) C_N(rho)` over occupied sectors.
pub fn weighted_coherence<'a, S>(input: S) -> Result<f64>
where
    S: Into<StateOrDensity<'a>>,
{
    let input = input.into();
    let weights = match &input {
        StateOrDensity::Pure(s) => s.sector_weights(),
        StateOrDensity::Mixed(r) => r.sector_weights(),
    };
    let mut sum = CompensatedSum::new();
    for (n, w) in weights {
        if w <= tolerance::SECTOR_WEIGHT_FLOOR {
            continue;
        }
        let c = match &input {
            StateOrDensity::Pure(s) => sector_coherence(*s, n)?,
            StateOrDensity::Mixed(r) => sector_coherence(*r, n)?,
        };
        sum.add(w * c);
    }
    Ok(sum.value())
}

/// Full dephasing coherence: entropy of the Fock-basis diagonal minus the
/// von Neumann entropy of the state. For pure inputs this is exactly the
/// Shannon entropy of the Fock distribution.
pub fn total_coherence<'a, S>(input: S) -> Result<f64>
where
    S: Into<StateOrDensity<'a>>,
{
    match input.into() {
        StateOrDensity::Pure(state) => {
            Ok(shannon_entropy(&crate::fock::dephase_fock(state)))
        }
        StateOrDensity::Mixed(rho) => {
            let mut diag = CompensatedSum::new();
            for i in 0..rho.dim() {
                let p = rho.matrix().get(i, i).re;
                if p > tolerance::EIGENVALUE_DROP {
                    diag.add(-p * p.ln());
                }
            }
            let c = logspace::nats_to_bits(diag.value()) - vn_entropy_bits(rho.matrix());
            snap_nonnegative(c, "total coherence")
        }
    }
}

/// Closed-form entropy helpers shared by the analytic rate paths: the
/// entropy in bits of the distribution with sector weights `weights` and a
/// uniform conditional over `k+1` outcomes inside sector `k`:
/// `H(weights) + sum_k weights[k] log2(k+1)`.
pub fn sector_uniform_joint_entropy(weights: &[f64]) -> f64 {
    let mut sum = CompensatedSum::new();
    for (k, &p) in weights.iter().enumerate() {
        if p > 0.0 {
            sum.add(-p * p.ln() + p * ((k + 1) as f64).ln());
        }
    }
    logspace::nats_to_bits(sum.value())
}

/// Exact entropy in bits of B(n, 1/2) via the integer-exact binomial
/// log table: `n - 2^-n sum_k C(n,k) log2 C(n,k)`.
pub fn central_binomial_entropy(n: u64) -> f64 {
    let ln_half = -(std::f64::consts::LN_2);
    let mut sum = CompensatedSum::new();
    for k in 0..=n {
        let ln_c = logspace::ln_binomial(n, k);
        let ln_pk = ln_c + n as f64 * ln_half;
        sum.add(-ln_pk.exp() * ln_pk);
    }
    sum.value() / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{dephase_fock, partial_trace, DensityMatrix};
    use crate::states;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn symbol_table(ps: &[f64]) -> ProbabilityTable {
        ProbabilityTable::from_weights(
            ps.iter()
                .enumerate()
                .map(|(i, &p)| (OutcomeLabel::Symbol(format!("s{i}")), p)),
        )
    }

    #[test]
    fn shannon_entropy_basics() {
        assert_abs_diff_eq!(shannon_entropy(&symbol_table(&[0.5, 0.5])), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            shannon_entropy(&symbol_table(&[0.25, 0.5, 0.25])),
            1.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(shannon_entropy(&symbol_table(&[1.0])), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn probability_table_normalizes_and_records_deviation() {
        let t = symbol_table(&[1.0, 3.0]);
        assert_abs_diff_eq!(t.raw_mass_deviation(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            t.probability(&OutcomeLabel::Symbol("s1".into())).to_f64(),
            0.75,
            epsilon = 1e-15
        );
        t.validate().unwrap();
    }

    #[test]
    fn binomial_entropy_matches_direct_pmf_recurrence() {
        assert_abs_diff_eq!(binomial_entropy(1, 0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binomial_entropy(2, 0.5), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(binomial_entropy(5, 0.0), 0.0, epsilon = 1e-15);

        // Oracle: pmf by the stable multiplicative recurrence.
        let (n, p) = (100u64, 0.3f64);
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut h = 0.0;
        for k in 0..=n {
            if pmf > 0.0 {
                h -= pmf * pmf.log2();
            }
            if k < n {
                pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
            }
        }
        assert_abs_diff_eq!(binomial_entropy(n, p), h, epsilon = 1e-11);
        assert_abs_diff_eq!(central_binomial_entropy(n), binomial_entropy(n, 0.5), epsilon = 1e-12);
    }

    #[test]
    fn multinomial_entropy_agrees_with_enumeration() {
        use crate::fock::enumerate_sector;
        for &(n, m) in &[(2u64, 2usize), (5, 3), (8, 3), (6, 4)] {
            let mut h = CompensatedSum::new();
            let ln_m = (m as f64).ln();
            for occ in enumerate_sector(m, n) {
                let counts: Vec<u64> = occ.counts().iter().map(|&c| u64::from(c)).collect();
                let ln_p = logspace::ln_multinomial(&counts) - n as f64 * ln_m;
                h.add(-ln_p.exp() * ln_p);
            }
            let expect = logspace::nats_to_bits(h.value());
            assert_abs_diff_eq!(multinomial_entropy(n, m), expect, epsilon = 1e-11);
        }
        // Two cells reduce to the balanced binomial.
        assert_abs_diff_eq!(
            multinomial_entropy(40, 2),
            binomial_entropy(40, 0.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sector_coherence_anchor_values() {
        for n in 1..=6u64 {
            let s = states::mc(n);
            assert_abs_diff_eq!(
                sector_coherence(&s, n).unwrap(),
                ((n + 1) as f64).log2(),
                epsilon = 1e-12
            );
        }
        let fock = crate::fock::FockSpaceState::basis_state(
            crate::fock::OccupationVector::new(vec![2, 1]),
        );
        assert_abs_diff_eq!(sector_coherence(&fock, 3).unwrap(), 0.0, epsilon = 1e-15);
        let b = states::bec(2, 1).unwrap();
        assert_abs_diff_eq!(sector_coherence(&b, 2).unwrap(), 1.5, epsilon = 1e-12);
        assert!(matches!(
            sector_coherence(&b, 5),
            Err(FockcohError::UndefinedSector { .. })
        ));
    }

    #[test]
    fn sector_coherence_through_the_density_matrix_path() {
        let s = states::mc(2);
        let rho = DensityMatrix::from_pure(&s).unwrap();
        assert_abs_diff_eq!(
            sector_coherence(&rho, 2).unwrap(),
            3f64.log2(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn weighted_coherence_anchor_values() {
        let expect = (0.0 + 1.0 + 3f64.log2()) / 3.0;
        assert_abs_diff_eq!(
            weighted_coherence(&states::mc_tilde(1)).unwrap(),
            expect,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            weighted_coherence(&states::bec(2, 1).unwrap()).unwrap(),
            1.5,
            epsilon = 1e-12
        );
        // phi: uniform conditionals give sum_k p_k log2(k+1).
        let n = 5u64;
        let pw = states::phi_sector_weights(n);
        let mut expect = CompensatedSum::new();
        for (k, &p) in pw.weights.iter().enumerate() {
            expect.add(p / (1.0 - pw.tail_mass) * ((k + 1) as f64).log2());
        }
        assert_abs_diff_eq!(
            weighted_coherence(&states::phi(n).unwrap()).unwrap(),
            expect.value(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn total_coherence_anchor_values() {
        let fock = crate::fock::FockSpaceState::basis_state(
            crate::fock::OccupationVector::new(vec![0, 3]),
        );
        assert_abs_diff_eq!(total_coherence(&fock).unwrap(), 0.0, epsilon = 1e-15);

        // Direct-series oracle for the constrained maximizer at N = 2:
        // H = -sum_k p_k log2(p_k/(k+1)) over the truncated, renormalized law.
        let n = 2u64;
        let pw = states::phi_sector_weights(n);
        let z = 1.0 - pw.tail_mass;
        let mut oracle = CompensatedSum::new();
        for (k, &p) in pw.weights.iter().enumerate() {
            let q = p / z;
            oracle.add(-q * (q / (k as f64 + 1.0)).log2());
        }
        let got = total_coherence(&states::phi(n).unwrap()).unwrap();
        assert_abs_diff_eq!(got, oracle.value(), epsilon = 1e-10);
        // The same number from the per-sector split H(p) + sum p_k log2(k+1).
        assert_abs_diff_eq!(
            got,
            sector_uniform_joint_entropy(
                &pw.weights.iter().map(|&p| p / z).collect::<Vec<_>>()
            ),
            epsilon = 1e-10
        );
    }

    #[test]
    fn total_coherence_is_phase_invariant_and_dominates_weighted() {
        let s = states::mc_tilde(2);
        let base = total_coherence(&s).unwrap();
        // Rotate each amplitude by a basis-dependent phase.
        let rotated = crate::fock::FockSpaceState::from_components(
            2,
            s.components().enumerate().map(|(i, (occ, amp))| {
                (occ, amp * Complex64::from_polar(1.0, 0.37 * i as f64))
            }),
            0.0,
        );
        assert_abs_diff_eq!(total_coherence(&rotated).unwrap(), base, epsilon = 1e-12);

        for state in [states::mc_tilde(3), states::phi(3).unwrap(), states::bec(4, 1).unwrap()] {
            let ca = total_coherence(&state).unwrap();
            let c = weighted_coherence(&state).unwrap();
            assert!(ca >= c - 1e-12, "CA = {ca} < C = {c}");
            assert!(c >= -1e-12);
        }
    }

    #[test]
    fn total_coherence_for_pure_states_equals_dephased_entropy_exactly() {
        let s = states::psi(states::PsiParams { theta: 0.6, m: 3, n: 8 }).unwrap();
        let via_total = total_coherence(&s).unwrap();
        let via_table = shannon_entropy(&dephase_fock(&s));
        assert_eq!(via_total, via_table);
    }

    #[test]
    fn mixed_state_total_coherence_vanishes_after_dephasing() {
        // Diagonal density matrix assembled from the dephased distribution.
        let s = states::mc(2);
        let rho = DensityMatrix::from_pure(&s).unwrap();
        let mut diag = CMat::zeros(rho.dim());
        for i in 0..rho.dim() {
            diag.set(i, i, rho.matrix().get(i, i));
        }
        let dephased = DensityMatrix::new(2, rho.basis().to_vec(), diag);
        assert_abs_diff_eq!(total_coherence(&dephased).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            total_coherence(&rho).unwrap(),
            3f64.log2(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn reduced_states_keep_coherence_bookkeeping_consistent() {
        // MC_1 reduced to one mode is maximally mixed: no coherence.
        let rho = partial_trace(&states::mc(1), &[0]).unwrap();
        assert_abs_diff_eq!(total_coherence(&rho).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix().get(0, 0).re, 0.5, epsilon = 1e-14);
    }
}
