//! Analytic distillation rates, closed forms, and asymptotic bounds.
//!
//! A rate is the number of maximally coherent target copies extractable per
//! input copy, in the limit of many copies: the coherence carried by one
//! input over the bits of one target register. Everything here is exact
//! log-space arithmetic on distributions; the operational counterpart with
//! its floor effects lives in the protocol module.

use serde::Serialize;

use crate::coherence::{
    binomial_entropy, multinomial_entropy, sector_coherence, total_coherence,
};
use crate::error::{FockcohError, Result};
use crate::fock::FockSpaceState;
use crate::logspace::ln_factorial;
use crate::tolerance::{ENERGY_PRECONDITION_TOL, TAIL_MASS_BOUND};

/// Which denominator convention a rate uses: a sector-(N) register of
/// dimension N+1, or the two-register target of an indefinite-number
/// protocol with dimension (2N+1)(N+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateContext {
    NumberConserving,
    IndefiniteNumber,
}

/// A distillation rate with its two sides kept separate, so downstream
/// floor effects can be applied to the numerator alone.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Copies per input copy; always numerator_bits / denominator_bits.
    pub rate: f64,
    pub numerator_bits: f64,
    pub denominator_bits: f64,
    pub context: RateContext,
}

impl RateReport {
    fn new(numerator_bits: f64, denominator_bits: f64, context: RateContext) -> Self {
        debug_assert!(numerator_bits >= -1e-12 && denominator_bits > 0.0);
        RateReport {
            rate: numerator_bits / denominator_bits,
            numerator_bits,
            denominator_bits,
            context,
        }
    }
}

/// Rate for distilling maximally coherent sector-N states from a pure
/// sector-N input: the sector coherence over the log target dimension.
pub fn rate_mc_from_pure(state: &FockSpaceState, n: u64) -> Result<RateReport> {
    if n == 0 {
        return Err(FockcohError::UndefinedRate(
            "a sector-0 register is one-dimensional; there is no target to distill".into(),
        ));
    }
    match state.single_sector() {
        Some(s) if s == n => {}
        Some(s) => {
            return Err(FockcohError::InvalidArguments(format!(
                "state lives in sector {s}, not the requested sector {n}"
            )));
        }
        None => {
            return Err(FockcohError::InvalidArguments(
                "rate_mc_from_pure needs a single-sector state".into(),
            ));
        }
    }
    let numerator = sector_coherence(state, n)?;
    let denominator = ((n + 1) as f64).log2();
    Ok(RateReport::new(
        numerator,
        denominator,
        RateContext::NumberConserving,
    ))
}

/// Rate for the two-mode split condensate of N particles: the entropy of
/// the symmetric binomial over the log target dimension. Decreases toward
/// 1/2 as N grows.
pub fn rate_bec(n: u64) -> Result<RateReport> {
    if n == 0 {
        return Err(FockcohError::UndefinedRate(
            "no particles, no coherence to distill".into(),
        ));
    }
    Ok(RateReport::new(
        binomial_entropy(n, 0.5),
        ((n + 1) as f64).log2(),
        RateContext::NumberConserving,
    ))
}

/// Normal-approximation cross-check for [`rate_bec`]: the de Moivre-Laplace
/// entropy ½log₂(πeN/2) over log₂(N+1). Within 1e-3 of the exact rate by
/// N = 4000.
pub fn de_moivre_laplace_rate(n: u64) -> f64 {
    let nf = n as f64;
    0.5 * (std::f64::consts::PI * std::f64::consts::E * nf / 2.0).log2() / ((nf + 1.0).log2())
}

/// Rate for a two-mode state of indefinite particle number with mean N:
/// the joint Fock-distribution entropy over log₂((2N+1)(N+1)), the target
/// holding one sector register and one within-sector register.
pub fn rate_indefinite(state: &FockSpaceState, n: u64) -> Result<RateReport> {
    if state.modes() != 2 {
        return Err(FockcohError::InvalidArguments(format!(
            "indefinite-number rate covers two-mode states, got {} modes",
            state.modes()
        )));
    }
    let mean = state.expected_particle_number(&[0, 1]);
    if (mean - n as f64).abs() > ENERGY_PRECONDITION_TOL {
        return Err(FockcohError::InvalidArguments(format!(
            "state carries {mean:.9} particles on average, not the declared {n}"
        )));
    }
    if state.tail_mass_bound() > TAIL_MASS_BOUND {
        return Err(FockcohError::InvalidArguments(format!(
            "truncated tail mass {:.3e} exceeds {TAIL_MASS_BOUND:.0e}",
            state.tail_mass_bound()
        )));
    }
    let numerator = total_coherence(state)?;
    Ok(RateReport::new(
        numerator,
        indefinite_denominator(n),
        RateContext::IndefiniteNumber,
    ))
}

fn indefinite_denominator(n: u64) -> f64 {
    (((2 * n + 1) * (n + 1)) as f64).log2()
}

/// [`rate_indefinite`] for the geometric-family maximizer of mean N,
/// evaluated from its closed form; usable at any N without materializing
/// the state.
pub fn phi_indefinite_rate(n: u64) -> Result<RateReport> {
    if n == 0 {
        return Err(FockcohError::UndefinedRate(
            "the mean-0 maximizer is the vacuum; nothing to distill".into(),
        ));
    }
    Ok(RateReport::new(
        phi_coherence_closed_form(n),
        indefinite_denominator(n),
        RateContext::IndefiniteNumber,
    ))
}

/// [`rate_indefinite`] for the flat-sector reference state of mean N,
/// evaluated from its closed form.
pub fn mc_tilde_indefinite_rate(n: u64) -> Result<RateReport> {
    if n == 0 {
        return Err(FockcohError::UndefinedRate(
            "the mean-0 reference state is the vacuum; nothing to distill".into(),
        ));
    }
    Ok(RateReport::new(
        mc_tilde_coherence_formula(n),
        indefinite_denominator(n),
        RateContext::IndefiniteNumber,
    ))
}

/// Lower bound, in bits, on the total coherence of pair_correlated(N):
/// (4(N/2+1)/(πN))·(log₂N + log₂(π/4)). The prefactor approaches 2/π, so
/// the bound grows like log₂ N^(2/π).
pub fn pair_correlated_bound(n: u64) -> Result<f64> {
    if n < 2 || n % 2 != 0 {
        return Err(FockcohError::InvalidArguments(format!(
            "pair-correlated states need an even particle number >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let prefactor = 4.0 * (nf / 2.0 + 1.0) / (std::f64::consts::PI * nf);
    Ok(prefactor * (nf.log2() + (std::f64::consts::PI / 4.0).log2()))
}

/// Total coherence of the constrained maximizer with mean N, in bits:
/// 2·log₂((N+2)/2) + N·log₂((N+2)/N). Grows like log₂ N².
///
/// Derivation: the maximizer weights are p_0 = (2/(N+2))² and
/// p_k = 4(k+1)N^k/(N+2)^(k+2), uniform within each sector, so the total
/// coherence is −Σ_k p_k log₂(p_k/(k+1)); the geometric sums collapse to
/// the two-term expression. A four-term variant of this formula is also
/// in circulation; see [`phi_coherence_variant_form`].
pub fn phi_coherence_closed_form(n: u64) -> f64 {
    let nf = n as f64;
    2.0 * ((nf + 2.0) / 2.0).log2() + nf * ((nf + 2.0) / nf).log2()
}

/// Four-term variant expression for [`phi_coherence_closed_form`]. It
/// double counts the sector-label contribution and therefore exceeds the
/// true coherence by exactly (2N+2)/(N+2)·log₂((N+2)/N); at N = 2 it
/// gives 5.5 where the true value is 4. Exposed so reported values can be
/// audited against either form.
pub fn phi_coherence_variant_form(n: u64) -> f64 {
    let nf = n as f64;
    let a = ((nf + 2.0) / 2.0).log2();
    let b = ((nf + 2.0) / nf).log2();
    (2.0 * nf / (nf + 2.0)) * a + (nf / (nf + 2.0)) * b + (4.0 / (nf + 2.0)) * a
        + (nf + 1.0) * b
}

/// Exact excess of the variant form over the closed form.
pub fn phi_variant_form_excess(n: u64) -> f64 {
    let nf = n as f64;
    (2.0 * nf + 2.0) / (nf + 2.0) * ((nf + 2.0) / nf).log2()
}

/// Total coherence of the flat-sector reference state of mean N, in bits:
/// log₂(2N+1) + (2N+1)^(−1)·Σ_{x=0}^{2N} log₂(x+1), the sum collapsing to
/// log₂((2N+1)!)/(2N+1).
pub fn mc_tilde_coherence_formula(n: u64) -> f64 {
    let terms = 2 * n + 1;
    (terms as f64).log2() + ln_factorial(terms) / (std::f64::consts::LN_2 * terms as f64)
}

/// Variant expression for [`mc_tilde_coherence_formula`] carrying a stray
/// (2N+1)^(−1)·log₂(2N+1) term; exposed for auditing reported values.
pub fn mc_tilde_coherence_variant_form(n: u64) -> f64 {
    let terms = (2 * n + 1) as f64;
    mc_tilde_coherence_formula(n) + terms.log2() / terms
}

/// Exact excess of the mc_tilde variant form over the formula.
pub fn mc_tilde_variant_form_excess(n: u64) -> f64 {
    let terms = (2 * n + 1) as f64;
    terms.log2() / terms
}

/// Entropy ratio H_multinomial(N, M)/H_binomial(N, 1/2): the M-mode
/// analogue of the split-condensate rate numerator, which scales linearly
/// in M (close to M−1 already at N in the thousands).
pub fn multimode_entropy_ratio(n: u64, modes: usize) -> f64 {
    multinomial_entropy(n, modes) / binomial_entropy(n, 0.5)
}
