//! Monte-Carlo simulation of the type-class distillation protocol and
//! one-shot yield accounting.
//!
//! The protocol measures the joint occupation type of n input copies. The
//! post-measurement state inside a type class of a product-amplitude input
//! is exactly uniform over the |T_t| basis states of the class, so a
//! sampled run is fully described by the type's counts: the conversion to
//! target copies and its success probability depend on |T_t| alone. Types
//! are therefore sampled directly from the multinomial law instead of
//! materializing n-copy states; the equivalence is unit-tested against
//! explicit small-n state construction.
//!
//! One-shot conversion rule: a uniform superposition over D basis states
//! becomes ⌊log_dim D⌋ target copies by projecting onto the leading
//! dim^⌊·⌋ states, succeeding with probability dim^⌊·⌋/D; a failure yields
//! zero copies. Only the asymptotic rate is canonical; this floor rule is
//! one concrete realization of it.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::{OutcomeLabel, ProbabilityTable};
use crate::error::{FockcohError, Result};
use crate::fock::{dephase_fock, enumerate_sector, sector_dimension, FockSpaceState};
use crate::logspace::{
    ln_biguint, ln_multinomial, multinomial_biguint, CompensatedSum, LogWeight,
};
use crate::tolerance::{
    EXACT_MULTIPLICITY_MAX, SIMULATION_SAMPLE_GUARD, TAIL_MASS_BOUND, TYPE_ENUMERATION_GUARD,
};

/// Occupation type of n measured copies: how often each single-copy
/// outcome occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeClass {
    alphabet: Vec<OutcomeLabel>,
    counts: Vec<u64>,
}

impl TypeClass {
    pub fn new(alphabet: Vec<OutcomeLabel>, counts: Vec<u64>) -> Result<Self> {
        if alphabet.len() != counts.len() || alphabet.is_empty() {
            return Err(FockcohError::InvalidArguments(
                "type class needs one count per alphabet entry".into(),
            ));
        }
        Ok(TypeClass { alphabet, counts })
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn alphabet(&self) -> &[OutcomeLabel] {
        &self.alphabet
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Class size |T_t| = n!/(Π counts!) as a log-scale weight.
    pub fn multiplicity(&self) -> LogWeight {
        LogWeight::from_ln(ln_multinomial(&self.counts))
    }

    /// Exact class size, available while n stays within the big-integer
    /// budget.
    pub fn multiplicity_exact(&self) -> Option<BigUint> {
        (self.n() <= EXACT_MULTIPLICITY_MAX).then(|| multinomial_biguint(&self.counts))
    }

    /// Total particles across the n copies, when every outcome is an
    /// occupation pattern.
    pub fn particle_total(&self) -> Option<f64> {
        let mut acc = CompensatedSum::new();
        for (label, &count) in self.alphabet.iter().zip(&self.counts) {
            match label {
                OutcomeLabel::Occupation(occ) => {
                    acc.add(count as f64 * occ.total() as f64);
                }
                OutcomeLabel::Symbol(_) => return None,
            }
        }
        Some(acc.value())
    }
}

/// One-shot conversion outcome for a measured type.
#[derive(Debug, Clone, Serialize)]
pub struct YieldSample {
    pub type_class: TypeClass,
    pub copies: u64,
    pub success_probability: f64,
}

/// Joint occupation distribution of a single copy: the dephasing of the
/// state, untruncated.
pub fn single_copy_distribution(state: &FockSpaceState) -> ProbabilityTable {
    dephase_fock(state)
}

/// Single-copy distribution with the lightest outcomes dropped while their
/// combined mass stays within [`TAIL_MASS_BOUND`], then renormalized.
///
/// Returns the table, the exact entropy shift caused by the truncation
/// (in bits, comparing against the materialized untruncated table), and
/// the dropped mass. Mass the state constructor itself never materialized
/// is not included here; it is bounded by `state.tail_mass_bound()`.
pub fn truncated_single_copy_distribution(
    state: &FockSpaceState,
) -> (ProbabilityTable, f64, f64) {
    let full = dephase_fock(state);
    let mut entries: Vec<(OutcomeLabel, LogWeight)> =
        full.iter().map(|(l, w)| (l.clone(), w)).collect();
    entries.sort_by(|a, b| a.1.abs_cmp(&b.1));
    let mut dropped_mass = 0.0f64;
    let mut cut = 0usize;
    for (i, (_, w)) in entries.iter().enumerate() {
        let p = w.to_f64();
        if i + 1 < entries.len() && dropped_mass + p <= TAIL_MASS_BOUND {
            dropped_mass += p;
            cut = i + 1;
        } else {
            break;
        }
    }
    let kept = entries.split_off(cut);
    let table = ProbabilityTable::from_log_weights(kept);
    let bias_bits = (full.entropy_bits() - table.entropy_bits()).abs();
    (table, bias_bits, dropped_mass)
}

/// Multinomial count sampling via the conditional-binomial chain, in table
/// order. Deterministic given the generator state.
fn sample_counts(probs: &[f64], n: u64, rng: &mut ChaCha12Rng) -> Vec<u64> {
    let cells = probs.len();
    let mut counts = vec![0u64; cells];
    let mut remaining = n;
    let mut remaining_mass = 1.0f64;
    for i in 0..cells {
        if remaining == 0 {
            break;
        }
        if i + 1 == cells {
            counts[i] = remaining;
            break;
        }
        let conditional = if remaining_mass > 0.0 {
            (probs[i] / remaining_mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = Binomial::new(remaining, conditional)
            .expect("conditional probability is clamped to [0, 1]")
            .sample(rng);
        counts[i] = draw;
        remaining -= draw;
        remaining_mass -= probs[i];
    }
    counts
}

/// Sample the occupation type of n copies measured jointly, each copy
/// distributed by `p`. Deterministic given the seed.
pub fn sample_type(p: &ProbabilityTable, n: u64, seed: u64) -> Result<TypeClass> {
    if n == 0 {
        return Err(FockcohError::InvalidArguments(
            "type sampling needs at least one copy".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let probs: Vec<f64> = p.iter().map(|(_, w)| w.to_f64()).collect();
    let counts = sample_counts(&probs, n, &mut rng);
    TypeClass::new(p.iter().map(|(l, _)| l.clone()).collect(), counts)
}

/// Copies and success probability for a type with the given counts. The
/// floor ⌊log_dim |T_t|⌋ is found exactly while n permits big-integer
/// multiplicities; the log-space estimate beyond that falls back to exact
/// arithmetic whenever the floor is ambiguous at 1e-9.
fn yield_core(counts: &[u64], target_dim: u64) -> Result<(u64, f64)> {
    if target_dim < 2 {
        return Err(FockcohError::InvalidArguments(format!(
            "target dimension must be at least 2, got {target_dim}"
        )));
    }
    let n: u64 = counts.iter().sum();
    let ln_dim = (target_dim as f64).ln();
    let ln_size = ln_multinomial(counts);
    let quotient = ln_size / ln_dim;
    let ambiguous = {
        let frac = quotient - quotient.floor();
        frac < 1e-9 || frac > 1.0 - 1e-9
    };
    if n <= EXACT_MULTIPLICITY_MAX || ambiguous {
        let size = multinomial_biguint(counts);
        let big_dim = BigUint::from(target_dim);
        let mut copies = (quotient.floor().max(0.0) as u64).saturating_sub(1);
        let mut power = big_dim.pow(copies as u32);
        while &power * &big_dim <= size {
            power *= &big_dim;
            copies += 1;
        }
        while power > size {
            power /= &big_dim;
            copies -= 1;
        }
        let success = (copies as f64 * ln_dim - ln_biguint(&size)).exp().min(1.0);
        Ok((copies, success))
    } else {
        let copies = quotient.floor() as u64;
        let success = (copies as f64 * ln_dim - ln_size).exp().min(1.0);
        Ok((copies, success))
    }
}

/// One-shot yield for a measured type: ⌊log_dim |T_t|⌋ copies with success
/// probability dim^⌊·⌋/|T_t| ∈ (1/dim, 1].
pub fn shot_yield(t: &TypeClass, target_dim: u64) -> Result<YieldSample> {
    let (copies, success_probability) = yield_core(&t.counts, target_dim)?;
    Ok(YieldSample {
        type_class: t.clone(),
        copies,
        success_probability,
    })
}

/// Simulation inputs. `exact` replaces Monte-Carlo shots with an exact
/// expectation over every type class (guarded by the enumeration limit).
#[derive(Debug, Clone, Serialize)]
pub struct SimulateOptions {
    pub input_copies: u64,
    pub shots: u64,
    pub target_dim: u64,
    pub seed: u64,
    pub exact: bool,
}

/// Aggregated protocol statistics, exact or empirical.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub input_copies: u64,
    /// 0 in exact mode.
    pub shots: u64,
    pub target_dim: u64,
    pub seed: u64,
    pub exact: bool,
    pub alphabet_size: usize,
    /// Entropy shift from alphabet truncation, bits (exact, see
    /// [`truncated_single_copy_distribution`]).
    pub truncation_bias_bits: f64,
    /// Single-copy mass dropped by alphabet truncation.
    pub truncated_mass: f64,
    /// Mass bound for outcomes the state constructor never materialized.
    pub unresolved_tail_mass: f64,
    /// H(single copy)/log₂(target_dim) over the truncated alphabet.
    pub analytic_rate: f64,
    pub mean_copies_per_input: f64,
    /// Standard error of the mean; 0 in exact mode.
    pub stderr_copies_per_input: f64,
    pub mean_success_probability: f64,
    /// Energy audit: particles carried per input copy by the sampled
    /// types; matches the single-copy expectation in distribution.
    pub mean_particles_per_input: f64,
    pub stderr_particles_per_input: f64,
    pub expected_particles_per_input: f64,
}

/// Run the type-class protocol on n copies of a two-mode state, either by
/// Monte-Carlo sampling or by exact expectation over all types.
pub fn simulate(state: &FockSpaceState, options: &SimulateOptions) -> Result<SimulationReport> {
    let n = options.input_copies;
    if n == 0 {
        return Err(FockcohError::InvalidArguments(
            "simulation needs at least one input copy per shot".into(),
        ));
    }
    let (table, truncation_bias_bits, truncated_mass) = truncated_single_copy_distribution(state);
    let alphabet_size = table.len();
    let probs: Vec<f64> = table.iter().map(|(_, w)| w.to_f64()).collect();
    let particles: Vec<f64> = table
        .iter()
        .map(|(label, _)| match label {
            OutcomeLabel::Occupation(occ) => occ.total() as f64,
            OutcomeLabel::Symbol(_) => 0.0,
        })
        .collect();
    let analytic_rate = table.entropy_bits() / (options.target_dim as f64).log2();
    let all_modes: Vec<usize> = (0..state.modes()).collect();
    let expected_particles_per_input = state.expected_particle_number(&all_modes);

    let mut report = SimulationReport {
        input_copies: n,
        shots: 0,
        target_dim: options.target_dim,
        seed: options.seed,
        exact: options.exact,
        alphabet_size,
        truncation_bias_bits,
        truncated_mass,
        unresolved_tail_mass: state.tail_mass_bound(),
        analytic_rate,
        mean_copies_per_input: 0.0,
        stderr_copies_per_input: 0.0,
        mean_success_probability: 0.0,
        mean_particles_per_input: 0.0,
        stderr_particles_per_input: 0.0,
        expected_particles_per_input,
    };

    if options.exact {
        let type_count = sector_dimension(alphabet_size, n);
        if type_count.to_f64().map_or(true, |c| c > TYPE_ENUMERATION_GUARD as f64) {
            return Err(FockcohError::ResourceLimit(format!(
                "exact mode would enumerate {type_count} type classes (guard {TYPE_ENUMERATION_GUARD})"
            )));
        }
        let ln_probs: Vec<f64> = table.iter().map(|(_, w)| w.ln_magnitude()).collect();
        let mut mass = CompensatedSum::new();
        let mut copies_acc = CompensatedSum::new();
        let mut success_acc = CompensatedSum::new();
        let mut particles_acc = CompensatedSum::new();
        for occ in enumerate_sector(alphabet_size, n) {
            let counts: Vec<u64> = occ.counts().iter().map(|&c| u64::from(c)).collect();
            let mut ln_prob = ln_multinomial(&counts);
            let mut shot_particles = 0.0;
            for (i, &c) in counts.iter().enumerate() {
                if c > 0 {
                    ln_prob += c as f64 * ln_probs[i];
                    shot_particles += c as f64 * particles[i];
                }
            }
            let prob = ln_prob.exp();
            if prob == 0.0 {
                continue;
            }
            let (copies, success) = yield_core(&counts, options.target_dim)?;
            mass.add(prob);
            copies_acc.add(prob * copies as f64);
            success_acc.add(prob * success);
            particles_acc.add(prob * shot_particles);
        }
        debug_assert!((mass.value() - 1.0).abs() < 1e-9);
        report.mean_copies_per_input = copies_acc.value() / n as f64;
        report.mean_success_probability = success_acc.value();
        report.mean_particles_per_input = particles_acc.value() / n as f64;
        return Ok(report);
    }

    let shots = options.shots;
    if shots == 0 {
        return Err(FockcohError::InvalidArguments(
            "Monte-Carlo mode needs at least one shot".into(),
        ));
    }
    if (n as f64) * (shots as f64) > SIMULATION_SAMPLE_GUARD as f64 {
        return Err(FockcohError::ResourceLimit(format!(
            "{n} copies x {shots} shots exceeds the {SIMULATION_SAMPLE_GUARD} sample guard"
        )));
    }

    // Per-shot generators come from a fixed seed plus the shot index as the
    // stream, so results do not depend on thread scheduling; aggregation
    // runs over the index-ordered collection for the same reason.
    let samples: Vec<(f64, f64, f64)> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
            rng.set_stream(shot);
            let counts = sample_counts(&probs, n, &mut rng);
            let (copies, success) =
                yield_core(&counts, options.target_dim).expect("dim checked on first shot");
            let shot_particles: f64 = counts
                .iter()
                .zip(&particles)
                .map(|(&c, &p)| c as f64 * p)
                .sum();
            (
                copies as f64 / n as f64,
                success,
                shot_particles / n as f64,
            )
        })
        .collect();

    yield_core(&[n], options.target_dim)?;

    let mean_of = |idx: fn(&(f64, f64, f64)) -> f64| {
        let mut acc = CompensatedSum::new();
        for s in &samples {
            acc.add(idx(s));
        }
        acc.value() / shots as f64
    };
    let stderr_of = |idx: fn(&(f64, f64, f64)) -> f64, mean: f64| {
        if shots < 2 {
            return 0.0;
        }
        let mut acc = CompensatedSum::new();
        for s in &samples {
            let d = idx(s) - mean;
            acc.add(d * d);
        }
        (acc.value() / ((shots - 1) as f64 * shots as f64)).sqrt()
    };

    report.shots = shots;
    report.mean_copies_per_input = mean_of(|s| s.0);
    report.stderr_copies_per_input = stderr_of(|s| s.0, report.mean_copies_per_input);
    report.mean_success_probability = mean_of(|s| s.1);
    report.mean_particles_per_input = mean_of(|s| s.2);
    report.stderr_particles_per_input = stderr_of(|s| s.2, report.mean_particles_per_input);
    Ok(report)
}

/// Bounds on the number of δ-typical length-n sequences, with an exact
/// count for small instances.
#[derive(Debug, Clone, Serialize)]
pub struct TypicalSetReport {
    pub entropy_bits: f64,
    /// (1 − ε)·2^(n(H−δ)); zero when the miss bound ε reaches 1.
    pub lower: LogWeight,
    /// 2^(n(H+δ)).
    pub upper: LogWeight,
    /// Chebyshev bound on the probability a sequence is atypical:
    /// Var(−log₂ p)/(nδ²), clamped to [0, 1].
    pub miss_probability_bound: f64,
    /// Exact sequence count by type enumeration, for n ≤ 12 over alphabets
    /// of at most 6 outcomes.
    pub exact_count: Option<LogWeight>,
}

/// Size bounds for the set of δ-typical sequences of n single-copy draws,
/// δ in bits.
pub fn typical_set_log_size(p: &ProbabilityTable, n: u64, delta: f64) -> Result<TypicalSetReport> {
    if n == 0 || delta <= 0.0 {
        return Err(FockcohError::InvalidArguments(
            "typical-set bounds need n >= 1 and delta > 0".into(),
        ));
    }
    let entropy_bits = p.entropy_bits();
    let mut var_acc = CompensatedSum::new();
    for (_, w) in p.iter() {
        let prob = w.to_f64();
        let bits = -w.ln_magnitude() / std::f64::consts::LN_2;
        let dev = bits - entropy_bits;
        var_acc.add(prob * dev * dev);
    }
    let variance_bits = var_acc.value().max(0.0);
    let miss = (variance_bits / (n as f64 * delta * delta)).clamp(0.0, 1.0);

    let nf = n as f64;
    let upper = LogWeight::from_ln(nf * (entropy_bits + delta) * std::f64::consts::LN_2);
    let lower = if miss < 1.0 {
        LogWeight::from_ln(
            (1.0 - miss).ln() + nf * (entropy_bits - delta) * std::f64::consts::LN_2,
        )
    } else {
        LogWeight::zero()
    };

    let exact_count = if n <= 12 && p.len() <= 6 {
        let log2_probs: Vec<f64> = p
            .iter()
            .map(|(_, w)| w.ln_magnitude() / std::f64::consts::LN_2)
            .collect();
        let mut count = BigUint::from(0u32);
        for occ in enumerate_sector(p.len(), n) {
            let counts: Vec<u64> = occ.counts().iter().map(|&c| u64::from(c)).collect();
            let seq_bits: f64 = counts
                .iter()
                .zip(&log2_probs)
                .map(|(&c, &lp)| c as f64 * lp)
                .sum();
            if (-seq_bits / nf - entropy_bits).abs() <= delta {
                count += multinomial_biguint(&counts);
            }
        }
        if count == BigUint::from(0u32) {
            Some(LogWeight::zero())
        } else {
            Some(LogWeight::from_ln(ln_biguint(&count)))
        }
    } else {
        None
    };

    Ok(TypicalSetReport {
        entropy_bits,
        lower,
        upper,
        miss_probability_bound: miss,
        exact_count,
    })
}
