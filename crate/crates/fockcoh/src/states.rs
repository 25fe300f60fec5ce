//! Constructors for the named states exercised by the rate and membership
//! machinery. Every constructor returns a normalized [`FockSpaceState`]
//! (squared norm within `[1 - tail_mass_bound, 1]`), computes amplitudes in
//! signed log space so no intermediate factorial overflows, and fixes the
//! global phase so the first nonzero amplitude in (sector, colex) order is
//! real positive.

use crate::error::{FockcohError, Result};
use crate::fock::{FockSpaceState, OccupationVector};
use crate::logspace::{self, ln_factorial, CompensatedSum, LogWeight};
use crate::tolerance;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Parameters for the two-linear-factor family
/// `(a1^dag + tan(theta) a2^dag)^m (a1^dag - tan(theta) a2^dag)^(n-m) |vac>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiParams {
    /// Mixing angle in `[0, pi/4]`.
    pub theta: f64,
    /// Exponent of the plus factor, in `[0, n]`.
    pub m: u64,
    /// Total particle number.
    pub n: u64,
}

/// Condensate of `n_particles` bosons per mode pair across `pairs` pairs:
/// the tensor power of `((a1^dag + a2^dag)/sqrt(2))^N |vac> / sqrt(N!)`.
///
/// Each pair carries the binomial B(N, 1/2) Fock distribution; for one pair
/// the amplitudes are `sqrt(C(N,k)/2^N)` on `|N-k, k>`.
pub fn bec(n_particles: u64, pairs: u64) -> Result<FockSpaceState> {
    if pairs < 1 {
        return Err(FockcohError::InvalidArguments("bec needs at least one pair".into()));
    }
    let support = checked_pow_u64(n_particles + 1, pairs);
    match support {
        Some(s) if s <= tolerance::MATERIALIZATION_GUARD => {}
        _ => {
            return Err(FockcohError::ResourceLimit(format!(
                "bec support (N+1)^pairs = {}^{} exceeds the materialization guard {}",
                n_particles + 1,
                pairs,
                tolerance::MATERIALIZATION_GUARD
            )))
        }
    }
    let single = bec_single_pair(n_particles);
    let mut state = single.clone();
    for _ in 1..pairs {
        state = state.tensor(&single);
    }
    Ok(state)
}

fn bec_single_pair(n: u64) -> FockSpaceState {
    // Amplitude sqrt(C(n,k)/2^n), computed in log space.
    let amps: Vec<Complex64> = (0..=n)
        .map(|k| {
            let ln = 0.5 * (logspace::ln_binomial(n, k) - n as f64 * std::f64::consts::LN_2);
            Complex64::new(ln.exp(), 0.0)
        })
        .collect();
    FockSpaceState::from_dense_two_mode(BTreeMap::from([(n, amps)]), 0.0)
}

/// Maximally correlated two-mode state
/// `(N+1)^(-1/2) sum_m |N-m, m>` on the `N` sector.
pub fn mc(n: u64) -> FockSpaceState {
    let amp = Complex64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
    let amps = vec![amp; (n + 1) as usize];
    FockSpaceState::from_dense_two_mode(BTreeMap::from([(n, amps)]), 0.0)
}

/// `copies` bosonic copies of [`mc`] on `2 * copies` modes: uniform
/// amplitude `(N+1)^(-copies/2)` over every product occupation pattern.
pub fn mc_bosonic_copies(n: u64, copies: u64) -> Result<FockSpaceState> {
    if copies < 1 {
        return Err(FockcohError::InvalidArguments(
            "mc_bosonic_copies needs at least one copy".into(),
        ));
    }
    match checked_pow_u64(n + 1, copies) {
        Some(s) if s <= tolerance::MATERIALIZATION_GUARD => {}
        _ => {
            return Err(FockcohError::ResourceLimit(format!(
                "mc_bosonic_copies support (N+1)^copies = {}^{} exceeds the \
                 materialization guard {}",
                n + 1,
                copies,
                tolerance::MATERIALIZATION_GUARD
            )))
        }
    }
    let single = mc(n);
    let mut state = single.clone();
    for _ in 1..copies {
        state = state.tensor(&single);
    }
    Ok(state)
}

/// Indefinite-number maximally correlated state
/// `(2N+1)^(-1/2) sum_{k=0}^{2N} |MC_k>`: sector weight `1/(2N+1)` on each
/// of the sectors `0..=2N`, uniform within each sector. Its expected
/// particle number is exactly `N`.
pub fn mc_tilde(n: u64) -> FockSpaceState {
    let outer = 1.0 / ((2 * n + 1) as f64);
    let mut sectors = BTreeMap::new();
    for k in 0..=(2 * n) {
        let amp = Complex64::new((outer / ((k + 1) as f64)).sqrt(), 0.0);
        sectors.insert(k, vec![amp; (k + 1) as usize]);
    }
    FockSpaceState::from_dense_two_mode(sectors, 0.0)
}

/// Signed integer coefficients `w_k = [x^k] (1+x)^m (1-x)^(n-m)`.
///
/// Computed exactly by the three-term recurrence obtained from
/// `(1-x^2) f'(x) = (2m - n - n x) f(x)`:
/// `(k+1) w_{k+1} = (2m-n) w_k - (n-k+1) w_{k-1}`, `w_0 = 1`.
/// The division by `k+1` is exact; exact integers keep sign cancellations
/// (for example odd coefficients at `m = n/2`) precise at every order.
pub fn krawtchouk_coefficients(m: u64, n: u64) -> Vec<BigInt> {
    assert!(m <= n, "krawtchouk_coefficients requires m <= n");
    let mut w = Vec::with_capacity((n + 1) as usize);
    w.push(BigInt::one());
    if n == 0 {
        return w;
    }
    let lead = BigInt::from(2 * m as i64 - n as i64);
    w.push(lead.clone());
    for k in 1..n {
        let next = &lead * &w[k as usize]
            - BigInt::from(n - k + 1) * &w[(k - 1) as usize];
        let (q, r) = num_integer::Integer::div_rem(&next, &BigInt::from(k + 1));
        debug_assert!(r.is_zero(), "recurrence division must be exact");
        w.push(q);
    }
    w
}

/// The two-linear-factor family; see [`PsiParams`]. Amplitudes are real
/// with signs from the exact integer coefficients:
/// `c_k ~ w_k tan(theta)^k sqrt((n-k)! k!)`.
pub fn psi(params: PsiParams) -> Result<FockSpaceState> {
    let PsiParams { theta, m, n } = params;
    if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-12).contains(&theta) {
        return Err(FockcohError::InvalidArguments(format!(
            "theta = {theta} outside [0, pi/4]"
        )));
    }
    if m > n {
        return Err(FockcohError::InvalidArguments(format!("m = {m} exceeds n = {n}")));
    }
    let t = theta.tan();
    let w = krawtchouk_coefficients(m, n);
    let mut signs = vec![0i8; (n + 1) as usize];
    let mut ln_mags = vec![f64::NEG_INFINITY; (n + 1) as usize];
    let mut max_ln = f64::NEG_INFINITY;
    for k in 0..=n {
        let wk = logspace::logweight_from_bigint(&w[k as usize]);
        if wk.is_zero() || (t == 0.0 && k > 0) {
            continue;
        }
        let ln_t_term = if k == 0 { 0.0 } else { k as f64 * t.ln() };
        let ln = wk.ln_magnitude()
            + ln_t_term
            + 0.5 * (ln_factorial(n - k) + ln_factorial(k));
        signs[k as usize] = wk.sign();
        ln_mags[k as usize] = ln;
        max_ln = max_ln.max(ln);
    }
    let mut raw = vec![0.0f64; (n + 1) as usize];
    let mut norm_sq = CompensatedSum::new();
    for k in 0..=(n as usize) {
        if signs[k] != 0 {
            let v = (ln_mags[k] - max_ln).exp() * f64::from(signs[k]);
            raw[k] = v;
            norm_sq.add(v * v);
        }
    }
    let norm = norm_sq.value().sqrt();
    let amps: Vec<Complex64> = raw
        .into_iter()
        .map(|v| Complex64::new(v / norm, 0.0))
        .collect();
    // w_0 = 1 > 0, so the first amplitude is already real positive.
    Ok(FockSpaceState::from_dense_two_mode(BTreeMap::from([(n, amps)]), 0.0))
}

/// Sector weights of the constrained-entropy-maximizing state at mean
/// particle number `n`: `p_0 = (2/(n+2))^2` and
/// `p_k = 4(k+1) n^k / (n+2)^(k+2)`, a (shifted) negative-binomial law.
/// Tail mass above sector `k_cut` has the closed form
/// `r^(k_cut+1) ((k_cut+2) - (k_cut+1) r)` with `r = n/(n+2)`.
#[derive(Debug, Clone)]
pub struct PhiWeights {
    /// `weights[k]` is the probability of the `k`-particle sector.
    pub weights: Vec<f64>,
    /// Exact tail mass dropped by the truncation.
    pub tail_mass: f64,
}

/// Closed-form tail mass of the phi sector law above `k_cut`.
pub fn phi_tail_mass(n: u64, k_cut: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let r = n as f64 / (n as f64 + 2.0);
    let k = k_cut as f64;
    r.powi((k_cut + 1) as i32) * ((k + 2.0) - (k + 1.0) * r)
}

/// Smallest truncation sector for which both the tail mass stays below
/// [`tolerance::TAIL_MASS_BOUND`] and the truncated mean stays within
/// 1e-10 of `n`.
pub fn phi_truncation_sector(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut k = n;
    while phi_tail_mass(n, k) >= tolerance::TAIL_MASS_BOUND {
        k += 1 + k / 8;
    }
    // Refine down to the smallest k meeting the mass bound.
    while k > 0 && phi_tail_mass(n, k - 1) < tolerance::TAIL_MASS_BOUND {
        k -= 1;
    }
    // The mean deficit sum_{j>k} j p_j can exceed the mass bound by a factor
    // of order k; extend until the numerically summed deficit is negligible.
    while tail_mean_deficit(n, k) >= 1e-10 {
        k += k / 16 + 1;
    }
    k
}

fn tail_mean_deficit(n: u64, k_cut: u64) -> f64 {
    let nf = n as f64;
    let r = nf / (nf + 2.0);
    let ln_r = r.ln();
    let ln_pref = (4.0 / ((nf + 2.0) * (nf + 2.0))).ln();
    let mut sum = CompensatedSum::new();
    for j in (k_cut + 1).. {
        let term = (ln_pref + j as f64 * ln_r).exp() * (j as f64 + 1.0) * j as f64;
        sum.add(term);
        if term < 1e-18 * (1.0 + sum.value()) {
            break;
        }
    }
    sum.value()
}

/// Sector law of [`phi`] truncated per [`phi_truncation_sector`].
pub fn phi_sector_weights(n: u64) -> PhiWeights {
    let k_cut = phi_truncation_sector(n);
    if n == 0 {
        return PhiWeights { weights: vec![1.0], tail_mass: 0.0 };
    }
    let nf = n as f64;
    let ln_r = (nf / (nf + 2.0)).ln();
    let ln_pref = (4.0 / ((nf + 2.0) * (nf + 2.0))).ln();
    let weights: Vec<f64> = (0..=k_cut)
        .map(|k| (ln_pref + k as f64 * ln_r).exp() * (k as f64 + 1.0))
        .collect();
    PhiWeights { weights, tail_mass: phi_tail_mass(n, k_cut) }
}

/// The optimal indefinite-number resource state at mean particle number
/// `n`: sector weights per [`phi_sector_weights`], uniform amplitudes
/// `sqrt(p_k/(k+1))` within each sector.
pub fn phi(n: u64) -> Result<FockSpaceState> {
    let k_cut = phi_truncation_sector(n);
    let components = (k_cut + 1) * (k_cut + 2) / 2;
    if components > tolerance::MATERIALIZATION_GUARD {
        return Err(FockcohError::ResourceLimit(format!(
            "phi({n}) spans sectors up to {k_cut} ({components} amplitudes, \
             guard {}); use the analytic sector-weight path instead",
            tolerance::MATERIALIZATION_GUARD
        )));
    }
    let pw = phi_sector_weights(n);
    let mut sectors = BTreeMap::new();
    for (k, &p) in pw.weights.iter().enumerate() {
        let amp = Complex64::new((p / (k as f64 + 1.0)).sqrt(), 0.0);
        sectors.insert(k as u64, vec![amp; k + 1]);
    }
    Ok(FockSpaceState::from_dense_two_mode(sectors, pw.tail_mass))
}

/// `(|N,0> + |0,N>)/sqrt(2)`.
pub fn noon(n: u64) -> Result<FockSpaceState> {
    if n < 1 {
        return Err(FockcohError::InvalidArguments(
            "noon needs at least one particle".into(),
        ));
    }
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
    amps[0] = amp;
    amps[n as usize] = amp;
    Ok(FockSpaceState::from_dense_two_mode(BTreeMap::from([(n, amps)]), 0.0))
}

/// Pair-correlated state `(a1^dag^2 + a2^dag^2)^(n/2) |vac>` normalized:
/// support on even mode-2 counts only, amplitude on `|n-2j, 2j>`
/// proportional to `C(n/2, j) sqrt((n-2j)! (2j)!)`.
pub fn pair_correlated(n: u64) -> Result<FockSpaceState> {
    if n < 2 || n % 2 != 0 {
        return Err(FockcohError::InvalidArguments(format!(
            "pair_correlated needs an even particle number >= 2, got {n}"
        )));
    }
    let half = n / 2;
    let mut ln_mags = vec![f64::NEG_INFINITY; (half + 1) as usize];
    let mut max_ln = f64::NEG_INFINITY;
    for j in 0..=half {
        let ln = logspace::ln_binomial(half, j)
            + 0.5 * (ln_factorial(n - 2 * j) + ln_factorial(2 * j));
        ln_mags[j as usize] = ln;
        max_ln = max_ln.max(ln);
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
    let mut norm_sq = CompensatedSum::new();
    let mut raw = vec![0.0f64; (half + 1) as usize];
    for j in 0..=(half as usize) {
        let v = (ln_mags[j] - max_ln).exp();
        raw[j] = v;
        norm_sq.add(v * v);
    }
    let norm = norm_sq.value().sqrt();
    for j in 0..=(half as usize) {
        amps[2 * j] = Complex64::new(raw[j] / norm, 0.0);
    }
    Ok(FockSpaceState::from_dense_two_mode(BTreeMap::from([(n, amps)]), 0.0))
}

/// Heisenberg-Weyl coherent state of amplitude `alpha` along the
/// single-particle mode `spinor[0] a1^dag + spinor[1] a2^dag`, truncated at
/// total number `n_max`.
///
/// Sector weights are Poisson(`|alpha|^2`); within sector `N` the
/// amplitudes are `sqrt(C(N,k)) s1^(N-k) s2^k` times the sector amplitude.
/// A product of equal displacements on both modes is the special case
/// `spinor = (1,1)/sqrt(2)` with amplitude `sqrt(2) alpha`, so sector
/// projections of two-mode product coherent states are covered as well.
pub fn hw_coherent(
    alpha: Complex64,
    spinor: [Complex64; 2],
    n_max: u64,
) -> Result<FockSpaceState> {
    let snorm = spinor[0].norm_sqr() + spinor[1].norm_sqr();
    if (snorm - 1.0).abs() > tolerance::NORM_TOL {
        return Err(FockcohError::InvalidArguments(format!(
            "spinor norm^2 = {snorm:.15} is not 1 within {}",
            tolerance::NORM_TOL
        )));
    }
    let lambda = alpha.norm_sqr();
    // Poisson tail beyond n_max must sit inside the truncation budget.
    let mut cdf = CompensatedSum::new();
    for n in 0..=n_max {
        let ln_pmf = -lambda + ln_pow_term(lambda, n) - ln_factorial(n);
        cdf.add(ln_pmf.exp());
    }
    let tail = (1.0 - cdf.value()).max(0.0);
    if tail >= tolerance::TAIL_MASS_BOUND {
        return Err(FockcohError::InvalidArguments(format!(
            "Poisson tail beyond n_max = {n_max} is {tail:.3e}, above the \
             truncation budget {}",
            tolerance::TAIL_MASS_BOUND
        )));
    }

    let mut sectors = BTreeMap::new();
    for n in 0..=n_max {
        // exp(-|a|^2/2) alpha^n / sqrt(n!) sector prefactor.
        let ln_sector_mag = -lambda / 2.0 + ln_pow_term(alpha.norm(), 2 * n) / 2.0
            - 0.5 * ln_factorial(n);
        let sector_phase = if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            (alpha / alpha.norm()).powu(n as u32)
        };
        let prefactor = sector_phase * ln_sector_mag.exp();
        let amps: Vec<Complex64> = (0..=n)
            .map(|k| {
                let root_binom = (0.5 * logspace::ln_binomial(n, k)).exp();
                prefactor * root_binom * pow_c(spinor[0], n - k) * pow_c(spinor[1], k)
            })
            .collect();
        sectors.insert(n, amps);
    }
    Ok(FockSpaceState::from_dense_two_mode(sectors, tail))
}

fn ln_pow_term(base: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * base.ln()
    }
}

fn pow_c(z: Complex64, k: u64) -> Complex64 {
    z.powu(k as u32)
}

/// Two-particle interference output state `c1 |2,0> + c2 |1,1>`.
pub fn hom_phi(c1: Complex64, c2: Complex64) -> Result<FockSpaceState> {
    let norm = c1.norm_sqr() + c2.norm_sqr();
    if (norm - 1.0).abs() > tolerance::NORM_TOL {
        return Err(FockcohError::InvalidArguments(format!(
            "|c1|^2 + |c2|^2 = {norm:.15} is not 1 within {}",
            tolerance::NORM_TOL
        )));
    }
    let amps = vec![c1, c2, Complex64::new(0.0, 0.0)];
    Ok(FockSpaceState::from_dense_two_mode(BTreeMap::from([(2u64, amps)]), 0.0))
}

fn checked_pow_u64(base: u64, exp: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Parse a state description of the form `name(key=value, ...)`, e.g.
/// `bec(N=2,n=1)`, `psi(theta=0.7853981633974483,m=3,N=6)`,
/// `mc_tilde(N=4)`, `noon(N=3)`, `hom_phi(c1=0.6,c2=0.8)` (real
/// coefficients only in the text form).
pub fn parse_named_state(text: &str) -> Result<FockSpaceState> {
    let text = text.trim();
    let (name, args) = match text.find('(') {
        Some(open) => {
            if !text.ends_with(')') {
                return Err(FockcohError::InvalidArguments(format!(
                    "unbalanced parentheses in state spec '{text}'"
                )));
            }
            (&text[..open], &text[open + 1..text.len() - 1])
        }
        None => (text, ""),
    };
    let mut kv: BTreeMap<String, f64> = BTreeMap::new();
    for part in args.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part.split_once('=').ok_or_else(|| {
            FockcohError::InvalidArguments(format!(
                "state argument '{part}' is not key=value"
            ))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            FockcohError::InvalidArguments(format!(
                "state argument '{part}' has a non-numeric value"
            ))
        })?;
        kv.insert(key.trim().to_ascii_lowercase(), value);
    }
    let get_int = |kv: &BTreeMap<String, f64>, key: &str| -> Result<u64> {
        let v = *kv.get(key).ok_or_else(|| {
            FockcohError::InvalidArguments(format!(
                "state '{name}' is missing argument '{key}'"
            ))
        })?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(FockcohError::InvalidArguments(format!(
                "argument '{key}' must be a nonnegative integer, got {v}"
            )));
        }
        Ok(v as u64)
    };
    match name.to_ascii_lowercase().as_str() {
        "bec" => bec(get_int(&kv, "n")?, get_int(&kv, "pairs").unwrap_or(1)),
        "mc" => Ok(mc(get_int(&kv, "n")?)),
        "mc_bosonic" | "mc_copies" => {
            mc_bosonic_copies(get_int(&kv, "n")?, get_int(&kv, "copies")?)
        }
        "mc_tilde" => Ok(mc_tilde(get_int(&kv, "n")?)),
        "psi" => {
            let theta = *kv.get("theta").ok_or_else(|| {
                FockcohError::InvalidArguments("psi needs theta".into())
            })?;
            psi(PsiParams { theta, m: get_int(&kv, "m")?, n: get_int(&kv, "n")? })
        }
        "phi" => phi(get_int(&kv, "n")?),
        "noon" => noon(get_int(&kv, "n")?),
        "pair_correlated" => pair_correlated(get_int(&kv, "n")?),
        "vacuum" => Ok(FockSpaceState::vacuum(2)),
        "fock" => {
            let n1 = get_int(&kv, "n1")?;
            let n2 = get_int(&kv, "n2")?;
            Ok(FockSpaceState::basis_state(OccupationVector::new(vec![
                n1 as u32, n2 as u32,
            ])))
        }
        "hom_phi" => {
            let c1 = *kv.get("c1").ok_or_else(|| {
                FockcohError::InvalidArguments("hom_phi needs c1".into())
            })?;
            let c2 = match kv.get("c2") {
                Some(&v) => v,
                // Fill c2 from normalization when omitted.
                None => (1.0 - c1 * c1).max(0.0).sqrt(),
            };
            hom_phi(Complex64::new(c1, 0.0), Complex64::new(c2, 0.0))
        }
        "hw_coherent" => {
            let alpha = *kv.get("alpha").ok_or_else(|| {
                FockcohError::InvalidArguments("hw_coherent needs alpha".into())
            })?;
            let s1 = kv.get("s1").copied().unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
            let s2 = kv.get("s2").copied().unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
            let n_max = get_int(&kv, "n_max")?;
            hw_coherent(
                Complex64::new(alpha, 0.0),
                [Complex64::new(s1, 0.0), Complex64::new(s2, 0.0)],
                n_max,
            )
        }
        other => Err(FockcohError::InvalidArguments(format!(
            "unknown state name '{other}'"
        ))),
    }
}

/// Sign of a Krawtchouk coefficient as a [`LogWeight`]; exposed for the
/// distribution-level fast paths in sweeps.
pub fn krawtchouk_logweights(m: u64, n: u64) -> Vec<LogWeight> {
    krawtchouk_coefficients(m, n)
        .iter()
        .map(logspace::logweight_from_bigint)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::dephase_fock;
    use approx::assert_abs_diff_eq;

    fn amp(state: &FockSpaceState, n1: u32, n2: u32) -> Complex64 {
        state.amplitude(&OccupationVector::new(vec![n1, n2]))
    }

    #[test]
    fn bec_small_cases_match_binomial_amplitudes() {
        let b1 = bec(1, 1).unwrap();
        assert_abs_diff_eq!(amp(&b1, 1, 0).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(amp(&b1, 0, 1).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);

        let b2 = bec(2, 1).unwrap();
        assert_abs_diff_eq!(amp(&b2, 2, 0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(amp(&b2, 1, 1).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(amp(&b2, 0, 2).re, 0.5, epsilon = 1e-15);

        assert_abs_diff_eq!(bec(3, 1).unwrap().expected_particle_number(&[0]), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn bec_multi_pair_is_a_product_law() {
        let b = bec(2, 2).unwrap();
        assert_eq!(b.modes(), 4);
        assert_eq!(b.nonzero_components(), 9);
        // |1,1,2,0> carries (1/sqrt2)*(1/2).
        let a = b.amplitude(&OccupationVector::new(vec![1, 1, 2, 0]));
        assert_abs_diff_eq!(a.re, std::f64::consts::FRAC_1_SQRT_2 * 0.5, epsilon = 1e-14);
        b.validate().unwrap();
    }

    #[test]
    fn bec_guard_rejects_huge_supports() {
        assert!(matches!(bec(100, 4), Err(FockcohError::ResourceLimit(_))));
    }

    #[test]
    fn mc_states_are_uniform() {
        let m2 = mc(2);
        let u = 1.0 / 3f64.sqrt();
        for k in 0..=2 {
            assert_abs_diff_eq!(amp(&m2, 2 - k, k).re, u, epsilon = 1e-15);
        }

        let copies = mc_bosonic_copies(1, 2).unwrap();
        assert_eq!(copies.modes(), 4);
        assert_eq!(copies.nonzero_components(), 4);
        for (_, a) in copies.components() {
            if a.norm_sqr() > 0.0 {
                assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            }
        }
        assert!(matches!(
            mc_bosonic_copies(100, 4),
            Err(FockcohError::ResourceLimit(_))
        ));
    }

    #[test]
    fn mc_tilde_sector_weights_and_mean() {
        let s = mc_tilde(1);
        let w = s.sector_weights();
        for k in 0..=2u64 {
            assert_abs_diff_eq!(w[&k], 1.0 / 3.0, epsilon = 1e-14);
        }
        for n in [0u64, 1, 2, 7] {
            let s = mc_tilde(n);
            assert_abs_diff_eq!(
                s.expected_particle_number(&[0, 1]),
                n as f64,
                epsilon = 1e-10
            );
            s.validate().unwrap();
        }
        assert_abs_diff_eq!(amp(&mc_tilde(0), 0, 0).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn krawtchouk_matches_direct_expansion() {
        // (1+x)^2 (1-x)^1 = 1 + x - x^2 - x^3.
        let w = krawtchouk_coefficients(2, 3);
        let expect: Vec<i64> = vec![1, 1, -1, -1];
        assert_eq!(w, expect.into_iter().map(BigInt::from).collect::<Vec<_>>());
        // m = n gives plain binomial coefficients.
        let w = krawtchouk_coefficients(4, 4);
        assert_eq!(
            w,
            [1i64, 4, 6, 4, 1].map(BigInt::from).to_vec()
        );
    }

    #[test]
    fn psi_at_theta_zero_is_a_fock_state() {
        let s = psi(PsiParams { theta: 0.0, m: 2, n: 5 }).unwrap();
        assert_abs_diff_eq!(amp(&s, 5, 0).re, 1.0, epsilon = 1e-15);
        assert_eq!(s.nonzero_components(), 1);
    }

    #[test]
    fn psi_at_quarter_pi_with_m_zero_matches_bec_magnitudes_with_alternating_signs() {
        let n = 7u64;
        let s = psi(PsiParams { theta: std::f64::consts::FRAC_PI_4, m: 0, n }).unwrap();
        let b = bec(n, 1).unwrap();
        for k in 0..=n {
            let got = amp(&s, (n - k) as u32, k as u32).re;
            let want = b
                .amplitude(&OccupationVector::new(vec![(n - k) as u32, k as u32]))
                .re
                * if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_at_half_filling_has_exact_zeros_on_odd_counts() {
        let n = 12u64;
        let s = psi(PsiParams { theta: std::f64::consts::FRAC_PI_4, m: n / 2, n }).unwrap();
        for k in (1..=n).step_by(2) {
            assert_eq!(amp(&s, (n - k) as u32, k as u32), Complex64::new(0.0, 0.0));
        }
        // Magnitudes match the pair-correlated construction.
        let pc = pair_correlated(n).unwrap();
        for k in (0..=n).step_by(2) {
            assert_abs_diff_eq!(
                amp(&s, (n - k) as u32, k as u32).norm(),
                amp(&pc, (n - k) as u32, k as u32).norm(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn psi_factor_swap_leaves_the_fock_distribution_invariant() {
        for &(theta, m, n) in &[(0.3f64, 2u64, 9u64), (std::f64::consts::FRAC_PI_4, 3, 9)] {
            let a = dephase_fock(&psi(PsiParams { theta, m, n }).unwrap());
            let b = dephase_fock(&psi(PsiParams { theta, m: n - m, n }).unwrap());
            for (label, p) in a.iter() {
                assert_abs_diff_eq!(p.to_f64(), b.probability(label).to_f64(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn psi_rejects_bad_parameters() {
        assert!(psi(PsiParams { theta: 1.0, m: 0, n: 2 }).is_err());
        assert!(psi(PsiParams { theta: 0.3, m: 3, n: 2 }).is_err());
    }

    #[test]
    fn phi_weights_match_the_closed_form_law() {
        let n = 2u64;
        let pw = phi_sector_weights(n);
        assert_abs_diff_eq!(pw.weights[0], 0.25, epsilon = 1e-15);
        for k in 1..=6usize {
            let expect = 4.0 * (k as f64 + 1.0) * 2f64.powi(k as i32)
                / 4f64.powi(k as i32 + 2);
            assert_abs_diff_eq!(pw.weights[k], expect, epsilon = 1e-15);
        }
        let mass: f64 = pw.weights.iter().sum();
        assert_abs_diff_eq!(mass, 1.0 - pw.tail_mass, epsilon = 1e-13);
    }

    #[test]
    fn phi_state_is_normalized_with_mean_n() {
        for n in [0u64, 1, 2, 5, 10] {
            let s = phi(n).unwrap();
            s.validate().unwrap();
            assert_abs_diff_eq!(
                s.expected_particle_number(&[0, 1]),
                n as f64,
                epsilon = 1e-9
            );
            // Uniform conditional within each sector.
            for k in s.occupied_sectors() {
                let dense = s.dense_sector(k).unwrap();
                for a in dense {
                    assert_abs_diff_eq!(a.re, dense[0].re, epsilon = 1e-15);
                }
            }
        }
        assert_abs_diff_eq!(amp(&phi(0).unwrap(), 0, 0).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn phi_guard_rejects_wide_truncations() {
        assert!(matches!(phi(200), Err(FockcohError::ResourceLimit(_))));
    }

    #[test]
    fn noon_and_pair_correlated_shapes() {
        let s = noon(2).unwrap();
        assert_abs_diff_eq!(amp(&s, 2, 0).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(amp(&s, 0, 2).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(noon(0).is_err());

        // (a1^2 + a2^2)^1: amplitudes on |2,0> and |0,2> equal.
        let pc = pair_correlated(2).unwrap();
        assert_abs_diff_eq!(amp(&pc, 2, 0).re, amp(&pc, 0, 2).re, epsilon = 1e-15);
        assert_abs_diff_eq!(pc.norm_squared(), 1.0, epsilon = 1e-12);
        assert!(pair_correlated(3).is_err());
        pair_correlated(4000).unwrap().validate().unwrap();
    }

    #[test]
    fn hw_coherent_sector_weights_are_poisson() {
        let alpha = Complex64::new(0.9, 0.4);
        let spinor = [
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ];
        let s = hw_coherent(alpha, spinor, 40).unwrap();
        s.validate().unwrap();
        let lambda = alpha.norm_sqr();
        let w = s.sector_weights();
        for n in 0..=8u64 {
            let expect = (-lambda + n as f64 * lambda.ln() - ln_factorial(n)).exp();
            assert_abs_diff_eq!(w[&n], expect, epsilon = 1e-13);
        }
        // Vacuum amplitude real positive by construction.
        assert!(amp(&s, 0, 0).re > 0.0);
        assert_abs_diff_eq!(amp(&s, 0, 0).im, 0.0, epsilon = 1e-15);

        let bad = hw_coherent(alpha, [Complex64::new(0.6, 0.0), Complex64::new(0.7, 0.0)], 40);
        assert!(matches!(bad, Err(FockcohError::InvalidArguments(_))));
        // Too-tight truncation violates the tail budget.
        assert!(matches!(
            hw_coherent(Complex64::new(2.0, 0.0), spinor, 5),
            Err(FockcohError::InvalidArguments(_))
        ));
    }

    #[test]
    fn hom_phi_matches_the_definition() {
        let s = hom_phi(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(amp(&s, 2, 0).re, 1.0, epsilon = 1e-15);
        let s = hom_phi(Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)).unwrap();
        assert_abs_diff_eq!(amp(&s, 1, 1).re, 0.8, epsilon = 1e-15);
        assert!(hom_phi(Complex64::new(0.6, 0.0), Complex64::new(0.9, 0.0)).is_err());
    }

    #[test]
    fn constructors_emit_normalized_states() {
        let states: Vec<FockSpaceState> = vec![
            bec(5, 1).unwrap(),
            bec(2, 3).unwrap(),
            mc(9),
            mc_bosonic_copies(2, 3).unwrap(),
            mc_tilde(6),
            psi(PsiParams { theta: 0.5, m: 4, n: 11 }).unwrap(),
            phi(7).unwrap(),
            noon(5).unwrap(),
            pair_correlated(8).unwrap(),
            hw_coherent(
                Complex64::new(1.1, -0.3),
                [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                 Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)],
                45,
            )
            .unwrap(),
            hom_phi(Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)).unwrap(),
        ];
        for s in &states {
            s.validate().unwrap();
            let nsq = s.norm_squared();
            assert!(nsq <= 1.0 + 1e-12 && nsq >= 1.0 - s.tail_mass_bound() - 1e-12);
        }
    }

    #[test]
    fn named_state_parser_round_trips_key_shapes() {
        let b = parse_named_state("bec(N=2)").unwrap();
        assert_abs_diff_eq!(amp(&b, 1, 1).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert!(parse_named_state("bec(N=2,pairs=2)").unwrap().modes() == 4);
        assert!(parse_named_state("nope(N=2)").is_err());
        assert!(parse_named_state("bec(N=-2)").is_err());
        let h = parse_named_state("hom_phi(c1=0.6)").unwrap();
        assert_abs_diff_eq!(amp(&h, 1, 1).re, 0.8, epsilon = 1e-14);
    }

    #[test]
    fn mc_bosonic_copies_dephases_to_uniform() {
        let s = mc_bosonic_copies(2, 2).unwrap();
        let table = dephase_fock(&s);
        assert_eq!(table.len(), 9);
        for (_, p) in table.iter() {
            assert_abs_diff_eq!(p.to_f64(), 1.0 / 9.0, epsilon = 1e-13);
        }
    }
}
