//! Occupation-number representation of bosonic states and the linear-optical
//! operations on them.
//!
//! States live on `M` modes and are stored per total-particle-number sector.
//! Two-mode sectors are dense vectors indexed by the mode-2 count; sectors on
//! more modes hold a sparse map, since product constructors populate only a
//! vanishing fraction of a large sector. Basis order everywhere is colex:
//! occupation vectors compare by their reversed tuple, so for two modes the
//! sector-N basis reads |N,0>, |N-1,1>, ..., |0,N>.

use crate::coherence::{OutcomeLabel, ProbabilityTable};
use crate::error::{FockcohError, Result};
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::logspace::{ln_factorial, CompensatedSum};
use crate::tolerance;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Particles per mode. Orders by the colex rule (reversed-tuple
/// lexicographic), matching the dense sector layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationVector {
    counts: Vec<u32>,
}

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        assert!(!counts.is_empty(), "occupation vector needs at least one mode");
        OccupationVector { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.counts[mode]
    }

    /// Concatenate with another occupation pattern (appending modes).
    pub fn concat(&self, other: &OccupationVector) -> OccupationVector {
        let mut counts = self.counts.clone();
        counts.extend_from_slice(&other.counts);
        OccupationVector { counts }
    }

    /// Split into (kept, environment) parts given kept mode indices.
    fn split(&self, keep: &[usize]) -> (OccupationVector, Vec<u32>) {
        let kept: Vec<u32> = keep.iter().map(|&i| self.counts[i]).collect();
        let env: Vec<u32> = (0..self.counts.len())
            .filter(|i| !keep.contains(i))
            .map(|i| self.counts[i])
            .collect();
        (OccupationVector::new(kept), env)
    }
}

impl Ord for OccupationVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Colex: compare from the last mode backwards.
        self.counts.iter().rev().cmp(other.counts.iter().rev())
    }
}

impl PartialOrd for OccupationVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        write!(f, "|{}>", parts.join(","))
    }
}

/// Number of occupation vectors on `modes` modes with total `n`:
/// C(n + modes - 1, modes - 1), exact.
pub fn sector_dimension(modes: usize, n: u64) -> BigUint {
    assert!(modes >= 1, "sector_dimension needs at least one mode");
    let m = (modes - 1) as u64;
    // C(n + m, m) by the exact prefix-product rule.
    let mut acc = BigUint::one();
    for i in 1..=m {
        acc = acc * (n + i) / i;
    }
    acc
}

/// `sector_dimension` when it fits in u64; errors against resource guards
/// otherwise.
pub fn sector_dimension_u64(modes: usize, n: u64) -> Result<u64> {
    sector_dimension(modes, n).to_u64().ok_or_else(|| {
        FockcohError::ResourceLimit(format!(
            "sector dimension C({} + {} - 1, {} - 1) exceeds u64",
            n, modes, modes
        ))
    })
}

/// All occupation vectors of the (modes, n) sector in colex order.
pub fn enumerate_sector(modes: usize, n: u64) -> Vec<OccupationVector> {
    fn rec(modes: usize, n: u64, out: &mut Vec<Vec<u32>>) {
        if modes == 1 {
            out.push(vec![n as u32]);
            return;
        }
        // Colex ascends in the last mode first.
        for last in 0..=n {
            let mut inner = Vec::new();
            rec(modes - 1, n - last, &mut inner);
            for mut v in inner {
                v.push(last as u32);
                out.push(v);
            }
        }
    }
    // The recursion above ascends in the last mode as its outermost loop,
    // which is exactly colex order; inner modes are ordered recursively.
    let mut raw = Vec::new();
    rec(modes, n, &mut raw);
    raw.into_iter().map(OccupationVector::new).collect()
}

/// Colex rank of an occupation vector within its own (modes, total) sector.
pub fn colex_rank(occ: &OccupationVector) -> usize {
    // rank = sum over j >= 2 of C(p_j + j - 1, j - 1) - C(p_{j-1} + j - 1, j - 1)
    // with p_j the occupation prefix sum over modes 1..=j.
    let mut rank = BigUint::zero();
    let mut prefix: u64 = u64::from(occ.counts[0]);
    for j in 2..=occ.modes() {
        let prev = prefix;
        prefix += u64::from(occ.counts[j - 1]);
        let hi = binomial_biguint(prefix + j as u64 - 1, j as u64 - 1);
        let lo = binomial_biguint(prev + j as u64 - 1, j as u64 - 1);
        rank += hi - lo;
    }
    rank.to_usize().expect("colex rank exceeds usize; sector too large to index")
}

fn binomial_biguint(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k.min(n));
    let kk = if 2 * k > n { n - k } else { k };
    let mut acc = BigUint::one();
    for i in 1..=kk {
        acc = acc * (n - kk + i) / i;
    }
    acc
}

/// Amplitudes of one total-number sector.
#[derive(Debug, Clone)]
pub enum SectorAmplitudes {
    /// Full vector in colex order; the only layout used for two modes.
    Dense(Vec<Complex64>),
    /// Occupation-keyed map for multimode sectors that product constructors
    /// populate sparsely.
    Sparse(BTreeMap<OccupationVector, Complex64>),
}

impl SectorAmplitudes {
    fn norm_squared(&self) -> f64 {
        let mut s = CompensatedSum::new();
        match self {
            SectorAmplitudes::Dense(v) => {
                for z in v {
                    s.add(z.norm_sqr());
                }
            }
            SectorAmplitudes::Sparse(m) => {
                for z in m.values() {
                    s.add(z.norm_sqr());
                }
            }
        }
        s.value()
    }

    fn nonzero_count(&self) -> usize {
        match self {
            SectorAmplitudes::Dense(v) => v.iter().filter(|z| z.norm_sqr() > 0.0).count(),
            SectorAmplitudes::Sparse(m) => m.len(),
        }
    }
}

/// Pure state on `modes` modes, truncated to total number <= `truncation`.
///
/// `tail_mass_bound` is an analytic bound on the probability mass removed by
/// the truncation; constructed named states keep it below
/// [`tolerance::TAIL_MASS_BOUND`], so the squared norm lies in
/// `[1 - tail_mass_bound, 1]`.
#[derive(Debug, Clone)]
pub struct FockSpaceState {
    modes: usize,
    sectors: BTreeMap<u64, SectorAmplitudes>,
    truncation: u64,
    tail_mass_bound: f64,
}

impl FockSpaceState {
    /// Two-mode state from dense per-sector vectors.
    pub fn from_dense_two_mode(
        sectors: BTreeMap<u64, Vec<Complex64>>,
        tail_mass_bound: f64,
    ) -> Self {
        let truncation = sectors.keys().next_back().copied().unwrap_or(0);
        for (&n, v) in &sectors {
            assert_eq!(
                v.len() as u64,
                n + 1,
                "two-mode sector {n} must have {} amplitudes",
                n + 1
            );
        }
        FockSpaceState {
            modes: 2,
            sectors: sectors
                .into_iter()
                .map(|(n, v)| (n, SectorAmplitudes::Dense(v)))
                .collect(),
            truncation,
            tail_mass_bound,
        }
    }

    /// State from explicit components; stores densely for two modes and
    /// sparsely otherwise.
    pub fn from_components<I>(modes: usize, components: I, tail_mass_bound: f64) -> Self
    where
        I: IntoIterator<Item = (OccupationVector, Complex64)>,
    {
        let mut by_sector: BTreeMap<u64, BTreeMap<OccupationVector, Complex64>> = BTreeMap::new();
        for (occ, amp) in components {
            assert_eq!(occ.modes(), modes, "component mode count mismatch");
            *by_sector
                .entry(occ.total())
                .or_default()
                .entry(occ)
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let truncation = by_sector.keys().next_back().copied().unwrap_or(0);
        let sectors = by_sector
            .into_iter()
            .map(|(n, map)| {
                if modes == 2 {
                    let mut dense = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
                    for (occ, amp) in map {
                        dense[occ.get(1) as usize] = amp;
                    }
                    (n, SectorAmplitudes::Dense(dense))
                } else {
                    (n, SectorAmplitudes::Sparse(map))
                }
            })
            .collect();
        FockSpaceState { modes, sectors, truncation, tail_mass_bound }
    }

    /// Single Fock basis state |occ>.
    pub fn basis_state(occ: OccupationVector) -> Self {
        let modes = occ.modes();
        Self::from_components(modes, [(occ, Complex64::new(1.0, 0.0))], 0.0)
    }

    /// Vacuum on `modes` modes.
    pub fn vacuum(modes: usize) -> Self {
        Self::basis_state(OccupationVector::new(vec![0; modes]))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    pub fn occupied_sectors(&self) -> impl Iterator<Item = u64> + '_ {
        self.sectors.keys().copied()
    }

    pub fn sector(&self, n: u64) -> Option<&SectorAmplitudes> {
        self.sectors.get(&n)
    }

    /// Dense two-mode sector amplitudes (mode-2 count ascending).
    pub fn dense_sector(&self, n: u64) -> Option<&[Complex64]> {
        match self.sectors.get(&n) {
            Some(SectorAmplitudes::Dense(v)) => Some(v),
            _ => None,
        }
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        assert_eq!(occ.modes(), self.modes);
        match self.sectors.get(&occ.total()) {
            None => Complex64::new(0.0, 0.0),
            Some(SectorAmplitudes::Dense(v)) => {
                if self.modes == 2 {
                    v[occ.get(1) as usize]
                } else {
                    v[colex_rank(occ)]
                }
            }
            Some(SectorAmplitudes::Sparse(m)) => {
                m.get(occ).copied().unwrap_or(Complex64::new(0.0, 0.0))
            }
        }
    }

    /// Iterate all stored components as (occupation, amplitude). Dense
    /// sectors yield every basis vector including exact zeros.
    pub fn components(&self) -> impl Iterator<Item = (OccupationVector, Complex64)> + '_ {
        self.sectors.iter().flat_map(move |(&n, sec)| {
            let items: Vec<(OccupationVector, Complex64)> = match sec {
                SectorAmplitudes::Dense(v) => {
                    if self.modes == 2 {
                        v.iter()
                            .enumerate()
                            .map(|(k, &amp)| {
                                (
                                    OccupationVector::new(vec![
                                        (n - k as u64) as u32,
                                        k as u32,
                                    ]),
                                    amp,
                                )
                            })
                            .collect()
                    } else {
                        enumerate_sector(self.modes, n)
                            .into_iter()
                            .zip(v.iter().copied())
                            .collect()
                    }
                }
                SectorAmplitudes::Sparse(m) => {
                    m.iter().map(|(occ, &amp)| (occ.clone(), amp)).collect()
                }
            };
            items
        })
    }

    pub fn norm_squared(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for sec in self.sectors.values() {
            s.add(sec.norm_squared());
        }
        s.value()
    }

    pub fn nonzero_components(&self) -> usize {
        self.sectors.values().map(|s| s.nonzero_count()).sum()
    }

    /// Probability carried by the total-number-`n` sector.
    pub fn sector_weight(&self, n: u64) -> f64 {
        self.sectors.get(&n).map_or(0.0, |s| s.norm_squared())
    }

    pub fn sector_weights(&self) -> BTreeMap<u64, f64> {
        self.sectors.iter().map(|(&n, s)| (n, s.norm_squared())).collect()
    }

    /// The sector index when exactly one sector is occupied.
    pub fn single_sector(&self) -> Option<u64> {
        if self.sectors.len() == 1 {
            self.sectors.keys().next().copied()
        } else {
            None
        }
    }

    /// Check the normalization invariant.
    pub fn validate(&self) -> Result<()> {
        let nsq = self.norm_squared();
        let lo = 1.0 - self.tail_mass_bound - tolerance::NORM_TOL;
        let hi = 1.0 + tolerance::NORM_TOL;
        if nsq < lo || nsq > hi {
            return Err(FockcohError::Internal(format!(
                "state norm^2 = {nsq:.15} outside [{lo:.15}, {hi:.15}]"
            )));
        }
        Ok(())
    }

    /// Sum over basis states of |amplitude|^2 times the particle count in
    /// `mode_subset`. An empty subset gives 0.
    pub fn expected_particle_number(&self, mode_subset: &[usize]) -> f64 {
        for &m in mode_subset {
            assert!(m < self.modes, "mode index {m} out of range");
        }
        let mut s = CompensatedSum::new();
        for (occ, amp) in self.components() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let count: u64 = mode_subset.iter().map(|&i| u64::from(occ.get(i))).sum();
            s.add(p * count as f64);
        }
        s.value()
    }

    /// Tensor product: `self` on its modes followed by `other`'s modes.
    pub fn tensor(&self, other: &FockSpaceState) -> FockSpaceState {
        let mut components = Vec::new();
        for (occ_a, amp_a) in self.components() {
            if amp_a.norm_sqr() == 0.0 {
                continue;
            }
            for (occ_b, amp_b) in other.components() {
                if amp_b.norm_sqr() == 0.0 {
                    continue;
                }
                components.push((occ_a.concat(&occ_b), amp_a * amp_b));
            }
        }
        let tail = self.tail_mass_bound + other.tail_mass_bound;
        FockSpaceState::from_components(self.modes + other.modes, components, tail)
    }

    /// Rotate the global phase so the first nonzero amplitude in
    /// (sector, colex) order is real positive.
    pub fn canonicalize_phase(mut self) -> Self {
        let mut phase: Option<Complex64> = None;
        'outer: for (_, sec) in self.sectors.iter() {
            match sec {
                SectorAmplitudes::Dense(v) => {
                    for z in v {
                        if z.norm() > 0.0 {
                            phase = Some(z.conj() / z.norm());
                            break 'outer;
                        }
                    }
                }
                SectorAmplitudes::Sparse(m) => {
                    for z in m.values() {
                        if z.norm() > 0.0 {
                            phase = Some(z.conj() / z.norm());
                            break 'outer;
                        }
                    }
                }
            }
        }
        if let Some(ph) = phase {
            if (ph - Complex64::new(1.0, 0.0)).norm() > 0.0 {
                for sec in self.sectors.values_mut() {
                    match sec {
                        SectorAmplitudes::Dense(v) => {
                            for z in v.iter_mut() {
                                *z *= ph;
                            }
                        }
                        SectorAmplitudes::Sparse(m) => {
                            for z in m.values_mut() {
                                *z *= ph;
                            }
                        }
                    }
                }
            }
        }
        self
    }

    /// Serializable dense form; guarded because multimode sectors can have
    /// astronomically more basis vectors than stored components.
    pub fn to_schema(&self) -> Result<StateSchema> {
        let mut sectors = Vec::new();
        for (&n, sec) in &self.sectors {
            let dim = sector_dimension(self.modes, n);
            if dim > BigUint::from(tolerance::MATERIALIZATION_GUARD) {
                return Err(FockcohError::ResourceLimit(format!(
                    "dense serialization of sector {n} needs {dim} amplitudes \
                     (guard {})",
                    tolerance::MATERIALIZATION_GUARD
                )));
            }
            let dim = dim.to_usize().expect("guarded dimension fits usize");
            let amplitudes: Vec<[f64; 2]> = match sec {
                SectorAmplitudes::Dense(v) => v.iter().map(|z| [z.re, z.im]).collect(),
                SectorAmplitudes::Sparse(m) => {
                    let mut dense = vec![[0.0, 0.0]; dim];
                    for (occ, z) in m {
                        dense[colex_rank(occ)] = [z.re, z.im];
                    }
                    dense
                }
            };
            sectors.push(SectorSchema { n, amplitudes });
        }
        Ok(StateSchema {
            modes: self.modes,
            sectors,
            truncation: self.truncation,
            tail_mass_bound: self.tail_mass_bound,
        })
    }

    pub fn from_schema(schema: &StateSchema) -> Result<FockSpaceState> {
        if schema.modes < 1 {
            return Err(FockcohError::InvalidArguments("modes must be >= 1".into()));
        }
        let mut sectors: BTreeMap<u64, SectorAmplitudes> = BTreeMap::new();
        for sec in &schema.sectors {
            let dim = sector_dimension_u64(schema.modes, sec.n)?;
            if sec.amplitudes.len() as u64 != dim {
                return Err(FockcohError::InvalidArguments(format!(
                    "sector {} expects {dim} amplitudes, got {}",
                    sec.n,
                    sec.amplitudes.len()
                )));
            }
            let amps: Vec<Complex64> =
                sec.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            if schema.modes == 2 {
                sectors.insert(sec.n, SectorAmplitudes::Dense(amps));
            } else {
                let basis = enumerate_sector(schema.modes, sec.n);
                let map: BTreeMap<OccupationVector, Complex64> = basis
                    .into_iter()
                    .zip(amps)
                    .filter(|(_, z)| z.norm_sqr() > 0.0)
                    .collect();
                sectors.insert(sec.n, SectorAmplitudes::Sparse(map));
            }
        }
        Ok(FockSpaceState {
            modes: schema.modes,
            sectors,
            truncation: schema.truncation,
            tail_mass_bound: schema.tail_mass_bound,
        })
    }
}

/// JSON layout for states: amplitudes are `[re, im]` pairs in colex order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSchema {
    pub modes: usize,
    pub sectors: Vec<SectorSchema>,
    pub truncation: u64,
    pub tail_mass_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorSchema {
    #[serde(rename = "N")]
    pub n: u64,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Matrix of the beamsplitter exp[i theta (e^{i phase} a_i^dag a_j +
/// e^{-i phase} a_j^dag a_i)] restricted to the two-mode sector with
/// `s` particles, in the basis indexed by the mode-j count.
///
/// Built exactly by transforming creation-operator monomials
/// b_i^dag = cos(theta) a_i^dag + i e^{-i phase} sin(theta) a_j^dag,
/// b_j^dag = cos(theta) a_j^dag + i e^{+i phase} sin(theta) a_i^dag
/// and re-expanding, which agrees with the dense matrix exponential of the
/// sector generator (pinned by an oracle test).
pub fn beamsplitter_sector_matrix(s: u64, theta: f64, phase: f64) -> CMat {
    let dim = (s + 1) as usize;
    let cos = theta.cos();
    let isin = Complex64::new(0.0, 1.0) * theta.sin();
    let ei = Complex64::from_polar(1.0, phase);
    let ci = isin * ei.conj(); // coefficient of a_j in b_i
    let cj = isin * ei; // coefficient of a_i in b_j
    let mut m = CMat::zeros(dim);
    for k in 0..=s {
        // Column k: expand b_i^(s-k) b_j^k over a_i^(s-l) a_j^l.
        let ln_norm_in = 0.5 * (ln_factorial(s - k) + ln_factorial(k));
        for p in 0..=(s - k) {
            for q in 0..=k {
                let l = (s - k - p) + q;
                let coeff = pow_f64(cos, p + q)
                    * pow_c(ci, s - k - p)
                    * pow_c(cj, k - q)
                    * binom_f64(s - k, p)
                    * binom_f64(k, q);
                let ln_norm_out = 0.5 * (ln_factorial(s - l) + ln_factorial(l));
                let elem = coeff * (ln_norm_out - ln_norm_in).exp();
                m.add_assign_at(l as usize, k as usize, elem);
            }
        }
    }
    m
}

fn pow_f64(x: f64, k: u64) -> f64 {
    x.powi(k as i32)
}

fn pow_c(z: Complex64, k: u64) -> Complex64 {
    z.powu(k as u32)
}

fn binom_f64(n: u64, k: u64) -> f64 {
    crate::logspace::ln_binomial(n, k).exp()
}

/// Apply a beamsplitter between modes `i` and `j`. Number conserving and
/// unitary per sector; all other mode occupations pass through untouched.
pub fn apply_beamsplitter(
    state: &FockSpaceState,
    i: usize,
    j: usize,
    theta: f64,
    phase: f64,
) -> Result<FockSpaceState> {
    apply_pair_sector_matrices(state, i, j, |s| beamsplitter_sector_matrix(s, theta, phase))
}

/// Shared engine for number-conserving actions on one mode pair: components
/// are routed through per-pair-sector matrices (cached by pair particle
/// count), every other mode passing through untouched.
fn apply_pair_sector_matrices<F>(
    state: &FockSpaceState,
    i: usize,
    j: usize,
    mut sector_matrix: F,
) -> Result<FockSpaceState>
where
    F: FnMut(u64) -> CMat,
{
    let modes = state.modes();
    if i == j {
        return Err(FockcohError::InvalidArguments(
            "pair operations need two distinct modes".into(),
        ));
    }
    if i >= modes || j >= modes {
        return Err(FockcohError::InvalidArguments(format!(
            "mode indices ({i}, {j}) out of range for {modes} modes"
        )));
    }

    let mut matrices: BTreeMap<u64, CMat> = BTreeMap::new();
    let mut components = Vec::new();
    for (occ, amp) in state.components() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let s = u64::from(occ.get(i)) + u64::from(occ.get(j));
        let k_in = u64::from(occ.get(j));
        let mat = matrices.entry(s).or_insert_with(|| sector_matrix(s));
        for l in 0..=s {
            let elem = mat.get(l as usize, k_in as usize);
            if elem.norm_sqr() == 0.0 {
                continue;
            }
            let mut counts = occ.counts().to_vec();
            counts[i] = (s - l) as u32;
            counts[j] = l as u32;
            components.push((OccupationVector::new(counts), amp * elem));
        }
    }
    Ok(FockSpaceState::from_components(
        modes,
        components,
        state.tail_mass_bound(),
    ))
}

/// Swap the occupations of two modes.
pub fn swap_modes(state: &FockSpaceState, i: usize, j: usize) -> Result<FockSpaceState> {
    let modes = state.modes();
    if i >= modes || j >= modes {
        return Err(FockcohError::InvalidArguments(format!(
            "mode indices ({i}, {j}) out of range for {modes} modes"
        )));
    }
    let components = state.components().filter(|(_, a)| a.norm_sqr() > 0.0).map(
        move |(occ, amp)| {
            let mut counts = occ.counts().to_vec();
            counts.swap(i, j);
            (OccupationVector::new(counts), amp)
        },
    );
    Ok(FockSpaceState::from_components(
        modes,
        components,
        state.tail_mass_bound(),
    ))
}

/// A 2x2 mode unitary lifted sector-wise to two-mode Fock space.
#[derive(Debug, Clone)]
pub struct TwoModeUnitary {
    u: [[Complex64; 2]; 2],
}

impl TwoModeUnitary {
    pub fn identity() -> Self {
        TwoModeUnitary {
            u: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ],
        }
    }

    pub fn from_matrix(u: [[Complex64; 2]; 2]) -> Self {
        TwoModeUnitary { u }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.u
    }

    /// Sector-`s` matrix: column k is the expansion of
    /// b_1^(s-k) b_2^k |vac> / sqrt((s-k)! k!) with
    /// b_1 = u11 a_1 + u21 a_2, b_2 = u12 a_1 + u22 a_2 (creation operators).
    pub fn sector_matrix(&self, s: u64) -> CMat {
        let dim = (s + 1) as usize;
        let mut m = CMat::zeros(dim);
        let [[u11, u12], [u21, u22]] = self.u;
        for k in 0..=s {
            let ln_norm_in = 0.5 * (ln_factorial(s - k) + ln_factorial(k));
            for p in 0..=(s - k) {
                for q in 0..=k {
                    // a_1 power: p + (k - q); a_2 power: (s - k - p) + q.
                    let l = (s - k - p) + q;
                    let coeff = pow_c(u11, p)
                        * pow_c(u21, s - k - p)
                        * pow_c(u12, k - q)
                        * pow_c(u22, q)
                        * binom_f64(s - k, p)
                        * binom_f64(k, q);
                    let ln_norm_out = 0.5 * (ln_factorial(s - l) + ln_factorial(l));
                    m.add_assign_at(
                        l as usize,
                        k as usize,
                        coeff * (ln_norm_out - ln_norm_in).exp(),
                    );
                }
            }
        }
        m
    }

    pub fn apply(&self, state: &FockSpaceState) -> Result<FockSpaceState> {
        if state.modes() != 2 {
            return Err(FockcohError::InvalidArguments(
                "two-mode unitary applied to a state with a different mode count".into(),
            ));
        }
        let mut sectors = BTreeMap::new();
        for n in state.occupied_sectors() {
            let dense = state
                .dense_sector(n)
                .expect("two-mode states store dense sectors");
            let out = self.sector_matrix(n).matvec(dense);
            sectors.insert(n, out);
        }
        Ok(FockSpaceState::from_dense_two_mode(
            sectors,
            state.tail_mass_bound(),
        ))
    }

    /// Apply the lifted unitary to modes `i` and `j` of a multimode state,
    /// leaving every other mode untouched.
    pub fn apply_on_modes(
        &self,
        state: &FockSpaceState,
        i: usize,
        j: usize,
    ) -> Result<FockSpaceState> {
        apply_pair_sector_matrices(state, i, j, |s| self.sector_matrix(s))
    }
}

/// Haar-random U(2) element, deterministic in `seed`, lifted sector-wise.
///
/// Sampling: QR of a complex Ginibre matrix via Gram-Schmidt; forcing the
/// R diagonal positive makes the factor Haar distributed.
pub fn random_number_conserving_unitary(seed: u64) -> TwoModeUnitary {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for row in &mut g {
        for z in row.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(re, im);
        }
    }
    // Gram-Schmidt on columns.
    let n0 = (g[0][0].norm_sqr() + g[1][0].norm_sqr()).sqrt();
    let q0 = [g[0][0] / n0, g[1][0] / n0];
    let proj = q0[0].conj() * g[0][1] + q0[1].conj() * g[1][1];
    let w = [g[0][1] - proj * q0[0], g[1][1] - proj * q0[1]];
    let n1 = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    let q1 = [w[0] / n1, w[1] / n1];
    TwoModeUnitary::from_matrix([[q0[0], q1[0]], [q0[1], q1[1]]])
}

/// Density operator over an explicit occupation basis, grouped by total
/// particle number but permitted to carry cross-sector coherences (needed
/// for reductions of indefinite-number states).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    modes: usize,
    basis: Vec<OccupationVector>,
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(modes: usize, basis: Vec<OccupationVector>, mat: CMat) -> Self {
        assert_eq!(basis.len(), mat.dim(), "basis/matrix dimension mismatch");
        let mut sorted = basis.clone();
        sorted.sort_by(|a, b| (a.total(), a.clone()).cmp(&(b.total(), b.clone())));
        assert_eq!(sorted, basis, "density matrix basis must be (sector, colex) sorted");
        DensityMatrix { modes, basis, mat }
    }

    /// Projector |psi><psi| over the state's nonzero components.
    pub fn from_pure(state: &FockSpaceState) -> Result<Self> {
        let mut comps: Vec<(OccupationVector, Complex64)> = state
            .components()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .collect();
        if comps.len() as u64 > 4096 {
            return Err(FockcohError::ResourceLimit(format!(
                "dense density matrix over {} basis states",
                comps.len()
            )));
        }
        comps.sort_by(|a, b| (a.0.total(), a.0.clone()).cmp(&(b.0.total(), b.0.clone())));
        let dim = comps.len();
        let mut mat = CMat::zeros(dim);
        for (r, (_, zr)) in comps.iter().enumerate() {
            for (c, (_, zc)) in comps.iter().enumerate() {
                mat.set(r, c, zr * zc.conj());
            }
        }
        Ok(DensityMatrix {
            modes: state.modes(),
            basis: comps.into_iter().map(|(occ, _)| occ).collect(),
            mat,
        })
    }

    /// Convex mixture of density matrices over merged bases. Weights must
    /// be nonnegative and sum to 1 within 1e-9.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (first_weight, first) = parts
            .first()
            .ok_or_else(|| FockcohError::InvalidArguments("empty mixture".into()))?;
        let modes = first.modes;
        let mut total = *first_weight;
        let mut basis: BTreeSet<(u64, OccupationVector)> = BTreeSet::new();
        for (w, part) in parts {
            if part.modes != modes {
                return Err(FockcohError::InvalidArguments(
                    "mixture parts must share the mode count".into(),
                ));
            }
            if *w < 0.0 {
                return Err(FockcohError::InvalidArguments(format!(
                    "negative mixture weight {w}"
                )));
            }
            for occ in &part.basis {
                basis.insert((occ.total(), occ.clone()));
            }
        }
        total += parts[1..].iter().map(|(w, _)| w).sum::<f64>();
        if (total - 1.0).abs() > 1e-9 {
            return Err(FockcohError::InvalidArguments(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let basis: Vec<OccupationVector> = basis.into_iter().map(|(_, occ)| occ).collect();
        let index: BTreeMap<&OccupationVector, usize> =
            basis.iter().enumerate().map(|(i, occ)| (occ, i)).collect();
        let mut mat = CMat::zeros(basis.len());
        for (w, part) in parts {
            for (r, occ_r) in part.basis.iter().enumerate() {
                for (c, occ_c) in part.basis.iter().enumerate() {
                    let z = part.mat.get(r, c);
                    if z.norm_sqr() > 0.0 {
                        mat.add_assign_at(index[occ_r], index[occ_c], z * *w);
                    }
                }
            }
        }
        Ok(DensityMatrix { modes, basis, mat })
    }

    /// Diagonal part in the occupation basis.
    pub fn dephased(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut mat = CMat::zeros(dim);
        for i in 0..dim {
            mat.set(i, i, Complex64::new(self.mat.get(i, i).re, 0.0));
        }
        DensityMatrix {
            modes: self.modes,
            basis: self.basis.clone(),
            mat,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[OccupationVector] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Occupied sectors with their traces.
    pub fn sector_weights(&self) -> BTreeMap<u64, f64> {
        let mut w: BTreeMap<u64, f64> = BTreeMap::new();
        for (i, occ) in self.basis.iter().enumerate() {
            *w.entry(occ.total()).or_insert(0.0) += self.mat.get(i, i).re;
        }
        w
    }

    /// Basis range of one total-number sector.
    fn sector_range(&self, n: u64) -> Option<std::ops::Range<usize>> {
        let start = self.basis.partition_point(|occ| occ.total() < n);
        let end = self.basis.partition_point(|occ| occ.total() <= n);
        if start == end {
            None
        } else {
            Some(start..end)
        }
    }

    /// Normalized sector-conditional block Q_N rho Q_N / tr(Q_N rho),
    /// with its basis labels and original weight.
    pub fn sector_conditional(&self, n: u64) -> Result<(Vec<OccupationVector>, CMat, f64)> {
        let range = self.sector_range(n).ok_or(FockcohError::UndefinedSector {
            sector: n,
            weight: 0.0,
        })?;
        let labels: Vec<OccupationVector> = self.basis[range.clone()].to_vec();
        let dim = range.len();
        let mut block = CMat::zeros(dim);
        let mut tr = 0.0;
        for (bi, i) in range.clone().enumerate() {
            tr += self.mat.get(i, i).re;
            for (bj, j) in range.clone().enumerate() {
                block.set(bi, bj, self.mat.get(i, j));
            }
        }
        if tr <= tolerance::SECTOR_WEIGHT_FLOOR {
            return Err(FockcohError::UndefinedSector { sector: n, weight: tr });
        }
        let scale = Complex64::new(1.0 / tr, 0.0);
        Ok((labels, block.scale(scale), tr))
    }

    /// Largest magnitude among entries coupling different sectors.
    pub fn max_cross_sector_entry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if self.basis[i].total() != self.basis[j].total() {
                    m = m.max(self.mat.get(i, j).norm());
                }
            }
        }
        m
    }

    /// Largest magnitude among all off-diagonal entries.
    pub fn max_offdiag(&self) -> f64 {
        self.mat.max_abs_offdiag()
    }

    /// Trace, Hermiticity, and PSD checks at the crate tolerances.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > tolerance::NORM_TOL {
            return Err(FockcohError::Internal(format!(
                "density matrix trace {tr:.15} deviates from 1"
            )));
        }
        let defect = self.mat.hermiticity_defect();
        if defect > tolerance::BLOCK_EQ_TOL {
            return Err(FockcohError::Internal(format!(
                "hermiticity defect {defect:.3e}"
            )));
        }
        let eigs = hermitian_eigenvalues(&self.mat);
        if let Some(&min) = eigs.first() {
            if min < -tolerance::PSD_TOL {
                return Err(FockcohError::Internal(format!(
                    "matrix has eigenvalue {min:.3e} below the PSD tolerance"
                )));
            }
        }
        Ok(())
    }

    pub fn to_schema(&self) -> DensitySchema {
        DensitySchema {
            modes: self.modes,
            basis: self.basis.iter().map(|occ| occ.counts().to_vec()).collect(),
            matrix: (0..self.dim())
                .map(|i| {
                    (0..self.dim())
                        .map(|j| {
                            let z = self.mat.get(i, j);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_schema(schema: &DensitySchema) -> Result<Self> {
        let dim = schema.basis.len();
        if schema.matrix.len() != dim || schema.matrix.iter().any(|r| r.len() != dim) {
            return Err(FockcohError::InvalidArguments(
                "density matrix rows must match the basis length".into(),
            ));
        }
        let basis: Vec<OccupationVector> = schema
            .basis
            .iter()
            .map(|counts| OccupationVector::new(counts.clone()))
            .collect();
        let mut mat = CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let [re, im] = schema.matrix[i][j];
                mat.set(i, j, Complex64::new(re, im));
            }
        }
        Ok(DensityMatrix::new(schema.modes, basis, mat))
    }
}

/// JSON layout for density matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySchema {
    pub modes: usize,
    pub basis: Vec<Vec<u32>>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// Either input accepted by the channel-level operations.
pub enum StateOrDensity<'a> {
    Pure(&'a FockSpaceState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a FockSpaceState> for StateOrDensity<'a> {
    fn from(s: &'a FockSpaceState) -> Self {
        StateOrDensity::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateOrDensity<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        StateOrDensity::Mixed(r)
    }
}

/// Trace out every mode not in `keep`.
///
/// For pure inputs the reduction is assembled from components grouped by
/// the traced-out (environment) pattern, so cross-sector coherences of the
/// kept modes survive exactly when no environment pattern distinguishes
/// them.
pub fn partial_trace<'a, S>(input: S, keep: &[usize]) -> Result<DensityMatrix>
where
    S: Into<StateOrDensity<'a>>,
{
    let input = input.into();
    let modes = match &input {
        StateOrDensity::Pure(s) => s.modes(),
        StateOrDensity::Mixed(r) => r.modes(),
    };
    if keep.is_empty() {
        return Err(FockcohError::InvalidArguments(
            "partial trace must keep at least one mode".into(),
        ));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(FockcohError::InvalidArguments(
            "kept modes contain duplicates".into(),
        ));
    }
    if let Some(&max) = keep_sorted.last() {
        if max >= modes {
            return Err(FockcohError::InvalidArguments(format!(
                "kept mode {max} out of range for {modes} modes"
            )));
        }
    }

    let mut entries: BTreeMap<(OccupationVector, OccupationVector), Complex64> = BTreeMap::new();
    match input {
        StateOrDensity::Pure(state) => {
            // Group components by environment pattern, then outer-product.
            let mut by_env: BTreeMap<Vec<u32>, Vec<(OccupationVector, Complex64)>> =
                BTreeMap::new();
            for (occ, amp) in state.components() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let (kept, env) = occ.split(&keep_sorted);
                by_env.entry(env).or_default().push((kept, amp));
            }
            for group in by_env.values() {
                for (occ_r, zr) in group {
                    for (occ_c, zc) in group {
                        *entries
                            .entry((occ_r.clone(), occ_c.clone()))
                            .or_insert(Complex64::new(0.0, 0.0)) += zr * zc.conj();
                    }
                }
            }
        }
        StateOrDensity::Mixed(rho) => {
            for i in 0..rho.dim() {
                let (kept_i, env_i) = rho.basis()[i].split(&keep_sorted);
                for j in 0..rho.dim() {
                    let z = rho.matrix().get(i, j);
                    if z.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (kept_j, env_j) = rho.basis()[j].split(&keep_sorted);
                    if env_i == env_j {
                        *entries
                            .entry((kept_i.clone(), kept_j))
                            .or_insert(Complex64::new(0.0, 0.0)) += z;
                    }
                }
            }
        }
    }

    let mut basis: Vec<OccupationVector> = entries
        .keys()
        .map(|(r, _)| r.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    basis.sort_by(|a, b| (a.total(), a.clone()).cmp(&(b.total(), b.clone())));
    let index: BTreeMap<&OccupationVector, usize> =
        basis.iter().enumerate().map(|(i, occ)| (occ, i)).collect();
    let mut mat = CMat::zeros(basis.len());
    for ((r, c), z) in &entries {
        mat.set(index[r], index[c], *z);
    }
    Ok(DensityMatrix::new(keep_sorted.len().max(1), basis, mat))
}

/// Fully dephase in the Fock basis: the diagonal as a distribution over
/// occupation vectors.
pub fn dephase_fock<'a, S>(input: S) -> ProbabilityTable
where
    S: Into<StateOrDensity<'a>>,
{
    match input.into() {
        StateOrDensity::Pure(state) => {
            let weights = state
                .components()
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .map(|(occ, z)| (OutcomeLabel::Occupation(occ), z.norm_sqr()));
            ProbabilityTable::from_weights(weights)
        }
        StateOrDensity::Mixed(rho) => {
            let weights = (0..rho.dim()).filter_map(|i| {
                let p = rho.matrix().get(i, i).re;
                if p > 0.0 {
                    Some((OutcomeLabel::Occupation(rho.basis()[i].clone()), p))
                } else {
                    None
                }
            });
            ProbabilityTable::from_weights(weights)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sector_dimension_matches_stars_and_bars() {
        assert_eq!(sector_dimension(2, 0), BigUint::from(1u32));
        assert_eq!(sector_dimension(2, 3), BigUint::from(4u32));
        assert_eq!(sector_dimension(3, 4), BigUint::from(15u32));
        // Brute force for a few (modes, n) pairs.
        for modes in 1..=4usize {
            for n in 0..=6u64 {
                let listed = enumerate_sector(modes, n).len() as u64;
                assert_eq!(
                    sector_dimension(modes, n),
                    BigUint::from(listed),
                    "modes={modes}, n={n}"
                );
            }
        }
    }

    #[test]
    fn colex_rank_agrees_with_enumeration_order() {
        for modes in 2..=4usize {
            for n in 0..=5u64 {
                for (idx, occ) in enumerate_sector(modes, n).iter().enumerate() {
                    assert_eq!(colex_rank(occ), idx, "modes={modes} n={n} occ={occ}");
                }
            }
        }
    }

    #[test]
    fn occupation_ordering_is_colex() {
        let a = OccupationVector::new(vec![2, 0]);
        let b = OccupationVector::new(vec![1, 1]);
        let c = OccupationVector::new(vec![0, 2]);
        assert!(a < b && b < c);
    }

    #[test]
    fn expected_particle_number_handles_subsets() {
        let one_one = FockSpaceState::basis_state(OccupationVector::new(vec![1, 1]));
        assert_abs_diff_eq!(one_one.expected_particle_number(&[0, 1]), 2.0);
        assert_abs_diff_eq!(one_one.expected_particle_number(&[0]), 1.0);
        assert_abs_diff_eq!(one_one.expected_particle_number(&[]), 0.0);
    }

    #[test]
    fn beamsplitter_preserves_vacuum_and_shows_two_photon_interference() {
        let vac = FockSpaceState::vacuum(2);
        let out = apply_beamsplitter(&vac, 0, 1, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::new(vec![0, 0])).re,
            1.0,
            epsilon = 1e-14
        );

        // One photon in each arm of a balanced splitter: the coincidence
        // amplitude |1,1> cancels exactly.
        let input = FockSpaceState::basis_state(OccupationVector::new(vec![1, 1]));
        let out = apply_beamsplitter(&input, 0, 1, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        assert!(out.amplitude(&OccupationVector::new(vec![1, 1])).norm() < 1e-14);
        assert_abs_diff_eq!(out.norm_squared(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            out.amplitude(&OccupationVector::new(vec![2, 0])).norm_sqr(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn beamsplitter_rejects_equal_modes() {
        let vac = FockSpaceState::vacuum(2);
        assert!(matches!(
            apply_beamsplitter(&vac, 1, 1, 0.3, 0.0),
            Err(FockcohError::InvalidArguments(_))
        ));
    }

    #[test]
    fn beamsplitter_sector_matrices_are_unitary() {
        for &(s, theta, phase) in
            &[(1u64, 0.3, 0.0), (3, 0.77, 1.1), (5, 1.2, -0.4), (8, 0.05, 2.9)]
        {
            let m = beamsplitter_sector_matrix(s, theta, phase);
            let gram = m.adjoint().matmul(&m);
            let defect = gram.sub(&CMat::identity((s + 1) as usize)).frobenius_norm();
            assert!(defect < 1e-12, "s={s}: unitarity defect {defect}");
        }
    }

    #[test]
    fn haar_unitary_is_unitary_and_seed_deterministic() {
        let u = random_number_conserving_unitary(42);
        let m = u.sector_matrix(4);
        let defect = m.adjoint().matmul(&m).sub(&CMat::identity(5)).frobenius_norm();
        assert!(defect < 1e-12);

        let u2 = random_number_conserving_unitary(42);
        assert_eq!(u.matrix(), u2.matrix());
        let u3 = random_number_conserving_unitary(43);
        assert!(u.matrix() != u3.matrix(), "different seeds must differ");
    }

    #[test]
    fn identity_unitary_fixes_states() {
        let state = FockSpaceState::from_dense_two_mode(
            BTreeMap::from([(
                2u64,
                vec![
                    Complex64::new(0.5, 0.0),
                    Complex64::new(0.5, 0.5),
                    Complex64::new(0.5, -0.5),
                ],
            )]),
            0.0,
        );
        let out = TwoModeUnitary::identity().apply(&state).unwrap();
        for (occ, amp) in state.components() {
            assert!((out.amplitude(&occ) - amp).norm() < 1e-15);
        }
    }

    #[test]
    fn haar_lift_matches_binomial_law_on_stretched_fock_state() {
        // Image of |N,0> has amplitudes C(N,k) u11^(N-k) u21^k sqrt(...) whose
        // squared magnitudes follow the binomial law in |u11|^2.
        let u = random_number_conserving_unitary(7);
        let n = 6u64;
        let input = FockSpaceState::basis_state(OccupationVector::new(vec![n as u32, 0]));
        let out = u.apply(&input).unwrap();
        let p = u.matrix()[0][0].norm_sqr();
        for k in 0..=n {
            let expect = binom_f64(n, k) * p.powi((n - k) as i32) * (1.0 - p).powi(k as i32);
            let got = out
                .amplitude(&OccupationVector::new(vec![(n - k) as u32, k as u32]))
                .norm_sqr();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_single_photon_keeps_one_mode_block() {
        let state = FockSpaceState::basis_state(OccupationVector::new(vec![1, 0]));
        let rho = partial_trace(&state, &[0]).unwrap();
        assert_eq!(rho.dim(), 1);
        assert_eq!(rho.basis()[0], OccupationVector::new(vec![1]));
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_rejects_empty_keep_set() {
        let state = FockSpaceState::vacuum(2);
        assert!(matches!(
            partial_trace(&state, &[]),
            Err(FockcohError::InvalidArguments(_))
        ));
    }

    #[test]
    fn partial_trace_keeps_cross_sector_coherence_when_environment_is_blind() {
        // (|0,0> + |1,0>)/sqrt(2): the second mode never differs, so the
        // reduced first-mode state is a coherent superposition across sectors.
        let state = FockSpaceState::from_components(
            2,
            [
                (
                    OccupationVector::new(vec![0, 0]),
                    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                ),
                (
                    OccupationVector::new(vec![1, 0]),
                    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                ),
            ],
            0.0,
        );
        let rho = partial_trace(&state, &[0]).unwrap();
        assert_eq!(rho.dim(), 2);
        assert_abs_diff_eq!(rho.max_cross_sector_entry(), 0.5, epsilon = 1e-14);
        rho.validate().unwrap();
    }

    #[test]
    fn dephasing_a_basis_state_is_a_point_mass() {
        let state = FockSpaceState::basis_state(OccupationVector::new(vec![2, 1]));
        let table = dephase_fock(&state);
        assert_eq!(table.len(), 1);
        let (label, p) = table.iter().next().unwrap();
        assert_eq!(
            label,
            &OutcomeLabel::Occupation(OccupationVector::new(vec![2, 1]))
        );
        assert_abs_diff_eq!(p.to_f64(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn state_schema_round_trips() {
        let state = FockSpaceState::from_dense_two_mode(
            BTreeMap::from([
                (0u64, vec![Complex64::new(0.6, 0.0)]),
                (2u64, vec![
                    Complex64::new(0.0, 0.48),
                    Complex64::new(0.48, 0.0),
                    Complex64::new(0.0, -0.4),
                ]),
            ]),
            0.0,
        );
        let schema = state.to_schema().unwrap();
        let text = serde_json::to_string(&schema).unwrap();
        let parsed: StateSchema = serde_json::from_str(&text).unwrap();
        let back = FockSpaceState::from_schema(&parsed).unwrap();
        for (occ, amp) in state.components() {
            assert!((back.amplitude(&occ) - amp).norm() < 1e-15);
        }
        assert_eq!(back.truncation(), 2);
    }

    #[test]
    fn tensor_product_concatenates_modes() {
        let a = FockSpaceState::basis_state(OccupationVector::new(vec![1, 0]));
        let b = FockSpaceState::basis_state(OccupationVector::new(vec![0, 2]));
        let ab = a.tensor(&b);
        assert_eq!(ab.modes(), 4);
        assert_abs_diff_eq!(
            ab.amplitude(&OccupationVector::new(vec![1, 0, 0, 2])).re,
            1.0,
            epsilon = 1e-15
        );
    }
}
