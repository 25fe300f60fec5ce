//! Parameter sweeps over the two-factor interference family and an
//! independent check of the constrained entropy maximizer behind the
//! indefinite-number distillation curve.
//!
//! The maximizer check solves
//!   maximize H(q) + Σ_k q_k log(k+1)
//!   subject to Σ q_k = 1, Σ k q_k = N, q ≥ 0
//! two ways that share no code path with the closed form: an
//! exponential-family bisection on the energy multiplier and a projected
//! gradient ascent from random starts. Both are compared coordinatewise
//! against the closed-form law p_k = 4(k+1)N^k/(N+2)^(k+2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::sector_coherence;
use crate::error::{FockcohError, Result};
use crate::states::{self, PsiParams};

const LN_2: f64 = std::f64::consts::LN_2;

/// One evaluated grid point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub m: u64,
    pub coherence_bits: f64,
    pub rate: f64,
}

/// Full sweep output. `argmax` repeats the best grid entry exactly;
/// `refined_theta` improves the angle by golden-section search around the
/// grid optimum at the winning m.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub n: u64,
    pub grid: Vec<SweepPoint>,
    pub argmax: (f64, u64),
    pub refined_theta: f64,
    pub refined_coherence_bits: f64,
}

/// Default angle grid: 33 uniform points on [0, pi/4].
pub fn default_theta_grid() -> Vec<f64> {
    let steps = 32u32;
    (0..=steps)
        .map(|i| std::f64::consts::FRAC_PI_4 * f64::from(i) / f64::from(steps))
        .collect()
}

fn psi_coherence_bits(n: u64, theta: f64, m: u64) -> Result<f64> {
    let state = states::psi(PsiParams { theta, m, n })?;
    sector_coherence(&state, n)
}

/// Evaluate sector coherence and distillation rate for every (theta, m)
/// pair on the grid. Grid points are independent and evaluated in
/// parallel; aggregation order is the cartesian index order, so results
/// are deterministic.
pub fn sweep_psi(n: u64, theta_grid: &[f64], m_values: &[u64]) -> Result<SweepResult> {
    if theta_grid.is_empty() || m_values.is_empty() {
        return Err(FockcohError::InvalidArguments(
            "sweep needs at least one theta and one m".into(),
        ));
    }
    if n > 4000 {
        return Err(FockcohError::ResourceLimit(format!(
            "sweep guard: n = {n} exceeds 4000"
        )));
    }
    if n == 0 {
        return Err(FockcohError::InvalidArguments(
            "sweep needs at least one particle".into(),
        ));
    }
    let pairs: Vec<(f64, u64)> = theta_grid
        .iter()
        .flat_map(|&theta| m_values.iter().map(move |&m| (theta, m)))
        .collect();
    let denominator = ((n + 1) as f64).log2();
    let grid: Vec<SweepPoint> = pairs
        .into_par_iter()
        .map(|(theta, m)| {
            psi_coherence_bits(n, theta, m).map(|coherence_bits| SweepPoint {
                theta,
                m,
                coherence_bits,
                rate: coherence_bits / denominator,
            })
        })
        .collect::<Result<_>>()?;

    let best = grid
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.coherence_bits
                .partial_cmp(&b.coherence_bits)
                .expect("coherence values are finite")
                .then(j.cmp(i))
        })
        .map(|(i, _)| i)
        .expect("grid is nonempty");
    let argmax = (grid[best].theta, grid[best].m);

    // Golden-section refinement around the winning angle, bracketed by its
    // grid neighbors at the winning m.
    let mut thetas: Vec<f64> = theta_grid.to_vec();
    thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = thetas
        .iter()
        .position(|&t| t == argmax.0)
        .expect("argmax angle comes from the grid");
    let lo = if pos > 0 { thetas[pos - 1] } else { thetas[pos] };
    let hi = if pos + 1 < thetas.len() { thetas[pos + 1] } else { thetas[pos] };
    let (refined_theta, refined_coherence_bits) =
        golden_section_max(lo, hi, 1e-4, |theta| {
            psi_coherence_bits(n, theta, argmax.1).expect("grid angles already validated")
        });

    Ok(SweepResult {
        n,
        grid,
        argmax,
        refined_theta,
        refined_coherence_bits,
    })
}

/// Maximize a unimodal function on [a, b] to the given abscissa tolerance.
fn golden_section_max(a: f64, b: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    if b - a <= tol {
        let mid = 0.5 * (a + b);
        return (mid, f(mid));
    }
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Closed-form maximizer p_k = 4(k+1)N^k/(N+2)^(k+2) on {0..k_max}, in
/// linear scale. Degenerates to the point mass at zero when n = 0.
fn closed_form_weights(n: f64, k_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; k_max + 1];
    if n == 0.0 {
        p[0] = 1.0;
        return p;
    }
    let ln_n = n.ln();
    let ln_n2 = (n + 2.0).ln();
    for (k, slot) in p.iter_mut().enumerate() {
        let kf = k as f64;
        *slot = (4.0f64.ln() + (kf + 1.0).ln() + kf * ln_n - (kf + 2.0) * ln_n2).exp();
    }
    p
}

/// Mass of the closed-form law above k_max: r^(k_max+1)((k_max+2) - (k_max+1)r)
/// with r = N/(N+2).
fn closed_form_tail(n: f64, k_max: usize) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let r = n / (n + 2.0);
    let kf = k_max as f64;
    (r.ln() * (kf + 1.0)).exp() * ((kf + 2.0) - (kf + 1.0) * r)
}

/// Exponential-family weights q_k ∝ (k+1)e^(k·lambda), normalized in log
/// space, together with ln Z.
fn exponential_family(lambda: f64, k_max: usize) -> (Vec<f64>, f64) {
    let ln_w: Vec<f64> = (0..=k_max)
        .map(|k| ((k + 1) as f64).ln() + k as f64 * lambda)
        .collect();
    let max_ln = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z_shifted: f64 = ln_w.iter().map(|&l| (l - max_ln).exp()).sum();
    let ln_z = max_ln + z_shifted.ln();
    let q = ln_w.iter().map(|&l| (l - ln_z).exp()).collect();
    (q, ln_z)
}

fn mean_of(q: &[f64]) -> f64 {
    q.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
}

/// Objective H(q) + Σ q_k ln(k+1) in nats; 0·ln 0 = 0.
fn objective_nats(q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, &p) in q.iter().enumerate() {
        if p > 0.0 {
            acc += -p * p.ln() + p * ((k + 1) as f64).ln();
        }
    }
    acc
}

fn gradient_nats(q: &[f64], out: &mut [f64]) {
    for (k, (&p, g)) in q.iter().zip(out.iter_mut()).enumerate() {
        *g = ((k + 1) as f64).ln() - 1.0 - p.max(1e-300).ln();
    }
}

/// Projection onto {q >= 0, Σq = 1, Σ k·q = n_target}, Euclidean when
/// `weights` is None and in the diag(1/w) metric otherwise. The minimizer
/// has the closed form q_k = max(0, x_k - w_k(alpha + beta·k)) with
/// w_k = 1 in the Euclidean case, and the duals are found by two nested
/// safeguarded Newton solves on monotone one-dimensional residuals: the
/// mass is convex decreasing in alpha at fixed beta, and the mean with
/// alpha re-solved is nonincreasing in beta. `duals` warm-starts the
/// search and receives the solution, which makes repeated projections of
/// nearby points cheap.
fn project_constrained(
    x: &[f64],
    weights: Option<&[f64]>,
    n_target: f64,
    duals: &mut (f64, f64),
    scratch: &mut [f64],
) {
    let w = |k: usize| weights.map_or(1.0, |w| w[k]);
    // Mass residual and its negated slope Σ w over the active set.
    let mass = |alpha: f64, beta: f64| {
        let mut m = 0.0;
        let mut s = 0.0;
        for (k, &xv) in x.iter().enumerate() {
            let v = xv - w(k) * (alpha + beta * k as f64);
            if v > 0.0 {
                m += v;
                s += w(k);
            }
        }
        (m - 1.0, s)
    };
    // Solves mass(alpha, beta) = 1 for alpha. The residual falls from +inf
    // to -1, so a root exists and is unique; Newton from the positive side
    // of a convex decreasing function cannot overshoot, and bisection
    // catches every other case.
    let solve_alpha = |beta: f64, alpha_init: f64| -> f64 {
        let mut alpha = alpha_init;
        let (mut f, mut slope) = mass(alpha, beta);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut step = 1.0;
        for _ in 0..300 {
            // The second exit handles roundoff floors: once the bracket is
            // one ulp wide no further digit is available.
            if f.abs() <= 1e-14 || hi - lo <= f64::EPSILON * (1.0 + alpha.abs()) {
                break;
            }
            if f > 0.0 {
                lo = alpha;
            } else {
                hi = alpha;
            }
            let newton = if slope > 0.0 { alpha + f / slope } else { f64::NAN };
            alpha = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if f > 0.0 {
                // No upper bracket yet; march right geometrically.
                step *= 2.0;
                alpha + step
            } else {
                step *= 2.0;
                alpha - step
            };
            let next = mass(alpha, beta);
            f = next.0;
            slope = next.1;
        }
        alpha
    };
    // Mean residual at the mass-feasible alpha(beta), plus the active-set
    // moments needed for its slope.
    let mean_at = |beta: f64, alpha_init: f64| -> (f64, f64, f64) {
        let alpha = solve_alpha(beta, alpha_init);
        let mut mean = 0.0;
        let mut a = 0.0;
        let mut b = 0.0;
        let mut c = 0.0;
        for (k, &xv) in x.iter().enumerate() {
            let kf = k as f64;
            let v = xv - w(k) * (alpha + beta * kf);
            if v > 0.0 {
                mean += v * kf;
                a += w(k);
                b += w(k) * kf;
                c += w(k) * kf * kf;
            }
        }
        // d(mean)/d(beta) along the mass-feasible path is the Schur
        // complement b^2/a - c <= 0.
        let slope = if a > 0.0 { b * b / a - c } else { 0.0 };
        (mean - n_target, slope, alpha)
    };
    let (mut alpha, mut beta) = *duals;
    let (mut g, mut slope, a0) = mean_at(beta, alpha);
    alpha = a0;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut step = 1.0;
    for _ in 0..300 {
        if g.abs() <= 1e-13 * n_target.max(1.0)
            || hi - lo <= f64::EPSILON * (1.0 + beta.abs())
        {
            break;
        }
        if g > 0.0 {
            // Mean too high; the residual is nonincreasing, so move right.
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = if slope < 0.0 { beta - g / slope } else { f64::NAN };
        beta = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if g > 0.0 {
            step *= 2.0;
            beta + step
        } else {
            step *= 2.0;
            beta - step
        };
        let next = mean_at(beta, alpha);
        g = next.0;
        slope = next.1;
        alpha = next.2;
    }
    *duals = (alpha, beta);
    for (k, (slot, &xv)) in scratch.iter_mut().zip(x.iter()).enumerate() {
        *slot = (xv - w(k) * (alpha + beta * k as f64)).max(0.0);
    }
}

/// Comparison of two independent maximizer solutions against the closed
/// form and against each other. Distances are coordinatewise maxima.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub mean_particles: f64,
    pub truncation: usize,
    pub closed_form_tail: f64,
    /// Energy multiplier recovered by bisection.
    pub lambda_energy: f64,
    /// ln(N/(N+2)).
    pub lambda_energy_closed_form: f64,
    /// Normalization multiplier recovered from the bisection partition sum.
    pub lambda_normalization: f64,
    /// 1 - 2·ln((N+2)/2).
    pub lambda_normalization_closed_form: f64,
    pub bisection_linf: f64,
    pub ascent_linf: f64,
    pub solver_agreement_linf: f64,
    pub ascent_objective_bits: f64,
    pub closed_form_objective_bits: f64,
    pub ascent_starts: usize,
    /// Iterations used by the best ascent run.
    pub ascent_iterations: usize,
    /// Objective never decreased across accepted ascent steps, any start.
    pub ascent_monotone: bool,
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct AscentRun {
    q: Vec<f64>,
    objective: f64,
    iterations: usize,
    monotone: bool,
}

/// Projected gradient ascent from one random start, backtracking along
/// the projection arc: candidate(t) = P(q + t·d), with t halved until the
/// Armijo increase holds. The primary direction scales the gradient by
/// diag(q), extended at the boundary as described inside the loop, and
/// projects in the matching metric so the directional derivative along
/// the arc stays positive; if that arc yields no ascent the raw gradient
/// with the Euclidean projection is tried before giving up.
fn projected_ascent(n_target: f64, k_max: usize, seed: u64, max_iter: usize) -> AscentRun {
    let dim = k_max + 1;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut q = vec![0.0; dim];
    // Dual warm starts, kept separately per metric because the scaled and
    // Euclidean multipliers live on different scales.
    let mut duals_scaled = (0.0, 0.0);
    let mut duals_plain = (0.0, 0.0);
    project_constrained(&start, None, n_target, &mut duals_plain, &mut q);

    let mut gradient = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut candidate = vec![0.0; dim];
    gradient_nats(&q, &mut gradient);
    let mut f_current = objective_nats(&q);
    let mut monotone = true;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        let mut accepted = false;
        // The entropy Hessian is -diag(1/q), so diag(q) is the natural step
        // scale away from the boundary. Coordinates the projection has
        // clipped to zero instead get the scale their multiplier
        // equilibrium suggests: with the multipliers fit by least squares
        // of the gradient on the well-established coordinates, raising a
        // zero coordinate to exp(ln(k+1) - 1 - a - b·k) is first-order
        // neutral, so bumps of that size cannot poison the arc, while any
        // fixed floor injects mass far from equilibrium and stalls the
        // endgame.
        let (mut sw, mut swk, mut swkk, mut sg, mut sgk) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
        for (k, (&p, &g)) in q.iter().zip(gradient.iter()).enumerate() {
            if p >= 1e-9 {
                let kf = k as f64;
                sw += 1.0;
                swk += kf;
                swkk += kf * kf;
                sg += g;
                sgk += g * kf;
            }
        }
        let det = sw * swkk - swk * swk;
        let (mult_a, mult_b) = if det > 1e-9 {
            let b = (sw * sgk - swk * sg) / det;
            ((sg - b * swk) / sw, b)
        } else {
            (0.0, 0.0)
        };
        for k in 0..dim {
            scale[k] = if q[k] > 0.0 {
                q[k]
            } else if det > 1e-9 {
                let ln_eq = ((k + 1) as f64).ln() - 1.0 - mult_a - mult_b * k as f64;
                ln_eq.clamp(-745.0, -4.6).exp()
            } else {
                1e-12
            };
        }
        for scaled in [true, false] {
            // In the scaled metric a unit step is the Newton-like move, so
            // a small constant bracket suffices; memory of past step sizes
            // would trap the search below the useful range.
            let mut t = if scaled { 4.0 } else { 1.0 };
            while t > 1e-13 {
                for k in 0..dim {
                    let d = if scaled { scale[k] * gradient[k] } else { gradient[k] };
                    trial[k] = q[k] + t * d;
                }
                let metric = if scaled { Some(scale.as_slice()) } else { None };
                let duals = if scaled { &mut duals_scaled } else { &mut duals_plain };
                project_constrained(&trial, metric, n_target, duals, &mut candidate);
                let mut inner = 0.0f64;
                let mut change_sup = 0.0f64;
                for k in 0..dim {
                    let d = candidate[k] - q[k];
                    inner += gradient[k] * d;
                    change_sup = change_sup.max(d.abs());
                }
                // Steps at roundoff scale prove nothing; count them as arc
                // failure, not progress.
                if inner > 0.0 && change_sup > 1e-13 {
                    let f_next = objective_nats(&candidate);
                    if f_next >= f_current + 1e-4 * inner {
                        monotone = monotone && f_next >= f_current;
                        f_current = f_next;
                        std::mem::swap(&mut q, &mut candidate);
                        gradient_nats(&q, &mut gradient);
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break;
        }
    }

    AscentRun {
        q,
        objective: f_current,
        iterations,
        monotone,
    }
}

/// Verify the constrained maximizer two independent ways and compare both
/// to the closed form. `k_max` must be large enough that the closed-form
/// tail mass above it stays below `tol`.
pub fn verify_kkt(n: f64, k_max: usize, tol: f64) -> Result<KktReport> {
    if !n.is_finite() || n < 0.0 {
        return Err(FockcohError::InvalidArguments(format!(
            "mean particle number must be nonnegative, got {n}"
        )));
    }
    if k_max == 0 || tol <= 0.0 {
        return Err(FockcohError::InvalidArguments(
            "verify_kkt needs k_max >= 1 and tol > 0".into(),
        ));
    }
    let tail = closed_form_tail(n, k_max);
    if tail >= tol {
        return Err(FockcohError::InvalidArguments(format!(
            "truncation too small: closed-form tail {tail:.3e} at k_max = {k_max} is not below tol = {tol:.3e}"
        )));
    }
    let closed = closed_form_weights(n, k_max);
    let closed_objective_bits = objective_nats(&closed) / LN_2;

    // Route 1: bisection on the energy multiplier of the exponential
    // family q_k ∝ (k+1)e^(k·lambda); the mean is strictly increasing in
    // lambda.
    let (bisection_q, lambda_energy, ln_z) = if n == 0.0 {
        let mut q = vec![0.0; k_max + 1];
        q[0] = 1.0;
        (q, f64::NEG_INFINITY, 0.0)
    } else {
        let mut lo = -60.0f64;
        let mut hi = 2.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (q, _) = exponential_family(mid, k_max);
            if mean_of(&q) < n {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let (q, ln_z) = exponential_family(lambda, k_max);
        (q, lambda, ln_z)
    };
    let lambda_normalization = if n == 0.0 { f64::NEG_INFINITY } else { 1.0 - ln_z };
    let lambda_energy_closed_form = if n == 0.0 {
        f64::NEG_INFINITY
    } else {
        (n / (n + 2.0)).ln()
    };
    let lambda_normalization_closed_form = if n == 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - 2.0 * ((n + 2.0) / 2.0).ln()
    };

    // Route 2: projected gradient ascent from seeded random starts.
    let starts = 5usize;
    let runs: Vec<AscentRun> = (0..starts)
        .into_par_iter()
        .map(|i| projected_ascent(n, k_max, 0x6b6b_7400 + i as u64, 20_000))
        .collect();
    let ascent_monotone = runs.iter().all(|r| r.monotone);
    let best = runs
        .into_iter()
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .expect("at least one ascent run");

    Ok(KktReport {
        mean_particles: n,
        truncation: k_max,
        closed_form_tail: tail,
        lambda_energy,
        lambda_energy_closed_form,
        lambda_normalization,
        lambda_normalization_closed_form,
        bisection_linf: linf(&bisection_q, &closed),
        ascent_linf: linf(&best.q, &closed),
        solver_agreement_linf: linf(&best.q, &bisection_q),
        ascent_objective_bits: best.objective / LN_2,
        closed_form_objective_bits: closed_objective_bits,
        ascent_starts: starts,
        ascent_iterations: best.iterations,
        ascent_monotone,
    })
}
