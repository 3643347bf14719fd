//! Hybrid near/far-field channel estimation.
//!
//! A large aperture puts users and scatterers on both sides of the Rayleigh
//! boundary, so a channel mixes planar and spherical wavefronts. Projecting
//! such a channel onto a purely angular (far-field) dictionary smears every
//! near-field path across many atoms — the *power diffusion* effect — and
//! greedy recovery then locks onto spurious peaks. The estimator here works
//! on a joint angular+polar dictionary and, after each detection, bars the
//! diffusion set of the selected atom (all atoms coherent with it) from
//! later selection.

use crate::error::Error;
use crate::metrics::{cholesky_solve, hermitian_cholesky};
use crate::rng;
use crate::scalar::{cmod, czero, lit, Cplx, Real};
use crate::wavefield::{steering, HybridChannel};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Transform domain of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Angular,
    Polar,
    Joint,
}

/// Grid label of one atom: φ = sinϑ, and μ = sin²ϑ/r for polar atoms
/// (`None` marks a far-field atom).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AtomLabel<T: Real> {
    pub phi: T,
    pub mu: Option<T>,
}

/// Unit-norm steering dictionary over a transform grid.
#[derive(Debug, Clone)]
pub struct Dictionary<T: Real> {
    pub atoms: DMatrix<Cplx<T>>,
    pub grid: Vec<AtomLabel<T>>,
    pub domain: Domain,
    /// μ-grid step used by the polar rings (0 for angular-only).
    pub mu_step: T,
}

impl<T: Real> Dictionary<T> {
    pub fn atom_count(&self) -> usize {
        self.atoms.ncols()
    }
}

/// Smallest μ step at which adjacent rings at angle φ decorrelate to
/// `epsilon`.
///
/// Coherence falls from 1 near zero step but is not monotone in general
/// (very large steps put the ring at vanishing range where atoms pile up),
/// so the first ε-crossing is located by a fine forward scan and refined by
/// a short bisection within the bracketing interval.
pub fn mu_step_at<T: Real>(n: usize, spacing: T, wavelength: T, epsilon: T, phi: T) -> T {
    let coherence = |step: T| -> T {
        let b1 = polar_atom(n, spacing, wavelength, phi, step);
        let b2 = polar_atom(n, spacing, wavelength, phi, step + step);
        cmod(b1.dotc(&b2))
    };
    let characteristic = wavelength / (spacing * spacing * lit((n * n) as f64));
    let mut s = characteristic / lit(100.0);
    let growth = lit::<T>(1.06);
    let mut below = s;
    let mut found = false;
    for _ in 0..1_000 {
        if coherence(s) <= epsilon {
            below = s;
            found = true;
            break;
        }
        s *= growth;
    }
    if !found {
        return s;
    }
    let mut lo = below / growth;
    let mut hi = below;
    for _ in 0..30 {
        let mid = (lo + hi) / lit(2.0);
        if coherence(mid) <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// μ step meeting the ε-coherence rule at broadside. To second order the
/// ring phase difference is `π·(n·d)²·Δμ/λ` independent of φ; exact
/// evaluation shifts the crossing near endfire, which
/// [`build_dictionary`] accounts for by maximizing over its own grid.
pub fn max_mu_step<T: Real>(n: usize, spacing: T, wavelength: T, epsilon: T) -> T {
    mu_step_at(n, spacing, wavelength, epsilon, T::ZERO)
}

/// Exact near-field atom at grid point (φ, μ): the steering vector at
/// ϑ = asin(φ), r = (1 − φ²)/μ; μ = 0 falls back to the far-field atom.
pub fn polar_atom<T: Real>(
    n: usize,
    spacing: T,
    wavelength: T,
    phi: T,
    mu: T,
) -> DVector<Cplx<T>> {
    let angle = phi.asin();
    if mu <= T::ZERO {
        steering(n, spacing, wavelength, angle, None)
    } else {
        let r = (T::ONE - phi * phi) / mu;
        steering(n, spacing, wavelength, angle, Some(r))
    }
}

/// Builds a steering dictionary: `angular_bins` far-field atoms uniform in
/// sinϑ, plus (for polar/joint domains) `range_rings` near-field rings per
/// angle with the μ step from [`max_mu_step`] at ε = 0.5.
pub fn build_dictionary<T: Real>(
    n: usize,
    spacing: T,
    wavelength: T,
    domain: Domain,
    angular_bins: usize,
    range_rings: Option<usize>,
) -> Result<Dictionary<T>> {
    if angular_bins < 2 {
        return Err(Error::argument("need at least two angular bins"));
    }
    let rings = match (domain, range_rings) {
        (Domain::Angular, _) => 0,
        (_, Some(r)) if r >= 1 => r,
        (_, _) => {
            return Err(Error::argument(
                "polar and joint domains need a positive ring count",
            ))
        }
    };

    // Angular grid: bin centers uniform in sinϑ over (−1, 1).
    let phis: Vec<T> = (0..angular_bins)
        .map(|g| {
            -T::ONE + lit::<T>(2.0) * (lit::<T>(g as f64) + lit(0.5)) / lit(angular_bins as f64)
        })
        .collect();

    // The decorrelating μ step shrinks toward endfire (the projected
    // aperture shortens), so each angle gets its own ring spacing; rings
    // stay uniform in μ along every angle column.
    let mu_step = if rings > 0 {
        max_mu_step(n, spacing, wavelength, lit(0.5))
    } else {
        T::ZERO
    };

    let mut columns: Vec<DVector<Cplx<T>>> = Vec::new();
    let mut grid = Vec::new();
    if domain != Domain::Polar {
        for &phi in &phis {
            columns.push(steering(n, spacing, wavelength, phi.asin(), None));
            grid.push(AtomLabel { phi, mu: None });
        }
    }
    if rings > 0 {
        // Enforce the adjacent-ring bound over the resolvable pairs (both
        // rings beyond one aperture length); rings that fall inside the
        // aperture's reactive zone exist for completeness but cannot
        // decorrelate further.
        let aperture = spacing * lit::<T>((n - 1) as f64);
        for &phi in &phis {
            let mut step = mu_step_at(n, spacing, wavelength, lit(0.5), phi);
            for _ in 0..40 {
                let mut worst = T::ZERO;
                for j in 1..rings {
                    let mu_a = step * lit(j as f64);
                    let mu_b = step * lit((j + 1) as f64);
                    let r_b = (T::ONE - phi * phi) / mu_b;
                    if r_b < aperture {
                        continue;
                    }
                    let ba = polar_atom(n, spacing, wavelength, phi, mu_a);
                    let bb = polar_atom(n, spacing, wavelength, phi, mu_b);
                    worst = worst.max(cmod(ba.dotc(&bb)));
                }
                if worst <= lit(0.5) {
                    break;
                }
                step *= lit(1.05);
            }
            for j in 1..=rings {
                let mu = step * lit(j as f64);
                columns.push(polar_atom(n, spacing, wavelength, phi, mu));
                grid.push(AtomLabel { phi, mu: Some(mu) });
            }
        }
    }
    let atoms = DMatrix::from_fn(n, columns.len(), |i, c| columns[c][i]);
    Ok(Dictionary {
        atoms,
        grid,
        domain,
        mu_step,
    })
}

/// Pilot observations: random holographic-pattern rows applied to the
/// channel, `y = Φ·h + noise`.
#[derive(Debug, Clone)]
pub struct PilotSet<T: Real> {
    pub sensing_matrix: DMatrix<Cplx<T>>,
    pub observations: DVector<Cplx<T>>,
    /// Per-sample complex noise variance σ².
    pub noise_power: T,
}

/// Simulates pilot reception through a single-feed surface: each of the Q
/// rows is a uniform-[0, 1] random pattern (normalized) observed through
/// the reference wave, i.e. row entries `ψ_n·F_n` — the guided-wave phases
/// are part of the physical measurement and are what decorrelates the
/// observations. Noise is scaled so `E‖noise‖²/‖Φh‖² = 10^(−snr/10)`;
/// `snr_db = +∞` is noiseless.
pub fn simulate_pilots<T: Real>(
    channel: &HybridChannel<T>,
    surface: &crate::rhs::RhsConfig<T>,
    q: usize,
    snr_db: T,
    seed: u64,
) -> Result<PilotSet<T>> {
    if q == 0 {
        return Err(Error::argument("need at least one pilot"));
    }
    let n = channel.element_count;
    if surface.element_count() != n {
        return Err(Error::argument(
            "surface element count must match the channel",
        ));
    }
    let f = crate::rhs::build_propagation_matrix(surface)?;
    let mut g = rng::root(seed);
    let mut phi = DMatrix::from_element(q, n, czero::<T>());
    for r in 0..q {
        let mut row = DVector::from_fn(n, |_, _| rng::uniform::<T>(&mut g));
        let norm = row.norm();
        row /= norm;
        for c in 0..n {
            phi[(r, c)] = f[(c, surface.row_of(c))].scale(row[c]);
        }
    }
    let clean = &phi * &channel.h;
    let signal_power = clean.norm_squared();
    let noise_power = if snr_db == T::INFINITY {
        T::ZERO
    } else {
        let ratio = lit::<T>(10.0).powf(-snr_db / lit(10.0));
        signal_power * ratio / lit(q as f64)
    };
    let sigma = noise_power.sqrt();
    let observations = DVector::from_fn(q, |r, _| {
        clean[r] + rng::complex_gaussian::<T>(&mut g).scale(sigma)
    });
    Ok(PilotSet {
        sensing_matrix: phi,
        observations,
        noise_power,
    })
}

/// One selected atom with its least-squares coefficient.
#[derive(Debug, Clone)]
pub struct SupportEntry<T: Real> {
    pub atom: usize,
    pub label: AtomLabel<T>,
    pub coefficient: Cplx<T>,
}

/// Estimator output.
#[derive(Debug, Clone)]
pub struct EstimateReport<T: Real> {
    pub channel_estimate: DVector<Cplx<T>>,
    pub support: Vec<SupportEntry<T>>,
    pub residual_norm: T,
    pub iterations: usize,
}

/// Least squares of `y ≈ U_S·x` over the support columns; returns the
/// coefficients and the residual.
fn ls_over_support<T: Real>(
    effective: &DMatrix<Cplx<T>>,
    support: &[usize],
    y: &DVector<Cplx<T>>,
) -> (Vec<Cplx<T>>, DVector<Cplx<T>>) {
    let k = support.len();
    let q = y.len();
    let mut gram = DMatrix::from_element(k, k, czero::<T>());
    let mut rhs = DVector::from_element(k, czero::<T>());
    for (a, &ga) in support.iter().enumerate() {
        for (b, &gb) in support.iter().enumerate() {
            let mut acc = czero::<T>();
            for r in 0..q {
                acc += effective[(r, ga)].conj() * effective[(r, gb)];
            }
            gram[(a, b)] = acc;
        }
        let mut acc = czero::<T>();
        for r in 0..q {
            acc += effective[(r, ga)].conj() * y[r];
        }
        rhs[a] = acc;
    }
    // Tiny ridge keeps near-duplicate atoms factorizable.
    let trace: T = (0..k).map(|i| gram[(i, i)].re).fold(T::ZERO, |a, b| a + b);
    let ridge = lit::<T>(1e-14) * T::ONE.max(trace);
    for i in 0..k {
        gram[(i, i)] += Cplx::new(ridge, T::ZERO);
    }
    let l = hermitian_cholesky(&gram).expect("ridged Gram is PD");
    let x = cholesky_solve(&l, &rhs);
    let mut residual = y.clone();
    for (a, &ga) in support.iter().enumerate() {
        for r in 0..q {
            residual[r] -= effective[(r, ga)] * x[a];
        }
    }
    (x.iter().copied().collect(), residual)
}

fn build_report<T: Real>(
    dict: &Dictionary<T>,
    support: &[usize],
    coeffs: &[Cplx<T>],
    residual: &DVector<Cplx<T>>,
    iterations: usize,
) -> EstimateReport<T> {
    let n = dict.atoms.nrows();
    let mut estimate = DVector::from_element(n, czero::<T>());
    for (a, &g) in support.iter().enumerate() {
        for i in 0..n {
            estimate[i] += dict.atoms[(i, g)] * coeffs[a];
        }
    }
    EstimateReport {
        channel_estimate: estimate,
        support: support
            .iter()
            .zip(coeffs)
            .map(|(&atom, &coefficient)| SupportEntry {
                atom,
                label: dict.grid[atom],
                coefficient,
            })
            .collect(),
        residual_norm: residual.norm(),
        iterations,
    }
}

/// Classic orthogonal matching pursuit: K greedy max-correlation selections
/// with a least-squares residual update each round.
pub fn omp<T: Real>(
    pilots: &PilotSet<T>,
    dict: &Dictionary<T>,
    sparsity: usize,
) -> Result<EstimateReport<T>> {
    if sparsity == 0 {
        return Err(Error::argument("sparsity must be at least 1"));
    }
    let q = pilots.observations.len();
    if sparsity > q {
        return Err(Error::argument(format!(
            "sparsity {sparsity} exceeds pilot count {q}"
        )));
    }
    if pilots.sensing_matrix.ncols() != dict.atoms.nrows() {
        return Err(Error::argument("pilot/dictionary element counts differ"));
    }
    let effective = &pilots.sensing_matrix * &dict.atoms;
    let norms: Vec<T> = effective_norms(&effective);

    let y = &pilots.observations;
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<Cplx<T>> = Vec::new();
    let mut residual = y.clone();
    let mut iterations = 0;
    for _ in 0..sparsity {
        if residual.norm() == T::ZERO {
            break;
        }
        let mut best = (-T::ONE, 0usize);
        for g in 0..effective.ncols() {
            if support.contains(&g) || norms[g] == T::ZERO {
                continue;
            }
            let score = correlation(&effective, g, &residual) / norms[g];
            if score > best.0 {
                best = (score, g);
            }
        }
        support.push(best.1);
        let (x, res) = ls_over_support(&effective, &support, y);
        coeffs = x;
        residual = res;
        iterations += 1;
    }
    Ok(build_report(dict, &support, &coeffs, &residual, iterations))
}

fn effective_norms<T: Real>(effective: &DMatrix<Cplx<T>>) -> Vec<T> {
    (0..effective.ncols())
        .map(|g| {
            (0..effective.nrows())
                .map(|r| effective[(r, g)].norm_sqr())
                .fold(T::ZERO, |a, b| a + b)
                .sqrt()
        })
        .collect()
}

fn correlation<T: Real>(effective: &DMatrix<Cplx<T>>, g: usize, r: &DVector<Cplx<T>>) -> T {
    let mut corr = czero::<T>();
    for i in 0..r.len() {
        corr += effective[(i, g)].conj() * r[i];
    }
    cmod(corr)
}

/// Stopping rule for [`pd_omp`]: residual power threshold (defaults to
/// `noise_power·Q·1.1`) and/or a path-count cap.
#[derive(Debug, Clone, Copy)]
pub struct StopRule<T: Real> {
    pub residual_tol: Option<T>,
    pub max_paths: Option<usize>,
}

impl<T: Real> Default for StopRule<T> {
    fn default() -> Self {
        StopRule {
            residual_tol: None,
            max_paths: None,
        }
    }
}

/// Options for [`pd_omp`].
#[derive(Debug, Clone, Copy)]
pub struct PdOmpOptions<T: Real> {
    /// Dictionary-domain coherence above which an atom belongs to the
    /// selected atom's diffusion set. The diffusion range itself is not
    /// estimated from data; this fixed threshold stands in for it.
    pub diffusion_threshold: T,
    pub stop: StopRule<T>,
}

impl<T: Real> Default for PdOmpOptions<T> {
    fn default() -> Self {
        PdOmpOptions {
            diffusion_threshold: lit(0.5),
            stop: StopRule::default(),
        }
    }
}

/// Power-diffusion-aware OMP over a joint dictionary.
///
/// Each iteration selects the globally strongest atom, treats it as a true
/// path, bars its diffusion set (atoms whose coherence with it exceeds the
/// threshold) from later selection, and subtracts the least-squares
/// contribution of the selected atoms from the observation.
pub fn pd_omp<T: Real>(
    pilots: &PilotSet<T>,
    dict: &Dictionary<T>,
    opts: &PdOmpOptions<T>,
) -> Result<EstimateReport<T>> {
    if dict.domain != Domain::Joint {
        return Err(Error::argument("pd_omp requires a joint dictionary"));
    }
    if pilots.sensing_matrix.ncols() != dict.atoms.nrows() {
        return Err(Error::argument("pilot/dictionary element counts differ"));
    }
    let q = pilots.observations.len();
    let effective = &pilots.sensing_matrix * &dict.atoms;
    let g_count = effective.ncols();
    let norms = effective_norms(&effective);

    let y = &pilots.observations;
    let tol_power = opts
        .stop
        .residual_tol
        .unwrap_or(pilots.noise_power * lit(q as f64) * lit(1.1));
    let max_paths = opts.stop.max_paths.unwrap_or(q).min(q);

    let mut barred = vec![false; g_count];
    let mut support = Vec::new();
    let mut coeffs: Vec<Cplx<T>> = Vec::new();
    let mut residual = y.clone();
    let mut iterations = 0;
    let floor = lit::<T>(1e-24) * T::ONE.max(y.norm_squared());
    while support.len() < max_paths {
        if residual.norm_squared() <= tol_power.max(floor) {
            break;
        }
        let mut best: Option<(T, usize)> = None;
        for g in 0..g_count {
            if barred[g] || norms[g] == T::ZERO {
                continue;
            }
            let score = correlation(&effective, g, &residual) / norms[g];
            if best.map_or(true, |(s, _)| score > s) {
                best = Some((score, g));
            }
        }
        let Some((_, sel)) = best else {
            break; // every atom barred
        };
        // Diffusion set in the dictionary domain.
        for g in 0..g_count {
            if barred[g] {
                continue;
            }
            let mut coh = czero::<T>();
            for i in 0..dict.atoms.nrows() {
                coh += dict.atoms[(i, g)].conj() * dict.atoms[(i, sel)];
            }
            if cmod(coh) >= opts.diffusion_threshold {
                barred[g] = true;
            }
        }
        support.push(sel);
        let (x, res) = ls_over_support(&effective, &support, y);
        coeffs = x;
        residual = res;
        iterations += 1;
    }
    Ok(build_report(dict, &support, &coeffs, &residual, iterations))
}

/// Normalized mean square error `‖ĥ − h‖²/‖h‖²`.
pub fn nmse<T: Real>(estimate: &DVector<Cplx<T>>, truth: &DVector<Cplx<T>>) -> Result<T> {
    if estimate.len() != truth.len() {
        return Err(Error::argument("length mismatch"));
    }
    let denom = truth.norm_squared();
    if denom == T::ZERO {
        return Err(Error::argument("truth channel is zero"));
    }
    Ok((estimate - truth).norm_squared() / denom)
}
