//! Sensing-assisted beam training in the (φ, μ) domain.
//!
//! The transform φ = cosθ, μ = sin²θ/r (θ measured from the array axis)
//! turns hybrid near/far-field locations into a grid on which uniformly
//! sampled steering vectors are near-orthogonal. Training runs in two
//! phases: a hierarchical *angle search* whose layers each transmit two
//! multi-lobe codewords (one covering the left half of every current cell,
//! one the right half, so all users refine simultaneously), then a
//! *distance search* over μ range bins probed by averaged per-user
//! codewords. The slot count is `2·layers + bins`, independent of the user
//! count.
//!
//! Sliding windows reposition the effective aperture: a window is an
//! equivalent array of `N_a` columns re-anchored at its start, so only the
//! channel — not the aperture response — varies across positions.

use crate::beamopt::engine::{ascend, Ascent, AscentOptions, PatternFeasibleSet};
use crate::error::Error;
use crate::metrics::{cholesky_solve, hermitian_cholesky};
use crate::rhs::{
    build_propagation_matrix, pattern_for_point, superpose_patterns, ApertureWindow,
    HolographicPattern, RhsConfig,
};
use crate::rng;
use crate::scalar::{cis, cmod, czero, lit, Cplx, Real};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A point of the (φ, μ) domain: φ = cosθ ∈ [−1, 1] and μ = sin²θ/r ≥ 0,
/// with μ = 0 encoding the far field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiMuPoint<T: Real> {
    pub phi: T,
    pub mu: T,
}

/// Maps an axis-referenced angle and range onto the (φ, μ) domain;
/// `range = None` is the far field.
pub fn phi_mu_transform<T: Real>(theta: T, range: Option<T>) -> Result<PhiMuPoint<T>> {
    let phi = theta.cos();
    let mu = match range {
        None => T::ZERO,
        Some(r) => {
            if r <= T::ZERO {
                return Err(Error::argument("range must be positive"));
            }
            let s = theta.sin();
            s * s / r
        }
    };
    Ok(PhiMuPoint { phi, mu })
}

/// Inverse transform: θ = acos(φ) and r = (1 − φ²)/μ (`None` when μ = 0).
pub fn phi_mu_inverse<T: Real>(point: PhiMuPoint<T>) -> (T, Option<T>) {
    let theta = point.phi.clamp(-T::ONE, T::ONE).acos();
    if point.mu <= T::ZERO {
        (theta, None)
    } else {
        (theta, Some((T::ONE - point.phi * point.phi) / point.mu))
    }
}

/// Half-open φ interval of one codebook cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellInterval<T: Real> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> CellInterval<T> {
    pub fn contains(&self, phi: T) -> bool {
        phi >= self.lo && phi < self.hi
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) / lit(2.0)
    }
}

/// One codebook layer: two multi-lobe codewords; codeword 0 covers the left
/// child of every layer cell, codeword 1 the right child.
#[derive(Debug, Clone)]
pub struct CodebookLayer<T: Real> {
    pub codewords: [HolographicPattern<T>; 2],
    pub cells: [Vec<CellInterval<T>>; 2],
    /// Mean in-cell / mean out-of-cell gain of each codeword.
    pub contrast: [T; 2],
    /// Worst per-sample margin `covering − other` over the design grid.
    pub min_margin: T,
}

/// Hierarchical multi-user angular codebook on a window-sized aperture.
#[derive(Debug, Clone)]
pub struct Codebook<T: Real> {
    pub layers: Vec<CodebookLayer<T>>,
    /// φ span covered by the codebook.
    pub span: CellInterval<T>,
    /// Per-layer gain target D.
    pub gain_target: T,
    /// Coherence bound ε of the μ sampling.
    pub epsilon: T,
    /// μ range covered by the design grid.
    pub mu_max: T,
}

impl<T: Real> Codebook<T> {
    /// Terminal cell of a binary refinement path.
    pub fn terminal_cell(&self, bits: &[usize]) -> CellInterval<T> {
        let mut cell = self.span;
        for &b in bits {
            let mid = cell.center();
            cell = if b == 0 {
                CellInterval { lo: cell.lo, hi: mid }
            } else {
                CellInterval { lo: mid, hi: cell.hi }
            };
        }
        cell
    }

    /// Number of layers.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Receive channel of a point source at (φ, μ) over the full surface, unit
/// norm: far field for μ = 0, exact spherical wavefront otherwise.
pub fn point_channel<T: Real>(cfg: &RhsConfig<T>, phi: T, mu: T) -> DVector<Cplx<T>> {
    let zc = lit::<T>((cfg.cols - 1) as f64) / lit(2.0) * cfg.element_spacing;
    point_channel_anchored(cfg, phi, mu, zc)
}

/// [`point_channel`] with the (φ, μ) parameterization anchored at a chosen
/// z-coordinate instead of the surface center. A physical point presents
/// different (φ, μ) to differently positioned apertures; anchoring at the
/// active window's center makes "on-grid" exact for that window.
pub fn point_channel_anchored<T: Real>(
    cfg: &RhsConfig<T>,
    phi: T,
    mu: T,
    anchor_z: T,
) -> DVector<Cplx<T>> {
    point_channel_elevated(cfg, phi, mu, T::ZERO, anchor_z)
}

/// [`point_channel_anchored`] for a user off the x–z plane: `y_cos` is the
/// direction cosine along the feed axis (y). Row-to-row phase diversity
/// from distinct elevations is what lets the zero-forcing stage separate
/// users across feeds.
pub fn point_channel_elevated<T: Real>(
    cfg: &RhsConfig<T>,
    phi: T,
    mu: T,
    y_cos: T,
    anchor_z: T,
) -> DVector<Cplx<T>> {
    let n = cfg.element_count();
    let k0 = cfg.free_wavenumber();
    let norm = T::ONE / lit::<T>(n as f64).sqrt();
    let sin_sq = T::ONE - phi * phi;
    let yc = lit::<T>((cfg.rows - 1) as f64) / lit(2.0) * cfg.element_spacing;
    DVector::from_fn(n, |i, _| {
        let (y, z) = cfg.element_position(cfg.row_of(i), cfg.col_of(i));
        let mut phase = if mu <= T::ZERO {
            k0 * phi * (z - anchor_z)
        } else {
            let r = sin_sq / mu;
            let sx = r * sin_sq.sqrt();
            let sz = anchor_z + r * phi;
            let d = (sx * sx + (yc - y) * (yc - y) + (sz - z) * (sz - z)).sqrt();
            -k0 * (d - r)
        };
        phase += k0 * y_cos * (y - yc);
        cis(phase).scale(norm)
    })
}

/// z-coordinate of the window center at a given offset, for anchoring.
pub fn window_anchor_z<T: Real>(cfg: &RhsConfig<T>, n_a_cols: usize, offset: usize) -> T {
    (lit::<T>(offset as f64) + lit::<T>((n_a_cols - 1) as f64) / lit(2.0)) * cfg.element_spacing
}

/// Rician multipath channel for training simulations: a LoS component at
/// the user's (φ, μ) plus `paths` far-field scatterers with CN(0, 1) gains,
/// mixed by the K-factor.
pub fn rician_channel<T: Real>(
    cfg: &RhsConfig<T>,
    user: PhiMuPoint<T>,
    k_factor: T,
    paths: usize,
    seed: u64,
) -> DVector<Cplx<T>> {
    let mut g = rng::root(seed);
    let los = point_channel(cfg, user.phi, user.mu);
    let mut h = los.map(|v| v.scale((k_factor / (k_factor + T::ONE)).sqrt()));
    if paths > 0 {
        let nlos_scale =
            (T::ONE / (k_factor + T::ONE)).sqrt() / lit::<T>(paths as f64).sqrt();
        for _ in 0..paths {
            let phi = lit::<T>(2.0) * rng::uniform::<T>(&mut g) - T::ONE;
            let gain = rng::complex_gaussian::<T>(&mut g).scale(nlos_scale);
            let path = point_channel(cfg, phi, T::ZERO);
            h += path.map(|v| v * gain);
        }
    }
    h
}

/// Received field of a pattern on an aperture config through a channel
/// slice, with uniform feed excitation `√(P_t/L)` per feed.
fn received_field<T: Real>(
    cfg: &RhsConfig<T>,
    f: &DMatrix<Cplx<T>>,
    pattern: &HolographicPattern<T>,
    channel: &[Cplx<T>],
    power: T,
) -> Cplx<T> {
    let x = (power / lit(cfg.rows as f64)).sqrt();
    let mut acc = czero::<T>();
    for i in 0..cfg.element_count() {
        let l = cfg.row_of(i);
        acc += channel[i] * f[(i, l)].scale(pattern.amplitudes[i] * x);
    }
    acc
}

/// Number of sliding windows: `cols − n_a + 1`.
pub fn window_count<T: Real>(cfg: &RhsConfig<T>, n_a_cols: usize) -> Result<usize> {
    if n_a_cols == 0 || n_a_cols > cfg.cols {
        return Err(Error::argument("window must fit within the surface"));
    }
    Ok(cfg.cols - n_a_cols + 1)
}

/// The window-sized aperture configuration (same rows, `n_a` columns).
pub fn window_config<T: Real>(cfg: &RhsConfig<T>, n_a_cols: usize) -> Result<RhsConfig<T>> {
    window_count(cfg, n_a_cols)?;
    let mut local = cfg.clone();
    local.cols = n_a_cols;
    Ok(local)
}

/// Channel entries of the full surface restricted to the window starting at
/// column `offset`, reordered to the window-local element indexing.
fn window_slice<T: Real>(
    cfg: &RhsConfig<T>,
    channel: &DVector<Cplx<T>>,
    n_a_cols: usize,
    offset: usize,
) -> Vec<Cplx<T>> {
    let local_n = cfg.rows * n_a_cols;
    (0..local_n)
        .map(|i| {
            let iy = i % cfg.rows;
            let iz = i / cfg.rows + offset;
            channel[cfg.index_of(iy, iz)]
        })
        .collect()
}

/// Evaluates a window-sized codeword at every window position of the full
/// surface and returns the position with the strongest received power
/// (ties → lowest index).
pub fn sliding_window_select<T: Real>(
    cfg: &RhsConfig<T>,
    n_a_cols: usize,
    channel: &DVector<Cplx<T>>,
    codeword: &HolographicPattern<T>,
    power: T,
) -> Result<(usize, T)> {
    let local = window_config(cfg, n_a_cols)?;
    if codeword.len() != local.element_count() {
        return Err(Error::argument("codeword must match the window aperture"));
    }
    if channel.len() != cfg.element_count() {
        return Err(Error::argument("channel must cover the full surface"));
    }
    let f = build_propagation_matrix(&local)?;
    let mut best = (0usize, -T::ONE);
    for k in 0..window_count(cfg, n_a_cols)? {
        let slice = window_slice(cfg, channel, n_a_cols, k);
        let p = received_field(&local, &f, codeword, &slice, power).norm_sqr();
        if p > best.1 {
            best = (k, p);
        }
    }
    Ok(best)
}

/// Codebook design parameters.
#[derive(Debug, Clone)]
pub struct CodebookDesign<T: Real> {
    /// Angular layers S (two codewords each).
    pub layers: usize,
    /// Design samples along φ and μ.
    pub samples: (usize, usize),
    /// φ span to cover.
    pub span: CellInterval<T>,
    /// μ extent of the design grid.
    pub mu_max: T,
    /// Per-layer in-cell gain target D; `None` uses
    /// `√(0.8·N_a/cells_per_layer)`.
    pub gain_target: Option<T>,
    /// Feed power used during design and training probes.
    pub power: T,
}

/// Designs the hierarchical angular codebook on the given (window-sized)
/// aperture by least-squares beampattern matching: each codeword minimizes
/// `Σ_{i,j} (|a(φ_i, μ_j)ᵀ·M·b| − G_{i,j})²` with G = D inside its cells
/// and 0 outside, starting from the superposed hologram of its cell
/// centers.
pub fn design_angle_codebook<T: Real>(
    cfg: &RhsConfig<T>,
    design: &CodebookDesign<T>,
    seed: u64,
) -> Result<Codebook<T>> {
    cfg.validate()?;
    if design.layers == 0 {
        return Err(Error::argument("need at least one layer"));
    }
    if design.samples.0 < 2 || design.samples.1 < 2 {
        return Err(Error::argument("need at least 2×2 design samples"));
    }
    let f = build_propagation_matrix(cfg)?;
    let window = ApertureWindow::full(cfg);
    let feasible = PatternFeasibleSet::new(cfg, &window);
    let n = cfg.element_count();
    let (si, sj) = design.samples;
    let span = design.span;

    // Design grid and its channel vectors.
    let phis: Vec<T> = (0..si)
        .map(|i| {
            span.lo + (span.hi - span.lo) * (lit::<T>(i as f64) + lit(0.5)) / lit(si as f64)
        })
        .collect();
    let mus: Vec<T> = (0..sj)
        .map(|j| design.mu_max * lit::<T>(j as f64) / lit((sj - 1) as f64))
        .collect();
    let mut grid_channels = Vec::with_capacity(si * sj);
    for &phi in &phis {
        for &mu in &mus {
            grid_channels.push(point_channel(cfg, phi, mu));
        }
    }
    // Per-sample ψ-field coefficients (uniform feed excitation).
    let x = (design.power / lit(cfg.rows as f64)).sqrt();
    let coeffs: Vec<Vec<Cplx<T>>> = grid_channels
        .iter()
        .map(|h| {
            (0..n)
                .map(|i| {
                    let l = cfg.row_of(i);
                    h[i] * f[(i, l)].scale(x)
                })
                .collect()
        })
        .collect();
    let gain_of = |psi: &DVector<T>, s: usize| -> T {
        let mut acc = czero::<T>();
        for i in 0..n {
            acc += coeffs[s][i].scale(psi[i]);
        }
        cmod(acc)
    };

    // Achievable single-point gain, used to calibrate the per-layer target:
    // the mean gain of focused holograms at a few span points.
    let peak_gain = {
        let mut acc = T::ZERO;
        let probes = 4;
        for k in 0..probes {
            let phi = span.lo
                + (span.hi - span.lo) * (lit::<T>(k as f64) + lit(0.5)) / lit(probes as f64);
            let pat = pattern_for_point(cfg, phi, T::ZERO)?;
            let psi = DVector::from_row_slice(&pat.amplitudes);
            // Nearest design sample to the probe point.
            let mut best = (T::INFINITY, 0usize);
            for (i, &p) in phis.iter().enumerate() {
                let d = (p - phi).abs();
                if d < best.0 {
                    best = (d, i * sj);
                }
            }
            acc += gain_of(&psi, best.1);
        }
        acc / lit(probes as f64)
    };

    let mut layers = Vec::new();
    let mut g = rng::root(seed);
    for layer in 1..=design.layers {
        let cells_total = 1usize << layer;
        let width = (span.hi - span.lo) / lit(cells_total as f64);
        let all_cells: Vec<CellInterval<T>> = (0..cells_total)
            .map(|c| CellInterval {
                lo: span.lo + width * lit(c as f64),
                hi: span.lo + width * lit((c + 1) as f64),
            })
            .collect();
        // Power splits across the codeword's lobes, so the per-lobe target
        // shrinks with the square root of the covered cell count.
        let d_target = design.gain_target.unwrap_or_else(|| {
            lit::<T>(0.8) * peak_gain / lit::<T>((cells_total / 2) as f64).sqrt()
        });

        let mut codewords = Vec::new();
        let mut cellsets = Vec::new();
        let mut contrasts = Vec::new();
        for side in 0..2 {
            let cells: Vec<CellInterval<T>> = all_cells
                .iter()
                .copied()
                .enumerate()
                .filter(|(c, _)| c % 2 == side)
                .map(|(_, cell)| cell)
                .collect();
            let covered = |phi: T| cells.iter().any(|c| c.contains(phi));
            // Out-of-cell samples get extra weight: leftover mirror-order
            // lobes of the amplitude hologram land there and must be pushed
            // down for reliable left/right decisions.
            let out_weight = lit::<T>(4.0);
            let targets: Vec<(T, T)> = phis
                .iter()
                .flat_map(|&phi| {
                    let entry = if covered(phi) {
                        (d_target, T::ONE)
                    } else {
                        (T::ZERO, out_weight)
                    };
                    std::iter::repeat(entry).take(sj)
                })
                .collect();

            // Initialization: superposed holograms over the in-cell design
            // samples, so wide cells start from a wide multi-point beam.
            let mut seeds_pat = Vec::new();
            for &phi in phis.iter().filter(|&&p| covered(p)) {
                seeds_pat.push(pattern_for_point(cfg, phi, T::ZERO)?);
            }
            if seeds_pat.is_empty() {
                for c in &cells {
                    seeds_pat.push(pattern_for_point(cfg, c.center(), T::ZERO)?);
                }
            }
            let weights = vec![T::ONE / lit::<T>(seeds_pat.len() as f64); seeds_pat.len()];
            let init = superpose_patterns(&seeds_pat, &weights)?;
            let mut psi0 = DVector::from_vec(init.pattern.amplitudes.clone());
            feasible.project(&mut psi0);
            // A little dither decorrelates layers that share cell centers.
            for v in psi0.iter_mut() {
                *v = (*v + rng::uniform::<T>(&mut g) * lit(1e-3)).clamp(T::ZERO, T::ONE);
            }

            let objective = |psi: &DVector<T>| -> T {
                let mut acc = T::ZERO;
                for (s, &(t, w)) in targets.iter().enumerate() {
                    let d = gain_of(psi, s) - t;
                    acc += w * d * d;
                }
                -acc
            };
            let gradient = |psi: &DVector<T>| -> DVector<T> {
                let mut grad = DVector::from_element(n, T::ZERO);
                for (s, &(t, wgt)) in targets.iter().enumerate() {
                    let mut field = czero::<T>();
                    for i in 0..n {
                        field += coeffs[s][i].scale(psi[i]);
                    }
                    let mag = cmod(field);
                    if mag <= lit(1e-12) {
                        continue;
                    }
                    let w = -lit::<T>(2.0) * wgt * (mag - t) / mag;
                    let fc = field.conj();
                    for i in 0..n {
                        grad[i] += w * (fc * coeffs[s][i]).re;
                    }
                }
                grad
            };
            let project = |psi: &mut DVector<T>| feasible.project(psi);
            // A few restarted rounds escape plateaus of the non-convex
            // matching objective.
            let mut psi = psi0;
            for _ in 0..4 {
                let outcome = ascend(
                    &Ascent {
                        objective: &objective,
                        gradient: &gradient,
                        project: &project,
                        guard: None,
                    },
                    psi,
                    &AscentOptions {
                        max_iters: 400,
                        ..AscentOptions::default()
                    },
                );
                psi = outcome.x;
            }

            contrasts.push(T::ZERO); // filled after the polish
            codewords.push(HolographicPattern::new(psi.iter().copied().collect()));
            cellsets.push(cells);
        }

        // Joint polish: maximize the worst decision margin at the terminal
        // cell centers (the on-grid user locations) over both codewords at
        // once. Decision points index into the design grid because the φ
        // sample count is a multiple of the terminal cell count.
        let decision_samples: Vec<(usize, usize)> = {
            let terminal = 1usize << design.layers;
            let mut pts = Vec::new();
            for c in 0..terminal {
                let phi_c = span.lo
                    + (span.hi - span.lo) * (lit::<T>(c as f64) + lit(0.5))
                        / lit(terminal as f64);
                // Nearest design φ sample.
                let mut best = (T::INFINITY, 0usize);
                for (i, &p) in phis.iter().enumerate() {
                    let d = (p - phi_c).abs();
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                let side = if cellsets[0].iter().any(|cell| cell.contains(phis[best.1])) {
                    0
                } else {
                    1
                };
                for jm in 0..sj {
                    pts.push((best.1 * sj + jm, side));
                }
            }
            pts
        };
        let margin_of = |x: &DVector<T>| -> T {
            // x stacks both codewords.
            let a = DVector::from_fn(n, |i, _| x[i]);
            let b = DVector::from_fn(n, |i, _| x[n + i]);
            let mut min = T::INFINITY;
            for &(s, side) in &decision_samples {
                let (own, other) = if side == 0 {
                    (gain_of(&a, s), gain_of(&b, s))
                } else {
                    (gain_of(&b, s), gain_of(&a, s))
                };
                min = min.min(own - other);
            }
            min
        };
        let margin_grad = |x: &DVector<T>| -> DVector<T> {
            let a = DVector::from_fn(n, |i, _| x[i]);
            let b = DVector::from_fn(n, |i, _| x[n + i]);
            let (mut min, mut arg) = (T::INFINITY, (0usize, 0usize));
            for &(s, side) in &decision_samples {
                let (own, other) = if side == 0 {
                    (gain_of(&a, s), gain_of(&b, s))
                } else {
                    (gain_of(&b, s), gain_of(&a, s))
                };
                if own - other < min {
                    min = own - other;
                    arg = (s, side);
                }
            }
            let (s, side) = arg;
            let mut grad = DVector::from_element(2 * n, T::ZERO);
            let d_gain = |psi: &DVector<T>, sgn: T, base: usize, grad: &mut DVector<T>| {
                let mut field = czero::<T>();
                for i in 0..n {
                    field += coeffs[s][i].scale(psi[i]);
                }
                let mag = cmod(field);
                if mag <= lit(1e-12) {
                    return;
                }
                let fc = field.conj();
                for i in 0..n {
                    grad[base + i] += sgn * (fc * coeffs[s][i]).re / mag;
                }
            };
            if side == 0 {
                d_gain(&a, T::ONE, 0, &mut grad);
                d_gain(&b, -T::ONE, n, &mut grad);
            } else {
                d_gain(&b, T::ONE, n, &mut grad);
                d_gain(&a, -T::ONE, 0, &mut grad);
            }
            grad
        };
        let project_pair = |x: &mut DVector<T>| {
            let mut a = DVector::from_fn(n, |i, _| x[i]);
            feasible.project(&mut a);
            let mut b = DVector::from_fn(n, |i, _| x[n + i]);
            feasible.project(&mut b);
            for i in 0..n {
                x[i] = a[i];
                x[n + i] = b[i];
            }
        };
        let mut stacked = DVector::from_fn(2 * n, |i, _| {
            if i < n {
                codewords[0].amplitudes[i]
            } else {
                codewords[1].amplitudes[i - n]
            }
        });
        let polish = ascend(
            &Ascent {
                objective: &margin_of,
                gradient: &margin_grad,
                project: &project_pair,
                guard: None,
            },
            stacked.clone(),
            &AscentOptions {
                max_iters: 300,
                ..AscentOptions::default()
            },
        );
        stacked = polish.x;
        codewords[0] =
            HolographicPattern::new((0..n).map(|i| stacked[i]).collect());
        codewords[1] =
            HolographicPattern::new((0..n).map(|i| stacked[n + i]).collect());
        let min_margin = margin_of(&stacked);
        // Contrast on the polished codewords: mean in-cell beampattern gain
        // (power) over mean out-of-cell gain.
        for side in 0..2 {
            let psi = DVector::from_row_slice(&codewords[side].amplitudes);
            let covered =
                |phi: T| cellsets[side].iter().any(|c| c.contains(phi));
            let mut in_acc = T::ZERO;
            let mut in_n = 0usize;
            let mut out_acc = T::ZERO;
            let mut out_n = 0usize;
            for (ip, &phi) in phis.iter().enumerate() {
                for jm in 0..sj {
                    let gain = gain_of(&psi, ip * sj + jm);
                    if covered(phi) {
                        in_acc += gain * gain;
                        in_n += 1;
                    } else {
                        out_acc += gain * gain;
                        out_n += 1;
                    }
                }
            }
            contrasts[side] = (in_acc / lit(in_n.max(1) as f64))
                / (out_acc / lit(out_n.max(1) as f64)).max(lit(1e-30));
        }

        layers.push(CodebookLayer {
            codewords: [codewords[0].clone(), codewords[1].clone()],
            cells: [cellsets[0].clone(), cellsets[1].clone()],
            contrast: [contrasts[0], contrasts[1]],
            min_margin,
        });
    }

    Ok(Codebook {
        layers,
        span,
        gain_target: design
            .gain_target
            .unwrap_or_else(|| (lit::<T>(0.8) * lit::<T>(n as f64)).sqrt()),
        epsilon: lit(0.5),
        mu_max: design.mu_max,
    })
}

/// Distance codewords: bin j's codeword is the uniform average of the
/// per-user holograms focused on (φ̂_u, μ_j), rescaled into feasibility.
pub fn design_distance_codewords<T: Real>(
    cfg: &RhsConfig<T>,
    user_phis: &[T],
    range_bins: usize,
    mu_max: T,
) -> Result<Vec<HolographicPattern<T>>> {
    if user_phis.is_empty() {
        return Err(Error::argument("need at least one user"));
    }
    if range_bins == 0 {
        return Err(Error::argument("need at least one range bin"));
    }
    let u = user_phis.len();
    let weights = vec![T::ONE / lit::<T>(u as f64); u];
    let mut out = Vec::with_capacity(range_bins);
    for j in 0..range_bins {
        let mu = bin_center_mu(j, range_bins, mu_max);
        let patterns: Vec<HolographicPattern<T>> = user_phis
            .iter()
            .map(|&phi| pattern_for_point(cfg, phi, mu))
            .collect::<Result<_>>()?;
        out.push(superpose_patterns(&patterns, &weights)?.pattern);
    }
    Ok(out)
}

/// Center μ of range bin j: bins are uniform in μ over [0, mu_max], with
/// bin 0 anchored at the far field (μ = 0).
pub fn bin_center_mu<T: Real>(j: usize, bins: usize, mu_max: T) -> T {
    if bins <= 1 {
        return T::ZERO;
    }
    mu_max * lit::<T>(j as f64) / lit((bins - 1) as f64)
}

/// μ bin index of a point (nearest bin center).
pub fn mu_bin_of<T: Real>(mu: T, bins: usize, mu_max: T) -> usize {
    let mut best = (0usize, T::INFINITY);
    for j in 0..bins {
        let d = (bin_center_mu(j, bins, mu_max) - mu).abs();
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// One training transmission record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotRecord<T: Real> {
    /// "angle:<layer>:<side>" or "dist:<bin>".
    pub codeword: String,
    /// Selected window position per user.
    pub windows: Vec<usize>,
    /// Received power per user.
    pub powers: Vec<T>,
}

/// Per-user training outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserOutcome<T: Real> {
    pub phi_hat: T,
    pub mu_hat: T,
    pub cell: CellInterval<T>,
    pub mu_bin: usize,
    /// User lay inside the codebook span.
    pub in_span: bool,
    /// Terminal cell and bin contain the true location.
    pub correct: bool,
}

/// End-to-end training trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingTrace<T: Real> {
    pub slots: Vec<SlotRecord<T>>,
    pub outcomes: Vec<UserOutcome<T>>,
    pub slots_used: usize,
    /// Relative inter-user leakage of the zero-forcing stage
    /// `max_{u≠u'} |h_uᵀ·M·b_u'| / max_u |h_uᵀ·M·b_u|`.
    pub zf_leakage: T,
}

/// Training scenario description.
#[derive(Debug, Clone)]
pub struct TrainingSetup<T: Real> {
    /// Full surface.
    pub cfg: RhsConfig<T>,
    /// Window width in columns (the active aperture N_a per row).
    pub aperture_cols: usize,
    /// Codebook designed on the window-sized aperture.
    pub codebook: Codebook<T>,
    /// Distance bins J.
    pub range_bins: usize,
    /// Feed power for probes and the final beamformer.
    pub power: T,
    /// Per-user measurement SNR in dB; `+∞` is noiseless.
    pub snr_db: T,
    /// Sliding windows on (max over positions) or off (position 0 only).
    pub windows: bool,
}

/// Runs the two-phase training for users given as (φ, μ) locations with
/// their full-surface channels. Returns the per-slot records, per-user
/// outcomes, and the zero-forcing leakage of the final beamformer.
pub fn run_training<T: Real>(
    setup: &TrainingSetup<T>,
    users: &[(PhiMuPoint<T>, DVector<Cplx<T>>)],
    seed: u64,
) -> Result<TrainingTrace<T>> {
    if users.is_empty() {
        return Err(Error::argument("need at least one user"));
    }
    let cfg = &setup.cfg;
    let local = window_config(cfg, setup.aperture_cols)?;
    let f_local = build_propagation_matrix(&local)?;
    let positions = if setup.windows {
        window_count(cfg, setup.aperture_cols)?
    } else {
        1
    };
    let mut g = rng::root(seed);
    let nu = users.len();

    // Per-user noise power referenced to the matched received power: the
    // field of the hologram focused at the user's true location, window 0.
    let noise: Vec<T> = users
        .iter()
        .map(|(point, h)| {
            if setup.snr_db == T::INFINITY {
                return Ok(T::ZERO);
            }
            let focused = pattern_for_point(&local, point.phi, point.mu)?;
            let slice = window_slice(cfg, h, setup.aperture_cols, 0);
            let matched =
                received_field(&local, &f_local, &focused, &slice, setup.power).norm_sqr();
            Ok(lit::<T>(10.0).powf(-setup.snr_db / lit(10.0)) * matched)
        })
        .collect::<Result<_>>()?;

    let mut slots = Vec::new();
    let mut measure = |codeword: &HolographicPattern<T>,
                       name: String,
                       g: &mut rng::Generator|
     -> Vec<(usize, T)> {
        let mut per_user = Vec::with_capacity(nu);
        let mut windows = Vec::with_capacity(nu);
        let mut powers = Vec::with_capacity(nu);
        for (u, (_, h)) in users.iter().enumerate() {
            let mut best = (0usize, -T::ONE);
            for k in 0..positions {
                let slice = window_slice(cfg, h, setup.aperture_cols, k);
                let field = received_field(&local, &f_local, codeword, &slice, setup.power);
                let rssi = if noise[u] == T::ZERO {
                    field.norm_sqr()
                } else {
                    (field + rng::complex_gaussian::<T>(g).scale(noise[u].sqrt())).norm_sqr()
                };
                if rssi > best.1 {
                    best = (k, rssi);
                }
            }
            windows.push(best.0);
            powers.push(best.1);
            per_user.push(best);
        }
        slots.push(SlotRecord {
            codeword: name,
            windows,
            powers,
        });
        per_user
    };

    // Angle search: one bit per layer per user.
    let mut bits: Vec<Vec<usize>> = vec![Vec::new(); nu];
    for (li, layer) in setup.codebook.layers.iter().enumerate() {
        let left = measure(&layer.codewords[0], format!("angle:{li}:0"), &mut g);
        let right = measure(&layer.codewords[1], format!("angle:{li}:1"), &mut g);
        for u in 0..nu {
            // The strongest codeword tells whether the user sits in the
            // left or right child of its current cell.
            let side = if left[u].1 >= right[u].1 { 0 } else { 1 };
            bits[u].push(side);
        }
    }
    let cells: Vec<CellInterval<T>> = (0..nu)
        .map(|u| setup.codebook.terminal_cell(&bits[u]))
        .collect();
    let phi_hats: Vec<T> = cells.iter().map(|c| c.center()).collect();

    // Distance search: J averaged codewords, one slot each.
    let dist_codewords = design_distance_codewords(
        &local,
        &phi_hats,
        setup.range_bins,
        setup.codebook.mu_max,
    )?;
    let mut best_bin: Vec<(usize, T)> = vec![(0, -T::ONE); nu];
    for (j, cw) in dist_codewords.iter().enumerate() {
        let res = measure(cw, format!("dist:{j}"), &mut g);
        for u in 0..nu {
            if res[u].1 > best_bin[u].1 {
                best_bin[u] = (j, res[u].1);
            }
        }
    }

    // Final beamformer: averaged per-user focus holograms + zero forcing.
    let finals: Vec<HolographicPattern<T>> = (0..nu)
        .map(|u| {
            pattern_for_point(
                &local,
                phi_hats[u],
                bin_center_mu(best_bin[u].0, setup.range_bins, setup.codebook.mu_max),
            )
        })
        .collect::<Result<_>>()?;
    let weights = vec![T::ONE / lit::<T>(nu as f64); nu];
    let final_pattern = superpose_patterns(&finals, &weights)?.pattern;
    let zf_leakage = zero_forcing_leakage(&local, cfg, setup, &final_pattern, users)?;

    let slots_used = 2 * setup.codebook.depth() + setup.range_bins;
    let outcomes = (0..nu)
        .map(|u| {
            let (point, _) = &users[u];
            let in_span = setup.codebook.span.contains(point.phi);
            let true_bin = mu_bin_of(point.mu, setup.range_bins, setup.codebook.mu_max);
            let correct =
                in_span && cells[u].contains(point.phi) && best_bin[u].0 == true_bin;
            UserOutcome {
                phi_hat: phi_hats[u],
                mu_hat: bin_center_mu(best_bin[u].0, setup.range_bins, setup.codebook.mu_max),
                cell: cells[u],
                mu_bin: best_bin[u].0,
                in_span,
                correct,
            }
        })
        .collect();

    Ok(TrainingTrace {
        slots,
        outcomes,
        slots_used,
        zf_leakage,
    })
}

/// Zero-forcing digital stage on the trained pattern: relative inter-user
/// leakage `max |h_uᵀMb_{u'}| / max |h_uᵀMb_u|` (u ≠ u'). Requires
/// U ≤ L.
fn zero_forcing_leakage<T: Real>(
    local: &RhsConfig<T>,
    cfg: &RhsConfig<T>,
    setup: &TrainingSetup<T>,
    pattern: &HolographicPattern<T>,
    users: &[(PhiMuPoint<T>, DVector<Cplx<T>>)],
) -> Result<T> {
    let nu = users.len();
    let feeds = local.rows;
    if nu > feeds {
        return Ok(T::INFINITY);
    }
    let f = build_propagation_matrix(local)?;
    // Effective feed-domain channels h_uᵀ·M (window at position 0).
    let mut h_eff = DMatrix::from_element(nu, feeds, czero::<T>());
    for (u, (_, h)) in users.iter().enumerate() {
        let slice = window_slice(cfg, h, setup.aperture_cols, 0);
        for i in 0..local.element_count() {
            let l = local.row_of(i);
            h_eff[(u, l)] += slice[i] * f[(i, l)].scale(pattern.amplitudes[i]);
        }
    }
    // B = H^ᴴ·(H·H^ᴴ)⁻¹.
    let hh = &h_eff * h_eff.adjoint();
    let l = match hermitian_cholesky(&hh) {
        Some(l) => l,
        None => {
            let mut ridge = hh.clone();
            let tr: T = (0..nu).map(|i| hh[(i, i)].re).fold(T::ZERO, |a, b| a + b);
            for i in 0..nu {
                ridge[(i, i)] += Cplx::new(lit::<T>(1e-14) * T::ONE.max(tr), T::ZERO);
            }
            hermitian_cholesky(&ridge)
                .ok_or_else(|| Error::argument("zero-forcing system singular"))?
        }
    };
    let mut b = DMatrix::from_element(feeds, nu, czero::<T>());
    for u in 0..nu {
        let e = DVector::from_fn(nu, |i, _| {
            if i == u {
                Cplx::new(T::ONE, T::ZERO)
            } else {
                czero::<T>()
            }
        });
        let mut y = cholesky_solve(&l, &e);
        // Iterative refinement tightens the nulls when H·Hᴴ is poorly
        // conditioned.
        for _ in 0..2 {
            let r = &e - &hh * &y;
            let dy = cholesky_solve(&l, &r);
            y += dy;
        }
        for fd in 0..feeds {
            let mut acc = czero::<T>();
            for i in 0..nu {
                acc += h_eff[(i, fd)].conj() * y[i];
            }
            b[(fd, u)] = acc;
        }
    }
    let cross = &h_eff * &b;
    let mut diag = T::ZERO;
    let mut off = T::ZERO;
    for u in 0..nu {
        for v in 0..nu {
            let m = cmod(cross[(u, v)]);
            if u == v {
                diag = diag.max(m);
            } else {
                off = off.max(m);
            }
        }
    }
    if diag <= T::ZERO {
        return Ok(T::INFINITY);
    }
    Ok(off / diag)
}

/// Samples `count` on-grid users for simulation studies: terminal-cell
/// centers from an every-other-cell comb (well-separated, distinct) with
/// bin-center μ values and distinct elevations, channels anchored at window
/// position 0.
pub fn sample_on_grid_users<T: Real>(
    setup: &TrainingSetup<T>,
    count: usize,
    seed: u64,
) -> Vec<(PhiMuPoint<T>, DVector<Cplx<T>>)> {
    let mut g = rng::root(seed);
    let cells = 1usize << setup.codebook.depth();
    let offset = (rng::uniform::<f64>(&mut g) * 2.0) as usize % 2;
    let mut comb: Vec<usize> = (0..cells / 2).map(|k| offset + 2 * k).collect();
    for i in (1..comb.len()).rev() {
        let j = (rng::uniform::<f64>(&mut g) * (i + 1) as f64) as usize % (i + 1);
        comb.swap(i, j);
    }
    let mut out = Vec::with_capacity(count);
    let depth = setup.codebook.depth();
    for u in 0..count {
        // Comb entries are φ-ordered cell positions; the refinement path
        // reads them most-significant bit first.
        let c = comb[u % comb.len()];
        let bits: Vec<usize> = (0..depth).map(|b| (c >> (depth - 1 - b)) & 1).collect();
        let cell = setup.codebook.terminal_cell(&bits);
        let j = (rng::uniform::<f64>(&mut g) * setup.range_bins as f64) as usize
            % setup.range_bins;
        let mu = bin_center_mu(j, setup.range_bins, setup.codebook.mu_max);
        let point = PhiMuPoint {
            phi: cell.center(),
            mu,
        };
        let anchor = window_anchor_z(&setup.cfg, setup.aperture_cols, 0);
        let y_cos = lit::<T>(-0.45 + 0.3 * (u as f64));
        let h = point_channel_elevated(&setup.cfg, point.phi, point.mu, y_cos, anchor);
        out.push((point, h));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const WAVELENGTH: f64 = 0.0125;

    #[test]
    fn transform_examples_and_round_trip() {
        let p = phi_mu_transform(90f64.to_radians(), Some(10.0)).unwrap();
        assert!(p.phi.abs() < 1e-15);
        assert!((p.mu - 0.1).abs() < 1e-15);

        let far = phi_mu_transform(0.7f64, None).unwrap();
        assert_eq!(far.mu, 0.0);

        let p = phi_mu_transform(60f64.to_radians(), Some(3.0)).unwrap();
        assert!((p.phi - 0.5).abs() < 1e-12);
        assert!((p.mu - 0.25).abs() < 1e-12);
        let (theta, r) = phi_mu_inverse(p);
        assert!((theta - 60f64.to_radians()).abs() < 1e-12);
        assert!((r.unwrap() - 3.0).abs() < 1e-9);

        assert!(phi_mu_transform(1.0, Some(0.0)).is_err());
    }

    #[test]
    fn transform_bijective_on_open_domain() {
        let mut g = rng::root(2);
        for _ in 0..2_000 {
            let theta = 1e-3 + rng::uniform::<f64>(&mut g) * (std::f64::consts::PI - 2e-3);
            let r = 0.1 + rng::uniform::<f64>(&mut g) * 100.0;
            let p = phi_mu_transform(theta, Some(r)).unwrap();
            let (t2, r2) = phi_mu_inverse(p);
            assert!((t2 - theta).abs() < 1e-10);
            assert!((r2.unwrap() - r).abs() / r < 1e-9);
        }
    }

    #[test]
    fn window_count_formula() {
        let cfg = RhsConfig::<f64>::linear(40, WAVELENGTH / 3.0, WAVELENGTH);
        assert_eq!(window_count(&cfg, 12).unwrap(), 29);
        assert_eq!(window_count(&cfg, 40).unwrap(), 1);
        assert!(window_count(&cfg, 41).is_err());
        for n_a in 1..=40 {
            assert_eq!(window_count(&cfg, n_a).unwrap(), 40 - n_a + 1);
        }
    }

    #[test]
    fn flat_channel_ties_resolve_to_first_window() {
        let cfg = RhsConfig::<f64>::linear(24, WAVELENGTH / 3.0, WAVELENGTH);
        let channel = DVector::from_element(24, Cplx::new(1.0, 0.0));
        let local = window_config(&cfg, 10).unwrap();
        let codeword = pattern_for_point(&local, 0.3, 0.0).unwrap();
        let (idx, p) = sliding_window_select(&cfg, 10, &channel, &codeword, 1.0).unwrap();
        assert_eq!(idx, 0);
        // All windows give the same power on a flat channel.
        let f = build_propagation_matrix(&local).unwrap();
        for k in 0..15 {
            let slice = window_slice(&cfg, &channel, 10, k);
            let pk = received_field(&local, &f, &codeword, &slice, 1.0).norm_sqr();
            assert!((pk - p).abs() < 1e-9, "window {k}");
        }
    }

    fn small_codebook(cfg: &RhsConfig<f64>, layers: usize) -> Codebook<f64> {
        let mu_step = crate::chanest::max_mu_step(cfg.cols, cfg.element_spacing, cfg.wavelength, 0.5);
        design_angle_codebook(
            cfg,
            &CodebookDesign {
                layers,
                samples: (24, 3),
                span: CellInterval { lo: -0.8, hi: 0.8 },
                mu_max: 2.0 * mu_step,
                gain_target: None,
                power: 1.0,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn codebook_cells_partition_and_contrast() {
        let cfg = RhsConfig::<f64>::linear(32, WAVELENGTH / 3.0, WAVELENGTH);
        let cb = small_codebook(&cfg, 3);
        for (li, layer) in cb.layers.iter().enumerate() {
            // Cells across both codewords are disjoint and cover the span.
            let mut edges: Vec<(f64, f64)> = layer.cells[0]
                .iter()
                .chain(layer.cells[1].iter())
                .map(|c| (c.lo, c.hi))
                .collect();
            edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            assert!((edges[0].0 - cb.span.lo).abs() < 1e-12);
            assert!((edges.last().unwrap().1 - cb.span.hi).abs() < 1e-12);
            for w in edges.windows(2) {
                assert!((w[0].1 - w[1].0).abs() < 1e-12, "gap at layer {li}");
            }
            // Design acceptance bar: in-cell mean ≥ 3× out-of-cell mean.
            assert!(
                layer.contrast[0] >= 3.0 && layer.contrast[1] >= 3.0,
                "layer {li} contrast {:?}",
                layer.contrast
            );
            assert!(layer.min_margin > 0.0, "layer {li} margin");
        }
    }

    #[test]
    fn broadside_probe_lands_in_one_cell() {
        let cfg = RhsConfig::<f64>::linear(32, WAVELENGTH / 3.0, WAVELENGTH);
        let cb = small_codebook(&cfg, 1);
        let layer = &cb.layers[0];
        let probe = 0.01; // broadside-ish φ
        let in0 = layer.cells[0].iter().any(|c| c.contains(probe));
        let in1 = layer.cells[1].iter().any(|c| c.contains(probe));
        assert!(in0 ^ in1);
    }

    #[test]
    fn distance_codewords_average_users() {
        let cfg = RhsConfig::<f64>::linear(24, WAVELENGTH / 3.0, WAVELENGTH);
        let one = design_distance_codewords(&cfg, &[0.3], 3, 0.4).unwrap();
        let dup = design_distance_codewords(&cfg, &[0.3, 0.3], 3, 0.4).unwrap();
        for (a, b) in one.iter().zip(&dup) {
            for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(design_distance_codewords(&cfg, &[], 3, 0.4).is_err());
    }

    fn training_setup(windows: bool, snr_db: f64) -> TrainingSetup<f64> {
        let cfg = RhsConfig::<f64>::new(4, 128, WAVELENGTH / 3.0, WAVELENGTH);
        let local = window_config(&cfg, 96).unwrap();
        let mu_step =
            crate::chanest::max_mu_step(96, cfg.element_spacing, cfg.wavelength, 0.5);
        let codebook = design_angle_codebook(
            &local,
            &CodebookDesign {
                layers: 3,
                samples: (24, 3),
                span: CellInterval { lo: -0.5, hi: 0.5 },
                mu_max: 2.0 * mu_step,
                gain_target: None,
                power: 1.0,
            },
            7,
        )
        .unwrap();
        TrainingSetup {
            cfg,
            aperture_cols: 96,
            codebook,
            range_bins: 3,
            power: 1.0,
            snr_db,
            windows,
        }
    }

    fn on_grid_users(
        setup: &TrainingSetup<f64>,
        count: usize,
        seed: u64,
    ) -> Vec<(PhiMuPoint<f64>, DVector<Cplx<f64>>)> {
        sample_on_grid_users(setup, count, seed)
    }

    #[test]
    fn noiseless_on_grid_training_is_exact() {
        let setup = training_setup(false, f64::INFINITY);
        for seed in 0..20 {
            for count in [1usize, 2, 4] {
                let users = on_grid_users(&setup, count, 100 + seed);
                let trace = run_training(&setup, &users, seed).unwrap();
                assert!(
                    trace.outcomes.iter().all(|o| o.correct),
                    "seed {seed} count {count}: {:?}",
                    trace
                        .outcomes
                        .iter()
                        .map(|o| (o.phi_hat, o.mu_bin, o.correct))
                        .collect::<Vec<_>>()
                );
                assert_eq!(trace.slots_used, 2 * 3 + 3);
                assert!(trace.zf_leakage <= 1e-8, "zf {}", trace.zf_leakage);
            }
        }
    }

    #[test]
    fn slots_independent_of_user_count() {
        let setup = training_setup(false, f64::INFINITY);
        let mut counts = Vec::new();
        for count in [1usize, 2, 4] {
            let users = on_grid_users(&setup, count, 55);
            let trace = run_training(&setup, &users, 3).unwrap();
            counts.push(trace.slots_used);
        }
        assert_eq!(counts[0], counts[1]);
        assert_eq!(counts[1], counts[2]);
    }

    #[test]
    fn user_outside_span_flagged() {
        let setup = training_setup(false, f64::INFINITY);
        let anchor = window_anchor_z(&setup.cfg, setup.aperture_cols, 0);
        let h = point_channel_anchored(&setup.cfg, 0.95, 0.0, anchor);
        let users = vec![(PhiMuPoint { phi: 0.95, mu: 0.0 }, h)];
        let trace = run_training(&setup, &users, 1).unwrap();
        assert!(!trace.outcomes[0].in_span);
        assert!(!trace.outcomes[0].correct);
    }

    #[test]
    fn windows_reduce_training_error_in_fading() {
        // Rician channel at moderate SNR: selection over window positions
        // must strictly lower the per-user error rate.
        let on = training_setup(true, 8.0);
        let off = training_setup(false, 8.0);
        let trials = 120;
        let mut err_on = 0usize;
        let mut err_off = 0usize;
        for t in 0..trials {
            let users_spec = on_grid_users(&on, 2, 900 + t);
            let users: Vec<_> = users_spec
                .iter()
                .map(|(p, _)| {
                    let h = rician_channel(&on.cfg, *p, 3.0, 6, 7000 + t);
                    (*p, h)
                })
                .collect();
            let ta = run_training(&on, &users, 10_000 + t).unwrap();
            let tb = run_training(&off, &users, 10_000 + t).unwrap();
            err_on += ta.outcomes.iter().filter(|o| !o.correct).count();
            err_off += tb.outcomes.iter().filter(|o| !o.correct).count();
        }
        assert!(
            err_on < err_off,
            "windows on had {err_on} errors vs off {err_off}"
        );
    }

    #[test]
    fn throughput_non_increasing_in_depth() {
        // More layers consume more slots; with fixed rates the net
        // throughput cannot grow.
        let rates = [4.0f64, 3.0];
        let frame = 200;
        let mut prev = f64::INFINITY;
        for layers in 1..=5 {
            let slots = 2 * layers + 4;
            let eta = crate::metrics::throughput(slots, frame, &rates).unwrap();
            assert!(eta <= prev + 1e-12);
            prev = eta;
        }
    }
}
