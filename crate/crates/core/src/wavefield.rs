//! Steering vectors, the near/far-field boundary, hybrid channels, and
//! radiated beampatterns.
//!
//! Two steering conventions coexist, each faithful to its own use:
//!
//! * [`steering`] — 1-D linear array, broadside-referenced angle ϑ with
//!   phase gradient `sinϑ` (the channel-estimation convention). This is the
//!   default test geometry.
//! * [`planar_steering`] — the full RHS aperture in the y–z plane with a
//!   spherical [`Direction`]; for a single row along z the gradient is
//!   `cosθ`, which is the axis-referenced convention of the (φ, μ) domain.
//!
//! The two meet at `sinϑ = cosθ` (see the crate docs).

use crate::error::Error;
use crate::rhs::{ApertureWindow, Beamformer, RhsConfig};
use crate::rng;
use crate::scalar::{cis, czero, lit, Cplx, Real};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Spherical direction: `theta` is the polar angle from +z (the feed axis),
/// `phi` the azimuth from boresight +x toward +y. Radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction<T: Real> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> Direction<T> {
    pub fn new(theta: T, phi: T) -> Self {
        Direction { theta, phi }
    }

    /// Boresight (+x): θ = 90°, φ = 0.
    pub fn broadside() -> Self {
        Direction {
            theta: T::frac_pi_2(),
            phi: T::ZERO,
        }
    }

    /// Maps a broadside-referenced 1-D angle ϑ (positive toward +z) onto the
    /// spherical convention: θ = 90° − ϑ, φ = 0.
    pub fn from_broadside(angle: T) -> Self {
        Direction {
            theta: T::frac_pi_2() - angle,
            phi: T::ZERO,
        }
    }

    /// Direction cosines along (y, z): the transverse phase gradients of a
    /// plane wave over the aperture.
    pub fn transverse_cosines(&self) -> (T, T) {
        (self.theta.sin() * self.phi.sin(), self.theta.cos())
    }
}

/// One propagation path of a hybrid channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpec<T: Real> {
    /// Broadside-referenced arrival angle ϑ, radians.
    pub angle: T,
    /// Range in meters for near-field paths; `None` marks a far-field path.
    pub range: Option<T>,
    /// Complex gain; `None` draws CN(0, 1) from the seeded generator.
    pub gain: Option<Cplx<T>>,
}

impl<T: Real> PathSpec<T> {
    pub fn far(angle: T, gain: Option<Cplx<T>>) -> Self {
        PathSpec {
            angle,
            range: None,
            gain,
        }
    }

    pub fn near(angle: T, range: T, gain: Option<Cplx<T>>) -> Self {
        PathSpec {
            angle,
            range: Some(range),
            gain,
        }
    }

    pub fn is_near(&self) -> bool {
        self.range.is_some()
    }
}

/// Multipath channel mixing far-field and near-field components,
/// `h = Σ g_k·a(ϑ_k) + Σ g_k·b(ϑ_k, r_k)`.
#[derive(Debug, Clone)]
pub struct HybridChannel<T: Real> {
    /// Paths with their realized gains.
    pub paths: Vec<PathSpec<T>>,
    /// Element count N.
    pub element_count: usize,
    /// The evaluated channel vector.
    pub h: DVector<Cplx<T>>,
}

/// One point of a sampled beampattern.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BeampatternSample<T: Real> {
    pub direction: Direction<T>,
    /// Radiated power toward the direction, watts.
    pub power: T,
}

/// 1-D steering vector of an N-element linear array, unit Euclidean norm.
///
/// Far field (`range = None`): entries `e^{j·2π·n·d·sinϑ/λ}/√N`. Near
/// field: the source sits at distance `r` from the *array center* (so ±ϑ
/// behave symmetrically) and entries carry the exact spherical delays
/// `e^{−j·2π·(r_n − r_0)/λ}/√N`, phase-anchored at element 0 so the
/// far-field limit matches the planar vector entry-wise.
pub fn steering<T: Real>(
    n: usize,
    spacing: T,
    wavelength: T,
    angle: T,
    range: Option<T>,
) -> DVector<Cplx<T>> {
    assert!(n >= 1, "steering needs at least one element");
    let norm = T::ONE / lit::<T>(n as f64).sqrt();
    let k0 = T::two_pi() / wavelength;
    let s = angle.sin();
    match range {
        None => DVector::from_fn(n, |i, _| {
            cis(k0 * lit::<T>(i as f64) * spacing * s).scale(norm)
        }),
        Some(r) => {
            assert!(r > T::ZERO, "near-field range must be positive");
            let center = lit::<T>((n - 1) as f64) / lit(2.0) * spacing;
            let dist = |x: T| {
                let off = x - center;
                (r * r - lit::<T>(2.0) * r * off * s + off * off).sqrt()
            };
            let r0 = dist(T::ZERO);
            DVector::from_fn(n, |i, _| {
                let rn = dist(lit::<T>(i as f64) * spacing);
                cis(-k0 * (rn - r0)).scale(norm)
            })
        }
    }
}

/// Plane-wave steering vector over the full RHS aperture for a spherical
/// direction, unit norm, ordered like the element index.
pub fn planar_steering<T: Real>(cfg: &RhsConfig<T>, direction: Direction<T>) -> DVector<Cplx<T>> {
    let n = cfg.element_count();
    let norm = T::ONE / lit::<T>(n as f64).sqrt();
    let k0 = cfg.free_wavenumber();
    let (ky, kz) = direction.transverse_cosines();
    DVector::from_fn(n, |i, _| {
        let (y, z) = cfg.element_position(cfg.row_of(i), cfg.col_of(i));
        cis(k0 * (ky * y + kz * z)).scale(norm)
    })
}

/// Rayleigh distance `2D²/λ` separating near and far field.
pub fn rayleigh_distance<T: Real>(aperture: T, wavelength: T) -> T {
    lit::<T>(2.0) * aperture * aperture / wavelength
}

/// Evaluates the radiated beampattern `P(dir) = ‖a(dir)ᵀ·D·M·B‖²` on a grid
/// of directions. Grid points are independent; evaluation is partitioned
/// across threads and assembled in grid order.
pub fn beampattern<T: Real>(
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    digital: &DMatrix<Cplx<T>>,
    grid: &[Direction<T>],
) -> Result<Vec<BeampatternSample<T>>> {
    if grid.is_empty() {
        return Err(Error::argument("beampattern grid must be non-empty"));
    }
    if digital.nrows() != bf.feed_count() {
        return Err(Error::argument(format!(
            "digital beamformer has {} rows, expected {} feeds",
            digital.nrows(),
            bf.feed_count()
        )));
    }
    window.validate(&bf.cfg)?;
    let effective = masked_effective_matrix(bf, window, digital);
    let samples = grid
        .par_iter()
        .map(|&direction| BeampatternSample {
            direction,
            power: direction_power(&bf.cfg, &effective, direction),
        })
        .collect();
    Ok(samples)
}

/// D·M·B for fixed window and digital beamformer (N×K).
pub(crate) fn masked_effective_matrix<T: Real>(
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    digital: &DMatrix<Cplx<T>>,
) -> DMatrix<Cplx<T>> {
    let n = bf.element_count();
    let k = digital.ncols();
    let mut out = DMatrix::from_element(n, k, czero::<T>());
    for i in 0..n {
        let l = bf.cfg.row_of(i);
        let m = bf.matrix[(i, l)].scale(window.mask(&bf.cfg, i));
        for c in 0..k {
            out[(i, c)] = m * digital[(l, c)];
        }
    }
    out
}

/// `‖a(dir)ᵀ·E‖²` for an effective element-domain matrix E = D·M·B.
pub(crate) fn direction_power<T: Real>(
    cfg: &RhsConfig<T>,
    effective: &DMatrix<Cplx<T>>,
    direction: Direction<T>,
) -> T {
    let a = planar_steering(cfg, direction);
    let mut power = T::ZERO;
    for c in 0..effective.ncols() {
        let mut acc = czero::<T>();
        for i in 0..effective.nrows() {
            acc += a[i] * effective[(i, c)];
        }
        power += acc.norm_sqr();
    }
    power
}

/// Synthesizes a hybrid channel from path specs; unspecified gains are drawn
/// CN(0, 1) from the seeded generator, so the result is deterministic per
/// seed.
pub fn synth_channel<T: Real>(
    spec: &[PathSpec<T>],
    n: usize,
    spacing: T,
    wavelength: T,
    seed: u64,
) -> Result<HybridChannel<T>> {
    if spec.is_empty() {
        return Err(Error::argument("channel needs at least one path"));
    }
    if n == 0 {
        return Err(Error::argument("element count must be positive"));
    }
    let mut g = rng::root(seed);
    let mut paths = Vec::with_capacity(spec.len());
    let mut h = DVector::from_element(n, czero::<T>());
    for p in spec {
        if let Some(r) = p.range {
            if r <= T::ZERO {
                return Err(Error::argument("near-field range must be positive"));
            }
        }
        let gain = p.gain.unwrap_or_else(|| rng::complex_gaussian(&mut g));
        let v = steering(n, spacing, wavelength, p.angle, p.range);
        h += v.map(|x| x * gain);
        paths.push(PathSpec {
            angle: p.angle,
            range: p.range,
            gain: Some(gain),
        });
    }
    Ok(HybridChannel {
        paths,
        element_count: n,
        h,
    })
}
