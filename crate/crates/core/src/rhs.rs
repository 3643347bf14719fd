//! RHS geometry, reference-wave propagation, holographic patterns, leakage
//! accounting, and the feed-to-radiation map.
//!
//! An RHS is a leaky-wave antenna: each feed launches a guided reference
//! wave along its row, and every sub-wavelength element radiates an
//! amplitude-tunable portion of it. The per-element amplitudes `ψ_n ∈ [0, 1]`
//! form the *holographic pattern*, the sole physical control of the surface.
//!
//! See the crate-level docs for the coordinate convention. Element linear
//! index is `n = iz·rows + iy` (rows vary fastest), matching the feed layout
//! where row `iy` is excited by feed `l = iy`.

use crate::error::Error;
use crate::scalar::{cis, czero, lit, Cplx, Real};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// RHS geometry, feeds, and waveguide constants.
///
/// `feed_count` must equal `rows`: one serial feed per row. `power_split`
/// holds the per-row energy ratio χ delivered by the row's own feed (zero
/// off-row by construction); an empty vector means χ = 1 for every row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig<T: Real> {
    /// Number of rows N_y (one feed each).
    pub rows: usize,
    /// Number of columns N_z (elements per row along the waveguide).
    pub cols: usize,
    /// Inter-element spacing d_e in meters.
    pub element_spacing: T,
    /// Free-space wavelength λ in meters.
    pub wavelength: T,
    /// Waveguide refractive index n_wg, so the guided wavenumber is
    /// k_s = 2π·n_wg/λ.
    #[serde(default = "default_waveguide_index")]
    pub waveguide_index: T,
    /// Propagation loss factor α in nepers/meter.
    #[serde(default = "default_attenuation")]
    pub attenuation: T,
    /// Number of feeds L; must equal `rows`.
    #[serde(default)]
    pub feed_count: usize,
    /// Per-row power split χ ∈ (0, 1]; empty means 1 everywhere.
    #[serde(default)]
    pub power_split: Vec<T>,
}

fn default_waveguide_index<T: Real>() -> T {
    lit::<T>(3.0).sqrt()
}

fn default_attenuation<T: Real>() -> T {
    lit(3.0)
}

impl<T: Real> RhsConfig<T> {
    /// A config with the default waveguide index √3 and attenuation 3 Np/m.
    pub fn new(rows: usize, cols: usize, element_spacing: T, wavelength: T) -> Self {
        RhsConfig {
            rows,
            cols,
            element_spacing,
            wavelength,
            waveguide_index: default_waveguide_index(),
            attenuation: default_attenuation(),
            feed_count: rows,
            power_split: Vec::new(),
        }
    }

    /// Single-row surface (one feed), the default test geometry.
    pub fn linear(cols: usize, element_spacing: T, wavelength: T) -> Self {
        Self::new(1, cols, element_spacing, wavelength)
    }

    /// Total element count N = rows·cols.
    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Power split χ for a row (1 when unspecified).
    pub fn chi(&self, row: usize) -> T {
        if self.power_split.is_empty() {
            T::ONE
        } else {
            self.power_split[row]
        }
    }

    /// Row index (= feed index) of the linear element index `n`.
    pub fn row_of(&self, n: usize) -> usize {
        n % self.rows
    }

    /// Column index of the linear element index `n`.
    pub fn col_of(&self, n: usize) -> usize {
        n / self.rows
    }

    /// Linear index of element `(iy, iz)`.
    pub fn index_of(&self, iy: usize, iz: usize) -> usize {
        iz * self.rows + iy
    }

    /// Position of element `(iy, iz)` in the y–z plane, meters.
    pub fn element_position(&self, iy: usize, iz: usize) -> (T, T) {
        (
            lit::<T>(iy as f64) * self.element_spacing,
            lit::<T>(iz as f64) * self.element_spacing,
        )
    }

    /// Guided wavenumber k_s = 2π·n_wg/λ.
    pub fn guided_wavenumber(&self) -> T {
        T::two_pi() * self.waveguide_index / self.wavelength
    }

    /// Free-space wavenumber k₀ = 2π/λ.
    pub fn free_wavenumber(&self) -> T {
        T::two_pi() / self.wavelength
    }

    /// Distance from row feed to element column `iz` along the waveguide.
    pub fn feed_distance(&self, iz: usize) -> T {
        lit::<T>(iz as f64) * self.element_spacing
    }

    /// Power-extraction ratio η of element `(iy, iz)` toward its own feed,
    /// η = χ·e^{−2α·|r|}.
    pub fn eta(&self, iy: usize, iz: usize) -> T {
        let r = self.feed_distance(iz);
        self.chi(iy) * (-lit::<T>(2.0) * self.attenuation * r).exp()
    }

    /// Physical aperture length along a row, `(cols − 1)·d_e`.
    pub fn row_aperture(&self) -> T {
        lit::<T>((self.cols.max(1) - 1) as f64) * self.element_spacing
    }

    /// Validates the configuration.
    ///
    /// Hard errors: non-positive dimensions/spacing/wavelength, feed count
    /// different from rows, attenuation outside the typical [1, 10] Np/m
    /// range, power split outside (0, 1]. Spacing above λ/2 is legal but
    /// reported as a warning.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::config("rows and cols must be positive"));
        }
        if self.element_spacing <= T::ZERO {
            return Err(Error::config("element_spacing must be positive"));
        }
        if self.wavelength <= T::ZERO {
            return Err(Error::config("wavelength must be positive"));
        }
        if self.waveguide_index <= T::ZERO {
            return Err(Error::config("waveguide_index must be positive"));
        }
        if self.feed_count != 0 && self.feed_count != self.rows {
            return Err(Error::config(format!(
                "feed_count {} must equal rows {} (one serial feed per row)",
                self.feed_count, self.rows
            )));
        }
        if self.attenuation < T::ONE || self.attenuation > lit(10.0) {
            return Err(Error::config(format!(
                "attenuation {:?} outside the typical range [1, 10] nepers/m",
                self.attenuation
            )));
        }
        if !self.power_split.is_empty() {
            if self.power_split.len() != self.rows {
                return Err(Error::config("power_split length must equal rows"));
            }
            for &chi in &self.power_split {
                if chi <= T::ZERO || chi > T::ONE {
                    return Err(Error::config("power_split entries must lie in (0, 1]"));
                }
            }
        }
        let mut warnings = Vec::new();
        if self.element_spacing > self.wavelength / lit(2.0) {
            warnings.push(format!(
                "element_spacing exceeds λ/2 ({:?} > {:?}); RHS elements are usually denser",
                self.element_spacing,
                self.wavelength / lit(2.0)
            ));
        }
        Ok(warnings)
    }
}

/// Per-element radiation amplitude vector ψ ∈ [0, 1]^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolographicPattern<T: Real> {
    pub amplitudes: Vec<T>,
}

impl<T: Real> HolographicPattern<T> {
    pub fn new(amplitudes: Vec<T>) -> Self {
        HolographicPattern { amplitudes }
    }

    /// All-zero (dark) pattern.
    pub fn dark(n: usize) -> Self {
        HolographicPattern {
            amplitudes: vec![T::ZERO; n],
        }
    }

    /// All-ones pattern.
    pub fn full(n: usize) -> Self {
        HolographicPattern {
            amplitudes: vec![T::ONE; n],
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Checks the amplitude box ψ_n ∈ [0, 1].
    pub fn in_box(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|&a| a >= T::ZERO && a <= T::ONE)
    }
}

/// Contiguous effective aperture per row: 1-based inclusive element column
/// indices `start[iy] ..= end[iy]`, yielding the binary mask d_n.
///
/// The sentinel `(0, 0)` excludes a row entirely; otherwise
/// `1 ≤ start ≤ end ≤ cols` must hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApertureWindow {
    pub start: Vec<usize>,
    pub end: Vec<usize>,
}

impl ApertureWindow {
    /// The full aperture of a surface.
    pub fn full<T: Real>(cfg: &RhsConfig<T>) -> Self {
        ApertureWindow {
            start: vec![1; cfg.rows],
            end: vec![cfg.cols; cfg.rows],
        }
    }

    /// Same contiguous span on every row (1-based inclusive).
    pub fn uniform(rows: usize, start: usize, end: usize) -> Self {
        ApertureWindow {
            start: vec![start; rows],
            end: vec![end; rows],
        }
    }

    /// Whether column `iz` (0-based) of row `iy` is active.
    pub fn contains(&self, iy: usize, iz: usize) -> bool {
        self.start[iy] != 0 && iz + 1 >= self.start[iy] && iz + 1 <= self.end[iy]
    }

    /// Mask value d_n ∈ {0, 1} for a linear element index.
    pub fn mask<T: Real>(&self, cfg: &RhsConfig<T>, n: usize) -> T {
        if self.contains(cfg.row_of(n), cfg.col_of(n)) {
            T::ONE
        } else {
            T::ZERO
        }
    }

    /// Full mask vector over all elements.
    pub fn mask_vector<T: Real>(&self, cfg: &RhsConfig<T>) -> DVector<T> {
        DVector::from_fn(cfg.element_count(), |n, _| self.mask(cfg, n))
    }

    /// Number of active elements.
    pub fn active_count<T: Real>(&self, cfg: &RhsConfig<T>) -> usize {
        (0..cfg.element_count())
            .filter(|&n| self.contains(cfg.row_of(n), cfg.col_of(n)))
            .count()
    }

    pub fn validate<T: Real>(&self, cfg: &RhsConfig<T>) -> Result<()> {
        if self.start.len() != cfg.rows || self.end.len() != cfg.rows {
            return Err(Error::argument("window must specify every row"));
        }
        for iy in 0..cfg.rows {
            let (s, e) = (self.start[iy], self.end[iy]);
            if s == 0 && e == 0 {
                continue; // row excluded
            }
            if !(1 <= s && s <= e && e <= cfg.cols) {
                return Err(Error::argument(format!(
                    "window row {iy}: need 1 ≤ start ≤ end ≤ {} (got {s}..={e})",
                    cfg.cols
                )));
            }
        }
        Ok(())
    }
}

/// Builds the reference-wave propagation matrix F (N×L).
///
/// Entry `(n, l)` is `w·e^{−j·k_s·|r|}` with `w = √χ·e^{−α·|r|}` when the
/// element's row equals `l`, zero otherwise; `|r|` is the along-row distance
/// from the feed to the element.
pub fn build_propagation_matrix<T: Real>(cfg: &RhsConfig<T>) -> Result<DMatrix<Cplx<T>>> {
    cfg.validate()?;
    let n = cfg.element_count();
    let ks = cfg.guided_wavenumber();
    let mut f = DMatrix::from_element(n, cfg.rows, czero::<T>());
    for iy in 0..cfg.rows {
        let chi_amp = cfg.chi(iy).sqrt();
        for iz in 0..cfg.cols {
            let r = cfg.feed_distance(iz);
            let w = chi_amp * (-cfg.attenuation * r).exp();
            f[(cfg.index_of(iy, iz), iy)] = cis(-ks * r) * w;
        }
    }
    Ok(f)
}

/// Holographic beamformer M = diag(ψ)·F mapping L feed signals to N
/// radiated signals.
#[derive(Debug, Clone)]
pub struct Beamformer<T: Real> {
    /// M = diag(ψ)·F.
    pub matrix: DMatrix<Cplx<T>>,
    /// The holographic pattern ψ.
    pub pattern: HolographicPattern<T>,
    /// Reference-wave propagation matrix F.
    pub propagation: DMatrix<Cplx<T>>,
    /// Geometry the beamformer was built for.
    pub cfg: RhsConfig<T>,
}

impl<T: Real> Beamformer<T> {
    pub fn new(cfg: &RhsConfig<T>, pattern: HolographicPattern<T>) -> Result<Self> {
        if pattern.len() != cfg.element_count() {
            return Err(Error::argument(format!(
                "pattern length {} does not match element count {}",
                pattern.len(),
                cfg.element_count()
            )));
        }
        if !pattern.in_box() {
            return Err(Error::argument("pattern amplitudes must lie in [0, 1]"));
        }
        let propagation = build_propagation_matrix(cfg)?;
        let mut matrix = propagation.clone();
        for n in 0..pattern.len() {
            let a = pattern.amplitudes[n];
            for l in 0..cfg.rows {
                matrix[(n, l)] = matrix[(n, l)].scale(a);
            }
        }
        Ok(Beamformer {
            matrix,
            pattern,
            propagation,
            cfg: cfg.clone(),
        })
    }

    /// Number of feeds L.
    pub fn feed_count(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of elements N.
    pub fn element_count(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Holographic pattern steering a plane object wave toward `direction`.
///
/// The object wave is a unit-amplitude plane wave, the reference wave the
/// guided wave of each element's own feed (launch phase 0 at the feed), and
/// `ψ_n = (Re[Ψ_o·Ψ_r*] + 1)/2` maps their interference into [0, 1].
pub fn pattern_for_direction<T: Real>(
    cfg: &RhsConfig<T>,
    direction: crate::wavefield::Direction<T>,
) -> Result<HolographicPattern<T>> {
    cfg.validate()?;
    let k0 = cfg.free_wavenumber();
    let ks = cfg.guided_wavenumber();
    let (ky, kz) = direction.transverse_cosines();
    let mut amplitudes = vec![T::ZERO; cfg.element_count()];
    for iy in 0..cfg.rows {
        for iz in 0..cfg.cols {
            let (y, z) = cfg.element_position(iy, iz);
            // Outgoing plane wave toward the direction, sampled at the element.
            let object_phase = -k0 * (ky * y + kz * z);
            let reference_phase = -ks * cfg.feed_distance(iz);
            let diff = object_phase - reference_phase;
            amplitudes[cfg.index_of(iy, iz)] = (diff.cos() + T::ONE) / lit(2.0);
        }
    }
    Ok(HolographicPattern::new(amplitudes))
}

/// Holographic pattern focusing on a (φ, μ) point in the x–z plane.
///
/// For μ = 0 this is the plane-wave pattern at axis angle θ = acos(φ);
/// otherwise the object wave is the exact spherical wave from the point at
/// range r = (1 − φ²)/μ. Used by near-field codewords in beam training.
pub fn pattern_for_point<T: Real>(cfg: &RhsConfig<T>, phi: T, mu: T) -> Result<HolographicPattern<T>> {
    cfg.validate()?;
    if phi < -T::ONE || phi > T::ONE {
        return Err(Error::argument("phi must lie in [-1, 1]"));
    }
    if mu < T::ZERO {
        return Err(Error::argument("mu must be non-negative"));
    }
    let k0 = cfg.free_wavenumber();
    let ks = cfg.guided_wavenumber();
    let sin_sq = T::ONE - phi * phi;
    // Ranges are measured from the aperture center so that ±φ behave
    // symmetrically.
    let (yc, zc) = (
        lit::<T>((cfg.rows - 1) as f64) / lit(2.0) * cfg.element_spacing,
        lit::<T>((cfg.cols - 1) as f64) / lit(2.0) * cfg.element_spacing,
    );
    let mut amplitudes = vec![T::ZERO; cfg.element_count()];
    for iy in 0..cfg.rows {
        for iz in 0..cfg.cols {
            let (y, z) = cfg.element_position(iy, iz);
            let object_phase = if mu == T::ZERO {
                -k0 * phi * (z - zc)
            } else {
                // Focal point at range r from the center along
                // (sinθ, cosθ) = (√(1−φ²), φ) in x–z; the object wave
                // converges on it.
                let r = sin_sq / mu;
                let sx = r * sin_sq.sqrt();
                let sz = zc + r * phi;
                let d = (sx * sx + (yc - y) * (yc - y) + (sz - z) * (sz - z)).sqrt();
                k0 * (d - r)
            };
            let reference_phase = -ks * cfg.feed_distance(iz);
            let diff = object_phase - reference_phase;
            amplitudes[cfg.index_of(iy, iz)] = (diff.cos() + T::ONE) / lit(2.0);
        }
    }
    Ok(HolographicPattern::new(amplitudes))
}

/// Outcome of [`superpose_patterns`]: the feasible pattern plus whether a
/// uniform rescale was applied.
#[derive(Debug, Clone)]
pub struct Superposition<T: Real> {
    pub pattern: HolographicPattern<T>,
    pub rescaled: bool,
    /// Max raw amplitude before rescaling.
    pub raw_max: T,
}

/// Weighted superposition ψ = Σ_s ζ_s·ψ_s of holographic patterns.
///
/// If the raw sum exceeds 1 anywhere the whole pattern is divided by its max
/// entry, preserving the relative shape. Negative raw entries (possible with
/// negative weights) are clamped to 0 after the rescale.
pub fn superpose_patterns<T: Real>(
    patterns: &[HolographicPattern<T>],
    weights: &[T],
) -> Result<Superposition<T>> {
    if patterns.is_empty() {
        return Err(Error::argument("superposition needs at least one pattern"));
    }
    if patterns.len() != weights.len() {
        return Err(Error::argument("one weight per pattern required"));
    }
    let n = patterns[0].len();
    if patterns.iter().any(|p| p.len() != n) {
        return Err(Error::argument("patterns must have equal lengths"));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::argument("weights must be finite"));
    }
    let mut raw = vec![T::ZERO; n];
    for (p, &w) in patterns.iter().zip(weights) {
        for (r, &a) in raw.iter_mut().zip(&p.amplitudes) {
            *r += w * a;
        }
    }
    let raw_max = raw.iter().copied().fold(T::ZERO, T::max);
    let rescaled = raw_max > T::ONE;
    let scale = if rescaled { raw_max } else { T::ONE };
    let amplitudes = raw
        .into_iter()
        .map(|r| (r / scale).clamp(T::ZERO, T::ONE))
        .collect();
    Ok(Superposition {
        pattern: HolographicPattern::new(amplitudes),
        rescaled,
        raw_max,
    })
}

/// Snaps every amplitude to the nearest point of the discrete set
/// `{0, 1/(C−1), …, 1}`; midpoint ties round down so quantization never
/// increases an amplitude past its nearest upper neighbor.
pub fn quantize_pattern<T: Real>(
    pattern: &HolographicPattern<T>,
    levels: usize,
) -> Result<HolographicPattern<T>> {
    if levels < 2 {
        return Err(Error::argument("quantization needs at least 2 levels"));
    }
    let step = T::ONE / lit::<T>((levels - 1) as f64);
    let half = lit::<T>(0.5);
    let amplitudes = pattern
        .amplitudes
        .iter()
        .map(|&a| {
            let t = (a / step).clamp(T::ZERO, lit((levels - 1) as f64));
            let lower = t.floor();
            let frac = t - lower;
            // Tie at the midpoint rounds down.
            let idx = if frac > half { lower + T::ONE } else { lower };
            idx * step
        })
        .collect();
    Ok(HolographicPattern::new(amplitudes))
}

/// Per-row leakage slack `1 − Σ_z ψ²·d·η`.
///
/// A row is feasible when its slack is ≥ −1e−9; η includes the aperture
/// mask d so deactivated elements draw no power.
pub fn leakage_margins<T: Real>(
    cfg: &RhsConfig<T>,
    pattern: &HolographicPattern<T>,
    window: &ApertureWindow,
) -> Result<Vec<T>> {
    if pattern.len() != cfg.element_count() {
        return Err(Error::argument("pattern length mismatch"));
    }
    window.validate(cfg)?;
    let mut slack = vec![T::ONE; cfg.rows];
    for iy in 0..cfg.rows {
        let mut used = T::ZERO;
        for iz in 0..cfg.cols {
            if window.contains(iy, iz) {
                let a = pattern.amplitudes[cfg.index_of(iy, iz)];
                used += a * a * cfg.eta(iy, iz);
            }
        }
        slack[iy] = T::ONE - used;
    }
    Ok(slack)
}

/// Tolerance on leakage slack used across the crate.
pub fn leakage_tolerance<T: Real>() -> T {
    lit(1e-9)
}

/// Whether a pattern satisfies the box and every per-row leakage cap.
pub fn pattern_feasible<T: Real>(
    cfg: &RhsConfig<T>,
    pattern: &HolographicPattern<T>,
    window: &ApertureWindow,
) -> bool {
    pattern.in_box()
        && leakage_margins(cfg, pattern, window)
            .map(|s| s.iter().all(|&v| v >= -leakage_tolerance::<T>()))
            .unwrap_or(false)
}

/// Radiates feed signals through the masked beamformer: y = D·M·x, i.e.
/// `y_n = d_n·ψ_n·F_{n,l(n)}·x_{l(n)}`.
pub fn apply_beamformer<T: Real>(
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    feed_signals: &DVector<Cplx<T>>,
) -> Result<DVector<Cplx<T>>> {
    if feed_signals.len() != bf.feed_count() {
        return Err(Error::argument(format!(
            "expected {} feed signals, got {}",
            bf.feed_count(),
            feed_signals.len()
        )));
    }
    window.validate(&bf.cfg)?;
    let n = bf.element_count();
    let mut y = DVector::from_element(n, czero::<T>());
    for i in 0..n {
        let l = bf.cfg.row_of(i);
        y[i] = bf.matrix[(i, l)] * feed_signals[l] * Cplx::new(window.mask(&bf.cfg, i), T::ZERO);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::wavefield::Direction;

    const TOL: f64 = 1e-12;

    fn table2_cfg() -> RhsConfig<f64> {
        // 50 elements, λ/3 spacing, α = 3, n_wg = √3.
        let wavelength = 0.0125f64;
        RhsConfig::linear(50, wavelength / 3.0, wavelength)
    }

    #[test]
    fn propagation_single_element_at_feed() {
        let cfg = RhsConfig::<f64>::new(1, 1, 0.01, 0.03);
        let f = build_propagation_matrix(&cfg).unwrap();
        assert_eq!(f.shape(), (1, 1));
        assert!((f[(0, 0)].re - 1.0).abs() < TOL);
        assert!(f[(0, 0)].im.abs() < TOL);
    }

    #[test]
    fn propagation_half_guided_wavelength_phase() {
        // d_e = λ_g/2 where λ_g = λ/n_wg: second entry at phase e^{−jπ}.
        let wavelength = 0.03f64;
        let n_wg = 3.0f64.sqrt();
        let d = wavelength / n_wg / 2.0;
        let cfg = RhsConfig::linear(2, d, wavelength);
        let f = build_propagation_matrix(&cfg).unwrap();
        let expected_mag = (-cfg.attenuation * d).exp();
        let e = f[(1, 0)];
        assert!((e.norm() - expected_mag).abs() < TOL, "mag {}", e.norm());
        assert!((e.re + expected_mag).abs() < TOL, "re {}", e.re);
        assert!(e.im.abs() < 1e-10, "im {}", e.im);
    }

    #[test]
    fn propagation_column_profile_matches_direct_evaluation() {
        // Oracle: element-wise re-evaluation of √χ·e^{−α·n·d_e}.
        let cfg = table2_cfg();
        let f = build_propagation_matrix(&cfg).unwrap();
        for iz in 0..cfg.cols {
            let expected = (-cfg.attenuation * iz as f64 * cfg.element_spacing).exp();
            let got = f[(cfg.index_of(0, iz), 0)].norm();
            assert!((got - expected).abs() < TOL, "col {iz}: {got} vs {expected}");
        }
    }

    #[test]
    fn propagation_magnitude_decays_along_rows() {
        let mut cfg = RhsConfig::new(3, 20, 0.004, 0.0125);
        cfg.power_split = vec![1.0, 0.5, 0.25];
        let f = build_propagation_matrix(&cfg).unwrap();
        for iy in 0..cfg.rows {
            let mut prev = f64::INFINITY;
            for iz in 0..cfg.cols {
                let mag = f[(cfg.index_of(iy, iz), iy)].norm();
                assert!(mag <= prev + TOL);
                assert!(mag <= 1.0 + TOL);
                prev = mag;
            }
            // Off-row entries are zero.
            for l in 0..cfg.rows {
                if l != iy {
                    assert_eq!(f[(cfg.index_of(iy, 0), l)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn propagation_rejects_bad_config() {
        let cfg = RhsConfig::<f64>::linear(4, -0.01, 0.03);
        assert!(matches!(
            build_propagation_matrix(&cfg),
            Err(Error::Config(_))
        ));
        let cfg = RhsConfig::<f64>::linear(4, 0.01, 0.0);
        assert!(build_propagation_matrix(&cfg).is_err());
    }

    #[test]
    fn config_attenuation_range_enforced() {
        let mut cfg = table2_cfg();
        cfg.attenuation = 0.5;
        assert!(cfg.validate().is_err());
        cfg.attenuation = 10.5;
        assert!(cfg.validate().is_err());
        cfg.attenuation = 10.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn config_wide_spacing_warns() {
        let cfg = RhsConfig::<f64>::linear(4, 0.02, 0.03); // d > λ/2
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn pattern_phase_coincidence_examples() {
        // Phase match → 1, anti-phase → 0, quadrature → 0.5. Pick a 1×1
        // surface where the element is at the feed: the reference phase is 0
        // and the object phase is set through the direction.
        let cfg = RhsConfig::<f64>::new(1, 1, 0.01, 0.03);
        let p = pattern_for_direction(&cfg, Direction::broadside()).unwrap();
        assert!((p.amplitudes[0] - 1.0).abs() < TOL);

        // Two-element row, quarter guided wavelength spacing: reference
        // phases 0 and −π/2. A broadside object wave (phase 0 on the row)
        // leaves differences of 0 and π/2.
        let wavelength = 0.03f64;
        let n_wg = 3.0f64.sqrt();
        let d = wavelength / n_wg / 4.0;
        let cfg = RhsConfig::linear(2, d, wavelength);
        let p = pattern_for_direction(&cfg, Direction::broadside()).unwrap();
        assert!((p.amplitudes[0] - 1.0).abs() < TOL);
        assert!((p.amplitudes[1] - 0.5).abs() < TOL);

        // Half guided wavelength: difference π → amplitude 0.
        let cfg = RhsConfig::linear(2, 2.0 * d, wavelength);
        let p = pattern_for_direction(&cfg, Direction::broadside()).unwrap();
        assert!(p.amplitudes[1].abs() < TOL);
    }

    #[test]
    fn pattern_for_direction_stays_in_box() {
        let cfg = table2_cfg();
        for k in 0..24 {
            let angle = -1.0 + 2.0 * k as f64 / 23.0;
            let p =
                pattern_for_direction(&cfg, Direction::from_broadside(angle.asin())).unwrap();
            assert!(p.in_box());
        }
    }

    #[test]
    fn superpose_identity_and_convexity() {
        let p = HolographicPattern::new(vec![0.2f64, 0.8, 0.5]);
        let s = superpose_patterns(&[p.clone()], &[1.0]).unwrap();
        assert!(!s.rescaled);
        assert_eq!(s.pattern, p);

        let s = superpose_patterns(&[p.clone(), p.clone()], &[0.5, 0.5]).unwrap();
        assert!(!s.rescaled);
        for (a, b) in s.pattern.amplitudes.iter().zip(&p.amplitudes) {
            assert!((a - b).abs() < TOL);
        }
    }

    #[test]
    fn superpose_rescales_by_max_entry() {
        let a = HolographicPattern::new(vec![0.9f64, 0.1]);
        let b = HolographicPattern::new(vec![0.7, 0.3]);
        // Raw sum is [1.6, 0.4]; oracle: divide by 1.6.
        let s = superpose_patterns(&[a, b], &[1.0, 1.0]).unwrap();
        assert!(s.rescaled);
        assert!((s.raw_max - 1.6).abs() < TOL);
        assert!((s.pattern.amplitudes[0] - 1.0).abs() < TOL);
        assert!((s.pattern.amplitudes[1] - 0.25).abs() < TOL);
        assert!(s.pattern.in_box());
    }

    #[test]
    fn superpose_rejects_empty_and_ragged() {
        assert!(superpose_patterns::<f64>(&[], &[]).is_err());
        let a = HolographicPattern::new(vec![0.1f64, 0.2]);
        let b = HolographicPattern::new(vec![0.1f64]);
        assert!(superpose_patterns(&[a.clone(), b], &[1.0, 1.0]).is_err());
        assert!(superpose_patterns(&[a], &[f64::NAN]).is_err());
    }

    #[test]
    fn quantize_tie_rounds_down() {
        let p = HolographicPattern::new(vec![0.5f64]);
        let q = quantize_pattern(&p, 2).unwrap();
        assert_eq!(q.amplitudes[0], 0.0);
    }

    #[test]
    fn quantize_nearest_grid_point() {
        let p = HolographicPattern::new(vec![0.74f64, 0.76, 0.1]);
        let q = quantize_pattern(&p, 5).unwrap();
        assert!((q.amplitudes[0] - 0.75).abs() < TOL);
        assert!((q.amplitudes[1] - 0.75).abs() < TOL);
        assert!(q.amplitudes[2].abs() < TOL);
    }

    #[test]
    fn quantize_grid_is_fixed_point() {
        let p = HolographicPattern::new(vec![0.0f64, 0.25, 0.5, 0.75, 1.0]);
        let q = quantize_pattern(&p, 5).unwrap();
        for (a, b) in q.amplitudes.iter().zip(&p.amplitudes) {
            assert!((a - b).abs() < TOL);
        }
        assert!(quantize_pattern(&p, 1).is_err());
    }

    #[test]
    fn leakage_zero_pattern_full_slack() {
        let cfg = table2_cfg();
        let w = ApertureWindow::full(&cfg);
        let slack =
            leakage_margins(&cfg, &HolographicPattern::dark(cfg.element_count()), &w).unwrap();
        assert!(slack.iter().all(|&s| (s - 1.0).abs() < TOL));
    }

    #[test]
    fn leakage_masked_row_full_slack() {
        let cfg = RhsConfig::<f64>::new(2, 8, 0.004, 0.0125);
        // Row 1 excluded entirely: its slack stays 1 even at full amplitude.
        let w = ApertureWindow {
            start: vec![1, 0],
            end: vec![8, 0],
        };
        let p = HolographicPattern::full(cfg.element_count());
        let slack = leakage_margins(&cfg, &p, &w).unwrap();
        assert!((slack[1] - 1.0).abs() < TOL);
        assert!(slack[0] < 1.0);
    }

    #[test]
    fn leakage_all_ones_matches_direct_summation() {
        // Oracle: direct summation of η over the row.
        let cfg = table2_cfg();
        let w = ApertureWindow::full(&cfg);
        let p = HolographicPattern::full(cfg.element_count());
        let slack = leakage_margins(&cfg, &p, &w).unwrap();
        let mut eta_sum = 0.0;
        for iz in 0..cfg.cols {
            eta_sum += (-2.0 * cfg.attenuation * iz as f64 * cfg.element_spacing).exp();
        }
        assert!((slack[0] - (1.0 - eta_sum)).abs() < 1e-10);
    }

    #[test]
    fn apply_identity_chain() {
        let cfg = RhsConfig::<f64>::new(1, 1, 0.01, 0.03);
        let bf = Beamformer::new(&cfg, HolographicPattern::full(1)).unwrap();
        let w = ApertureWindow::full(&cfg);
        let x = DVector::from_element(1, Cplx::new(1.0, 0.0));
        let y = apply_beamformer(&bf, &w, &x).unwrap();
        assert!((y[0].re - 1.0).abs() < TOL);
        assert!(y[0].im.abs() < TOL);
    }

    #[test]
    fn apply_dark_surface_radiates_nothing() {
        let cfg = RhsConfig::<f64>::new(2, 4, 0.004, 0.0125);
        let bf = Beamformer::new(&cfg, HolographicPattern::dark(cfg.element_count())).unwrap();
        let w = ApertureWindow::full(&cfg);
        let x = DVector::from_fn(2, |i, _| Cplx::new(1.0 + i as f64, -0.5));
        let y = apply_beamformer(&bf, &w, &x).unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn apply_matches_naive_loop_oracle() {
        let cfg = RhsConfig::<f64>::new(2, 2, 0.004, 0.0125);
        let mut g = rng::root(5);
        let pattern = HolographicPattern::new(
            (0..cfg.element_count())
                .map(|_| rng::uniform::<f64>(&mut g))
                .collect(),
        );
        let bf = Beamformer::new(&cfg, pattern.clone()).unwrap();
        let w = ApertureWindow {
            start: vec![1, 2],
            end: vec![2, 2],
        };
        let x = DVector::from_fn(2, |_, _| rng::complex_gaussian::<f64>(&mut g));
        let y = apply_beamformer(&bf, &w, &x).unwrap();
        // Oracle: naive entry-wise product.
        for iy in 0..2 {
            for iz in 0..2 {
                let n = cfg.index_of(iy, iz);
                let d = if w.contains(iy, iz) { 1.0 } else { 0.0 };
                let expected = bf.propagation[(n, iy)] * x[iy]
                    * Cplx::new(pattern.amplitudes[n] * d, 0.0);
                assert!((y[n] - expected).norm() < TOL);
            }
        }
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let cfg = RhsConfig::<f64>::new(2, 2, 0.004, 0.0125);
        let bf = Beamformer::new(&cfg, HolographicPattern::full(4)).unwrap();
        let w = ApertureWindow::full(&cfg);
        let x = DVector::from_element(3, Cplx::new(1.0, 0.0));
        assert!(apply_beamformer(&bf, &w, &x).is_err());
    }

    #[test]
    fn mask_linearity() {
        // Masked application equals full-window application of ψ⊙mask.
        let cfg = RhsConfig::<f64>::new(2, 5, 0.004, 0.0125);
        let mut g = rng::root(9);
        let pattern = HolographicPattern::new(
            (0..cfg.element_count())
                .map(|_| rng::uniform::<f64>(&mut g))
                .collect(),
        );
        let w = ApertureWindow {
            start: vec![2, 1],
            end: vec![4, 3],
        };
        let x = DVector::from_fn(2, |_, _| rng::complex_gaussian::<f64>(&mut g));
        let bf = Beamformer::new(&cfg, pattern.clone()).unwrap();
        let masked = apply_beamformer(&bf, &w, &x).unwrap();

        let mut masked_pattern = pattern.clone();
        for n in 0..cfg.element_count() {
            masked_pattern.amplitudes[n] *= w.mask(&cfg, n);
        }
        let bf2 = Beamformer::new(&cfg, masked_pattern).unwrap();
        let full = apply_beamformer(&bf2, &ApertureWindow::full(&cfg), &x).unwrap();
        assert!((masked - full).norm() < TOL);
    }

    #[test]
    fn window_validation() {
        let cfg = RhsConfig::<f64>::new(1, 4, 0.004, 0.0125);
        let bad = ApertureWindow {
            start: vec![0],
            end: vec![4],
        };
        assert!(bad.validate(&cfg).is_err());
        let bad = ApertureWindow {
            start: vec![3],
            end: vec![2],
        };
        assert!(bad.validate(&cfg).is_err());
        let good = ApertureWindow::uniform(1, 2, 3);
        assert!(good.validate(&cfg).is_ok());
        assert_eq!(good.active_count(&cfg), 2);
    }

    #[test]
    fn generic_scalar_f32_smoke() {
        let cfg: RhsConfig<f32> = RhsConfig::linear(4, 0.004, 0.0125);
        let f = build_propagation_matrix(&cfg).unwrap();
        assert_eq!(f.nrows(), 4);
        assert!((f[(0, 0)].norm() - 1.0).abs() < 1e-6);
    }
}
