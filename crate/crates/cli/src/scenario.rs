//! Scenario file schema.
//!
//! Scenarios are JSON with a `schema` version, a `kind` tag with its
//! parameter block under `params`, the surface description under `rhs`, and
//! a seed. Unknown fields are rejected. All angles in scenario files are
//! degrees; internal math is radians.

use holobeam_core::rhs::RhsConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Schema version; must be 1.
    pub schema: u32,
    #[serde(flatten)]
    pub kind: Kind,
    pub rhs: RhsConfig<f64>,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Kind {
    Beampattern(BeampatternParams),
    Pareto(ParetoParams),
    Jcas(JcasParams),
    Codesign(CodesignParams),
    Distsense(DistsenseParams),
    Chanest(ChanestParams),
    Beamtrain(BeamtrainParams),
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Beampattern(_) => "beampattern",
            Kind::Pareto(_) => "pareto",
            Kind::Jcas(_) => "jcas",
            Kind::Codesign(_) => "codesign",
            Kind::Distsense(_) => "distsense",
            Kind::Chanest(_) => "chanest",
            Kind::Beamtrain(_) => "beamtrain",
        }
    }
}

/// Complex number as a `[re, im]` pair in scenario files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

impl Cx {
    pub fn into_complex(self) -> num_complex::Complex<f64> {
        num_complex::Complex::new(self.0, self.1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeampatternParams {
    /// Broadside-referenced steering angle of the holographic pattern.
    pub direction_deg: f64,
    pub grid_min_deg: f64,
    pub grid_max_deg: f64,
    pub grid_step_deg: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPath {
    pub angle_deg: f64,
    pub gain: Cx,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoParams {
    /// One or two sensing target angles.
    pub targets_deg: Vec<f64>,
    /// Downlink channel paths (LoS or two-path).
    pub channel: Vec<ChannelPath>,
    pub power: f64,
    pub noise: f64,
    /// Communication SNR thresholds, linear, ascending.
    pub thresholds: Vec<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcasUserSpec {
    /// Far-field user angle; the channel is the steering vector scaled by
    /// `gain`.
    pub angle_deg: f64,
    pub gain: Cx,
    pub sinr_floor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcasParams {
    pub targets_deg: Vec<f64>,
    pub alpha0: f64,
    /// Per-direction gain band (γ^l, γ^u) for targets after the first.
    #[serde(default)]
    pub band: Vec<(f64, f64)>,
    #[serde(default)]
    pub users: Vec<JcasUserSpec>,
    pub power: f64,
    pub noise: f64,
    #[serde(default)]
    pub radar_streams: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodesignTarget {
    pub tx_angle_deg: f64,
    pub rx_angle_deg: f64,
    pub reflection: Cx,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodesignParams {
    /// Receive surface (the top-level `rhs` is the transmit surface).
    pub rx: RhsConfig<f64>,
    pub targets: Vec<CodesignTarget>,
    #[serde(default)]
    pub users: Vec<JcasUserSpec>,
    pub eff_tx: f64,
    pub eff_rx: f64,
    pub noise_ext: f64,
    pub noise_int: f64,
    #[serde(default = "default_noise_user")]
    pub noise_user: f64,
    pub power: f64,
    pub streams: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSpec {
    pub tx_angles_deg: Vec<f64>,
    pub rx_angles_deg: Vec<f64>,
    pub reflection: Cx,
    #[serde(default)]
    pub delay_s: f64,
    #[serde(default)]
    pub clutter: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistsenseParams {
    /// Transmit subarrays (the top-level `rhs` is the template for sizes
    /// reported in the manifest; subarrays are explicit here).
    pub tx: Vec<RhsConfig<f64>>,
    pub rx: Vec<RhsConfig<f64>>,
    pub scene: Vec<ScatterSpec>,
    pub waveform_length: usize,
    pub noise: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanestPathSpec {
    pub angle_deg: f64,
    #[serde(default)]
    pub range: Option<f64>,
    #[serde(default)]
    pub gain: Option<Cx>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanestParams {
    pub paths: Vec<ChanestPathSpec>,
    /// Pilot count Q.
    pub pilots: usize,
    pub snr_db_list: Vec<f64>,
    pub trials: u64,
    pub angular_bins: usize,
    pub range_rings: usize,
    /// Sparsity for the plain-OMP baseline.
    pub sparsity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamtrainParams {
    pub aperture_cols: usize,
    pub layers: usize,
    pub samples: (usize, usize),
    /// φ span of the codebook.
    pub span: (f64, f64),
    pub range_bins: usize,
    pub users: usize,
    pub power: f64,
    pub snr_db_list: Vec<f64>,
    pub trials: u64,
    /// Rician K-factor of the trial channels.
    pub k_factor: f64,
    pub scatter_paths: usize,
}

fn default_restarts() -> usize {
    16
}

fn default_noise_user() -> f64 {
    1e-2
}
