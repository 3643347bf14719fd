//! Scenario dispatch: builds the problem for each kind, runs it, and writes
//! the output artifacts plus a manifest.

use crate::export::{export, Format, Table, Value};
use crate::scenario::{Kind, Scenario};
use holobeam_core::beamopt::jcas::AoOptions;
use holobeam_core::beamopt::{self, pareto};
use holobeam_core::beamtrain;
use holobeam_core::chanest;
use holobeam_core::rhs::{ApertureWindow, Beamformer};
use holobeam_core::rng;
use holobeam_core::wavefield::{self, Direction};
use holobeam_core::{Cplx, Error as CoreError};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Run record written as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// Scenario unreadable or invalid (exit 2).
    Parse(String),
    /// Optimization infeasible (exit 3).
    Infeasible(String),
    /// IO or numeric failure (exit 4).
    Io(String),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible(m) => RunError::Infeasible(m),
            CoreError::Config(m) | CoreError::Argument(m) => RunError::Parse(m),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Vec<u8>), RunError> {
    let bytes = std::fs::read(path)
        .map_err(|e| RunError::Parse(format!("cannot read {}: {e}", path.display())))?;
    // serde_json errors already carry line and column.
    let scenario: Scenario =
        serde_json::from_slice(&bytes).map_err(|e| RunError::Parse(e.to_string()))?;
    if scenario.schema != 1 {
        return Err(RunError::Parse(format!(
            "unsupported schema version {} (expected 1)",
            scenario.schema
        )));
    }
    scenario.rhs.validate().map_err(RunError::from)?;
    Ok((scenario, bytes))
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

fn steering_channel(
    cfg: &holobeam_core::rhs::RhsConfig<f64>,
    angle_deg: f64,
    gain: Cplx<f64>,
) -> DVector<Cplx<f64>> {
    let a = wavefield::steering(
        cfg.element_count(),
        cfg.element_spacing,
        cfg.wavelength,
        deg(angle_deg),
        None,
    );
    a.map(|v| v * gain)
}

/// Runs a scenario and writes its artifacts under `out_dir`.
pub fn run_scenario(
    scenario: &Scenario,
    raw: &[u8],
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let seed = seed_override.unwrap_or(scenario.seed);
    let mut outputs: Vec<PathBuf> = Vec::new();

    match &scenario.kind {
        Kind::Beampattern(p) => {
            let pattern = holobeam_core::rhs::pattern_for_direction(
                &scenario.rhs,
                Direction::from_broadside(deg(p.direction_deg)),
            )?;
            let bf = Beamformer::new(&scenario.rhs, pattern)?;
            let window = ApertureWindow::full(&scenario.rhs);
            let feeds = scenario.rhs.rows;
            let b = DMatrix::from_fn(feeds, feeds, |i, j| {
                if i == j {
                    Cplx::new((p.power / feeds as f64).sqrt(), 0.0)
                } else {
                    Cplx::new(0.0, 0.0)
                }
            });
            let mut grid = Vec::new();
            let mut a = p.grid_min_deg;
            while a <= p.grid_max_deg + 1e-9 {
                grid.push(Direction::from_broadside(deg(a)));
                a += p.grid_step_deg;
            }
            let samples = wavefield::beampattern(&bf, &window, &b, &grid)?;
            let mut table = Table::new(&["theta_deg", "phi_deg", "power_w"]);
            for s in samples {
                table.push(vec![
                    Value::Float(s.direction.theta.to_degrees()),
                    Value::Float(s.direction.phi.to_degrees()),
                    Value::Float(s.power),
                ]);
            }
            let path = out_dir.join("beampattern.csv");
            export(&table, Format::Csv, &path)?;
            outputs.push(path);
        }
        Kind::Pareto(p) => {
            let targets = match p.targets_deg.as_slice() {
                [a] => pareto::TargetSet::One { angle: deg(*a) },
                [a, b] => pareto::TargetSet::Two {
                    angles: [deg(*a), deg(*b)],
                },
                _ => {
                    return Err(RunError::Parse(
                        "pareto supports one or two targets".into(),
                    ))
                }
            };
            let case = pareto::CaseStudy {
                cfg: scenario.rhs.clone(),
                targets,
                channel: p
                    .channel
                    .iter()
                    .map(|c| pareto::CommPath {
                        angle: deg(c.angle_deg),
                        gain: c.gain.into_complex(),
                    })
                    .collect(),
                power: p.power,
                noise: p.noise,
            };
            let front = pareto::pareto_front(&case, &p.thresholds, p.restarts, seed)?;
            let mut table = Table::new(&["gamma_c_db", "p_s_w"]);
            for pt in &front.points {
                table.push(vec![
                    Value::Float(10.0 * pt.comm_level.log10()),
                    Value::Float(pt.sensing_power),
                ]);
            }
            let path = out_dir.join("pareto.csv");
            export(&table, Format::Csv, &path)?;
            outputs.push(path);
        }
        Kind::Jcas(p) => {
            let problem = beamopt::JcasProblem {
                cfg: scenario.rhs.clone(),
                window: ApertureWindow::full(&scenario.rhs),
                users: p
                    .users
                    .iter()
                    .map(|u| beamopt::JcasUser {
                        channel: steering_channel(&scenario.rhs, u.angle_deg, u.gain.into_complex()),
                        sinr_floor: u.sinr_floor,
                    })
                    .collect(),
                radar: holobeam_core::metrics::RadarUtilityConfig {
                    directions: p
                        .targets_deg
                        .iter()
                        .map(|&a| Direction::from_broadside(deg(a)))
                        .collect(),
                    alpha0: p.alpha0,
                    band: p.band.clone(),
                },
                radar_streams: p.radar_streams,
                power: p.power,
                noise: p.noise,
            };
            let report = beamopt::jcas_transmit(&problem, p.restarts, seed, &AoOptions::default())?;
            let path = out_dir.join("report.json");
            write_json(&path, &report)?;
            outputs.push(path);
        }
        Kind::Codesign(p) => {
            let problem = beamopt::CodesignProblem {
                tx: scenario.rhs.clone(),
                rx: p.rx.clone(),
                targets: p
                    .targets
                    .iter()
                    .map(|t| beamopt::TargetEcho {
                        tx_angle: deg(t.tx_angle_deg),
                        rx_angle: deg(t.rx_angle_deg),
                        reflection: t.reflection.into_complex(),
                    })
                    .collect(),
                users: p
                    .users
                    .iter()
                    .map(|u| beamopt::JcasUser {
                        channel: steering_channel(&scenario.rhs, u.angle_deg, u.gain.into_complex()),
                        sinr_floor: u.sinr_floor,
                    })
                    .collect(),
                eff_tx: p.eff_tx,
                eff_rx: p.eff_rx,
                noise_ext: p.noise_ext,
                noise_int: p.noise_int,
                noise_user: p.noise_user,
                power: p.power,
                streams: p.streams,
            };
            let outcome =
                beamopt::codesign_maxmin(&problem, p.restarts, seed, &AoOptions::default())?;
            let path = out_dir.join("report.json");
            write_json(&path, &outcome.report)?;
            outputs.push(path);
        }
        Kind::Distsense(p) => {
            let feeds = p.tx.first().map(|c| c.rows).unwrap_or(1);
            let problem = beamopt::DistSenseProblem {
                tx: p.tx.clone(),
                rx: p.rx.clone(),
                scene: p
                    .scene
                    .iter()
                    .map(|s| beamopt::Scatter {
                        tx_angles: s.tx_angles_deg.iter().map(|&a| deg(a)).collect(),
                        rx_angles: s.rx_angles_deg.iter().map(|&a| deg(a)).collect(),
                        reflection: s.reflection.into_complex(),
                        delay_s: s.delay_s,
                        clutter: s.clutter,
                    })
                    .collect(),
                waveforms: beamopt::Waveforms::dft(p.tx.len(), feeds, p.waveform_length)?,
                noise: p.noise,
            };
            let outcome = beamopt::distsense_maxmin(
                &problem,
                p.restarts,
                seed,
                &AoOptions::default(),
            )?;
            let path = out_dir.join("report.json");
            write_json(&path, &outcome.report)?;
            outputs.push(path);
        }
        Kind::Chanest(p) => {
            let cfg = &scenario.rhs;
            let n = cfg.element_count();
            let paths: Vec<wavefield::PathSpec<f64>> = p
                .paths
                .iter()
                .map(|s| wavefield::PathSpec {
                    angle: deg(s.angle_deg),
                    range: s.range,
                    gain: s.gain.map(|g| g.into_complex()),
                })
                .collect();
            let joint = chanest::build_dictionary(
                n,
                cfg.element_spacing,
                cfg.wavelength,
                chanest::Domain::Joint,
                p.angular_bins,
                Some(p.range_rings),
            )?;
            let angular = chanest::build_dictionary(
                n,
                cfg.element_spacing,
                cfg.wavelength,
                chanest::Domain::Angular,
                p.angular_bins,
                None,
            )?;
            let mut table = Table::new(&["snr_db", "seed", "estimator", "nmse"]);
            for &snr in &p.snr_db_list {
                for trial in 0..p.trials {
                    let trial_seed = rng::child_seed(seed, trial);
                    let channel = wavefield::synth_channel(
                        &paths,
                        n,
                        cfg.element_spacing,
                        cfg.wavelength,
                        trial_seed,
                    )?;
                    let pilots = chanest::simulate_pilots(
                        &channel,
                        cfg,
                        p.pilots,
                        snr,
                        rng::child_seed(trial_seed, 1),
                    )?;
                    let via_omp = chanest::omp(&pilots, &angular, p.sparsity)?;
                    let via_pd =
                        chanest::pd_omp(&pilots, &joint, &chanest::PdOmpOptions::default())?;
                    table.push(vec![
                        Value::Float(snr),
                        Value::Int(trial as i64),
                        Value::Text("omp".into()),
                        Value::Float(chanest::nmse(&via_omp.channel_estimate, &channel.h)?),
                    ]);
                    table.push(vec![
                        Value::Float(snr),
                        Value::Int(trial as i64),
                        Value::Text("pd_omp".into()),
                        Value::Float(chanest::nmse(&via_pd.channel_estimate, &channel.h)?),
                    ]);
                }
            }
            let path = out_dir.join("nmse_sweep.csv");
            export(&table, Format::Csv, &path)?;
            outputs.push(path);
        }
        Kind::Beamtrain(p) => {
            let cfg = &scenario.rhs;
            let local = beamtrain::window_config(cfg, p.aperture_cols)?;
            let mu_step = chanest::max_mu_step(
                p.aperture_cols,
                cfg.element_spacing,
                cfg.wavelength,
                0.5,
            );
            let codebook = beamtrain::design_angle_codebook(
                &local,
                &beamtrain::CodebookDesign {
                    layers: p.layers,
                    samples: p.samples,
                    span: beamtrain::CellInterval {
                        lo: p.span.0,
                        hi: p.span.1,
                    },
                    mu_max: 2.0 * mu_step,
                    gain_target: None,
                    power: p.power,
                },
                seed,
            )?;
            let mk_setup = |windows: bool, snr_db: f64| beamtrain::TrainingSetup {
                cfg: cfg.clone(),
                aperture_cols: p.aperture_cols,
                codebook: codebook.clone(),
                range_bins: p.range_bins,
                power: p.power,
                snr_db,
                windows,
            };

            // Sample trace: noiseless, windows on, on-grid users.
            let setup0 = mk_setup(true, f64::INFINITY);
            let users = beamtrain::sample_on_grid_users(&setup0, p.users, seed);
            let trace = beamtrain::run_training(&setup0, &users, seed)?;
            let trace_path = out_dir.join("trace.json");
            write_json(&trace_path, &trace)?;
            outputs.push(trace_path);

            // Error-rate sweep over SNR and windows mode in Rician fading.
            let mut table = Table::new(&["snr_db", "windows", "n_a", "error_rate"]);
            for &snr in &p.snr_db_list {
                for windows in [true, false] {
                    let setup = mk_setup(windows, snr);
                    let mut errors = 0usize;
                    let mut total = 0usize;
                    for trial in 0..p.trials {
                        let tseed = rng::child_seed(seed, 10_000 + trial);
                        let grid = beamtrain::sample_on_grid_users(&setup, p.users, tseed);
                        let trial_users: Vec<_> = grid
                            .iter()
                            .map(|(pt, _)| {
                                let h = beamtrain::rician_channel(
                                    cfg,
                                    *pt,
                                    p.k_factor,
                                    p.scatter_paths,
                                    rng::child_seed(tseed, 7),
                                );
                                (*pt, h)
                            })
                            .collect();
                        let t = beamtrain::run_training(&setup, &trial_users, tseed)?;
                        errors += t.outcomes.iter().filter(|o| !o.correct).count();
                        total += t.outcomes.len();
                    }
                    table.push(vec![
                        Value::Float(snr),
                        Value::Bool(windows),
                        Value::Int(p.aperture_cols as i64),
                        Value::Float(errors as f64 / total.max(1) as f64),
                    ]);
                }
            }
            let sweep_path = out_dir.join("error_sweep.csv");
            export(&table, Format::Csv, &sweep_path)?;
            outputs.push(sweep_path);
        }
    }

    let manifest = RunManifest {
        scenario_hash: hex_digest(raw),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Io(format!("serialize: {e}")))?;
    std::fs::write(path, body)?;
    Ok(())
}
