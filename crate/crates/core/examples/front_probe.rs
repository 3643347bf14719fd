//! Prints the RHS tradeoff front next to the phased-array reference for a
//! two-target, two-path instance. Exploration helper.

use holobeam_core::beamopt::pa_baseline::PaReference;
use holobeam_core::beamopt::pareto::{
    max_achievable_snr, pareto_front, CaseStudy, CommPath, TargetSet,
};
use holobeam_core::rhs::RhsConfig;
use holobeam_core::rng;
use holobeam_core::Cplx;

fn main() {
    let wavelength = 0.0125f64;
    for seed in 0..3u64 {
        let mut g = rng::root(seed);
        let gains = [rng::complex_gaussian::<f64>(&mut g), rng::complex_gaussian::<f64>(&mut g)];
        let targets = TargetSet::Two { angles: [-0.6, 0.45] };
        let channel = vec![
            CommPath { angle: -0.15, gain: gains[0] },
            CommPath { angle: 0.7, gain: gains[1].scale(0.5) },
        ];
        let case = CaseStudy {
            cfg: RhsConfig::linear(50, wavelength / 3.0, wavelength),
            targets: targets.clone(),
            channel: channel.clone(),
            power: 1.0,
            noise: 1e-2,
        };
        let gmax = max_achievable_snr(&case, 16, seed).unwrap();
        let thresholds: Vec<f64> = (0..6).map(|k| gmax * 0.16 * k as f64).collect();
        let front = pareto_front(&case, &thresholds, 16, seed).unwrap();

        let pa = PaReference { elements: 50, wavelength, power: 1.0, noise: 1e-2 };
        let pa_peak = pa.peak_power(-0.6);
        let rhs_peak = {
            let single = CaseStudy {
                cfg: case.cfg.clone(),
                targets: TargetSet::One { angle: -0.6 },
                channel: channel.clone(),
                power: 1.0,
                noise: 1e-2,
            };
            holobeam_core::beamopt::pareto::unconstrained_sensing_max(&single, 16, seed)
                .unwrap()
                .objective
        };
        let ratio = rhs_peak / pa_peak;
        // Scale the PA thresholds too: the equal-peak-gain reference sees
        // its SNRs reduced by the same factor.
        let pa_thresholds: Vec<f64> = thresholds.iter().map(|t| t / ratio).collect();
        let pa_front = pa.reference_front(&targets, &channel, &pa_thresholds, 40);

        println!("seed {seed}: gmax_rhs={gmax:.2} rhs_peak={rhs_peak:.4} pa_peak={pa_peak:.4} ratio={ratio:.4}");
        for (i, p) in front.points.iter().enumerate() {
            let pa_p = pa_front.iter().find(|q| (q.comm_level - p.comm_level / ratio).abs() < 1e-9);
            println!(
                "  Γ={:8.3}  P_rhs={:.4}  P_pa_raw={}  P_pa_scaled={}",
                p.comm_level,
                p.sensing_power,
                pa_p.map(|q| format!("{:.4}", q.sensing_power)).unwrap_or("-".into()),
                pa_p.map(|q| format!("{:.4}", q.sensing_power * ratio)).unwrap_or("-".into()),
            );
            let _ = i;
        }
    }
}
