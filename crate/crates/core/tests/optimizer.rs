use num_complex::Complex64;
use pzf_core::baselines::{baseline_set, relay_power, zf_beamformer, Design};
use pzf_core::metrics::rate_report;
use pzf_core::model::{generate_channel, unit_noise, ChannelMatrix, ChannelModel, NetworkConfig, Strategy};
use pzf_core::pzf::{
    a_to_g, optimize_joint, optimize_reduced, optimize_separate, pack, scale_to_power, unpack, FreeVector,
    Objective, OptimizerConfig, ProbeScaling, PzfProblem, StopRule,
};
use pzf_core::CMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, n: usize, m: usize, snr_db: f64) -> (NetworkConfig, ChannelMatrix) {
    let config = NetworkConfig::new(n, m)
        .unwrap()
        .with_channel_model(ChannelModel::homogeneous(10f64.powf(snr_db / 10.0)).unwrap())
        .unwrap();
    let h = generate_channel(&config, &mut ChaCha8Rng::seed_from_u64(seed));
    (config, h)
}

/// Random free vector with every slot scaled onto the power budget.
fn random_point(problem: &PzfProblem, seed: u64) -> FreeVector {
    let pattern = problem.pattern();
    let total = pzf_core::pzf::total_free(pattern);
    let raw: Vec<Complex64> = unit_noise(total, &mut ChaCha8Rng::seed_from_u64(seed))
        .iter()
        .copied()
        .collect();
    let x = FreeVector::from_concatenated(&raw, pattern).unwrap();
    let mats: Vec<CMatrix> = unpack(&x, pattern)
        .unwrap()
        .iter()
        .map(|a| problem.scale_equivalent(a).unwrap())
        .collect();
    pack(&mats, pattern).unwrap()
}

/// Joint objective evaluated through beamformers and the rate report,
/// independent of the equivalent-channel shortcuts used by the optimizer.
fn joint_via_rates(x: &[Complex64], problem: &PzfProblem, h: &ChannelMatrix, config: &NetworkConfig) -> f64 {
    let fv = FreeVector::from_concatenated(x, problem.pattern()).unwrap();
    let gs: Vec<CMatrix> = unpack(&fv, problem.pattern())
        .unwrap()
        .iter()
        .map(|a| a_to_g(a, h).unwrap())
        .collect();
    let set = pzf_core::BeamformerSet::new(gs, Design::PzfJoint).unwrap();
    let report = rate_report(h, &set, config).unwrap();
    report.common_rates.iter().sum()
}

#[test]
fn unit_scaled_gradient_matches_central_difference() {
    let mut opt = OptimizerConfig::joint();
    opt.probe_scaling = ProbeScaling::Unit;
    // same step as the central-difference oracle
    opt.fd_step = 1e-6;
    for seed in 0..50 {
        let (config, h) = setup(seed, 3, 3, 10.0);
        let problem = PzfProblem::new(&h, &config).unwrap();
        let x = random_point(&problem, 1000 + seed);
        let d = problem.modified_gradient(&x, Objective::Joint, &opt).unwrap();
        let flat = x.concatenated();
        let eps = 1e-6;
        let mut reference = Vec::with_capacity(flat.len());
        for m in 0..flat.len() {
            let mut part = [0.0; 2];
            for (p, dir) in [Complex64::new(eps, 0.0), Complex64::new(0.0, eps)]
                .into_iter()
                .enumerate()
            {
                let mut plus = flat.clone();
                let mut minus = flat.clone();
                plus[m] += dir;
                minus[m] -= dir;
                part[p] = (joint_via_rates(&plus, &problem, &h, &config)
                    - joint_via_rates(&minus, &problem, &h, &config))
                    / (2.0 * eps);
            }
            reference.push(Complex64::new(part[0], part[1]));
        }
        let err: f64 = d
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = reference.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-4 * scale, "seed {seed}: relative error {}", err / scale);
    }
}

#[test]
fn gradient_is_nonzero_at_zf() {
    for seed in 0..100 {
        let (config, h) = setup(seed, 3, 3, 10.0);
        let problem = PzfProblem::new(&h, &config).unwrap();
        let x = problem.zf_point();
        for objective in [Objective::Joint, Objective::Slot(1), Objective::Slot(2)] {
            let d = problem
                .modified_gradient(&x, objective, &OptimizerConfig::joint())
                .unwrap();
            assert!(d.iter().any(|z| z.norm() > 0.0), "seed {seed}");
        }
    }
}

#[test]
fn gradient_lengths_follow_objective() {
    let (config, h) = setup(1, 4, 4, 10.0);
    let problem = PzfProblem::new(&h, &config).unwrap();
    let x = problem.zf_point();
    let opt = OptimizerConfig::separate();
    assert_eq!(
        problem
            .modified_gradient(&x, Objective::Joint, &opt)
            .unwrap()
            .len(),
        36
    );
    for n in 1..4 {
        let d = problem.modified_gradient(&x, Objective::Slot(n), &opt).unwrap();
        assert_eq!(d.len(), (n + 1) * 4);
    }
    assert!(problem.modified_gradient(&x, Objective::Slot(4), &opt).is_err());
}

#[test]
fn objective_examples() {
    let (config, h) = setup(3, 3, 3, 10.0);
    let problem = PzfProblem::new(&h, &config).unwrap();
    let zero = FreeVector::zeros(problem.pattern());
    assert_eq!(problem.objective(&zero, Objective::Joint).unwrap(), 0.0);

    let zf = baseline_set(&h, &config, Design::Zf).unwrap();
    let report = rate_report(&h, &zf, &config).unwrap();
    let expected: f64 = report.common_rates.iter().sum();
    let at_zf = problem.objective(&problem.zf_point(), Objective::Joint).unwrap();
    assert!((at_zf - expected).abs() < 1e-9);

    let x = random_point(&problem, 4);
    let values: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&c| {
            let scaled: Vec<Complex64> = x.concatenated().iter().map(|z| z * c).collect();
            let fv = FreeVector::from_concatenated(&scaled, problem.pattern()).unwrap();
            problem.objective(&fv, Objective::Joint).unwrap()
        })
        .collect();
    assert!(values[0] < values[1] && values[1] < values[2]);
}

#[test]
fn scale_to_power_examples() {
    let (config, h) = setup(6, 3, 3, 10.0);
    let g = zf_beamformer(&h, &config, 1).unwrap();
    let same = scale_to_power(&g, &h, &config).unwrap();
    assert!((&same - &g).norm() < 1e-12 * g.norm());

    let big = &g * Complex64::new(2.0, 0.0);
    let back = scale_to_power(&big, &h, &config).unwrap();
    assert!((&back - &g).norm() < 1e-12 * g.norm());

    let random =
        unit_noise(9, &mut ChaCha8Rng::seed_from_u64(6)).reshape_generic(nalgebra::Dyn(3), nalgebra::Dyn(3));
    let scaled = scale_to_power(&random, &h, &config).unwrap();
    let p = relay_power(&scaled, h.as_matrix(), config.user_powers()).unwrap();
    assert!((p - 1.0).abs() < 1e-12);

    assert!(scale_to_power(&CMatrix::zeros(3, 3), &h, &config).is_err());
}

fn trace_opt(mut opt: OptimizerConfig) -> OptimizerConfig {
    opt.record_trace = true;
    opt
}

#[test]
fn joint_run_is_monotone_and_feasible() {
    for seed in 0..20 {
        let (config, h) = setup(seed, 3, 3, 10.0);
        let out = optimize_joint(&h, &config, &trace_opt(OptimizerConfig::joint())).unwrap();
        let trace = &out.report.trace;
        assert_eq!(trace.len(), out.report.iterations[0] + 1);
        for w in trace.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-9);
        }
        for row in trace {
            assert!((row.power - 1.0).abs() < 1e-6);
        }
        for g in out.beamformers.matrices() {
            let p = relay_power(g, h.as_matrix(), config.user_powers()).unwrap();
            assert!((p - 1.0).abs() < 1e-6);
        }
        let zf = rate_report(&h, &baseline_set(&h, &config, Design::Zf).unwrap(), &config).unwrap();
        let pzf = rate_report(&h, &out.beamformers, &config).unwrap();
        assert!(pzf.sum_rate >= zf.sum_rate - 1e-12);
    }
}

#[test]
fn separate_never_loses_slot_rate() {
    for seed in 0..20 {
        let (config, h) = setup(seed, 4, 4, 10.0);
        let out = optimize_separate(&h, &config, &trace_opt(OptimizerConfig::separate())).unwrap();
        let report = &out.report;
        assert_eq!(report.iterations.len(), 3);
        for (a, b) in report.initial_objective.iter().zip(&report.final_objective) {
            assert!(b >= a);
        }
        for w in report.trace.windows(2).filter(|w| w[0].slot == w[1].slot) {
            assert!(w[1].objective >= w[0].objective - 1e-9);
        }
        let zf = baseline_set(&h, &config, Design::Zf).unwrap();
        let zf_rates = rate_report(&h, &zf, &config).unwrap();
        let pzf_rates = rate_report(&h, &out.beamformers, &config).unwrap();
        for n in 1..4 {
            let slot_sum = |pair: &Vec<Vec<f64>>| -> f64 {
                (1..=4)
                    .map(|k| pair[k - 1][config.schedule().target(k, n).unwrap() - 1])
                    .sum()
            };
            assert!(slot_sum(&pzf_rates.pair_rates) >= slot_sum(&zf_rates.pair_rates) - 1e-9);
        }
    }
}

#[test]
fn pzf_beamformers_respect_pattern() {
    let (config, h) = setup(9, 4, 5, 10.0);
    let out = optimize_separate(&h, &config, &OptimizerConfig::separate()).unwrap();
    let pattern = pzf_core::zero_pattern(&config);
    let hm = h.as_matrix();
    for (i, j, n) in pattern.tuples() {
        let a = hm.transpose() * out.beamformers.slot(n).unwrap() * hm;
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(a[(i - 1, j - 1)].norm() < 1e-9 * scale);
    }
}

#[test]
fn hybrid_optimization_runs_and_beats_zf_objective() {
    let (config, h) = setup(10, 3, 3, 10.0);
    let config = config
        .with_strategy(Strategy::HybridUniMulticast {
            unicast_source: 1,
            multicast_order: vec![2, 3],
        })
        .unwrap();
    let out = optimize_joint(&h, &config, &OptimizerConfig::joint()).unwrap();
    assert!(out.report.final_objective[0] >= out.report.initial_objective[0]);
    let zf = rate_report(&h, &baseline_set(&h, &config, Design::Zf).unwrap(), &config).unwrap();
    let pzf = rate_report(&h, &out.beamformers, &config).unwrap();
    assert!(pzf.sum_rate >= zf.sum_rate - 1e-12);
}

#[test]
fn reduced_solution_respects_pattern() {
    for seed in 0..20 {
        let (config, h) = setup(seed, 3, 2, 10.0);
        let out = optimize_reduced(&h, &config, &OptimizerConfig::reduced()).unwrap();
        let hm = h.as_matrix();
        let pattern = pzf_core::zero_pattern(&config);
        for (i, j, n) in pattern.tuples() {
            let a = hm.transpose() * out.beamformers.slot(n).unwrap() * hm;
            assert!(a[(i - 1, j - 1)].norm() < 1e-8 * a.norm());
        }
        for g in out.beamformers.matrices() {
            let p = relay_power(g, hm, config.user_powers()).unwrap();
            assert!((p - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn gradient_norm_rule_stops_early_with_loose_tolerance() {
    let (config, h) = setup(2, 3, 3, 10.0);
    let mut opt = OptimizerConfig::joint();
    opt.stop = StopRule::GradientNorm {
        tolerance: 1e6,
        max_iterations: 50,
    };
    let out = optimize_joint(&h, &config, &opt).unwrap();
    assert_eq!(out.report.iterations, vec![0]);
}

#[test]
fn invalid_optimizer_settings_are_rejected() {
    let (config, h) = setup(2, 3, 3, 10.0);
    let mut opt = OptimizerConfig::joint();
    opt.step_size = 0.0;
    assert!(optimize_joint(&h, &config, &opt).is_err());
    let mut opt = OptimizerConfig::joint();
    opt.stop = StopRule::RelativeImprovement {
        threshold: 0.05,
        max_iterations: 0,
    };
    assert!(optimize_joint(&h, &config, &opt).is_err());
}

#[test]
fn too_few_antennas_for_equivalent_channels() {
    let (config, h) = setup(2, 3, 2, 10.0);
    assert!(optimize_joint(&h, &config, &OptimizerConfig::joint()).is_err());
    assert!(optimize_reduced(&h, &config, &OptimizerConfig::reduced()).is_ok());
}
