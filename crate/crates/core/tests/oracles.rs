use mta_core::ansatz::{self, AnsatzParameters, StateVector};
use mta_core::linalg::{self, ComplexMatrix};
use mta_core::measurement::{
    exact_target_fidelity, sample_zero_from_probability, Backend, PointerConfig,
    ZeroOutcomeMeter,
};
use mta_core::optimizer::{optimize, rotosolve_step, Merit, ScheduleConfig};
use mta_core::problem::{build_objective, random_instance, unscaled_objective};
use mta_core::rng::{derive_seed, rng_from_seed};
use mta_core::vqls_baseline::{estimate_binomial_sigma, estimate_mta_sigma, estimate_vqls_cost_sigma, pauli_decompose, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

#[test]
fn condition_number_matches_nalgebra_svd() {
    for seed in 0..20 {
        let sys = random_instance(4, seed, 100.0).unwrap();
        let sv = to_nalgebra(sys.matrix()).singular_values();
        let want = sv.max() / sv.min();
        let got = linalg::condition_number(sys.matrix()).unwrap();
        assert!((got - want).abs() <= 1e-8 * want, "seed {seed}: {got} vs {want}");
        assert!((sys.kappa() - want).abs() <= 1e-8 * want);
    }
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = rng_from_seed(11);
    for _ in 0..10 {
        let g = ComplexMatrix::from_fn(16, 16, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = g.add(&g.adjoint()).unwrap();
        let mut want: Vec<f64> = to_nalgebra(&h).symmetric_eigenvalues().iter().cloned().collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = linalg::hermitian_eig(&h).unwrap().eigenvalues;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10 * h.frobenius_norm());
        }
    }
}

#[test]
fn random_objective_has_rank_dim_minus_one() {
    for seed in 0..5 {
        let sys = random_instance(4, seed, 100.0).unwrap();
        let obs = build_objective(&sys, 10).unwrap();
        let lmax = obs.lambda_max();
        let rank = obs.spectrum.eigenvalues.iter().filter(|&&l| l > 1e-10 * lmax).count();
        assert_eq!(rank, 15);
        let x = linalg::classical_solve(&sys).unwrap();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let overlap = linalg::inner(&obs.null_vector(), &linalg::real_to_complex(&x)).norm() / xn;
        assert!((overlap - 1.0).abs() < 1e-10);
    }
}

#[test]
fn instance_sweep_is_symmetric_and_bounded() {
    for seed in 0..100 {
        let sys = random_instance(4, seed, 100.0).unwrap();
        let m = sys.matrix();
        assert!(m.sub(&m.transpose()).unwrap().data().iter().all(|z| z.norm() <= 1e-15));
        assert!(sys.kappa() <= 100.0);
    }
}

#[test]
fn zero_frequency_statistics_over_seeds() {
    let trials = 2000;
    let n = 500;
    for &p in &[0.1, 0.5, 0.83] {
        let r: Vec<f64> = (0..trials)
            .map(|s| sample_zero_from_probability(p, n, derive_seed(99, s)).rel_freq)
            .collect();
        let mean = r.iter().sum::<f64>() / trials as f64;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let want = p * (1.0 - p) / n as f64;
        assert!((mean - p).abs() <= 4.0 * want.sqrt() / (trials as f64).sqrt());
        assert!((var / want - 1.0).abs() <= 0.15, "p {p}: {var} vs {want}");
    }
}

#[test]
fn binomial_sigma_matches_closed_form() {
    for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let est = estimate_binomial_sigma(p, 10_000, 200, 17);
        let want = (p * (1.0 - p) / 1e4).sqrt() / p;
        assert!((est.sigma_rel / want - 1.0).abs() <= 0.15, "p {p}");
    }
}

#[test]
fn shot_driven_meter_statistics_match_zero_probability() {
    let sys = random_instance(2, 3, 100.0).unwrap();
    let obs = build_objective(&sys, 6).unwrap();
    let meter = ZeroOutcomeMeter::new(&obs, PointerConfig::new(6).unwrap(), Backend::Spectral).unwrap();
    let psi = ansatz::prepare_state(&AnsatzParameters::random(2, 1, 8)).unwrap();
    let p0 = meter.zero_probability(&psi).unwrap();
    let stats = estimate_mta_sigma(&meter, &psi, 2000, 1000, 5).unwrap();
    let sd = (p0 * (1.0 - p0) / 2000.0).sqrt();
    assert!((stats.mean - p0).abs() <= 4.0 * sd / 1000f64.sqrt());
    assert!((stats.sigma / sd - 1.0).abs() <= 0.15);
}

#[test]
fn rotosolve_matches_dense_grid_search() {
    for seed in 0..5 {
        let sys = random_instance(2, seed, 100.0).unwrap();
        let obs = build_objective(&sys, 8).unwrap();
        let p = AnsatzParameters::random(2, 1, seed + 50);
        for d in [0, 7, 13] {
            let f = |t: f64| {
                let mut q = p.clone();
                q.angles[d] = t;
                exact_target_fidelity(&obs, &ansatz::prepare_state(&q).unwrap()).unwrap()
            };
            let up = rotosolve_step(p.angles[d], |t| Ok(f(t))).unwrap();
            let grid_max = (0..10_000)
                .map(|i| f(-PI + 2.0 * PI * (i as f64 + 1.0) / 10_000.0))
                .fold(f64::MIN, f64::max);
            let got = f(up.theta);
            assert!(got >= grid_max - 1e-10);
            assert!(got >= up.samples.iter().cloned().fold(f64::MIN, f64::max) - 1e-10);
        }
    }
}

#[test]
fn ansatz_reaches_random_targets() {
    let gates = ansatz::circuit(4, 3);
    let mut reached = 0;
    for t in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(2024, t));
        let target: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let target = StateVector::from_amplitudes(target).unwrap();
        let mut angles = AnsatzParameters::random(4, 3, derive_seed(2025, t)).angles;
        let fid = |angles: &[f64]| {
            let psi = ansatz::run_circuit(&gates, 4, angles);
            ansatz::state_overlap(&psi, &target).unwrap().norm_sqr()
        };
        'sweeps: for _ in 0..10_000 {
            for d in 0..angles.len() {
                let mut a = angles.clone();
                let up = rotosolve_step(angles[d], |th| {
                    a[d] = th;
                    Ok(fid(&a))
                })
                .unwrap();
                angles[d] = up.theta;
            }
            if fid(&angles) >= 0.99 {
                reached += 1;
                break 'sweeps;
            }
        }
    }
    assert!(reached >= 95, "{reached}/100 targets reached");
}

#[test]
fn noise_free_control_run_converges_in_envelope() {
    let sys = random_instance(4, 1, 20.0).unwrap();
    let obs = build_objective(&sys, 11).unwrap();
    let meter = ZeroOutcomeMeter::new(&obs, PointerConfig::new(11).unwrap(), Backend::Spectral).unwrap();
    let mut sched = ScheduleConfig::fixed(1);
    sched.max_iterations = 3000;
    let out = optimize(&meter, &AnsatzParameters::random(4, 3, 7), &sched, Merit::NoiseFree, 1).unwrap();
    let f = out.trace.fidelities();
    let mut best = f64::MIN;
    let envelope: Vec<f64> = f.iter().map(|&v| { best = best.max(v); best }).collect();
    assert!(envelope.windows(2).all(|w| w[1] >= w[0]));
    assert!(*envelope.last().unwrap() >= 0.999);
    // With exact merit the merit itself never decreases between iterations.
    let r = out.trace.rel_freqs();
    assert!(r.windows(2).all(|w| w[1] >= w[0] - 1e-10));
}

#[test]
fn vqls_spread_matches_delta_method() {
    // One Pauli string: M†M = c²I is measured exactly, so only the numerator fluctuates.
    let p = PauliString::from_label("XZ").unwrap();
    let m = p.to_matrix().scale_real(0.7);
    let b: Vec<Complex64> = [0.5, -0.1, 0.3, 0.8].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let psi = ansatz::prepare_state(&AnsatzParameters::random(2, 1, 4)).unwrap();
    let n_total = 100_000;
    let reps = 600;
    let est = estimate_vqls_cost_sigma(&m, &b, &psi, n_total, reps, 21).unwrap();

    let bn = linalg::norm(&b);
    let b_hat: Vec<Complex64> = b.iter().map(|v| v / bn).collect();
    let num = pauli_decompose(&unscaled_objective(&m, &b_hat).unwrap()).unwrap();
    let den = pauli_decompose(&m.adjoint().matmul(&m).unwrap()).unwrap();
    assert_eq!(den.len(), 1);
    let shots = (n_total / (num.len() + den.len()) as u64) as f64;
    let amps = psi.amplitudes();
    let n_val: f64 = num.terms.iter().map(|(q, c)| c.re * q.expectation(amps)).sum();
    let d_val = den.terms[0].1.re;
    let var_n: f64 = num
        .terms
        .iter()
        .map(|(q, c)| c.re * c.re * (1.0 - q.expectation(amps).powi(2)) / shots)
        .sum();
    let want = var_n.sqrt() / d_val / (n_val / d_val).abs();
    assert!((est.sigma_rel / want - 1.0).abs() <= 0.1, "{} vs {want}", est.sigma_rel);
    assert!((est.mean - n_val / d_val).abs() <= 4.0 * est.sigma / (reps as f64).sqrt());
}
