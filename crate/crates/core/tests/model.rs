use gfra::rng::{stream_rng, trial_seed, Stream};
use gfra::simulator::{
    asymptotic_energy, energy_measurement, energy_measurement_with_pilots, monte_carlo_energy, pilot_signal,
    sample_channels, sample_noise, simulate_trial, ActivityVector, EnergySource, TrialRealization,
};
use gfra::sysmodel::{build_topology, generate_code, System, SystemConfig};
use gfra::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(grid_side: usize, tau: usize, t: usize) -> SystemConfig {
    SystemConfig {
        num_users: grid_side * grid_side,
        grid_side,
        num_pilots: tau,
        seq_len: t,
        antennas_per_bs: 4,
        ..SystemConfig::paper()
    }
}

#[test]
fn paper_defaults() {
    let c = SystemConfig::paper();
    assert_eq!(
        (c.num_users, c.num_bs, c.antennas_per_bs, c.num_pilots, c.seq_len, c.num_events),
        (1296, 4, 32, 10, 10, 3)
    );
    assert_eq!((c.event_variance, c.neighbor_radius, c.snr_db), (0.001, 0.05, 10.0));
    assert_eq!(c.num_measurements(), 100);
    assert_eq!(c.total_antennas(), 128);
}

#[test]
fn every_user_sees_the_target_snr() {
    let sys = System::build(&SystemConfig::paper(), 1).unwrap();
    let target = 10f64.powf(sys.config.snr_db / 10.0);
    for snr in sys.fading.received_snr(sys.config.noise_power) {
        approx::assert_relative_eq!(snr, target, max_relative = 1e-12);
    }
    let weakest = sys.fading.argmin_beta();
    assert_eq!(sys.fading.powers[weakest], sys.config.max_power);
    assert!(sys.fading.powers.iter().all(|&p| p > 0.0 && p <= sys.config.max_power));
}

#[test]
fn infeasible_code_lengths_are_rejected() {
    let cfg = small(3, 2, 3); // 9 users, 8 sequences
    let err = generate_code(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
    assert!(matches!(err, Error::InfeasibleCodes { users: 9, .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn pilot_occupancy_is_uniform() {
    // Chi-square over all (interval, pilot) cells; T (tau_p - 1) degrees of
    // freedom, compared with the Wilson-Hilferty 0.999 quantile.
    let cfg = SystemConfig::paper();
    let code = generate_code(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let (tau, t_len, k) = (cfg.num_pilots, cfg.seq_len, cfg.num_users);
    let expected = k as f64 / tau as f64;
    let mut stat = 0.0;
    for t in 0..t_len {
        let mut counts = vec![0usize; tau];
        for user in 0..k {
            counts[code.pilot(user, t)] += 1;
        }
        stat += counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>();
    }
    let dof = (t_len * (tau - 1)) as f64;
    let z = 3.090_232_306_167_813; // standard normal 0.999 quantile
    let h = 2.0 / (9.0 * dof);
    let critical = dof * (1.0 - h + z * h.sqrt()).powi(3);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn asymptotic_energy_is_a_alpha() {
    let sys = System::build(&small(6, 4, 4), 3).unwrap();
    let act = ActivityVector::from_support(36, &[0, 7, 20]);
    let y = asymptotic_energy(&sys.matrix, &act).unwrap();
    let want = &sys.matrix.a * act.to_f64();
    assert_eq!(y.y, want.as_slice().to_vec());
    assert_eq!(y.source, EnergySource::Asymptotic);
}

#[test]
fn monte_carlo_energy_is_unbiased() {
    let cfg = small(6, 4, 3);
    let sys = System::build(&cfg, 4).unwrap();
    let act = ActivityVector::from_support(36, &[1, 2, 14, 30]);
    let ay = asymptotic_energy(&sys.matrix, &act).unwrap().y;
    let n = 4000;
    let mut sum = vec![0.0; ay.len()];
    let mut sum_sq = vec![0.0; ay.len()];
    for i in 0..n {
        let s = trial_seed(4, i);
        let y = monte_carlo_energy(
            &sys,
            &act,
            &mut stream_rng(s, Stream::Channels),
            &mut stream_rng(s, Stream::Noise),
        )
        .unwrap()
        .y;
        for j in 0..y.len() {
            sum[j] += y[j];
            sum_sq[j] += y[j] * y[j];
        }
    }
    let nf = n as f64;
    for j in 0..ay.len() {
        let mean = sum[j] / nf;
        let var = sum_sq[j] / nf - mean * mean;
        let se = (var / nf).sqrt();
        assert!((mean - ay[j]).abs() < 5.0 * se, "row {j}: mean {mean}, expected {}, se {se}", ay[j]);
    }
}

#[test]
fn energy_is_invariant_to_a_unitary_pilot_basis() {
    let cfg = small(5, 4, 3);
    let sys = System::build(&cfg, 5).unwrap();
    let act = ActivityVector::from_support(25, &[0, 3, 11, 24]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = sample_channels(&sys.fading, &cfg, &act.support(), &mut rng);
    let noise = sample_noise(&cfg, &mut rng);

    // Random unitary from the QR factorization of a complex Gaussian matrix.
    let g = DMatrix::from_fn(4, 4, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let q = g.qr().q();
    let ident = DMatrix::identity(4, 4);
    for t in 0..cfg.seq_len {
        let y_std = pilot_signal(&sys.code, &act, &ch, &sys.fading, &cfg, t, &ident, &noise).unwrap();
        let rotated_noise = &noise * q.adjoint();
        let y_rot = pilot_signal(&sys.code, &act, &ch, &sys.fading, &cfg, t, &q, &rotated_noise).unwrap();
        let e_std = energy_measurement(&y_std, &cfg);
        let e_rot = energy_measurement_with_pilots(&y_rot, &q, &cfg);
        for (a, b) in e_std.iter().zip(&e_rot) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn trials_are_reproducible_and_round_trip_through_json() {
    let sys = System::build(&small(6, 4, 4), 6).unwrap();
    let a = simulate_trial(&sys, 77, EnergySource::MonteCarlo).unwrap();
    let b = simulate_trial(&sys, 77, EnergySource::MonteCarlo).unwrap();
    assert_eq!(a, b);
    let c = simulate_trial(&sys, 78, EnergySource::MonteCarlo).unwrap();
    assert_ne!(a.energy.y, c.energy.y);

    let text = gfra::jsonfmt::to_string(&a).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["seed", "events", "alpha", "y", "source"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["source"], "MONTE_CARLO");
    let back: TrialRealization = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a);
}

#[test]
fn neighbor_sets_are_symmetric() {
    let cfg = SystemConfig::paper();
    let topo = build_topology(&cfg).unwrap();
    let sets = topo.neighbor_sets(cfg.neighbor_radius);
    for (k, s) in sets.iter().enumerate() {
        assert!(s.contains(&k));
        assert!((4..=9).contains(&s.len()));
        for &i in s {
            assert!(sets[i].contains(&k));
        }
    }
    assert_eq!(sets[0].len(), 4);
    assert_eq!(sets[1].len(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Channel inversion makes every column of A carry the same energy.
    #[test]
    fn measurement_columns_have_equal_norm(
        side in 3usize..9,
        tau in 2usize..6,
        t in 2usize..5,
        snr in -5.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let mut cfg = small(side, tau, t);
        cfg.snr_db = snr;
        prop_assume!((tau as u128).pow(t as u32) >= cfg.num_users as u128);
        let sys = System::build(&cfg, seed).unwrap();
        let want = sys.energy_scale() * (t as f64).sqrt();
        for n in sys.matrix.column_norms() {
            prop_assert!((n - want).abs() <= 1e-12 * want);
        }
        prop_assert!(sys.matrix.a.iter().all(|&v| v >= 0.0));
        approx::assert_relative_eq!(sys.fading.beta_min / cfg.noise_power * cfg.max_power, 10f64.powf(snr / 10.0), max_relative = 1e-12);
    }

    #[test]
    fn codes_are_unique_and_in_range(tau in 2usize..8, t in 2usize..6, seed in any::<u64>()) {
        let k = ((tau as u64).pow(t as u32)).min(200) as usize;
        let cfg = SystemConfig { num_users: k, num_pilots: tau, seq_len: t, ..SystemConfig::paper() };
        let code = generate_code(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for row in &code.hops {
            prop_assert_eq!(row.len(), t);
            prop_assert!(row.iter().all(|&p| p >= 1 && p as usize <= tau));
            prop_assert!(seen.insert(row.clone()));
        }
        let again = generate_code(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(code, again);
    }
}
