use proptest::prelude::*;

use rfs_core::geometry::uniform_blockade_geometry;
use rfs_core::operators::Level;
use rfs_core::{
    evolve_trajectory, integrate_lindblad, run_ensemble, uniform_grid, AtomRates,
    IntegratorSettings, PulseSchedule, RampKind, SchemeConfig, SimulationConfig,
};

fn schedule(omega_er: f64, peak: f64, rise: f64, delta_e: f64) -> PulseSchedule {
    PulseSchedule {
        omega_er_level: omega_er,
        omega_ge_peak: peak,
        t_start_ge: 0.5,
        t_rise: rise,
        t_hold: 0.5,
        t_fall: rise,
        ramp_kind: RampKind::SineSquared,
        delta_e_level: delta_e,
        total_duration: 2.0 * rise + 1.5,
    }
}

fn config(
    n: usize,
    rates: AtomRates,
    schedule: PulseSchedule,
    blockade_factor: f64,
    intervals: usize,
) -> SimulationConfig {
    let w = schedule.max_linewidth(rates.gamma_e_total()).unwrap();
    SimulationConfig {
        rates,
        schedule,
        geometry: uniform_blockade_geometry(n, blockade_factor * w).unwrap(),
        output_times: uniform_grid(schedule.total_duration, intervals),
        integrator: IntegratorSettings::default(),
        pruning: true,
        initial_levels: None,
    }
}

#[test]
fn stirap_round_trip_without_decay() {
    let rates = AtomRates::new(0.0, 0.0, 0.0, 0.0).unwrap();
    let sim = config(1, rates, schedule(20.0, 100.0, 6.0, 0.0), 0.0, 1000);
    let rec = evolve_trajectory(&sim, 0).unwrap();
    assert!(rec.jumps.is_empty());
    assert!(rec.final_populations[0][Level::G.digit()] > 0.99);
    let max_e = rec
        .samples
        .iter()
        .map(|s| s.populations[2])
        .fold(0.0, f64::max);
    let max_r = rec
        .samples
        .iter()
        .map(|s| s.populations[3])
        .fold(0.0, f64::max);
    assert!(max_e < 0.01, "{max_e}");
    // The dark state passes through the Rydberg level.
    assert!(max_r > 0.9, "{max_r}");
}

#[test]
fn blockade_suppresses_double_rydberg() {
    let rates = SchemeConfig::SchemeA.rates(0.003, 0.0).unwrap();
    let sim = config(2, rates, schedule(20.0, 100.0, 4.0, 0.0), 10.0, 300);
    let res = integrate_lindblad(&sim).unwrap();
    let blocked = res.double_rydberg.iter().copied().fold(0.0, f64::max);
    assert!(blocked < 1e-2, "{blocked}");

    let free =
        integrate_lindblad(&config(2, rates, schedule(20.0, 100.0, 4.0, 0.0), 0.0, 300)).unwrap();
    let unblocked = free.double_rydberg.iter().copied().fold(0.0, f64::max);
    assert!(unblocked > 10.0 * blocked, "{unblocked} vs {blocked}");
}

#[test]
fn ensemble_mean_is_non_increasing() {
    let rates = SchemeConfig::SchemeA.rates(0.003, 0.1).unwrap();
    let sim = config(3, rates, schedule(5.0, 30.0, 1.5, 0.0), 10.0, 30);
    let (res, _) = run_ensemble(&sim, 100, 3, false).unwrap();
    for k in 1..res.times.len() {
        let rise = res.mean_trapped[k] - res.mean_trapped[k - 1];
        let se = res.mean_trapped_stderr[k].max(res.mean_trapped_stderr[k - 1]);
        assert!(rise <= 2.0 * se + 1e-12, "t = {}: +{rise}", res.times[k]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectory_samples_are_normalized(seed in 0u64..1000, n in 1usize..=3, dephasing in prop::bool::ANY) {
        let rates = SchemeConfig::SchemeA.rates(0.003, if dephasing { 0.1 } else { 0.0 }).unwrap();
        let sim = config(n, rates, schedule(5.0, 30.0, 1.0, 0.0), 10.0, 12);
        let rec = evolve_trajectory(&sim, seed).unwrap();
        for s in &rec.samples {
            let total: f64 = s.populations.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(s.mean_trapped <= n as f64 + 1e-9);
        }
        let p: f64 = rec.final_survival.iter().sum();
        prop_assert!((p - 1.0).abs() < 1e-9);
        for w in rec.jumps.windows(2) {
            prop_assert!(w[0].t <= w[1].t);
        }
    }

    #[test]
    fn survival_never_recovers(seed in 0u64..1000) {
        let rates = SchemeConfig::SchemeA.rates(0.003, 0.0).unwrap();
        let sim = config(2, rates, schedule(5.0, 30.0, 1.0, 0.0), 10.0, 12);
        let rec = evolve_trajectory(&sim, seed).unwrap();
        for w in rec.samples.windows(2) {
            // Atoms in |s> never return.
            prop_assert!(w[1].populations[1] >= w[0].populations[1] - 1e-9);
        }
    }
}
