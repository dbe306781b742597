//! Workloads shared by the benchmarks in `benches/`.

use rfs_core::geometry::uniform_blockade_geometry;
use rfs_core::{
    uniform_grid, IntegratorSettings, PulseSchedule, RampKind, SchemeConfig, SimulationConfig,
};

/// Closed-scheme filtering pulse on `n` atoms with the uniform blockade at
/// ten linewidths.
pub fn closed_scheme(n: usize, pruning: bool) -> SimulationConfig {
    let rates = SchemeConfig::scheme_b()
        .rates(0.003, 0.0)
        .expect("default rates");
    let schedule = PulseSchedule {
        omega_er_level: 5.0,
        omega_ge_peak: 30.0,
        t_start_ge: 1.0,
        t_rise: 5.0,
        t_hold: 4.0,
        t_fall: 5.0,
        ramp_kind: RampKind::SineSquared,
        delta_e_level: 0.0,
        total_duration: 16.0,
    };
    let w = schedule
        .max_linewidth(rates.gamma_e_total())
        .expect("valid schedule");
    SimulationConfig {
        rates,
        schedule,
        geometry: uniform_blockade_geometry(n, 10.0 * w).expect("valid geometry"),
        output_times: uniform_grid(schedule.total_duration, 20),
        integrator: IntegratorSettings::default(),
        pruning,
        initial_levels: None,
    }
}
