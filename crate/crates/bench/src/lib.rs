//! Fixtures shared by the benchmarks: deterministic phase points and
//! scenarios with short horizons.

use esym_core::gauge::GaugePhasePoint;
use esym_core::{build_scenario, EFrame, IntegratorConfig, Params, PhasePoint, ScenarioSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` phase points with `|q|, |m| < 1`, away from the boundary `q₁ = 0`.
pub fn phase_points(frame: &EFrame, count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut q: Vec<f64> = (0..frame.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if q[0].abs() < 0.1 {
                q[0] = 0.5;
            }
            let m = (0..frame.rank()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            PhasePoint::new(q, m)
        })
        .collect()
}

/// The default state of a gauged scenario, as a gauge phase point.
pub fn gauge_point(spec: &ScenarioSpec) -> GaugePhasePoint {
    GaugePhasePoint::new(spec.initial.q.clone(), spec.initial.m.clone(), spec.initial.charge.clone())
}

/// A built-in scenario integrated to `horizon` only.
pub fn short_scenario(name: &str, horizon: f64) -> ScenarioSpec {
    let spec = build_scenario(name, &Params::new()).expect("built-in scenario");
    let cfg = IntegratorConfig::rk45(1e-10, 1e-12, horizon);
    spec.with_integrator(cfg)
}
