//! Adiabatic elimination quality as the excited state gets faster.
//!
//! The six-level master equation and the three-level effective evolution
//! describe the same line up to corrections that shrink as the eliminated
//! state's decay rate grows. Doubling gamma_e twice, with J_L rescaled to
//! hold the effective loss fixed, must tighten the agreement each time.

use nhspec::dynamics::validate_elimination;
use nhspec::models::{MrmParams, ProbeConfig, SixLevelConfig};
use nhspec::spectroscopy::uniform_grid;
use std::f64::consts::PI;

#[test]
fn elimination_error_shrinks_with_gamma_e() {
    let p = MrmParams::new(0.315, 0.098, 0.122, 0.035, 0.092).unwrap();
    let k = 2.0 * PI / 5.0;
    let probe = ProbeConfig::default();
    let deltas = uniform_grid(-0.6, 0.6, 31).unwrap();
    let gamma: f64 = 0.092;

    let mut deviations = Vec::new();
    for gamma_e in [123.0, 246.0, 492.0] {
        let jl = (2.0 * gamma_e * gamma).sqrt();
        let cfg = SixLevelConfig::from_mrm(&p, k, &probe, jl, gamma_e).unwrap();
        assert!((cfg.effective_gamma() - gamma).abs() < 1e-12);
        // Step chosen at a fixed fraction of the stability bound, so the
        // integrator resolves the fast transient equally well at every rate
        // and the comparison isolates the elimination error itself.
        let dt = 0.2 / gamma_e;
        let report = validate_elimination(&cfg, probe.t, dt, probe.n0, &deltas).unwrap();
        deviations.push(report.max_abs_deviation);
    }

    assert!(
        deviations[0] < 0.01,
        "elimination off by {} at the physical rate",
        deviations[0]
    );
    assert!(
        deviations[1] < deviations[0] && deviations[2] < deviations[1],
        "deviation should fall as gamma_e doubles: {deviations:?}"
    );
    assert!(
        deviations[2] > 1e-4,
        "residual elimination error vanished ({deviations:?}); master and effective paths may be aliased"
    );
}
