//! Probe dynamics: the effective three-level evolution and the full
//! six-level Lindblad master equation.
//!
//! The observable throughout is the surviving auxiliary-level population
//! after the probe time. In the effective picture that is
//!
//! ```text
//! N_a(delta) = n0 * |<a| exp(-i H_f t) |a>|^2
//! ```
//!
//! with the 3x3 probe Hamiltonian from [`models::full_hamiltonian`]. The
//! master equation uses the convention
//!
//! ```text
//! drho/dt = -i (H_eff rho - rho H_eff^dag) + sum_mu 2 L_mu rho L_mu^dag,
//! H_eff   = H - i sum_mu L_mu^dag L_mu,
//! ```
//!
//! under which a single decay channel of rate `Gamma` empties its source
//! population as `exp(-2 Gamma t)` and adiabatic elimination of the excited
//! state leaves loss `gamma = J_L^2 / (2 Gamma_e)`, matching
//! [`SixLevelConfig::effective_gamma`].

use crate::linalg::{evolve, CMat, CVec};
use crate::models::{full_hamiltonian, ProbeConfig, SixLevelConfig, TwoBandParams};
use crate::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Hermiticity tolerance for accepting a density matrix.
const HERMITICITY_TOL: f64 = 1e-10;
/// Upper slack on the trace of an accepted density matrix.
const TRACE_UPPER_TOL: f64 = 1e-6;
/// How negative a diagonal population may be before rejection.
const DIAG_NEG_TOL: f64 = -1e-9;
/// Stability bound on `dt * max(||H||, ||sum L^dag L||)` for the fixed-step
/// RK4 integrator. The default configuration (dt = 1e-3, gamma_e = 123)
/// sits at 0.123; RK4's real-axis stability limit is ~2.78, so 0.25 keeps
/// an order-of-magnitude margin while still rejecting genuinely unstable
/// requests.
const STEP_STABILITY_BOUND: f64 = 0.25;
/// Trace drift beyond this aborts the integration as failed.
const TRACE_DRIFT_LIMIT: f64 = 1e-4;

/// A validated density matrix: Hermitian, trace in [0, 1], non-negative
/// populations (all within numerical slack).
///
/// Positivity of the full spectrum is not enforced, only of the diagonal;
/// that is cheap, catches every integrator blow-up seen in practice, and
/// avoids hauling in an eigensolver for 6x6 Hermitian matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validate and wrap a raw matrix.
    pub fn from_matrix(mat: CMat) -> Result<Self> {
        if !mat.as_slice().iter().all(|z| z.is_finite()) {
            return Err(Error::NumericRange("density matrix has non-finite entries".into()));
        }
        let herm_dev = mat.sub(&mat.adjoint())?.norm_inf();
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix deviates from Hermitian by {herm_dev:.3e}"
            )));
        }
        let tr = mat.trace();
        if tr.im.abs() > HERMITICITY_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix trace has imaginary part {:.3e}",
                tr.im
            )));
        }
        if tr.re < DIAG_NEG_TOL || tr.re > 1.0 + TRACE_UPPER_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix trace {} outside [0, 1]",
                tr.re
            )));
        }
        for i in 0..mat.dim() {
            if mat.get(i, i).re < DIAG_NEG_TOL {
                return Err(Error::InvalidInput(format!(
                    "population {i} is negative: {}",
                    mat.get(i, i).re
                )));
            }
        }
        Ok(Self { mat })
    }

    /// `|psi><psi|`. The state's norm may be below one (subnormalized
    /// preparations are allowed) but not above.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n > 1.0 + TRACE_UPPER_TOL {
            return Err(Error::InvalidInput(format!(
                "pure state norm {n} exceeds 1; density matrices are capped at unit trace"
            )));
        }
        let dim = psi.dim();
        let mut mat = CMat::zeros(dim)?;
        for r in 0..dim {
            for c in 0..dim {
                mat.set(r, c, psi.get(r) * psi.get(c).conj());
            }
        }
        Self::from_matrix(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Population of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.mat.get(index, index).re
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.mat
    }
}

/// Auxiliary-level survival under the effective 3x3 probe Hamiltonian.
pub fn na_effective(tb: &TwoBandParams, probe: &ProbeConfig) -> Result<f64> {
    let h = full_hamiltonian(tb, probe);
    let psi0 = CVec::basis(3, 2)?;
    let psi_t = evolve(&h, &psi0, probe.t)?;
    Ok(probe.n0 * psi_t.get(2).norm_sqr())
}

/// Nonzero entries of a jump operator, as (row, col, value) triplets.
fn triplets(l: &CMat) -> Vec<(usize, usize, C64)> {
    let n = l.dim();
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let v = l.get(r, c);
            if v != C64::ZERO {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// `out = G rho + rho G^dag + sum_mu 2 L_mu rho L_mu^dag` with
/// `G = -i H_eff`, on flat row-major buffers.
fn lindblad_rhs(
    dim: usize,
    g: &[C64],
    jumps: &[Vec<(usize, usize, C64)>],
    rho: &[C64],
    out: &mut [C64],
) {
    out.fill(C64::ZERO);
    for r in 0..dim {
        for k in 0..dim {
            let grk = g[r * dim + k];
            if grk == C64::ZERO {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += grk * rho[k * dim + c];
            }
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = C64::ZERO;
            for k in 0..dim {
                acc += rho[r * dim + k] * g[c * dim + k].conj();
            }
            out[r * dim + c] += acc;
        }
    }
    for t in jumps {
        for &(i, ci, vi) in t {
            for &(j, cj, vj) in t {
                out[i * dim + j] += 2.0 * vi * rho[ci * dim + cj] * vj.conj();
            }
        }
    }
}

/// Fixed-step RK4 integration of the Lindblad master equation.
///
/// `dt` is an upper bound on the step; the actual step divides `t` evenly.
/// The request is rejected up front if `dt * max(||H||, ||sum L^dag L||)`
/// exceeds the stability bound, and the run is rejected afterwards if the
/// trace drifted by more than 1e-4 or the result fails density-matrix
/// validation.
pub fn integrate_master(
    h: &CMat,
    jumps: &[CMat],
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let dim = h.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match Hamiltonian dimension {dim}",
            rho0.dim()
        )));
    }
    for l in jumps {
        if l.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "jump operator dimension {} does not match Hamiltonian dimension {dim}",
                l.dim()
            )));
        }
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidInput(format!("integration time must be >= 0, got {t}")));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
    }

    let mut decay = CMat::zeros(dim)?;
    for l in jumps {
        decay = decay.add(&l.adjoint().mul(l)?)?;
    }
    let scale = h.norm_inf().max(decay.norm_inf());
    if dt * scale > STEP_STABILITY_BOUND {
        return Err(Error::InvalidStep(format!(
            "dt * max(||H||, ||sum L^dag L||) = {:.3} exceeds the stability bound {STEP_STABILITY_BOUND}; reduce dt below {:.3e}",
            dt * scale,
            STEP_STABILITY_BOUND / scale
        )));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }

    // G = -i H_eff = -i H - sum L^dag L.
    let g = h.scale(C64::new(0.0, -1.0)).sub(&decay)?;
    let g = g.as_slice().to_vec();
    let jump_triplets: Vec<_> = jumps.iter().map(triplets).collect();

    let steps = (t / dt - 1e-9).ceil().max(1.0) as usize;
    let step = t / steps as f64;

    let n2 = dim * dim;
    let mut rho = rho0.as_matrix().as_slice().to_vec();
    let tr0 = rho0.trace();
    let mut k1 = vec![C64::ZERO; n2];
    let mut k2 = vec![C64::ZERO; n2];
    let mut k3 = vec![C64::ZERO; n2];
    let mut k4 = vec![C64::ZERO; n2];
    let mut stage = vec![C64::ZERO; n2];

    for _ in 0..steps {
        lindblad_rhs(dim, &g, &jump_triplets, &rho, &mut k1);
        for i in 0..n2 {
            stage[i] = rho[i] + 0.5 * step * k1[i];
        }
        lindblad_rhs(dim, &g, &jump_triplets, &stage, &mut k2);
        for i in 0..n2 {
            stage[i] = rho[i] + 0.5 * step * k2[i];
        }
        lindblad_rhs(dim, &g, &jump_triplets, &stage, &mut k3);
        for i in 0..n2 {
            stage[i] = rho[i] + step * k3[i];
        }
        lindblad_rhs(dim, &g, &jump_triplets, &stage, &mut k4);
        let sixth = step / 6.0;
        for i in 0..n2 {
            rho[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    let mat = CMat::from_rows(dim, &rho)?;
    let drift = (mat.trace().re - tr0).abs();
    if drift > TRACE_DRIFT_LIMIT {
        return Err(Error::IntegratorFailure(format!(
            "trace drifted by {drift:.3e} over {steps} steps (limit {TRACE_DRIFT_LIMIT:.0e})"
        )));
    }
    DensityMatrix::from_matrix(mat).map_err(|e| {
        Error::IntegratorFailure(format!("final state failed validation: {e}"))
    })
}

/// Auxiliary-level survival from the six-level master equation, starting
/// from the auxiliary level: `n0 * rho_aa(t)`.
pub fn na_master(cfg: &SixLevelConfig, t: f64, dt: f64, n0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&n0) {
        return Err(Error::InvalidInput(format!("n0 must lie in [0, 1], got {n0}")));
    }
    let rho0 = DensityMatrix::pure(&CVec::basis(6, 5)?)?;
    let rho_t = integrate_master(&cfg.hamiltonian(), &cfg.jump_operators(), &rho0, t, dt)?;
    Ok(n0 * rho_t.population(5))
}

/// Side-by-side detuning sweep of the six-level master equation and the
/// effective three-level model derived from the same configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationReport {
    pub deltas: Vec<f64>,
    pub na_effective: Vec<f64>,
    pub na_master: Vec<f64>,
    /// `max_i |na_master_i - na_effective_i|`.
    pub max_abs_deviation: f64,
}

/// Compare the full master equation against the adiabatically eliminated
/// model over a detuning grid. Points run in parallel; ordering follows the
/// input grid.
pub fn validate_elimination(
    cfg: &SixLevelConfig,
    t: f64,
    dt: f64,
    n0: f64,
    deltas: &[f64],
) -> Result<EliminationReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidInput("detuning grid is empty".into()));
    }
    let tb = cfg.effective_two_band(0.0)?;
    let pairs: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&delta| -> Result<(f64, f64)> {
            let probe = ProbeConfig::new(cfg.omega, delta, t, n0)?;
            let eff = na_effective(&tb, &probe)?;
            let full = na_master(&cfg.with_delta(delta), t, dt, n0)?;
            Ok((eff, full))
        })
        .collect::<Result<Vec<_>>>()?;
    let na_eff: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let na_full: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let max_abs_deviation = na_eff
        .iter()
        .zip(&na_full)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(EliminationReport {
        deltas: deltas.to_vec(),
        na_effective: na_eff,
        na_master: na_full,
        max_abs_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MrmParams;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn density_matrix_validation() {
        // Non-Hermitian rejected.
        let bad = CMat::from_rows(2, &[C64::ONE, c(0.1, 0.0), c(0.2, 0.0), C64::ZERO]).unwrap();
        assert!(DensityMatrix::from_matrix(bad).is_err());
        // Trace above one rejected.
        let big = CMat::from_rows(2, &[C64::ONE, C64::ZERO, C64::ZERO, C64::ONE]).unwrap();
        assert!(DensityMatrix::from_matrix(big).is_err());
        // Negative population rejected.
        let neg =
            CMat::from_rows(2, &[c(1.0, 0.0), C64::ZERO, C64::ZERO, c(-0.5, 0.0)]).unwrap();
        assert!(DensityMatrix::from_matrix(neg).is_err());
        // A proper pure state passes.
        let rho = DensityMatrix::pure(&CVec::basis(6, 5).unwrap()).unwrap();
        assert_eq!(rho.population(5), 1.0);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn free_evolution_is_identity() {
        let h = CMat::zeros(3).unwrap();
        let rho0 = DensityMatrix::pure(&CVec::basis(3, 1).unwrap()).unwrap();
        let rho_t = integrate_master(&h, &[], &rho0, 5.0, 1e-2).unwrap();
        assert!((rho_t.population(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_rabi_oscillation() {
        // H = sigma_x: population oscillates as sin^2(t).
        let h = CMat::from_rows(2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO]).unwrap();
        let rho0 = DensityMatrix::pure(&CVec::basis(2, 0).unwrap()).unwrap();
        let t = 1.3;
        let rho_t = integrate_master(&h, &[], &rho0, t, 1e-3).unwrap();
        assert!((rho_t.population(1) - t.sin().powi(2)).abs() < 1e-9);
        assert!((rho_t.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decay_rate_follows_factor_two_convention() {
        // One channel of rate G empties the source as exp(-2 G t).
        let g: f64 = 0.8;
        let mut l = CMat::zeros(2).unwrap();
        l.set(0, 1, c(g.sqrt(), 0.0));
        let h = CMat::zeros(2).unwrap();
        let rho0 = DensityMatrix::pure(&CVec::basis(2, 1).unwrap()).unwrap();
        let t = 1.7;
        let rho_t = integrate_master(&h, &[l], &rho0, t, 1e-3).unwrap();
        let expect = (-2.0 * g * t).exp();
        assert!((rho_t.population(1) - expect).abs() < 1e-9);
        assert!((rho_t.population(0) - (1.0 - expect)).abs() < 1e-9);
        assert!((rho_t.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dephasing_kills_coherence_not_population() {
        let rate: f64 = 0.5;
        let mut l = CMat::zeros(2).unwrap();
        l.set(1, 1, c(rate.sqrt(), 0.0));
        let h = CMat::zeros(2).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVec::from_slice(&[c(inv_sqrt2, 0.0), c(inv_sqrt2, 0.0)]).unwrap();
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let t = 2.0;
        let rho_t = integrate_master(&h, &[l], &rho0, t, 1e-3).unwrap();
        assert!((rho_t.population(0) - 0.5).abs() < 1e-9);
        assert!((rho_t.population(1) - 0.5).abs() < 1e-9);
        let coherence = rho_t.as_matrix().get(0, 1).norm();
        assert!((coherence - 0.5 * (-rate * t).exp()).abs() < 1e-9);
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let h = CMat::identity(2).unwrap().scale(c(100.0, 0.0));
        let rho0 = DensityMatrix::pure(&CVec::basis(2, 0).unwrap()).unwrap();
        let err = integrate_master(&h, &[], &rho0, 1.0, 0.01).unwrap_err();
        assert!(matches!(err, Error::InvalidStep(_)));
    }

    #[test]
    fn na_effective_far_detuned_probe_barely_absorbs() {
        let tb = TwoBandParams::new(0.35, c(-0.3, -0.18), 0.0).unwrap();
        let probe = ProbeConfig::default().with_delta(10.0);
        let na = na_effective(&tb, &probe).unwrap();
        assert!(na > 0.999, "far-detuned survival {na}");
    }

    #[test]
    fn na_effective_scales_with_initial_population() {
        let tb = TwoBandParams::new(0.35, c(-0.3, -0.18), 0.0).unwrap();
        let probe_full = ProbeConfig::new(0.019, -0.22, 200.0, 1.0).unwrap();
        let probe_half = ProbeConfig::new(0.019, -0.22, 200.0, 0.5).unwrap();
        let full = na_effective(&tb, &probe_full).unwrap();
        let half = na_effective(&tb, &probe_half).unwrap();
        assert!((half - 0.5 * full).abs() < 1e-12);
    }

    #[test]
    fn master_equation_matches_eliminated_model_at_one_point() {
        // Full sweep comparison lives in the acceptance suite; one detuning
        // here keeps the unit test quick while still exercising the 6x6 path.
        let p = MrmParams::new(0.315, 0.098, 0.122, 0.035, 0.092).unwrap();
        let k = 2.0 * std::f64::consts::PI / 5.0;
        let probe = ProbeConfig::default().with_delta(-0.22);
        let cfg = SixLevelConfig::from_mrm(&p, k, &probe, 4.76, 123.0).unwrap();
        let full = na_master(&cfg, probe.t, 1e-3, probe.n0).unwrap();
        let eff = na_effective(&cfg.effective_two_band(k).unwrap(), &probe).unwrap();
        assert!(
            (full - eff).abs() < 0.01,
            "six-level {full} vs effective {eff} differ by {}",
            (full - eff).abs()
        );
    }
}
