//! Spectral-line synthesis.
//!
//! A spectral line is the auxiliary-level survival probability versus probe
//! detuning at a fixed quasimomentum. Lines come in three flavors:
//!
//! * noiseless, straight from the effective three-level evolution;
//! * noiseless through the six-level master equation, which is the only way
//!   to include auxiliary-level dephasing;
//! * noisy, emulating finite measurement statistics: each repetition draws
//!   a loss-rate fluctuation and per-detuning projective shot counts, and
//!   repetitions are averaged exactly like the experiment averages rounds.
//!
//! Randomness is fully reproducible. Each repetition consumes its own
//! counter-mode stream of one seeded generator, and a k sweep derives one
//! seed per quasimomentum, so results are independent of thread scheduling
//! and of which subset of lines is regenerated.

use crate::dynamics::{na_effective, na_master};
use crate::models::{
    lk_at_k, mrm_at_k, LkParams, MrmParams, ProbeConfig, SixLevelConfig, TwoBandParams,
    DEFAULT_GAMMA_E,
};
use crate::{Error, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

/// Step bound handed to the master-equation integrator when a line needs
/// the six-level path.
const MASTER_DT: f64 = 1e-3;

/// Which band model generates a line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelDescriptor {
    Mrm(MrmParams),
    Lk(LkParams),
    /// A bare two-band reduction, the same at every quasimomentum.
    Generic { c: f64, d: C64 },
}

impl ModelDescriptor {
    pub fn at_k(&self, k: f64) -> Result<TwoBandParams> {
        match self {
            Self::Mrm(p) => mrm_at_k(p, k),
            Self::Lk(p) => lk_at_k(p, k),
            Self::Generic { c, d } => TwoBandParams::new(*c, *d, k),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Mrm(_) => "mrm",
            Self::Lk(_) => "lk",
            Self::Generic { .. } => "generic",
        }
    }
}

/// Measurement-statistics emulation for noisy lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Projective measurements per detuning per repetition.
    pub shots: u64,
    /// Experimental rounds averaged into one line.
    pub reps: u32,
    /// Half-width of the uniform multiplicative fluctuation applied to the
    /// dissipative part of the band model each repetition.
    pub gamma_fluct: f64,
    /// When set, lines run through the six-level master equation with
    /// auxiliary-level dephasing of rate `1 / t2`.
    pub dephasing_t2: Option<f64>,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { shots: 1000, reps: 20, gamma_fluct: 0.2, dephasing_t2: None, seed: 0 }
    }
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidInput("noise model needs at least one shot".into()));
        }
        if self.reps < 2 {
            return Err(Error::InvalidInput(format!(
                "noise model needs at least two repetitions for a sample deviation, got {}",
                self.reps
            )));
        }
        if !self.gamma_fluct.is_finite() || !(0.0..1.0).contains(&self.gamma_fluct) {
            return Err(Error::InvalidInput(format!(
                "gamma_fluct must lie in [0, 1), got {}",
                self.gamma_fluct
            )));
        }
        if let Some(t2) = self.dephasing_t2 {
            if !t2.is_finite() || t2 <= 0.0 {
                return Err(Error::InvalidInput(format!("dephasing t2 must be positive, got {t2}")));
            }
        }
        Ok(())
    }
}

/// Provenance and probe settings a line was generated with; fitting reads
/// the probe parameters back from here.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMeta {
    pub t: f64,
    pub omega: f64,
    pub n0: f64,
    pub shots: u64,
    pub reps: u32,
    pub seed: u64,
    pub model: &'static str,
    pub k: f64,
    pub gamma_fluct: f64,
    /// Distribution family of the loss fluctuation.
    pub gamma_fluct_dist: &'static str,
    pub dephasing_t2: Option<f64>,
}

/// One spectral line: detuning grid, mean survival, and per-point sample
/// standard deviation (zero for noiseless lines).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLine {
    pub deltas: Vec<f64>,
    pub na_mean: Vec<f64>,
    pub na_std: Vec<f64>,
    pub meta: LineMeta,
}

impl SpectralLine {
    pub fn new(
        deltas: Vec<f64>,
        na_mean: Vec<f64>,
        na_std: Vec<f64>,
        meta: LineMeta,
    ) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidInput("spectral line has no points".into()));
        }
        if deltas.len() != na_mean.len() || deltas.len() != na_std.len() {
            return Err(Error::DimensionMismatch(format!(
                "spectral line columns disagree: {} deltas, {} means, {} deviations",
                deltas.len(),
                na_mean.len(),
                na_std.len()
            )));
        }
        if !deltas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "detuning grid must be strictly increasing".into(),
            ));
        }
        for (name, col) in [("delta", &deltas), ("na_mean", &na_mean), ("na_std", &na_std)] {
            if !col.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericRange(format!("column {name} has non-finite values")));
            }
        }
        if na_mean.iter().any(|v| *v < -1e-9 || *v > 1.0 + 1e-6) {
            return Err(Error::InvalidInput("na_mean outside [0, 1]".into()));
        }
        if na_std.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidInput("na_std must be non-negative".into()));
        }
        Ok(Self { deltas, na_mean, na_std, meta })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Uniform grid of `points` values from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {points}")));
    }
    if !(min.is_finite() && max.is_finite()) || min >= max {
        return Err(Error::InvalidInput(format!("grid bounds [{min}, {max}] are invalid")));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { max } else { min + step * i as f64 })
        .collect())
}

/// Quasimomentum grid over one Brillouin zone, both endpoints included
/// (`k = 0` and `k = 2 pi`).
pub fn k_grid(points: usize) -> Result<Vec<f64>> {
    uniform_grid(0.0, 2.0 * std::f64::consts::PI, points)
}

/// SplitMix64 finalizer, used to whiten k indices into seed offsets.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The seed a k sweep hands to the line at `k_index`. Exposed so callers
/// can regenerate any single line of a sweep bit-for-bit.
pub fn line_seed_for_k(sweep_seed: u64, k_index: usize) -> u64 {
    sweep_seed ^ splitmix64(k_index as u64)
}

/// The same reduction with its dissipative part rescaled; repetition noise
/// applies this with a random factor, envelope checks with fixed ones.
pub fn scale_dissipation(tb: &TwoBandParams, factor: f64) -> Result<TwoBandParams> {
    TwoBandParams::new(tb.c, C64::new(tb.d.re, tb.d.im * factor), tb.k)
}

/// Map a two-band reduction onto a six-level configuration (gauge jx = c,
/// jy = 0) so the master-equation path can serve any descriptor.
fn six_level_for(tb: &TwoBandParams, probe: &ProbeConfig, t2: Option<f64>) -> Result<SixLevelConfig> {
    let gamma = -0.5 * tb.d.im;
    if gamma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "master-equation lines require loss, got gain Im d = {}",
            tb.d.im
        )));
    }
    let jz = -0.5 * tb.d.re;
    let jl = (2.0 * DEFAULT_GAMMA_E * gamma).sqrt();
    let third = DEFAULT_GAMMA_E / 3.0;
    SixLevelConfig::new(
        tb.c,
        0.0,
        jz,
        probe.omega,
        probe.delta,
        jl,
        DEFAULT_GAMMA_E,
        [third, third, third],
        t2.map(|t2| 1.0 / t2),
    )
}

fn na_point(tb: &TwoBandParams, probe: &ProbeConfig, t2: Option<f64>) -> Result<f64> {
    match t2 {
        None => na_effective(tb, probe),
        Some(_) => {
            let cfg = six_level_for(tb, probe, t2)?;
            na_master(&cfg, probe.t, MASTER_DT, probe.n0)
        }
    }
}

/// Noiseless spectral line from the effective three-level evolution.
pub fn line_noiseless(
    model: &ModelDescriptor,
    k: f64,
    probe: &ProbeConfig,
    deltas: &[f64],
) -> Result<SpectralLine> {
    line_noiseless_inner(model, k, probe, deltas, None)
}

/// Noiseless spectral line through the six-level master equation with
/// auxiliary-level dephasing of time constant `t2`.
pub fn line_noiseless_dephased(
    model: &ModelDescriptor,
    k: f64,
    probe: &ProbeConfig,
    deltas: &[f64],
    t2: f64,
) -> Result<SpectralLine> {
    if !t2.is_finite() || t2 <= 0.0 {
        return Err(Error::InvalidInput(format!("dephasing t2 must be positive, got {t2}")));
    }
    line_noiseless_inner(model, k, probe, deltas, Some(t2))
}

fn line_noiseless_inner(
    model: &ModelDescriptor,
    k: f64,
    probe: &ProbeConfig,
    deltas: &[f64],
    t2: Option<f64>,
) -> Result<SpectralLine> {
    let tb = model.at_k(k)?;
    let na: Vec<f64> = deltas
        .par_iter()
        .map(|&delta| na_point(&tb, &probe.with_delta(delta), t2))
        .collect::<Result<Vec<_>>>()?;
    let meta = LineMeta {
        t: probe.t,
        omega: probe.omega,
        n0: probe.n0,
        shots: 0,
        reps: 1,
        seed: 0,
        model: model.label(),
        k,
        gamma_fluct: 0.0,
        gamma_fluct_dist: "uniform",
        dephasing_t2: t2,
    };
    SpectralLine::new(deltas.to_vec(), na.clone(), vec![0.0; na.len()], meta)
}

/// All repetitions of a noisy line, one survival curve per repetition.
///
/// Repetition `r` uses stream `r` of a ChaCha8 generator seeded with
/// `noise.seed`, draws its loss fluctuation first and then one binomial
/// count per detuning in ascending order. [`line_noisy`] averages exactly
/// these curves.
pub fn line_repetitions(
    model: &ModelDescriptor,
    k: f64,
    probe: &ProbeConfig,
    deltas: &[f64],
    noise: &NoiseModel,
) -> Result<Vec<Vec<f64>>> {
    noise.validate()?;
    if deltas.is_empty() {
        return Err(Error::InvalidInput("detuning grid is empty".into()));
    }
    let tb = model.at_k(k)?;
    let lo = 1.0 - noise.gamma_fluct;
    let hi = 1.0 + noise.gamma_fluct;

    // Loss fluctuations are drawn per repetition before any shot counts, so
    // the survival curves can be evaluated in parallel afterwards without
    // touching the generators.
    let mut rep_rngs = Vec::with_capacity(noise.reps as usize);
    for r in 0..noise.reps {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(r as u64);
        let factor = rng.gen_range(lo..=hi);
        rep_rngs.push((factor, rng));
    }

    let curves: Vec<Vec<f64>> = rep_rngs
        .par_iter()
        .map(|(factor, _)| -> Result<Vec<f64>> {
            let tb_r = scale_dissipation(&tb, *factor)?;
            deltas
                .par_iter()
                .map(|&delta| na_point(&tb_r, &probe.with_delta(delta), noise.dephasing_t2))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(noise.reps as usize);
    for ((_, rng), curve) in rep_rngs.into_iter().zip(curves) {
        let mut rng = rng;
        let mut sampled = Vec::with_capacity(curve.len());
        for q in curve {
            let p = q.clamp(0.0, 1.0);
            let dist = Binomial::new(noise.shots, p).map_err(|e| {
                Error::InvalidInput(format!("binomial sampling rejected p = {p}: {e}"))
            })?;
            sampled.push(dist.sample(&mut rng) as f64 / noise.shots as f64);
        }
        out.push(sampled);
    }
    Ok(out)
}

/// Noisy spectral line: mean and sample standard deviation over the
/// repetitions of [`line_repetitions`].
pub fn line_noisy(
    model: &ModelDescriptor,
    k: f64,
    probe: &ProbeConfig,
    deltas: &[f64],
    noise: &NoiseModel,
) -> Result<SpectralLine> {
    let reps = line_repetitions(model, k, probe, deltas, noise)?;
    let n = reps.len() as f64;
    let points = deltas.len();
    let mut mean = vec![0.0; points];
    for rep in &reps {
        for (m, v) in mean.iter_mut().zip(rep) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; points];
    for rep in &reps {
        for (s, (v, m)) in std.iter_mut().zip(rep.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / (n - 1.0)).sqrt();
    }
    let meta = LineMeta {
        t: probe.t,
        omega: probe.omega,
        n0: probe.n0,
        shots: noise.shots,
        reps: noise.reps,
        seed: noise.seed,
        model: model.label(),
        k,
        gamma_fluct: noise.gamma_fluct,
        gamma_fluct_dist: "uniform",
        dephasing_t2: noise.dephasing_t2,
    };
    SpectralLine::new(deltas.to_vec(), mean, std, meta)
}

/// One spectral line per quasimomentum. Lines are generated in parallel;
/// with noise, line `i` uses the seed [`line_seed_for_k`]`(noise.seed, i)`,
/// so any line can be reproduced in isolation.
pub fn sweep_k(
    model: &ModelDescriptor,
    ks: &[f64],
    probe: &ProbeConfig,
    deltas: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<Vec<SpectralLine>> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("quasimomentum grid is empty".into()));
    }
    ks.par_iter()
        .enumerate()
        .map(|(i, &k)| match noise {
            None => line_noiseless(model, k, probe, deltas),
            Some(nm) => {
                let derived = NoiseModel { seed: line_seed_for_k(nm.seed, i), ..*nm };
                line_noisy(model, k, probe, deltas, &derived)
            }
        })
        .collect()
}
