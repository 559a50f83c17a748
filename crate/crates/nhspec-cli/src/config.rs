//! TOML run configuration: schema, validation, and resolution into the
//! library's parameter types.
//!
//! Unknown keys anywhere in the file are rejected, as are model parameters
//! that do not belong to the declared `kind`. All physical values are in
//! rad/us (rates, couplings, detunings) and us (times); the mandatory
//! `units` key pins that convention in every config file.

use anyhow::{bail, Context, Result};
use nhspec::models::{LkParams, MrmParams, ProbeConfig};
use nhspec::spectroscopy::{k_grid, uniform_grid, ModelDescriptor, NoiseModel};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const UNITS: &str = "rad_per_us";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must be exactly `"rad_per_us"`; rejected otherwise.
    pub units: String,
    #[serde(default)]
    pub seed: u64,
    /// Quasimomentum used by the single-line commands (`spectrum`,
    /// `validate`); `--k` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub model: ModelSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub delta_grid: DeltaGridSection,
    #[serde(default)]
    pub k_grid: KGridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master: Option<MasterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Band model declaration. `kind` selects which parameter set applies;
/// every field is optional at parse time so that one schema covers all
/// three kinds, and [`ModelSection::descriptor`] enforces that exactly the
/// right parameters are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_im: Option<f64>,
}

impl ModelSection {
    fn fields(&self) -> [(&'static str, Option<f64>); 13] {
        [
            ("j1", self.j1),
            ("j2", self.j2),
            ("j3", self.j3),
            ("mz", self.mz),
            ("gamma", self.gamma),
            ("mx", self.mx),
            ("g1", self.g1),
            ("g2", self.g2),
            ("g3", self.g3),
            ("gamma0", self.gamma0),
            ("c", self.c),
            ("d_re", self.d_re),
            ("d_im", self.d_im),
        ]
    }

    fn take(&self, wanted: &[&str]) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(wanted.len());
        let mut missing = Vec::new();
        let mut extra = Vec::new();
        for (name, value) in self.fields() {
            match (wanted.contains(&name), value) {
                (true, Some(v)) => values.push(v),
                (true, None) => missing.push(name),
                (false, Some(_)) => extra.push(name),
                (false, None) => {}
            }
        }
        if !missing.is_empty() || !extra.is_empty() {
            let mut parts = Vec::new();
            if !missing.is_empty() {
                parts.push(format!("missing {}", missing.join(", ")));
            }
            if !extra.is_empty() {
                parts.push(format!("unexpected {}", extra.join(", ")));
            }
            bail!("model kind \"{}\": {}", self.kind, parts.join("; "));
        }
        Ok(values)
    }

    pub fn descriptor(&self) -> Result<ModelDescriptor> {
        match self.kind.as_str() {
            "mrm" => {
                let v = self.take(&["j1", "j2", "j3", "mz", "gamma"])?;
                Ok(ModelDescriptor::Mrm(MrmParams::new(v[0], v[1], v[2], v[3], v[4])?))
            }
            "lk" => {
                let v = self.take(&["mx", "g1", "g2", "g3", "gamma0"])?;
                Ok(ModelDescriptor::Lk(LkParams::new(v[0], v[1], v[2], v[3], v[4])?))
            }
            "generic" => {
                let v = self.take(&["c", "d_re", "d_im"])?;
                Ok(ModelDescriptor::Generic { c: v[0], d: C64::new(v[1], v[2]) })
            }
            other => bail!("unknown model kind \"{other}\" (expected mrm, lk, or generic)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_n0")]
    pub n0: f64,
}

fn default_omega() -> f64 {
    0.019
}
fn default_t() -> f64 {
    200.0
}
fn default_n0() -> f64 {
    1.0
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { omega: default_omega(), t: default_t(), n0: default_n0() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaGridSection {
    #[serde(default = "default_delta_min")]
    pub min: f64,
    #[serde(default = "default_delta_max")]
    pub max: f64,
    #[serde(default = "default_delta_points")]
    pub points: usize,
}

fn default_delta_min() -> f64 {
    -0.6
}
fn default_delta_max() -> f64 {
    0.6
}
fn default_delta_points() -> usize {
    61
}

impl Default for DeltaGridSection {
    fn default() -> Self {
        Self { min: default_delta_min(), max: default_delta_max(), points: default_delta_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGridSection {
    #[serde(default = "default_k_points")]
    pub points: usize,
}

fn default_k_points() -> usize {
    21
}

impl Default for KGridSection {
    fn default() -> Self {
        Self { points: default_k_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_reps")]
    pub reps: u32,
    #[serde(default = "default_gamma_fluct")]
    pub gamma_fluct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_t2: Option<f64>,
    /// Bootstrap resamples behind the error columns of the sweep output.
    #[serde(default = "default_resamples")]
    pub resamples: u32,
}

fn default_shots() -> u64 {
    1000
}
fn default_reps() -> u32 {
    20
}
fn default_gamma_fluct() -> f64 {
    0.2
}
fn default_resamples() -> u32 {
    10
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            shots: default_shots(),
            reps: default_reps(),
            gamma_fluct: default_gamma_fluct(),
            dephasing_t2: None,
            resamples: default_resamples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterSection {
    #[serde(default = "default_jl")]
    pub jl: f64,
    #[serde(default = "default_gamma_e")]
    pub gamma_e: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<[f64; 3]>,
}

fn default_jl() -> f64 {
    4.76
}
fn default_gamma_e() -> f64 {
    123.0
}
fn default_dt() -> f64 {
    1e-3
}

impl Default for MasterSection {
    fn default() -> Self {
        Self { jl: default_jl(), gamma_e: default_gamma_e(), dt: default_dt(), branching: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// Base energy override as `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eb: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        if cfg.units != UNITS {
            bail!("units must be \"{UNITS}\", got \"{}\"", cfg.units);
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize configuration")
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<f64>,
    pub no_noise: bool,
    pub eb: Option<(f64, f64)>,
    pub grid_refine: Option<u32>,
}

/// Master-equation settings with defaults filled in.
#[derive(Debug, Clone, Copy)]
pub struct MasterSettings {
    pub jl: f64,
    pub gamma_e: f64,
    pub dt: f64,
    pub branching: [f64; 3],
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelDescriptor,
    pub probe: ProbeConfig,
    pub deltas: Vec<f64>,
    pub ks: Vec<f64>,
    pub noise: Option<NoiseModel>,
    pub resamples: u32,
    pub master: MasterSettings,
    pub eb: Option<C64>,
    pub seed: u64,
    pub k: f64,
    pub out_dir: PathBuf,
}

pub fn resolve(cfg: &RunConfig, ov: &Overrides) -> Result<Resolved> {
    let seed = ov.seed.unwrap_or(cfg.seed);
    let model = cfg.model.descriptor()?;
    let probe = ProbeConfig::new(cfg.probe.omega, 0.0, cfg.probe.t, cfg.probe.n0)
        .context("invalid [probe]")?;
    let deltas = uniform_grid(cfg.delta_grid.min, cfg.delta_grid.max, cfg.delta_grid.points)
        .context("invalid [delta_grid]")?;

    let factor = ov.grid_refine.unwrap_or(1);
    if factor == 0 {
        bail!("--grid-refine factor must be at least 1");
    }
    if cfg.k_grid.points < 2 {
        bail!("[k_grid] needs at least 2 points, got {}", cfg.k_grid.points);
    }
    let k_points = (cfg.k_grid.points - 1) * factor as usize + 1;
    let ks = k_grid(k_points).context("invalid [k_grid]")?;

    let noise = if ov.no_noise {
        None
    } else {
        match &cfg.noise {
            None => None,
            Some(section) => {
                if section.resamples < 5 {
                    bail!("[noise] resamples must be at least 5, got {}", section.resamples);
                }
                Some(NoiseModel {
                    shots: section.shots,
                    reps: section.reps,
                    gamma_fluct: section.gamma_fluct,
                    dephasing_t2: section.dephasing_t2,
                    seed,
                })
            }
        }
    };
    let resamples = cfg.noise.as_ref().map_or(default_resamples(), |s| s.resamples);

    let ms = cfg.master.clone().unwrap_or_default();
    if !(ms.jl.is_finite() && ms.jl >= 0.0) {
        bail!("[master] jl must be non-negative, got {}", ms.jl);
    }
    if !(ms.gamma_e.is_finite() && ms.gamma_e > 0.0) {
        bail!("[master] gamma_e must be positive, got {}", ms.gamma_e);
    }
    if !(ms.dt.is_finite() && ms.dt > 0.0) {
        bail!("[master] dt must be positive, got {}", ms.dt);
    }
    let branching = ms.branching.unwrap_or([ms.gamma_e / 3.0; 3]);
    let master = MasterSettings { jl: ms.jl, gamma_e: ms.gamma_e, dt: ms.dt, branching };

    let eb = ov
        .eb
        .map(|(re, im)| C64::new(re, im))
        .or_else(|| cfg.topology.as_ref().and_then(|t| t.eb).map(|[re, im]| C64::new(re, im)));
    if let Some(e) = eb {
        if !e.re.is_finite() || !e.im.is_finite() {
            bail!("base energy override must be finite, got {e}");
        }
    }

    let k = ov.k.or(cfg.k).unwrap_or(0.0);
    if !k.is_finite() {
        bail!("quasimomentum must be finite, got {k}");
    }
    let out_dir = ov.out.clone().unwrap_or_else(|| cfg.output.dir.clone());

    Ok(Resolved {
        model,
        probe,
        deltas,
        ks,
        noise,
        resamples,
        master,
        eb,
        seed,
        k,
        out_dir,
    })
}
