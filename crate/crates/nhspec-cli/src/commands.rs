//! Command implementations.
//!
//! Each command resolves its configuration, computes, writes its output
//! files under the run's output directory, and prints a short summary.
//! All file contents are deterministic for a given config and seed.

use crate::cli::{Cli, Command, Common, Source};
use crate::config::{resolve, Overrides, Resolved, RunConfig};
use crate::output::{self, EnergyRow};
use crate::presets;
use anyhow::{bail, Context, Result};
use nhspec::dynamics::{na_effective, validate_elimination};
use nhspec::fitting::{
    detect_dips, energies_from_fit, fit_line, fit_uncertainty, pair_energies, FitResult,
};
use nhspec::models::{closed_form_energies, SixLevelConfig};
use nhspec::spectroscopy::{
    line_noiseless, line_noiseless_dephased, line_noisy, line_repetitions, scale_dissipation,
    sweep_k, ModelDescriptor, NoiseModel, SpectralLine,
};
use nhspec::topology::{classify, track_bands};
use num_complex::Complex64 as C64;
use serde_json::json;

/// Acceptance bound on `max |na_master - na_effective|` for the
/// adiabatic-elimination check.
const ELIMINATION_TOL: f64 = 0.01;

/// Coherence times probed by the dephasing check, longest first.
const DEPHASING_T2: [f64; 3] = [800.0, 400.0, 200.0];

/// Half-width, in grid steps, of the window the dephasing check zooms onto
/// around the deepest dip of the undephased line.
const DIP_WINDOW: usize = 10;

/// Salt separating the bootstrap stream from the measurement stream of the
/// same line seed.
const RESAMPLE_SALT: u64 = 0x626f_6f74;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { source, common, k, no_noise } => {
            let r = load(&source, &common, Overrides { k, no_noise, ..Overrides::default() })?;
            cmd_spectrum(&r)
        }
        Command::Sweep { source, common, no_noise, grid_refine } => {
            let ov = Overrides { no_noise, grid_refine, ..Overrides::default() };
            let r = load(&source, &common, ov)?;
            cmd_sweep(&r)
        }
        Command::Topology { source, common, eb } => {
            let ov = Overrides { eb: eb.map(|e| (e.re, e.im)), ..Overrides::default() };
            let r = load(&source, &common, ov)?;
            cmd_topology(&r)
        }
        Command::Validate { source, common, k } => {
            let r = load(&source, &common, Overrides { k, ..Overrides::default() })?;
            cmd_validate(&r)
        }
    }
}

fn load(source: &Source, common: &Common, mut ov: Overrides) -> Result<Resolved> {
    let cfg = match (&source.config, &source.preset) {
        (Some(path), None) => RunConfig::from_path(path)?,
        (None, Some(name)) => presets::load(name)?,
        _ => unreachable!("clap enforces exactly one of --config and --preset"),
    };
    ov.seed = common.seed;
    ov.out.clone_from(&common.out);
    resolve(&cfg, &ov)
}

fn generate_line(r: &Resolved, k: f64) -> Result<SpectralLine> {
    let line = match &r.noise {
        Some(noise) => line_noisy(&r.model, k, &r.probe, &r.deltas, noise)?,
        None => line_noiseless(&r.model, k, &r.probe, &r.deltas)?,
    };
    Ok(line)
}

fn cmd_spectrum(r: &Resolved) -> Result<()> {
    let line = generate_line(r, r.k)?;
    let path = r.out_dir.join("spectral_line.csv");
    output::write_file(&path, &output::spectral_line_csv(&line))?;
    let (i_min, min) = argmin(&line.na_mean);
    println!(
        "spectral line at k = {}: {} detunings, minimum {:.4} at delta = {}",
        r.k,
        line.len(),
        min,
        line.deltas[i_min]
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(r: &Resolved) -> Result<()> {
    let lines = sweep_k(&r.model, &r.ks, &r.probe, &r.deltas, r.noise.as_ref())?;
    let mut rows: Vec<EnergyRow> = Vec::with_capacity(lines.len());
    let mut warm: Option<FitResult> = None;
    for (i, line) in lines.iter().enumerate() {
        let mut fit = fit_line(line, warm.as_ref())
            .with_context(|| format!("fitting the line at k = {}", r.ks[i]))?;
        if !fit.converged && warm.is_some() {
            let cold = fit_line(line, None)
                .with_context(|| format!("refitting the line at k = {}", r.ks[i]))?;
            if cold.converged || cold.residual < fit.residual {
                fit = cold;
            }
        }
        let est = energies_from_fit(&fit)?;

        let (mut err_re, mut err_im) = ([0.0; 2], [0.0; 2]);
        if fit.converged {
            if let Some(noise) = &r.noise {
                let derived = NoiseModel { seed: line.meta.seed, ..*noise };
                let reps = line_repetitions(&r.model, r.ks[i], &r.probe, &r.deltas, &derived)?;
                if let Ok(unc) = fit_uncertainty(
                    &line.deltas,
                    &reps,
                    fit.t,
                    fit.omega,
                    r.resamples,
                    line.meta.seed ^ RESAMPLE_SALT,
                    Some(&fit),
                ) {
                    err_re = unc.err_re;
                    err_im = unc.err_im;
                }
            }
        }

        let mut e = est.energies;
        if let Some(prev) = rows.last() {
            let paired = pair_energies(e, prev.e);
            if paired[0] != e[0] || paired[1] != e[1] {
                e = paired;
                err_re.swap(0, 1);
                err_im.swap(0, 1);
            }
        }
        rows.push(EnergyRow { k: r.ks[i], e, err_re, err_im, converged: est.converged });
        warm = fit.converged.then_some(fit);
    }

    for (i, line) in lines.iter().enumerate() {
        let path = r.out_dir.join("lines").join(format!("line_{i:03}.csv"));
        output::write_file(&path, &output::spectral_line_csv(line))?;
    }
    let path = r.out_dir.join("energies.csv");
    output::write_file(&path, &output::energies_csv(&rows))?;

    let bad = rows.iter().filter(|row| !(row.converged[0] && row.converged[1])).count();
    println!("fitted {} lines, {} converged", rows.len(), rows.len() - bad);
    println!("wrote {}", path.display());
    if bad > 0 {
        bail!(
            "{bad} of {} fits did not converge; energies.csv keeps them with converged = false",
            rows.len()
        );
    }
    Ok(())
}

fn cmd_topology(r: &Resolved) -> Result<()> {
    let energies_path = r.out_dir.join("energies.csv");
    let (ks, pairs, errors, source) = if energies_path.exists() {
        let text = std::fs::read_to_string(&energies_path)
            .with_context(|| format!("cannot read {}", energies_path.display()))?;
        let rows = output::parse_energies_csv(&text)
            .with_context(|| format!("in {}", energies_path.display()))?;
        let bad = rows.iter().filter(|row| !(row.converged[0] && row.converged[1])).count();
        if bad > 0 {
            bail!(
                "{bad} of {} rows in {} come from non-converged fits; rerun the sweep first",
                rows.len(),
                energies_path.display()
            );
        }
        let ks: Vec<f64> = rows.iter().map(|row| row.k).collect();
        let pairs: Vec<[C64; 2]> = rows.iter().map(|row| row.e).collect();
        let errors: Vec<[(f64, f64); 2]> = rows
            .iter()
            .map(|row| {
                [(row.err_re[0], row.err_im[0]), (row.err_re[1], row.err_im[1])]
            })
            .collect();
        (ks, pairs, Some(errors), "energies_csv")
    } else {
        let mut pairs = Vec::with_capacity(r.ks.len());
        for &k in &r.ks {
            let tb = r.model.at_k(k)?;
            let (e1, e2) = closed_form_energies(&tb);
            pairs.push([e1, e2]);
        }
        (r.ks.clone(), pairs, None, "closed_form")
    };

    let bs = track_bands(&ks, &pairs, errors.as_deref())?;
    let report = classify(&bs, r.eb)?;
    let value = json!({
        "classification": report.classification.to_string(),
        "e_b": [report.e_b.re, report.e_b.im],
        "k_points": ks.len(),
        "m": report.m,
        "nu": report.nu,
        "sigma": report.sigma.to_string(),
        "source": source,
        "w": report.w,
        "w_modified": report.w_modified,
    });
    let path = r.out_dir.join("topology.json");
    output::write_json(&path, &value)?;
    println!(
        "classification: {} (sigma {}, nu = {}, source {source})",
        report.classification, report.sigma, report.nu
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_validate(r: &Resolved) -> Result<()> {
    let elim = check_elimination(r)?;
    let deph = check_dephasing(r)?;
    let fluct = check_gamma_fluctuation(r)?;

    let elim_pass = elim.max_abs_deviation < ELIMINATION_TOL;
    let fluct_pass = fluct.as_ref().map_or(true, |f| f.pass);
    let all_pass = elim_pass && deph.pass && fluct_pass;

    let fluct_value = match &fluct {
        Some(f) => json!({
            "margin": f.margin,
            "max_excess": f.max_excess,
            "pass": f.pass,
        }),
        None => serde_json::Value::Null,
    };
    let value = json!({
        "dephasing": {
            "base_center": deph.base_center,
            "base_min_na": deph.base_min,
            "centers": deph.centers,
            "grid_step": deph.grid_step,
            "max_center_shift": deph.max_center_shift,
            "min_na": deph.mins,
            "pass": deph.pass,
            "t2": DEPHASING_T2,
        },
        "elimination": {
            "delta_points": r.deltas.len(),
            "dt": r.master.dt,
            "max_abs_deviation": elim.max_abs_deviation,
            "pass": elim_pass,
            "t": r.probe.t,
            "tolerance": ELIMINATION_TOL,
        },
        "gamma_fluctuation": fluct_value,
        "pass": all_pass,
    });
    let path = r.out_dir.join("validation.json");
    output::write_json(&path, &value)?;

    println!(
        "elimination: max |na_master - na_effective| = {:.2e} (tolerance {ELIMINATION_TOL}): {}",
        elim.max_abs_deviation,
        verdict(elim_pass)
    );
    println!(
        "dephasing: dips shallower for shorter coherence, centers within one grid step: {}",
        verdict(deph.pass)
    );
    match &fluct {
        Some(f) => println!(
            "gamma fluctuation: mean line inside the scaled-loss envelope (excess {:.2e}, margin {:.2e}): {}",
            f.max_excess,
            f.margin,
            verdict(f.pass)
        ),
        None => println!("gamma fluctuation: skipped (needs a noise section without dephasing)"),
    }
    println!("wrote {}", path.display());
    if !all_pass {
        bail!("validation failed; see {}", path.display());
    }
    Ok(())
}

fn check_elimination(r: &Resolved) -> Result<nhspec::dynamics::EliminationReport> {
    let (jx, jy, jz) = match &r.model {
        ModelDescriptor::Mrm(p) => (
            p.j1 + p.j2 * r.k.cos(),
            p.j2 * r.k.sin(),
            p.j3 * r.k.sin() + p.mz,
        ),
        other => {
            // Any reduction maps onto the six-level ladder in the gauge that
            // puts the whole intra-cell coupling on the x axis.
            let tb = other.at_k(r.k)?;
            (tb.c, 0.0, -tb.d.re / 2.0)
        }
    };
    let cfg = SixLevelConfig::new(
        jx,
        jy,
        jz,
        r.probe.omega,
        0.0,
        r.master.jl,
        r.master.gamma_e,
        r.master.branching,
        None,
    )?;
    validate_elimination(&cfg, r.probe.t, r.master.dt, r.probe.n0, &r.deltas)
        .context("comparing the master equation against the effective model")
}

struct DephasingCheck {
    base_min: f64,
    base_center: f64,
    mins: [f64; 3],
    centers: [f64; 3],
    grid_step: f64,
    max_center_shift: f64,
    pass: bool,
}

/// The deepest detected dip of a line, as (center, minimum value); falls
/// back to the raw grid minimum when no dip clears the detector.
fn deepest_dip(line: &SpectralLine) -> (f64, f64) {
    let (i_min, min) = argmin(&line.na_mean);
    let center = detect_dips(line)
        .into_iter()
        .max_by(|a, b| a.depth.total_cmp(&b.depth))
        .map_or(line.deltas[i_min], |dip| dip.center);
    (center, min)
}

fn check_dephasing(r: &Resolved) -> Result<DephasingCheck> {
    let base = line_noiseless(&r.model, r.k, &r.probe, &r.deltas)?;
    let grid_step = r.deltas[1] - r.deltas[0];
    let (i0, _) = argmin(&base.na_mean);
    let lo = i0.saturating_sub(DIP_WINDOW);
    let hi = (i0 + DIP_WINDOW).min(r.deltas.len() - 1);
    let window = &r.deltas[lo..=hi];

    let zoomed = line_noiseless(&r.model, r.k, &r.probe, window)?;
    let (base_center, base_min) = deepest_dip(&zoomed);

    let mut mins = [0.0; 3];
    let mut centers = [0.0; 3];
    for (i, t2) in DEPHASING_T2.into_iter().enumerate() {
        let line = line_noiseless_dephased(&r.model, r.k, &r.probe, window, t2)?;
        (centers[i], mins[i]) = deepest_dip(&line);
    }

    let depth_ok = base_min < mins[0] && mins[0] < mins[1] && mins[1] < mins[2];
    let max_center_shift = centers
        .iter()
        .map(|c| (c - base_center).abs())
        .fold(0.0, f64::max);
    let shift_ok = max_center_shift < grid_step;
    Ok(DephasingCheck {
        base_min,
        base_center,
        mins,
        centers,
        grid_step,
        max_center_shift,
        pass: depth_ok && shift_ok,
    })
}

struct FluctuationCheck {
    max_excess: f64,
    margin: f64,
    pass: bool,
}

fn check_gamma_fluctuation(r: &Resolved) -> Result<Option<FluctuationCheck>> {
    let noise = match &r.noise {
        Some(nm) if nm.dephasing_t2.is_none() => nm,
        _ => return Ok(None),
    };
    let noisy = line_noisy(&r.model, r.k, &r.probe, &r.deltas, noise)?;
    let tb = r.model.at_k(r.k)?;
    let f = noise.gamma_fluct;
    let factors = [1.0 - f, 1.0 - 0.5 * f, 1.0, 1.0 + 0.5 * f, 1.0 + f];

    let mut max_excess = 0.0f64;
    for (i, &delta) in r.deltas.iter().enumerate() {
        let probe_d = r.probe.with_delta(delta);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &factor in &factors {
            let na = na_effective(&scale_dissipation(&tb, factor)?, &probe_d)?;
            lo = lo.min(na);
            hi = hi.max(na);
        }
        let mean = noisy.na_mean[i];
        max_excess = max_excess.max(mean - hi).max(lo - mean);
    }
    // Four standard errors of the pooled shot noise, plus slack for the
    // curvature of na between the probed loss factors.
    let margin = 2.0 / ((noise.shots as f64) * f64::from(noise.reps)).sqrt() + 0.005;
    Ok(Some(FluctuationCheck { max_excess, margin, pass: max_excess <= margin }))
}

fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
