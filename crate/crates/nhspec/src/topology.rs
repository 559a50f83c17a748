//! Complex-energy topology.
//!
//! The two band energies over one Brillouin zone period trace closed curves
//! in the complex plane, possibly exchanging places after a full period.
//! Three invariants pin down the braid those curves form:
//!
//! * the integer winding `w_n` of each closed band curve around a base
//!   energy in its interior;
//! * the modified winding `W`, a rational built from the total winding of
//!   the band system around one shared base energy;
//! * the braid degree `nu`, the number of half-turns the difference
//!   `E_1 - E_2` makes over one period.
//!
//! The decision table in [`classify`] turns these into the four patterns the
//! models here can produce: trivial arcs, an unlink of two rings, an unknot
//! threading both bands through one loop, and a Hopf link.
//!
//! Every phase-based quantity is guarded: consecutive phase steps beyond a
//! half turn, base points on the curve, near-degenerate bands, and snapping
//! residues all fail loudly instead of returning a plausible wrong integer.
//! Under-resolved tracking asks for a finer grid via
//! [`Error::GridRefinementRequired`].

use crate::{Error, Result};
use num_complex::Complex64 as C64;

/// Fewest quasimomentum points a band set may have.
const MIN_K_POINTS: usize = 8;
/// Endpoint tolerance for the `[0, 2 pi]` convention.
const K_ENDPOINT_TOL: f64 = 1e-9;
/// A tracked jump this much larger than the median jump is anomalous.
const JUMP_RATIO_LIMIT: f64 = 3.0;
/// Phase steps must stay strictly below a quarter turn.
const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_2;
/// Snapping tolerance for winding numbers and braid degrees.
const SNAP_RESIDUE_TOL: f64 = 0.05;
/// Relative distance below which a base point counts as on the curve.
const ON_CURVE_REL_TOL: f64 = 1e-6;
/// The interior-point search accepts a nonzero winding only with this much
/// clearance relative to the band's bounding-box diagonal; thinner loops
/// are treated as noise-inflated arcs.
const LOOP_CLEARANCE_FRACTION: f64 = 0.02;
/// Phase-step guard used while probing candidate interior points; slightly
/// stricter than `MAX_PHASE_STEP` so accepted points survive the real
/// winding computation with margin.
const PROBE_STEP_LIMIT: f64 = 1.45;
/// Interior-point search grid resolution per axis.
const PROBE_GRID: usize = 41;

/// Band permutation after one Brillouin zone period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma {
    /// Each band closes onto itself.
    Identity,
    /// The bands exchange; together they form one connected curve.
    Swap,
}

impl std::fmt::Display for Sigma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sigma::Identity => "identity",
            Sigma::Swap => "swap",
        })
    }
}

/// Braid classes distinguishable from the invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Both bands are flattened arcs enclosing no area.
    TrivialArcs,
    /// Two disjoint rings.
    Unlink,
    /// One connected loop traversed by both bands.
    Unknot,
    /// Two rings winding through each other.
    HopfLink,
    /// Invariants outside the recognized table.
    Other,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::TrivialArcs => "trivial_arcs",
            Classification::Unlink => "unlink",
            Classification::Unknot => "unknot",
            Classification::HopfLink => "hopf_link",
            Classification::Other => "other",
        })
    }
}

/// Continuously tracked band energies over one Brillouin zone period.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    k_grid: Vec<f64>,
    bands: [Vec<C64>; 2],
    sigma: Sigma,
    /// Per-point (Re, Im) uncertainties carried along from fits.
    errors: Option<[Vec<(f64, f64)>; 2]>,
}

impl BandSet {
    /// Validate and assemble a band set. The k grid must be strictly
    /// increasing with `k = 0` first and `k = 2 pi` last (the closure point
    /// is included), with at least eight points.
    pub fn new(
        k_grid: Vec<f64>,
        bands: [Vec<C64>; 2],
        sigma: Sigma,
        errors: Option<[Vec<(f64, f64)>; 2]>,
    ) -> Result<Self> {
        if k_grid.len() < MIN_K_POINTS {
            return Err(Error::InvalidInput(format!(
                "band set needs at least {MIN_K_POINTS} k points, got {}",
                k_grid.len()
            )));
        }
        if !k_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("k grid must be strictly increasing".into()));
        }
        if k_grid[0].abs() > K_ENDPOINT_TOL {
            return Err(Error::InvalidInput(format!(
                "k grid must start at 0, got {}",
                k_grid[0]
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        if (k_grid[k_grid.len() - 1] - two_pi).abs() > K_ENDPOINT_TOL {
            return Err(Error::InvalidInput(format!(
                "k grid must end at 2 pi, got {}",
                k_grid[k_grid.len() - 1]
            )));
        }
        for band in &bands {
            if band.len() != k_grid.len() {
                return Err(Error::DimensionMismatch(format!(
                    "band has {} points but the k grid has {}",
                    band.len(),
                    k_grid.len()
                )));
            }
            if !band.iter().all(|e| e.is_finite()) {
                return Err(Error::NumericRange("band energies must be finite".into()));
            }
        }
        if let Some(errs) = &errors {
            for e in errs {
                if e.len() != k_grid.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "error column has {} points but the k grid has {}",
                        e.len(),
                        k_grid.len()
                    )));
                }
            }
        }
        Ok(Self { k_grid, bands, sigma, errors })
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn band(&self, n: usize) -> &[C64] {
        &self.bands[n]
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn errors(&self) -> Option<&[Vec<(f64, f64)>; 2]> {
        self.errors.as_ref()
    }

    pub fn len(&self) -> usize {
        self.k_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_grid.is_empty()
    }
}

/// Invariants and verdict for one band set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyReport {
    /// Integer winding per band around its interior base point; undefined
    /// (None) when the bands swap, since neither curve closes alone.
    pub w: [Option<i64>; 2],
    /// Modified winding around `e_b`; a multiple of `1 / (2 m)`.
    pub w_modified: f64,
    /// Periods of the band system behind the modified winding: 1 when the
    /// bands close individually, 2 when they swap.
    pub m: u32,
    /// Braid degree: half-turns of `E_1 - E_2` over one period.
    pub nu: i64,
    /// Base energy the modified winding was taken around.
    pub e_b: C64,
    pub sigma: Sigma,
    pub classification: Classification,
}

/// Assign fitted energy pairs to continuous bands.
///
/// At each k the pair is attached to the running bands in whichever of the
/// two assignments moves the energies least (summed modulus). A step is
/// flagged as ambiguous when its worst single-band jump exceeds three times
/// the median jump and also reaches half the local band gap, the scale at
/// which the minimal-move rule can pick the wrong partner; the offending
/// interval is reported for regeneration on a finer grid. The permutation
/// `sigma` is read off the endpoints after tracking, and per-point errors
/// (when given) follow their energies.
pub fn track_bands(
    k_grid: &[f64],
    pairs: &[[C64; 2]],
    errors: Option<&[[(f64, f64); 2]]>,
) -> Result<BandSet> {
    if k_grid.len() != pairs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} k points but {} energy pairs",
            k_grid.len(),
            pairs.len()
        )));
    }
    if let Some(errs) = errors {
        if errs.len() != pairs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} energy pairs but {} error pairs",
                pairs.len(),
                errs.len()
            )));
        }
    }
    if pairs.len() < MIN_K_POINTS {
        return Err(Error::InvalidInput(format!(
            "band tracking needs at least {MIN_K_POINTS} k points, got {}",
            pairs.len()
        )));
    }

    let n = pairs.len();
    let mut band0 = Vec::with_capacity(n);
    let mut band1 = Vec::with_capacity(n);
    let mut err0 = Vec::with_capacity(n);
    let mut err1 = Vec::with_capacity(n);
    band0.push(pairs[0][0]);
    band1.push(pairs[0][1]);
    if let Some(errs) = errors {
        err0.push(errs[0][0]);
        err1.push(errs[0][1]);
    }

    let mut step_jumps = Vec::with_capacity(n - 1);
    let mut half_gaps = Vec::with_capacity(n - 1);
    for i in 1..n {
        let [a, b] = pairs[i];
        let last0 = *band0.last().expect("non-empty");
        let last1 = *band1.last().expect("non-empty");
        let direct = (a - last0).norm() + (b - last1).norm();
        let crossed = (b - last0).norm() + (a - last1).norm();
        let (next0, next1, swapped) =
            if direct <= crossed { (a, b, false) } else { (b, a, true) };
        step_jumps.push(((next0 - last0).norm()).max((next1 - last1).norm()));
        half_gaps.push(0.5 * ((last0 - last1).norm()).min((next0 - next1).norm()));
        band0.push(next0);
        band1.push(next1);
        if let Some(errs) = errors {
            let [ea, eb] = errs[i];
            if swapped {
                err0.push(eb);
                err1.push(ea);
            } else {
                err0.push(ea);
                err1.push(eb);
            }
        }
    }

    let mut sorted = step_jumps.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = sorted[sorted.len() / 2];
    let offender = step_jumps
        .iter()
        .zip(&half_gaps)
        .enumerate()
        .filter(|(_, (jump, half_gap))| {
            **jump > JUMP_RATIO_LIMIT * median + 1e-12 && *jump > half_gap
        })
        .max_by(|a, b| a.1 .0.partial_cmp(b.1 .0).unwrap());
    if let Some((worst_idx, (worst, _))) = offender {
        return Err(Error::GridRefinementRequired {
            k_lo: k_grid[worst_idx],
            k_hi: k_grid[worst_idx + 1],
            msg: format!(
                "worst jump {worst:.3e} exceeds {JUMP_RATIO_LIMIT} times the median jump {median:.3e} and half the local band gap"
            ),
        });
    }

    let close_direct = (band0[n - 1] - band0[0]).norm() + (band1[n - 1] - band1[0]).norm();
    let close_crossed = (band0[n - 1] - band1[0]).norm() + (band1[n - 1] - band0[0]).norm();
    let sigma = if close_direct <= close_crossed { Sigma::Identity } else { Sigma::Swap };

    let tracked_errors = errors.map(|_| [err0, err1]);
    BandSet::new(k_grid.to_vec(), [band0, band1], sigma, tracked_errors)
}

fn bounding_box(points: &[C64]) -> (f64, f64, f64, f64) {
    let mut re_lo = f64::INFINITY;
    let mut re_hi = f64::NEG_INFINITY;
    let mut im_lo = f64::INFINITY;
    let mut im_hi = f64::NEG_INFINITY;
    for p in points {
        re_lo = re_lo.min(p.re);
        re_hi = re_hi.max(p.re);
        im_lo = im_lo.min(p.im);
        im_hi = im_hi.max(p.im);
    }
    (re_lo, re_hi, im_lo, im_hi)
}

fn bbox_diagonal(points: &[C64]) -> f64 {
    let (re_lo, re_hi, im_lo, im_hi) = bounding_box(points);
    ((re_hi - re_lo).powi(2) + (im_hi - im_lo).powi(2)).sqrt()
}

/// Raw phase accumulation of `path` (closed by a final step back to the
/// start) around `base`, in turns, with all guards applied.
fn closed_phase_turns(path: &[C64], base: C64) -> Result<f64> {
    let diag = bbox_diagonal(path);
    let min_dist = path.iter().map(|p| (p - base).norm()).fold(f64::INFINITY, f64::min);
    if min_dist <= ON_CURVE_REL_TOL * diag.max(ON_CURVE_REL_TOL) {
        return Err(Error::BasePointOnCurve { min_dist });
    }
    let mut total = 0.0;
    for i in 0..path.len() {
        let z1 = path[i] - base;
        let z2 = path[(i + 1) % path.len()] - base;
        let step = (z2 / z1).arg();
        if step.abs() >= MAX_PHASE_STEP {
            return Err(Error::ResolutionError(format!(
                "phase step {step:.3} rad at segment {i} reaches the half-turn guard ({MAX_PHASE_STEP:.3})"
            )));
        }
        total += step;
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// Integer winding of a closed energy path around `base`.
pub fn winding_number(path: &[C64], base: C64) -> Result<i64> {
    if path.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "winding needs at least 3 path points, got {}",
            path.len()
        )));
    }
    if !path.iter().all(|p| p.is_finite()) || !base.is_finite() {
        return Err(Error::NumericRange("winding inputs must be finite".into()));
    }
    let turns = closed_phase_turns(path, base)?;
    let snapped = turns.round();
    let residue = (turns - snapped).abs();
    if residue >= SNAP_RESIDUE_TOL {
        return Err(Error::ResidueTooLarge { residue });
    }
    Ok(snapped as i64)
}

/// Modified winding of the band system around `base`, together with the
/// period count `m` it was normalized by.
///
/// When the bands close individually each is a 2π cycle (m = 1) and the
/// mean of the two windings is reported, which reduces to the common
/// per-band winding whenever the bands agree. When they swap, the two
/// bands concatenate into one 4π cycle (m = 2) whose whole winding is
/// halved. Either way the result is an exact multiple of `1 / (2 m)` once
/// the underlying windings snap.
pub fn modified_winding(bs: &BandSet, base: C64) -> Result<(f64, u32)> {
    match bs.sigma() {
        Sigma::Identity => {
            let total = winding_number(bs.band(0), base)? + winding_number(bs.band(1), base)?;
            Ok((total as f64 / 2.0, 1))
        }
        Sigma::Swap => {
            let n = bs.len();
            // Drop each band's closure point: band 0 ends where band 1
            // starts and vice versa, so the concatenation is one cycle.
            let mut cycle = Vec::with_capacity(2 * (n - 1));
            cycle.extend_from_slice(&bs.band(0)[..n - 1]);
            cycle.extend_from_slice(&bs.band(1)[..n - 1]);
            Ok((winding_number(&cycle, base)? as f64 / 2.0, 2))
        }
    }
}

/// Braid degree: half-turns of the band difference `E_1(k) - E_2(k)` over
/// one period, traversed once (no closure step; the endpoint phase is fixed
/// by `sigma`).
pub fn braid_degree(bs: &BandSet) -> Result<i64> {
    let n = bs.len();
    let diffs: Vec<C64> = (0..n).map(|i| bs.band(0)[i] - bs.band(1)[i]).collect();
    let scale = diffs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let min_sep = diffs.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    if min_sep <= ON_CURVE_REL_TOL * scale.max(ON_CURVE_REL_TOL) {
        return Err(Error::DegenerateBands { min_sep });
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        let step = (diffs[i + 1] / diffs[i]).arg();
        if step.abs() >= MAX_PHASE_STEP {
            return Err(Error::ResolutionError(format!(
                "band-difference phase step {step:.3} rad between k = {} and k = {} reaches the half-turn guard",
                bs.k_grid()[i],
                bs.k_grid()[i + 1]
            )));
        }
        total += step;
    }
    let half_turns = total / std::f64::consts::PI;
    let snapped = half_turns.round();
    let residue = (half_turns - snapped).abs();
    if residue >= SNAP_RESIDUE_TOL {
        return Err(Error::ResidueTooLarge { residue });
    }
    Ok(snapped as i64)
}

/// Default base energy: centroid of both band curves together.
pub fn default_base_energy(bs: &BandSet) -> C64 {
    let mut sum = C64::ZERO;
    let mut count = 0.0;
    for band in [bs.band(0), bs.band(1)] {
        for p in band {
            sum += p;
            count += 1.0;
        }
    }
    sum / count
}

/// Winding of `path` around `cand` with the probe-grade guards; returns the
/// snapped winding and the clearance, or None if any guard trips.
fn probe_winding(path: &[C64], cand: C64) -> Option<(i64, f64)> {
    let mut clearance = f64::INFINITY;
    for p in path {
        clearance = clearance.min((p - cand).norm());
    }
    if clearance <= 1e-9 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..path.len() {
        let z1 = path[i] - cand;
        let z2 = path[(i + 1) % path.len()] - cand;
        let step = (z2 / z1).arg();
        if step.abs() > PROBE_STEP_LIMIT {
            return None;
        }
        total += step;
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let snapped = turns.round();
    if (turns - snapped).abs() >= SNAP_RESIDUE_TOL {
        return None;
    }
    Some((snapped as i64, clearance))
}

/// Search a band's surroundings for an interior point with a well-defined
/// winding.
///
/// Candidates are the band centroid plus a uniform grid over the slightly
/// padded bounding box. A nonzero winding is only believed when the point
/// clears the curve by at least [`LOOP_CLEARANCE_FRACTION`] of the box
/// diagonal (deterministically favoring the largest clearance); otherwise
/// the best zero-winding point stands in, which is what flattens
/// noise-ribbon arcs back to `w = 0`.
fn interior_winding(band: &[C64]) -> Option<(C64, i64)> {
    let diag = bbox_diagonal(band);
    if diag <= 0.0 {
        return None;
    }
    let (re_lo, re_hi, im_lo, im_hi) = bounding_box(band);
    let pad_re = 0.05 * (re_hi - re_lo).max(0.05 * diag);
    let pad_im = 0.05 * (im_hi - im_lo).max(0.05 * diag);

    let centroid = band.iter().sum::<C64>() / band.len() as f64;
    let mut candidates = Vec::with_capacity(PROBE_GRID * PROBE_GRID + 1);
    candidates.push(centroid);
    for i in 0..PROBE_GRID {
        let fi = i as f64 / (PROBE_GRID - 1) as f64;
        let re = (re_lo - pad_re) + fi * ((re_hi + pad_re) - (re_lo - pad_re));
        for j in 0..PROBE_GRID {
            let fj = j as f64 / (PROBE_GRID - 1) as f64;
            let im = (im_lo - pad_im) + fj * ((im_hi + pad_im) - (im_lo - pad_im));
            candidates.push(C64::new(re, im));
        }
    }

    let loop_floor = (LOOP_CLEARANCE_FRACTION * diag).max(1e-6);
    let mut best_loop: Option<(C64, i64, f64)> = None;
    let mut best_zero: Option<(C64, i64, f64)> = None;
    for cand in candidates {
        let Some((w, clearance)) = probe_winding(band, cand) else { continue };
        if w != 0 && clearance >= loop_floor {
            if best_loop.map_or(true, |(_, _, c)| clearance > c) {
                best_loop = Some((cand, w, clearance));
            }
        } else if w == 0 && best_zero.map_or(true, |(_, _, c)| clearance > c) {
            best_zero = Some((cand, w, clearance));
        }
    }
    best_loop.or(best_zero).map(|(p, w, _)| (p, w))
}

/// Nudge candidates for an on-curve default base energy, in units of the
/// curve diagonal.
const NUDGE_STEPS: [(f64, f64); 5] =
    [(0.0, 0.0), (0.0, 0.02), (0.0, -0.02), (0.02, 0.0), (-0.02, 0.0)];

fn base_for_modified_winding(bs: &BandSet, centroid: C64) -> C64 {
    let mut all: Vec<C64> = Vec::with_capacity(2 * bs.len());
    all.extend_from_slice(bs.band(0));
    all.extend_from_slice(bs.band(1));
    let diag = bbox_diagonal(&all).max(1e-6);
    for (dre, dim) in NUDGE_STEPS {
        let cand = centroid + C64::new(dre * diag, dim * diag);
        let min_dist = all.iter().map(|p| (p - cand).norm()).fold(f64::INFINITY, f64::min);
        if min_dist > ON_CURVE_REL_TOL * diag {
            return cand;
        }
    }
    centroid
}

/// Compute all invariants and classify the braid.
///
/// With `base_override` set, every winding (per-band and modified) is taken
/// around exactly that point and base-point problems surface as errors.
/// Without it, the modified winding uses the combined centroid (nudged off
/// the curve if necessary) and each band's integer winding is probed at an
/// automatically chosen interior point of that band, since no single point
/// can sit inside two disjoint rings at once.
pub fn classify(bs: &BandSet, base_override: Option<C64>) -> Result<TopologyReport> {
    let nu = braid_degree(bs)?;
    let sigma = bs.sigma();
    let nu_even = nu.rem_euclid(2) == 0;
    match sigma {
        Sigma::Identity if !nu_even => {
            return Err(Error::InternalConsistency(format!(
                "bands close individually but the braid degree {nu} is odd"
            )));
        }
        Sigma::Swap if nu_even => {
            return Err(Error::InternalConsistency(format!(
                "bands swap but the braid degree {nu} is even"
            )));
        }
        _ => {}
    }

    let e_b = match base_override {
        Some(b) => {
            if !b.is_finite() {
                return Err(Error::InvalidInput("base energy must be finite".into()));
            }
            b
        }
        None => base_for_modified_winding(bs, default_base_energy(bs)),
    };
    let (w_modified, m) = modified_winding(bs, e_b)?;

    let w: [Option<i64>; 2] = match (sigma, base_override) {
        (Sigma::Swap, _) => [None, None],
        (Sigma::Identity, Some(b)) => [
            Some(winding_number(bs.band(0), b)?),
            Some(winding_number(bs.band(1), b)?),
        ],
        (Sigma::Identity, None) => [
            interior_winding(bs.band(0)).map(|(_, w)| w),
            interior_winding(bs.band(1)).map(|(_, w)| w),
        ],
    };

    let classification = decide(sigma, &w, w_modified, nu);
    Ok(TopologyReport { w, w_modified, m, nu, e_b, sigma, classification })
}

fn decide(sigma: Sigma, w: &[Option<i64>; 2], w_modified: f64, nu: i64) -> Classification {
    let half = 0.5;
    match (sigma, w) {
        (Sigma::Swap, _) if (w_modified.abs() - half).abs() < 1e-9 => Classification::Unknot,
        (Sigma::Identity, [Some(w1), Some(w2)]) => {
            let ring_pair = w1 == w2 && w1.abs() == 1;
            if ring_pair && nu.abs() >= 2 {
                Classification::HopfLink
            } else if ring_pair && nu == 0 {
                Classification::Unlink
            } else if *w1 == 0 && *w2 == 0 && nu == 0 {
                Classification::TrivialArcs
            } else {
                Classification::Other
            }
        }
        _ => Classification::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ks(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect()
    }

    fn circle_band(center: C64, radius: f64, turns: i32, n: usize) -> Vec<C64> {
        (0..n)
            .map(|i| {
                let theta = 2.0 * PI * turns as f64 * i as f64 / (n - 1) as f64;
                center + radius * C64::new(theta.cos(), theta.sin())
            })
            .collect()
    }

    fn band_set(b0: Vec<C64>, b1: Vec<C64>, sigma: Sigma) -> BandSet {
        let n = b0.len();
        BandSet::new(ks(n), [b0, b1], sigma, None).unwrap()
    }

    #[test]
    fn winding_of_synthetic_circles() {
        let ccw = circle_band(C64::ZERO, 1.0, 1, 41);
        assert_eq!(winding_number(&ccw, C64::ZERO).unwrap(), 1);
        let cw = circle_band(C64::ZERO, 1.0, -1, 41);
        assert_eq!(winding_number(&cw, C64::ZERO).unwrap(), -1);
        let double = circle_band(C64::ZERO, 1.0, 2, 81);
        assert_eq!(winding_number(&double, C64::ZERO).unwrap(), 2);
        // Base outside the circle.
        assert_eq!(winding_number(&ccw, C64::new(3.0, 0.0)).unwrap(), 0);
    }

    #[test]
    fn winding_guards() {
        let path = circle_band(C64::ZERO, 1.0, 1, 41);
        assert!(matches!(
            winding_number(&path, C64::new(1.0, 0.0)),
            Err(Error::BasePointOnCurve { .. })
        ));
        // A square's corner steps are exactly a quarter turn, which the
        // strict guard rejects.
        let square = vec![
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(1.0, -1.0),
        ];
        assert!(matches!(
            winding_number(&square, C64::ZERO),
            Err(Error::ResolutionError(_))
        ));
        assert!(winding_number(&path[..2], C64::ZERO).is_err());
    }

    #[test]
    fn tracking_untangles_sorted_pairs_into_a_swap() {
        // One connected loop: E = ± exp(i k / 2). Feeding the pairs sorted
        // by real part forces the tracker to undo the sorting.
        let n = 41;
        let grid = ks(n);
        let pairs: Vec<[C64; 2]> = grid
            .iter()
            .map(|&k| {
                let e = C64::new(0.0, 0.5 * k).exp();
                let (a, b) = (e, -e);
                if a.re >= b.re {
                    [a, b]
                } else {
                    [b, a]
                }
            })
            .collect();
        let bs = track_bands(&grid, &pairs, None).unwrap();
        assert_eq!(bs.sigma(), Sigma::Swap);
        // Tracked bands are smooth: consecutive steps stay small.
        for band in [bs.band(0), bs.band(1)] {
            for w in band.windows(2) {
                assert!((w[1] - w[0]).norm() < 0.2);
            }
        }
    }

    #[test]
    fn tracking_flags_ambiguous_jumps() {
        let n = 11;
        let grid = ks(n);
        let mut pairs: Vec<[C64; 2]> =
            (0..n).map(|_| [C64::ZERO, C64::new(5.0, 0.0)]).collect();
        // Mid-sweep both energies teleport to the middle, far from both
        // running bands.
        pairs[5] = [C64::new(2.5, 0.1), C64::new(2.5, -0.1)];
        let err = track_bands(&grid, &pairs, None).unwrap_err();
        match err {
            Error::GridRefinementRequired { k_lo, k_hi, .. } => {
                assert!(k_lo < k_hi);
                assert!(k_lo >= grid[3] && k_hi <= grid[6]);
            }
            other => panic!("expected GridRefinementRequired, got {other:?}"),
        }
    }

    #[test]
    fn tracking_carries_errors_through_the_permutation() {
        let n = 9;
        let grid = ks(n);
        // Crossing lines in Re: band A rises, band B falls; give them
        // distinct error tags and check they follow their band.
        let pairs: Vec<[C64; 2]> = grid
            .iter()
            .map(|&k| {
                let a = C64::new(k - PI, 1.0);
                let b = C64::new(PI - k, -1.0);
                if a.re >= b.re {
                    [a, b]
                } else {
                    [b, a]
                }
            })
            .collect();
        let errors: Vec<[(f64, f64); 2]> = grid
            .iter()
            .map(|&k| {
                let tag_a = (0.001, 1.0);
                let tag_b = (0.002, -1.0);
                let a = C64::new(k - PI, 1.0);
                let b = C64::new(PI - k, -1.0);
                if a.re >= b.re {
                    [tag_a, tag_b]
                } else {
                    [tag_b, tag_a]
                }
            })
            .collect();
        let bs = track_bands(&grid, &pairs, Some(&errors)).unwrap();
        let errs = bs.errors().unwrap();
        // Whichever band holds Im = +1 must hold the +1-tagged errors.
        for i in 0..n {
            for band in 0..2 {
                let expected = if bs.band(band)[i].im > 0.0 { 1.0 } else { -1.0 };
                assert_eq!(errs[band][i].1, expected);
            }
        }
    }

    #[test]
    fn unlink_of_two_rings() {
        let n = 41;
        let b0 = circle_band(C64::new(0.0, 0.0), 1.0, 1, n);
        let b1 = circle_band(C64::new(4.0, 0.0), 1.0, 1, n);
        let bs = band_set(b0, b1, Sigma::Identity);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.w, [Some(1), Some(1)]);
        assert_eq!(report.nu, 0);
        assert_eq!(report.classification, Classification::Unlink);
        // The shared centroid sits between the rings, so the modified
        // winding around it vanishes even though each ring winds once.
        assert_eq!(report.w_modified, 0.0);
        assert_eq!(report.m, 1);
    }

    #[test]
    fn trivial_arcs_have_no_windings() {
        let n = 41;
        // Flattened out-and-back arcs enclosing no area.
        let arc = |offset: f64| -> Vec<C64> {
            (0..n)
                .map(|i| {
                    let s = 2.0 * PI * i as f64 / (n - 1) as f64;
                    C64::new(s.cos() + offset, 0.3)
                })
                .collect()
        };
        let bs = band_set(arc(0.0), arc(5.0), Sigma::Identity);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.w, [Some(0), Some(0)]);
        assert_eq!(report.nu, 0);
        assert_eq!(report.classification, Classification::TrivialArcs);
    }

    #[test]
    fn noise_ribbon_still_counts_as_trivial() {
        // A flattened arc inflated by a thin deterministic ribbon must not
        // be promoted to a ring.
        let n = 61;
        let ribbon: Vec<C64> = (0..n)
            .map(|i| {
                let s = 2.0 * PI * i as f64 / (n - 1) as f64;
                C64::new(s.cos(), 0.004 * (7.0 * s).sin())
            })
            .collect();
        let flat: Vec<C64> = (0..n)
            .map(|i| {
                let s = 2.0 * PI * i as f64 / (n - 1) as f64;
                C64::new(s.cos() + 5.0, 0.0)
            })
            .collect();
        let bs = band_set(ribbon, flat, Sigma::Identity);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.w, [Some(0), Some(0)]);
        assert_eq!(report.classification, Classification::TrivialArcs);
    }

    #[test]
    fn unknot_from_a_shared_loop() {
        let n = 81;
        let grid = ks(n);
        let b0: Vec<C64> = grid.iter().map(|&k| C64::new(0.0, 0.5 * k).exp()).collect();
        let b1: Vec<C64> = grid.iter().map(|&k| -C64::new(0.0, 0.5 * k).exp()).collect();
        let bs = band_set(b0, b1, Sigma::Swap);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.sigma, Sigma::Swap);
        assert_eq!(report.w, [None, None]);
        assert_eq!(report.nu, 1);
        assert!((report.w_modified - 0.5).abs() < 1e-12);
        assert_eq!(report.m, 2);
        assert_eq!(report.classification, Classification::Unknot);
    }

    #[test]
    fn hopf_link_from_antipodal_rings() {
        // Both bands trace the same circle half a turn apart: each winds
        // once, and their difference makes two half-turns.
        let n = 81;
        let grid = ks(n);
        let b0: Vec<C64> = grid.iter().map(|&k| C64::new(0.0, k).exp()).collect();
        let b1: Vec<C64> = grid.iter().map(|&k| -C64::new(0.0, k).exp()).collect();
        let bs = band_set(b0, b1, Sigma::Identity);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.w, [Some(1), Some(1)]);
        assert_eq!(report.nu, 2);
        assert_eq!(report.classification, Classification::HopfLink);
    }

    #[test]
    fn double_ring_lands_in_other() {
        let n = 81;
        let b0 = circle_band(C64::ZERO, 1.0, 2, n);
        let b1 = circle_band(C64::new(5.0, 0.0), 1.0, 2, n);
        let bs = band_set(b0, b1, Sigma::Identity);
        let report = classify(&bs, None).unwrap();
        assert_eq!(report.w, [Some(2), Some(2)]);
        assert_eq!(report.classification, Classification::Other);
    }

    #[test]
    fn base_override_rules_every_winding() {
        let n = 41;
        let b0 = circle_band(C64::new(0.0, 0.0), 1.0, 1, n);
        let b1 = circle_band(C64::new(4.0, 0.0), 1.0, 1, n);
        let bs = band_set(b0, b1, Sigma::Identity);
        // Base inside ring 0 only: w = [1, 0], so no longer an unlink
        // pattern even though the curves are unchanged.
        let inside_first = classify(&bs, Some(C64::ZERO)).unwrap();
        assert_eq!(inside_first.e_b, C64::ZERO);
        assert_eq!(inside_first.w, [Some(1), Some(0)]);
        assert_eq!(inside_first.classification, Classification::Other);
        // A base on the curve is an error, not a guess.
        assert!(matches!(
            classify(&bs, Some(C64::new(1.0, 0.0))),
            Err(Error::BasePointOnCurve { .. })
        ));
    }

    #[test]
    fn braid_degree_guards() {
        let n = 41;
        let grid = ks(n);
        // Bands that touch are degenerate.
        let b0: Vec<C64> = grid.iter().map(|&k| C64::new(k - PI, 0.0)).collect();
        let b1 = vec![C64::ZERO; n];
        let bs = BandSet::new(grid.clone(), [b0, b1], Sigma::Identity, None).unwrap();
        assert!(matches!(braid_degree(&bs), Err(Error::DegenerateBands { .. })));

        // A difference that rotates by 0.3 pi snaps to nothing.
        let b0: Vec<C64> = grid
            .iter()
            .map(|&k| C64::new(0.0, 0.15 * k).exp())
            .collect();
        let b1 = vec![C64::ZERO; n];
        let bs = BandSet::new(grid, [b0, b1], Sigma::Identity, None).unwrap();
        assert!(matches!(braid_degree(&bs), Err(Error::ResidueTooLarge { .. })));
    }

    #[test]
    fn parity_mismatch_is_inconsistent() {
        // A genuinely swapping pair labeled identity trips the parity check.
        let n = 81;
        let grid = ks(n);
        let b0: Vec<C64> = grid.iter().map(|&k| C64::new(0.0, 0.5 * k).exp()).collect();
        let b1: Vec<C64> = grid.iter().map(|&k| -C64::new(0.0, 0.5 * k).exp()).collect();
        let bs = BandSet::new(grid, [b0, b1], Sigma::Identity, None).unwrap();
        assert!(matches!(classify(&bs, None), Err(Error::InternalConsistency(_))));
    }

    #[test]
    fn band_set_validation() {
        let n = 41;
        let b = circle_band(C64::ZERO, 1.0, 1, n);
        // Too few points.
        assert!(BandSet::new(ks(7), [b[..7].to_vec(), b[..7].to_vec()], Sigma::Identity, None)
            .is_err());
        // Grid not ending at 2 pi.
        let bad_grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        assert!(BandSet::new(bad_grid, [b.clone(), b.clone()], Sigma::Identity, None).is_err());
        // Mismatched band length.
        assert!(BandSet::new(ks(n), [b.clone(), b[..n - 1].to_vec()], Sigma::Identity, None)
            .is_err());
    }
}
