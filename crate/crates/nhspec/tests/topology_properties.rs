//! Stability properties of the topological invariants, checked on the band
//! curves of the shipped model parameter sets rather than on synthetic
//! circles.

use nhspec::models::{closed_form_energies, lk_at_k, mrm_at_k, LkParams, MrmParams};
use nhspec::spectroscopy::uniform_grid;
use nhspec::topology::{
    braid_degree, classify, track_bands, winding_number, BandSet, Classification, Sigma,
};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn ks(n: usize) -> Vec<f64> {
    uniform_grid(0.0, 2.0 * PI, n).unwrap()
}

fn mrm_pairs(p: &MrmParams, ks: &[f64]) -> Vec<[C64; 2]> {
    ks.iter()
        .map(|&k| {
            let (a, b) = closed_form_energies(&mrm_at_k(p, k).unwrap());
            [a, b]
        })
        .collect()
}

fn lk_pairs(p: &LkParams, ks: &[f64]) -> Vec<[C64; 2]> {
    ks.iter()
        .map(|&k| {
            let (a, b) = closed_form_energies(&lk_at_k(p, k).unwrap());
            [a, b]
        })
        .collect()
}

fn shipped_band_sets(n: usize) -> Vec<BandSet> {
    let grid = ks(n);
    let mut sets = Vec::new();
    for p in [
        MrmParams::new(0.315, 0.098, 0.122, 0.035, 0.092).unwrap(),
        MrmParams::new(0.315, 0.098, 0.0, 0.038, 0.092).unwrap(),
        MrmParams::new(0.195, 0.098, 0.100, 0.038, 0.127).unwrap(),
    ] {
        sets.push(track_bands(&grid, &mrm_pairs(&p, &grid), None).unwrap());
    }
    let lk = LkParams::new(0.13, 0.05, 0.08, 0.07, 0.15).unwrap();
    sets.push(track_bands(&grid, &lk_pairs(&lk, &grid), None).unwrap());
    sets
}

#[test]
fn winding_is_stable_under_small_base_motion() {
    let sets = shipped_band_sets(201);

    // The linked rings both enclose this point with a clearance of about
    // 0.07, and the separated rings of the first set both exclude the
    // combined centroid by a similar margin; a 1e-3 nudge of the base in
    // any direction stays inside the same face.
    let linked_base = C64::new(-0.14, -0.10);
    let ring_base = classify(&sets[0], None).unwrap().e_b;

    for (bs, base, expected) in [(&sets[3], linked_base, 1), (&sets[0], ring_base, 0)] {
        for band in 0..2 {
            let reference = winding_number(bs.band(band), base).unwrap();
            assert_eq!(reference, expected);
            for dir in 0..8 {
                let angle = PI / 4.0 * dir as f64;
                let nudged = base + C64::new(angle.cos(), angle.sin()) * 1e-3;
                assert_eq!(
                    winding_number(bs.band(band), nudged).unwrap(),
                    reference,
                    "band {band} winding moved under base nudge {dir}"
                );
            }
        }
    }
}

#[test]
fn braid_degree_ignores_band_order() {
    for bs in shipped_band_sets(201) {
        let swapped = BandSet::new(
            bs.k_grid().to_vec(),
            [bs.band(1).to_vec(), bs.band(0).to_vec()],
            bs.sigma(),
            None,
        )
        .unwrap();
        assert_eq!(braid_degree(&bs).unwrap(), braid_degree(&swapped).unwrap());
    }
}

#[test]
fn hermitian_limit_never_reports_a_link() {
    let grid = ks(201);
    let lossless_mrm = MrmParams::new(0.315, 0.098, 0.122, 0.035, 0.0).unwrap();
    let lossless_lk = LkParams::new(0.13, 0.05, 0.08, 0.0, 0.0).unwrap();
    for pairs in [mrm_pairs(&lossless_mrm, &grid), lk_pairs(&lossless_lk, &grid)] {
        for pair in &pairs {
            for e in pair {
                assert!(e.im.abs() < 1e-12, "lossless energies must be real, got {e}");
            }
        }
        let bs = track_bands(&grid, &pairs, None).unwrap();
        match classify(&bs, None) {
            Ok(report) => assert_eq!(
                report.classification,
                Classification::TrivialArcs,
                "collapsed loops cannot form a link or knot"
            ),
            Err(_) => {}
        }
    }
}

#[test]
fn parallel_flat_bands_have_no_braid() {
    let grid = ks(21);
    let n = grid.len();
    let bs = BandSet::new(
        grid,
        [vec![C64::new(0.3, -0.05); n], vec![C64::new(-0.4, -0.1); n]],
        Sigma::Identity,
        None,
    )
    .unwrap();
    assert_eq!(braid_degree(&bs).unwrap(), 0);
}
