//! Output serialization with byte-exact contracts.
//!
//! Floats are written with Rust's shortest round-trip formatting ('.'
//! decimal separator, no locale), line ends are '\n', and headers are
//! mandatory, so identical runs produce identical bytes.

use anyhow::{bail, Context, Result};
use nhspec::spectroscopy::SpectralLine;
use num_complex::Complex64 as C64;
use std::fmt::Write as _;
use std::path::Path;

pub const SPECTRAL_LINE_HEADER: &str = "delta,na_mean,na_std";
pub const ENERGIES_HEADER: &str =
    "k,re_e1,im_e1,re_e2,im_e2,err_re_e1,err_im_e1,err_re_e2,err_im_e2,converged1,converged2";

/// One row of the energies table: a fitted eigenvalue pair at one
/// quasimomentum with its bootstrap errors and convergence flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub k: f64,
    pub e: [C64; 2],
    pub err_re: [f64; 2],
    pub err_im: [f64; 2],
    pub converged: [bool; 2],
}

pub fn spectral_line_csv(line: &SpectralLine) -> String {
    let mut out = String::with_capacity(32 * line.len());
    out.push_str(SPECTRAL_LINE_HEADER);
    out.push('\n');
    for i in 0..line.len() {
        writeln!(out, "{},{},{}", line.deltas[i], line.na_mean[i], line.na_std[i]).unwrap();
    }
    out
}

pub fn energies_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::with_capacity(128 * rows.len());
    out.push_str(ENERGIES_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.e[0].re,
            r.e[0].im,
            r.e[1].re,
            r.e[1].im,
            r.err_re[0],
            r.err_im[0],
            r.err_re[1],
            r.err_im[1],
            r.converged[0],
            r.converged[1]
        )
        .unwrap();
    }
    out
}

pub fn parse_energies_csv(text: &str) -> Result<Vec<EnergyRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == ENERGIES_HEADER => {}
        Some(header) => bail!("unexpected energies header {header:?}"),
        None => bail!("energies file is empty"),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            bail!("energies row {}: expected 11 fields, got {}", idx + 2, fields.len());
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = fields[i]
                .parse()
                .with_context(|| format!("energies row {}, field {}", idx + 2, i + 1))?;
            if !v.is_finite() {
                bail!("energies row {}, field {}: non-finite value", idx + 2, i + 1);
            }
            Ok(v)
        };
        let flag = |i: usize| -> Result<bool> {
            match fields[i] {
                "true" => Ok(true),
                "false" => Ok(false),
                other => bail!(
                    "energies row {}, field {}: expected true or false, got {other:?}",
                    idx + 2,
                    i + 1
                ),
            }
        };
        rows.push(EnergyRow {
            k: num(0)?,
            e: [C64::new(num(1)?, num(2)?), C64::new(num(3)?, num(4)?)],
            err_re: [num(5)?, num(7)?],
            err_im: [num(6)?, num(8)?],
            converged: [flag(9)?, flag(10)?],
        });
    }
    if rows.is_empty() {
        bail!("energies file has a header but no rows");
    }
    Ok(rows)
}

/// Write a file, creating parent directories as needed.
pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("cannot serialize report")?;
    text.push('\n');
    write_file(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<EnergyRow> {
        vec![
            EnergyRow {
                k: 0.0,
                e: [C64::new(0.22791423489056897, -0.05533313037407756), C64::new(-0.53, -0.1)],
                err_re: [0.001, 0.0015],
                err_im: [0.003, 0.004],
                converged: [true, true],
            },
            EnergyRow {
                k: 0.3141592653589793,
                e: [C64::new(0.1, -0.2), C64::new(-0.1, -0.05)],
                err_re: [0.0, 0.0],
                err_im: [0.0, 0.0],
                converged: [true, false],
            },
        ]
    }

    #[test]
    fn energies_round_trip_exactly() {
        let rows = sample_rows();
        let text = energies_csv(&rows);
        assert!(text.starts_with(ENERGIES_HEADER));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        let parsed = parse_energies_csv(&text).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn malformed_energies_are_rejected() {
        assert!(parse_energies_csv("").is_err());
        assert!(parse_energies_csv("k,e1\n1,2\n").is_err());
        let text = format!("{ENERGIES_HEADER}\n0.1,1,2,3\n");
        assert!(parse_energies_csv(&text).is_err());
        let text = format!("{ENERGIES_HEADER}\n0,1,2,3,4,5,6,7,8,yes,true\n");
        assert!(parse_energies_csv(&text).is_err());
        let text = format!("{ENERGIES_HEADER}\n0,1,2,3,4,5,6,7,NaN,true,true\n");
        assert!(parse_energies_csv(&text).is_err());
        let text = format!("{ENERGIES_HEADER}\n");
        assert!(parse_energies_csv(&text).is_err());
    }
}
