//! Trace CSV files and the JSON geometry container.
//!
//! Trace files start with a version line `# cvsheet-trace v1 dim=D`, followed by a
//! header row and one row per interface point. Columns for `D = 3`:
//!
//! `x1,x2,rho_u,v1_u,v2_u,b1_u,b2_u,cs_u,rho_l,v1_l,v2_l,b1_l,b2_l,cs_l`
//!
//! and for `D = 2` the same without `x2`, `v2_*`, `b2_*`. Suffix `_u` is the upper
//! phase, `_l` the lower; `cs = inf` marks an incompressible phase.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SlabGrid, SpectralField, Torus};
use crate::stability::{PhaseTrace, TwoPhaseTrace};

pub const TRACE_MAGIC: &str = "# cvsheet-trace v1";

pub fn trace_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["x1".to_string()];
    if dim == 3 {
        cols.push("x2".into());
    }
    for side in ["u", "l"] {
        cols.push(format!("rho_{side}"));
        cols.push(format!("v1_{side}"));
        if dim == 3 {
            cols.push(format!("v2_{side}"));
        }
        cols.push(format!("b1_{side}"));
        if dim == 3 {
            cols.push(format!("b2_{side}"));
        }
        cols.push(format!("cs_{side}"));
    }
    cols
}

fn schema(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<TwoPhaseTrace> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    if reader.read_line(&mut first)? == 0 {
        return Err(schema(1, format!("empty file, expected `{TRACE_MAGIC} dim=2|3`")));
    }
    let first = first.trim();
    let dim = match first.strip_prefix(TRACE_MAGIC).map(str::trim) {
        Some("dim=2") => 2,
        Some("dim=3") => 3,
        _ => return Err(schema(1, format!("expected `{TRACE_MAGIC} dim=2|3`, got `{first}`"))),
    };
    let cols = trace_columns(dim);
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| schema(2, e))?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != cols {
        return Err(schema(2, format!("expected columns `{}`, got `{}`", cols.join(","), got.join(","))));
    }
    let mut points = Vec::new();
    let (mut up, mut lo) = (PhaseTrace::default(), PhaseTrace::default());
    for rec in csv.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() + 1).unwrap_or(0);
            schema(line, e)
        })?;
        // the version line is consumed before the csv reader starts counting
        let line = rec.position().map(|p| p.line() + 1).unwrap_or(0);
        let vals: Vec<f64> = rec
            .iter()
            .zip(&cols)
            .map(|(s, c)| {
                let v: f64 = s.parse().map_err(|_| schema(line, format!("column `{c}`: `{s}` is not a number")))?;
                if v.is_nan() || (v.is_infinite() && !c.starts_with("cs")) {
                    return Err(schema(line, format!("column `{c}`: non-finite value")));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let mut it = vals.into_iter();
        let mut next = || it.next().expect("length checked by the csv reader");
        points.push(if dim == 3 { [next(), next()] } else { [next(), 0.0] });
        for p in [&mut up, &mut lo] {
            p.rho.push(next());
            p.v.push(if dim == 3 { [next(), next()] } else { [next(), 0.0] });
            p.b.push(if dim == 3 { [next(), next()] } else { [next(), 0.0] });
            p.cs.push(next());
        }
    }
    if points.is_empty() {
        return Err(schema(3, "no data rows"));
    }
    TwoPhaseTrace::new(dim, points, up, lo)
}

pub fn write_trace_csv<W: Write>(trace: &TwoPhaseTrace, mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_MAGIC} dim={}", trace.dim)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_columns(trace.dim))?;
    let three = trace.dim == 3;
    for i in 0..trace.len() {
        let mut row = vec![trace.points[i][0]];
        if three {
            row.push(trace.points[i][1]);
        }
        for p in [&trace.upper, &trace.lower] {
            row.push(p.rho[i]);
            row.push(p.v[i][0]);
            if three {
                row.push(p.v[i][1]);
            }
            row.push(p.b[i][0]);
            if three {
                row.push(p.b[i][1]);
            }
            row.push(p.cs[i]);
        }
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub k: [i64; 2],
    pub re: f64,
    pub im: f64,
}

/// Self-describing slab geometry: grid dimensions, `H`, the column stretch and the
/// nonzero Fourier coefficients of `psi` (normalized so `cos(k x)` has `1/2` at `+-k`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryFile {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: usize,
    pub nv: usize,
    pub half_height: f64,
    pub stretch: f64,
    pub psi: Vec<ModeEntry>,
}

const GEOMETRY_FORMAT: &str = "cvsheet-geometry";

impl GeometryFile {
    pub fn from_parts(grid: &SlabGrid, psi: &SpectralField) -> Result<Self> {
        if psi.torus() != grid.torus() {
            return Err(Error::GridMismatch("psi is not on the grid's torus".into()));
        }
        let torus = grid.torus();
        let scale = psi.max_abs().max(1.0);
        let modes = psi
            .coefficients()
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-15 * scale)
            .map(|(h, c)| ModeEntry { k: torus.mode(h), re: c.re, im: c.im })
            .collect();
        Ok(Self {
            format: GEOMETRY_FORMAT.into(),
            version: 1,
            dim: grid.dim(),
            n: torus.n(),
            nv: grid.nv(),
            half_height: grid.half_height(),
            stretch: grid.column().stretch(),
            psi: modes,
        })
    }

    pub fn grid(&self) -> Result<SlabGrid> {
        SlabGrid::new(self.dim, self.n, self.nv, self.half_height, self.stretch)
    }

    pub fn psi(&self, torus: &Torus) -> Result<SpectralField> {
        let mut c = vec![Complex64::new(0.0, 0.0); torus.len()];
        for m in &self.psi {
            let h = torus
                .index_of_mode(m.k)
                .ok_or_else(|| Error::Format(format!("mode {:?} does not fit an n = {} torus", m.k, torus.n())))?;
            c[h] = Complex64::new(m.re, m.im);
        }
        Ok(SpectralField::from_coefficients(torus, &c))
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let g: Self = serde_json::from_reader(input)?;
        if g.format != GEOMETRY_FORMAT || g.version != 1 {
            return Err(Error::Format(format!("unsupported geometry container `{}` v{}", g.format, g.version)));
        }
        Ok(g)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// CSV of `(k1, k2, |f_k|)` over the modes of `fields`, one value column per field.
pub fn write_spectrum_csv<W: Write>(names: &[&str], fields: &[&SpectralField], mut out: W) -> Result<()> {
    let Some(first) = fields.first() else {
        return Ok(());
    };
    writeln!(out, "# cvsheet-spectrum v1")?;
    let torus = first.torus();
    let coeffs: Vec<Vec<Complex64>> = fields.iter().map(|f| f.coefficients()).collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k1".to_string(), "k2".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for h in 0..torus.len() {
        if torus.is_nyquist(h) {
            continue;
        }
        let k = torus.mode(h);
        let mut row = vec![k[0].to_string(), k[1].to_string()];
        row.extend(coeffs.iter().map(|c| format!("{:.12e}", c[h].norm())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
