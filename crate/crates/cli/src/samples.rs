//! Bundled trace samples and the generator that produced them.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cvsheet::io::{read_trace_csv, write_trace_csv};
use cvsheet::stability::{PhaseTrace, TwoPhaseTrace};

pub const STABLE_3D: &str = include_str!("../data/stable_3d.csv");
pub const KELVIN_HELMHOLTZ: &str = include_str!("../data/kelvin_helmholtz.csv");

const SIDE: usize = 8;

fn lattice() -> Vec<[f64; 2]> {
    let h = TAU / SIDE as f64;
    (0..SIDE * SIDE).map(|i| [(i / SIDE) as f64 * h, (i % SIDE) as f64 * h]).collect()
}

fn round(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Transverse fields and a moderate velocity jump, inside the stability band for `delta0 = 0.1`.
pub fn stable_3d() -> Result<TwoPhaseTrace> {
    let pts = lattice();
    let n = pts.len();
    let (mut up, mut lo) = (PhaseTrace::uniform(n, 1.0, [0.0; 2], [0.0; 2], 5.0), PhaseTrace::uniform(n, 1.2, [0.0; 2], [0.0; 2], f64::INFINITY));
    for (i, x) in pts.iter().enumerate() {
        let wobble = 0.02 * (x[0] + x[1]).sin();
        up.b[i] = [1.0, round(0.2 * x[0].sin())];
        lo.b[i] = [round(0.2 * x[1].cos()), 1.1];
        up.v[i] = [round(0.15 + wobble), round(0.15 - wobble)];
        lo.v[i] = [-0.15, -0.15];
    }
    Ok(TwoPhaseTrace::new(3, pts.iter().map(|p| [round(p[0]), round(p[1])]).collect(), up, lo)?)
}

/// Pure shear without magnetic field.
pub fn kelvin_helmholtz() -> Result<TwoPhaseTrace> {
    let pts: Vec<[f64; 2]> = lattice().iter().map(|p| [round(p[0]), round(p[1])]).collect();
    let n = pts.len();
    let up = PhaseTrace::uniform(n, 1.0, [0.5, 0.0], [0.0; 2], f64::INFINITY);
    let lo = PhaseTrace::uniform(n, 1.0, [-0.5, 0.0], [0.0; 2], f64::INFINITY);
    Ok(TwoPhaseTrace::new(3, pts, up, lo)?)
}

pub fn render(trace: &TwoPhaseTrace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn write_all(dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = vec![];
    for (name, trace) in [("stable_3d.csv", stable_3d()?), ("kelvin_helmholtz.csv", kelvin_helmholtz()?)] {
        let p = dir.join(name);
        fs::write(&p, render(&trace)?).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
    }
    Ok(written)
}

/// Trace from a path, a bundled sample name (`stable_3d`, `kelvin_helmholtz`), or the
/// stable sample when nothing is given.
pub fn load_trace(arg: Option<&Path>) -> Result<TwoPhaseTrace> {
    let text = match arg {
        None => STABLE_3D.to_string(),
        Some(p) if p.as_os_str() == "stable_3d" => STABLE_3D.to_string(),
        Some(p) if p.as_os_str() == "kelvin_helmholtz" => KELVIN_HELMHOLTZ.to_string(),
        Some(p) => {
            if !p.exists() {
                bail!("trace file {} not found", p.display());
            }
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
    };
    let src = arg.map(|p| p.display().to_string()).unwrap_or_else(|| "stable_3d".into());
    read_trace_csv(text.as_bytes()).with_context(|| format!("trace {src}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvsheet::stability::{check_stability_3d, MarginOptions};

    #[test]
    fn bundled_files_match_generator() {
        assert_eq!(render(&stable_3d().unwrap()).unwrap(), STABLE_3D);
        assert_eq!(render(&kelvin_helmholtz().unwrap()).unwrap(), KELVIN_HELMHOLTZ);
    }

    #[test]
    fn stable_sample_has_positive_margins() {
        let r = check_stability_3d(&stable_3d().unwrap(), MarginOptions::new(0.1)).unwrap();
        assert!(r.holds && r.upper_margin > 0.0 && r.lower_margin > 0.0, "{r:?}");
        let r = check_stability_3d(&kelvin_helmholtz().unwrap(), MarginOptions::new(0.1)).unwrap();
        assert!(!r.holds);
    }
}
