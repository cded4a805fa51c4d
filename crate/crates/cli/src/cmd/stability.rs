use std::path::Path;

use anyhow::Result;
use cvsheet::stability::{
    check_stability, ellipticity_form, hyperbolicity_check, solve_mu_2d, solve_mu_3d, MarginOptions, PhaseTrace,
    SymmetrizerField, TwoPhaseTrace,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{create, Report};

fn solve_mu(trace: &TwoPhaseTrace) -> cvsheet::Result<SymmetrizerField> {
    if trace.dim == 3 {
        solve_mu_3d(trace)
    } else {
        solve_mu_2d(trace)
    }
}

fn point(trace: &TwoPhaseTrace, i: usize) -> TwoPhaseTrace {
    let one = |p: &PhaseTrace| PhaseTrace { rho: vec![p.rho[i]], v: vec![p.v[i]], b: vec![p.b[i]], cs: vec![p.cs[i]] };
    TwoPhaseTrace { dim: trace.dim, points: vec![trace.points[i]], upper: one(&trace.upper), lower: one(&trace.lower) }
}

#[derive(Serialize)]
struct StabilitySummary {
    points: usize,
    stability: cvsheet::stability::StabilityReport,
    ellipticity: cvsheet::stability::EllipticityReport,
    hyperbolicity: Option<cvsheet::stability::HyperbolicityReport>,
    symmetrizer_error: Option<String>,
    unstable_direction: Option<[f64; 2]>,
}

pub fn check(cfg: &RunConfig, trace: &TwoPhaseTrace, out: &Path) -> Result<Report> {
    trace.validate(cfg.eos.rho_floor)?;
    let opts = MarginOptions { delta0: cfg.stability.delta0, allow_wide_delta0: cfg.stability.allow_wide_delta0 };
    let stab = check_stability(trace, opts)?;
    let ell = ellipticity_form(trace, cfg.stability.angles);
    let mu = solve_mu(trace);

    let mut w = csv_writer(out, "stability_points.csv", "# cvsheet-stability-points v1")?;
    w.write_record(["point", "x1", "x2", "upper_margin", "lower_margin", "ellipticity", "mu_upper", "mu_lower", "subsonic_upper", "subsonic_lower"])?;
    for i in 0..trace.len() {
        let p = point(trace, i);
        let s = check_stability(&p, opts)?;
        let e = ellipticity_form(&p, cfg.stability.angles);
        let (mu_u, mu_l) = match &mu {
            Ok(m) => (m.upper[i], m.lower[i]),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let x = trace.points[i];
        w.write_record([
            i.to_string(),
            x[0].to_string(),
            x[1].to_string(),
            format!("{:.12e}", s.upper_margin),
            format!("{:.12e}", s.lower_margin),
            format!("{:.12e}", e.infimum),
            format!("{mu_u:.12e}"),
            format!("{mu_l:.12e}"),
            s.subsonic_upper.to_string(),
            s.subsonic_lower.to_string(),
        ])?;
    }
    w.flush()?;

    let mut rep = Report::new("check-stability", cfg);
    rep.push(
        "stability_condition",
        stab.holds,
        stab.upper_margin.min(stab.lower_margin),
        0.0,
        Some(format!("upper {:.4e}, lower {:.4e}, worst point {}", stab.upper_margin, stab.lower_margin, stab.worst_point)),
    );
    let unstable_direction = (ell.infimum <= 0.0).then_some(ell.direction);
    let detail = unstable_direction.map(|d| format!("unstable direction ({:.6}, {:.6}) at point {}", d[0], d[1], ell.worst_point));
    rep.push("ellipticity", ell.infimum > 0.0, ell.infimum, 0.0, detail);
    let (hyp, mu_err) = match &mu {
        Ok(m) => {
            let h = hyperbolicity_check(trace, m);
            rep.above("hyperbolicity", h.min_eigenvalue_upper.min(h.min_eigenvalue_lower), 0.0);
            (Some(h), None)
        }
        Err(e) => {
            rep.failed("symmetrizer", e);
            (None, Some(e.to_string()))
        }
    };
    rep.set_result(StabilitySummary {
        points: trace.len(),
        stability: stab,
        ellipticity: ell,
        hyperbolicity: hyp,
        symmetrizer_error: mu_err,
        unstable_direction,
    })?;
    Ok(rep)
}

#[derive(Serialize)]
struct MuSummary {
    delta1: f64,
    jump_residual: f64,
    hyperbolicity: cvsheet::stability::HyperbolicityReport,
}

pub fn compute_mu(cfg: &RunConfig, trace: &TwoPhaseTrace, out: &Path) -> Result<Report> {
    trace.validate(cfg.eos.rho_floor)?;
    let mu = solve_mu(trace)?;
    let mut w = csv_writer(out, "mu.csv", "# cvsheet-mu v1")?;
    w.write_record(["point", "x1", "x2", "mu_upper", "mu_lower"])?;
    for i in 0..trace.len() {
        let x = trace.points[i];
        w.write_record([i.to_string(), x[0].to_string(), x[1].to_string(), format!("{:.15e}", mu.upper[i]), format!("{:.15e}", mu.lower[i])])?;
    }
    w.flush()?;
    let jump = mu.jump_residual(trace);
    let hyp = hyperbolicity_check(trace, &mu);
    let mut rep = Report::new("compute-mu", cfg);
    rep.below("jump_residual", jump, 1e-12);
    rep.above("hyperbolicity", hyp.min_eigenvalue_upper.min(hyp.min_eigenvalue_lower), 0.0);
    rep.set_result(MuSummary { delta1: mu.delta1, jump_residual: jump, hyperbolicity: hyp })?;
    Ok(rep)
}

pub fn csv_writer(out: &Path, name: &str, magic: &str) -> Result<csv::Writer<std::fs::File>> {
    use std::io::Write;
    let mut f = create(out, name)?;
    writeln!(f, "{magic}")?;
    Ok(csv::Writer::from_writer(f))
}
