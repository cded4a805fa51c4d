use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use cvsheet::paradiff::{
    sample_table, symmetrization_symbol_residual, CurvatureRoot, CurvatureSymbol, DtnSymbol, GridJets, SummedDtnSymbol,
    Symbol, SymbolSample, SymmetrizerM, SymmetrizerN,
};
use cvsheet::spectral::{Phase, Torus};
use serde::Serialize;

use crate::config::{field, RunConfig};
use crate::report::{create, Report};

#[derive(Serialize)]
struct SymbolsSummary {
    samples: usize,
    order3_max: f64,
    order2_max: f64,
    symmetrizer_re_subprincipal_max: f64,
    curvature_root_defect: f64,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let torus = Torus::new(cfg.grid.dim, cfg.grid.n)?;
    let psi = field(&torus, &cfg.symbols.psi)?;
    let sc = &cfg.symbols;
    let res = symmetrization_symbol_residual(&psi, sc.samples, cfg.seed)?;

    let symbols: Vec<Box<dyn Symbol>> = vec![
        Box::new(DtnSymbol { phase: Phase::Upper }),
        Box::new(DtnSymbol { phase: Phase::Lower }),
        Box::new(SummedDtnSymbol),
        Box::new(CurvatureSymbol),
        Box::new(SymmetrizerM),
        Box::new(SymmetrizerN),
    ];
    let mut tables: BTreeMap<String, Vec<SymbolSample>> = BTreeMap::new();
    for s in &symbols {
        tables.insert(s.name(), sample_table(s.as_ref(), &psi, sc.radius, sc.directions)?);
    }
    let re_m = tables["symmetrizer_m"].iter().map(|r| r.subprincipal[0].abs()).fold(0.0, f64::max);

    // h^(2) = (c * 2 Lambda^(1))^2 on every sampled point
    let jets = GridJets::from_psi(&psi);
    let mut root: f64 = 0.0;
    for h in 0..torus.len() {
        for d in 0..sc.directions.max(1) {
            let t = std::f64::consts::PI * d as f64 / sc.directions.max(1) as f64;
            let xi = if torus.axes() == 2 { [sc.radius * t.cos(), sc.radius * t.sin()] } else { [sc.radius, 0.0] };
            let p = jets.point(h, xi);
            let h2 = CurvatureSymbol.principal(&p).re;
            let c = CurvatureRoot.principal(&p).re * SummedDtnSymbol.principal(&p).re;
            root = root.max((h2 - c * c).abs() / h2.abs().max(1.0));
        }
    }

    serde_json::to_writer(create(out, "symbol_tables.json")?, &tables)?;
    let mut rep = Report::new("symbols", cfg);
    rep.below("symmetrization_order3", res.order3_max, sc.tol);
    rep.below("symmetrization_order2", res.order2_max, sc.tol);
    rep.below("symmetrizer_real_subprincipal", re_m, 0.0);
    rep.below("curvature_root", root, 1e-12);
    rep.set_result(SymbolsSummary {
        samples: res.samples,
        order3_max: res.order3_max,
        order2_max: res.order2_max,
        symmetrizer_re_subprincipal_max: re_m,
        curvature_root_defect: root,
    })?;
    Ok(rep)
}
