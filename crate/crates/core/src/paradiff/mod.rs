//! Littlewood-Paley analysis, paraproducts and the symbols of the interface problem.

mod curvature;
mod cutoffs;
mod ops;
mod symbols;
mod symmetrization;

pub use curvature::{curvature_paralinearization, mean_curvature, CurvatureSplit};
pub use cutoffs::PLCutoffs;
pub use ops::{bony_decompose, lp_project, para_apply, para_apply_coefficients, BonyParts, ParaSymbol, Part};
pub use symbols::{
    compose, dtn_zeroth_lower, sample_table, AbsXi, Composite, CurvatureRoot, CurvatureSymbol, DtnSymbol, GridJets,
    RegularitySymbol, SummedDtnSymbol, Symbol, SymbolPoint, SymbolSample, SymmetrizerM, SymmetrizerN,
};
pub use symmetrization::{
    composition_residual, symmetrization_operator_residual, symmetrization_sides, symmetrization_symbol_residual,
    ScalingReport, SymbolResidualReport,
};
