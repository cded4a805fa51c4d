//! Anisotropic Sobolev norms with the degenerate weight `omega`, layered energy
//! functionals and embedding spot checks.

mod anisotropic;
mod embedding;
mod energy;

pub use anisotropic::{
    anisotropic_norm, anisotropic_norm_terms, sobolev_norm, star_derivative, star_norm, AnisotropicWeight,
    FieldHistory, NormTerm, TangentialMultiIndex,
};
pub use embedding::{embedding_spot_check, standard_family, EmbeddingReport, EmbeddingSample};
pub use energy::{
    energy_layer, energy_pattern, layered_energy, weak_energy, BoundaryTerm, EnergyHistory, EnergyLayer,
    EnergyPattern, EnergySettings, InteriorTerm, PhaseState, TermValue, WeakEnergy,
};

use std::io::Write;

use crate::error::Result;

/// CSV of `||d_*^alpha f||^2` keyed by `(m, alpha)`.
pub fn write_norm_table<W: Write>(m: usize, terms: &[NormTerm], mut out: W) -> Result<()> {
    writeln!(out, "# cvsheet-norm-terms v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "alpha_t", "alpha_1", "alpha_2", "alpha_3", "alpha_w", "weight", "value"])?;
    for t in terms {
        let a = t.index;
        w.write_record([
            m.to_string(),
            a.time.to_string(),
            a.horizontal[0].to_string(),
            a.horizontal[1].to_string(),
            a.normal.to_string(),
            a.weighted.to_string(),
            a.weight().to_string(),
            format!("{:.12e}", t.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV of every energy summand keyed by `(l, k)`; boundary rows leave `alpha` empty.
pub fn write_energy_table<W: Write>(layers: &[EnergyLayer], mut out: W) -> Result<()> {
    writeln!(out, "# cvsheet-energy-terms v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "k", "kind", "alpha_t", "alpha_1", "alpha_2", "alpha_w", "sobolev", "fp_exponent", "value"])?;
    for layer in layers {
        for t in &layer.interior_terms {
            let a = t.term.alpha;
            w.write_record([
                layer.l.to_string(),
                t.term.k.to_string(),
                "interior".into(),
                a.time.to_string(),
                a.horizontal[0].to_string(),
                a.horizontal[1].to_string(),
                a.weighted.to_string(),
                t.term.sobolev.to_string(),
                t.term.pressure_exponent().to_string(),
                format!("{:.12e}", t.value),
            ])?;
        }
        for t in &layer.boundary_terms {
            w.write_record([
                layer.l.to_string(),
                t.term.k.to_string(),
                "boundary".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                t.term.sobolev.to_string(),
                String::new(),
                format!("{:.12e}", t.value),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BulkField, Phase, SlabGrid};

    #[test]
    fn norm_table_has_one_row_per_index() {
        let g = SlabGrid::new(2, 8, 8, 20.0, 3.0).unwrap();
        let f = BulkField::from_fn(&g, Phase::Upper, |x| x[0].cos());
        let terms = anisotropic_norm_terms(&FieldHistory::new(vec![f; 3], 0.1).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        write_norm_table(2, &terms, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), terms.len() + 2);
        assert!(text.lines().nth(1).unwrap().starts_with("m,alpha_t"));
    }
}
