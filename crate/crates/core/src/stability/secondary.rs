use serde::Serialize;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::geometry::Flattening;
use crate::spectral::BulkField;

/// Bulk MHD state of one phase and its time derivatives (`d` components each).
#[derive(Clone, Debug)]
pub struct MhdFields {
    pub v: Vec<BulkField>,
    pub b: Vec<BulkField>,
    pub p: BulkField,
    pub s: BulkField,
    pub v_t: Vec<BulkField>,
    pub b_t: Vec<BulkField>,
    pub p_t: BulkField,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizationReport {
    /// Max-norm residuals `[momentum, continuity, induction]` of the original system.
    pub original: [f64; 3],
    /// Same for the `mu`-transformed system, evaluated from its written form.
    pub transformed: [f64; 3],
    /// Max difference between the written transformed residuals and the linear
    /// combinations of the original ones.
    pub combination_mismatch: f64,
    /// `max |(grad^phi |b|^2/2 - (b . grad^phi) b) . b|`.
    pub orthogonality: f64,
}

struct Residuals {
    momentum: Vec<BulkField>,
    continuity: BulkField,
    induction: Vec<BulkField>,
}

fn max_vec(v: &[BulkField]) -> f64 {
    v.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
}

/// Residuals of the original system and of its `mu`-weighted recombination
/// `(M - mu rho B, C + mu F_p M.b, B - mu M)`.
pub fn secondary_symmetrize_residual(
    geo: &Flattening,
    fields: &MhdFields,
    phi_t: &BulkField,
    mu: &BulkField,
    eos: &dyn EquationOfState,
) -> Result<SymmetrizationReport> {
    let d = geo.grid().dim();
    for comp in [&fields.v, &fields.b, &fields.v_t, &fields.b_t] {
        if comp.len() != d {
            return Err(Error::GridMismatch(format!("vector fields need {d} components")));
        }
    }
    let phase = fields.p.phase();
    let mut rho = fields.p.clone();
    let mut fp = fields.p.clone();
    for (k, (r, f)) in rho.data_mut().iter_mut().zip(fp.data_mut().iter_mut()).enumerate() {
        let (p, s) = (fields.p.data()[k], fields.s.data()[k]);
        *r = eos.density(p, s)?;
        *f = eos.log_density_dp(p, s, 1)?;
    }
    if mu.phase() != phase {
        return Err(Error::GridMismatch("mu lives on the other phase".into()));
    }

    let dt = |ft: &BulkField, f: &BulkField| geo.material_derivative(ft, f, &fields.v, phi_t);
    let dtv: Vec<BulkField> = (0..d).map(|i| dt(&fields.v_t[i], &fields.v[i])).collect::<Result<_>>()?;
    let dtb: Vec<BulkField> = (0..d).map(|i| dt(&fields.b_t[i], &fields.b[i])).collect::<Result<_>>()?;
    let dtp = dt(&fields.p_t, &fields.p)?;
    let grad_v: Vec<Vec<BulkField>> = fields.v.iter().map(|f| geo.covariant_grad(f)).collect::<Result<_>>()?;
    let grad_b: Vec<Vec<BulkField>> = fields.b.iter().map(|f| geo.covariant_grad(f)).collect::<Result<_>>()?;
    let grad_p = geo.covariant_grad(&fields.p)?;

    let zero = BulkField::zeros(geo.grid(), phase);
    let along_b = |grad: &Vec<Vec<BulkField>>, i: usize| -> BulkField {
        (0..d).fold(zero.clone(), |acc, j| &acc + &(&fields.b[j] * &grad[i][j]))
    };
    let div_v = (0..d).fold(zero.clone(), |acc, i| &acc + &grad_v[i][i]);
    // grad(|b|^2 / 2) through the product rule, so the orthogonality holds to round-off
    let grad_mag: Vec<BulkField> =
        (0..d).map(|i| (0..d).fold(zero.clone(), |acc, j| &acc + &(&fields.b[j] * &grad_b[j][i]))).collect();
    let b_grad_b: Vec<BulkField> = (0..d).map(|i| along_b(&grad_b, i)).collect();
    let b_grad_v: Vec<BulkField> = (0..d).map(|i| along_b(&grad_v, i)).collect();

    let original = Residuals {
        momentum: (0..d)
            .map(|i| &(&(&(&rho * &dtv[i]) - &b_grad_b[i]) + &grad_p[i]) + &grad_mag[i])
            .collect(),
        continuity: &(&fp * &dtp) + &div_v,
        induction: (0..d).map(|i| &(&dtb[i] - &b_grad_v[i]) + &(&fields.b[i] * &div_v)).collect(),
    };

    // written form of the transformed system
    let mu_rho = mu * &rho;
    let mu_fp = mu * &fp;
    let written = Residuals {
        momentum: (0..d)
            .map(|i| {
                let ind = &(&dtb[i] - &b_grad_v[i]) + &(&fields.b[i] * &div_v);
                &original.momentum[i] - &(&mu_rho * &ind)
            })
            .collect(),
        continuity: {
            let mut extra = zero.clone();
            for i in 0..d {
                extra = &extra + &(&(&(&rho * &dtv[i]) + &grad_p[i]) * &fields.b[i]);
            }
            &(&(&fp * &dtp) + &div_v) + &(&mu_fp * &extra)
        },
        induction: (0..d)
            .map(|i| {
                let mom = &(&(&(&rho * &dtv[i]) - &b_grad_b[i]) + &grad_p[i]) + &grad_mag[i];
                &(&(&dtb[i] - &b_grad_v[i]) + &(&fields.b[i] * &div_v)) - &(mu * &mom)
            })
            .collect(),
    };

    // the same system as linear combinations of the original residuals
    let m_dot_b = (0..d).fold(zero.clone(), |acc, i| &acc + &(&original.momentum[i] * &fields.b[i]));
    let combo = Residuals {
        momentum: (0..d).map(|i| &original.momentum[i] - &(&mu_rho * &original.induction[i])).collect(),
        continuity: &original.continuity + &(&mu_fp * &m_dot_b),
        induction: (0..d).map(|i| &original.induction[i] - &(mu * &original.momentum[i])).collect(),
    };

    let mut mismatch = (&written.continuity - &combo.continuity).max_abs();
    for i in 0..d {
        mismatch = mismatch
            .max((&written.momentum[i] - &combo.momentum[i]).max_abs())
            .max((&written.induction[i] - &combo.induction[i]).max_abs());
    }
    let orth = (0..d)
        .fold(zero.clone(), |acc, i| &acc + &(&(&grad_mag[i] - &b_grad_b[i]) * &fields.b[i]))
        .max_abs();

    Ok(SymmetrizationReport {
        original: [max_vec(&original.momentum), original.continuity.max_abs(), max_vec(&original.induction)],
        transformed: [max_vec(&written.momentum), written.continuity.max_abs(), max_vec(&written.induction)],
        combination_mismatch: mismatch,
        orthogonality: orth,
    })
}

impl MhdFields {
    /// Choose `v_t`, `b_t`, `p_t` so that the original system holds exactly at the
    /// discrete level (manufactured-solution construction).
    pub fn balance_time_derivatives(&mut self, geo: &Flattening, phi_t: &BulkField, eos: &dyn EquationOfState) -> Result<()> {
        let d = geo.grid().dim();
        let phase = self.p.phase();
        let zero = BulkField::zeros(geo.grid(), phase);
        // convective part A f = D_t f - d_t f
        let conv = |f: &BulkField| geo.material_derivative(&zero, f, &self.v, phi_t);
        let mut rho = self.p.clone();
        let mut fp = self.p.clone();
        for (k, (r, f)) in rho.data_mut().iter_mut().zip(fp.data_mut().iter_mut()).enumerate() {
            let (p, s) = (self.p.data()[k], self.s.data()[k]);
            *r = eos.density(p, s)?;
            *f = eos.log_density_dp(p, s, 1)?;
        }
        let grad_v: Vec<Vec<BulkField>> = self.v.iter().map(|f| geo.covariant_grad(f)).collect::<Result<_>>()?;
        let grad_b: Vec<Vec<BulkField>> = self.b.iter().map(|f| geo.covariant_grad(f)).collect::<Result<_>>()?;
        let grad_p = geo.covariant_grad(&self.p)?;
        let div_v = (0..d).fold(zero.clone(), |acc, i| &acc + &grad_v[i][i]);
        let mut v_t = Vec::with_capacity(d);
        let mut b_t = Vec::with_capacity(d);
        for i in 0..d {
            let mut force = -&grad_p[i];
            for j in 0..d {
                force = &force + &(&self.b[j] * &grad_b[i][j]);
                force = &force - &(&self.b[j] * &grad_b[j][i]);
            }
            v_t.push(&force.zip_map(&rho, |a, r| a / r) - &conv(&self.v[i])?);
            let mut ind = -&(&self.b[i] * &div_v);
            for j in 0..d {
                ind = &ind + &(&self.b[j] * &grad_v[i][j]);
            }
            b_t.push(&ind - &conv(&self.b[i])?);
        }
        self.p_t = &(-&div_v).zip_map(&fp, |a, f| a / f) - &conv(&self.p)?;
        self.v_t = v_t;
        self.b_t = b_t;
        Ok(())
    }
}
