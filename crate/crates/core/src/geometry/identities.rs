use serde::Serialize;

use super::{Cutoff, FlattenOptions, Flattening};
use crate::error::{invalid, Error, Result};
use crate::spectral::{BulkField, Phase, SlabGrid, SpectralField};

/// One sample of a time history used by [`transport_identity_check`].
#[derive(Clone, Debug)]
pub struct TimeLevel {
    pub psi: SpectralField,
    pub f: BulkField,
    pub g: BulkField,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    /// Centered difference of `int f g d3phi`.
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn interface_sign(phase: Phase) -> f64 {
    // outward normal of the phase points down (upper) or up (lower) on the interface
    -phase.sign()
}

/// Check `d/dt int f g d3phi = int (d_t^phi f) g d3phi + int f (d_t^phi g) d3phi + s int_{x3=0} f g psi_t`
/// with `s = +1` below and `-1` above the interface.
///
/// `levels` holds the states at `t - dt`, `t`, `t + dt`. `psi_t` at time `t` may be
/// passed exactly; otherwise it is taken by centered difference.
pub fn transport_identity_check(
    grid: &SlabGrid,
    cutoff: &Cutoff,
    levels: &[TimeLevel; 3],
    dt: f64,
    psi_t: Option<&SpectralField>,
) -> Result<TransportReport> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "time step must be positive"));
    }
    let phase = levels[1].f.phase();
    if levels.iter().any(|l| l.f.phase() != phase || l.g.phase() != phase) {
        return Err(Error::GridMismatch("time levels mix phases".into()));
    }
    let opts = FlattenOptions::default();
    let geos: Vec<Flattening> =
        levels.iter().map(|l| Flattening::new(grid, &l.psi, cutoff, opts)).collect::<Result<_>>()?;
    let weighted = |k: usize| -> f64 {
        let l = &levels[k];
        (&(&l.f * &l.g) * geos[k].phase(phase).d3phi()).integrate()
    };
    let lhs = (weighted(2) - weighted(0)) / (2.0 * dt);

    let mid = &levels[1];
    let geo = &geos[1];
    let psi_t = match psi_t {
        Some(p) => p.clone(),
        None => (&levels[2].psi - &levels[0].psi).scale(0.5 / dt),
    };
    let phi_t = geo.phi_t(phase, &psi_t);
    let j = geo.phase(phase).d3phi();
    let dt_phi = |prev: &BulkField, cur: &BulkField, next: &BulkField| -> BulkField {
        let ft = (next - prev).scale(0.5 / dt);
        let d3 = cur.d3();
        let corr = phi_t.zip_map(j, |a, b| a / b);
        &ft - &(&corr * &d3)
    };
    let ftf = dt_phi(&levels[0].f, &mid.f, &levels[2].f);
    let gtf = dt_phi(&levels[0].g, &mid.g, &levels[2].g);
    let bulk = (&(&(&ftf * &mid.g) + &(&mid.f * &gtf)) * j).integrate();
    let surface = (&(&mid.f.trace() * &mid.g.trace()) * &psi_t).integrate();
    let rhs = bulk + interface_sign(phase) * surface;
    Ok(TransportReport { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// `|int (d^phi_i f) g d3phi + int f (d^phi_i g) d3phi - boundary terms|`.
///
/// Boundary terms: `s int_{x3=0} f g N_i` (same `s` as the transport identity) plus, for
/// the vertical index, the wall contribution `+int_{x3=H} f g` or `-int_{x3=-H} f g`.
pub fn ibp_residual(geo: &Flattening, f: &BulkField, g: &BulkField, i: usize) -> Result<f64> {
    let phase = f.phase();
    let d = geo.grid().dim();
    if i >= d {
        return Err(invalid("i", format!("index {i} out of range for d = {d}")));
    }
    let j = geo.phase(phase).d3phi();
    let a = (&(&geo.covariant_partial(f, i)? * g) * j).integrate();
    let b = (&(&geo.covariant_partial(g, i)? * f) * j).integrate();
    let n = &geo.interface_normal()[i];
    let mut boundary = interface_sign(phase) * (&(&f.trace() * &g.trace()) * n).integrate();
    if i + 1 == d {
        boundary += phase.sign() * (&f.wall_trace() * &g.wall_trace()).integrate();
    }
    Ok((a + b - boundary).abs())
}

/// Tangential multi-index: counts of `d1`, `d2` and `omega(x3) d3` factors.
///
/// Horizontal factors are second-order centered differences, so the
/// good-unknown identity holds up to the `O(h^2)` chain-rule defect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct TangentialIndex {
    pub horizontal: [u8; 2],
    pub weighted: u8,
}

impl TangentialIndex {
    pub fn order(&self) -> usize {
        (self.horizontal[0] + self.horizontal[1] + self.weighted) as usize
    }

    fn factors(&self) -> Vec<Factor> {
        let mut v = Vec::new();
        v.extend(std::iter::repeat(Factor::Weighted).take(self.weighted as usize));
        v.extend(std::iter::repeat(Factor::Horizontal(0)).take(self.horizontal[0] as usize));
        v.extend(std::iter::repeat(Factor::Horizontal(1)).take(self.horizontal[1] as usize));
        v
    }
}

#[derive(Clone, Copy, Debug)]
enum Factor {
    Horizontal(usize),
    Weighted,
}

/// Anisotropic weight `omega(x3) = (H^2 - x3^2) x3^2`.
pub fn omega(x3: f64, half_height: f64) -> f64 {
    (half_height * half_height - x3 * x3) * x3 * x3
}

fn centered_difference(f: &BulkField, axis: usize) -> BulkField {
    let torus = f.grid().torus();
    let n = torus.n();
    let nh = torus.len();
    let inv = 0.5 / torus.spacing();
    let mut out = vec![0.0; f.data().len()];
    for j in 0..f.grid().nv() {
        let lvl = f.level(j);
        let o = &mut out[j * nh..(j + 1) * nh];
        for h in 0..nh {
            let (fwd, bwd) = if torus.axes() == 1 || axis == 0 {
                let (i1, rest) = (h / n.pow(torus.axes() as u32 - 1), h % n.pow(torus.axes() as u32 - 1));
                let stride = n.pow(torus.axes() as u32 - 1);
                (((i1 + 1) % n) * stride + rest, ((i1 + n - 1) % n) * stride + rest)
            } else {
                let (i1, i2) = (h / n, h % n);
                (i1 * n + (i2 + 1) % n, i1 * n + (i2 + n - 1) % n)
            };
            o[h] = (lvl[fwd] - lvl[bwd]) * inv;
        }
    }
    BulkField::from_data(f.grid(), f.phase(), out).expect("same grid")
}

fn apply_factor(f: &BulkField, factor: Factor) -> BulkField {
    match factor {
        Factor::Horizontal(a) => centered_difference(f, a),
        Factor::Weighted => {
            let grid = f.grid();
            let h = grid.half_height();
            let w: Vec<f64> = (0..grid.nv()).map(|j| omega(grid.column().x3(f.phase(), j), h)).collect();
            let d3 = f.d3();
            let nh = grid.nh();
            let mut data = d3.into_data();
            for (j, wj) in w.iter().enumerate() {
                data[j * nh..(j + 1) * nh].iter_mut().for_each(|v| *v *= wj);
            }
            BulkField::from_data(grid, f.phase(), data).expect("same grid")
        }
    }
}

fn apply_all(f: &BulkField, factors: &[Factor]) -> BulkField {
    factors.iter().fold(f.clone(), |acc, &fac| apply_factor(&acc, fac))
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodUnknownReport {
    /// `max_i |T(d^phi_i f) - d^phi_i F - C_i(f)|`.
    pub residual: f64,
    pub per_component: Vec<f64>,
    /// `max |F|` for the good unknown `F = T f - (T phi) d^phi_3 f`.
    pub good_unknown_max: f64,
    /// `max |T(d^phi_i f)|` over `i`, for scale.
    pub lhs_max: f64,
}

/// Evaluate the good-unknown commutator identity term by term.
pub fn good_unknown_residual(geo: &Flattening, f: &BulkField, index: TangentialIndex) -> Result<GoodUnknownReport> {
    let order = index.order();
    if order == 0 || order > 2 {
        return Err(invalid("index", format!("tangential order must be 1 or 2, got {order}")));
    }
    if geo.grid().dim() == 2 && index.horizontal[1] > 0 {
        return Err(invalid("index", "no second horizontal axis when d = 2"));
    }
    let factors = index.factors();
    let t = |u: &BulkField| apply_all(u, &factors);
    let phase = f.phase();
    let pg = geo.phase(phase);
    let d = geo.grid().dim();
    let phi = &pg.phi;
    let j = pg.d3phi();
    let inv_j = j.map(|v| 1.0 / v);
    let inv_j2 = j.map(|v| 1.0 / (v * v));
    let g = f.d3();

    let tf = t(f);
    let tphi = t(phi);
    let d3f_cov = geo.covariant_partial(f, d - 1)?;
    let good = &tf - &(&tphi * &d3f_cov);
    let comm_d3 = |u: &BulkField| &t(&u.d3()) - &t(u).d3();
    let comm_f = comm_d3(f);
    let comm_phi = comm_d3(phi);

    let mut per_component = Vec::with_capacity(d);
    let mut lhs_max: f64 = 0.0;
    for i in 0..d {
        let n_i = pg.big_n(i);
        let a = &n_i * &inv_j;
        let lhs = t(&geo.covariant_partial(f, i)?);
        lhs_max = lhs_max.max(lhs.max_abs());
        let df = geo.covariant_partial(&good, i)?;

        let t1 = &tphi * &geo.covariant_partial(&d3f_cov, i)?;
        let t2 = &(&t(&(&a * &g)) - &(&t(&a) * &g)) - &(&a * &t(&g));
        let t3 = &g * &(&(&t(&a) - &(&t(&n_i) * &inv_j)) - &(&n_i * &t(&inv_j)));
        let t4 = if order == 2 {
            let (outer, inner) = factors.split_at(factors.len() - 1);
            let inner_j = apply_all(j, inner);
            let c = &apply_all(&(&inv_j2 * &inner_j), outer) - &(&inv_j2 * &apply_all(&inner_j, outer));
            -&(&(&n_i * &g) * &c)
        } else {
            BulkField::zeros(geo.grid(), phase)
        };
        let t5 = &a * &comm_f;
        let t6 = -&(&(&(&n_i * &inv_j2) * &g) * &comm_phi);
        let c = &(&(&(&(&t1 + &t2) + &t3) + &t4) + &t5) + &t6;
        per_component.push((&(&lhs - &df) - &c).max_abs());
    }
    Ok(GoodUnknownReport {
        residual: per_component.iter().cloned().fold(0.0, f64::max),
        per_component,
        good_unknown_max: good.max_abs(),
        lhs_max,
    })
}
