use std::collections::HashMap;

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;

use super::krylov::{gmres, KrylovOptions, KrylovStats};
use crate::error::{Error, Result};
use crate::geometry::Flattening;
use crate::spectral::{BulkField, Phase, SlabGrid, SpectralField};

/// `d_a (E^{ab} d_b u) = d3phi * Lap^phi u` on one phase, with `E = P P^T / d3phi`.
///
/// Rows of the discrete operator: `u` on the interface (Dirichlet), the conormal
/// flux `E^{3b} d_b u` on the wall (Neumann), the divergence elsewhere.
pub struct EllipticProblem {
    grid: SlabGrid,
    phase: Phase,
    /// Upper triangle of `E`, row-major over `(a, b)` with `a <= b`.
    coeff: Vec<Vec<f64>>,
    precond: FlatPreconditioner,
}

fn tri(dim: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * dim - a * (a + 1) / 2 + b
}

impl EllipticProblem {
    pub fn new(geo: &Flattening, phase: Phase) -> Result<Self> {
        let grid = geo.grid().clone();
        let dim = grid.dim();
        let pg = geo.phase(phase);
        let j = pg.d3phi().data();
        let mut coeff = vec![vec![0.0; grid.len()]; dim * (dim + 1) / 2];
        for k in 0..grid.len() {
            let mut slope2 = 0.0;
            for a in 0..dim - 1 {
                let ga = pg.grad_phi[a].data()[k];
                slope2 += ga * ga;
                coeff[tri(dim, a, a)][k] = j[k];
                coeff[tri(dim, a, dim - 1)][k] = -ga;
            }
            coeff[tri(dim, dim - 1, dim - 1)][k] = (1.0 + slope2) / j[k];
        }
        let precond = FlatPreconditioner::new(&grid, phase);
        Ok(Self { grid, phase, coeff, precond })
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn coefficient(&self, a: usize, b: usize) -> &[f64] {
        &self.coeff[tri(self.grid.dim(), a, b)]
    }

    /// Smallest eigenvalue of `E` over the grid (positive when `d3phi > 0`).
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.grid.dim();
        (0..self.grid.len())
            .map(|k| {
                let m = DMatrix::from_fn(dim, dim, |a, b| self.coeff[tri(dim, a, b)][k]);
                m.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let f = BulkField::from_data(&self.grid, self.phase, u.to_vec()).expect("sized by grid");
        (0..self.grid.dim()).map(|i| f.partial(i).into_data()).collect()
    }

    /// Fluxes `F^a = E^{ab} d_b u`.
    pub fn fluxes(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.grid.dim();
        let du = self.gradient(u);
        (0..dim)
            .map(|a| {
                let mut fa = vec![0.0; u.len()];
                for (b, db) in du.iter().enumerate() {
                    let e = &self.coeff[tri(dim, a, b)];
                    fa.iter_mut().zip(e.iter().zip(db)).for_each(|(f, (e, d))| *f += e * d);
                }
                fa
            })
            .collect()
    }

    fn divergence(&self, flux: Vec<Vec<f64>>) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (a, fa) in flux.into_iter().enumerate() {
            let f = BulkField::from_data(&self.grid, self.phase, fa).expect("sized by grid");
            out.iter_mut().zip(f.partial(a).data()).for_each(|(o, d)| *o += d);
        }
        out
    }

    /// `d_a (E^{ab} d_b u)` at every node.
    pub fn divergence_form(&self, u: &BulkField) -> BulkField {
        let data = self.divergence(self.fluxes(u.data()));
        BulkField::from_data(&self.grid, self.phase, data).expect("sized by grid")
    }

    /// Conormal flux `E^{3b} d_b u` on level `j`.
    pub fn conormal_flux(&self, u: &BulkField, j: usize) -> SpectralField {
        let f3 = self.fluxes(u.data()).pop().expect("vertical flux");
        let nh = self.grid.nh();
        SpectralField::from_values(self.grid.torus(), f3[j * nh..(j + 1) * nh].to_vec()).expect("sized by torus")
    }

    pub(crate) fn apply(&self, u: &[f64]) -> Vec<f64> {
        let nh = self.grid.nh();
        let nv = self.grid.nv();
        let flux = self.fluxes(u);
        let wall: Vec<f64> = flux[self.grid.dim() - 1][(nv - 1) * nh..].to_vec();
        let mut out = self.divergence(flux);
        out[..nh].copy_from_slice(&u[..nh]);
        out[(nv - 1) * nh..].copy_from_slice(&wall);
        out
    }

    pub(crate) fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.precond.apply(&self.grid, r)
    }

    /// Solves `d_a (E^{ab} d_b u) = g` inside, `u = f` on the interface, zero conormal flux on the wall.
    pub fn solve(&self, g: &BulkField, f: &SpectralField, opts: &KrylovOptions) -> Result<(BulkField, KrylovStats)> {
        if !g.grid().same_as(&self.grid) || g.phase() != self.phase {
            return Err(Error::GridMismatch("source lives on a different grid or phase".into()));
        }
        let nh = self.grid.nh();
        let mut b = g.data().to_vec();
        let dirichlet = self.rhs(f)?;
        b[..nh].copy_from_slice(&dirichlet[..nh]);
        b[(self.grid.nv() - 1) * nh..].iter_mut().for_each(|v| *v = 0.0);
        let (u, stats) = gmres(|x| self.apply(x), |r| self.precondition(r), &b, None, opts)?;
        Ok((BulkField::from_data(&self.grid, self.phase, u)?, stats))
    }

    /// Right-hand side carrying Dirichlet data `f`.
    pub(crate) fn rhs(&self, f: &SpectralField) -> Result<Vec<f64>> {
        if f.torus() != self.grid.torus() {
            return Err(Error::GridMismatch("Dirichlet data lives on a different torus".into()));
        }
        let mut b = vec![0.0; self.grid.len()];
        b[..self.grid.nh()].copy_from_slice(f.values());
        Ok(b)
    }
}

/// Exact inverse of the flat-interface operator, one dense LU per distinct `|k|^2`.
struct FlatPreconditioner {
    groups: Vec<(LU<f64, nalgebra::Dyn, nalgebra::Dyn>, Vec<usize>)>,
}

impl FlatPreconditioner {
    fn new(grid: &SlabGrid, phase: Phase) -> Self {
        let torus = grid.torus();
        let nv = grid.nv();
        let d = grid.column().diff(phase);
        let d2 = &d * &d;
        let mut by_k2: HashMap<u64, Vec<usize>> = HashMap::new();
        for h in 0..torus.len() {
            let k = torus.derivative_mode(h);
            by_k2.entry((k[0] * k[0] + k[1] * k[1]) as u64).or_default().push(h);
        }
        let mut keys: Vec<u64> = by_k2.keys().copied().collect();
        keys.sort_unstable();
        let groups = keys
            .into_iter()
            .map(|k2| {
                let mut m = d2.clone();
                for j in 0..nv {
                    m[(j, j)] -= k2 as f64;
                }
                for c in 0..nv {
                    m[(0, c)] = if c == 0 { 1.0 } else { 0.0 };
                    m[(nv - 1, c)] = d[(nv - 1, c)];
                }
                (m.lu(), by_k2.remove(&k2).unwrap_or_default())
            })
            .collect();
        Self { groups }
    }

    fn apply(&self, grid: &SlabGrid, r: &[f64]) -> Vec<f64> {
        let torus = grid.torus();
        let nh = torus.len();
        let nv = grid.nv();
        let mut spec = vec![Complex64::new(0.0, 0.0); r.len()];
        for j in 0..nv {
            let level = &mut spec[j * nh..(j + 1) * nh];
            level.iter_mut().zip(&r[j * nh..(j + 1) * nh]).for_each(|(c, v)| *c = Complex64::new(*v, 0.0));
            torus.forward_complex(level);
        }
        for (lu, modes) in &self.groups {
            let mut rhs = DMatrix::zeros(nv, 2 * modes.len());
            for (c, &h) in modes.iter().enumerate() {
                for j in 0..nv {
                    let v = spec[j * nh + h];
                    rhs[(j, 2 * c)] = v.re;
                    rhs[(j, 2 * c + 1)] = v.im;
                }
            }
            lu.solve_mut(&mut rhs);
            for (c, &h) in modes.iter().enumerate() {
                for j in 0..nv {
                    spec[j * nh + h] = Complex64::new(rhs[(j, 2 * c)], rhs[(j, 2 * c + 1)]);
                }
            }
        }
        let mut out = vec![0.0; r.len()];
        for j in 0..nv {
            let level = &mut spec[j * nh..(j + 1) * nh];
            torus.inverse_complex(level);
            out[j * nh..(j + 1) * nh].iter_mut().zip(level.iter()).for_each(|(o, c)| *o = c.re);
        }
        out
    }
}
