use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::omega;
use crate::spectral::{BulkField, Column, Phase};

/// `omega(x3) = (H^2 - x3^2) x3^2` and its first two derivatives on the nodes of one phase.
#[derive(Clone, Debug)]
pub struct AnisotropicWeight {
    pub half_height: f64,
    pub x3: Vec<f64>,
    pub value: Vec<f64>,
    pub slope: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl AnisotropicWeight {
    pub fn tabulate(column: &Column, phase: Phase) -> Self {
        let h = column.half_height();
        let x3: Vec<f64> = (0..column.nv()).map(|j| column.x3(phase, j)).collect();
        Self {
            half_height: h,
            value: x3.iter().map(|&x| omega(x, h)).collect(),
            slope: x3.iter().map(|&x| 2.0 * h * h * x - 4.0 * x.powi(3)).collect(),
            curvature: x3.iter().map(|&x| 2.0 * h * h - 12.0 * x * x).collect(),
            x3,
        }
    }

    /// `(omega d3) f`.
    pub fn apply(&self, f: &BulkField) -> BulkField {
        let nh = f.grid().nh();
        let mut data = vertical_derivative(f).into_data();
        for (j, w) in self.value.iter().enumerate() {
            data[j * nh..(j + 1) * nh].iter_mut().for_each(|v| *v *= w);
        }
        BulkField::from_data(f.grid(), f.phase(), data).expect("same grid")
    }
}

/// `d3 f` with each column shifted by its interface value first, so columns that are
/// constant differentiate to exact zeros before any weighting by `omega`.
fn vertical_derivative(f: &BulkField) -> BulkField {
    let nh = f.grid().nh();
    let mut data = f.data().to_vec();
    let base = data[..nh].to_vec();
    for chunk in data.chunks_mut(nh) {
        chunk.iter_mut().zip(&base).for_each(|(v, b)| *v -= b);
    }
    BulkField::from_data(f.grid(), f.phase(), data).expect("same grid").d3()
}

/// `alpha = (alpha_0, alpha_1, .., alpha_d, alpha_{d+1})`: time, horizontal, normal and
/// weighted-normal derivative counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TangentialMultiIndex {
    pub time: u8,
    pub horizontal: [u8; 2],
    pub normal: u8,
    pub weighted: u8,
}

impl TangentialMultiIndex {
    pub const ZERO: Self = Self { time: 0, horizontal: [0, 0], normal: 0, weighted: 0 };

    /// Anisotropic length: normal derivatives count twice.
    pub fn weight(&self) -> usize {
        (self.time + self.horizontal[0] + self.horizontal[1] + 2 * self.normal + self.weighted) as usize
    }

    pub fn spatial(&self) -> Self {
        Self { time: 0, ..*self }
    }

    /// Every index of weight at most `m` over `axes` horizontal directions. With
    /// `with_time = false` the time slot stays zero.
    pub fn enumerate(m: usize, axes: usize, with_time: bool) -> Vec<Self> {
        let m = m as u8;
        let t_max = if with_time { m } else { 0 };
        let h2_max = if axes == 2 { m } else { 0 };
        let mut out = Vec::new();
        for time in 0..=t_max {
            for h1 in 0..=m {
                for h2 in 0..=h2_max {
                    for normal in 0..=m / 2 {
                        for weighted in 0..=m {
                            let idx = Self { time, horizontal: [h1, h2], normal, weighted };
                            if idx.weight() <= m as usize {
                                out.push(idx);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Tangential family `T^alpha` with no plain normal derivative and total length `m`.
    pub fn tangential(m: usize, axes: usize) -> Vec<Self> {
        Self::enumerate(m, axes, true).into_iter().filter(|a| a.normal == 0 && a.weight() == m).collect()
    }
}

/// Applies the spatial part `(omega d3)^a_{d+1} d1^a1 d2^a2 d3^a_d` of `index`.
pub fn star_derivative(f: &BulkField, index: TangentialMultiIndex, weight: &AnisotropicWeight) -> BulkField {
    let mut g = f.clone();
    for _ in 0..index.normal {
        g = vertical_derivative(&g);
    }
    for (a, &n) in index.horizontal.iter().enumerate() {
        for _ in 0..n {
            g = g.dh(a);
        }
    }
    for _ in 0..index.weighted {
        g = weight.apply(&g);
    }
    g
}

/// Finite-difference weights for the `order`-th derivative at `x0` over `nodes`.
pub(crate) fn difference_weights(nodes: &[f64], x0: f64, order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Time series of one bulk field at equally spaced levels.
///
/// Time derivatives are evaluated at the centre level `(n - 1) / 2` with the
/// widest stencil the history allows.
#[derive(Clone, Debug)]
pub struct FieldHistory {
    pub levels: Vec<BulkField>,
    pub dt: f64,
}

impl FieldHistory {
    pub fn new(levels: Vec<BulkField>, dt: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InsufficientHistory { needed: 1, got: 0 });
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("time step must be positive, got {dt}")));
        }
        let first = &levels[0];
        if levels.iter().any(|f| !f.grid().same_as(first.grid()) || f.phase() != first.phase()) {
            return Err(Error::GridMismatch("history levels differ in grid or phase".into()));
        }
        Ok(Self { levels, dt })
    }

    pub fn stationary(f: BulkField) -> Self {
        Self { levels: vec![f], dt: 1.0 }
    }

    pub fn centre(&self) -> usize {
        (self.levels.len() - 1) / 2
    }

    pub fn time_derivative(&self, order: usize) -> Result<BulkField> {
        time_derivative(&self.levels, self.dt, order)
    }
}

pub(crate) fn time_derivative(levels: &[BulkField], dt: f64, order: usize) -> Result<BulkField> {
    let n = levels.len();
    if n < order + 1 {
        return Err(Error::InsufficientHistory { needed: order + 1, got: n });
    }
    let c = (n - 1) / 2;
    if order == 0 {
        return Ok(levels[c].clone());
    }
    let nodes: Vec<f64> = (0..n).map(|i| (i as f64 - c as f64) * dt).collect();
    let w = difference_weights(&nodes, 0.0, order);
    let mut acc = levels[0].scale(w[0]);
    for (f, wi) in levels.iter().zip(&w).skip(1) {
        acc = &acc + &f.scale(*wi);
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormTerm {
    pub index: TangentialMultiIndex,
    /// `||d_*^alpha f||^2`.
    pub value: f64,
}

/// Squared contributions `||d_*^alpha f||^2` for every `<alpha> <= m`.
pub fn anisotropic_norm_terms(history: &FieldHistory, m: usize) -> Result<Vec<NormTerm>> {
    if m > 4 {
        return Err(invalid("m", format!("anisotropic order must be at most 4, got {m}")));
    }
    let first = &history.levels[0];
    let grid = first.grid();
    let weight = AnisotropicWeight::tabulate(grid.column(), first.phase());
    let indices = TangentialMultiIndex::enumerate(m, grid.torus().axes(), true);
    let needed = indices.iter().map(|a| a.time as usize).max().unwrap_or(0) + 1;
    if history.levels.len() < needed {
        return Err(Error::InsufficientHistory { needed, got: history.levels.len() });
    }
    let dts: Vec<BulkField> = (0..needed).map(|k| history.time_derivative(k)).collect::<Result<_>>()?;
    Ok(indices
        .into_iter()
        .map(|index| {
            let g = star_derivative(&dts[index.time as usize], index, &weight);
            NormTerm { index, value: (&g * &g).integrate().max(0.0) }
        })
        .collect())
}

/// Space-time anisotropic norm `||f||_{m,*}` at the centre level of `history`.
pub fn anisotropic_norm(history: &FieldHistory, m: usize) -> Result<f64> {
    Ok(anisotropic_norm_terms(history, m)?.iter().map(|t| t.value).sum::<f64>().sqrt())
}

/// Spatial anisotropic norm `||f||_{H_*^m}` of a single snapshot.
pub fn star_norm(f: &BulkField, m: usize) -> Result<f64> {
    if m > 4 {
        return Err(invalid("m", format!("anisotropic order must be at most 4, got {m}")));
    }
    let weight = AnisotropicWeight::tabulate(f.grid().column(), f.phase());
    let sum: f64 = TangentialMultiIndex::enumerate(m, f.grid().torus().axes(), false)
        .into_iter()
        .map(|a| {
            let g = star_derivative(f, a, &weight);
            (&g * &g).integrate().max(0.0)
        })
        .sum();
    Ok(sum.sqrt())
}

/// Standard `||f||_{H^m}` over all mixed derivatives of order at most `m`.
pub fn sobolev_norm(f: &BulkField, m: usize) -> f64 {
    let axes = f.grid().torus().axes();
    let mut sum = 0.0;
    let mut frontier = vec![(f.clone(), 0usize)];
    // Walk derivative words in non-decreasing direction order so each mixed
    // derivative is visited once.
    for _ in 0..=m {
        let mut next = Vec::new();
        for (g, last) in &frontier {
            sum += (g * g).integrate().max(0.0);
            for dir in *last..=axes {
                let d = if dir == axes { g.d3() } else { g.dh(dir) };
                next.push((d, dir));
            }
        }
        frontier = next;
    }
    sum.sqrt()
}
