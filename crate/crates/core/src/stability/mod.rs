//! Pointwise stability conditions, the Friedrichs symmetrizer `mu` and related diagnostics.

mod sampling;
mod secondary;

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{BulkField, Phase, SlabGrid};

pub use sampling::{random_stable_3d, random_transverse_3d, random_violating_3d};
pub use secondary::{secondary_symmetrize_residual, MhdFields, SymmetrizationReport};

/// Interface traces of one phase at `n` points.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub rho: Vec<f64>,
    pub v: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    /// Sound speed; `f64::INFINITY` encodes the incompressible limit.
    pub cs: Vec<f64>,
}

impl PhaseTrace {
    pub fn uniform(n: usize, rho: f64, v: [f64; 2], b: [f64; 2], cs: f64) -> Self {
        Self { rho: vec![rho; n], v: vec![v; n], b: vec![b; n], cs: vec![cs; n] }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoPhaseTrace {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub upper: PhaseTrace,
    pub lower: PhaseTrace,
}

impl TwoPhaseTrace {
    pub fn new(dim: usize, points: Vec<[f64; 2]>, upper: PhaseTrace, lower: PhaseTrace) -> Result<Self> {
        let t = Self { dim, points, upper, lower };
        t.validate(0.0)?;
        Ok(t)
    }

    /// Single-point trace, handy for pointwise checks.
    pub fn single(dim: usize, upper: PhaseTrace, lower: PhaseTrace) -> Result<Self> {
        Self::new(dim, vec![[0.0, 0.0]], upper, lower)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn phase(&self, phase: Phase) -> &PhaseTrace {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }

    pub fn validate(&self, rho_floor: f64) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid("dim", format!("must be 2 or 3, got {}", self.dim)));
        }
        let n = self.points.len();
        for p in [&self.upper, &self.lower] {
            if p.rho.len() != n || p.v.len() != n || p.b.len() != n || p.cs.len() != n {
                return Err(Error::GridMismatch(format!("trace columns must all have {n} entries")));
            }
            if let Some(r) = p.rho.iter().find(|&&r| !(r > rho_floor)) {
                return Err(Error::Unphysical(format!("density {r} not above floor {rho_floor}")));
            }
            if let Some(c) = p.cs.iter().find(|&&c| !(c > 0.0)) {
                return Err(Error::Unphysical(format!("sound speed {c} must be positive")));
            }
        }
        Ok(())
    }

    pub fn jump_v(&self, i: usize) -> [f64; 2] {
        sub(self.upper.v[i], self.lower.v[i])
    }

    fn tangential(&self, v: [f64; 2]) -> [f64; 2] {
        if self.dim == 2 {
            [v[0], 0.0]
        } else {
            v
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Third component of the cross product of two in-plane vectors.
pub fn cross3(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedSet {
    pub alfven_upper: Vec<f64>,
    pub alfven_lower: Vec<f64>,
    pub a_upper: Vec<f64>,
    pub a_lower: Vec<f64>,
}

impl SpeedSet {
    pub fn a(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::Upper => &self.a_upper,
            Phase::Lower => &self.a_lower,
        }
    }
}

/// `c_A / c_s`, zero in the incompressible limit.
fn mach_ratio(ca: f64, cs: f64) -> f64 {
    if cs.is_infinite() {
        0.0
    } else {
        ca / cs
    }
}

pub fn speeds(trace: &TwoPhaseTrace) -> SpeedSet {
    let one = |p: &PhaseTrace, dim: usize| -> (Vec<f64>, Vec<f64>) {
        (0..p.len())
            .map(|i| {
                let b = if dim == 2 { [p.b[i][0], 0.0] } else { p.b[i] };
                let ca = norm(b) / p.rho[i].sqrt();
                let r = mach_ratio(ca, p.cs[i]);
                (ca, (p.rho[i] * (1.0 + r * r)).sqrt())
            })
            .unzip()
    };
    let (alfven_upper, a_upper) = one(&trace.upper, trace.dim);
    let (alfven_lower, a_lower) = one(&trace.lower, trace.dim);
    SpeedSet { alfven_upper, alfven_lower, a_upper, a_lower }
}

/// Admissible range check for the stability margin `delta0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MarginOptions {
    pub delta0: f64,
    /// Accept `delta0` in `(0, 1)` instead of the analytic range `(0, 1/8)`.
    #[serde(default)]
    pub allow_wide_delta0: bool,
}

impl MarginOptions {
    pub fn new(delta0: f64) -> Self {
        Self { delta0, allow_wide_delta0: false }
    }

    fn validate(&self) -> Result<()> {
        let hi = if self.allow_wide_delta0 { 1.0 } else { 0.125 };
        if !(self.delta0 > 0.0 && self.delta0 < hi) {
            return Err(invalid("delta0", format!("must lie in (0, {hi}), got {}", self.delta0)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub dim: usize,
    pub delta0: f64,
    /// Upper-bound clause: 3D `min (1 - d0)|b+ x b-| - a^pm |b^mp x [v]|`,
    /// 2D `min |b1+|/a+ + |b1-|/a- - (1 + d0)|[v1]|`.
    pub upper_margin: f64,
    /// Lower-bound clause: 3D `min a^pm |b^mp x [v]| - d0`, 2D `min |[v1]|`.
    pub lower_margin: f64,
    pub worst_point: usize,
    pub holds: bool,
    /// Per phase: whether `|v|^2 < c_s^2 c_A^2 / (c_A^2 + c_s^2)` everywhere.
    pub subsonic_upper: bool,
    pub subsonic_lower: bool,
}

fn subsonic(trace: &TwoPhaseTrace, speeds: &SpeedSet, phase: Phase) -> bool {
    let p = trace.phase(phase);
    let ca = match phase {
        Phase::Upper => &speeds.alfven_upper,
        Phase::Lower => &speeds.alfven_lower,
    };
    (0..p.len()).all(|i| {
        let v2 = norm(trace.tangential(p.v[i])).powi(2);
        let bound = if p.cs[i].is_infinite() {
            ca[i] * ca[i]
        } else {
            let cs2 = p.cs[i] * p.cs[i];
            cs2 * ca[i] * ca[i] / (ca[i] * ca[i] + cs2)
        };
        v2 < bound
    })
}

pub fn check_stability_3d(trace: &TwoPhaseTrace, opts: MarginOptions) -> Result<StabilityReport> {
    opts.validate()?;
    if trace.dim != 3 {
        return Err(invalid("dim", "three-dimensional check needs a 3D trace"));
    }
    let sp = speeds(trace);
    let d0 = opts.delta0;
    let (mut upper, mut lower, mut worst) = (f64::INFINITY, f64::INFINITY, 0);
    for i in 0..trace.len() {
        let (bp, bm) = (trace.upper.b[i], trace.lower.b[i]);
        let jv = trace.jump_v(i);
        let base = (1.0 - d0) * cross3(bp, bm).abs();
        let tp = sp.a_upper[i] * cross3(bm, jv).abs();
        let tm = sp.a_lower[i] * cross3(bp, jv).abs();
        let u = (base - tp).min(base - tm);
        let l = tp.min(tm) - d0;
        if u.min(l) < upper.min(lower) {
            worst = i;
        }
        upper = upper.min(u);
        lower = lower.min(l);
    }
    Ok(StabilityReport {
        dim: 3,
        delta0: d0,
        upper_margin: upper,
        lower_margin: lower,
        worst_point: worst,
        holds: upper >= 0.0 && lower >= 0.0,
        subsonic_upper: subsonic(trace, &sp, Phase::Upper),
        subsonic_lower: subsonic(trace, &sp, Phase::Lower),
    })
}

pub fn check_stability_2d(trace: &TwoPhaseTrace, opts: MarginOptions) -> Result<StabilityReport> {
    opts.validate()?;
    if trace.dim != 2 {
        return Err(invalid("dim", "two-dimensional check needs a 2D trace"));
    }
    let sp = speeds(trace);
    let d0 = opts.delta0;
    let (mut upper, mut lower, mut worst) = (f64::INFINITY, f64::INFINITY, 0);
    for i in 0..trace.len() {
        let j = trace.jump_v(i)[0].abs();
        let u = trace.upper.b[i][0].abs() / sp.a_upper[i] + trace.lower.b[i][0].abs() / sp.a_lower[i] - (1.0 + d0) * j;
        if u.min(j) < upper.min(lower) {
            worst = i;
        }
        upper = upper.min(u);
        lower = lower.min(j);
    }
    Ok(StabilityReport {
        dim: 2,
        delta0: d0,
        upper_margin: upper,
        lower_margin: lower,
        worst_point: worst,
        holds: upper > 0.0 && lower > 0.0,
        subsonic_upper: subsonic(trace, &sp, Phase::Upper),
        subsonic_lower: subsonic(trace, &sp, Phase::Lower),
    })
}

pub fn check_stability(trace: &TwoPhaseTrace, opts: MarginOptions) -> Result<StabilityReport> {
    if trace.dim == 3 {
        check_stability_3d(trace, opts)
    } else {
        check_stability_2d(trace, opts)
    }
}

/// Vertical localizer `eta(x3) = exp(1 - 1 / (1 - (x3/delta1)^2))`, zero for `|x3| >= delta1`.
pub fn localizer(x3: f64, delta1: f64) -> f64 {
    let s = x3 / delta1;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Interface values `mu^pm` and the localizer radius used to extend them into the bulk.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetrizerField {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub delta1: f64,
}

impl SymmetrizerField {
    pub fn zeros(n: usize) -> Self {
        Self { upper: vec![0.0; n], lower: vec![0.0; n], delta1: 1.0 }
    }

    pub fn interface(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }

    /// `mu(x', x3) = mu_bar(x') eta(x3)` on one phase of `grid`.
    pub fn extend(&self, grid: &SlabGrid, phase: Phase) -> Result<BulkField> {
        let mu = self.interface(phase);
        if mu.len() != grid.nh() {
            return Err(Error::GridMismatch(format!("mu has {} points, grid has {}", mu.len(), grid.nh())));
        }
        let col: Vec<f64> = (0..grid.nv()).map(|j| localizer(grid.column().x3(phase, j), self.delta1)).collect();
        let nh = grid.nh();
        let mut data = Vec::with_capacity(grid.len());
        for c in col {
            data.extend(mu.iter().map(|m| c * m));
        }
        debug_assert_eq!(data.len(), nh * grid.nv());
        BulkField::from_data(grid, phase, data)
    }

    /// Max over points of `|[v] - (mu+ b+ - mu- b-)|`.
    pub fn jump_residual(&self, trace: &TwoPhaseTrace) -> f64 {
        (0..trace.len())
            .map(|i| {
                let jv = trace.tangential(trace.jump_v(i));
                let bp = trace.tangential(trace.upper.b[i]);
                let bm = trace.tangential(trace.lower.b[i]);
                let r0 = jv[0] - (self.upper[i] * bp[0] - self.lower[i] * bm[0]);
                let r1 = jv[1] - (self.upper[i] * bp[1] - self.lower[i] * bm[1]);
                r0.hypot(r1)
            })
            .fold(0.0, f64::max)
    }
}

/// Solve `[v] = mu+ b+ - mu- b-` pointwise (3D).
pub fn solve_mu_3d(trace: &TwoPhaseTrace) -> Result<SymmetrizerField> {
    if trace.dim != 3 {
        return Err(invalid("dim", "needs a 3D trace"));
    }
    let n = trace.len();
    let mut out = SymmetrizerField::zeros(n);
    for i in 0..n {
        let (bp, bm) = (trace.upper.b[i], trace.lower.b[i]);
        let det = cross3(bm, bp);
        if det.abs() < 1e-10 * norm(bp) * norm(bm) || det == 0.0 {
            return Err(Error::NonTransverse(format!("b+ and b- are collinear at point {i} (det {det:.3e})")));
        }
        let jv = trace.jump_v(i);
        // columns (b+, -b-) ; Cramer's rule
        let m = Matrix2::new(bp[0], -bm[0], bp[1], -bm[1]);
        let sol = m.lu().solve(&nalgebra::Vector2::new(jv[0], jv[1])).ok_or(Error::DegenerateSheet(det))?;
        out.upper[i] = sol[0];
        out.lower[i] = sol[1];
    }
    Ok(out)
}

/// Which orientation of the denominator makes the closed-form quotient agree with the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QuotientOrientation {
    /// `mu^pm = (b^mp x [v])_3 / (b- x b+)_3`
    MinusCrossPlus,
    /// `mu^pm = (b^mp x [v])_3 / (b+ x b-)_3`
    PlusCrossMinus,
    Neither,
}

pub fn quotient_orientation(trace: &TwoPhaseTrace, mu: &SymmetrizerField) -> QuotientOrientation {
    let mut ok = [true, true];
    for i in 0..trace.len() {
        let (bp, bm) = (trace.upper.b[i], trace.lower.b[i]);
        let jv = trace.jump_v(i);
        let num = [cross3(bm, jv), cross3(bp, jv)];
        for (o, den) in [cross3(bm, bp), cross3(bp, bm)].into_iter().enumerate() {
            let q = [num[0] / den, num[1] / den];
            let tol = 1e-9 * (1.0 + q[0].abs() + q[1].abs());
            if (q[0] - mu.upper[i]).abs() > tol || (q[1] - mu.lower[i]).abs() > tol {
                ok[o] = false;
            }
        }
    }
    match ok {
        [true, _] => QuotientOrientation::MinusCrossPlus,
        [false, true] => QuotientOrientation::PlusCrossMinus,
        _ => QuotientOrientation::Neither,
    }
}

/// 2D symmetrizer `mu^pm = pm sgn(b1^pm) a^mp [v1] / (a- |b1+| + a+ |b1-|)`.
pub fn solve_mu_2d(trace: &TwoPhaseTrace) -> Result<SymmetrizerField> {
    if trace.dim != 2 {
        return Err(invalid("dim", "needs a 2D trace"));
    }
    let sp = speeds(trace);
    let n = trace.len();
    let mut out = SymmetrizerField::zeros(n);
    for i in 0..n {
        let (bp, bm) = (trace.upper.b[i][0], trace.lower.b[i][0]);
        let (ap, am) = (sp.a_upper[i], sp.a_lower[i]);
        let jv = trace.jump_v(i)[0];
        if jv.abs() >= bp.abs() / ap + bm.abs() / am {
            return Err(Error::Unphysical(format!(
                "stability violated at point {i}: |[v1]| = {:.4} >= {:.4}",
                jv.abs(),
                bp.abs() / ap + bm.abs() / am
            )));
        }
        let den = am * bp.abs() + ap * bm.abs();
        if jv == 0.0 {
            continue;
        }
        out.upper[i] = bp.signum() * am * jv / den;
        out.lower[i] = -bm.signum() * ap * jv / den;
        if bp == 0.0 {
            out.upper[i] = 0.0;
        }
        if bm == 0.0 {
            out.lower[i] = 0.0;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    pub min_eigenvalue_upper: f64,
    pub min_eigenvalue_lower: f64,
    /// Max of `mu^2 rho (1 + (c_A/c_s)^2) = (mu a)^2` over both phases.
    pub max_mu_a_sq: f64,
    pub hyperbolic: bool,
}

/// Symmetric matrix with unit diagonal whose positivity is the hyperbolicity condition.
pub fn hyperbolicity_matrix(mu: f64, rho: f64, ca: f64, cs: f64) -> Matrix3<f64> {
    let x = -mu.abs() * rho.sqrt();
    let y = x * mach_ratio(ca, cs);
    Matrix3::new(1.0, x, y, x, 1.0, 0.0, y, 0.0, 1.0)
}

pub fn min_eigenvalue(m: Matrix3<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

pub fn hyperbolicity_check(trace: &TwoPhaseTrace, mu: &SymmetrizerField) -> HyperbolicityReport {
    let sp = speeds(trace);
    let mut mins = [f64::INFINITY; 2];
    let mut max_mu_a_sq: f64 = 0.0;
    for (slot, phase) in Phase::BOTH.into_iter().enumerate() {
        let p = trace.phase(phase);
        let ca = match phase {
            Phase::Upper => &sp.alfven_upper,
            Phase::Lower => &sp.alfven_lower,
        };
        for i in 0..trace.len() {
            let m = mu.interface(phase)[i];
            let e = min_eigenvalue(hyperbolicity_matrix(m, p.rho[i], ca[i], p.cs[i]));
            mins[slot] = mins[slot].min(e);
            max_mu_a_sq = max_mu_a_sq.max((m * sp.a(phase)[i]).powi(2));
        }
    }
    HyperbolicityReport {
        min_eigenvalue_upper: mins[0],
        min_eigenvalue_lower: mins[1],
        max_mu_a_sq,
        hyperbolic: mins[0] > 0.0 && mins[1] > 0.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    /// Infimum over points and unit directions, from the closed-form eigen-solve.
    pub infimum: f64,
    /// Same infimum from the angular sweep (3D) or the single direction (2D).
    pub sweep_infimum: f64,
    pub worst_point: usize,
    /// Minimizing unit direction at the worst point.
    pub direction: [f64; 2],
}

/// Quadratic form `z -> rho+(b+.z)^2 + rho-(b-.z)^2 - (rho+ + rho-)(u.z)^2` in rescaled variables.
pub fn ellipticity_matrix(trace: &TwoPhaseTrace, i: usize) -> Matrix2<f64> {
    let t = |v: [f64; 2]| trace.tangential(v);
    let (rp, rm) = (trace.upper.rho[i], trace.lower.rho[i]);
    let (bp, bm) = (t(trace.upper.b[i]), t(trace.lower.b[i]));
    let jv = t(trace.jump_v(i));
    let s = (rp * rm).sqrt() / (rp + rm);
    let u = [s * jv[0], s * jv[1]];
    let outer = |a: [f64; 2], w: f64| Matrix2::new(a[0] * a[0], a[0] * a[1], a[1] * a[0], a[1] * a[1]) * w;
    // rho (b / sqrt(rho))(b / sqrt(rho))^T = b b^T
    outer(bp, 1.0) + outer(bm, 1.0) - outer(u, rp + rm)
}

pub fn ellipticity_form(trace: &TwoPhaseTrace, angles: usize) -> EllipticityReport {
    let mut rep = EllipticityReport {
        infimum: f64::INFINITY,
        sweep_infimum: f64::INFINITY,
        worst_point: 0,
        direction: [1.0, 0.0],
    };
    for i in 0..trace.len() {
        let m = ellipticity_matrix(trace, i);
        let (lam, z) = if trace.dim == 2 {
            (m[(0, 0)], [1.0, 0.0])
        } else {
            let eig = SymmetricEigen::new(m);
            let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
            let v = eig.eigenvectors.column(k);
            (eig.eigenvalues[k], [v[0], v[1]])
        };
        let sweep = if trace.dim == 2 {
            m[(0, 0)]
        } else {
            (0..angles.max(1))
                .map(|a| {
                    let th = std::f64::consts::PI * a as f64 / angles.max(1) as f64;
                    let (s, c) = th.sin_cos();
                    m[(0, 0)] * c * c + 2.0 * m[(0, 1)] * c * s + m[(1, 1)] * s * s
                })
                .fold(f64::INFINITY, f64::min)
        };
        if lam < rep.infimum {
            rep.infimum = lam;
            rep.worst_point = i;
            rep.direction = z;
        }
        rep.sweep_infimum = rep.sweep_infimum.min(sweep);
    }
    rep
}

/// Solve `b^pm . grad psi = b3^pm` for the interface gradient.
pub fn recover_interface_gradient(
    b_upper: &[[f64; 2]],
    b_lower: &[[f64; 2]],
    b3_upper: &[f64],
    b3_lower: &[f64],
) -> Result<Vec<[f64; 2]>> {
    let n = b_upper.len();
    if b_lower.len() != n || b3_upper.len() != n || b3_lower.len() != n {
        return Err(Error::GridMismatch("trace arrays differ in length".into()));
    }
    (0..n)
        .map(|i| {
            let (bp, bm) = (b_upper[i], b_lower[i]);
            let det = cross3(bp, bm);
            if det.abs() < 1e-10 * norm(bp) * norm(bm) || det == 0.0 {
                return Err(Error::NonTransverse(format!("b+ and b- are collinear at point {i}")));
            }
            Ok([
                (b3_upper[i] * bm[1] - b3_lower[i] * bp[1]) / det,
                (bp[0] * b3_lower[i] - bm[0] * b3_upper[i]) / det,
            ])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace3(bp: [f64; 2], bm: [f64; 2], jump: [f64; 2]) -> TwoPhaseTrace {
        let inf = f64::INFINITY;
        TwoPhaseTrace::single(
            3,
            PhaseTrace::uniform(1, 1.0, [0.5 * jump[0], 0.5 * jump[1]], bp, inf),
            PhaseTrace::uniform(1, 1.0, [-0.5 * jump[0], -0.5 * jump[1]], bm, inf),
        )
        .unwrap()
    }

    fn trace2(bp: f64, bm: f64, jump: f64, rho: f64) -> TwoPhaseTrace {
        let inf = f64::INFINITY;
        TwoPhaseTrace::single(
            2,
            PhaseTrace::uniform(1, rho, [jump, 0.0], [bp, 0.0], inf),
            PhaseTrace::uniform(1, rho, [0.0, 0.0], [bm, 0.0], inf),
        )
        .unwrap()
    }

    #[test]
    fn speeds_closed_form() {
        let t = TwoPhaseTrace::single(
            3,
            PhaseTrace::uniform(1, 1.0, [0.0; 2], [1.0, 0.0], 1.0),
            PhaseTrace::uniform(1, 4.0, [0.0; 2], [0.0, 0.0], 1.0),
        )
        .unwrap();
        let s = speeds(&t);
        assert!((s.alfven_upper[0] - 1.0).abs() < 1e-15);
        assert!((s.a_upper[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.alfven_lower[0], 0.0);
        assert!((s.a_lower[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn margin_3d_orthogonal_fields() {
        let t = trace3([1.0, 0.0], [0.0, 1.0], [0.1, 0.1]);
        let r = check_stability_3d(&t, MarginOptions::new(0.1)).unwrap();
        assert!(r.lower_margin.abs() < 1e-15);
        assert!((r.upper_margin - 0.8).abs() < 1e-15);
        assert!(check_stability_3d(&t, MarginOptions::new(0.09)).unwrap().holds);
        // jump parallel to b+ leaves b+ x [v] = 0, so the lower clause fails
        let r = check_stability_3d(&trace3([1.0, 0.0], [0.0, 1.0], [0.1, 0.0]), MarginOptions::new(0.1)).unwrap();
        assert!(!r.holds && (r.lower_margin + 0.1).abs() < 1e-15);
        let r = check_stability_3d(&trace3([1.0, 0.0], [0.0, 1.0], [0.0, 0.0]), MarginOptions::new(0.1)).unwrap();
        assert!(!r.holds);
        let r = check_stability_3d(&trace3([1.0, 0.0], [2.0, 0.0], [0.0, 0.3]), MarginOptions::new(0.1)).unwrap();
        assert!(!r.holds);
        assert!(check_stability_3d(&t, MarginOptions::new(0.2)).is_err());
        assert!(check_stability_3d(&t, MarginOptions { delta0: 0.2, allow_wide_delta0: true }).is_ok());
    }

    #[test]
    fn margin_2d() {
        let r = check_stability_2d(&trace2(1.0, 1.0, 1.0, 1.0), MarginOptions::new(0.1)).unwrap();
        assert!((r.upper_margin - 0.9).abs() < 1e-14);
        assert!(r.holds);
        let r = check_stability_2d(&trace2(1.0, 1.0, 0.0, 1.0), MarginOptions::new(0.1)).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn mu_3d_examples() {
        let (a, b) = (0.3, -0.7);
        let t = trace3([1.0, 0.0], [0.0, 1.0], [a, b]);
        let mu = solve_mu_3d(&t).unwrap();
        assert!((mu.upper[0] - a).abs() < 1e-15 && (mu.lower[0] + b).abs() < 1e-15);
        assert_eq!(quotient_orientation(&t, &mu), QuotientOrientation::MinusCrossPlus);
        assert!(solve_mu_3d(&trace3([1.0, 0.0], [2.0, 0.0], [0.1, 0.0])).is_err());
    }

    #[test]
    fn mu_2d_cases() {
        let t = trace2(1.0, 0.0, 0.5, 1.0);
        let mu = solve_mu_2d(&t).unwrap();
        assert!((mu.upper[0] - 0.5).abs() < 1e-15 && mu.lower[0] == 0.0);
        let t = trace2(1.0, -1.0, 0.8, 1.0);
        let mu = solve_mu_2d(&t).unwrap();
        assert!(mu.jump_residual(&t) < 1e-15);
        assert!(mu.upper[0].abs() < 1.0 && mu.lower[0].abs() < 1.0);
        assert!(solve_mu_2d(&trace2(0.5, 0.4, 1.0, 1.0)).is_err());
    }

    #[test]
    fn hyperbolicity_boundary() {
        // mu a = 1 exactly
        let m = hyperbolicity_matrix(0.5, 2.0, 1.0, 1.0);
        assert!(min_eigenvalue(m).abs() < 1e-14);
        assert!((m.determinant()).abs() < 1e-14);
        assert!((min_eigenvalue(hyperbolicity_matrix(0.0, 3.0, 1.0, 2.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ellipticity_sweep_agrees_with_eigen() {
        let t = trace3([1.0, 0.2], [-0.3, 1.0], [0.4, 0.3]);
        let r = ellipticity_form(&t, 3600);
        assert!((r.infimum - r.sweep_infimum).abs() < 1e-5);
        let t = trace3([0.05, 1.0], [-0.05, 1.0], [3.0, 0.0]);
        let r = ellipticity_form(&t, 3600);
        assert!(r.infimum < 0.0);
        assert!(r.direction[0].abs() > 0.99);
    }

    #[test]
    fn gradient_recovery() {
        let g = [0.3, -0.2];
        let bp = [[1.0, 0.0]];
        let bm = [[0.0, 1.0]];
        let out = recover_interface_gradient(&bp, &bm, &[g[0]], &[g[1]]).unwrap();
        assert!((out[0][0] - g[0]).abs() < 1e-15 && (out[0][1] - g[1]).abs() < 1e-15);
        assert!(recover_interface_gradient(&bp, &bp, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn localizer_shape() {
        assert_eq!(localizer(0.0, 1.0), 1.0);
        assert_eq!(localizer(1.0, 1.0), 0.0);
        assert!(localizer(0.5, 1.0) > 0.0 && localizer(0.5, 1.0) < 1.0);
    }
}
