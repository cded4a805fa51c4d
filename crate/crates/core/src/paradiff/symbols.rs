use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_dual::{Dual64, DualNum, HyperDual64};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Phase, SpectralField, Torus};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Where a symbol is evaluated: the interface slope `g = grad psi`, its Hessian, and the frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymbolPoint {
    pub x: [f64; 2],
    pub g: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub xi: [f64; 2],
}

impl SymbolPoint {
    pub fn new(x: [f64; 2], g: [f64; 2], hess: [[f64; 2]; 2], xi: [f64; 2]) -> Result<Self> {
        if xi[0] == 0.0 && xi[1] == 0.0 {
            return Err(Error::SingularFrequency);
        }
        Ok(Self { x, g, hess, xi })
    }

    /// Jet of `psi` at an arbitrary point, by direct Fourier summation.
    pub fn at(psi: &SpectralField, x: [f64; 2], xi: [f64; 2]) -> Result<Self> {
        let (_, g, hess) = psi.jet_at(x);
        Self::new(x, g, hess, xi)
    }

    pub fn flat(xi: [f64; 2]) -> Result<Self> {
        Self::new([0.0; 2], [0.0; 2], [[0.0; 2]; 2], xi)
    }

    pub fn with_xi(&self, xi: [f64; 2]) -> Self {
        Self { xi, ..*self }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }
}

/// Slope and Hessian of `psi` at every grid point, from spectral derivatives.
#[derive(Clone, Debug)]
pub struct GridJets {
    torus: Torus,
    g: Vec<[f64; 2]>,
    hess: Vec<[[f64; 2]; 2]>,
}

impl GridJets {
    pub fn from_psi(psi: &SpectralField) -> Self {
        let torus = psi.torus().clone();
        let axes = torus.axes();
        let grad = psi.gradient();
        let second: Vec<Vec<SpectralField>> = grad.iter().map(|d| d.gradient()).collect();
        let g = (0..torus.len())
            .map(|h| {
                let mut v = [0.0; 2];
                for a in 0..axes {
                    v[a] = grad[a].values()[h];
                }
                v
            })
            .collect();
        let hess = (0..torus.len())
            .map(|h| {
                let mut m = [[0.0; 2]; 2];
                for a in 0..axes {
                    for b in 0..axes {
                        m[a][b] = second[a][b].values()[h];
                    }
                }
                m
            })
            .collect();
        Self { torus, g, hess }
    }

    pub fn flat(torus: &Torus) -> Self {
        Self { torus: torus.clone(), g: vec![[0.0; 2]; torus.len()], hess: vec![[[0.0; 2]; 2]; torus.len()] }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    /// True when slope and Hessian are the same at every node, so symbols do not depend on `x`.
    pub fn is_uniform(&self) -> bool {
        let (g0, h0) = (self.g[0], self.hess[0]);
        self.g.iter().all(|g| *g == g0) && self.hess.iter().all(|h| *h == h0)
    }

    /// Point at grid index `h`; `xi` must be nonzero (callers only sample retained frequencies).
    pub fn point(&self, h: usize, xi: [f64; 2]) -> SymbolPoint {
        SymbolPoint { x: self.torus.point(h), g: self.g[h], hess: self.hess[h], xi }
    }
}

/// Closed-form building blocks, generic so that dual numbers carry derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Base {
    Lambda1,
    AlphaRe,
    AlphaIm,
    Curvature,
    SymmM,
    SymmN,
    Regularity(f64),
    CurvatureRoot,
    AbsXi(f64),
}

fn base<D: DualNum<f64> + Copy>(b: Base, g: [D; 2], xi: [D; 2]) -> D {
    let one = D::from(1.0);
    let big_g = one + g[0] * g[0] + g[1] * g[1];
    let gx = g[0] * xi[0] + g[1] * xi[1];
    let x2 = xi[0] * xi[0] + xi[1] * xi[1];
    let lam = || (big_g * x2 - gx * gx).sqrt();
    let curv = || (x2 - gx * gx / big_g) / big_g.sqrt();
    let m15 = || (curv() * lam() * 2.0).sqrt();
    match b {
        Base::Lambda1 => lam(),
        Base::AlphaRe => lam() / big_g,
        Base::AlphaIm => gx / big_g,
        Base::Curvature => curv(),
        Base::SymmM => m15(),
        Base::SymmN => big_g.powf(-0.25) * 2f64.powf(-1.0 / 3.0),
        Base::Regularity(p) => m15().powf(p),
        Base::CurvatureRoot => big_g.powf(-0.75) * 0.5,
        Base::AbsXi(p) => x2.powf(0.5 * p),
    }
}

fn lift<D: DualNum<f64> + Copy>(v: [f64; 2]) -> [D; 2] {
    [D::from(v[0]), D::from(v[1])]
}

fn value(b: Base, p: &SymbolPoint) -> f64 {
    base::<f64>(b, p.g, p.xi)
}

fn d_xi(b: Base, p: &SymbolPoint) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (j, o) in out.iter_mut().enumerate() {
        let mut xi: [Dual64; 2] = lift(p.xi);
        xi[j] = Dual64::new(p.xi[j], 1.0);
        *o = base(b, lift(p.g), xi).eps;
    }
    out
}

/// `g` perturbed along column `j` of the Hessian: dual parts give `d/dx_j`.
fn slope_along(p: &SymbolPoint, j: usize) -> [Dual64; 2] {
    [Dual64::new(p.g[0], p.hess[0][j]), Dual64::new(p.g[1], p.hess[1][j])]
}

fn d_x(b: Base, p: &SymbolPoint) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (j, o) in out.iter_mut().enumerate() {
        *o = base(b, slope_along(p, j), lift(p.xi)).eps;
    }
    out
}

/// `(d_xi . d_x) a = sum_j d_xi_j d_x_j a`.
fn mixed(b: Base, p: &SymbolPoint) -> f64 {
    (0..2)
        .map(|j| {
            let g = [
                HyperDual64::new(p.g[0], p.hess[0][j], 0.0, 0.0),
                HyperDual64::new(p.g[1], p.hess[1][j], 0.0, 0.0),
            ];
            let mut xi: [HyperDual64; 2] = lift(p.xi);
            xi[j] = HyperDual64::new(p.xi[j], 0.0, 1.0, 0.0);
            base(b, g, xi).eps1eps2
        })
        .sum()
}

fn real2(v: [f64; 2]) -> [Complex64; 2] {
    [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)]
}

/// Two-term symbol `a^(m) + a^(m-1)` in the class used by the paradifferential calculus.
pub trait Symbol: Send + Sync {
    fn order(&self) -> f64;
    fn name(&self) -> String;
    fn principal(&self, p: &SymbolPoint) -> Complex64;
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64;
    fn principal_dxi(&self, p: &SymbolPoint) -> [Complex64; 2];
    fn principal_dx(&self, p: &SymbolPoint) -> [Complex64; 2];

    fn x_independent(&self) -> bool {
        false
    }

    fn eval(&self, p: &SymbolPoint) -> Complex64 {
        self.principal(p) + self.subprincipal(p)
    }
}

macro_rules! base_principal {
    ($base:expr) => {
        fn principal(&self, p: &SymbolPoint) -> Complex64 {
            Complex64::new(value($base(self), p), 0.0)
        }
        fn principal_dxi(&self, p: &SymbolPoint) -> [Complex64; 2] {
            real2(d_xi($base(self), p))
        }
        fn principal_dx(&self, p: &SymbolPoint) -> [Complex64; 2] {
            real2(d_x($base(self), p))
        }
    };
}

/// Interface DtN symbol of one phase: `Lambda^(1) + Lambda^(0),+-`.
#[derive(Clone, Copy, Debug)]
pub struct DtnSymbol {
    pub phase: Phase,
}

/// `Lambda^(0),-`: `G/(2L) (div(alpha grad psi) + i d_xi L . grad_x alpha)`.
pub fn dtn_zeroth_lower(p: &SymbolPoint) -> Complex64 {
    let big_g = 1.0 + p.g[0] * p.g[0] + p.g[1] * p.g[1];
    let lam = value(Base::Lambda1, p);
    let dl = d_xi(Base::Lambda1, p);
    let (mut re, mut im) = (0.0, 0.0);
    for j in 0..2 {
        let g = slope_along(p, j);
        let xi = lift(p.xi);
        let ar = base(Base::AlphaRe, g, xi);
        let ai = base(Base::AlphaIm, g, xi);
        re += (ar * g[j]).eps - dl[j] * ai.eps;
        im += (ai * g[j]).eps + dl[j] * ar.eps;
    }
    Complex64::new(re, im) * (big_g / (2.0 * lam))
}

impl Symbol for DtnSymbol {
    fn order(&self) -> f64 {
        1.0
    }
    fn name(&self) -> String {
        format!("dtn_{}", if self.phase == Phase::Upper { "upper" } else { "lower" })
    }
    base_principal!(|_: &Self| Base::Lambda1);
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64 {
        let lower = dtn_zeroth_lower(p);
        match self.phase {
            Phase::Lower => lower,
            Phase::Upper => -lower.conj(),
        }
    }
}

/// Sum of both phase symbols: `2 Lambda^(1) + 2i Im Lambda^(0),-`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SummedDtnSymbol;

impl Symbol for SummedDtnSymbol {
    fn order(&self) -> f64 {
        1.0
    }
    fn name(&self) -> String {
        "dtn_sum".into()
    }
    fn principal(&self, p: &SymbolPoint) -> Complex64 {
        Complex64::new(2.0 * value(Base::Lambda1, p), 0.0)
    }
    fn principal_dxi(&self, p: &SymbolPoint) -> [Complex64; 2] {
        let d = d_xi(Base::Lambda1, p);
        real2([2.0 * d[0], 2.0 * d[1]])
    }
    fn principal_dx(&self, p: &SymbolPoint) -> [Complex64; 2] {
        let d = d_x(Base::Lambda1, p);
        real2([2.0 * d[0], 2.0 * d[1]])
    }
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64 {
        I * (2.0 * dtn_zeroth_lower(p).im)
    }
}

/// Linearized mean curvature: `h^(2) + h^(1)`, `h^(1) = -(i/2)(d_x . d_xi) h^(2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CurvatureSymbol;

impl Symbol for CurvatureSymbol {
    fn order(&self) -> f64 {
        2.0
    }
    fn name(&self) -> String {
        "curvature".into()
    }
    base_principal!(|_: &Self| Base::Curvature);
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64 {
        -0.5 * I * mixed(Base::Curvature, p)
    }
}

/// `m = sqrt(h^(2) Lambda) + (1/2i)(d_xi . d_x) sqrt(h^(2) Lambda)`, order 3/2.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymmetrizerM;

impl Symbol for SymmetrizerM {
    fn order(&self) -> f64 {
        1.5
    }
    fn name(&self) -> String {
        "symmetrizer_m".into()
    }
    base_principal!(|_: &Self| Base::SymmM);
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64 {
        -0.5 * I * mixed(Base::SymmM, p)
    }
}

/// `n = 2^(-1/3) |N|^(-1/2)`, order 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymmetrizerN;

impl Symbol for SymmetrizerN {
    fn order(&self) -> f64 {
        0.0
    }
    fn name(&self) -> String {
        "symmetrizer_n".into()
    }
    base_principal!(|_: &Self| Base::SymmN);
    fn subprincipal(&self, _: &SymbolPoint) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// `M = (m^(1.5))^((2s-1)/3)`, order `s - 1/2`; principal part only.
#[derive(Clone, Copy, Debug)]
pub struct RegularitySymbol {
    pub s: f64,
}

impl RegularitySymbol {
    fn exponent(&self) -> f64 {
        (2.0 * self.s - 1.0) / 3.0
    }
}

impl Symbol for RegularitySymbol {
    fn order(&self) -> f64 {
        self.s - 0.5
    }
    fn name(&self) -> String {
        format!("regularity_s{}", self.s)
    }
    base_principal!(|s: &Self| Base::Regularity(s.exponent()));
    fn subprincipal(&self, _: &SymbolPoint) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// `c = (1/2)(1 + |grad psi|^2)^(-3/4)`, with `h^(2) = (c * 2 Lambda^(1))^2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CurvatureRoot;

impl Symbol for CurvatureRoot {
    fn order(&self) -> f64 {
        0.0
    }
    fn name(&self) -> String {
        "curvature_root".into()
    }
    base_principal!(|_: &Self| Base::CurvatureRoot);
    fn subprincipal(&self, _: &SymbolPoint) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// `|xi|^power`, an x-independent Fourier multiplier.
#[derive(Clone, Copy, Debug)]
pub struct AbsXi {
    pub power: f64,
}

impl Symbol for AbsXi {
    fn order(&self) -> f64 {
        self.power
    }
    fn name(&self) -> String {
        format!("abs_xi^{}", self.power)
    }
    base_principal!(|s: &Self| Base::AbsXi(s.power));
    fn subprincipal(&self, _: &SymbolPoint) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn x_independent(&self) -> bool {
        true
    }
}

/// Two-term composition `a # b`.
#[derive(Clone)]
pub struct Composite {
    a: Arc<dyn Symbol>,
    b: Arc<dyn Symbol>,
}

pub fn compose(a: Arc<dyn Symbol>, b: Arc<dyn Symbol>) -> Arc<dyn Symbol> {
    Arc::new(Composite { a, b })
}

impl Symbol for Composite {
    fn order(&self) -> f64 {
        self.a.order() + self.b.order()
    }
    fn name(&self) -> String {
        format!("({} # {})", self.a.name(), self.b.name())
    }
    fn principal(&self, p: &SymbolPoint) -> Complex64 {
        self.a.principal(p) * self.b.principal(p)
    }
    fn subprincipal(&self, p: &SymbolPoint) -> Complex64 {
        let (ap, bp) = (self.a.principal(p), self.b.principal(p));
        let da = self.a.principal_dxi(p);
        let db = self.b.principal_dx(p);
        self.a.subprincipal(p) * bp + ap * self.b.subprincipal(p) - I * (da[0] * db[0] + da[1] * db[1])
    }
    fn principal_dxi(&self, p: &SymbolPoint) -> [Complex64; 2] {
        let (ap, bp) = (self.a.principal(p), self.b.principal(p));
        let (da, db) = (self.a.principal_dxi(p), self.b.principal_dxi(p));
        [da[0] * bp + ap * db[0], da[1] * bp + ap * db[1]]
    }
    fn principal_dx(&self, p: &SymbolPoint) -> [Complex64; 2] {
        let (ap, bp) = (self.a.principal(p), self.b.principal(p));
        let (da, db) = (self.a.principal_dx(p), self.b.principal_dx(p));
        [da[0] * bp + ap * db[0], da[1] * bp + ap * db[1]]
    }
    fn x_independent(&self) -> bool {
        self.a.x_independent() && self.b.x_independent()
    }
}

/// One row of an exported symbol table.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolSample {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub principal: [f64; 2],
    pub subprincipal: [f64; 2],
}

/// Samples `symbol` on the grid points of `psi` for unit directions at angles `k * pi / directions`.
pub fn sample_table(symbol: &dyn Symbol, psi: &SpectralField, radius: f64, directions: usize) -> Result<Vec<SymbolSample>> {
    if radius <= 0.0 || directions == 0 {
        return Err(Error::SingularFrequency);
    }
    let jets = GridJets::from_psi(psi);
    let axes = psi.torus().axes();
    let dirs: Vec<[f64; 2]> = if axes == 1 {
        vec![[radius, 0.0], [-radius, 0.0]]
    } else {
        (0..directions)
            .map(|k| {
                let t = k as f64 * PI / directions as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect()
    };
    let mut out = Vec::with_capacity(psi.torus().len() * dirs.len());
    for h in 0..psi.torus().len() {
        for &xi in &dirs {
            let p = jets.point(h, xi);
            let (a, b) = (symbol.principal(&p), symbol.subprincipal(&p));
            out.push(SymbolSample { x: p.x, xi, principal: [a.re, a.im], subprincipal: [b.re, b.im] });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Mode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> SymbolPoint {
        let g = [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
        let h01 = rng.gen_range(-1.0..1.0);
        let hess = [[rng.gen_range(-1.0..1.0), h01], [h01, rng.gen_range(-1.0..1.0)]];
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        let r: f64 = rng.gen_range(0.5..6.0);
        SymbolPoint::new([0.0; 2], g, hess, [r * t.cos(), r * t.sin()]).unwrap()
    }

    #[test]
    fn flat_values() {
        let p = SymbolPoint::flat([3.0, 4.0]).unwrap();
        assert!((DtnSymbol { phase: Phase::Lower }.principal(&p).re - 5.0).abs() < 1e-14);
        assert_eq!(DtnSymbol { phase: Phase::Upper }.subprincipal(&p), Complex64::new(0.0, 0.0));
        assert!((CurvatureSymbol.principal(&p).re - 25.0).abs() < 1e-12);
        assert!((SymmetrizerM.principal(&p).re - 2f64.sqrt() * 5f64.powf(1.5)).abs() < 1e-12);
        assert!(SymmetrizerM.subprincipal(&p).norm() < 1e-15);
        assert!((SymmetrizerN.principal(&p).re - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn aligned_slope_cancels_in_principal_dtn() {
        let torus = Torus::new(2, 32).unwrap();
        let psi = SpectralField::from_modes(&torus, &[Mode::sin(0.1, [1, 0])]).unwrap();
        for x in [0.0, 0.7, 2.0] {
            let p = SymbolPoint::at(&psi, [x, 0.0], [1.0, 0.0]).unwrap();
            assert!((DtnSymbol { phase: Phase::Lower }.principal(&p).re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zeroth_order_dtn_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_point(&mut rng);
            let lower = DtnSymbol { phase: Phase::Lower }.subprincipal(&p);
            let upper = DtnSymbol { phase: Phase::Upper }.subprincipal(&p);
            assert!((lower + upper.conj()).norm() < 1e-13);
            // imaginary part is minus half the mixed derivative of the principal symbol
            let expect = -0.5 * mixed(Base::Lambda1, &p);
            assert!((lower.im - expect).abs() < 1e-10 * (1.0 + expect.abs()), "{} vs {}", lower.im, expect);
        }
    }

    #[test]
    fn homogeneity_and_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let syms: Vec<Box<dyn Symbol>> = vec![
            Box::new(DtnSymbol { phase: Phase::Lower }),
            Box::new(CurvatureSymbol),
            Box::new(SymmetrizerM),
            Box::new(SymmetrizerN),
            Box::new(RegularitySymbol { s: 4.0 }),
        ];
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let q = p.with_xi([2.0 * p.xi[0], 2.0 * p.xi[1]]);
            for s in &syms {
                let ratio = s.principal(&q).re / s.principal(&p).re;
                assert!((ratio - 2f64.powf(s.order())).abs() < 1e-12, "{}", s.name());
                let sub_ratio = s.subprincipal(&q).norm() / s.subprincipal(&p).norm().max(1e-300);
                if s.subprincipal(&p).norm() > 1e-12 {
                    assert!((sub_ratio - 2f64.powf(s.order() - 1.0)).abs() < 1e-9, "{}", s.name());
                }
            }
            let c = CurvatureRoot.principal(&p).re;
            let lam = SummedDtnSymbol.principal(&p).re;
            let h2 = CurvatureSymbol.principal(&p).re;
            assert!((h2 - (c * lam).powi(2)).abs() < 1e-12 * h2.max(1.0));
            assert!(SymmetrizerM.subprincipal(&p).re.abs() < 1e-15);
        }
    }

    #[test]
    fn regularity_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_point(&mut rng);
            let big_g = 1.0 + p.g[0] * p.g[0] + p.g[1] * p.g[1];
            let xn = p.xi_norm();
            let q = (p.g[0] * p.xi[0] + p.g[1] * p.xi[1]).powi(2) / (big_g * xn * xn);
            let expect = 2f64.powf(7.0 / 6.0) * xn.powf(3.5) * (1.0 - q).powf(1.75);
            let got = RegularitySymbol { s: 4.0 }.principal(&p).re;
            assert!((got - expect).abs() < 1e-11 * expect);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_point(&mut rng);
        let h = 1e-6;
        for b in [Base::Lambda1, Base::Curvature, Base::SymmM] {
            let d = d_xi(b, &p);
            for j in 0..2 {
                let mut xp = p.xi;
                let mut xm = p.xi;
                xp[j] += h;
                xm[j] -= h;
                let fd = (value(b, &p.with_xi(xp)) - value(b, &p.with_xi(xm))) / (2.0 * h);
                assert!((fd - d[j]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn composition_of_multipliers_is_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ab = compose(Arc::new(AbsXi { power: 1.0 }), Arc::new(AbsXi { power: 2.0 }));
        assert!(ab.x_independent());
        let p = random_point(&mut rng);
        assert!((ab.principal(&p).re - p.xi_norm().powi(3)).abs() < 1e-11);
        assert!(ab.subprincipal(&p).norm() < 1e-12);
        // x-dependent order 0 followed by |xi|: derivative term vanishes since |xi| has no x-dependence
        let nb = compose(Arc::new(SymmetrizerN), Arc::new(AbsXi { power: 1.0 }));
        assert!(nb.subprincipal(&p).norm() < 1e-12);
    }
}
