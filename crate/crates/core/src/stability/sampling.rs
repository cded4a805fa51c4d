//! Random single-point traces for property checks of the stability machinery.

use rand::Rng;

use super::{check_stability_3d, cross3, speeds, MarginOptions, PhaseTrace, TwoPhaseTrace};
use crate::error::{invalid, Result};

fn unit<R: Rng>(rng: &mut R) -> [f64; 2] {
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    [th.cos(), th.sin()]
}

fn scaled(v: [f64; 2], s: f64) -> [f64; 2] {
    [v[0] * s, v[1] * s]
}

fn sound_speed<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.3) {
        f64::INFINITY
    } else {
        rng.gen_range(1.0..10.0)
    }
}

/// Densities, sound speeds and a transverse pair `b+`, `b-` (`|b+ x b-| >= 0.1 |b+||b-|`).
/// Velocities are drawn with a random mean and the given jump.
fn build<R: Rng>(rng: &mut R, bp: [f64; 2], bm: [f64; 2], jump: [f64; 2]) -> Result<TwoPhaseTrace> {
    let mean = scaled(unit(rng), rng.gen_range(0.0..0.5));
    let up = PhaseTrace::uniform(1, rng.gen_range(0.5..2.0), [mean[0] + 0.5 * jump[0], mean[1] + 0.5 * jump[1]], bp, sound_speed(rng));
    let lo = PhaseTrace::uniform(1, rng.gen_range(0.5..2.0), [mean[0] - 0.5 * jump[0], mean[1] - 0.5 * jump[1]], bm, sound_speed(rng));
    TwoPhaseTrace::single(3, up, lo)
}

fn transverse_pair<R: Rng>(rng: &mut R) -> ([f64; 2], [f64; 2]) {
    loop {
        let bp = scaled(unit(rng), rng.gen_range(0.5..2.0));
        let bm = scaled(unit(rng), rng.gen_range(0.5..2.0));
        let n = (bp[0].hypot(bp[1])) * (bm[0].hypot(bm[1]));
        if cross3(bp, bm).abs() >= 0.1 * n {
            return (bp, bm);
        }
    }
}

/// Any admissible 3D trace with transverse magnetic fields.
pub fn random_transverse_3d<R: Rng>(rng: &mut R) -> Result<TwoPhaseTrace> {
    let (bp, bm) = transverse_pair(rng);
    let jump = scaled(unit(rng), rng.gen_range(0.0..2.0));
    build(rng, bp, bm, jump)
}

/// A 3D trace satisfying the stability condition with margin `delta0`: the jump
/// direction is random and its length is drawn inside the admissible band.
pub fn random_stable_3d<R: Rng>(rng: &mut R, delta0: f64) -> Result<TwoPhaseTrace> {
    let opts = MarginOptions::new(delta0);
    for _ in 0..10_000 {
        let (bp, bm) = transverse_pair(rng);
        let dir = unit(rng);
        let probe = build(rng, bp, bm, dir)?;
        let sp = speeds(&probe);
        // both clauses are linear in |[v]| along a fixed direction
        let tp = sp.a_upper[0] * cross3(bm, dir).abs();
        let tm = sp.a_lower[0] * cross3(bp, dir).abs();
        let lo = delta0 / tp.min(tm);
        let hi = (1.0 - delta0) * cross3(bp, bm).abs() / tp.max(tm);
        if !(lo < hi) {
            continue;
        }
        let s = lo + (hi - lo) * rng.gen_range(0.05..0.95);
        let mut t = probe;
        let mean = [0.5 * (t.upper.v[0][0] + t.lower.v[0][0]), 0.5 * (t.upper.v[0][1] + t.lower.v[0][1])];
        t.upper.v[0] = [mean[0] + 0.5 * s * dir[0], mean[1] + 0.5 * s * dir[1]];
        t.lower.v[0] = [mean[0] - 0.5 * s * dir[0], mean[1] - 0.5 * s * dir[1]];
        if check_stability_3d(&t, opts)?.holds {
            return Ok(t);
        }
    }
    Err(invalid("delta0", format!("no stable trace found for delta0 = {delta0}")))
}

/// A 3D trace violating the stability condition: nearly collinear `b+`, `b-` and a
/// velocity jump with a component across them, scaled well past the threshold.
pub fn random_violating_3d<R: Rng>(rng: &mut R) -> Result<TwoPhaseTrace> {
    let b = unit(rng);
    let bp = scaled(b, rng.gen_range(0.5..2.0));
    let tilt = rng.gen_range(-0.05..0.05f64);
    let bm = scaled([b[0] * tilt.cos() - b[1] * tilt.sin(), b[0] * tilt.sin() + b[1] * tilt.cos()], rng.gen_range(0.5..2.0));
    let across = [-b[1], b[0]];
    let along = rng.gen_range(-0.5..0.5);
    let s = rng.gen_range(1.0..4.0);
    let jump = [s * (across[0] + along * b[0]), s * (across[1] + along * b[1])];
    build(rng, bp, bm, jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::ellipticity_form;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samplers_land_on_the_right_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = random_stable_3d(&mut rng, 0.1).unwrap();
            assert!(check_stability_3d(&t, MarginOptions::new(0.1)).unwrap().holds);
            let t = random_violating_3d(&mut rng).unwrap();
            assert!(!check_stability_3d(&t, MarginOptions::new(0.1)).unwrap().holds);
            assert!(ellipticity_form(&t, 1).infimum < 0.0);
        }
    }
}
