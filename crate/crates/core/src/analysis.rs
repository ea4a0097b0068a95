//! Diagnostics of transformed potentials: displacement detection, tail fits
//! of periodicity defects, product constancy, bound-state verdicts and
//! isospectrality.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::band;
use crate::darboux::{InjectedState, TransformationFunction};
use crate::engine::PotentialSpec;
use crate::error::{Error, Result};
use crate::roots;

/// Points of the comparison grid used by [`detect_displacement`].
pub const DISPLACEMENT_POINTS: usize = 4096;

/// Cells of the coarse `δ` scan.
pub const DELTA_SCAN_CELLS: usize = 512;

/// Best shift `δ` with `V1(x) ≈ V0(x + δ)` on a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementReport {
    pub delta: f64,
    /// `sup |V1(x) - V0(x + δ)|` over the window.
    pub residual_sup: f64,
    pub window: (f64, f64),
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Minimize `sup |V1(x) - V0(x + δ)|` over `δ`.
///
/// The scan covers `[0, T)` for periodic `V0` unless `scan` is given; it is
/// required otherwise. The best scan cell is refined by golden section.
pub fn detect_displacement<F: Fn(f64) -> f64>(
    v0: &PotentialSpec,
    v1: F,
    window: (f64, f64),
    scan: Option<(f64, f64)>,
) -> Result<DisplacementReport> {
    let (lo, hi) = match (scan, v0.period()) {
        (Some(s), _) => s,
        (None, Some(t)) => (0.0, t),
        (None, None) => return Err(Error::Domain("non-periodic base needs an explicit scan range")),
    };
    if !(lo < hi) || !(window.0 < window.1) {
        return Err(Error::Domain("scan range and window must be increasing"));
    }
    let xs = linspace(window.0, window.1, DISPLACEMENT_POINTS);
    let target: Vec<f64> = xs.iter().map(|&x| v1(x)).collect();
    let mismatch = |d: f64| {
        xs.iter().zip(&target).map(|(&x, &y)| (y - v0.eval(x + d)).abs()).fold(0.0, f64::max)
    };
    let h = (hi - lo) / DELTA_SCAN_CELLS as f64;
    let scores: Vec<f64> = (0..DELTA_SCAN_CELLS).map(|i| mismatch(lo + h * i as f64)).collect();
    let (best, worst) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    if !(worst - best >= 1e-12) {
        return Err(Error::FlatObjective);
    }
    let i = scores.iter().position(|&s| s == best).unwrap_or(0);
    let d0 = lo + h * i as f64;
    let (mut delta, mut res) = roots::golden_min(mismatch, d0 - h, d0 + h, 1e-9);
    if res > best {
        delta = d0;
        res = best;
    }
    if scan.is_none() {
        if let Some(t) = v0.period() {
            delta -= t * (delta / t).floor();
        }
    }
    Ok(DisplacementReport { delta, residual_sup: res, window })
}

/// Displacement fits on both tails at one offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub offset: f64,
    pub left: DisplacementReport,
    pub right: DisplacementReport,
}

/// Verdict on an injected state.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateReport {
    pub energy: f64,
    /// `L²` norms on the nested windows.
    pub l2_norms: Vec<f64>,
    pub eigen_residual: f64,
    /// RMS spread of `|φ|²` about its centre.
    pub localization_length: f64,
    pub accepted: bool,
}

/// Asymptotic displacements of a periodicity defect.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub residual_minus: f64,
    pub residual_plus: f64,
    /// Fits at increasing offsets; the last one is reported above.
    pub tail_fits: Vec<TailFit>,
    pub bound_states: Vec<BoundStateReport>,
}

/// Tail offset for a defect made from `u^β + κ u^{1/β}`: the point where the
/// two components have equal size, plus eight periods.
pub fn default_tail_offset(period: f64, beta: f64, kappa: f64) -> f64 {
    let lb = beta.abs().ln();
    let cross = if kappa > 0.0 && lb > 0.0 { period * kappa.ln().abs() / (2.0 * lb) } else { 0.0 };
    cross + 8.0 * period
}

/// Fit `δ-` on `[-X - tail, -X]` and `δ+` on `[X, X + tail]` for
/// `X = offset, offset + tail, …` (`steps` values). The largest `X` gives the
/// reported pair.
pub fn asymptotic_displacements<F: Fn(f64) -> f64>(
    v0: &PotentialSpec,
    v1: F,
    tail: f64,
    offset: f64,
    steps: usize,
) -> Result<DefectReport> {
    if v0.period().is_none() {
        return Err(Error::NotPeriodic);
    }
    if !(tail > 0.0) || steps == 0 {
        return Err(Error::Domain("tail length and step count must be positive"));
    }
    let mut fits = Vec::with_capacity(steps);
    for k in 0..steps {
        let x = offset + tail * k as f64;
        let left = detect_displacement(v0, &v1, (-x - tail, -x), None)?;
        let right = detect_displacement(v0, &v1, (x, x + tail), None)?;
        fits.push(TailFit { offset: x, left, right });
    }
    let last = fits[fits.len() - 1];
    let worst = last.left.residual_sup.max(last.right.residual_sup);
    if worst > 1e-3 {
        return Err(Error::NotConverged { residual: worst });
    }
    Ok(DefectReport {
        delta_minus: last.left.delta,
        delta_plus: last.right.delta,
        residual_minus: last.left.residual_sup,
        residual_plus: last.right.residual_sup,
        tail_fits: fits,
        bound_states: Vec::new(),
    })
}

/// `c` and `(max - min)/|c|` of `u1(x) u2(x + δ)` on `grid`, with `c` the
/// median.
pub fn theorem2_constancy(
    u1: &TransformationFunction,
    u2: &TransformationFunction,
    delta: f64,
    grid: &[f64],
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::Domain("empty grid"));
    }
    let mut prods: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let (a, b) = (u1.eval_scaled(x), u2.eval_scaled(x + delta));
            a.psi * b.psi * (a.log_scale + b.log_scale).exp()
        })
        .collect();
    let first = prods[0].signum();
    if prods.iter().any(|&p| p == 0.0 || !p.is_finite() || p.signum() != first) {
        return Err(Error::ZeroProduct);
    }
    prods.sort_by(f64::total_cmp);
    let c = prods[prods.len() / 2];
    Ok((c, (prods[prods.len() - 1] - prods[0]) / c.abs()))
}

/// Composite Simpson rule of `|φ|²` over `[lo, hi]`.
fn norm2(phi: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> f64 {
    let n = cells + cells % 2;
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let p = phi(lo + h * i as f64);
        s += w * p * p;
    }
    s * h / 3.0
}

/// Relative residual `max |φ'' - (V1 - E)φ| / max |φ|` on `grid`, with `φ''`
/// from five-point differences of the exact `φ'`.
pub fn state_residual(v1: &PotentialSpec, state: &InjectedState, grid: &[f64], h: f64) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for &x in grid {
        let c = state.func.eval_scaled(x);
        let rel = |d: f64| {
            let s = state.func.eval_scaled(x + d);
            s.dpsi * (s.log_scale - c.log_scale).exp()
        };
        let d2 = (rel(-2.0 * h) - 8.0 * rel(-h) + 8.0 * rel(h) - rel(2.0 * h)) / (12.0 * h);
        let scale = c.log_scale.exp();
        num = num.max((d2 - (v1.eval(x) - state.energy) * c.psi).abs() * scale);
        den = den.max(c.psi.abs() * scale);
    }
    num / den
}

/// Normalizability and eigen-residual of an injected state.
///
/// `L²` norms are taken on `[-X, X]` for `X = s·unit`, `s` in `schedule`;
/// the state is accepted when the norm increments shrink at least
/// geometrically and the eigen-residual is below `1e-5`.
pub fn bound_state_check(v1: &PotentialSpec, state: &InjectedState, unit: f64, schedule: &[f64]) -> BoundStateReport {
    let phi = |x: f64| state.func.eval_scaled(x).value().psi;
    let cells_per_unit = 64.0;
    let norms: Vec<f64> = schedule
        .iter()
        .map(|&s| {
            let x = s * unit;
            norm2(&phi, -x, x, (2.0 * s * cells_per_unit) as usize)
        })
        .collect();
    let probe: Vec<f64> = linspace(-3.0 * unit, 3.0 * unit, 241);
    let eigen_residual = state_residual(v1, state, &probe, 1e-3);
    let finite = norms.iter().all(|n| n.is_finite());
    let mut decaying = finite && norms.len() >= 3;
    if decaying {
        let last = norms[norms.len() - 1];
        for w in norms.windows(3) {
            let (i1, i2) = (w[1] - w[0], w[2] - w[1]);
            if i2 > 0.5 * i1.abs() + 1e-12 * last {
                decaying = false;
            }
        }
    }
    let localization_length = if finite {
        let x = schedule.last().copied().unwrap_or(1.0) * unit;
        let n = (2.0 * x / unit * cells_per_unit) as usize;
        let h = 2.0 * x / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let xi = -x + h * i as f64;
            let p = phi(xi);
            let w = p * p;
            m0 += w;
            m1 += w * xi;
            m2 += w * xi * xi;
        }
        let mean = m1 / m0;
        (m2 / m0 - mean * mean).max(0.0).sqrt()
    } else {
        f64::INFINITY
    };
    let accepted = decaying && eigen_residual < 1e-5;
    BoundStateReport {
        energy: state.energy,
        l2_norms: norms,
        eigen_residual,
        localization_length,
        accepted,
    }
}

/// `max |D0(E) - D1(E)|` over `energies`. `V1` must share the period of `V0`.
pub fn isospectrality_check(v0: &PotentialSpec, v1: &PotentialSpec, energies: &[f64]) -> Result<f64> {
    let t = v0.period().ok_or(Error::NotPeriodic)?;
    match v1.period() {
        Some(t1) if (t1 - t).abs() <= 1e-12 * t => {}
        _ => return Err(Error::NotPeriodic),
    }
    for i in 0..16 {
        let x = t * (i as f64 / 16.0 + 0.013);
        let (a, b) = (v1.eval(x), v1.eval(x + t));
        if (a - b).abs() > 1e-6 * (1.0 + a.abs()) {
            return Err(Error::NotPeriodic);
        }
    }
    let mut worst: f64 = 0.0;
    for &e in energies {
        let d0 = band::discriminant(v0, e)?;
        let d1 = band::discriminant(v1, e)?;
        worst = worst.max((d0 - d1).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch;
    use crate::catalog;
    use crate::darboux::{self, FnSeed, Provenance, SeedFunction};
    use crate::engine::ScaledState;
    use alloc::boxed::Box;
    use alloc::sync::Arc;
    use rand::{Rng, SeedableRng};

    fn lame() -> PotentialSpec {
        PotentialSpec::lame(1, 0.5).unwrap()
    }

    fn tf(u: bloch::BlochFunction) -> TransformationFunction {
        u.into_transform().unwrap()
    }

    #[test]
    fn shift_round_trip() {
        let v = lame();
        let s = PotentialSpec::Shifted { base: Box::new(v.clone()), delta: 0.3 };
        let r = detect_displacement(&v, |x| s.eval(x), (-4.0, 4.0), None).unwrap();
        assert!((r.delta - 0.3).abs() < 1e-6);
        assert!(r.residual_sup < 1e-10);
        let t = v.period().unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let d = rng.gen_range(0.0..t);
            let s = PotentialSpec::Shifted { base: Box::new(v.clone()), delta: d };
            let r = detect_displacement(&v, |x| s.eval(x), (0.0, t), None).unwrap();
            let err = (r.delta - d).abs().min(t - (r.delta - d).abs());
            assert!(err < 1e-6, "{d} -> {}", r.delta);
        }
    }

    #[test]
    fn flat_objective() {
        let v = PotentialSpec::Free { period: 1.0 };
        assert!(matches!(detect_displacement(&v, |_| 0.0, (0.0, 1.0), None), Err(Error::FlatObjective)));
    }

    #[test]
    fn lame_second_order_displacement() {
        let v = lame();
        let t = v.period().unwrap();
        let (_, m1) = bloch::bloch_pair(&v, 1.1).unwrap();
        let (p2, _) = bloch::bloch_pair(&v, 1.4).unwrap();
        let res = darboux::darboux2(&v, tf(m1), tf(p2)).unwrap();
        let r = detect_displacement(&v, |x| res.potential(x), (0.0, 2.0 * t), None).unwrap();
        assert!((r.delta - 0.747).abs() < 2e-3, "{}", r.delta);
        assert!(r.residual_sup < 1e-5, "{}", r.residual_sup);
        let d = isospectrality_check(&v, &res.into_potential(), &linspace(0.0, 3.0, 100)).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn product_constancy() {
        let v = lame();
        let grid = linspace(-5.0, 5.0, 201);
        let pair = catalog::lame_bloch_pair(&catalog::LameBlochParams::from_alpha(0.5, 0.2).unwrap()).unwrap();
        let (up, um) = bloch::bloch_pair(&v, 0.2).unwrap();
        let (_, rel) = theorem2_constancy(&tf(up), &tf(um), pair.delta.re, &grid).unwrap();
        assert!(rel < 1e-8, "{rel}");
        // n = 3: no shift makes the product constant
        let v3 = PotentialSpec::lame(3, 0.5).unwrap();
        let t3 = v3.period().unwrap();
        let (up, um) = bloch::bloch_pair(&v3, -0.5).unwrap();
        let (up, um) = (tf(up), tf(um));
        let best = (0..200)
            .map(|i| theorem2_constancy(&up, &um, t3 * i as f64 / 200.0, &grid).unwrap().1)
            .fold(f64::INFINITY, f64::min);
        assert!(best > 1e-4, "{best}");
        // exponentials: constant for every shift
        let ex = |g: f64| {
            TransformationFunction::new(
                -g * g,
                Arc::new(FnSeed(move |x: f64| ScaledState { log_scale: g * x, psi: 1.0, dpsi: g })),
                Provenance::Custom,
            )
        };
        for d in [0.0, 0.7, -3.1] {
            assert!(theorem2_constancy(&ex(-0.8), &ex(0.8), d, &grid).unwrap().1 < 1e-13);
        }
        // a gap-1 function has nodes
        let (up, um) = bloch::bloch_pair(&v, 1.2).unwrap();
        assert!(matches!(theorem2_constancy(&tf(up), &tf(um), 0.3, &grid), Err(Error::ZeroProduct)));
    }

    #[test]
    fn first_order_defect() {
        let v = lame();
        let t = v.period().unwrap();
        let (up, um) = bloch::bloch_pair(&v, 0.35).unwrap();
        let beta = up.beta.re;
        let pure = darboux::darboux1(&v, tf(up.clone())).unwrap();
        let r = asymptotic_displacements(&v, |x| pure.potential(x), 2.0 * t, 2.0 * t, 2).unwrap();
        assert!((r.delta_minus - r.delta_plus).abs() < 1e-6);
        let u = darboux::superpose_one(&tf(up), &tf(um), 1.0).unwrap();
        let res = darboux::darboux1(&v, u).unwrap();
        let x0 = default_tail_offset(t, beta, 1.0);
        let r = asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, x0, 3).unwrap();
        assert!((r.delta_minus - r.delta_plus).abs() > 1e-2);
        assert!(r.residual_minus < 1e-4 && r.residual_plus < 1e-4, "{r:?}");
        let states = darboux::injected_states(&res);
        let v1 = res.into_potential();
        let rep = bound_state_check(&v1, &states[0], t, &[20.0, 40.0, 80.0]);
        assert!(rep.accepted, "{rep:?}");
        assert!(rep.energy < 0.5);
    }

    #[test]
    fn second_order_defect() {
        let v = lame();
        let t = v.period().unwrap();
        let [p1, m1, p2, m2] = bloch::theorem1_basis(&v, 1.2, 1.3).unwrap();
        let beta = p1.beta.re.abs().min(p2.beta.re.abs());
        let k = darboux::KappaSuperposition {
            kappa1: 1.0,
            kappa2: 1.0,
            u_beta1: tf(p1),
            u_inv1: tf(m1),
            u_beta2: tf(p2),
            u_inv2: tf(m2),
        };
        let (v1f, v2f) = darboux::superpose(&k).unwrap();
        let res = darboux::darboux2(&v, v1f, v2f).unwrap();
        let r = asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, default_tail_offset(t, beta, 1.0), 3).unwrap();
        assert!((r.delta_minus - r.delta_plus).abs() > 1e-2);
        assert!(r.residual_minus < 1e-4 && r.residual_plus < 1e-4, "{r:?}");
        let states = darboux::injected_states(&res);
        let v1 = res.into_potential();
        for s in &states {
            let rep = bound_state_check(&v1, s, t, &[20.0, 40.0, 80.0]);
            assert!(rep.accepted, "{rep:?}");
            assert!(rep.energy > 1.0 && rep.energy < 1.5);
        }
    }

    struct Cosine;

    impl SeedFunction for Cosine {
        fn eval_scaled(&self, x: f64) -> ScaledState {
            ScaledState::plain(x.cos(), -x.sin())
        }
    }

    #[test]
    fn band_state_is_rejected() {
        let v = PotentialSpec::Free { period: 1.0 };
        let s = InjectedState { energy: 1.0, func: Arc::new(Cosine) };
        let rep = bound_state_check(&v, &s, 1.0, &[20.0, 40.0, 80.0]);
        assert!(rep.eigen_residual < 1e-9);
        assert!(!rep.accepted);
    }

    #[test]
    fn isospectrality_of_shift_and_deformation() {
        let v = lame();
        let s = PotentialSpec::Shifted { base: Box::new(v.clone()), delta: 1.234 };
        assert!(isospectrality_check(&v, &s, &linspace(-1.0, 3.0, 50)).unwrap() < 1e-10);
        assert!(matches!(
            isospectrality_check(&v, &PotentialSpec::OneSoliton { gamma0: 1.0 }, &[0.1]),
            Err(Error::NotPeriodic)
        ));
        // n = 3 gap transform: same spectrum, but no longer a displaced copy
        let v3 = PotentialSpec::lame(3, 0.5).unwrap();
        let t3 = v3.period().unwrap();
        let (p1, _) = bloch::bloch_pair(&v3, 2.15).unwrap();
        let (_, m2) = bloch::bloch_pair(&v3, 4.05).unwrap();
        let res = darboux::darboux2(&v3, tf(p1), tf(m2)).unwrap();
        let r = detect_displacement(&v3, |x| res.potential(x), (0.0, 2.0 * t3), None).unwrap();
        assert!(r.residual_sup > 1e-2, "{r:?}");
        let d = isospectrality_check(&v3, &res.into_potential(), &linspace(0.0, 8.0, 40)).unwrap();
        assert!(d < 1e-6, "{d}");
    }
}
