//! First- and second-order Darboux transformations.
//!
//! With transformation functions `u_i` solving `-u'' + V0 u = α_i u`:
//!
//! ```text
//! order 1:  V1 = 2α + 2w² - V0,                     w = u'/u
//! order 2:  V1 = V0 - 2(W''/W - (W'/W)²),            W = u1 u2' - u1' u2
//!           W' = (α1-α2) u1 u2,  W'' = (α1-α2)(u1' u2 + u1 u2')
//! ```
//!
//! so no derivative is ever taken numerically. Transformation functions are
//! evaluated in scaled form; every formula above is homogeneous in each `u_i`
//! and the exponential scale factors cancel pointwise.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::{PotentialSpec, SampledSolution, ScaledState, StateVector};
use crate::error::{Error, Result};
use crate::roots;

/// A solution `u` of `-u'' + V0 u = αu` evaluable on the whole line.
pub trait SeedFunction: Send + Sync {
    fn eval_scaled(&self, x: f64) -> ScaledState;

    /// Floquet multiplier when `u` is a real Bloch function of a periodic base.
    fn multiplier(&self) -> Option<f64> {
        None
    }
}

/// Where a transformation function came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Numeric Bloch function with real multiplier `beta`.
    Bloch { beta: f64 },
    /// Closed form, named.
    Analytic(String),
    /// `u^β + κ u^{1/β}`.
    Superposition { kappa: f64 },
    /// Supplied by the caller.
    Custom,
}

/// Seed of a Darboux transformation.
#[derive(Clone)]
pub struct TransformationFunction {
    pub alpha: f64,
    pub func: Arc<dyn SeedFunction>,
    pub provenance: Provenance,
    /// Point where the function was made positive, if it was sign-normalized.
    pub normalized_at: Option<f64>,
}

impl fmt::Debug for TransformationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformationFunction")
            .field("alpha", &self.alpha)
            .field("provenance", &self.provenance)
            .field("normalized_at", &self.normalized_at)
            .finish()
    }
}

impl TransformationFunction {
    pub fn new(alpha: f64, func: Arc<dyn SeedFunction>, provenance: Provenance) -> Self {
        Self { alpha, func, provenance, normalized_at: None }
    }

    pub fn eval_scaled(&self, x: f64) -> ScaledState {
        self.func.eval_scaled(x)
    }

    /// `(u, u')`; may overflow far from the origin.
    pub fn eval(&self, x: f64) -> StateVector {
        self.func.eval_scaled(x).value()
    }

    pub fn multiplier(&self) -> Option<f64> {
        self.func.multiplier()
    }

    /// Relative residual `max |u'' - (V0-α)u| / max |u|` on `grid`, with `u''`
    /// obtained by 5-point differencing of the analytic `u'` (scaled by the
    /// local exponential factor of the central point).
    pub fn residual(&self, base: &PotentialSpec, grid: &[f64], h: f64) -> f64 {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for &x in grid {
            let c = self.eval_scaled(x);
            let rel = |d: f64| {
                let s = self.eval_scaled(x + d);
                s.dpsi * (s.log_scale - c.log_scale).exp()
            };
            let d2 = (rel(-2.0 * h) - 8.0 * rel(-h) + 8.0 * rel(h) - rel(2.0 * h)) / (12.0 * h);
            num = num.max((d2 - (base.eval(x) - self.alpha) * c.psi).abs());
            den = den.max(c.psi.abs());
        }
        num / den
    }
}

/// A closure-backed seed.
pub struct FnSeed<F: Fn(f64) -> ScaledState + Send + Sync>(pub F);

impl<F: Fn(f64) -> ScaledState + Send + Sync> SeedFunction for FnSeed<F> {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        (self.0)(x)
    }
}

/// `c1 u1 + c2 u2` for two seeds at the same energy.
pub struct LinearCombination {
    pub first: Arc<dyn SeedFunction>,
    pub second: Arc<dyn SeedFunction>,
    pub c1: f64,
    pub c2: f64,
}

impl SeedFunction for LinearCombination {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let a = self.first.eval_scaled(x);
        let b = self.second.eval_scaled(x);
        combine(self.c1, &a, self.c2, &b)
    }
}

/// `c1 a + c2 b` in scaled form.
pub(crate) fn combine(c1: f64, a: &ScaledState, c2: f64, b: &ScaledState) -> ScaledState {
    if c2 == 0.0 {
        return ScaledState { log_scale: a.log_scale, psi: c1 * a.psi, dpsi: c1 * a.dpsi };
    }
    if c1 == 0.0 {
        return ScaledState { log_scale: b.log_scale, psi: c2 * b.psi, dpsi: c2 * b.dpsi };
    }
    let l = a.log_scale.max(b.log_scale);
    let (fa, fb) = ((a.log_scale - l).exp() * c1, (b.log_scale - l).exp() * c2);
    ScaledState { log_scale: l, psi: fa * a.psi + fb * b.psi, dpsi: fa * a.dpsi + fb * b.dpsi }
}

/// Scaled Wronskian data `W = exp(log_scale) W̃` with `W̃`, `W̃'`, `W̃''`.
#[derive(Debug, Clone, Copy)]
pub struct WronskianValue {
    pub log_scale: f64,
    pub w: f64,
    pub dw: f64,
    pub ddw: f64,
}

impl WronskianValue {
    pub fn value(&self) -> f64 {
        self.log_scale.exp() * self.w
    }
}

fn wronskian_of(a1: f64, s1: &ScaledState, a2: f64, s2: &ScaledState) -> WronskianValue {
    let da = a1 - a2;
    WronskianValue {
        log_scale: s1.log_scale + s2.log_scale,
        w: s1.psi * s2.dpsi - s1.dpsi * s2.psi,
        dw: da * s1.psi * s2.psi,
        ddw: da * (s1.dpsi * s2.psi + s1.psi * s2.dpsi),
    }
}

/// A Darboux partner potential together with its seeds.
pub struct DarbouxResult {
    order: u8,
    base: PotentialSpec,
    transforms: Vec<TransformationFunction>,
    window: (f64, f64),
    period: Option<f64>,
}

impl fmt::Debug for DarbouxResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DarbouxResult")
            .field("order", &self.order)
            .field("base", &self.base)
            .field("transforms", &self.transforms)
            .field("window", &self.window)
            .finish()
    }
}

/// Default working window: 12 periods centred at 0 for periodic bases,
/// ±10 e-folding lengths of the seeds otherwise.
pub fn default_window(base: &PotentialSpec, alphas: &[f64]) -> (f64, f64) {
    if let Some(t) = base.period() {
        return (-6.0 * t, 6.0 * t);
    }
    let kappa = alphas.iter().map(|a| (-a).max(0.0).sqrt()).fold(f64::INFINITY, f64::min);
    let len = if kappa.is_finite() && kappa > 0.05 { 10.0 / kappa } else { 200.0 };
    (-len, len)
}

/// Sign changes of `f` on `samples` cells over `window`, refined by bisection.
fn scan_nodes<F: Fn(f64) -> f64>(f: F, window: (f64, f64), samples: usize) -> Vec<f64> {
    let (lo, hi) = window;
    let h = (hi - lo) / samples as f64;
    let mut nodes = Vec::new();
    let mut xa = lo;
    let mut fa = f(xa);
    for i in 1..=samples {
        let xb = lo + h * i as f64;
        let fb = f(xb);
        if fa == 0.0 {
            nodes.push(xa);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            if let Some(r) = roots::bisect(&f, xa, xb, 1e-12) {
                nodes.push(r);
            }
        }
        xa = xb;
        fa = fb;
    }
    nodes
}

fn scan_density(window: (f64, f64), alphas: &[f64], base: &PotentialSpec) -> usize {
    let len = window.1 - window.0;
    let vmin = (0..256).map(|i| base.eval(window.0 + len * i as f64 / 255.0)).fold(f64::INFINITY, f64::min);
    let emax = alphas.iter().fold(f64::NEG_INFINITY, |m, &a| m.max(a));
    // local wavenumber bound of the seeds, with headroom
    let k = (emax - vmin).max(1.0).sqrt();
    ((len * k * 16.0).ceil() as usize).clamp(2048, 200_000)
}

impl DarbouxResult {
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn base(&self) -> &PotentialSpec {
        &self.base
    }

    pub fn transforms(&self) -> &[TransformationFunction] {
        &self.transforms
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// The period of `V1`, present when every seed is a Bloch function of a
    /// periodic base.
    pub fn period(&self) -> Option<f64> {
        self.period
    }

    /// `V1(x)`.
    pub fn potential(&self, x: f64) -> f64 {
        let v0 = self.base.eval(x);
        match self.order {
            1 => {
                let t = &self.transforms[0];
                let w = t.eval_scaled(x).log_derivative();
                2.0 * t.alpha + 2.0 * w * w - v0
            }
            _ => {
                let wv = self.wronskian(x).expect("order-2 result");
                let r = wv.dw / wv.w;
                v0 - 2.0 * (wv.ddw / wv.w - r * r)
            }
        }
    }

    /// Superpotential `w = u'/u` of a first-order transform.
    pub fn superpotential(&self, x: f64) -> Option<f64> {
        (self.order == 1).then(|| self.transforms[0].eval_scaled(x).log_derivative())
    }

    /// Wronskian `W(u1, u2)` of a second-order transform in scaled form.
    pub fn wronskian(&self, x: f64) -> Option<WronskianValue> {
        if self.order != 2 {
            return None;
        }
        let (t1, t2) = (&self.transforms[0], &self.transforms[1]);
        Some(wronskian_of(t1.alpha, &t1.eval_scaled(x), t2.alpha, &t2.eval_scaled(x)))
    }

    /// Wrap as a potential descriptor.
    pub fn into_potential(self) -> PotentialSpec {
        PotentialSpec::Derived(Arc::new(self))
    }
}

fn period_of(base: &PotentialSpec, seeds: &[&TransformationFunction]) -> Option<f64> {
    let t = base.period()?;
    seeds.iter().all(|s| s.multiplier().is_some()).then_some(t)
}

/// First-order transform with seed `u`; `u` must be nodeless on the window.
pub fn darboux1(base: &PotentialSpec, u: TransformationFunction) -> Result<DarbouxResult> {
    darboux1_on(base, u, None)
}

/// [`darboux1`] with an explicit working window.
pub fn darboux1_on(base: &PotentialSpec, u: TransformationFunction, window: Option<(f64, f64)>) -> Result<DarbouxResult> {
    let window = window.unwrap_or_else(|| default_window(base, &[u.alpha]));
    let n = scan_density(window, &[u.alpha], base);
    let nodes = scan_nodes(|x| u.eval_scaled(x).psi, window, n);
    if !nodes.is_empty() {
        return Err(Error::SingularTransform { nodes });
    }
    let period = period_of(base, &[&u]);
    Ok(DarbouxResult { order: 1, base: base.clone(), transforms: alloc::vec![u], window, period })
}

/// Second-order transform with seeds `u1`, `u2`; `W(u1, u2)` must be
/// nodeless on the window.
pub fn darboux2(base: &PotentialSpec, u1: TransformationFunction, u2: TransformationFunction) -> Result<DarbouxResult> {
    darboux2_on(base, u1, u2, None)
}

/// [`darboux2`] with an explicit working window.
pub fn darboux2_on(
    base: &PotentialSpec,
    u1: TransformationFunction,
    u2: TransformationFunction,
    window: Option<(f64, f64)>,
) -> Result<DarbouxResult> {
    let window = window.unwrap_or_else(|| default_window(base, &[u1.alpha, u2.alpha]));
    let n = scan_density(window, &[u1.alpha, u2.alpha], base);
    let w = |x: f64| wronskian_of(u1.alpha, &u1.eval_scaled(x), u2.alpha, &u2.eval_scaled(x)).w;
    let nodes = scan_nodes(w, window, n);
    if !nodes.is_empty() {
        return Err(Error::SingularTransform { nodes });
    }
    let period = period_of(base, &[&u1, &u2]);
    Ok(DarbouxResult { order: 2, base: base.clone(), transforms: alloc::vec![u1, u2], window, period })
}

/// The four sign-normalized Bloch functions entering a Theorem-1 superposition,
/// with the non-negative mixing constants.
#[derive(Debug, Clone)]
pub struct KappaSuperposition {
    pub kappa1: f64,
    pub kappa2: f64,
    pub u_beta1: TransformationFunction,
    pub u_inv1: TransformationFunction,
    pub u_beta2: TransformationFunction,
    pub u_inv2: TransformationFunction,
}

fn mix(u: &TransformationFunction, v: &TransformationFunction, kappa: f64) -> TransformationFunction {
    let func = if kappa == 0.0 {
        u.func.clone()
    } else {
        Arc::new(LinearCombination { first: u.func.clone(), second: v.func.clone(), c1: 1.0, c2: kappa })
    };
    TransformationFunction {
        alpha: u.alpha,
        func,
        provenance: if kappa == 0.0 { u.provenance.clone() } else { Provenance::Superposition { kappa } },
        normalized_at: u.normalized_at,
    }
}

/// `v = u^β + κ u^{1/β}` for a first-order defect transform.
pub fn superpose_one(u_beta: &TransformationFunction, u_inv: &TransformationFunction, kappa: f64) -> Result<TransformationFunction> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::Domain("kappa must be finite and non-negative"));
    }
    check_normalized(&[u_beta, u_inv])?;
    Ok(mix(u_beta, u_inv, kappa))
}

fn check_normalized(us: &[&TransformationFunction]) -> Result<()> {
    let x0 = us[0].normalized_at.ok_or(Error::Normalization)?;
    for u in us {
        match u.normalized_at {
            Some(x) if x == x0 && u.eval_scaled(x).psi > 0.0 => {}
            _ => return Err(Error::Normalization),
        }
    }
    Ok(())
}

/// `v1 = u^{β1} + κ1 u^{1/β1}`, `v2 = u^{β2} + κ2 u^{1/β2}`.
pub fn superpose(v: &KappaSuperposition) -> Result<(TransformationFunction, TransformationFunction)> {
    if !(v.kappa1 >= 0.0 && v.kappa2 >= 0.0) || !(v.kappa1.is_finite() && v.kappa2.is_finite()) {
        return Err(Error::Domain("kappa1 and kappa2 must be finite and non-negative"));
    }
    check_normalized(&[&v.u_beta1, &v.u_inv1, &v.u_beta2, &v.u_inv2])?;
    Ok((mix(&v.u_beta1, &v.u_inv1, v.kappa1), mix(&v.u_beta2, &v.u_inv2, v.kappa2)))
}

/// `L ψ` for a base solution `ψ` at energy `E` in scaled form.
fn transform_state(res: &DarbouxResult, x: f64, e: f64, psi: StateVector) -> StateVector {
    let v0 = res.base.eval(x);
    match res.order {
        1 => {
            let t = &res.transforms[0];
            let w = t.eval_scaled(x).log_derivative();
            let dw = (v0 - t.alpha) - w * w;
            // L = -∂ + w
            let phi = -psi.dpsi + w * psi.psi;
            let dphi = -(v0 - e) * psi.psi + dw * psi.psi + w * psi.dpsi;
            StateVector::new(phi, dphi)
        }
        _ => {
            let (t1, t2) = (&res.transforms[0], &res.transforms[1]);
            let (s1, s2) = (t1.eval_scaled(x), t2.eval_scaled(x));
            let (a1, a2) = (t1.alpha, t2.alpha);
            let wv = wronskian_of(a1, &s1, a2, &s2);
            let p = a1 * s1.psi * s2.dpsi - a2 * s1.dpsi * s2.psi;
            let dp = (a1 - a2) * (s1.dpsi * s2.dpsi + v0 * s1.psi * s2.psi);
            let a = p / wv.w - e;
            let b = -wv.dw / wv.w;
            let da = dp / wv.w - p * wv.dw / (wv.w * wv.w);
            let db = -wv.ddw / wv.w + (wv.dw / wv.w).powi(2);
            let phi = a * psi.psi + b * psi.dpsi;
            let dphi = da * psi.psi + (a + db) * psi.dpsi + b * (v0 - e) * psi.psi;
            StateVector::new(phi, dphi)
        }
    }
}

/// Map a solution of the base equation at energy `E` to a solution of the
/// partner equation at the same energy:
/// `φ = -ψ' + wψ` (order 1) or `φ = W(u1, u2, ψ) / W(u1, u2)` (order 2).
pub fn transform_solution(res: &DarbouxResult, psi: &SampledSolution) -> Result<SampledSolution> {
    let e = psi.energy;
    for t in &res.transforms {
        if (e - t.alpha).abs() <= 1e-12 * t.alpha.abs().max(1.0) {
            return Err(Error::EnergyCollision { energy: e });
        }
    }
    let mut out = SampledSolution {
        grid: psi.grid.clone(),
        psi: Vec::with_capacity(psi.grid.len()),
        dpsi: Vec::with_capacity(psi.grid.len()),
        ddpsi: Vec::with_capacity(psi.grid.len()),
        energy: e,
    };
    for (i, &x) in psi.grid.iter().enumerate() {
        let s = transform_state(res, x, e, StateVector::new(psi.psi[i], psi.dpsi[i]));
        out.psi.push(s.psi);
        out.dpsi.push(s.dpsi);
        out.ddpsi.push((res.potential(x) - e) * s.psi);
    }
    Ok(out)
}

/// Pointwise version of [`transform_solution`].
pub fn transform_point(res: &DarbouxResult, x: f64, e: f64, psi: StateVector) -> StateVector {
    transform_state(res, x, e, psi)
}

/// Full 3×3 Wronskian `W(u1, u2, ψ)` by cofactor expansion, with second
/// derivatives supplied by the equation. Unscaled; for cross-checks.
pub fn wronskian3_cofactor(res: &DarbouxResult, x: f64, e: f64, psi: StateVector) -> Option<f64> {
    if res.order != 2 {
        return None;
    }
    let v0 = res.base.eval(x);
    let (t1, t2) = (&res.transforms[0], &res.transforms[1]);
    let (u1, u2) = (t1.eval(x), t2.eval(x));
    let m = [
        [u1.psi, u2.psi, psi.psi],
        [u1.dpsi, u2.dpsi, psi.dpsi],
        [(v0 - t1.alpha) * u1.psi, (v0 - t2.alpha) * u2.psi, (v0 - e) * psi.psi],
    ];
    Some(
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]),
    )
}

/// Derivative-reduced `W(u1, u2, ψ) = ψ(α1 u1 u2' - α2 u1' u2 - E W) - (α1-α2) u1 u2 ψ'`.
pub fn wronskian3_reduced(res: &DarbouxResult, x: f64, e: f64, psi: StateVector) -> Option<f64> {
    if res.order != 2 {
        return None;
    }
    let (t1, t2) = (&res.transforms[0], &res.transforms[1]);
    let (u1, u2) = (t1.eval(x), t2.eval(x));
    let w = u1.psi * u2.dpsi - u1.dpsi * u2.psi;
    let (a1, a2) = (t1.alpha, t2.alpha);
    Some(psi.psi * (a1 * u1.psi * u2.dpsi - a2 * u1.dpsi * u2.psi - e * w) - (a1 - a2) * u1.psi * u2.psi * psi.dpsi)
}

/// An eigenfunction candidate of the partner potential at a factorization
/// energy.
#[derive(Clone)]
pub struct InjectedState {
    pub energy: f64,
    pub func: Arc<dyn SeedFunction>,
}

impl fmt::Debug for InjectedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InjectedState(E={})", self.energy)
    }
}

struct Reciprocal(Arc<dyn SeedFunction>);

impl SeedFunction for Reciprocal {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let s = self.0.eval_scaled(x);
        ScaledState { log_scale: -s.log_scale, psi: 1.0 / s.psi, dpsi: -s.dpsi / (s.psi * s.psi) }
    }
}

/// `u_other / W(u1, u2)` at the energy of the remaining seed.
struct OverWronskian {
    first: TransformationFunction,
    second: TransformationFunction,
    /// Which seed sits in the numerator: the one whose energy is *not* the
    /// state's energy.
    numerator_is_second: bool,
}

impl SeedFunction for OverWronskian {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let s1 = self.first.eval_scaled(x);
        let s2 = self.second.eval_scaled(x);
        let wv = wronskian_of(self.first.alpha, &s1, self.second.alpha, &s2);
        let (num, other) = if self.numerator_is_second { (s2, s1) } else { (s1, s2) };
        ScaledState {
            log_scale: -other.log_scale,
            psi: num.psi / wv.w,
            dpsi: num.dpsi / wv.w - num.psi * wv.dw / (wv.w * wv.w),
        }
    }
}

/// Companion solutions of the partner at the factorization energies:
/// `(α, 1/u)` for order 1; `(α1, u2/W)` and `(α2, u1/W)` for order 2.
pub fn injected_states(res: &DarbouxResult) -> Vec<InjectedState> {
    match res.order {
        1 => alloc::vec![InjectedState {
            energy: res.transforms[0].alpha,
            func: Arc::new(Reciprocal(res.transforms[0].func.clone())),
        }],
        _ => {
            let (t1, t2) = (&res.transforms[0], &res.transforms[1]);
            alloc::vec![
                InjectedState {
                    energy: t1.alpha,
                    func: Arc::new(OverWronskian { first: t1.clone(), second: t2.clone(), numerator_is_second: true }),
                },
                InjectedState {
                    energy: t2.alpha,
                    func: Arc::new(OverWronskian { first: t1.clone(), second: t2.clone(), numerator_is_second: false }),
                },
            ]
        }
    }
}

/// Relative eigen-residual `max |φ'' - (V1 - E)φ| / max |φ|` on `grid`, with
/// `φ''` from 5-point differencing of the exact `φ'`.
pub fn eigen_residual(res: &DarbouxResult, state: &InjectedState, grid: &[f64], h: f64) -> f64 {
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
        num = num.max((d2 - (res.potential(x) - state.energy) * c.psi).abs() * scale);
        den = den.max(c.psi.abs() * scale);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_cosh(gamma: f64) -> TransformationFunction {
        TransformationFunction::new(
            -gamma * gamma,
            Arc::new(FnSeed(move |x: f64| {
                // cosh γx = e^{γ|x|} (1 + e^{-2γ|x|}) / 2
                let ax = x.abs();
                let e = (-2.0 * gamma * ax).exp();
                ScaledState {
                    log_scale: gamma * ax,
                    psi: 0.5 * (1.0 + e),
                    dpsi: 0.5 * gamma * (1.0 - e) * x.signum(),
                }
            })),
            Provenance::Analytic("cosh".into()),
        )
    }

    #[test]
    fn free_cosh_gives_soliton() {
        let base = PotentialSpec::Free { period: 1.0 };
        let res = darboux1_on(&base, free_cosh(0.7), Some((-30.0, 30.0))).unwrap();
        for i in 0..301 {
            let x = -30.0 + 0.2 * i as f64;
            let want = -2.0 * 0.49 / (0.7 * x).cosh().powi(2);
            assert!((res.potential(x) - want).abs() < 1e-12, "x = {x}");
        }
        let st = &injected_states(&res)[0];
        let grid: Vec<f64> = (0..41).map(|i| -10.0 + 0.5 * i as f64).collect();
        assert!(eigen_residual(&res, st, &grid, 1e-3) < 1e-6);
    }

    #[test]
    fn first_order_intertwining_on_free_waves() {
        let base = PotentialSpec::Free { period: 1.0 };
        let res = darboux1_on(&base, free_cosh(0.5), Some((-20.0, 20.0))).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        let psi = SampledSolution {
            psi: grid.iter().map(|x| x.cos()).collect(),
            dpsi: grid.iter().map(|x| -x.sin()).collect(),
            ddpsi: grid.iter().map(|x| -x.cos()).collect(),
            grid,
            energy: 1.0,
        };
        let phi = transform_solution(&res, &psi).unwrap();
        // finite-difference check of φ'' = (V1 - 1)φ using exact φ'
        for i in 2..phi.grid.len() - 2 {
            let h = 0.05;
            let d2 = (phi.dpsi[i - 2] - 8.0 * phi.dpsi[i - 1] + 8.0 * phi.dpsi[i + 1] - phi.dpsi[i + 2]) / (12.0 * h);
            assert!((d2 - phi.ddpsi[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn singular_seed_is_rejected() {
        let base = PotentialSpec::Free { period: 1.0 };
        let sinh = TransformationFunction::new(
            -1.0,
            Arc::new(FnSeed(|x: f64| ScaledState::plain(x.sinh(), x.cosh()))),
            Provenance::Custom,
        );
        match darboux1_on(&base, sinh, Some((-5.0, 5.0))) {
            Err(Error::SingularTransform { nodes }) => {
                assert_eq!(nodes.len(), 1);
                assert!(nodes[0].abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_collision() {
        let base = PotentialSpec::Free { period: 1.0 };
        let res = darboux1_on(&base, free_cosh(1.0), Some((-5.0, 5.0))).unwrap();
        let grid = alloc::vec![0.0, 1.0];
        let psi = SampledSolution { grid, psi: alloc::vec![1.0; 2], dpsi: alloc::vec![0.0; 2], ddpsi: alloc::vec![0.0; 2], energy: -1.0 };
        assert!(matches!(transform_solution(&res, &psi), Err(Error::EnergyCollision { .. })));
    }

    #[test]
    fn normalization_is_checked() {
        let u = free_cosh(1.0);
        assert!(matches!(superpose_one(&u, &u, 1.0), Err(Error::Normalization)));
        let mut a = free_cosh(1.0);
        a.normalized_at = Some(0.0);
        let mut b = a.clone();
        b.normalized_at = Some(1.0);
        assert!(superpose_one(&a, &b, 1.0).is_err());
        assert!(superpose_one(&a, &a, -1.0).is_err());
        assert!(superpose_one(&a, &a, 2.0).is_ok());
    }
}
