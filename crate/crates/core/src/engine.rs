//! Potentials and the initial-value integrator for `-ψ'' + Vψ = Eψ`.
//!
//! The equation is integrated as the first-order system `(ψ, ψ')' = (ψ', (V-E)ψ)`
//! with an adaptive Dormand–Prince 5(4) pair. Integration intervals are split
//! at the known kinks of the potential so that no step straddles a point where
//! `V'` jumps.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::darboux::DarbouxResult;
use crate::error::{Error, Result};
use crate::specfun::{EllipticParameter, Jacobi};

/// Default local error tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-11;

/// `|ψ|` beyond which raw integration gives up.
pub const OVERFLOW_LIMIT: f64 = 1e280;

/// Maximal number of e-foldings a raw initial-value solve may cover.
pub const MAX_EFOLDS: f64 = 40.0;

/// Pointwise evaluable potential supplied by a caller.
pub trait PotentialFn: Send + Sync {
    fn eval(&self, x: f64) -> f64;
}

/// Sampled potential, interpolated by monotone-free cubic Hermite with
/// centered-difference slopes.
#[derive(Debug, Clone)]
pub struct SampledPotential {
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    period: Option<f64>,
}

impl SampledPotential {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, period: Option<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Domain("sampled potential needs matching grid and values"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample grid must be strictly increasing"));
        }
        if let Some(t) = period {
            if !(t > 0.0) || t > grid[grid.len() - 1] - grid[0] + 1e-12 {
                return Err(Error::Domain("period must be positive and covered by the grid"));
            }
        }
        let n = grid.len();
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            slopes.push((values[b] - values[a]) / (grid[b] - grid[a]));
        }
        Ok(Self { grid, values, slopes, period })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = match self.period {
            Some(t) => {
                let r = x - self.grid[0];
                self.grid[0] + r - t * (r / t).floor()
            }
            None => x,
        };
        let n = self.grid.len();
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, n - 1) - 1;
        let h = self.grid[i + 1] - self.grid[i];
        let t = ((x - self.grid[i]) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// Lamé potential `n(n+1) m sn²(x|m)` with cached theta constants.
#[derive(Debug, Clone, Copy)]
pub struct LamePotential {
    pub n: u32,
    jacobi: Jacobi,
}

impl LamePotential {
    pub fn new(n: u32, m: EllipticParameter) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("Lamé index n must be positive"));
        }
        Ok(Self { n, jacobi: Jacobi::new(m) })
    }

    pub fn m(&self) -> f64 {
        self.jacobi.parameter()
    }

    pub fn jacobi(&self) -> &Jacobi {
        &self.jacobi
    }

    pub fn period(&self) -> f64 {
        2.0 * self.jacobi.quarter_period()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n as f64;
        n * (n + 1.0) * self.m() * self.jacobi.sn2(x)
    }
}

/// Descriptor of a potential `V(x)`.
#[derive(Clone)]
pub enum PotentialSpec {
    /// `V ≡ 0`, regarded as periodic with the given period.
    Free { period: f64 },
    /// `-2γ0² sech²(γ0 x)`.
    OneSoliton { gamma0: f64 },
    /// Reflectionless well with bound states at `-γ2²` and `-γ1²`.
    TwoSoliton { gamma1: f64, gamma2: f64 },
    Lame(LamePotential),
    /// `base` restricted to `[-a, a)` and tiled with period `2a`.
    Collage { base: Box<PotentialSpec>, half_width: f64 },
    /// `base(x + delta)`.
    Shifted { base: Box<PotentialSpec>, delta: f64 },
    Sampled(Arc<SampledPotential>),
    Custom { func: Arc<dyn PotentialFn>, period: Option<f64> },
    /// Output of a Darboux transformation.
    Derived(Arc<DarbouxResult>),
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Free { period } => write!(f, "Free(T={period})"),
            Self::OneSoliton { gamma0 } => write!(f, "OneSoliton({gamma0})"),
            Self::TwoSoliton { gamma1, gamma2 } => write!(f, "TwoSoliton({gamma1}, {gamma2})"),
            Self::Lame(l) => write!(f, "Lame(n={}, m={})", l.n, l.m()),
            Self::Collage { base, half_width } => write!(f, "Collage({base:?}, a={half_width})"),
            Self::Shifted { base, delta } => write!(f, "Shifted({base:?}, {delta})"),
            Self::Sampled(s) => write!(f, "Sampled({} points)", s.grid.len()),
            Self::Custom { period, .. } => write!(f, "Custom(T={period:?})"),
            Self::Derived(d) => write!(f, "Derived(order {} over {:?})", d.order(), d.base()),
        }
    }
}

/// `-2γ² sech²(γx)`
pub(crate) fn one_soliton(gamma0: f64, x: f64) -> f64 {
    let s = 1.0 / (gamma0 * x).cosh();
    -2.0 * gamma0 * gamma0 * s * s
}

/// The symmetric 2-soliton well written through `tanh`/`sech` only, which
/// is smooth at the origin and free of overflow at large `|x|`.
pub(crate) fn two_soliton(g1: f64, g2: f64, x: f64) -> f64 {
    let (t1, t2) = ((g1 * x).tanh(), (g2 * x).tanh());
    let s1 = 1.0 - t1 * t1;
    let s2 = 1.0 - t2 * t2;
    let den = g1 * t1 * t2 - g2;
    2.0 * (g1 * g1 - g2 * g2) * (g1 * g1 * s1 * t2 * t2 + g2 * g2 * s2) / (den * den)
}

impl PotentialSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Free { .. } => 0.0,
            Self::OneSoliton { gamma0 } => one_soliton(*gamma0, x),
            Self::TwoSoliton { gamma1, gamma2 } => two_soliton(*gamma1, *gamma2, x),
            Self::Lame(l) => l.eval(x),
            Self::Collage { base, half_width } => base.eval(wrap(x, *half_width)),
            Self::Shifted { base, delta } => base.eval(x + delta),
            Self::Sampled(s) => s.eval(x),
            Self::Custom { func, .. } => func.eval(x),
            Self::Derived(d) => d.potential(x),
        }
    }

    /// Period, when the potential is known to be periodic.
    pub fn period(&self) -> Option<f64> {
        match self {
            Self::Free { period } => Some(*period),
            Self::OneSoliton { .. } | Self::TwoSoliton { .. } => None,
            Self::Lame(l) => Some(l.period()),
            Self::Collage { half_width, .. } => Some(2.0 * half_width),
            Self::Shifted { base, .. } => base.period(),
            Self::Sampled(s) => s.period,
            Self::Custom { period, .. } => *period,
            Self::Derived(d) => d.period(),
        }
    }

    /// Points in `[lo, hi]` where `V'` may jump, in increasing order.
    pub fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        match self {
            Self::Collage { base, half_width } => {
                let a = *half_width;
                let mut out = Vec::new();
                let mut k = ((lo - a) / (2.0 * a)).ceil();
                loop {
                    let s = (2.0 * k + 1.0) * a;
                    if s > hi {
                        break;
                    }
                    if s >= lo {
                        out.push(s);
                    }
                    k += 1.0;
                }
                // kinks of the tiled fragment itself
                for kb in base.kinks(-a, a) {
                    let mut j = ((lo - kb) / (2.0 * a)).ceil();
                    while kb + 2.0 * a * j <= hi {
                        out.push(kb + 2.0 * a * j);
                        j += 1.0;
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
            Self::Shifted { base, delta } => {
                base.kinks(lo + delta, hi + delta).into_iter().map(|k| k - delta).collect()
            }
            Self::Derived(d) => d.base().kinks(lo, hi),
            _ => Vec::new(),
        }
    }

    /// Convenience constructor for `n(n+1) m sn²(x|m)`.
    pub fn lame(n: u32, m: f64) -> Result<Self> {
        Ok(Self::Lame(LamePotential::new(n, EllipticParameter::new(m)?)?))
    }
}

/// Reduce `x` into `[-a, a)`.
pub(crate) fn wrap(x: f64, a: f64) -> f64 {
    x - 2.0 * a * ((x + a) / (2.0 * a)).floor()
}

/// Value and derivative of a solution at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub psi: f64,
    pub dpsi: f64,
}

impl StateVector {
    pub fn new(psi: f64, dpsi: f64) -> Self {
        Self { psi, dpsi }
    }

    pub fn norm(&self) -> f64 {
        self.psi.hypot(self.dpsi)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.psi, c * self.dpsi)
    }
}

/// `exp(log_scale) · (psi, dpsi)`: a solution value with its exponential
/// growth split off so that products and quotients never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub log_scale: f64,
    pub psi: f64,
    pub dpsi: f64,
}

impl ScaledState {
    pub fn plain(psi: f64, dpsi: f64) -> Self {
        Self { log_scale: 0.0, psi, dpsi }
    }

    /// The unscaled value; may overflow to infinity.
    pub fn value(&self) -> StateVector {
        let s = self.log_scale.exp();
        StateVector::new(s * self.psi, s * self.dpsi)
    }

    /// Log-derivative `ψ'/ψ`.
    pub fn log_derivative(&self) -> f64 {
        self.dpsi / self.psi
    }
}

/// The one-step propagator `(ψ, ψ')(x0) ↦ (ψ, ψ')(x1)` at energy `E`.
///
/// Columns are the solutions with initial data `(1, 0)` and `(0, 1)` at `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
    pub x0: f64,
    pub x1: f64,
    pub energy: f64,
}

impl TransferMatrix {
    pub fn identity(x: f64, energy: f64) -> Self {
        Self { b11: 1.0, b12: 0.0, b21: 0.0, b22: 1.0, x0: x, x1: x, energy }
    }

    pub fn det(&self) -> f64 {
        self.b11 * self.b22 - self.b12 * self.b21
    }

    pub fn trace(&self) -> f64 {
        self.b11 + self.b22
    }

    pub fn apply(&self, s: StateVector) -> StateVector {
        StateVector::new(
            self.b11 * s.psi + self.b12 * s.dpsi,
            self.b21 * s.psi + self.b22 * s.dpsi,
        )
    }

    /// `self · first`: propagate over `first`, then over `self`.
    pub fn after(&self, first: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            b11: self.b11 * first.b11 + self.b12 * first.b21,
            b12: self.b11 * first.b12 + self.b12 * first.b22,
            b21: self.b21 * first.b11 + self.b22 * first.b21,
            b22: self.b21 * first.b12 + self.b22 * first.b22,
            x0: first.x0,
            x1: self.x1,
            energy: self.energy,
        }
    }

    /// Matrix entries as `[[b11, b12], [b21, b22]]`.
    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.b11, self.b12], [self.b21, self.b22]]
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Cols<const C: usize> = [[f64; 2]; C];

#[inline]
fn deriv<const C: usize>(q: f64, y: &Cols<C>) -> Cols<C> {
    let mut d = [[0.0; 2]; C];
    for c in 0..C {
        d[c] = [y[c][1], q * y[c][0]];
    }
    d
}

#[inline]
fn comb<const C: usize>(y: &Cols<C>, h: f64, terms: &[(f64, &Cols<C>)]) -> Cols<C> {
    let mut out = *y;
    for c in 0..C {
        for i in 0..2 {
            let mut acc = 0.0;
            for (w, k) in terms {
                acc += w * k[c][i];
            }
            out[c][i] += h * acc;
        }
    }
    out
}

/// Adaptive integrator for `C` solutions sharing one potential and energy.
struct Stepper<'a> {
    v: &'a PotentialSpec,
    e: f64,
    tol: f64,
    /// Last accepted step size, carried between calls.
    h: f64,
}

impl<'a> Stepper<'a> {
    fn new(v: &'a PotentialSpec, e: f64, tol: f64) -> Self {
        Self { v, e, tol, h: 0.0 }
    }

    fn q(&self, x: f64) -> f64 {
        self.v.eval(x) - self.e
    }

    /// Integrate across `[x0, x1]`, splitting at kinks.
    fn run<const C: usize>(&mut self, x0: f64, x1: f64, y: Cols<C>) -> Result<Cols<C>> {
        let mut pts = self.v.kinks(x0, x1);
        pts.retain(|&k| k > x0.min(x1) && k < x0.max(x1));
        if x1 < x0 {
            pts.reverse();
        }
        pts.push(x1);
        let mut y = y;
        let mut a = x0;
        for b in pts {
            y = self.smooth(a, b, y)?;
            a = b;
        }
        Ok(y)
    }

    /// Integrate where `V` is smooth.
    fn smooth<const C: usize>(&mut self, x0: f64, x1: f64, mut y: Cols<C>) -> Result<Cols<C>> {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(y);
        }
        let dir = span.signum();
        let mut h = if self.h != 0.0 {
            self.h.abs()
        } else {
            let q0 = self.q(x0).abs();
            (0.1 / (1.0 + q0.sqrt())).min(span.abs())
        };
        let mut x = x0;
        let mut k1 = deriv(self.q(x), &y);
        loop {
            let remaining = (x1 - x) * dir;
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            let k2 = deriv(self.q(x + C2 * hs), &comb(&y, hs, &[(A21, &k1)]));
            let k3 = deriv(self.q(x + C3 * hs), &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = deriv(
                self.q(x + C4 * hs),
                &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = deriv(
                self.q(x + C5 * hs),
                &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let xe = if last { x1 } else { x + hs };
            let k6 = deriv(
                self.q(xe),
                &comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let yn = comb(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = deriv(self.q(xe), &yn);
            let mut err: f64 = 0.0;
            for c in 0..C {
                let scale = 1.0 + y[c][0].abs().max(y[c][1].abs()).max(yn[c][0].abs().max(yn[c][1].abs()));
                for i in 0..2 {
                    let e = hs
                        * (E1 * k1[c][i] + E3 * k3[c][i] + E4 * k4[c][i] + E5 * k5[c][i]
                            + E6 * k6[c][i]
                            + E7 * k7[c][i]);
                    err = err.max(e.abs() / (self.tol * scale));
                }
            }
            if !err.is_finite() {
                if h < 1e-12 * (1.0 + x.abs()) {
                    return Err(Error::Integration { x });
                }
                h *= 0.1;
                continue;
            }
            if err <= 1.0 {
                x = xe;
                y = yn;
                k1 = k7;
                for col in y.iter() {
                    if col[0].abs() > OVERFLOW_LIMIT || col[1].abs() > OVERFLOW_LIMIT {
                        return Err(Error::Overflow("solution exceeded 1e280 during integration"));
                    }
                }
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                if !last {
                    h *= grow;
                } else {
                    self.h = h.max(h * grow.min(1.0));
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-12 * (1.0 + x.abs()) {
                    return Err(Error::Integration { x });
                }
            }
        }
        Ok(y)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-13..=1e-6).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Domain("integration tolerance must lie in [1e-13, 1e-6]"))
    }
}

/// Transfer matrix from `x0` to `x1` at energy `e`. Backward propagation
/// (`x1 < x0`) is allowed.
pub fn transfer_matrix(v: &PotentialSpec, e: f64, x0: f64, x1: f64, tol: f64) -> Result<TransferMatrix> {
    check_tol(tol)?;
    if !(x0.is_finite() && x1.is_finite() && e.is_finite()) {
        return Err(Error::Domain("non-finite interval or energy"));
    }
    let mut st = Stepper::new(v, e, tol);
    let y = st.run(x0, x1, [[1.0, 0.0], [0.0, 1.0]])?;
    Ok(TransferMatrix {
        b11: y[0][0],
        b12: y[1][0],
        b21: y[0][1],
        b22: y[1][1],
        x0,
        x1,
        energy: e,
    })
}

/// Propagate a single state from `x0` to `x1`.
pub fn propagate(v: &PotentialSpec, e: f64, x0: f64, x1: f64, init: StateVector, tol: f64) -> Result<StateVector> {
    check_tol(tol)?;
    let mut st = Stepper::new(v, e, tol);
    let y = st.run(x0, x1, [[init.psi, init.dpsi]])?;
    Ok(StateVector::new(y[0][0], y[0][1]))
}

/// A solution sampled on a grid, evaluable in between by quintic Hermite
/// interpolation (`ψ''` is supplied by the equation itself).
#[derive(Debug, Clone)]
pub struct SampledSolution {
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub ddpsi: Vec<f64>,
    pub energy: f64,
}

impl SampledSolution {
    pub fn window(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Interpolated `(ψ, ψ')` at `x`; `x` is clamped into the window.
    pub fn eval(&self, x: f64) -> StateVector {
        let n = self.grid.len();
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, n - 1) - 1;
        let h = self.grid[i + 1] - self.grid[i];
        let t = ((x - self.grid[i]) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let (f0, d0, s0) = (self.psi[i], self.dpsi[i] * h, self.ddpsi[i] * h * h);
        let (f1, d1, s1) = (self.psi[i + 1], self.dpsi[i + 1] * h, self.ddpsi[i + 1] * h * h);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let g0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let g1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let g2 = 0.5 * t3 - t4 + 0.5 * t5;
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
        let dg1 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let dg2 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
        let psi = h0 * f0 + h1 * d0 + h2 * s0 + g0 * f1 + g1 * d1 + g2 * s1;
        let dpsi = (dh0 * f0 + dh1 * d0 + dh2 * s0 - dh0 * f1 + dg1 * d1 + dg2 * s1) / h;
        StateVector::new(psi, dpsi)
    }

    /// Wronskian `ψ φ' - ψ' φ` with another solution at each common grid point.
    pub fn wronskian_with(&self, other: &SampledSolution) -> Vec<f64> {
        self.psi
            .iter()
            .zip(&self.dpsi)
            .zip(other.psi.iter().zip(&other.dpsi))
            .map(|((a, da), (b, db))| a * db - da * b)
            .collect()
    }
}

/// Integrate from `grid[start]`, where the state is `init`, to every other
/// grid point. The grid must be strictly increasing.
pub fn solve_on_grid(
    v: &PotentialSpec,
    e: f64,
    grid: Vec<f64>,
    start: usize,
    init: StateVector,
    tol: f64,
) -> Result<SampledSolution> {
    check_tol(tol)?;
    let n = grid.len();
    if n < 2 || start >= n {
        return Err(Error::Domain("grid too short or start index out of range"));
    }
    let mut psi = alloc::vec![0.0; n];
    let mut dpsi = alloc::vec![0.0; n];
    psi[start] = init.psi;
    dpsi[start] = init.dpsi;
    let mut fwd = Stepper::new(v, e, tol);
    let mut y = [[init.psi, init.dpsi]];
    for i in start + 1..n {
        y = fwd.run(grid[i - 1], grid[i], y)?;
        psi[i] = y[0][0];
        dpsi[i] = y[0][1];
    }
    let mut bwd = Stepper::new(v, e, tol);
    let mut y = [[init.psi, init.dpsi]];
    for i in (0..start).rev() {
        y = bwd.run(grid[i + 1], grid[i], y)?;
        psi[i] = y[0][0];
        dpsi[i] = y[0][1];
    }
    let ddpsi = grid.iter().zip(&psi).map(|(&x, &p)| (v.eval(x) - e) * p).collect();
    Ok(SampledSolution { grid, psi, dpsi, ddpsi, energy: e })
}

/// Uniform grid over `[lo, hi]` with at least `per_unit` cells per unit
/// length, with `extra` points (kinks, the start point) merged in.
pub(crate) fn build_grid(lo: f64, hi: f64, cells: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    g[cells] = hi;
    let min_gap = 1e-9 * (hi - lo) / cells as f64;
    for &x in extra {
        if x > lo && x < hi {
            let i = g.partition_point(|&p| p < x);
            if (g[i] - x).abs() > min_gap && (x - g[i - 1]).abs() > min_gap {
                g.insert(i, x);
            }
        }
    }
    g
}

/// Estimated number of e-foldings `∫ sqrt(max(V-E, 0)) dx` from `x0` to
/// either end of the window.
fn efolds(v: &PotentialSpec, e: f64, x0: f64, lo: f64, hi: f64) -> f64 {
    let piece = |a: f64, b: f64| -> f64 {
        let n = ((b - a).abs() * 32.0).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| (v.eval(a + (i as f64 + 0.5) * h) - e).max(0.0).sqrt() * h.abs())
            .sum()
    };
    piece(x0, lo).max(piece(x0, hi))
}

/// Solve the initial-value problem with data `init` at `x0` and sample the
/// solution over `window` with `samples_per_unit` cells per unit length.
pub fn solve_iv(
    v: &PotentialSpec,
    e: f64,
    x0: f64,
    init: StateVector,
    window: (f64, f64),
    samples_per_unit: usize,
) -> Result<SampledSolution> {
    let (lo, hi) = window;
    if !(lo < hi) || x0 < lo || x0 > hi {
        return Err(Error::Domain("window must be increasing and contain x0"));
    }
    if samples_per_unit < 16 {
        return Err(Error::Domain("at least 16 samples per unit length are required"));
    }
    if efolds(v, e, x0, lo, hi) > MAX_EFOLDS {
        return Err(Error::Overflow("window spans more than 40 e-folding lengths; use Floquet extension"));
    }
    let cells = ((hi - lo) * samples_per_unit as f64).ceil() as usize;
    let mut extra = v.kinks(lo, hi);
    extra.push(x0);
    let grid = build_grid(lo, hi, cells, &extra);
    let start = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x0).abs().total_cmp(&(b.1 - x0).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut g = grid;
    g[start] = x0;
    solve_on_grid(v, e, g, start, init, DEFAULT_TOL)
}
