//! Analytic potentials and their closed-form companions: soliton wells and
//! their seeds, collage periodization, the collage Lyapunov function, Lamé
//! Bloch functions in σ/ζ form and the 2-soliton displacement system.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::darboux::{self, FnSeed, Provenance, SeedFunction, TransformationFunction};
use crate::engine::{PotentialSpec, ScaledState};
use crate::error::{Error, Result};
use crate::roots;
use crate::specfun::{self, EllipticParameter, PSegment, WeierstrassLattice};

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

/// `-2γ0² sech²(γ0 x)`.
pub fn make_one_soliton(gamma0: f64) -> Result<PotentialSpec> {
    if !positive(gamma0) {
        return Err(Error::Domain("gamma0 must be positive"));
    }
    Ok(PotentialSpec::OneSoliton { gamma0 })
}

/// The symmetric 2-soliton well with levels `-γ2² < -γ1²`.
pub fn make_two_soliton(gamma1: f64, gamma2: f64) -> Result<PotentialSpec> {
    if !(positive(gamma1) && positive(gamma2) && gamma1 < gamma2) {
        return Err(Error::Domain("need 0 < gamma1 < gamma2"));
    }
    Ok(PotentialSpec::TwoSoliton { gamma1, gamma2 })
}

/// `n(n+1) m sn²(x|m)`.
pub fn make_lame(n: u32, m: f64) -> Result<PotentialSpec> {
    PotentialSpec::lame(n, m)
}

/// `base` cut to `[-a, a)` and tiled with period `2a`.
pub fn periodize(base: PotentialSpec, a: f64) -> Result<PotentialSpec> {
    if !positive(a) {
        return Err(Error::Domain("half width must be positive"));
    }
    Ok(PotentialSpec::Collage { base: Box::new(base), half_width: a })
}

/// Which closed-form shift the 1-soliton seed uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftFlavor {
    /// Real `δ1 = artanh(γ0/γ1)/γ0`; needs `γ1 > γ0`.
    RealShift,
    /// `δ1 = δ + iπ/(2γ0)`, giving the real function
    /// `e^{-γ1 x} sinh γ0(x+δ)/cosh γ0 x`; needs `0 < γ1 < γ0`.
    ComplexHalfPeriod,
}

/// `e^{-γ1 x} f(γ0(x+δ)) / cosh γ0 x` with `f = cosh` or `sinh`, scaled.
#[derive(Debug, Clone, Copy)]
struct SolitonSeed {
    gamma0: f64,
    gamma1: f64,
    delta: f64,
    hyperbolic_sine: bool,
}

/// `cosh y = e^{|y|} c(y)`, `sinh y = e^{|y|} s(y)`.
fn split_cosh_sinh(y: f64) -> (f64, f64, f64) {
    let e = (-2.0 * y.abs()).exp();
    (y.abs(), 0.5 * (1.0 + e), 0.5 * (1.0 - e) * y.signum())
}

impl SeedFunction for SolitonSeed {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let g = self.gamma0;
        let (ly, cy, sy) = split_cosh_sinh(g * (x + self.delta));
        let (lz, cz, _) = split_cosh_sinh(g * x);
        let th = (g * x).tanh();
        let (f, df) = if self.hyperbolic_sine { (sy, cy) } else { (cy, sy) };
        let psi = f / cz;
        let dpsi = (g * df - g * f * th - self.gamma1 * f) / cz;
        ScaledState { log_scale: ly - lz - self.gamma1 * x, psi, dpsi }
    }
}

/// Shift of the real 1-soliton seed: `artanh(γ0/γ1)/γ0`.
pub fn soliton1_shift(gamma0: f64, gamma1: f64) -> Result<f64> {
    if !(positive(gamma0) && positive(gamma1) && gamma1 > gamma0) {
        return Err(Error::Domain("real shift needs gamma1 > gamma0 > 0"));
    }
    Ok((gamma0 / gamma1).atanh() / gamma0)
}

/// Real part of the complex half-period shift: `artanh(γ1/γ0)/γ0`.
pub fn soliton1_complex_shift(gamma0: f64, gamma1: f64) -> Result<f64> {
    if !(positive(gamma0) && positive(gamma1) && gamma1 < gamma0) {
        return Err(Error::Domain("complex half-period shift needs 0 < gamma1 < gamma0"));
    }
    Ok((gamma1 / gamma0).atanh() / gamma0)
}

/// Solution of the 1-soliton well at `α = -γ1²`, displaced by a real or a
/// complex half-period shift.
pub fn soliton1_bloch_seed(gamma0: f64, gamma1: f64, flavor: ShiftFlavor) -> Result<TransformationFunction> {
    let (delta, sine, name) = match flavor {
        ShiftFlavor::RealShift => (soliton1_shift(gamma0, gamma1)?, false, "soliton1-real-shift"),
        ShiftFlavor::ComplexHalfPeriod => (soliton1_complex_shift(gamma0, gamma1)?, true, "soliton1-complex-shift"),
    };
    let seed = SolitonSeed { gamma0, gamma1, delta, hyperbolic_sine: sine };
    Ok(TransformationFunction::new(-gamma1 * gamma1, Arc::new(seed), Provenance::Analytic(String::from(name))))
}

/// Lyapunov function `D(E)` of the 1-soliton collage with half width `a`.
///
/// For `E = k² > 0` this is the closed form in `k`; `E < 0` uses the
/// continuation `k = iκ` and `E = 0` the limit `sin(2ka)/k → 2a`.
pub fn lyapunov_soliton1_analytic(e: f64, a: f64, gamma0: f64) -> Result<f64> {
    if !(positive(a) && positive(gamma0) && e.is_finite()) {
        return Err(Error::Domain("need finite E and positive a, gamma0"));
    }
    let g2 = gamma0 * gamma0;
    let den = e + g2;
    if den == 0.0 {
        return Err(Error::Domain("E = -gamma0^2 is a removable singularity of the closed form"));
    }
    let w0 = gamma0 * (gamma0 * a).tanh();
    // sinc = sin(2ka)/k and cs = cos(2ka), continued through E = 0
    let (sinc, cs) = if e > 0.0 {
        let k = e.sqrt();
        ((2.0 * k * a).sin() / k, (2.0 * k * a).cos())
    } else if e < 0.0 {
        let q = (-e).sqrt();
        ((2.0 * q * a).sinh() / q, (2.0 * q * a).cosh())
    } else {
        (2.0 * a, 1.0)
    };
    let half = w0 * ((w0 * w0 - 2.0 * e - g2) / den) * sinc + (1.0 - 2.0 * w0 * w0 / den) * cs;
    Ok(2.0 * half)
}

/// Parameters of the analytic `n = 1` Lamé Bloch functions.
#[derive(Debug, Clone, Copy)]
pub struct LameBlochParams {
    pub n: u32,
    pub m: EllipticParameter,
    /// Displacement parameter with `α = 2(m+1)/3 - ℘(a)`.
    pub a: Complex64,
    /// Normalization point; chosen automatically when `None`.
    pub x0: Option<f64>,
    pub alpha: f64,
}

impl LameBlochParams {
    /// Invert `α = 2(m+1)/3 - ℘(a)` on the segment belonging to the gap of `α`:
    /// real `a ∈ (0, ω)` below `E0 = m`, `a ∈ ω' + (0, ω)` in `(1, 1+m)`.
    pub fn from_alpha(m: f64, alpha: f64) -> Result<Self> {
        let mp = EllipticParameter::new(m)?;
        let lat = WeierstrassLattice::from_parameter(mp);
        let target = 2.0 * (m + 1.0) / 3.0 - alpha;
        let seg = if alpha < m {
            PSegment::Lowest
        } else if alpha > 1.0 && alpha < 1.0 + m {
            PSegment::Gap(1)
        } else {
            return Err(Error::Domain("alpha must lie in a gap of the n = 1 Lamé potential"));
        };
        let a = specfun::invert_p_on_gap_segment(target, &lat, seg)?;
        Ok(Self { n: 1, m: mp, a, x0: None, alpha })
    }
}

/// `σ(x ± a + ω')/σ(x + ω') e^{∓ζ(a)(x - x0)}`, normalized to 1 at `x0`.
#[derive(Debug, Clone, Copy)]
pub struct LameBloch {
    lat: WeierstrassLattice,
    /// Signed displacement parameter (`±a`).
    shift: Complex64,
    zeta: Complex64,
    x0: f64,
    log_norm: Complex64,
    beta: f64,
}

impl LameBloch {
    fn raw(&self, x: f64) -> (Complex64, Complex64, Complex64) {
        let wp = Complex64::new(0.0, self.lat.omega_prime_im);
        let p1 = self.lat.sigma_parts(Complex64::new(x, 0.0) + self.shift + wp);
        let p0 = self.lat.sigma_parts(Complex64::new(x, 0.0) + wp);
        let ratio = p1.value / p0.value;
        let dratio = p1.deriv / p0.value - p1.value * p0.deriv / (p0.value * p0.value);
        let c = p1.log_factor - p0.log_factor - self.zeta * (x - self.x0);
        (c, ratio, dratio - self.zeta * ratio)
    }

    /// Complex value and derivative, without the real projection.
    pub fn eval_complex(&self, x: f64) -> (Complex64, Complex64) {
        let (c, r, dr) = self.raw(x);
        let f = (c - self.log_norm).exp();
        (f * r, f * dr)
    }

    /// Multiplier `u(x + 2ω) = β u(x)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Signed displacement parameter.
    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    fn split(&self, x: f64) -> (f64, Complex64, Complex64) {
        let (c, r, dr) = self.raw(x);
        let c = c - self.log_norm;
        let ph = Complex64::new(0.0, c.im).exp();
        (c.re, ph * r, ph * dr)
    }
}

impl SeedFunction for LameBloch {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let (ls, v, dv) = self.split(x);
        ScaledState { log_scale: ls, psi: v.re, dpsi: dv.re }
    }

    fn multiplier(&self) -> Option<f64> {
        Some(self.beta)
    }
}

/// The analytic pair, ordered `(u^β, u^{1/β})` with `|β| > 1`.
#[derive(Debug, Clone, Copy)]
pub struct LameBlochPair {
    pub beta_fn: LameBloch,
    pub inverse_fn: LameBloch,
    pub x0: f64,
    pub beta: f64,
    /// `δ` with `u^β(x) u^{1/β}(x + δ)` constant; real below the spectrum.
    pub delta: Complex64,
}

/// Analytic Lamé (`n = 1`) Bloch functions at the energy of `p`.
pub fn lame_bloch_pair(p: &LameBlochParams) -> Result<LameBlochPair> {
    if p.n != 1 {
        return Err(Error::Domain("closed-form Bloch functions exist for n = 1 only"));
    }
    let lat = WeierstrassLattice::from_parameter(p.m);
    let t = 2.0 * lat.omega;
    let zeta_a = lat.zeta(p.a)?;
    let make = |s: f64, x0: f64| -> Result<LameBloch> {
        let shift = p.a * s;
        let zeta = zeta_a * s;
        let log_beta = shift * (2.0 * lat.eta()) - zeta * (2.0 * lat.omega);
        let beta = log_beta.exp();
        if beta.im.abs() > 1e-8 * beta.norm() {
            return Err(Error::Reality { imag: beta.im });
        }
        let mut u = LameBloch { lat, shift, zeta, x0, log_norm: Complex64::new(0.0, 0.0), beta: beta.re };
        let (c, r, _) = u.raw(x0);
        if r.norm() == 0.0 {
            return Err(Error::Normalization);
        }
        u.log_norm = c + r.ln();
        Ok(u)
    };
    let x0 = match p.x0 {
        Some(x) => x,
        None => choose_x0(t, |x0| Ok((make(1.0, x0)?, make(-1.0, x0)?)))?,
    };
    let (up, um) = (make(1.0, x0)?, make(-1.0, x0)?);
    check_reality(&up, t)?;
    check_reality(&um, t)?;
    let (beta_fn, inverse_fn, delta) = if up.beta.abs() >= 1.0 { (up, um, p.a) } else { (um, up, -p.a) };
    Ok(LameBlochPair { beta_fn, inverse_fn, x0, beta: beta_fn.beta, delta })
}

/// First `x0 = 0.1T + 0.05kT` where both quotients are well away from zero.
fn choose_x0<F>(t: f64, make: F) -> Result<f64>
where
    F: Fn(f64) -> Result<(LameBloch, LameBloch)>,
{
    let (up, um) = make(0.0)?;
    let mag = |u: &LameBloch, x: f64| {
        let (c, r, _) = u.raw(x);
        (c.re + r.norm().ln(), r)
    };
    let cands: Vec<f64> = (0..18).map(|k| (0.1 + 0.05 * k as f64) * t).collect();
    let mut peak = [f64::NEG_INFINITY; 2];
    for &x in &cands {
        peak[0] = peak[0].max(mag(&up, x).0);
        peak[1] = peak[1].max(mag(&um, x).0);
    }
    for &x in &cands {
        let ok = [(&up, 0), (&um, 1)].iter().all(|(u, i)| mag(u, x).0 - peak[*i] > (1e-2f64).ln());
        if ok {
            return Ok(x);
        }
    }
    Err(Error::Normalization)
}

fn check_reality(u: &LameBloch, t: f64) -> Result<()> {
    let mut re: f64 = 0.0;
    let mut im: f64 = 0.0;
    for k in 0..64 {
        let x = u.x0 + t * k as f64 / 64.0;
        let (ls, v, _) = u.split(x);
        let s = ls.exp();
        re = re.max(v.re.abs() * s);
        im = im.max(v.im.abs() * s);
    }
    if im > 1e-8 * re {
        return Err(Error::Reality { imag: im / re });
    }
    Ok(())
}

/// The pair as transformation functions, normalized to 1 at the common `x0`.
pub fn lame_bloch_analytic(p: &LameBlochParams) -> Result<(TransformationFunction, TransformationFunction)> {
    let pair = lame_bloch_pair(p)?;
    let wrap = |u: LameBloch| TransformationFunction {
        alpha: p.alpha,
        func: Arc::new(u),
        provenance: Provenance::Analytic(String::from("lame-sigma")),
        normalized_at: Some(pair.x0),
    };
    Ok((wrap(pair.beta_fn), wrap(pair.inverse_fn)))
}

/// Region of `(γ3, γ4)` relative to `γ1 < γ2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Both below `γ1`.
    Omega1,
    /// Both in `(γ1, γ2)`.
    Omega2,
    /// Both above `γ2`.
    Omega3,
    None,
}

/// The two displacement formulas of the 2-soliton well for seeds
/// `e^{-γ3 x}`, `e^{-γ4 x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementSystem {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Positive root of `Γ²`; NaN where `Γ² < 0`.
    pub gamma_big: f64,
    /// Shift implied by the `γ1` factor; NaN outside its domain.
    pub delta_a: f64,
    /// Shift implied by the `γ2` factor; NaN outside its domain.
    pub delta_b: f64,
    pub region: Region,
}

/// `artanh(γ(γ3+γ4)/(γ² + γ3γ4))/γ`.
fn delta_formula(g: f64, g3: f64, g4: f64) -> f64 {
    let arg = g * (g3 + g4) / (g * g + g3 * g4);
    if arg.abs() < 1.0 {
        arg.atanh() / g
    } else {
        f64::NAN
    }
}

pub fn two_soliton_displacement(gamma1: f64, gamma2: f64, gamma3: f64, gamma4: f64) -> Result<DisplacementSystem> {
    if !(positive(gamma1) && positive(gamma2) && gamma1 < gamma2 && positive(gamma3) && positive(gamma4)) {
        return Err(Error::Domain("need 0 < gamma1 < gamma2 and positive gamma3, gamma4"));
    }
    let sq = |x: f64| x * x;
    let g2big = (sq(gamma1) - sq(gamma3)) * (sq(gamma2) - sq(gamma3)) * (sq(gamma1) - sq(gamma4)) * (sq(gamma2) - sq(gamma4));
    let inside = |g: f64| g > gamma1 && g < gamma2;
    let region = if gamma3 < gamma1 && gamma4 < gamma1 {
        Region::Omega1
    } else if inside(gamma3) && inside(gamma4) {
        Region::Omega2
    } else if gamma3 > gamma2 && gamma4 > gamma2 {
        Region::Omega3
    } else {
        Region::None
    };
    Ok(DisplacementSystem {
        gamma1,
        gamma2,
        gamma3,
        gamma4,
        gamma_big: if g2big >= 0.0 { g2big.sqrt() } else { f64::NAN },
        delta_a: delta_formula(gamma1, gamma3, gamma4),
        delta_b: delta_formula(gamma2, gamma3, gamma4),
        region,
    })
}

/// A point of the intersection curve on the slice `γ3 = seed_gamma3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistentDisplacement {
    pub gamma3: f64,
    pub gamma4: f64,
    pub delta: f64,
    pub mismatch: f64,
}

/// Solve `δA(γ3, γ4) = δB(γ3, γ4)` for `γ4 ∈ Ω2` at fixed `γ3`.
pub fn find_consistent_displacement(gamma1: f64, gamma2: f64, seed_gamma3: f64) -> Result<ConsistentDisplacement> {
    let g3 = seed_gamma3;
    if !(positive(gamma1) && gamma1 < gamma2) {
        return Err(Error::Domain("need 0 < gamma1 < gamma2"));
    }
    if !(g3 > gamma1 && g3 < gamma2) {
        return Err(Error::Domain("gamma3 must lie in (gamma1, gamma2)"));
    }
    let f = |g4: f64| delta_formula(gamma1, g3, g4) - delta_formula(gamma2, g3, g4);
    // stay clear of the region boundary and of the degenerate γ4 = γ3
    let w = gamma2 - gamma1;
    let n = 2000;
    let pts: Vec<f64> = (1..n).map(|i| gamma1 + w * i as f64 / n as f64).collect();
    let guard = 1e-3 * w;
    for p in pts.windows(2) {
        let (a, b) = (p[0], p[1]);
        if (a - g3).abs() < guard || (b - g3).abs() < guard {
            continue;
        }
        let (fa, fb) = (f(a), f(b));
        if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            let g4 = roots::brent(f, a, b, 1e-15).ok_or(Error::NoIntersection)?;
            let mismatch = f(g4).abs();
            return Ok(ConsistentDisplacement { gamma3: g3, gamma4: g4, delta: delta_formula(gamma1, g3, g4), mismatch });
        }
    }
    Err(Error::NoIntersection)
}

/// Scaled `cosh γx` at energy `-γ²` of the free particle.
fn free_cosh(gamma: f64) -> TransformationFunction {
    TransformationFunction::new(
        -gamma * gamma,
        Arc::new(FnSeed(move |x: f64| {
            let (l, c, s) = split_cosh_sinh(gamma * x);
            ScaledState { log_scale: l, psi: c, dpsi: gamma * s }
        })),
        Provenance::Analytic(String::from("cosh")),
    )
}

/// Scaled `sinh γx` at energy `-γ²` of the free particle.
fn free_sinh(gamma: f64) -> TransformationFunction {
    TransformationFunction::new(
        -gamma * gamma,
        Arc::new(FnSeed(move |x: f64| {
            let (l, c, s) = split_cosh_sinh(gamma * x);
            ScaledState { log_scale: l, psi: s, dpsi: gamma * c }
        })),
        Provenance::Analytic(String::from("sinh")),
    )
}

/// The 2-soliton well as the second-order transform of the free particle
/// with seeds `cosh γ1x`, `sinh γ2x`.
pub fn two_soliton_from_free(gamma1: f64, gamma2: f64) -> Result<darboux::DarbouxResult> {
    make_two_soliton(gamma1, gamma2)?;
    let free = PotentialSpec::Free { period: 1.0 };
    let len = 40.0 / gamma1;
    darboux::darboux2_on(&free, free_cosh(gamma1), free_sinh(gamma2), Some((-len, len)))
}

/// `W(u1, u2, e^{-γx}) / W(u1, u2)` for the 2-soliton well: a solution at
/// energy `-γ²`.
///
/// Both Wronskians are sums over `e^{(s1γ1 + s2γ2)x}`, `s1, s2 = ±1`, whose
/// coefficients factor into differences of the rates; evaluated this way the
/// quotient keeps full relative precision even for nearly equal rates.
#[derive(Debug, Clone, Copy)]
struct TwoSolitonSeed {
    gamma1: f64,
    gamma2: f64,
    gamma: f64,
}

impl TwoSolitonSeed {
    /// `(c_s, f_s, k_s)` per exponential: `W12 = Σ c_s e^{k_s x}/4` and
    /// `W123 = e^{-γx} Σ c_s f_s e^{k_s x}/4`.
    fn terms(&self) -> [(f64, f64, f64); 4] {
        let (g1, g2, g) = (self.gamma1, self.gamma2, self.gamma);
        let mut out = [(0.0, 0.0, 0.0); 4];
        for (i, (s1, s2)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
            out[i] = (s2 * (s2 * g2 - s1 * g1), (g + s1 * g1) * (g + s2 * g2), s1 * g1 + s2 * g2);
        }
        out
    }
}

impl SeedFunction for TwoSolitonSeed {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        let t = self.terms();
        let top = (self.gamma1 + self.gamma2) * x.abs();
        let w: [f64; 4] = core::array::from_fn(|i| (t[i].2 * x - top).exp());
        let (mut n, mut d) = (0.0, 0.0);
        for i in 0..4 {
            n += t[i].0 * t[i].1 * w[i];
            d += t[i].0 * w[i];
        }
        // N'D - ND' as a sum of products of differences
        let mut cross = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                cross += t[i].0 * t[j].0 * (t[i].1 - t[j].1) * (t[i].2 - t[j].2) * w[i] * w[j];
            }
        }
        let q = n / d;
        ScaledState { log_scale: -self.gamma * x, psi: q, dpsi: -self.gamma * q + cross / (d * d) }
    }
}

/// `W(u1, u2, e^{-γx}) / W(u1, u2)` for the 2-soliton well built from
/// `u1 = cosh γ1x`, `u2 = sinh γ2x`: a solution at energy `-γ²`.
pub fn two_soliton_seed(gamma1: f64, gamma2: f64, gamma: f64) -> Result<TransformationFunction> {
    make_two_soliton(gamma1, gamma2)?;
    if !positive(gamma) {
        return Err(Error::Domain("gamma must be positive"));
    }
    let seed = TwoSolitonSeed { gamma1, gamma2, gamma };
    Ok(TransformationFunction::new(-gamma * gamma, Arc::new(seed), Provenance::Analytic(String::from("two-soliton-seed"))))
}

/// 2-soliton well periodized between its two symmetric minima.
pub fn collage_two_soliton(gamma1: f64, gamma2: f64) -> Result<PotentialSpec> {
    let base = make_two_soliton(gamma1, gamma2)?;
    let a = two_soliton_minimum(gamma1, gamma2)?;
    periodize(base, a)
}

/// Position `a > 0` of the interior minimum of the 2-soliton well.
pub fn two_soliton_minimum(gamma1: f64, gamma2: f64) -> Result<f64> {
    let base = make_two_soliton(gamma1, gamma2)?;
    let hi = 40.0 / gamma1;
    let n = 4000;
    let h = hi / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| base.eval(h * i as f64)).collect();
    let i = (1..n)
        .filter(|&i| vals[i] < vals[i - 1] && vals[i] <= vals[i + 1])
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .ok_or(Error::Minimization)?;
    let (lo, hi) = (h * (i - 1) as f64, h * (i + 1) as f64);
    let (a, _) = roots::golden_min(|x| base.eval(x), lo, hi, 1e-11);
    // golden section stalls at ~sqrt(eps); polish on the stationarity condition
    let dv = |x: f64| {
        let s = 1e-5;
        (base.eval(x + s) - base.eval(x - s)) / (2.0 * s)
    };
    let w = 1e-5;
    Ok(roots::brent(dv, (a - w).max(lo), (a + w).min(hi), 1e-14).unwrap_or(a))
}
