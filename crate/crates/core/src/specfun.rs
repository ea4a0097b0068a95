//! Elliptic and Weierstrass functions for the Lamé family.
//!
//! Everything here is parametrized by the Jacobi parameter `m ∈ (0, 1)`. The
//! Weierstrass lattice has half-periods `ω = K(m)` and `ω' = iK'(m)` and is
//! calibrated so that
//!
//! ```text
//! ℘(x + ω') = e3 + m sn²(x|m),   e1 = (2-m)/3, e2 = (2m-1)/3, e3 = -(1+m)/3,
//! ```
//!
//! which makes `2m sn²(x|m) = 2℘(x + ω') + 2(1+m)/3` and relates the factorization
//! energy of the `n = 1` Lamé Bloch functions to their parameter `a` through
//! `α = 2(m+1)/3 - ℘(a)`.
//!
//! All evaluations go through Jacobi theta series in the nome
//! `q = exp(-πK'/K)`, after reducing the argument into the fundamental cell.

use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::roots;

/// Complex argument of the Weierstrass functions.
pub type ComplexPoint = Complex64;

/// Distance to a lattice point below which `℘` and `ζ` refuse to evaluate.
pub const POLE_GUARD: f64 = 1e-10;

/// Series truncation: stop when the majorant of the next term drops below this.
const SERIES_EPS: f64 = 1e-19;

/// Jacobi parameter `m`, restricted to the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EllipticParameter(f64);

impl EllipticParameter {
    pub fn new(m: f64) -> Result<Self> {
        if m > 0.0 && m < 1.0 {
            Ok(Self(m))
        } else {
            Err(Error::Domain("elliptic parameter m must lie in (0, 1)"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Complementary parameter `1 - m`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Complete elliptic integrals `K(m)` and `K'(m) = K(1-m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarterPeriods {
    pub k: f64,
    pub k_prime: f64,
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 1e-16 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

fn ellip_k(m: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}

/// `K` and `K'` by the arithmetic-geometric mean.
pub fn complete_elliptic(m: EllipticParameter) -> QuarterPeriods {
    QuarterPeriods {
        k: ellip_k(m.0),
        k_prime: ellip_k(1.0 - m.0),
    }
}

/// Theta-function machinery for one parameter value.
#[derive(Debug, Clone, Copy)]
struct Theta {
    /// `πK'/K`, so that the nome is `q = exp(-s)`.
    s: f64,
    /// Number of series terms that reach `SERIES_EPS` anywhere in the reduced cell.
    terms: usize,
}

impl Theta {
    fn new(k: f64, k_prime: f64) -> Self {
        let s = PI * k_prime / k;
        // majorant of term n in the reduced cell: exp(-s (n² - 1/4))
        let mut terms = 1;
        while (-s * ((terms * terms) as f64 - 0.25)).exp() > SERIES_EPS && terms < 200 {
            terms += 1;
        }
        Self { s, terms: terms + 1 }
    }

    /// `q^((n+1/2)²)`
    fn qh(&self, n: usize) -> f64 {
        let e = n as f64 + 0.5;
        (-self.s * e * e).exp()
    }

    /// `q^(n²)`
    fn qn(&self, n: usize) -> f64 {
        let e = n as f64;
        (-self.s * e * e).exp()
    }

    /// `(θ1(v), θ1'(v))`
    fn theta1(&self, v: Complex64) -> (Complex64, Complex64) {
        let mut t = Complex64::new(0.0, 0.0);
        let mut dt = Complex64::new(0.0, 0.0);
        for n in 0..self.terms {
            let c = self.qh(n) * if n % 2 == 0 { 2.0 } else { -2.0 };
            let k = (2 * n + 1) as f64;
            let arg = v * k;
            t += arg.sin() * c;
            dt += arg.cos() * (c * k);
        }
        (t, dt)
    }

    fn theta2(&self, v: Complex64) -> Complex64 {
        let mut t = Complex64::new(0.0, 0.0);
        for n in 0..self.terms {
            t += (v * (2 * n + 1) as f64).cos() * (2.0 * self.qh(n));
        }
        t
    }

    fn theta3(&self, v: Complex64) -> Complex64 {
        let mut t = Complex64::new(1.0, 0.0);
        for n in 1..self.terms {
            t += (v * (2 * n) as f64).cos() * (2.0 * self.qn(n));
        }
        t
    }

    fn theta4(&self, v: Complex64) -> Complex64 {
        let mut t = Complex64::new(1.0, 0.0);
        for n in 1..self.terms {
            let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
            t += (v * (2 * n) as f64).cos() * (sign * self.qn(n));
        }
        t
    }

    /// Real-argument versions, used on the hot path of the Lamé potential.
    fn real_1_4(&self, v: f64) -> (f64, f64) {
        let (mut t1, mut t4) = (0.0, 1.0);
        for n in 0..self.terms {
            let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
            t1 += sign * self.qh(n) * ((2 * n + 1) as f64 * v).sin();
            if n > 0 {
                t4 += sign * self.qn(n) * ((2 * n) as f64 * v).cos();
            }
        }
        (t1, t4)
    }

    fn real_2_3(&self, v: f64) -> (f64, f64) {
        let (mut t2, mut t3) = (0.0, 1.0);
        for n in 0..self.terms {
            t2 += 2.0 * self.qh(n) * ((2 * n + 1) as f64 * v).cos();
            if n > 0 {
                t3 += 2.0 * self.qn(n) * ((2 * n) as f64 * v).cos();
            }
        }
        (t2, t3)
    }

    /// `θ1'''(0)`
    fn theta1_third_at_zero(&self) -> f64 {
        let mut t = 0.0;
        for n in 0..self.terms {
            let c = if n % 2 == 0 { -2.0 } else { 2.0 };
            let k = (2 * n + 1) as f64;
            t += c * self.qh(n) * k * k * k;
        }
        t
    }
}

/// Jacobi `sn`, `cn`, `dn` for a fixed parameter, with the theta constants cached.
#[derive(Debug, Clone, Copy)]
pub struct Jacobi {
    m: f64,
    k: f64,
    theta: Theta,
    t2_0: f64,
    t3_0: f64,
    t4_0: f64,
}

impl Jacobi {
    pub fn new(m: EllipticParameter) -> Self {
        let qp = complete_elliptic(m);
        let theta = Theta::new(qp.k, qp.k_prime);
        let (t2, t3) = theta.real_2_3(0.0);
        let (_, t4) = theta.real_1_4(0.0);
        Self { m: m.0, k: qp.k, theta, t2_0: t2, t3_0: t3, t4_0: t4 }
    }

    pub fn parameter(&self) -> f64 {
        self.m
    }

    /// Quarter period `K`.
    pub fn quarter_period(&self) -> f64 {
        self.k
    }

    pub fn sn_cn_dn(&self, x: f64) -> (f64, f64, f64) {
        let four_k = 4.0 * self.k;
        let xr = x - four_k * (x / four_k).round();
        let v = PI * xr / (2.0 * self.k);
        let (t1, t4) = self.theta.real_1_4(v);
        let (t2, t3) = self.theta.real_2_3(v);
        // products ordered so that x = 0 gives (0, 1, 1) exactly
        (
            (self.t3_0 * t1) / (self.t2_0 * t4),
            (self.t4_0 * t2) / (self.t2_0 * t4),
            (self.t4_0 * t3) / (self.t3_0 * t4),
        )
    }

    /// `sn²(x|m)` without the `cn`/`dn` work.
    pub fn sn2(&self, x: f64) -> f64 {
        let two_k = 2.0 * self.k;
        let xr = x - two_k * (x / two_k).round();
        let v = PI * xr / (2.0 * self.k);
        let (t1, t4) = self.theta.real_1_4(v);
        let s = (self.t3_0 * t1) / (self.t2_0 * t4);
        s * s
    }
}

/// `(sn, cn, dn)(x | m)`.
pub fn jacobi_sn_cn_dn(x: f64, m: EllipticParameter) -> (f64, f64, f64) {
    Jacobi::new(m).sn_cn_dn(x)
}

/// Weierstrass lattice with real half-period `ω = K` and imaginary half-period
/// `ω' = iK'`.
#[derive(Debug, Clone, Copy)]
pub struct WeierstrassLattice {
    /// Real half-period `ω = K`.
    pub omega: f64,
    /// `Im ω' = K'`.
    pub omega_prime_im: f64,
    /// `e1 > e2 > e3`, summing to zero.
    pub roots_e: [f64; 3],
    m: f64,
    theta: Theta,
    theta1_prime0: f64,
    theta3_0: f64,
    theta4_0: f64,
    /// `η = ζ(ω)`
    eta: f64,
    /// `η' = ζ(ω')`, purely imaginary.
    eta_prime: Complex64,
}

/// `σ(z) = exp(log_factor) · value`, `σ'(z) = exp(log_factor) · deriv`.
///
/// Splitting off the exponential keeps products and quotients of `σ` finite
/// far from the origin.
#[derive(Debug, Clone, Copy)]
pub struct SigmaParts {
    pub log_factor: Complex64,
    pub value: Complex64,
    pub deriv: Complex64,
}

impl SigmaParts {
    pub fn sigma(&self) -> Complex64 {
        self.log_factor.exp() * self.value
    }

    pub fn sigma_prime(&self) -> Complex64 {
        self.log_factor.exp() * self.deriv
    }
}

/// Result of reducing `z` into the fundamental cell: `z = reduced + 2jω + 2kω'`.
#[derive(Debug, Clone, Copy)]
struct Reduced {
    z: Complex64,
    j: f64,
    k: f64,
}

impl WeierstrassLattice {
    /// The lattice calibrated to `sn²(·|m)` (see the module docs).
    pub fn from_parameter(m: EllipticParameter) -> Self {
        let qp = complete_elliptic(m);
        let theta = Theta::new(qp.k, qp.k_prime);
        let zero = Complex64::new(0.0, 0.0);
        let (_, t1p) = theta.theta1(zero);
        let t1ppp = theta.theta1_third_at_zero();
        let omega = qp.k;
        let eta = -(PI * PI / (12.0 * omega)) * t1ppp / t1p.re;
        let omega_prime = Complex64::new(0.0, qp.k_prime);
        // Legendre relation: η ω' - η' ω = iπ/2
        let eta_prime = (omega_prime * eta - Complex64::new(0.0, PI / 2.0)) / omega;
        let mv = m.value();
        Self {
            omega,
            omega_prime_im: qp.k_prime,
            roots_e: [(2.0 - mv) / 3.0, (2.0 * mv - 1.0) / 3.0, -(1.0 + mv) / 3.0],
            m: mv,
            theta,
            theta1_prime0: t1p.re,
            theta3_0: theta.theta3(zero).re,
            theta4_0: theta.theta4(zero).re,
            eta,
            eta_prime: Complex64::new(0.0, eta_prime.im),
        }
    }

    pub fn parameter(&self) -> f64 {
        self.m
    }

    /// `ω'` as a complex number.
    pub fn omega_prime(&self) -> Complex64 {
        Complex64::new(0.0, self.omega_prime_im)
    }

    /// `ζ(ω)`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `ζ(ω')`.
    pub fn eta_prime(&self) -> Complex64 {
        self.eta_prime
    }

    fn reduce(&self, z: Complex64) -> Reduced {
        let j = (z.re / (2.0 * self.omega)).round();
        let k = (z.im / (2.0 * self.omega_prime_im)).round();
        Reduced {
            z: Complex64::new(z.re - 2.0 * j * self.omega, z.im - 2.0 * k * self.omega_prime_im),
            j,
            k,
        }
    }

    fn v_of(&self, zr: Complex64) -> Complex64 {
        zr * (PI / (2.0 * self.omega))
    }

    fn check_pole(&self, r: &Reduced) -> Result<()> {
        let d = r.z.norm();
        if d < POLE_GUARD {
            Err(Error::Pole { distance: d })
        } else {
            Ok(())
        }
    }

    /// `℘(z)`.
    pub fn p(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let r = self.reduce(z);
        self.check_pole(&r)?;
        let v = self.v_of(r.z);
        let (t1, _) = self.theta.theta1(v);
        let t2 = self.theta.theta2(v);
        let c = t2 / t1 * (PI / (2.0 * self.omega) * self.theta3_0 * self.theta4_0);
        Ok(c * c + self.roots_e[0])
    }

    /// `ζ(z)`.
    pub fn zeta(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let r = self.reduce(z);
        self.check_pole(&r)?;
        let v = self.v_of(r.z);
        let (t1, t1p) = self.theta.theta1(v);
        let base = r.z * (self.eta / self.omega) + t1p / t1 * (PI / (2.0 * self.omega));
        Ok(base + 2.0 * r.j * self.eta + self.eta_prime * (2.0 * r.k))
    }

    /// `σ(z)` and `σ'(z)` in split exponential form.
    pub fn sigma_parts(&self, z: ComplexPoint) -> SigmaParts {
        let r = self.reduce(z);
        let v = self.v_of(r.z);
        let (t1, t1p) = self.theta.theta1(v);
        let pref = 2.0 * self.omega / (PI * self.theta1_prime0);
        // σ(z_r) = pref · exp(η z_r² / 2ω) · θ1(v)
        let value = t1 * pref;
        let deriv = (r.z * (self.eta / self.omega) * t1 + t1p * (PI / (2.0 * self.omega))) * pref;
        let gauss = r.z * r.z * (self.eta / (2.0 * self.omega));
        // σ(z_r + 2jω + 2kω') = (-1)^(j+k+jk) exp((2jη + 2kη')(z_r + jω + kω')) σ(z_r)
        let shift_eta = Complex64::new(2.0 * r.j * self.eta, 0.0) + self.eta_prime * (2.0 * r.k);
        let shift = shift_eta * (r.z + Complex64::new(r.j * self.omega, r.k * self.omega_prime_im));
        let s = r.j + r.k + r.j * r.k;
        let parity = s - 2.0 * (0.5 * s).floor();
        let phase = Complex64::new(0.0, PI * parity);
        SigmaParts {
            log_factor: gauss + shift + phase,
            value,
            deriv: deriv + value * shift_eta,
        }
    }

    /// `σ(z)`.
    pub fn sigma(&self, z: ComplexPoint) -> ComplexPoint {
        self.sigma_parts(z).sigma()
    }
}

/// `℘(z)` on the lattice `lat`.
pub fn weierstrass_p(z: ComplexPoint, lat: &WeierstrassLattice) -> Result<ComplexPoint> {
    lat.p(z)
}

/// `ζ(z)` on the lattice `lat`.
pub fn weierstrass_zeta(z: ComplexPoint, lat: &WeierstrassLattice) -> Result<ComplexPoint> {
    lat.zeta(z)
}

/// `σ(z)` on the lattice `lat`.
pub fn weierstrass_sigma(z: ComplexPoint, lat: &WeierstrassLattice) -> ComplexPoint {
    lat.sigma(z)
}

/// Segment on which `℘` is real and monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PSegment {
    /// Real axis `(0, ω]`, where `℘` falls from `+∞` to `e1`. Parameters of
    /// Bloch functions below the lowest band edge live here.
    Lowest,
    /// `ω' + (0, ω]`, where `℘` rises from `e3` to `e2`. Only gap 1 exists
    /// for the `n = 1` lattice.
    Gap(u32),
}

/// Solve `℘(a) = target` for `a` on the chosen segment.
pub fn invert_p_on_gap_segment(
    target: f64,
    lat: &WeierstrassLattice,
    segment: PSegment,
) -> Result<ComplexPoint> {
    let [e1, e2, e3] = lat.roots_e;
    let w = lat.omega;
    let p_real = |t: f64, shift: f64| -> f64 {
        lat.p(Complex64::new(t, shift)).map(|c| c.re).unwrap_or(f64::INFINITY)
    };
    match segment {
        PSegment::Lowest => {
            if !(target >= e1) || !target.is_finite() {
                return Err(Error::Range { target, lo: e1, hi: f64::INFINITY });
            }
            if target == e1 {
                return Ok(Complex64::new(w, 0.0));
            }
            let mut lo = 0.5 * w;
            while p_real(lo, 0.0) <= target {
                lo *= 0.5;
                if lo < 1e-9 {
                    return Err(Error::Range { target, lo: e1, hi: p_real(lo, 0.0) });
                }
            }
            let t = roots::brent(|t| p_real(t, 0.0) - target, lo, w, 1e-15)
                .ok_or(Error::Range { target, lo: e1, hi: f64::INFINITY })?;
            Ok(Complex64::new(t, 0.0))
        }
        PSegment::Gap(1) => {
            let ip = lat.omega_prime_im;
            if !(target >= e3 && target <= e2) {
                return Err(Error::Range { target, lo: e3, hi: e2 });
            }
            if target == e3 {
                return Ok(Complex64::new(0.0, ip));
            }
            if target == e2 {
                return Ok(Complex64::new(w, ip));
            }
            let t = roots::brent(|t| p_real(t, ip) - target, 0.0, w, 1e-15)
                .ok_or(Error::Range { target, lo: e3, hi: e2 })?;
            Ok(Complex64::new(t, ip))
        }
        PSegment::Gap(_) => Err(Error::Domain("the n = 1 lattice has a single finite gap")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn par(m: f64) -> EllipticParameter {
        EllipticParameter::new(m).unwrap()
    }

    /// Midpoint-rule quadrature of K(m); the integrand is smooth and periodic
    /// in θ on [0, π], so the rule converges geometrically.
    fn k_by_quadrature(m: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let th = (i as f64 + 0.5) * h;
            acc += 1.0 / (1.0 - m * th.sin().powi(2)).sqrt();
        }
        0.5 * acc * h
    }

    /// Descending Landen / AGM ladder for sn, cn, dn (A&S 16.4).
    fn landen_sncndn(x: f64, m: f64) -> (f64, f64, f64) {
        let mut a = [0.0f64; 20];
        let mut c = [0.0f64; 20];
        a[0] = 1.0;
        let mut b = (1.0 - m).sqrt();
        c[0] = m.sqrt();
        let mut n = 0;
        while c[n].abs() > 1e-16 && n < 19 {
            let an = 0.5 * (a[n] + b);
            c[n + 1] = 0.5 * (a[n] - b);
            b = (a[n] * b).sqrt();
            n += 1;
            a[n] = an;
        }
        let mut phi = (1u64 << n) as f64 * a[n] * x;
        for i in (1..=n).rev() {
            phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
        }
        let sn = phi.sin();
        let cn = phi.cos();
        (sn, cn, (1.0 - m * sn * sn).sqrt())
    }

    #[test]
    fn parameter_domain() {
        assert!(EllipticParameter::new(0.0).is_err());
        assert!(EllipticParameter::new(1.0).is_err());
        assert!(EllipticParameter::new(-0.1).is_err());
        assert!(EllipticParameter::new(0.3).is_ok());
    }

    #[test]
    fn complete_elliptic_values() {
        let q = complete_elliptic(par(0.5));
        assert!((q.k - q.k_prime).abs() < 1e-13);
        // frozen from the quadrature oracle below
        assert!((q.k - 1.854_074_677_301_372).abs() < 1e-13);
        assert!((q.k - k_by_quadrature(0.5)).abs() < 1e-13);
        for m in [0.01, 0.2, 0.7, 0.95] {
            let q = complete_elliptic(par(m));
            assert!(((q.k - k_by_quadrature(m)) / q.k).abs() < 1e-13, "m = {m}");
        }
        let small = complete_elliptic(par(1e-12));
        assert!((small.k - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn k_is_increasing() {
        let mut prev = 0.0;
        for i in 1..100 {
            let k = complete_elliptic(par(i as f64 / 100.0)).k;
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn jacobi_special_values() {
        let m = par(0.5);
        assert_eq!(jacobi_sn_cn_dn(0.0, m), (0.0, 1.0, 1.0));
        let k = complete_elliptic(m).k;
        let (s, c, d) = jacobi_sn_cn_dn(k, m);
        assert!((s - 1.0).abs() < 1e-14);
        assert!(c.abs() < 1e-14);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn jacobi_matches_landen_ladder() {
        for &m in &[0.5, 0.1, 0.9, 0.99] {
            for &x in &[0.7, -1.3, 2.9, 11.0] {
                let (s, c, d) = jacobi_sn_cn_dn(x, par(m));
                let (s0, c0, d0) = landen_sncndn(x, m);
                assert!((s - s0).abs() < 1e-12, "sn m={m} x={x}: {s} vs {s0}");
                assert!((c - c0).abs() < 1e-12, "cn m={m} x={x}");
                assert!((d - d0).abs() < 1e-12, "dn m={m} x={x}");
            }
        }
    }

    #[test]
    fn sn_antiperiodic_in_2k() {
        let m = par(0.3);
        let k = complete_elliptic(m).k;
        for i in 0..20 {
            let x = -3.0 + 0.37 * i as f64;
            let a = jacobi_sn_cn_dn(x, m).0;
            let b = jacobi_sn_cn_dn(x + 2.0 * k, m).0;
            let c = jacobi_sn_cn_dn(x + 4.0 * k, m).0;
            assert!((a + b).abs() < 1e-13);
            assert!((a - c).abs() < 1e-13);
        }
    }

    #[test]
    fn half_period_values() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        let [e1, e2, e3] = lat.roots_e;
        assert!((e1 + e2 + e3).abs() < 1e-15);
        let w = Complex64::new(lat.omega, 0.0);
        let wp = lat.omega_prime();
        assert!((lat.p(w).unwrap() - e1).norm() < 1e-12);
        assert!((lat.p(w + wp).unwrap() - e2).norm() < 1e-12);
        assert!((lat.p(wp).unwrap() - e3).norm() < 1e-12);
        assert!((lat.zeta(w).unwrap().re - lat.eta()).abs() < 1e-12);
    }

    #[test]
    fn calibration_against_sn() {
        let m = par(0.37);
        let lat = WeierstrassLattice::from_parameter(m);
        let jac = Jacobi::new(m);
        for i in 0..30 {
            let x = -4.0 + 0.29 * i as f64;
            let p = lat.p(Complex64::new(x, lat.omega_prime_im)).unwrap();
            let expected = lat.roots_e[2] + 0.37 * jac.sn2(x);
            assert!((p.re - expected).abs() < 1e-11, "x = {x}");
            assert!(p.im.abs() < 1e-11);
        }
    }

    /// Direct lattice sum over the square block `|n|, |k| ≤ N`. The block
    /// truncation error decays like `c2/N² + c3/N³ + …`, so the sums at
    /// N = 10, 20, 40 are combined by two steps of Richardson extrapolation.
    fn p_lattice_sum(z: Complex64, lat: &WeierstrassLattice) -> Complex64 {
        let w1 = Complex64::new(2.0 * lat.omega, 0.0);
        let w2 = Complex64::new(0.0, 2.0 * lat.omega_prime_im);
        let block = |big: i32| {
            let mut total = 1.0 / (z * z);
            for n in -big..=big {
                for k in -big..=big {
                    if n == 0 && k == 0 {
                        continue;
                    }
                    let w = w1 * n as f64 + w2 * k as f64;
                    let d = z - w;
                    total += 1.0 / (d * d) - 1.0 / (w * w);
                }
            }
            total
        };
        let (s10, s20, s40) = (block(10), block(20), block(40));
        let r1 = (s20 * 4.0 - s10) / 3.0;
        let r2 = (s40 * 4.0 - s20) / 3.0;
        // the remainder after the first step decays like N⁻³
        (r2 * 8.0 - r1) / 7.0
    }

    #[test]
    fn p_matches_lattice_sum() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        let z = Complex64::new(0.3, 0.2);
        let series = lat.p(z).unwrap();
        let direct = p_lattice_sum(z, &lat);
        assert!((series - direct).norm() < 1e-9, "{series} vs {direct}");
    }

    #[test]
    fn symmetry_and_quasi_periodicity() {
        let lat = WeierstrassLattice::from_parameter(par(0.6));
        let two_w = Complex64::new(2.0 * lat.omega, 0.0);
        let w = Complex64::new(lat.omega, 0.0);
        let eta = lat.eta();
        for i in 0..25 {
            let z = Complex64::new(-2.0 + 0.31 * i as f64, 0.7 - 0.09 * i as f64);
            let p = lat.p(z).unwrap();
            assert!((p - lat.p(-z).unwrap()).norm() < 1e-10 * p.norm().max(1.0));
            assert!((p - lat.p(z + two_w).unwrap()).norm() < 1e-10 * p.norm().max(1.0));
            let zz = lat.zeta(z).unwrap();
            assert!((zz + lat.zeta(-z).unwrap()).norm() < 1e-10 * zz.norm().max(1.0));
            assert!((lat.zeta(z + two_w).unwrap() - zz - 2.0 * eta).norm() < 1e-10 * zz.norm().max(1.0));
            let s = lat.sigma(z);
            assert!((s + lat.sigma(-z)).norm() < 1e-10 * s.norm());
            let shifted = lat.sigma(z + two_w);
            let expected = -s * (2.0 * eta * (z + w)).exp();
            assert!((shifted - expected).norm() < 1e-9 * expected.norm());
        }
    }

    #[test]
    fn sigma_near_origin() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        for arg in [0.0, 1.0, 2.5] {
            let z = Complex64::from_polar(1e-4, arg);
            assert!((lat.sigma(z) / z - 1.0).norm() < 1e-7);
        }
    }

    #[test]
    fn zeta_derivative_is_minus_p() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        let h = 1e-3;
        for i in 0..20 {
            let z = Complex64::new(0.2 + 0.17 * i as f64, 0.4 + 0.05 * i as f64);
            let f = |d: f64| lat.zeta(z + d).unwrap();
            let d = (f(-2.0 * h) - f(2.0 * h) * 1.0 + (f(h) - f(-h)) * 8.0) / (12.0 * h);
            let p = lat.p(z).unwrap();
            assert!((d + p).norm() < 1e-6 * p.norm().max(1.0), "z = {z}");
        }
    }

    #[test]
    fn poles_are_guarded() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        let lattice_point = Complex64::new(2.0 * lat.omega, 2.0 * lat.omega_prime_im);
        assert!(matches!(lat.p(lattice_point), Err(Error::Pole { .. })));
        assert!(matches!(lat.zeta(Complex64::new(0.0, 0.0)), Err(Error::Pole { .. })));
        assert!(lat.sigma(Complex64::new(0.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn inversion_on_segments() {
        let lat = WeierstrassLattice::from_parameter(par(0.5));
        let [e1, e2, e3] = lat.roots_e;
        let a = invert_p_on_gap_segment(e1, &lat, PSegment::Lowest).unwrap();
        assert!((a.re - lat.omega).abs() < 1e-14 && a.im == 0.0);
        let a = invert_p_on_gap_segment(e3, &lat, PSegment::Gap(1)).unwrap();
        assert!(a.re.abs() < 1e-14 && (a.im - lat.omega_prime_im).abs() < 1e-14);
        let a = invert_p_on_gap_segment(e2, &lat, PSegment::Gap(1)).unwrap();
        assert!((a.re - lat.omega).abs() < 1e-14);
        // α = 2(m+1)/3 - ℘(a) = 1.1 in the first gap of m = 0.5
        let target = 2.0 * 1.5 / 3.0 - 1.1;
        let a = invert_p_on_gap_segment(target, &lat, PSegment::Gap(1)).unwrap();
        assert!((lat.p(a).unwrap().re - target).abs() < 1e-10);
        assert!(a.re > 0.0 && a.re < lat.omega);
        // α = 0.2 below the spectrum
        let target = 1.0 - 0.2;
        let a = invert_p_on_gap_segment(target, &lat, PSegment::Lowest).unwrap();
        assert!((lat.p(a).unwrap().re - target).abs() < 1e-10);
        assert!(invert_p_on_gap_segment(0.1, &lat, PSegment::Gap(1)).is_err());
        assert!(invert_p_on_gap_segment(0.2, &lat, PSegment::Lowest).is_err());
        assert!(invert_p_on_gap_segment(-0.1, &lat, PSegment::Gap(2)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn jacobi_identities(x in -25.0f64..25.0, m in 0.01f64..0.99) {
            let (s, c, d) = jacobi_sn_cn_dn(x, par(m));
            proptest::prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
            proptest::prop_assert!((d * d + m * s * s - 1.0).abs() < 1e-12);
        }
    }
}
