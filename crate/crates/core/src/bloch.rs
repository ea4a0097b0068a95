//! Bloch functions `ψ(x + T) = βψ(x)` for any real energy, their global
//! evaluation by Floquet extension, and nodal analysis.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::band::{self, EDGE_TOL};
use crate::darboux::{Provenance, SeedFunction, TransformationFunction};
use crate::engine::{self, PotentialSpec, SampledSolution, ScaledState, StateVector, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::roots;

/// Default number of grid cells per period.
pub const DEFAULT_SAMPLES: usize = 256;

/// A Bloch function sampled over one period `[x0, x0 + T]`.
///
/// Real multipliers (gaps, edges) give a real function stored in `re`. In a
/// band the function is `re + i·im`.
#[derive(Debug, Clone)]
pub struct BlochFunction {
    pub alpha: f64,
    pub beta: Complex64,
    pub period: f64,
    pub x0: f64,
    pub re: SampledSolution,
    pub im: Option<SampledSolution>,
    /// Point where the function was made positive.
    pub normalized_at: Option<f64>,
    potential: PotentialSpec,
}

/// Choice of multiplier for one factorization energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `β` with `|β| > 1`.
    Beta,
    /// `1/β`.
    Inverse,
}

fn eigenvector(b: &engine::TransferMatrix, beta: Complex64) -> (Complex64, Complex64) {
    let v1 = (Complex64::new(b.b12, 0.0), beta - b.b11);
    let v2 = (beta - b.b22, Complex64::new(b.b21, 0.0));
    let n1 = v1.0.norm_sqr() + v1.1.norm_sqr();
    let n2 = v2.0.norm_sqr() + v2.1.norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    if n == 0.0 {
        // b = ±I: every vector is an eigenvector
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let s = n.sqrt();
    (v.0 / s, v.1 / s)
}

fn sample_period(
    v: &PotentialSpec,
    alpha: f64,
    x0: f64,
    t: f64,
    samples: usize,
    init: StateVector,
    growth: f64,
) -> Result<SampledSolution> {
    let grid = engine::build_grid(x0, x0 + t, samples, &v.kinks(x0, x0 + t));
    if growth.abs() >= 1.0 {
        engine::solve_on_grid(v, alpha, grid, 0, init, DEFAULT_TOL)
    } else {
        // decaying solutions are integrated backwards, where they grow
        let last = grid.len() - 1;
        engine::solve_on_grid(v, alpha, grid, last, init.scale(growth), DEFAULT_TOL)
    }
}

impl BlochFunction {
    fn build(v: &PotentialSpec, alpha: f64, beta: Complex64, b: &engine::TransferMatrix, samples: usize) -> Result<Self> {
        let t = b.x1 - b.x0;
        let x0 = b.x0;
        let (p, d) = eigenvector(b, beta);
        let real = beta.im == 0.0;
        let re = sample_period(v, alpha, x0, t, samples, StateVector::new(p.re, d.re), if real { beta.re } else { 1.0 })?;
        let im = if real {
            None
        } else {
            Some(sample_period(v, alpha, x0, t, samples, StateVector::new(p.im, d.im), 1.0)?)
        };
        let mut out = Self { alpha, beta, period: t, x0, re, im, normalized_at: None, potential: v.clone() };
        out.rescale_to_unit();
        Ok(out)
    }

    fn rescale_to_unit(&mut self) {
        let mut m: f64 = 0.0;
        for i in 0..self.re.psi.len() {
            let im = self.im.as_ref().map(|s| s.psi[i]).unwrap_or(0.0);
            m = m.max(self.re.psi[i].hypot(im));
        }
        if m > 0.0 {
            self.scale_by(1.0 / m);
        }
    }

    fn scale_by(&mut self, c: f64) {
        for s in core::iter::once(&mut self.re).chain(self.im.as_mut()) {
            for a in [&mut s.psi, &mut s.dpsi, &mut s.ddpsi] {
                a.iter_mut().for_each(|p| *p *= c);
            }
        }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Real multiplier; `None` inside a band.
    pub fn real_beta(&self) -> Option<f64> {
        self.is_real().then_some(self.beta.re)
    }

    /// Flip the sign so that `u(x) > 0`. Only for real functions.
    pub fn normalize_at(&mut self, x: f64) -> Result<()> {
        let s = self.extend_scaled(x)?;
        if s.psi == 0.0 {
            return Err(Error::Normalization);
        }
        if s.psi < 0.0 {
            self.scale_by(-1.0);
        }
        self.normalized_at = Some(x);
        Ok(())
    }

    /// Reduce `x` into the base period: `x = r + nT`.
    fn reduce(&self, x: f64) -> (f64, i64) {
        let n = ((x - self.x0) / self.period).floor();
        let mut r = x - n * self.period;
        if r > self.x0 + self.period {
            r = self.x0 + self.period;
        }
        (r, n as i64)
    }

    /// `(u, u')(x)` with the factor `|β|^n` kept as a logarithm.
    pub fn extend_scaled(&self, x: f64) -> Result<ScaledState> {
        let b = self.real_beta().ok_or(Error::Domain("complex Bloch functions have no real scaled form"))?;
        let (r, n) = self.reduce(x);
        let s = self.re.eval(r);
        let sign = if b < 0.0 && n % 2 != 0 { -1.0 } else { 1.0 };
        Ok(ScaledState { log_scale: n as f64 * b.abs().ln(), psi: sign * s.psi, dpsi: sign * s.dpsi })
    }

    /// Complex value `(u, u')(x)` by Floquet extension.
    pub fn extend_complex(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let (r, n) = self.reduce(x);
        let s = self.re.eval(r);
        let si = self.im.as_ref().map(|m| m.eval(r)).unwrap_or_default();
        let ln = (n as f64) * self.beta.norm().ln();
        if ln > 709.0 {
            return Err(Error::Overflow("|β|^n exceeds the floating-point range"));
        }
        let f = self.beta.powi(n as i32);
        Ok((Complex64::new(s.psi, si.psi) * f, Complex64::new(s.dpsi, si.dpsi) * f))
    }

    /// `ψ(x + nT) = βⁿ ψ(x)` as plain numbers.
    pub fn extend(&self, x: f64) -> Result<StateVector> {
        let s = self.extend_scaled(x)?;
        if s.log_scale > 709.0 {
            return Err(Error::Overflow("|β|^n exceeds the floating-point range"));
        }
        Ok(s.value())
    }

    /// Relative Floquet residual `‖ψ(x+T) - βψ(x)‖ / ‖ψ(x)‖` evaluated by
    /// integrating across one period from `x`.
    pub fn floquet_residual(&self, x: f64) -> Result<f64> {
        let (p, d) = self.extend_complex(x)?;
        let tm = engine::transfer_matrix(&self.potential, self.alpha, x, x + self.period, DEFAULT_TOL)?;
        let pr = tm.apply(StateVector::new(p.re, d.re));
        let pi = tm.apply(StateVector::new(p.im, d.im));
        let (bp, bd) = (self.beta * p, self.beta * d);
        let err = (Complex64::new(pr.psi, pi.psi) - bp).norm().hypot((Complex64::new(pr.dpsi, pi.dpsi) - bd).norm());
        Ok(err / p.norm().hypot(d.norm()))
    }

    /// As a Darboux transformation function. Only for real functions.
    pub fn into_transform(self) -> Result<TransformationFunction> {
        let beta = self.real_beta().ok_or(Error::Domain("transformation functions must be real"))?;
        let normalized_at = self.normalized_at;
        let alpha = self.alpha;
        Ok(TransformationFunction {
            alpha,
            func: Arc::new(self),
            provenance: Provenance::Bloch { beta },
            normalized_at,
        })
    }
}

impl SeedFunction for BlochFunction {
    fn eval_scaled(&self, x: f64) -> ScaledState {
        self.extend_scaled(x).unwrap_or(ScaledState { log_scale: 0.0, psi: f64::NAN, dpsi: f64::NAN })
    }

    fn multiplier(&self) -> Option<f64> {
        self.real_beta()
    }
}

/// Options of [`bloch_pair_with`].
#[derive(Debug, Clone, Copy)]
pub struct BlochOptions {
    /// Left end of the sampled period.
    pub x0: f64,
    /// Grid cells per period.
    pub samples: usize,
}

impl Default for BlochOptions {
    fn default() -> Self {
        Self { x0: 0.0, samples: DEFAULT_SAMPLES }
    }
}

/// The Bloch functions for `β+` (`|β+| ≥ 1`) and `β- = 1/β+` at energy `alpha`.
pub fn bloch_pair(v: &PotentialSpec, alpha: f64) -> Result<(BlochFunction, BlochFunction)> {
    bloch_pair_with(v, alpha, BlochOptions::default())
}

/// [`bloch_pair`] with explicit sampling options. Real pairs are made
/// positive at a common grid point where both are well away from zero.
pub fn bloch_pair_with(v: &PotentialSpec, alpha: f64, opt: BlochOptions) -> Result<(BlochFunction, BlochFunction)> {
    let t = v.period().ok_or(Error::NotPeriodic)?;
    let b = engine::transfer_matrix(v, alpha, opt.x0, opt.x0 + t, DEFAULT_TOL)?;
    let d = b.trace();
    if (d.abs() - 2.0).abs() < EDGE_TOL {
        return Err(Error::EdgeDegeneracy { energy: alpha, discriminant: d });
    }
    let (bp, bm) = band::floquet_multipliers(d);
    let mut up = BlochFunction::build(v, alpha, bp, &b, opt.samples)?;
    let mut um = BlochFunction::build(v, alpha, bm, &b, opt.samples)?;
    if up.is_real() {
        let xn = common_positive_point(&up, &um);
        up.normalize_at(xn)?;
        um.normalize_at(xn)?;
    }
    Ok((up, um))
}

/// Grid point maximizing `min(|u1|, |u2|)` over the base period.
fn common_positive_point(u1: &BlochFunction, u2: &BlochFunction) -> f64 {
    let mut best = (u1.x0, -1.0);
    for (i, &x) in u1.re.grid.iter().enumerate() {
        let a = u1.re.psi[i].abs();
        let b = u2.re.eval(x).psi.abs();
        if a.min(b) > best.1 {
            best = (x, a.min(b));
        }
    }
    best.0
}

/// One member of the pair.
pub fn bloch_function(v: &PotentialSpec, alpha: f64, branch: Branch) -> Result<BlochFunction> {
    let (p, m) = bloch_pair(v, alpha)?;
    Ok(match branch {
        Branch::Beta => p,
        Branch::Inverse => m,
    })
}

/// The periodic (`D = 2`) or antiperiodic (`D = -2`) solution at a band edge.
pub fn edge_bloch_function(v: &PotentialSpec, e: f64) -> Result<BlochFunction> {
    let t = v.period().ok_or(Error::NotPeriodic)?;
    let b = engine::transfer_matrix(v, e, 0.0, t, DEFAULT_TOL)?;
    let beta = Complex64::new(b.trace().signum(), 0.0);
    let mut u = BlochFunction::build(v, e, beta, &b, DEFAULT_SAMPLES)?;
    let xn = common_positive_point(&u, &u);
    u.normalize_at(xn)?;
    Ok(u)
}

/// Nodes of a real Bloch function.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalSequence {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub count_per_period: usize,
}

fn nodes_in_period(u: &BlochFunction) -> core::result::Result<Vec<f64>, ()> {
    let s = &u.re;
    let f = |x: f64| s.eval(x).psi;
    let mut out = Vec::new();
    let n = s.grid.len();
    for i in 0..n - 1 {
        let (a, b) = (s.grid[i], s.grid[i + 1]);
        let (fa, fb) = (s.psi[i], s.psi[i + 1]);
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        // look inside the cell for a hidden pair of sign changes
        let mut changes = 0;
        let mut prev = fa;
        for k in 1..=8 {
            let fk = if k == 8 { fb } else { f(a + (b - a) * k as f64 / 8.0) };
            if fk != 0.0 && fk.signum() != prev.signum() {
                changes += 1;
                prev = fk;
            }
        }
        if changes > 1 {
            return Err(());
        }
        if fb != 0.0 && fa.signum() != fb.signum() {
            if let Some(r) = roots::bisect(f, a, b, 1e-12) {
                out.push(r);
            }
        }
    }
    // a zero exactly at the right end belongs to the next period
    out.retain(|&x| x < u.x0 + u.period);
    Ok(out)
}

/// All nodes of `u` in `window`, replicated from one period.
pub fn find_nodes(u: &BlochFunction, window: (f64, f64)) -> Result<NodalSequence> {
    if !u.is_real() {
        return Err(Error::Domain("nodes are defined for real Bloch functions"));
    }
    let base = match nodes_in_period(u) {
        Ok(n) => n,
        Err(()) => {
            // refine once
            let samples = 2 * (u.re.grid.len() - 1);
            let b = engine::transfer_matrix(&u.potential, u.alpha, u.x0, u.x0 + u.period, DEFAULT_TOL)?;
            let finer = BlochFunction::build(&u.potential, u.alpha, u.beta, &b, samples)?;
            nodes_in_period(&finer).map_err(|_| Error::GridTooCoarse { x: u.x0 })?
        }
    };
    let t = u.period;
    let mut nodes = Vec::new();
    let kmin = ((window.0 - u.x0) / t).floor() as i64 - 1;
    let kmax = ((window.1 - u.x0) / t).ceil() as i64 + 1;
    for k in kmin..=kmax {
        for &z in &base {
            let x = z + k as f64 * t;
            if x > window.0 && x < window.1 {
                nodes.push(x);
            }
        }
    }
    Ok(NodalSequence { alpha: u.alpha, nodes, count_per_period: base.len() })
}

/// Node positions in `[0, T)` of both Bloch functions, per energy.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalRow {
    pub alpha: f64,
    pub beta_nodes: Vec<f64>,
    pub inverse_nodes: Vec<f64>,
}

/// Nodal curves over a gap `(lo, hi)` for the energies in `alphas`.
pub fn nodal_curves(v: &PotentialSpec, gap: (f64, f64), alphas: &[f64]) -> Result<Vec<NodalRow>> {
    let t = v.period().ok_or(Error::NotPeriodic)?;
    alphas
        .iter()
        .map(|&a| {
            if !(a > gap.0 && a < gap.1) {
                return Err(Error::Domain("nodal-curve energies must lie strictly inside the gap"));
            }
            let (up, um) = bloch_pair(v, a)?;
            let w = (0.0, t);
            let mut bn = find_nodes(&up, w)?.nodes;
            let mut mn = find_nodes(&um, w)?.nodes;
            bn.retain(|&x| x >= 0.0 && x < t);
            mn.retain(|&x| x >= 0.0 && x < t);
            Ok(NodalRow { alpha: a, beta_nodes: bn, inverse_nodes: mn })
        })
        .collect()
}

/// The four Bloch functions `u^{β1}, u^{1/β1}, u^{β2}, u^{1/β2}` of two
/// energies in one gap, made positive at a common point `x0` chosen so that
/// all four pairwise Wronskians `W(u_1·, u_2·)` are positive.
///
/// In gap `j ≥ 1` the point sits just before a cyclically adjacent pair of
/// nodes of the `α1` functions; below the spectrum any point works.
pub fn theorem1_basis(v: &PotentialSpec, alpha1: f64, alpha2: f64) -> Result<[BlochFunction; 4]> {
    let t = v.period().ok_or(Error::NotPeriodic)?;
    let (mut p1, mut m1) = bloch_pair(v, alpha1)?;
    let (mut p2, mut m2) = bloch_pair(v, alpha2)?;
    if !(p1.is_real() && p2.is_real()) {
        return Err(Error::Domain("both energies must lie in a gap"));
    }
    let w = (0.0, t);
    let mut marks: Vec<(f64, u8)> = Vec::new();
    for (k, u) in [&p1, &m1, &p2, &m2].iter().enumerate() {
        for x in find_nodes(u, w)?.nodes {
            marks.push((x, k as u8));
        }
    }
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x0 = if marks.is_empty() {
        common_positive_point(&p1, &p2)
    } else {
        let n = marks.len();
        let first_of_pair = (0..n).find(|&i| marks[i].1 < 2 && marks[(i + 1) % n].1 < 2);
        let i = first_of_pair.ok_or(Error::Normalization)?;
        let prev = if i == 0 { marks[n - 1].0 - t } else { marks[i - 1].0 };
        0.5 * (prev + marks[i].0)
    };
    for u in [&mut p1, &mut m1, &mut p2, &mut m2] {
        u.normalize_at(x0)?;
    }
    Ok([p1, m1, p2, m2])
}
