//! Floquet analysis: discriminant, multipliers, band edges and energy
//! classification.
//!
//! Band edges are labeled `E0 < E1 ≤ E1' < E2 ≤ E2' < …`; gap `j ≥ 1` is
//! `(E_j, E_j')` and gap 0 is `(-∞, E0)`. In gap `j` the discriminant
//! satisfies `D > 2` for even `j` and `D < -2` for odd `j`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::{self, PotentialSpec, StateVector, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::roots;

/// `||D| - 2|` below which an energy is treated as a band edge.
pub const EDGE_TOL: f64 = 1e-9;

/// Absolute accuracy of refined band edges.
pub const EDGE_XTOL: f64 = 1e-10;

/// Default spacing of the coarse energy scan.
pub const DEFAULT_SCAN_STEP: f64 = 1e-3;

fn require_period(v: &PotentialSpec) -> Result<f64> {
    v.period().ok_or(Error::NotPeriodic)
}

/// `D(E) = Tr b(T)` over the period starting at 0.
pub fn discriminant(v: &PotentialSpec, e: f64) -> Result<f64> {
    let t = require_period(v)?;
    Ok(engine::transfer_matrix(v, e, 0.0, t, DEFAULT_TOL)?.trace())
}

/// Roots of `β² - Dβ + 1 = 0`, ordered so that `|β+| ≥ 1`.
pub fn floquet_multipliers(d: f64) -> (Complex64, Complex64) {
    let h = 0.5 * d;
    let disc = h * h - 1.0;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // the root of larger modulus, computed without cancellation
        let big = if h >= 0.0 { h + r } else { h - r };
        (Complex64::new(big, 0.0), Complex64::new(1.0 / big, 0.0))
    } else {
        let r = (-disc).sqrt();
        (Complex64::new(h, r), Complex64::new(h, -r))
    }
}

/// Where an energy sits relative to the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    InsideBand,
    InGap(u32),
    AtEdge,
}

/// Discriminant, multipliers and classification at one energy.
#[derive(Debug, Clone, Copy)]
pub struct FloquetData {
    pub energy: f64,
    pub d: f64,
    pub beta_plus: Complex64,
    pub beta_minus: Complex64,
    pub classification: Classification,
}

/// Number of zeros in `(0, T)` of the solution with `v(0) = 0`, `v'(0) = 1`.
pub fn dirichlet_zero_count(v: &PotentialSpec, e: f64) -> Result<u32> {
    let t = require_period(v)?;
    // resolve oscillations: at least 16 cells per half-wavelength
    let probe = 512;
    let vmin = (0..probe)
        .map(|i| v.eval(t * i as f64 / probe as f64))
        .fold(f64::INFINITY, f64::min);
    let kmax = (e - vmin).max(0.0).sqrt();
    let cells = ((t * kmax / core::f64::consts::PI * 32.0).ceil() as usize).max(256);
    let grid = engine::build_grid(0.0, t, cells, &v.kinks(0.0, t));
    let s = engine::solve_on_grid(v, e, grid, 0, StateVector::new(0.0, 1.0), DEFAULT_TOL)?;
    let n = s.psi.len();
    let mut count = 0;
    let mut prev = s.dpsi[0].signum();
    for &p in &s.psi[1..n] {
        if p != 0.0 && p.signum() != prev {
            count += 1;
            prev = p.signum();
        }
    }
    Ok(count)
}

/// Gap index from the discriminant sign and the Dirichlet zero count.
fn gap_index(d: f64, c: u32) -> u32 {
    let even = d > 0.0;
    if (c % 2 == 0) == even {
        c
    } else {
        c + 1
    }
}

/// Full Floquet data at `e`.
pub fn floquet_data(v: &PotentialSpec, e: f64) -> Result<FloquetData> {
    let d = discriminant(v, e)?;
    let (bp, bm) = floquet_multipliers(d);
    let classification = if (d.abs() - 2.0).abs() < EDGE_TOL {
        Classification::AtEdge
    } else if d.abs() < 2.0 {
        Classification::InsideBand
    } else {
        Classification::InGap(gap_index(d, dirichlet_zero_count(v, e)?))
    };
    Ok(FloquetData { energy: e, d, beta_plus: bp, beta_minus: bm, classification })
}

/// Label of a band edge: `E{index}` or `E{index}'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeLabel {
    pub index: u32,
    pub primed: bool,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}{}", self.index, if self.primed { "'" } else { "" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub energy: f64,
    pub label: EdgeLabel,
    /// `+2` for periodic, `-2` for antiperiodic edge solutions.
    pub discriminant: f64,
}

/// Non-fatal findings of the edge search.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeWarning {
    /// Two edges closer than ten scan steps; the gap may be closed or
    /// missed at a coarser step.
    Degenerate { lower: f64, upper: f64 },
}

impl EdgeWarning {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Degenerate { .. } => "WarningDegenerate",
        }
    }

    pub fn message(&self) -> String {
        match self {
            Self::Degenerate { lower, upper } => {
                format!("edges {lower} and {upper} are closer than ten scan steps")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandStructure {
    pub edges: Vec<BandEdge>,
    pub search_range: (f64, f64),
    pub scan_step: f64,
    pub warnings: Vec<EdgeWarning>,
}

impl BandStructure {
    pub fn edge(&self, label: EdgeLabel) -> Option<f64> {
        self.edges.iter().find(|e| e.label == label).map(|e| e.energy)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.energy).collect()
    }

    /// Gap `j` as `(E_j, E_j')`, or `(-∞, E0)` for `j = 0`.
    pub fn gap(&self, j: u32) -> Option<(f64, f64)> {
        if j == 0 {
            return self.edge(EdgeLabel { index: 0, primed: false }).map(|e0| (f64::NEG_INFINITY, e0));
        }
        Some((
            self.edge(EdgeLabel { index: j, primed: false })?,
            self.edge(EdgeLabel { index: j, primed: true })?,
        ))
    }

    /// Classification by interval membership alone.
    pub fn locate(&self, e: f64) -> Option<Classification> {
        if let Some(e0) = self.edge(EdgeLabel { index: 0, primed: false }) {
            if e < e0 {
                return Some(Classification::InGap(0));
            }
        }
        for edge in &self.edges {
            if edge.energy == e {
                return Some(Classification::AtEdge);
            }
        }
        for w in self.edges.windows(2) {
            if e > w[0].energy && e < w[1].energy {
                let (a, b) = (w[0].label, w[1].label);
                return Some(if !a.primed && b.primed && a.index == b.index && a.index > 0 {
                    Classification::InGap(a.index)
                } else {
                    Classification::InsideBand
                });
            }
        }
        None
    }
}

/// Discriminant on an energy grid. Sequential; callers wanting parallelism
/// evaluate [`discriminant`] themselves and pass the values to
/// [`edges_from_samples`].
pub fn sample_discriminant(v: &PotentialSpec, energies: &[f64]) -> Result<Vec<f64>> {
    energies.iter().map(|&e| discriminant(v, e)).collect()
}

/// Scan grid covering `range` at spacing `step`, endpoints included.
pub fn scan_grid(range: (f64, f64), step: f64) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo < hi) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain("energy range must be increasing and the step positive"));
    }
    let n = ((hi - lo) / step).ceil() as usize;
    Ok((0..=n).map(|i| (lo + step * i as f64).min(hi)).collect())
}

/// All solutions of `|D(E)| = 2` in `range`.
pub fn find_band_edges(v: &PotentialSpec, range: (f64, f64), step: f64) -> Result<BandStructure> {
    require_period(v)?;
    let es = scan_grid(range, step)?;
    let ds = sample_discriminant(v, &es)?;
    edges_from_samples(v, range, step, es, ds)
}

/// Refine and label band edges from a precomputed discriminant scan.
pub fn edges_from_samples(
    v: &PotentialSpec,
    range: (f64, f64),
    step: f64,
    mut es: Vec<f64>,
    mut ds: Vec<f64>,
) -> Result<BandStructure> {
    require_period(v)?;
    let d = |e: f64| discriminant(v, e).unwrap_or(f64::NAN);
    // Narrow gaps can sit between two samples; each gap holds one extremum
    // of D, so resolve every discrete extremum before bracketing.
    let mut closed = Vec::new();
    let mut inserts = Vec::new();
    for i in 1..es.len().saturating_sub(1) {
        let (a, b, c) = (ds[i - 1], ds[i], ds[i + 1]);
        let is_max = b >= a && b >= c;
        let is_min = b <= a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        let sign = if is_max { -1.0 } else { 1.0 };
        let (xe, fe) = roots::golden_min(|e| sign * d(e), es[i - 1], es[i + 1], 1e-12);
        let de = sign * fe;
        // a maximum touching +2 or a minimum touching -2 is a closed gap
        let target = if is_max { 2.0 } else { -2.0 };
        if (de - target).abs() <= EDGE_TOL {
            closed.push((xe, target));
        } else {
            inserts.push((xe, de));
        }
    }
    for (x, y) in inserts {
        let i = es.partition_point(|&p| p < x);
        if i < es.len() && es[i] == x {
            continue;
        }
        es.insert(i, x);
        ds.insert(i, y);
    }
    let mut found: Vec<(f64, f64)> = Vec::new();
    for target in [2.0, -2.0] {
        for i in 0..es.len() - 1 {
            let (fa, fb) = (ds[i] - target, ds[i + 1] - target);
            if fa == 0.0 {
                found.push((es[i], target));
                continue;
            }
            if fa.signum() != fb.signum() && fb != 0.0 {
                let r = roots::brent(|e| d(e) - target, es[i], es[i + 1], EDGE_XTOL)
                    .ok_or(Error::EdgeAmbiguity { energy: es[i] })?;
                found.push((r, target));
            }
        }
        if ds[es.len() - 1] == target {
            found.push((es[es.len() - 1], target));
        }
    }
    for &(x, t) in &closed {
        found.retain(|f| (f.0 - x).abs() > 1e3 * EDGE_XTOL);
        found.push((x, t));
        found.push((x, t));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut edges = Vec::with_capacity(found.len());
    let mut i = 0;
    while i < found.len() {
        let (e, t) = found[i];
        if i + 1 < found.len() && found[i + 1].0 == e {
            // closed gap: upper edge of the band below, lower edge of the one above
            let below = band_index_near(v, e, -step)?;
            edges.push(BandEdge { energy: e, label: EdgeLabel { index: below + 1, primed: false }, discriminant: t });
            edges.push(BandEdge { energy: e, label: EdgeLabel { index: below + 1, primed: true }, discriminant: t });
            i += 2;
            continue;
        }
        let next = found.get(i + 1).map(|f| f.0).unwrap_or(range.1);
        let prev = if i > 0 { found[i - 1].0 } else { range.0 };
        let above = probe(e, next, step);
        let label = if d(above).abs() < 2.0 {
            let k = dirichlet_zero_count(v, above)?;
            EdgeLabel { index: k, primed: k > 0 }
        } else {
            let below = probe(e, prev, -step);
            let k = dirichlet_zero_count(v, below)?;
            EdgeLabel { index: k + 1, primed: false }
        };
        edges.push(BandEdge { energy: e, label, discriminant: t });
        i += 1;
    }
    let mut warnings = Vec::new();
    for w in edges.windows(2) {
        if w[1].energy - w[0].energy < 10.0 * step && !w[0].label.primed && w[1].label.primed {
            warnings.push(EdgeWarning::Degenerate { lower: w[0].energy, upper: w[1].energy });
        }
    }
    Ok(BandStructure { edges, search_range: range, scan_step: step, warnings })
}

/// A point strictly between `e` and `other`, at most one scan step from `e`.
fn probe(e: f64, other: f64, step: f64) -> f64 {
    let half = 0.5 * (other - e);
    if half.abs() < step.abs() {
        e + half
    } else {
        e + step
    }
}

fn band_index_near(v: &PotentialSpec, e: f64, offset: f64) -> Result<u32> {
    dirichlet_zero_count(v, e + offset)
}

/// Classify `e` against a computed band structure, cross-checking the
/// discriminant against interval membership.
pub fn classify_energy(v: &PotentialSpec, e: f64, bands: &BandStructure) -> Result<Classification> {
    let data = floquet_data(v, e)?;
    if data.classification == Classification::AtEdge {
        return Err(Error::EdgeAmbiguity { energy: e });
    }
    if let Some(by_interval) = bands.locate(e) {
        if by_interval != data.classification {
            return Err(Error::ClassificationMismatch { energy: e });
        }
    }
    Ok(data.classification)
}

/// Crystal quasimomentum `k ∈ [0, π/T]` with `2 cos(kT) = D`.
pub fn dispersion_k(v: &PotentialSpec, e: f64) -> Result<f64> {
    let t = require_period(v)?;
    let d = discriminant(v, e)?;
    if d.abs() >= 2.0 {
        return Err(Error::Domain("quasimomentum is real only inside bands"));
    }
    Ok((0.5 * d).acos() / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;
    use core::f64::consts::PI;

    fn lame() -> PotentialSpec {
        PotentialSpec::lame(1, 0.5).unwrap()
    }

    #[test]
    fn multipliers() {
        let (p, m) = floquet_multipliers(2.5);
        assert_eq!((p.re, m.re), (2.0, 0.5));
        let (p, m) = floquet_multipliers(2.0);
        assert_eq!((p, m), (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)));
        let (p, m) = floquet_multipliers(-2.0);
        assert_eq!((p.re, m.re), (-1.0, -1.0));
        for d in [-7.3, -2.2, -1.0, 0.3, 1.99, 3.0, 1e8] {
            let (p, m) = floquet_multipliers(d);
            assert!((p * m - 1.0).norm() < 1e-12);
            assert!((p + m - d).norm() < 1e-12 * d.abs().max(1.0));
            assert!(p.norm() >= 1.0 - 1e-15);
        }
    }

    #[test]
    fn free_discriminant() {
        let v = PotentialSpec::Free { period: PI };
        assert!((discriminant(&v, 1.0).unwrap() + 2.0).abs() < 1e-9);
        for e in [0.3, 2.7, 5.0] {
            let d = discriminant(&v, e).unwrap();
            assert!((d - 2.0 * (e.sqrt() * PI).cos()).abs() < 1e-9);
            let k = dispersion_k(&v, e).unwrap();
            assert!((2.0 * (k * PI).cos() - d).abs() < 1e-10);
        }
        assert!(dispersion_k(&v, -1.0).is_err());
    }

    #[test]
    fn lame_edges_and_classification() {
        let v = lame();
        let bs = find_band_edges(&v, (-0.5, 2.5), DEFAULT_SCAN_STEP).unwrap();
        let got: Vec<_> = bs.edges.iter().map(|e| (e.energy, alloc::format!("{}", e.label))).collect();
        assert_eq!(got.len(), 3, "{got:?}");
        for ((e, l), (want, wl)) in got.iter().zip([(0.5, "E0"), (1.0, "E1"), (1.5, "E1'")]) {
            assert!((e - want).abs() < 1e-6, "{e} vs {want}");
            assert_eq!(l, wl);
        }
        assert!((discriminant(&v, 1.0).unwrap() + 2.0).abs() < 1e-8);
        assert_eq!(classify_energy(&v, 1.2, &bs).unwrap(), Classification::InGap(1));
        assert!(discriminant(&v, 1.2).unwrap() < -2.0);
        assert_eq!(classify_energy(&v, 0.7, &bs).unwrap(), Classification::InsideBand);
        let below = floquet_data(&v, -0.5).unwrap();
        assert_eq!(below.classification, Classification::InGap(0));
        assert!(below.beta_plus.re > 0.0 && below.beta_minus.re > 0.0);
        assert_eq!(bs.gap(1), Some((bs.edges[1].energy, bs.edges[2].energy)));
    }

    #[test]
    fn free_particle_has_closed_gaps() {
        let v = PotentialSpec::Free { period: PI };
        let bs = find_band_edges(&v, (-0.5, 4.5), DEFAULT_SCAN_STEP).unwrap();
        let es = bs.energies();
        assert_eq!(es.len(), 5, "{:?}", bs.edges);
        for (e, want) in es.iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
            assert!((e - want).abs() < 1e-6);
        }
        assert_eq!(alloc::format!("{}", bs.edges[2].label), "E1'");
    }

    #[test]
    fn shift_invariance_of_discriminant() {
        let v = lame();
        let s = PotentialSpec::Shifted { base: Box::new(v.clone()), delta: 0.77 };
        for e in [0.2, 0.8, 1.3, 2.0] {
            let (a, b) = (discriminant(&v, e).unwrap(), discriminant(&s, e).unwrap());
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }
}
