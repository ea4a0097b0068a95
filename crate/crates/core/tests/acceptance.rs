//! Acceptance suite: criteria 1-13 and the collage fragment-size ratio.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion prints
//! exactly one PASS/FAIL line even when the run succeeds.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use darboux_bands_core::analysis::{self, detect_displacement};
use darboux_bands_core::band::{self, EdgeLabel};
use darboux_bands_core::bloch::{self, BlochFunction, Branch};
use darboux_bands_core::catalog::{self, ShiftFlavor};
use darboux_bands_core::darboux::{self, KappaSuperposition, TransformationFunction};
use darboux_bands_core::engine;
use darboux_bands_core::{Error, PotentialSpec};
use rand::{Rng, SeedableRng};

struct Fail(String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(format!("{}: {e}", e.name()))
    }
}

type Check = Result<String, Fail>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), Fail> {
    if cond {
        Ok(())
    } else {
        Err(Fail(msg.into()))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn tf(u: BlochFunction) -> Result<TransformationFunction, Fail> {
    Ok(u.into_transform()?)
}

fn lame() -> PotentialSpec {
    PotentialSpec::lame(1, 0.5).unwrap()
}

fn collage1(gamma0: f64, a: f64) -> PotentialSpec {
    catalog::periodize(catalog::make_one_soliton(gamma0).unwrap(), a).unwrap()
}

const LABELS: [(u32, bool); 7] = [(0, false), (1, false), (1, true), (2, false), (2, true), (3, false), (3, true)];

/// Edges `E0 … E3'` against a printed table.
fn edge_table(v: &PotentialSpec, range: (f64, f64), want: [f64; 7], tol: f64) -> Result<f64, Fail> {
    let bs = band::find_band_edges(v, range, band::DEFAULT_SCAN_STEP)?;
    let mut worst: f64 = 0.0;
    for ((index, primed), w) in LABELS.into_iter().zip(want) {
        let label = EdgeLabel { index, primed };
        let e = bs.edge(label).ok_or_else(|| Fail(format!("edge {label} not found")))?;
        ensure((e - w).abs() < tol, format!("{label} = {e:.6}, expected {w} ± {tol}"))?;
        worst = worst.max((e - w).abs());
    }
    Ok(worst)
}

fn c01() -> Check {
    let t = Instant::now();
    let want = [-0.8107, -0.8090, 0.0001, 0.1578, 0.1580, 0.5926, 0.5929];
    let worst = edge_table(&collage1(0.9, 5.0), (-1.0, 0.7), want, 2e-3)?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(30), format!("took {el:?}"))?;
    Ok(format!("max deviation {worst:.1e}, {:.2} s", el.as_secs_f64()))
}

fn c02() -> Check {
    let want = [-0.2664, 0.3204, 0.3817, 2.1967, 2.2073, 5.2838, 5.2885];
    let worst = edge_table(&collage1(0.4, 2.0), (-0.5, 5.5), want, 2e-3)?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn c03() -> Check {
    let bs = band::find_band_edges(&lame(), (0.0, 3.0), band::DEFAULT_SCAN_STEP)?;
    let got = bs.energies();
    ensure(got.len() == 3, format!("expected 3 edges, found {got:?}"))?;
    let worst = got.iter().zip([0.5, 1.0, 1.5]).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-6, format!("edges {got:?}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn c04() -> Check {
    let mut worst: f64 = 0.0;
    for (g0, a) in [(0.9, 5.0), (0.4, 2.0)] {
        let v = collage1(g0, a);
        for e in linspace(0.05, 6.0, 200) {
            let an = catalog::lyapunov_soliton1_analytic(e, a, g0)?;
            let nu = band::discriminant(&v, e)?;
            worst = worst.max((an - nu).abs());
        }
    }
    ensure(worst < 1e-8, format!("max |D_analytic - D_numeric| = {worst:.2e}"))?;
    Ok(format!("max abs error {worst:.1e} over 2 x 200 energies"))
}

fn c05() -> Check {
    let (g0, g1) = (0.6, 1.0);
    let d = catalog::soliton1_shift(g0, g1)?;
    let want = (g0 / g1).atanh() / g0;
    ensure((d - want).abs() < 1e-14, format!("shift {d} vs {want}"))?;
    let v0 = catalog::make_one_soliton(g0)?;
    let res = darboux::darboux1(&v0, catalog::soliton1_bloch_seed(g0, g1, ShiftFlavor::RealShift)?)?;
    let err = linspace(-30.0, 30.0, 6001)
        .into_iter()
        .map(|x| (res.potential(x) - v0.eval(x + d)).abs())
        .fold(0.0, f64::max);
    ensure(err < 1e-8, format!("sup error {err:.2e}"))?;
    Ok(format!("delta1 = {d:.6}, sup error {err:.1e}"))
}

fn c06() -> Check {
    let v = lame();
    let t = v.period().unwrap();
    let u1 = bloch::bloch_function(&v, 1.1, Branch::Inverse)?;
    let u2 = bloch::bloch_function(&v, 1.4, Branch::Beta)?;
    let res = darboux::darboux2(&v, tf(u1)?, tf(u2)?)?;
    let r = detect_displacement(&v, |x| res.potential(x), (0.0, 2.0 * t), None)?;
    ensure((r.delta - 0.747).abs() < 2e-3, format!("delta = {}", r.delta))?;
    ensure(r.residual_sup < 1e-5, format!("residual {:.2e}", r.residual_sup))?;
    ensure((r.delta - 0.5 * t).abs() > 0.1, format!("delta {} too close to T/2", r.delta))?;
    Ok(format!("delta = {:.4} (T/2 = {:.4}), residual {:.1e}", r.delta, 0.5 * t, r.residual_sup))
}

fn c07() -> Check {
    let grid = linspace(-5.0, 5.0, 201);
    let v = lame();
    let mut worst: f64 = 0.0;
    for alpha in [-1.0, 0.2, 0.45] {
        let p = catalog::LameBlochParams::from_alpha(0.5, alpha)?;
        let delta = catalog::lame_bloch_pair(&p)?.delta.re;
        let (up, um) = bloch::bloch_pair(&v, alpha)?;
        let (_, rel) = analysis::theorem2_constancy(&tf(up)?, &tf(um)?, delta, &grid)?;
        worst = worst.max(rel);
    }
    ensure(worst < 1e-8, format!("n = 1 relative variation {worst:.2e}"))?;
    let v3 = PotentialSpec::lame(3, 0.5)?;
    let t3 = v3.period().unwrap();
    let (up, um) = bloch::bloch_pair(&v3, -0.5)?;
    let (up, um) = (tf(up)?, tf(um)?);
    let mut best = f64::INFINITY;
    for i in 0..400 {
        best = best.min(analysis::theorem2_constancy(&up, &um, t3 * i as f64 / 400.0, &grid)?.1);
    }
    let factor = best / 1e-8;
    ensure(factor >= 1e4, format!("n = 3 best relative variation {best:.2e}"))?;
    Ok(format!("n = 1 variation {worst:.1e}; n = 3 best {best:.1e} (factor {factor:.1e})"))
}

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Node count, alternation, Wronskian sign and `W' = (α1-α2) u1 u2` for
/// one pair of Bloch functions in gap 1.
fn proposition1_pair(u1: &BlochFunction, u2: &BlochFunction) -> Result<f64, Fail> {
    let t = u1.period;
    let win = (-6.0 * t, 6.0 * t);
    let n1 = bloch::find_nodes(u1, win)?;
    let n2 = bloch::find_nodes(u2, win)?;
    ensure(n1.count_per_period == 1 && n2.count_per_period == 1, "node count per period differs from 1")?;
    let mut merged: Vec<(f64, u8)> = n1.nodes.iter().map(|&x| (x, 0)).chain(n2.nodes.iter().map(|&x| (x, 1))).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure(merged.windows(2).all(|w| w[0].1 != w[1].1), "nodes do not alternate")?;
    let da = u1.alpha - u2.alpha;
    let w = |x: f64| -> Result<f64, Fail> {
        let (a, b) = (u1.extend(x)?, u2.extend(x)?);
        Ok(a.psi * b.dpsi - a.dpsi * b.psi)
    };
    let prod = |x: f64| -> Result<f64, Fail> { Ok(da * u1.extend(x)?.psi * u2.extend(x)?.psi) };
    // W' = (α1 - α2) u1 u2 in integrated form, W(b) - W(a) = ∫ (α1 - α2) u1 u2,
    // which is insensitive to the seams where the sampled period is repeated
    let mut sign = 0.0;
    let mut worst: f64 = 0.0;
    let xs = linspace(win.0, win.1, 12 * 64 + 1);
    let mut wa = w(xs[0])?;
    for s in xs.windows(2) {
        let (a, b) = (s[0], s[1]);
        ensure(wa != 0.0 && (sign == 0.0 || wa.signum() == sign), format!("W changes sign near x = {a}"))?;
        sign = wa.signum();
        let wb = w(b)?;
        let mut integral = 0.0;
        let sub = 4;
        let hs = (b - a) / sub as f64;
        for k in 0..sub {
            let (c, r) = (a + hs * (k as f64 + 0.5), 0.5 * hs);
            for (node, weight) in GAUSS5 {
                integral += r * weight * prod(c + r * node)?;
            }
        }
        worst = worst.max(((wb - wa) - integral).abs() / (wa.abs() + wb.abs()));
        wa = wb;
    }
    ensure(wa.signum() == sign, "W changes sign at the window end")?;
    Ok(worst)
}

fn c08() -> Check {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for v in [lame(), collage1(0.9, 5.0)] {
        let bs = band::find_band_edges(&v, (-1.0, 1.6), band::DEFAULT_SCAN_STEP)?;
        let (lo, hi) = bs.gap(1).ok_or_else(|| Fail("gap 1 not found".into()))?;
        let margin = 1e-2 * (hi - lo);
        for _ in 0..20 {
            let a1 = rng.gen_range(lo + margin..hi - margin);
            let a2 = rng.gen_range(lo + margin..hi - margin);
            let (p1, m1) = bloch::bloch_pair(&v, a1)?;
            let (p2, m2) = bloch::bloch_pair(&v, a2)?;
            for (u1, u2) in [(&p1, &p2), (&p1, &m2), (&m1, &p2), (&m1, &m2)] {
                worst = worst.max(proposition1_pair(u1, u2)?);
                pairs += 1;
            }
        }
    }
    ensure(worst < 1e-8, format!("W' identity error {worst:.2e}"))?;
    Ok(format!("{pairs} Bloch pairs over 12 periods, W' identity error {worst:.1e}"))
}

fn c09() -> Check {
    let v = lame();
    let t = v.period().unwrap();
    let [p1, m1, p2, m2] = bloch::theorem1_basis(&v, 1.2, 1.3)?;
    let (p1, m1, p2, m2) = (tf(p1)?, tf(m1)?, tf(p2)?, tf(m2)?);
    let mut rng = rand::rngs::StdRng::seed_from_u64(99);
    let xs = linspace(-20.0 * t, 20.0 * t, 8001);
    let mut min_rel = f64::INFINITY;
    for i in 0..20 {
        let (k1, k2) = if i == 0 { (0.0, 0.0) } else { (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)) };
        let (v1, v2) = darboux::superpose(&KappaSuperposition {
            kappa1: k1,
            kappa2: k2,
            u_beta1: p1.clone(),
            u_inv1: m1.clone(),
            u_beta2: p2.clone(),
            u_inv2: m2.clone(),
        })?;
        for &x in &xs {
            let (a, b) = (v1.eval_scaled(x), v2.eval_scaled(x));
            let w = a.psi * b.dpsi - a.dpsi * b.psi;
            let scale = (a.psi.hypot(a.dpsi)) * (b.psi.hypot(b.dpsi));
            ensure(w > 0.0, format!("W(v1, v2) = {w:e} at x = {x}, kappa = ({k1}, {k2})"))?;
            min_rel = min_rel.min(w / scale);
        }
    }
    Ok(format!("20 (kappa1, kappa2) pairs, min W/(|v1||v2|) = {min_rel:.2e} on 8001 points"))
}

fn c10() -> Check {
    let v = lame();
    let t = v.period().unwrap();
    let schedule = [20.0, 40.0, 80.0];
    // first order, alpha = 0.35 below E0 = 0.5
    let (up, um) = bloch::bloch_pair(&v, 0.35)?;
    let beta = up.beta.re;
    let u = darboux::superpose_one(&tf(up)?, &tf(um)?, 1.0)?;
    let res = darboux::darboux1(&v, u)?;
    let r1 = analysis::asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, analysis::default_tail_offset(t, beta, 1.0), 3)?;
    ensure(r1.residual_minus < 1e-4 && r1.residual_plus < 1e-4, format!("order 1 tail residuals {r1:?}"))?;
    let states = darboux::injected_states(&res);
    let v1 = res.into_potential();
    let acc1: Vec<_> = states.iter().map(|s| analysis::bound_state_check(&v1, s, t, &schedule)).filter(|r| r.accepted).collect();
    ensure(acc1.len() == 1 && acc1[0].energy < 0.5, format!("order 1 accepted states {acc1:?}"))?;
    // second order, alpha1 = 1.2, alpha2 = 1.3 in gap (1, 1.5)
    let [p1, m1, p2, m2] = bloch::theorem1_basis(&v, 1.2, 1.3)?;
    let beta = p1.beta.re.abs().min(p2.beta.re.abs());
    let (w1, w2) = darboux::superpose(&KappaSuperposition {
        kappa1: 1.0,
        kappa2: 1.0,
        u_beta1: tf(p1)?,
        u_inv1: tf(m1)?,
        u_beta2: tf(p2)?,
        u_inv2: tf(m2)?,
    })?;
    let res = darboux::darboux2(&v, w1, w2)?;
    let r2 = analysis::asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, analysis::default_tail_offset(t, beta, 1.0), 3)?;
    ensure(r2.residual_minus < 1e-4 && r2.residual_plus < 1e-4, format!("order 2 tail residuals {r2:?}"))?;
    let states = darboux::injected_states(&res);
    let v2 = res.into_potential();
    let acc2: Vec<_> = states
        .iter()
        .map(|s| analysis::bound_state_check(&v2, s, t, &schedule))
        .filter(|r| r.accepted && r.energy > 1.0 && r.energy < 1.5)
        .collect();
    ensure(acc2.len() == 2, format!("order 2 accepted states in (1, 1.5): {acc2:?}"))?;
    let tail = r1.residual_minus.max(r1.residual_plus).max(r2.residual_minus).max(r2.residual_plus);
    Ok(format!(
        "order 1: state at {:.2}; order 2: states at {:.2}, {:.2}; tail residual <= {tail:.1e}",
        acc1[0].energy, acc2[0].energy, acc2[1].energy
    ))
}

fn c11() -> Check {
    let (g1, g2) = (0.8, 0.805);
    let c = catalog::find_consistent_displacement(g1, g2, 0.8012)?;
    let sys = catalog::two_soliton_displacement(g1, g2, c.gamma3, c.gamma4)?;
    ensure(sys.region == catalog::Region::Omega2, format!("region {:?}", sys.region))?;
    ensure((sys.delta_a - sys.delta_b).abs() < 1e-10, format!("deltaA - deltaB = {:e}", sys.delta_a - sys.delta_b))?;
    let v0 = catalog::make_two_soliton(g1, g2)?;
    let res = darboux::darboux2_on(
        &v0,
        catalog::two_soliton_seed(g1, g2, c.gamma3)?,
        catalog::two_soliton_seed(g1, g2, c.gamma4)?,
        Some((-40.0, 40.0)),
    )?;
    let xs = linspace(-25.0, 25.0, 2001);
    // the sign of the shift depends on which seed decays faster
    let (delta, err) = [c.delta, -c.delta]
        .into_iter()
        .map(|d| (d, xs.iter().map(|&x| (res.potential(x) - v0.eval(x + d)).abs()).fold(0.0, f64::max)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    ensure(err < 1e-6, format!("sup |V1 - V0(. + delta)| = {err:.2e}"))?;
    // closed-form Wronskian of the displaced pair against the numerical one
    let free = catalog::two_soliton_from_free(g1, g2)?;
    let mut worst: f64 = 0.0;
    for x in linspace(-20.0, 20.0, 101) {
        let w = res.wronskian(x).unwrap().value();
        let ratio = free.wronskian(x + delta).unwrap().value() / free.wronskian(x).unwrap().value();
        let want = (-(c.gamma3 + c.gamma4) * x).exp() * (c.gamma3 - c.gamma4) * sys.gamma_big * ratio;
        worst = worst.max(((w.abs() - want.abs()) / want.abs()).abs());
    }
    ensure(worst < 1e-7, format!("closed-form Wronskian relative error {worst:.2e}"))?;
    Ok(format!(
        "(gamma3, gamma4) = ({:.6}, {:.10}), delta = {:.6}, sup error {err:.1e}, closed form {worst:.1e}",
        c.gamma3, c.gamma4, c.delta
    ))
}

fn c12() -> Check {
    let a = catalog::two_soliton_minimum(0.8, 0.805)?;
    ensure((a - 4.0279).abs() < 1e-3, format!("a = {a}"))?;
    let v = catalog::collage_two_soliton(0.8, 0.805)?;
    let bs = band::find_band_edges(&v, (-1.0, 0.3), band::DEFAULT_SCAN_STEP)?;
    let (e1, e1p) = bs.gap(1).ok_or_else(|| Fail("gap 1 not found".into()))?;
    ensure((e1 + 0.6359).abs() < 2e-3 && e1p.abs() < 2e-3, format!("gap 1 = ({e1}, {e1p})"))?;
    Ok(format!("a = {a:.5}, gap 1 = ({e1:.5}, {e1p:.5})"))
}

fn c13() -> Check {
    let pots = [lame(), collage1(0.9, 5.0), PotentialSpec::lame(3, 0.5)?, PotentialSpec::Free { period: 2.0 }];
    let mut det_err: f64 = 0.0;
    for v in &pots {
        let t = v.period().unwrap();
        for e in linspace(-0.5, 6.0, 27) {
            let b = engine::transfer_matrix(v, e, 0.0, t, engine::DEFAULT_TOL)?;
            det_err = det_err.max((b.det() - 1.0).abs());
        }
    }
    ensure(det_err < 1e-9, format!("|det b - 1| = {det_err:.2e}"))?;
    let mut beta_err: f64 = 0.0;
    for d in linspace(-50.0, 50.0, 1001) {
        let (bp, bm) = band::floquet_multipliers(d);
        beta_err = beta_err.max((bp * bm - 1.0).norm());
    }
    ensure(beta_err < 1e-12, format!("|beta+ beta- - 1| = {beta_err:.2e}"))?;
    let mut shift_err: f64 = 0.0;
    for v in &pots[..3] {
        for delta in [0.37, 1.9, -2.6] {
            let s = PotentialSpec::Shifted { base: Box::new(v.clone()), delta };
            for e in linspace(-0.5, 6.0, 40) {
                // absolute where |D| is O(1); relative deep in gaps, where D
                // reaches 1e3 and the integrator tolerance is relative
                let d = band::discriminant(v, e)?;
                shift_err = shift_err.max((band::discriminant(&s, e)? - d).abs() / d.abs().max(10.0) * 10.0);
            }
        }
    }
    ensure(shift_err < 1e-10, format!("shift invariance error {shift_err:.2e}"))?;
    let v = lame();
    let u1 = bloch::bloch_function(&v, 1.1, Branch::Inverse)?;
    let u2 = bloch::bloch_function(&v, 1.4, Branch::Beta)?;
    let res = darboux::darboux2(&v, tf(u1)?, tf(u2)?)?;
    let iso = analysis::isospectrality_check(&v, &res.into_potential(), &linspace(0.0, 3.0, 100))?;
    ensure(iso < 1e-6, format!("isospectrality error {iso:.2e}"))?;
    Ok(format!("det {det_err:.1e}, beta {beta_err:.1e}, shift {shift_err:.1e}, isospectral {iso:.1e}"))
}

/// Figs 3/4: the larger collage fragment is displaced more faithfully.
fn fragment_ratio() -> Check {
    let residual = |g0: f64, a: f64, a1: f64, a2: f64, b1: Branch, b2: Branch| -> Result<f64, Fail> {
        let v = collage1(g0, a);
        let t = v.period().unwrap();
        let u1 = bloch::bloch_function(&v, a1, b1)?;
        let u2 = bloch::bloch_function(&v, a2, b2)?;
        let res = darboux::darboux2(&v, tf(u1)?, tf(u2)?)?;
        Ok(detect_displacement(&v, |x| res.potential(x), (0.0, 2.0 * t), None)?.residual_sup)
    };
    let mut min_ratio = f64::INFINITY;
    let mut detail = Vec::new();
    for (b1, b2) in [(Branch::Beta, Branch::Inverse), (Branch::Inverse, Branch::Beta)] {
        let big = residual(0.9, 5.0, -2.0, -0.9, b1, b2)?;
        let small = residual(0.4, 2.0, -10.0, -2.0, b1, b2)?;
        min_ratio = min_ratio.min(small / big);
        detail.push(format!("{big:.2e} vs {small:.2e}"));
    }
    ensure(min_ratio >= 5.0, format!("ratio {min_ratio:.2} ({})", detail.join(", ")))?;
    Ok(format!("residuals a=5 vs a=2: {}; min ratio {min_ratio:.1}", detail.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 14] = [
        ("1 band-edge table A", c01),
        ("2 band-edge table B", c02),
        ("3 Lame n=1 edges", c03),
        ("4 collage Lyapunov closed form", c04),
        ("5 first-order soliton displacement", c05),
        ("6 Lame second-order displacement", c06),
        ("7 product constancy", c07),
        ("8 nodes and Wronskian in gap 1", c08),
        ("9 superposition Wronskian positivity", c09),
        ("10 defects and bound states", c10),
        ("11 2-soliton consistent displacement", c11),
        ("12 2-soliton collage", c12),
        ("13 structural invariants", c13),
        ("F3/4 fragment-size ratio", fragment_ratio),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err(Fail("panicked".into())));
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS [{name}] {detail} ({secs:.1} s)"),
            Err(Fail(msg)) => {
                failed += 1;
                println!("FAIL [{name}] {msg} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
