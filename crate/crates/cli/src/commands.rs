//! The ten subcommands. Each returns a [`ResultBundle`]; nothing here writes files.

use darboux_bands_core::analysis::{self, DefectReport};
use darboux_bands_core::band;
use darboux_bands_core::bloch::{self, BlochFunction, Branch};
use darboux_bands_core::catalog::{self, ShiftFlavor};
use darboux_bands_core::darboux::{self, DarbouxResult, KappaSuperposition, TransformationFunction};
use darboux_bands_core::specfun::{self, EllipticParameter, WeierstrassLattice};
use darboux_bands_core::{Complex64, Error, PotentialSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{BranchChoice, Command, Flavor, PotentialDesc, RunConfig};
use crate::output::{num, Cell, Plot, PlotKind, ResultBundle, Series, Table};
use crate::CliError;

/// Upper bound on the number of samples of any output grid.
const MAX_SAMPLES: usize = 2_000_000;

pub fn execute(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    match cfg.command {
        Command::Discriminant => discriminant(cfg),
        Command::BandEdges => band_edges(cfg),
        Command::Bloch => bloch_cmd(cfg),
        Command::NodalCurves => nodal_curves(cfg),
        Command::Darboux1 => darboux1(cfg),
        Command::Darboux2 => darboux2(cfg),
        Command::Displace => displace(cfg),
        Command::Defect => defect(cfg),
        Command::TwoSolitonDisplacement => two_soliton(cfg),
        Command::Specfun => specfun_cmd(cfg),
    }
}

fn config<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn req(x: Option<f64>, flag: &str, cmd: Command) -> Result<f64, CliError> {
    x.ok_or_else(|| CliError::Config(format!("{} needs --{flag}", cmd.name())))
}

/// Invalid potential parameters are configuration errors.
fn build_potential(desc: &PotentialDesc) -> Result<PotentialSpec, CliError> {
    let r = match *desc {
        PotentialDesc::Free { period } => {
            if period > 0.0 {
                Ok(PotentialSpec::Free { period })
            } else {
                Err(Error::Domain("the period must be positive"))
            }
        }
        PotentialDesc::Soliton1 { gamma0 } => catalog::make_one_soliton(gamma0),
        PotentialDesc::Soliton2 { gamma1, gamma2 } => catalog::make_two_soliton(gamma1, gamma2),
        PotentialDesc::Lame { n, m } => catalog::make_lame(n, m),
        PotentialDesc::CollageSoliton1 { gamma0, a } => {
            catalog::make_one_soliton(gamma0).and_then(|b| catalog::periodize(b, a))
        }
        PotentialDesc::CollageSoliton2 { gamma1, gamma2, a: Some(a) } => {
            catalog::make_two_soliton(gamma1, gamma2).and_then(|b| catalog::periodize(b, a))
        }
        PotentialDesc::CollageSoliton2 { gamma1, gamma2, a: None } => catalog::collage_two_soliton(gamma1, gamma2),
    };
    r.map_err(|e| CliError::Config(format!("invalid potential: {e}")))
}

fn potential(cfg: &RunConfig) -> Result<PotentialSpec, CliError> {
    match &cfg.potential {
        Some(d) => build_potential(d),
        None => config(format!("{} needs --potential", cfg.command.name())),
    }
}

fn period(v: &PotentialSpec, cmd: Command) -> Result<f64, CliError> {
    v.period().ok_or_else(|| CliError::Config(format!("{} needs a periodic potential", cmd.name())))
}

/// `lo, lo + h, …, hi` with `h` close to `step` (or `(hi-lo)/default_cells`).
fn grid(range: (f64, f64), step: Option<f64>, default_cells: usize) -> Result<Vec<f64>, CliError> {
    let (lo, hi) = range;
    let n = match step {
        Some(h) => ((hi - lo) / h).round().max(1.0),
        None => default_cells as f64,
    };
    if n > MAX_SAMPLES as f64 {
        return config(format!("--step gives {n} samples, more than {MAX_SAMPLES}"));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
}

fn branch(cfg: &RunConfig, i: usize) -> Branch {
    match cfg.options.bloch.get(i) {
        Some(BranchChoice::Inv) => Branch::Inverse,
        _ => Branch::Beta,
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Beta => "beta",
        Branch::Inverse => "inv",
    }
}

fn tf(u: BlochFunction) -> Result<TransformationFunction, CliError> {
    Ok(u.into_transform()?)
}

fn discriminant(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    period(&v, cfg.command)?;
    let energies = match (cfg.options.energy, cfg.options.range) {
        (Some(e), _) => vec![e],
        (None, Some(r)) => grid(r, cfg.options.step, 1000)?,
        (None, None) => return config("discriminant needs --E or --range"),
    };
    let ds = energies.par_iter().map(|&e| band::discriminant(&v, e)).collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(
        "discriminant",
        &[("E", "energy"), ("D", "Lyapunov function: trace of the one-period transfer matrix")],
    );
    for (&e, &d) in energies.iter().zip(&ds) {
        t.push(vec![e.into(), d.into()]);
    }
    let mut b = ResultBundle::default();
    if energies.len() == 1 {
        b.scalar("E", num(energies[0]));
        b.scalar("D", num(ds[0]));
        b.summary.push(format!("D({}) = {:.16e}", energies[0], ds[0]));
    } else {
        let two = vec![2.0; energies.len()];
        let mtwo = vec![-2.0; energies.len()];
        b.plots.push(Plot::line(
            "discriminant",
            "Lyapunov function",
            "E",
            "D(E)",
            vec![Series::new("D", &energies, &ds), Series::new("+2", &energies, &two), Series::new("-2", &energies, &mtwo)],
        ));
    }
    b.tables.push(t);
    Ok(b)
}

fn band_edges(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    period(&v, cfg.command)?;
    let range = cfg.options.range.ok_or_else(|| CliError::Config("band-edges needs --range".into()))?;
    let step = cfg.options.step.unwrap_or(band::DEFAULT_SCAN_STEP);
    let bs = band::find_band_edges(&v, range, step)?;
    let mut t = Table::new(
        "edges",
        &[
            ("label", "edge name E_j or E_j' (primed: upper edge of gap j)"),
            ("index", "gap index j"),
            ("primed", "1 for the upper edge of a gap"),
            ("energy", "edge energy"),
            ("D", "discriminant at the edge: +2 periodic, -2 antiperiodic"),
        ],
    );
    let mut b = ResultBundle::default();
    for e in &bs.edges {
        t.push(vec![
            Cell::Text(e.label.to_string()),
            Cell::Int(e.label.index as i64),
            Cell::Int(e.label.primed as i64),
            e.energy.into(),
            e.discriminant.into(),
        ]);
        b.summary.push(format!("{} = {:.10}", e.label, e.energy));
    }
    b.scalar("edges", Value::Array(bs.edges.iter().map(|e| num(e.energy)).collect()));
    b.scalar(
        "warnings",
        Value::Array(bs.warnings.iter().map(|w| json!({ "name": w.name(), "message": w.message() })).collect()),
    );
    for w in &bs.warnings {
        b.summary.push(format!("{}: {}", w.name(), w.message()));
    }
    // a plot-sized sample of D over the range
    let es = grid(range, None, 2000)?;
    let ds = es.par_iter().map(|&e| band::discriminant(&v, e)).collect::<Result<Vec<_>, _>>()?;
    let mut curve = Table::new("discriminant", &[("E", "energy"), ("D", "trace of the one-period transfer matrix")]);
    for (&e, &d) in es.iter().zip(&ds) {
        curve.push(vec![e.into(), d.into()]);
    }
    let edge_e: Vec<f64> = bs.edges.iter().map(|e| e.energy).collect();
    let edge_d: Vec<f64> = bs.edges.iter().map(|e| e.discriminant).collect();
    b.plots.push(Plot::line("discriminant", "Lyapunov function and band edges", "E", "D(E)", vec![Series::new("D", &es, &ds)]));
    b.plots.push(Plot {
        kind: PlotKind::Scatter,
        ..Plot::line("edges", "Band edges", "E", "D", vec![Series::new("edges", &edge_e, &edge_d)])
    });
    b.tables.push(t);
    b.tables.push(curve);
    Ok(b)
}

fn bloch_cmd(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let t = period(&v, cfg.command)?;
    let alpha = req(cfg.options.alpha.or(cfg.options.energy), "alpha", cfg.command)?;
    let br = branch(cfg, 0);
    let u = bloch::bloch_function(&v, alpha, br)?;
    let xs = grid(cfg.options.range.unwrap_or((0.0, 3.0 * t)), cfg.options.step, 600)?;
    let vals = xs.par_iter().map(|&x| u.extend_complex(x)).collect::<Result<Vec<_>, _>>()?;
    let mut tab = Table::new(
        "bloch",
        &[
            ("x", "position"),
            ("re_u", "Re u(x)"),
            ("im_u", "Im u(x)"),
            ("re_du", "Re u'(x)"),
            ("im_du", "Im u'(x)"),
        ],
    );
    for (&x, (p, d)) in xs.iter().zip(&vals) {
        tab.push(vec![x.into(), p.re.into(), p.im.into(), d.re.into(), d.im.into()]);
    }
    let mut b = ResultBundle::default();
    b.scalar("alpha", num(alpha));
    b.scalar("branch", branch_name(br));
    b.scalar("beta", json!({ "re": num(u.beta.re), "im": num(u.beta.im) }));
    b.scalar("real", u.is_real());
    b.scalar("normalized_at", u.normalized_at.map(num).unwrap_or(Value::Null));
    b.summary.push(format!("beta = {} {:+}i", u.beta.re, u.beta.im));
    let re: Vec<f64> = vals.iter().map(|v| v.0.re).collect();
    let mut series = vec![Series::new("Re u", &xs, &re)];
    if !u.is_real() {
        let im: Vec<f64> = vals.iter().map(|v| v.0.im).collect();
        series.push(Series::new("Im u", &xs, &im));
    }
    b.plots.push(Plot::line("bloch", &format!("Bloch function at alpha = {alpha}"), "x", "u", series));
    b.tables.push(tab);
    Ok(b)
}

fn nodal_curves(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let t = period(&v, cfg.command)?;
    let range = cfg.options.range.ok_or_else(|| {
        CliError::Config("nodal-curves needs --range (energy interval containing the gap)".into())
    })?;
    let j = cfg.options.gap.unwrap_or(1);
    if j == 0 {
        return config("nodal-curves needs a finite gap, --gap >= 1");
    }
    let bs = band::find_band_edges(&v, range, band::DEFAULT_SCAN_STEP)?;
    let gap = bs.gap(j).ok_or_else(|| CliError::Config(format!("gap {j} is not inside --range")))?;
    let full = grid(gap, cfg.options.step, 200)?;
    let alphas = &full[1..full.len() - 1];
    if alphas.is_empty() {
        return config("--step leaves no energy strictly inside the gap");
    }
    let rows = alphas
        .par_iter()
        .map(|&a| bloch::nodal_curves(&v, gap, &[a]).map(|mut r| r.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tab = Table::new(
        "nodes",
        &[
            ("alpha", "factorization energy inside the gap"),
            ("branch", "beta: |beta| > 1, inv: 1/beta"),
            ("x", "node position in [0, T)"),
        ],
    );
    let (mut bx, mut ba, mut ix, mut ia) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in &rows {
        for &x in &r.beta_nodes {
            tab.push(vec![r.alpha.into(), Cell::Text("beta".into()), x.into()]);
            bx.push(x);
            ba.push(r.alpha);
        }
        for &x in &r.inverse_nodes {
            tab.push(vec![r.alpha.into(), Cell::Text("inv".into()), x.into()]);
            ix.push(x);
            ia.push(r.alpha);
        }
    }
    let mut b = ResultBundle::default();
    b.scalar("gap", json!([num(gap.0), num(gap.1)]));
    b.scalar("period", num(t));
    b.summary.push(format!("gap {j}: ({:.10}, {:.10}), {} energies", gap.0, gap.1, rows.len()));
    b.plots.push(Plot {
        kind: PlotKind::Scatter,
        ..Plot::line("nodes", "Nodal curves", "x", "alpha", vec![Series::new("u^beta", &bx, &ba), Series::new("u^(1/beta)", &ix, &ia)])
    });
    b.tables.push(tab);
    Ok(b)
}

/// `x, V0, V1` and one extra column over the output window.
fn potential_table(
    v0: &PotentialSpec,
    res: &DarbouxResult,
    xs: &[f64],
    extra: (&str, &str),
    f: impl Fn(f64) -> f64 + Sync,
) -> (Table, Plot) {
    let rows: Vec<(f64, f64, f64)> = xs.par_iter().map(|&x| (v0.eval(x), res.potential(x), f(x))).collect();
    let mut t = Table::new(
        "potential",
        &[("x", "position"), ("V0", "original potential"), ("V1", "transformed potential"), extra],
    );
    for (&x, r) in xs.iter().zip(&rows) {
        t.push(vec![x.into(), r.0.into(), r.1.into(), r.2.into()]);
    }
    let v0s: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let v1s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let plot = Plot::line(
        "potential",
        &format!("Darboux transform of order {}", res.order()),
        "x",
        "V",
        vec![Series::new("V0", xs, &v0s), Series::new("V1", xs, &v1s)],
    );
    (t, plot)
}

fn sup_shift(res: &DarbouxResult, v0: &PotentialSpec, delta: f64, xs: &[f64]) -> f64 {
    xs.iter().map(|&x| (res.potential(x) - v0.eval(x + delta)).abs()).fold(0.0, f64::max)
}

fn report_defect(b: &mut ResultBundle, r: &DefectReport) {
    b.scalar("delta_minus", num(r.delta_minus));
    b.scalar("delta_plus", num(r.delta_plus));
    b.scalar("residual_minus", num(r.residual_minus));
    b.scalar("residual_plus", num(r.residual_plus));
    b.summary.push(format!(
        "delta- = {:.6} (residual {:.2e}), delta+ = {:.6} (residual {:.2e})",
        r.delta_minus, r.residual_minus, r.delta_plus, r.residual_plus
    ));
    let mut t = Table::new(
        "tail_fits",
        &[
            ("offset", "distance X of the fit windows [-X-L, -X] and [X, X+L]"),
            ("delta_minus", "shift fitted on the left tail"),
            ("residual_minus", "sup |V1(x) - V0(x + delta)| on the left window"),
            ("delta_plus", "shift fitted on the right tail"),
            ("residual_plus", "sup |V1(x) - V0(x + delta)| on the right window"),
        ],
    );
    for f in &r.tail_fits {
        t.push(vec![
            f.offset.into(),
            f.left.delta.into(),
            f.left.residual_sup.into(),
            f.right.delta.into(),
            f.right.residual_sup.into(),
        ]);
    }
    b.tables.push(t);
}

fn report_displacement(b: &mut ResultBundle, v: &PotentialSpec, res: &DarbouxResult, t: f64) -> Result<(), CliError> {
    let r = analysis::detect_displacement(v, |x| res.potential(x), (0.0, 2.0 * t), None)?;
    b.scalar("delta", num(r.delta));
    b.scalar("residual", num(r.residual_sup));
    b.scalar("half_period", num(0.5 * t));
    b.summary.push(format!("delta = {:.6}, residual = {:.3e}", r.delta, r.residual_sup));
    Ok(())
}

fn darboux1(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let alpha = req(cfg.options.alpha, "alpha", cfg.command)?;
    let mut b = ResultBundle::default();
    b.scalar("alpha", num(alpha));
    if let Some(PotentialDesc::Soliton1 { gamma0 }) = cfg.potential {
        if alpha >= 0.0 {
            return config("darboux1 on soliton1 needs --alpha = -gamma1^2 < 0");
        }
        let g1 = (-alpha).sqrt();
        let (flavor, delta) = match cfg.options.flavor.unwrap_or(Flavor::Real) {
            Flavor::Real => (ShiftFlavor::RealShift, catalog::soliton1_shift(gamma0, g1)?),
            Flavor::Complex => (ShiftFlavor::ComplexHalfPeriod, catalog::soliton1_complex_shift(gamma0, g1)?),
        };
        let u = catalog::soliton1_bloch_seed(gamma0, g1, flavor)?;
        let res = darboux::darboux1(&v, u)?;
        let xs = grid(cfg.options.range.unwrap_or((-15.0, 15.0)), cfg.options.step, 800)?;
        let residual = sup_shift(&res, &v, delta, &xs);
        b.scalar("gamma1", num(g1));
        b.scalar("delta", num(delta));
        b.scalar("residual", num(residual));
        b.summary.push(format!("delta = {delta:.10}, residual = {residual:.3e}"));
        let (tab, plot) = potential_table(&v, &res, &xs, ("w", "superpotential u'/u"), |x| {
            res.superpotential(x).unwrap_or(f64::NAN)
        });
        b.tables.push(tab);
        b.plots.push(plot);
        return Ok(b);
    }
    let t = period(&v, cfg.command)?;
    let (res, beta) = match cfg.options.kappa {
        Some(k) => {
            let (up, um) = bloch::bloch_pair(&v, alpha)?;
            let beta = up.beta.re;
            let u = darboux::superpose_one(&tf(up)?, &tf(um)?, k)?;
            b.scalar("kappa", num(k));
            (darboux::darboux1(&v, u)?, beta)
        }
        None => {
            let br = branch(cfg, 0);
            let u = bloch::bloch_function(&v, alpha, br)?;
            b.scalar("branch", branch_name(br));
            let beta = u.beta.re;
            (darboux::darboux1(&v, tf(u)?)?, beta)
        }
    };
    b.scalar("beta", num(beta));
    let default = if cfg.options.kappa.is_some() { (-10.0 * t, 10.0 * t) } else { (-2.0 * t, 2.0 * t) };
    let xs = grid(cfg.options.range.unwrap_or(default), cfg.options.step, 800)?;
    match cfg.options.kappa {
        Some(k) => {
            let off = analysis::default_tail_offset(t, beta, k);
            let r = analysis::asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, off, 3)?;
            report_defect(&mut b, &r);
        }
        None => report_displacement(&mut b, &v, &res, t)?,
    }
    let (tab, plot) =
        potential_table(&v, &res, &xs, ("w", "superpotential u'/u"), |x| res.superpotential(x).unwrap_or(f64::NAN));
    b.tables.push(tab);
    b.plots.push(plot);
    Ok(b)
}

/// Pure-Bloch or superposed second-order transform of a periodic potential.
fn periodic_second_order(
    cfg: &RunConfig,
    v: &PotentialSpec,
    a1: f64,
    a2: f64,
    b: &mut ResultBundle,
) -> Result<(DarbouxResult, Option<(f64, f64)>), CliError> {
    if cfg.options.kappa1.is_some() || cfg.options.kappa2.is_some() {
        let (k1, k2) = (cfg.options.kappa1.unwrap_or(0.0), cfg.options.kappa2.unwrap_or(0.0));
        let [p1, m1, p2, m2] = bloch::theorem1_basis(v, a1, a2)?;
        let beta = p1.beta.re.abs().min(p2.beta.re.abs());
        let k = KappaSuperposition {
            kappa1: k1,
            kappa2: k2,
            u_beta1: tf(p1)?,
            u_inv1: tf(m1)?,
            u_beta2: tf(p2)?,
            u_inv2: tf(m2)?,
        };
        let (u1, u2) = darboux::superpose(&k)?;
        b.scalar("kappa1", num(k1));
        b.scalar("kappa2", num(k2));
        Ok((darboux::darboux2(v, u1, u2)?, Some((beta, k1.max(k2)))))
    } else {
        let (b1, b2) = (branch(cfg, 0), branch(cfg, 1));
        let u1 = bloch::bloch_function(v, a1, b1)?;
        let u2 = bloch::bloch_function(v, a2, b2)?;
        b.scalar("bloch", json!([branch_name(b1), branch_name(b2)]));
        b.scalar("beta1", num(u1.beta.re));
        b.scalar("beta2", num(u2.beta.re));
        Ok((darboux::darboux2(v, tf(u1)?, tf(u2)?)?, None))
    }
}

fn darboux2(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let a1 = req(cfg.options.alpha1, "alpha1", cfg.command)?;
    let a2 = req(cfg.options.alpha2, "alpha2", cfg.command)?;
    let mut b = ResultBundle::default();
    b.scalar("alpha1", num(a1));
    b.scalar("alpha2", num(a2));
    let wcol = ("W", "Wronskian W(u1, u2) of the seeds");
    if let Some(PotentialDesc::Soliton2 { gamma1, gamma2 }) = cfg.potential {
        if a1 >= 0.0 || a2 >= 0.0 {
            return config("darboux2 on soliton2 needs negative --alpha1, --alpha2 (= -gamma3^2, -gamma4^2)");
        }
        let (g3, g4) = ((-a1).sqrt(), (-a2).sqrt());
        let sys = catalog::two_soliton_displacement(gamma1, gamma2, g3, g4)?;
        let u3 = catalog::two_soliton_seed(gamma1, gamma2, g3)?;
        let u4 = catalog::two_soliton_seed(gamma1, gamma2, g4)?;
        let res = darboux::darboux2_on(&v, u3, u4, Some((-40.0, 40.0)))?;
        let xs = grid(cfg.options.range.unwrap_or((-25.0, 25.0)), cfg.options.step, 800)?;
        let (delta, residual) = [sys.delta_a, -sys.delta_a]
            .into_iter()
            .filter(|d| d.is_finite())
            .map(|d| (d, sup_shift(&res, &v, d, &xs)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap_or((f64::NAN, f64::NAN));
        b.scalar("gamma3", num(g3));
        b.scalar("gamma4", num(g4));
        b.scalar("delta_a", num(sys.delta_a));
        b.scalar("delta_b", num(sys.delta_b));
        b.scalar("region", format!("{:?}", sys.region));
        b.scalar("delta", num(delta));
        b.scalar("residual", num(residual));
        b.summary.push(format!(
            "deltaA = {:.10}, deltaB = {:.10}, residual of shift {:.6} = {:.3e}",
            sys.delta_a, sys.delta_b, delta, residual
        ));
        let (tab, plot) = potential_table(&v, &res, &xs, wcol, |x| res.wronskian(x).map_or(f64::NAN, |w| w.value()));
        b.tables.push(tab);
        b.plots.push(plot);
        return Ok(b);
    }
    if let Some(PotentialDesc::Soliton1 { gamma0 }) = cfg.potential {
        if a1 >= 0.0 || a2 >= 0.0 {
            return config("darboux2 on soliton1 needs negative --alpha1, --alpha2 (= -gamma1^2, -gamma2^2)");
        }
        let (g1, g2) = ((-a1).sqrt(), (-a2).sqrt());
        // each complex-shift seed alone is singular; the pair is not
        let flavor = cfg.options.flavor.unwrap_or(Flavor::Complex);
        let (f, shift): (ShiftFlavor, fn(f64, f64) -> darboux_bands_core::Result<f64>) = match flavor {
            Flavor::Real => (ShiftFlavor::RealShift, catalog::soliton1_shift),
            Flavor::Complex => (ShiftFlavor::ComplexHalfPeriod, catalog::soliton1_complex_shift),
        };
        let delta = shift(gamma0, g1)? + shift(gamma0, g2)?;
        let u1 = catalog::soliton1_bloch_seed(gamma0, g1, f)?;
        let u2 = catalog::soliton1_bloch_seed(gamma0, g2, f)?;
        let res = darboux::darboux2(&v, u1, u2)?;
        let xs = grid(cfg.options.range.unwrap_or((-15.0, 15.0)), cfg.options.step, 800)?;
        let residual = sup_shift(&res, &v, delta, &xs);
        b.scalar("delta", num(delta));
        b.scalar("residual", num(residual));
        b.summary.push(format!("delta = {delta:.10}, residual = {residual:.3e}"));
        let (tab, plot) = potential_table(&v, &res, &xs, wcol, |x| res.wronskian(x).map_or(f64::NAN, |w| w.value()));
        b.tables.push(tab);
        b.plots.push(plot);
        return Ok(b);
    }
    let t = period(&v, cfg.command)?;
    let (res, defect) = periodic_second_order(cfg, &v, a1, a2, &mut b)?;
    let default = if defect.is_some() { (-10.0 * t, 10.0 * t) } else { (-2.0 * t, 2.0 * t) };
    let xs = grid(cfg.options.range.unwrap_or(default), cfg.options.step, 800)?;
    match defect {
        Some((beta, k)) => {
            let off = analysis::default_tail_offset(t, beta, k.max(1.0));
            let r = analysis::asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, off, 3)?;
            report_defect(&mut b, &r);
        }
        None => report_displacement(&mut b, &v, &res, t)?,
    }
    let (tab, plot) = potential_table(&v, &res, &xs, wcol, |x| res.wronskian(x).map_or(f64::NAN, |w| w.value()));
    b.tables.push(tab);
    b.plots.push(plot);
    Ok(b)
}

fn order(cfg: &RunConfig) -> Result<u8, CliError> {
    match cfg.options.order {
        Some(o @ (1 | 2)) => Ok(o),
        Some(o) => config(format!("--order must be 1 or 2, got {o}")),
        None if cfg.options.alpha1.is_some() || cfg.options.alpha2.is_some() => Ok(2),
        None => Ok(1),
    }
}

fn displace(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let t = period(&v, cfg.command)?;
    let mut b = ResultBundle::default();
    let res = if order(cfg)? == 1 {
        let alpha = req(cfg.options.alpha, "alpha", cfg.command)?;
        let br = branch(cfg, 0);
        b.scalar("alpha", num(alpha));
        b.scalar("bloch", json!([branch_name(br)]));
        darboux::darboux1(&v, tf(bloch::bloch_function(&v, alpha, br)?)?)?
    } else {
        let a1 = req(cfg.options.alpha1, "alpha1", cfg.command)?;
        let a2 = req(cfg.options.alpha2, "alpha2", cfg.command)?;
        if cfg.options.kappa1.is_some() || cfg.options.kappa2.is_some() {
            return config("displace works on pure Bloch transforms; use defect for --kappa1/--kappa2");
        }
        b.scalar("alpha1", num(a1));
        b.scalar("alpha2", num(a2));
        periodic_second_order(cfg, &v, a1, a2, &mut b)?.0
    };
    let xs = grid((0.0, 2.0 * t), None, analysis::DISPLACEMENT_POINTS)?;
    let v1: Vec<f64> = xs.par_iter().map(|&x| res.potential(x)).collect();
    let full = grid((0.0, t), cfg.options.step, analysis::DELTA_SCAN_CELLS)?;
    let deltas = &full[..full.len() - 1];
    let objective: Vec<f64> = deltas
        .par_iter()
        .map(|&d| xs.iter().zip(&v1).map(|(&x, &y)| (y - v.eval(x + d)).abs()).fold(0.0, f64::max))
        .collect();
    let mut tab = Table::new(
        "objective",
        &[("delta", "trial shift in [0, T)"), ("residual", "sup over [0, 2T] of |V1(x) - V0(x + delta)|")],
    );
    for (&d, &r) in deltas.iter().zip(&objective) {
        tab.push(vec![d.into(), r.into()]);
    }
    report_displacement(&mut b, &v, &res, t)?;
    b.plots.push(Plot::line(
        "objective",
        "Displacement objective",
        "delta",
        "sup |V1(x) - V0(x + delta)|",
        vec![Series::new("residual", deltas, &objective)],
    ));
    b.tables.push(tab);
    Ok(b)
}

fn defect(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let v = potential(cfg)?;
    let t = period(&v, cfg.command)?;
    let mut b = ResultBundle::default();
    let (res, beta, kappa) = if order(cfg)? == 1 {
        let alpha = req(cfg.options.alpha, "alpha", cfg.command)?;
        let k = cfg.options.kappa.unwrap_or(1.0);
        let (up, um) = bloch::bloch_pair(&v, alpha)?;
        let beta = up.beta.re;
        let u = darboux::superpose_one(&tf(up)?, &tf(um)?, k)?;
        b.scalar("alpha", num(alpha));
        b.scalar("kappa", num(k));
        (darboux::darboux1(&v, u)?, beta, k)
    } else {
        let a1 = req(cfg.options.alpha1, "alpha1", cfg.command)?;
        let a2 = req(cfg.options.alpha2, "alpha2", cfg.command)?;
        let mut c = cfg.clone();
        c.options.kappa1.get_or_insert(1.0);
        c.options.kappa2.get_or_insert(1.0);
        b.scalar("alpha1", num(a1));
        b.scalar("alpha2", num(a2));
        let (res, d) = periodic_second_order(&c, &v, a1, a2, &mut b)?;
        let (beta, k) = d.expect("superposed transform");
        (res, beta, k.max(1.0))
    };
    b.scalar("beta", num(beta));
    let off = analysis::default_tail_offset(t, beta, kappa);
    let r = analysis::asymptotic_displacements(&v, |x| res.potential(x), 2.0 * t, off, 3)?;
    report_defect(&mut b, &r);
    let states = darboux::injected_states(&res);
    let xs = grid(cfg.options.range.unwrap_or((-12.0 * t, 12.0 * t)), cfg.options.step, 1200)?;
    let (tab, plot) = potential_table(&v, &res, &xs, ("dV", "V1 - V0"), |x| res.potential(x) - v.eval(x));
    let v1 = res.into_potential();
    let reports: Vec<_> = states.par_iter().map(|s| analysis::bound_state_check(&v1, s, t, &[20.0, 40.0, 80.0])).collect();
    let mut bt = Table::new(
        "bound_states",
        &[
            ("energy", "factorization energy of the injected state"),
            ("accepted", "1 if normalizable with eigen-residual below 1e-5"),
            ("eigen_residual", "relative residual of the eigenvalue equation"),
            ("localization_length", "RMS spread of |phi|^2"),
            ("l2_norm", "L2 norm on the widest window"),
        ],
    );
    let mut cols: Vec<(&str, &str)> = vec![("x", "position")];
    let names = ["phi1", "phi2"];
    for (i, _) in states.iter().enumerate() {
        cols.push((names[i], "injected state, unit L2 norm"));
    }
    let mut st = Table::new("states", &cols);
    for r in &reports {
        let norm = r.l2_norms.last().copied().unwrap_or(f64::NAN);
        bt.push(vec![
            r.energy.into(),
            Cell::Int(r.accepted as i64),
            r.eigen_residual.into(),
            r.localization_length.into(),
            norm.into(),
        ]);
        b.summary.push(format!(
            "bound state at E = {:.6}: accepted = {}, residual = {:.2e}, localization = {:.4}",
            r.energy, r.accepted, r.eigen_residual, r.localization_length
        ));
    }
    let phis: Vec<Vec<f64>> = states
        .iter()
        .zip(&reports)
        .map(|(s, r)| {
            let n = r.l2_norms.last().copied().unwrap_or(1.0);
            xs.par_iter().map(|&x| s.func.eval_scaled(x).value().psi / n).collect()
        })
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![Cell::Num(x)];
        row.extend(phis.iter().map(|p| Cell::Num(p[i])));
        st.push(row);
    }
    b.scalar(
        "bound_states",
        Value::Array(
            reports
                .iter()
                .map(|r| json!({ "energy": num(r.energy), "accepted": r.accepted, "eigen_residual": num(r.eigen_residual) }))
                .collect(),
        ),
    );
    b.plots.push(plot);
    b.plots.push(Plot::line(
        "states",
        "Injected bound states",
        "x",
        "phi",
        phis.iter().enumerate().map(|(i, p)| Series::new(names[i], &xs, p)).collect(),
    ));
    b.tables.push(tab);
    b.tables.push(bt);
    b.tables.push(st);
    Ok(b)
}

fn two_soliton(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let (g1, g2) = match cfg.potential {
        Some(PotentialDesc::Soliton2 { gamma1, gamma2 }) => (gamma1, gamma2),
        _ => return config("two-soliton-displacement needs --potential soliton2 (or none) with --gamma1 < --gamma2"),
    };
    build_potential(cfg.potential.as_ref().expect("checked"))?;
    let range = cfg.options.range.unwrap_or((g1, g2));
    let full = grid(range, cfg.options.step, 200)?;
    let g3s = &full[1..full.len() - 1];
    let found: Vec<_> = g3s.par_iter().map(|&g3| catalog::find_consistent_displacement(g1, g2, g3)).collect();
    let mut curve = Table::new(
        "curve",
        &[
            ("gamma3", "first seed decay rate (energy -gamma3^2)"),
            ("gamma4", "second seed decay rate solving deltaA = deltaB"),
            ("delta", "common displacement"),
            ("mismatch", "|deltaA - deltaB| at the solution"),
        ],
    );
    let mut b = ResultBundle::default();
    let mut missing = 0usize;
    for r in &found {
        match r {
            Ok(c) => curve.push(vec![c.gamma3.into(), c.gamma4.into(), c.delta.into(), c.mismatch.into()]),
            Err(Error::NoIntersection) | Err(Error::Domain(_)) => missing += 1,
            Err(e) => return Err(CliError::Numeric(e.clone())),
        }
    }
    b.scalar("gamma1", num(g1));
    b.scalar("gamma2", num(g2));
    b.scalar("slices_without_intersection", missing as u64);
    b.summary.push(format!("{} consistent points, {missing} slices without intersection", curve.rows.len()));
    // the two surfaces on a coarse square grid
    let side = grid(range, None, 100)?;
    let mut surf = Table::new(
        "surfaces",
        &[
            ("gamma3", "first seed decay rate"),
            ("gamma4", "second seed decay rate"),
            ("delta_a", "shift implied by the gamma1 factor (empty outside its domain)"),
            ("delta_b", "shift implied by the gamma2 factor (empty outside its domain)"),
            ("region", "Omega1: both below gamma1, Omega2: both inside, Omega3: both above"),
        ],
    );
    for &g3 in &side {
        for &g4 in &side {
            if g3 <= 0.0 || g4 <= 0.0 {
                continue;
            }
            let s = catalog::two_soliton_displacement(g1, g2, g3, g4)?;
            surf.push(vec![g3.into(), g4.into(), s.delta_a.into(), s.delta_b.into(), Cell::Text(format!("{:?}", s.region))]);
        }
    }
    let (x, y, d) = (curve.column("gamma3"), curve.column("gamma4"), curve.column("delta"));
    b.plots.push(Plot::line("curve", "Consistent seeds", "gamma3", "gamma4", vec![Series::new("deltaA = deltaB", &x, &y)]));
    b.plots.push(Plot::line("delta", "Common displacement", "gamma3", "delta", vec![Series::new("delta", &x, &d)]));
    b.tables.push(curve);
    b.tables.push(surf);
    Ok(b)
}

fn specfun_cmd(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let m = req(cfg.options.m, "m", cfg.command)?;
    let p = EllipticParameter::new(m).map_err(|e| CliError::Config(format!("invalid --m: {e}")))?;
    let q = specfun::complete_elliptic(p);
    let jac = specfun::Jacobi::new(p);
    let lat = WeierstrassLattice::from_parameter(p);
    let xs = grid(cfg.options.range.unwrap_or((0.0, 4.0 * q.k)), cfg.options.step, 400)?;
    let mut jt = Table::new(
        "jacobi",
        &[("x", "real argument"), ("sn", "sn(x|m)"), ("cn", "cn(x|m)"), ("dn", "dn(x|m)")],
    );
    let mut wt = Table::new(
        "weierstrass",
        &[
            ("x", "real argument"),
            ("p", "Weierstrass p (empty at lattice poles)"),
            ("zeta", "Weierstrass zeta (empty at lattice poles)"),
            ("sigma", "Weierstrass sigma"),
        ],
    );
    let (mut sn, mut cn, mut dn) = (Vec::new(), Vec::new(), Vec::new());
    for &x in &xs {
        let (s, c, d) = jac.sn_cn_dn(x);
        sn.push(s);
        cn.push(c);
        dn.push(d);
        jt.push(vec![x.into(), s.into(), c.into(), d.into()]);
        let z = Complex64::new(x, 0.0);
        let pv = lat.p(z).map_or(f64::NAN, |v| v.re);
        let zv = lat.zeta(z).map_or(f64::NAN, |v| v.re);
        wt.push(vec![x.into(), pv.into(), zv.into(), lat.sigma(z).re.into()]);
    }
    let mut b = ResultBundle::default();
    b.scalar("m", num(m));
    b.scalar("K", num(q.k));
    b.scalar("K_prime", num(q.k_prime));
    b.scalar("omega", num(lat.omega));
    b.scalar("omega_prime_im", num(lat.omega_prime_im));
    b.scalar("eta", num(lat.eta()));
    b.scalar("e", Value::Array(lat.roots_e.iter().map(|&e| num(e)).collect()));
    b.summary.push(format!("K = {:.16e}, K' = {:.16e}", q.k, q.k_prime));
    b.plots.push(Plot::line(
        "jacobi",
        &format!("Jacobi functions, m = {m}"),
        "x",
        "value",
        vec![Series::new("sn", &xs, &sn), Series::new("cn", &xs, &cn), Series::new("dn", &xs, &dn)],
    ));
    b.tables.push(jt);
    b.tables.push(wt);
    Ok(b)
}
