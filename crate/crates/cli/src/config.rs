//! Command-line flags and their canonical, serializable form.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "darboux-bands",
    version,
    about = "Band structures of 1D periodic Schrödinger operators and their Darboux transforms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Lyapunov function D(E) = Tr b(T) at one energy or over a range.
    Discriminant(Flags),
    /// Labelled band edges in an energy range.
    BandEdges(Flags),
    /// A Bloch function at one energy, sampled over a window.
    Bloch(Flags),
    /// Nodes of both Bloch functions across a gap.
    NodalCurves(Flags),
    /// First-order Darboux transform from a Bloch function or superposition.
    Darboux1(Flags),
    /// Second-order Darboux transform from two Bloch functions or superpositions.
    Darboux2(Flags),
    /// Displacement objective of a pure-Bloch transform versus the shift.
    Displace(Flags),
    /// Periodicity defect: asymptotic shifts and injected bound states.
    Defect(Flags),
    /// Consistent displacements of the 2-soliton well.
    TwoSolitonDisplacement(Flags),
    /// Jacobi and Weierstrass functions on the real axis.
    Specfun(Flags),
}

impl CliCommand {
    fn split(self) -> (Command, Flags) {
        match self {
            Self::Discriminant(f) => (Command::Discriminant, f),
            Self::BandEdges(f) => (Command::BandEdges, f),
            Self::Bloch(f) => (Command::Bloch, f),
            Self::NodalCurves(f) => (Command::NodalCurves, f),
            Self::Darboux1(f) => (Command::Darboux1, f),
            Self::Darboux2(f) => (Command::Darboux2, f),
            Self::Displace(f) => (Command::Displace, f),
            Self::Defect(f) => (Command::Defect, f),
            Self::TwoSolitonDisplacement(f) => (Command::TwoSolitonDisplacement, f),
            Self::Specfun(f) => (Command::Specfun, f),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Base potential.
    #[arg(long, value_enum)]
    pub potential: Option<PotentialKind>,
    /// Period of the free potential.
    #[arg(long = "T")]
    pub period: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Lamé index.
    #[arg(long)]
    pub n: Option<u32>,
    /// Elliptic parameter.
    #[arg(long)]
    pub m: Option<f64>,
    /// Half-width of the collage fragment.
    #[arg(long)]
    pub a: Option<f64>,
    /// Single energy.
    #[arg(long = "E", allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// Interval `lo:hi` (energies, positions or γ3, depending on the command).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    pub range: Option<(f64, f64)>,
    /// Sampling step inside `--range`.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha2: Option<f64>,
    /// Multiplier per factorization energy, e.g. `beta,inv`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub bloch: Vec<BranchChoice>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub kappa1: Option<f64>,
    #[arg(long)]
    pub kappa2: Option<f64>,
    /// Transformation order for `displace` and `defect`.
    #[arg(long)]
    pub order: Option<u8>,
    /// Gap index for `nodal-curves`.
    #[arg(long)]
    pub gap: Option<u32>,
    /// Shift flavour of the 1-soliton seed.
    #[arg(long, value_enum)]
    pub flavor: Option<Flavor>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: String,
    /// Output formats.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json,svg")]
    pub format: Vec<Format>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Free,
    Soliton1,
    Soliton2,
    Lame,
    CollageSoliton1,
    CollageSoliton2,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    Beta,
    Inv,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Real,
    Complex,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Discriminant,
    BandEdges,
    Bloch,
    NodalCurves,
    Darboux1,
    Darboux2,
    Displace,
    Defect,
    TwoSolitonDisplacement,
    Specfun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Discriminant => "discriminant",
            Self::BandEdges => "band-edges",
            Self::Bloch => "bloch",
            Self::NodalCurves => "nodal-curves",
            Self::Darboux1 => "darboux1",
            Self::Darboux2 => "darboux2",
            Self::Displace => "displace",
            Self::Defect => "defect",
            Self::TwoSolitonDisplacement => "two-soliton-displacement",
            Self::Specfun => "specfun",
        }
    }
}

/// Potential kind together with its parameters.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialDesc {
    Free { period: f64 },
    Soliton1 { gamma0: f64 },
    Soliton2 { gamma1: f64, gamma2: f64 },
    Lame { n: u32, m: f64 },
    CollageSoliton1 { gamma0: f64, a: f64 },
    /// Without `a` the fragment is cut at the two minima of the well.
    CollageSoliton2 {
        gamma1: f64,
        gamma2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
}

impl PotentialDesc {
    fn numbers(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::Free { period } => vec![("T", *period)],
            Self::Soliton1 { gamma0 } => vec![("gamma0", *gamma0)],
            Self::Soliton2 { gamma1, gamma2 } => vec![("gamma1", *gamma1), ("gamma2", *gamma2)],
            Self::Lame { m, .. } => vec![("m", *m)],
            Self::CollageSoliton1 { gamma0, a } => vec![("gamma0", *gamma0), ("a", *a)],
            Self::CollageSoliton2 { gamma1, gamma2, a } => {
                let mut v = vec![("gamma1", *gamma1), ("gamma2", *gamma2)];
                v.extend(a.map(|a| ("a", a)));
                v
            }
        }
    }
}

/// Command-specific options; absent ones are omitted from the canonical text.
#[derive(Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bloch: Vec<BranchChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flavor: Option<Flavor>,
    /// Elliptic parameter for `specfun`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

impl Options {
    fn numbers(&self) -> Vec<(&'static str, f64)> {
        let mut v = Vec::new();
        let mut push = |name, x: Option<f64>| v.extend(x.map(|x| (name, x)));
        push("E", self.energy);
        push("range", self.range.map(|r| r.0));
        push("range", self.range.map(|r| r.1));
        push("step", self.step);
        push("alpha", self.alpha);
        push("alpha1", self.alpha1);
        push("alpha2", self.alpha2);
        push("kappa", self.kappa);
        push("kappa1", self.kappa1);
        push("kappa2", self.kappa2);
        push("m", self.m);
        v
    }
}

/// Everything a run depends on.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDesc>,
    #[serde(default)]
    pub options: Options,
    pub out: String,
    pub formats: Vec<Format>,
}

fn need(v: Option<f64>, kind: &str, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--potential {kind} needs --{flag}")))
}

impl RunConfig {
    /// Validated configuration from parsed flags.
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, f) = cli.command.split();
        let kind = match (f.potential, command) {
            (Some(k), _) => Some(k),
            (None, Command::TwoSolitonDisplacement) => Some(PotentialKind::Soliton2),
            (None, Command::Specfun) => None,
            (None, _) => return Err(CliError::Config(format!("{} needs --potential", command.name()))),
        };
        let potential = match kind {
            None => None,
            Some(k) => Some(match k {
                PotentialKind::Free => PotentialDesc::Free { period: need(f.period, "free", "T")? },
                PotentialKind::Soliton1 => PotentialDesc::Soliton1 { gamma0: need(f.gamma0, "soliton1", "gamma0")? },
                PotentialKind::Soliton2 => PotentialDesc::Soliton2 {
                    gamma1: need(f.gamma1, "soliton2", "gamma1")?,
                    gamma2: need(f.gamma2, "soliton2", "gamma2")?,
                },
                PotentialKind::Lame => PotentialDesc::Lame {
                    n: f.n.ok_or_else(|| CliError::Config("--potential lame needs --n".into()))?,
                    m: need(f.m, "lame", "m")?,
                },
                PotentialKind::CollageSoliton1 => PotentialDesc::CollageSoliton1 {
                    gamma0: need(f.gamma0, "collage-soliton1", "gamma0")?,
                    a: need(f.a, "collage-soliton1", "a")?,
                },
                PotentialKind::CollageSoliton2 => PotentialDesc::CollageSoliton2 {
                    gamma1: need(f.gamma1, "collage-soliton2", "gamma1")?,
                    gamma2: need(f.gamma2, "collage-soliton2", "gamma2")?,
                    a: f.a,
                },
            }),
        };
        let mut formats = f.format.clone();
        formats.sort();
        formats.dedup();
        let cfg = RunConfig {
            command,
            potential,
            options: Options {
                energy: f.energy,
                range: f.range,
                step: f.step,
                alpha: f.alpha,
                alpha1: f.alpha1,
                alpha2: f.alpha2,
                bloch: f.bloch,
                kappa: f.kappa,
                kappa1: f.kappa1,
                kappa2: f.kappa2,
                order: f.order,
                gap: f.gap,
                flavor: f.flavor,
                m: if command == Command::Specfun { f.m } else { None },
            },
            out: f.out,
            formats,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// All numeric fields finite, at least one format, ordered range.
    pub fn validate(&self) -> Result<(), CliError> {
        let pot = self.potential.as_ref().map(|p| p.numbers()).unwrap_or_default();
        for (name, x) in pot.into_iter().chain(self.options.numbers()) {
            if !x.is_finite() {
                return Err(CliError::Config(format!("--{name} must be finite, got {x}")));
            }
        }
        if let Some((lo, hi)) = self.options.range {
            if lo >= hi {
                return Err(CliError::Config(format!("--range needs lo < hi, got {lo}:{hi}")));
            }
        }
        if let Some(s) = self.options.step {
            if s <= 0.0 {
                return Err(CliError::Config("--step must be positive".into()));
            }
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("--format needs at least one of csv, json, svg".into()));
        }
        Ok(())
    }

    /// Canonical text: pretty JSON with a fixed field order.
    pub fn to_canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
