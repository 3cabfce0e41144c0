//! Run configuration: command-line flags and JSON files resolve to the
//! same [`RunConfig`], which is echoed in every manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isospec::potential::{DomainCut, PotentialKind};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const OUTPUT_ENV: &str = "ISOSPEC_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "isospec-out";

#[derive(Debug, Parser)]
#[command(name = "isospec", version, args_conflicts_with_subcommands = true, about = "Darboux, Crum and strictly isospectral transformations of 1D Schrödinger potentials")]
pub struct Cli {
    /// JSON run configuration (or a manifest from an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true, env = OUTPUT_ENV)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state energies and wavefunctions.
    Spectrum(Flags<SpectrumOptions>),
    /// Single Darboux transform with a bound-state seed.
    Darboux(Flags<DarbouxOptions>),
    /// Crum iteration or Adler pair deletion.
    Crum(Flags<CrumOptions>),
    /// Strictly isospectral DDGR family.
    Ddgr(Flags<DdgrOptions>),
    /// DDGR versus Pursey versus Abraham–Moses.
    Compare(Flags<CompareOptions>),
    /// Algebraic spectrum of a shape-invariant family.
    Si(Flags<SiOptions>),
    /// SUSY-WKB quantization of a superpotential.
    Swkb(Flags<SwkbOptions>),
    /// Time-dependent Darboux transform checked by propagation.
    Tdse(Flags<TdseOptions>),
    /// Krein inverse scattering round trip.
    Krein(Flags<KreinOptions>),
    /// Reflection and transmission amplitudes.
    Scatter(Flags<ScatterOptions>),
}

#[derive(Debug, Args)]
pub struct Flags<O: Args> {
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(flatten)]
    pub options: O,
}

#[derive(Debug, Args)]
pub struct CommonFlags {
    /// free, harmonic, poschl_teller or custom_sampled.
    #[arg(long, default_value = "harmonic")]
    pub potential: String,
    /// ℓ of −ℓ(ℓ+1) sech² x.
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long, value_enum, default_value = "full-line")]
    pub domain_cut: CutFlag,
    /// `x,u` CSV for custom_sampled.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Also write two-column plot data.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CutFlag {
    FullLine,
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Spectrum,
    Darboux,
    Crum,
    Ddgr,
    Compare,
    Si,
    Swkb,
    Tdse,
    Krein,
    Scatter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub domain_cut: DomainCut,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig { kind: "harmonic".into(), parameters: BTreeMap::new(), domain_cut: DomainCut::FullLine, samples: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub command_options: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_plot_data: bool,
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError::new("cli", "config", message)
}

/// Typed options of one command; unknown keys are rejected.
pub trait CommandOptions: Serialize + for<'de> Deserialize<'de> + Default {
    fn check(&self) -> Result<(), CliError> {
        Ok(())
    }
}

pub fn parse_options<O: CommandOptions>(map: &Map<String, Value>) -> Result<O, CliError> {
    let o: O = serde_json::from_value(Value::Object(map.clone())).map_err(|e| config_error(format!("command_options: {e}")))?;
    o.check()?;
    Ok(o)
}

fn to_map<O: CommandOptions>(o: &O) -> Map<String, Value> {
    match serde_json::to_value(o).expect("options serialize") {
        Value::Object(m) => m,
        _ => unreachable!("options are structs"),
    }
}

macro_rules! options {
    ($(#[$meta:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $($(#[$fm])* pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $($field: $default,)* }
            }
        }
    };
}

options!(SpectrumOptions {
    #[arg(long, default_value_t = 5)]
    levels: usize = 5,
    #[arg(long, default_value_t = 1e-8)]
    bisection_tolerance: f64 = 1e-8,
});

options!(DarbouxOptions {
    /// Bound level used as the seed.
    #[arg(long, default_value_t = 0)]
    seed_level: usize = 0,
    /// Levels compared between source and partner.
    #[arg(long, default_value_t = 4)]
    levels: usize = 4,
    #[arg(long)]
    force_singular: bool = false,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64 = 1e-5,
});

options!(CrumOptions {
    /// Source bound levels used as seeds.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0usize, 1])]
    seed_levels: Vec<usize> = vec![0, 1],
    /// Free-particle seeds cosh κ₁x, sinh κ₂x, … at energies −κᵢ²; replaces seed_levels.
    #[arg(long, value_delimiter = ',')]
    kappas: Vec<f64> = Vec::new(),
    /// Delete levels k, k+1 instead (Adler).
    #[arg(long)]
    adler: Option<usize> = None,
    #[arg(long, default_value_t = 4)]
    levels: usize = 4,
});

options!(DdgrOptions {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0f64])]
    lambda: Vec<f64> = vec![1.0],
    /// Run the eigensolver and double-Darboux checks.
    #[arg(long)]
    verify: bool = false,
    #[arg(long, default_value_t = 5)]
    levels: usize = 5,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64 = 1e-5,
});

options!(CompareOptions {
    #[arg(long, default_value_t = 2.0)]
    lambda: f64 = 2.0,
    /// Explicit wavenumbers; overrides the k range.
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64> = Vec::new(),
    #[arg(long, default_value_t = 0.25)]
    k_min: f64 = 0.25,
    #[arg(long, default_value_t = 5.0)]
    k_max: f64 = 5.0,
    #[arg(long, default_value_t = 20)]
    k_count: usize = 20,
});

options!(SiOptions {
    /// harmonic or poschl_teller.
    #[arg(long, default_value = "harmonic")]
    family: String = "harmonic".into(),
    /// First parameter a₁.
    #[arg(long, default_value_t = 1.0)]
    a: f64 = 1.0,
    #[arg(long, default_value_t = 4)]
    n_max: usize = 4,
    /// Compare with the eigensolver on V₋(a₁).
    #[arg(long)]
    verify: bool = false,
});

options!(SwkbOptions {
    #[arg(long, default_value = "harmonic")]
    family: String = "harmonic".into(),
    #[arg(long, default_value_t = 1.0)]
    a: f64 = 1.0,
    #[arg(long, default_value_t = 5)]
    n_max: usize = 5,
    #[arg(long, default_value_t = 1e-12)]
    energy_tolerance: f64 = 1e-12,
});

options!(TdseOptions {
    /// ground (bound state of the potential), cosh or plane_wave.
    #[arg(long, default_value = "auto")]
    seed: String = "auto".into(),
    /// κ of the cosh κx seed at energy −κ², or k of the plane-wave seed.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64 = 1.0,
    #[arg(long, default_value_t = 0.2)]
    t_max: f64 = 0.2,
    #[arg(long, default_value_t = 0.01)]
    dt: f64 = 0.01,
    /// Initial packet centre, wavenumber and width.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    packet_x0: f64 = -1.0,
    #[arg(long, default_value_t = 0.5)]
    packet_k: f64 = 0.5,
    #[arg(long, default_value_t = 1.5)]
    packet_width: f64 = 1.5,
    #[arg(long)]
    strict: bool = false,
    #[arg(long)]
    write_slices: bool = false,
});

options!(KreinOptions {
    /// test_well (forward data of −depth·r²e^{−r²}), potential (forward data of --potential), gaussian or free.
    #[arg(long, default_value = "test_well")]
    source: String = "test_well".into(),
    #[arg(long, default_value_t = 0.6)]
    depth: f64 = 0.6,
    #[arg(long, default_value_t = 6.0)]
    r_max: f64 = 6.0,
    #[arg(long, default_value_t = 241)]
    r_points: usize = 241,
    #[arg(long, default_value_t = 40.0)]
    k_cutoff: f64 = 40.0,
    #[arg(long, default_value_t = 4000)]
    k_points: usize = 4000,
    /// Wavenumbers at which forward |F| is tabulated.
    #[arg(long, default_value_t = 401)]
    k_samples: usize = 401,
});

options!(ScatterOptions {
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64> = Vec::new(),
    #[arg(long, default_value_t = 0.25)]
    k_min: f64 = 0.25,
    #[arg(long, default_value_t = 5.0)]
    k_max: f64 = 5.0,
    #[arg(long, default_value_t = 20)]
    k_count: usize = 20,
});

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive, got {v}")))
    }
}

fn k_range(k: &[f64], k_min: f64, k_max: f64, k_count: usize) -> Result<(), CliError> {
    if let Some(bad) = k.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(config_error(format!("wavenumber {bad} must be positive")));
    }
    if k.is_empty() && k_count > 0 {
        positive("k_min", k_min)?;
        if !(k_max >= k_min) {
            return Err(config_error("k_max must not be below k_min"));
        }
    }
    Ok(())
}

/// Wavenumbers from an explicit list or an inclusive uniform range.
pub fn wavenumbers(k: &[f64], k_min: f64, k_max: f64, k_count: usize) -> Vec<f64> {
    if !k.is_empty() {
        return k.to_vec();
    }
    match k_count {
        0 => Vec::new(),
        1 => vec![k_min],
        n => (0..n).map(|i| k_min + (k_max - k_min) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl CommandOptions for SpectrumOptions {
    fn check(&self) -> Result<(), CliError> {
        if self.levels == 0 {
            return Err(config_error("levels must be positive"));
        }
        positive("bisection_tolerance", self.bisection_tolerance)
    }
}

impl CommandOptions for DarbouxOptions {
    fn check(&self) -> Result<(), CliError> {
        positive("tolerance", self.tolerance)
    }
}

impl CommandOptions for CrumOptions {
    fn check(&self) -> Result<(), CliError> {
        if self.adler.is_none() && self.kappas.is_empty() && self.seed_levels.is_empty() {
            return Err(config_error("crum needs seed_levels, kappas or adler"));
        }
        for k in &self.kappas {
            positive("kappa", *k)?;
        }
        Ok(())
    }
}

impl CommandOptions for DdgrOptions {
    fn check(&self) -> Result<(), CliError> {
        if self.lambda.is_empty() {
            return Err(config_error("ddgr needs at least one lambda"));
        }
        positive("tolerance", self.tolerance)
    }
}

impl CommandOptions for CompareOptions {
    fn check(&self) -> Result<(), CliError> {
        k_range(&self.k, self.k_min, self.k_max, self.k_count)
    }
}

impl CommandOptions for SiOptions {}

impl CommandOptions for SwkbOptions {
    fn check(&self) -> Result<(), CliError> {
        positive("energy_tolerance", self.energy_tolerance)
    }
}

impl CommandOptions for TdseOptions {
    fn check(&self) -> Result<(), CliError> {
        positive("dt", self.dt)?;
        positive("packet_width", self.packet_width)?;
        if !(self.t_max >= 0.0) {
            return Err(config_error("t_max must be nonnegative"));
        }
        if !["auto", "ground", "cosh", "plane_wave"].contains(&self.seed.as_str()) {
            return Err(config_error(format!("unknown tdse seed `{}`", self.seed)));
        }
        Ok(())
    }
}

impl CommandOptions for KreinOptions {
    fn check(&self) -> Result<(), CliError> {
        positive("r_max", self.r_max)?;
        positive("k_cutoff", self.k_cutoff)?;
        if self.r_points < 3 || self.k_samples < 3 {
            return Err(config_error("r_points and k_samples must be at least 3"));
        }
        if !["test_well", "potential", "gaussian", "free"].contains(&self.source.as_str()) {
            return Err(config_error(format!("unknown krein source `{}`", self.source)));
        }
        Ok(())
    }
}

impl CommandOptions for ScatterOptions {
    fn check(&self) -> Result<(), CliError> {
        k_range(&self.k, self.k_min, self.k_max, self.k_count)
    }
}

fn resolve_options(kind: CommandKind, map: &Map<String, Value>) -> Result<Map<String, Value>, CliError> {
    fn go<O: CommandOptions>(m: &Map<String, Value>) -> Result<Map<String, Value>, CliError> {
        Ok(to_map(&parse_options::<O>(m)?))
    }
    match kind {
        CommandKind::Spectrum => go::<SpectrumOptions>(map),
        CommandKind::Darboux => go::<DarbouxOptions>(map),
        CommandKind::Crum => go::<CrumOptions>(map),
        CommandKind::Ddgr => go::<DdgrOptions>(map),
        CommandKind::Compare => go::<CompareOptions>(map),
        CommandKind::Si => go::<SiOptions>(map),
        CommandKind::Swkb => go::<SwkbOptions>(map),
        CommandKind::Tdse => go::<TdseOptions>(map),
        CommandKind::Krein => go::<KreinOptions>(map),
        CommandKind::Scatter => go::<ScatterOptions>(map),
    }
}

impl RunConfig {
    /// Validates the configuration and fills every default, so the result
    /// re-runs identically.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let kind = PotentialKind::parse(&self.potential.kind).map_err(|e| config_error(e.to_string()))?;
        self.potential.kind = kind.name().to_string();
        if kind == PotentialKind::CustomSampled && self.potential.samples.is_none() {
            return Err(config_error("custom_sampled needs a samples file"));
        }
        if kind != PotentialKind::CustomSampled && self.potential.samples.is_some() {
            return Err(config_error("samples are only read for custom_sampled"));
        }
        if kind != PotentialKind::CustomSampled && self.grid.is_none() {
            self.grid = Some(match self.potential.domain_cut {
                DomainCut::FullLine => GridConfig { x_min: -15.0, x_max: 15.0, n_points: 3001 },
                DomainCut::HalfLine => GridConfig { x_min: 0.0, x_max: 30.0, n_points: 3001 },
            });
        }
        if let Some(g) = self.grid {
            isospec::Grid::new(g.x_min, g.x_max, g.n_points).map_err(|e| config_error(e.to_string()))?;
        }
        self.command_options = resolve_options(self.command, &self.command_options)?;
        if self.output_dir.is_none() {
            self.output_dir = Some(std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUTPUT.into()));
        }
        Ok(self)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| DEFAULT_OUTPUT.into())
    }

    /// Reads a run config, or the `config` member of a manifest.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let v: Value = serde_json::from_str(text).map_err(|e| config_error(format!("config file: {e}")))?;
        let v = match v {
            Value::Object(mut m) if m.contains_key("manifest_version") => {
                m.remove("config").ok_or_else(|| config_error("manifest has no config"))?
            }
            v => v,
        };
        serde_json::from_value(v).map_err(|e| config_error(format!("config file: {e}")))
    }
}

impl Command {
    pub fn into_config(self) -> RunConfig {
        fn build<O: Args + CommandOptions>(kind: CommandKind, f: Flags<O>) -> RunConfig {
            let c = f.common;
            let mut parameters = BTreeMap::new();
            if let Some(ell) = c.ell {
                parameters.insert("ell".to_string(), ell);
            }
            let domain_cut = match c.domain_cut {
                CutFlag::FullLine => DomainCut::FullLine,
                CutFlag::HalfLine => DomainCut::HalfLine,
            };
            let grid = match (c.x_min, c.x_max, c.n_points) {
                (None, None, None) => None,
                (a, b, n) => {
                    let (d0, d1) = match domain_cut {
                        DomainCut::FullLine => (-15.0, 15.0),
                        DomainCut::HalfLine => (0.0, 30.0),
                    };
                    Some(GridConfig { x_min: a.unwrap_or(d0), x_max: b.unwrap_or(d1), n_points: n.unwrap_or(3001) })
                }
            };
            RunConfig {
                command: kind,
                potential: PotentialConfig { kind: c.potential, parameters, domain_cut, samples: c.samples },
                grid,
                command_options: to_map(&f.options),
                output_dir: None,
                emit_plot_data: c.plot,
            }
        }
        match self {
            Command::Spectrum(f) => build(CommandKind::Spectrum, f),
            Command::Darboux(f) => build(CommandKind::Darboux, f),
            Command::Crum(f) => build(CommandKind::Crum, f),
            Command::Ddgr(f) => build(CommandKind::Ddgr, f),
            Command::Compare(f) => build(CommandKind::Compare, f),
            Command::Si(f) => build(CommandKind::Si, f),
            Command::Swkb(f) => build(CommandKind::Swkb, f),
            Command::Tdse(f) => build(CommandKind::Tdse, f),
            Command::Krein(f) => build(CommandKind::Krein, f),
            Command::Scatter(f) => build(CommandKind::Scatter, f),
        }
    }
}
