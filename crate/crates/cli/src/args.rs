//! Command-line and config-file arguments.
//!
//! Every command's arguments are optional at parse time so that a TOML file
//! can supply them; flags given on the command line win over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use mazer_core::engine::BarrierModel;
use mazer_core::photon::FieldState;
use mazer_core::resonance::Observable;
use mazer_core::scattering::Quantity;
use mazer_core::{Engine, ModeProfile};

#[derive(Debug, Parser)]
#[command(
    name = "mazer",
    version,
    about = "Ultracold atoms scattered by a cavity field mode"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Globals {
    /// TOML file with defaults for the global options and a table per command.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV files and metadata.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// exact, semiclassical or auto.
    #[arg(long, global = true)]
    pub engine: Option<EngineArg>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Semiclassical barrier model: linear-edge or wkb.
    #[arg(long, global = true)]
    pub barrier: Option<BarrierArg>,
    /// Refuse the exact engine above this many estimated steps per point.
    #[arg(long, global = true)]
    pub exact_step_limit: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scatter at a single point and print all outcome probabilities.
    Scatter(ScatterArgs),
    /// Tabulate probabilities over a window of the vacuum coupling.
    Sweep(SweepArgs),
    /// Stationary micromaser photon distribution.
    SteadyState(SteadyArgs),
    /// Locate transmission resonances in a window.
    Resonances(ResonanceArgs),
    /// Regenerate the data behind one of the reference figures.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scatter(_) => "scatter",
            Command::Sweep(_) => "sweep",
            Command::SteadyState(_) => "steady-state",
            Command::Resonances(_) => "resonances",
            Command::Preset { .. } => "preset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Fig1,
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
}

impl PresetName {
    pub fn name(self) -> &'static str {
        match self {
            PresetName::Fig1 => "fig1",
            PresetName::Fig2a => "fig2a",
            PresetName::Fig2b => "fig2b",
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScatterArgs {
    /// mesa or sinusoidal.
    #[arg(long)]
    pub profile: Option<ProfileArg>,
    /// Incident wavenumber times L.
    #[arg(long)]
    pub kl: Option<Scalar>,
    /// Coupling kappa_n L of the photon number being scattered; accepts `99pi`.
    #[arg(long)]
    pub kappa_nl: Option<Scalar>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepArgs {
    /// mesa, sinusoidal or both.
    #[arg(long)]
    pub profile: Option<ProfileSet>,
    /// Fixed ratio k/kappa_0; kL follows kappa_0 L along the sweep.
    #[arg(long)]
    pub k_over_kappa: Option<f64>,
    /// Fixed kL instead of a fixed ratio.
    #[arg(long)]
    pub kl: Option<Scalar>,
    /// Window start in kappa_0 L; accepts `100pi`.
    #[arg(long)]
    pub from: Option<Scalar>,
    /// Window end in kappa_0 L.
    #[arg(long)]
    pub to: Option<Scalar>,
    /// Grid spacing in kappa_0 L.
    #[arg(long)]
    pub step: Option<Scalar>,
    /// Number of grid points (alternative to --step).
    #[arg(long)]
    pub points: Option<usize>,
    /// Photon numbers tabulated individually, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub photons: Option<Vec<u32>>,
    /// Initial field states averaged over, e.g. `coherent:0.25`, `thermal:1`, `number:3`.
    #[arg(long, value_delimiter = ',')]
    pub field: Option<Vec<FieldSpec>>,
    /// Quantities: Te, Tf, Re, Rf, Pem, T.
    #[arg(long, value_delimiter = ',')]
    pub quantities: Option<Vec<QuantityArg>>,
    /// Output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSource {
    /// Emission probabilities from scattering by the mode.
    Scattering,
    /// sin^2 of the Rabi angle, as for fast atoms.
    Conventional,
    /// No emission; the field thermalizes.
    Zero,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SteadyArgs {
    /// mesa or sinusoidal.
    #[arg(long)]
    pub profile: Option<ProfileArg>,
    /// Ratio k/kappa_0.
    #[arg(long)]
    pub k_over_kappa: Option<f64>,
    /// Vacuum coupling kappa_0 L.
    #[arg(long)]
    pub kappa_l: Option<Scalar>,
    /// Coupling kappa_n L at the photon number given by --at-photons.
    #[arg(long)]
    pub kappa_nl: Option<Scalar>,
    /// Place kappa_n L on this resonance (0-based) of the well transmission.
    #[arg(long)]
    pub resonance: Option<u32>,
    /// Photon number n that --kappa-nl or --resonance refer to.
    #[arg(long)]
    pub at_photons: Option<u32>,
    /// Pump parameter N_ex = r Q / omega.
    #[arg(long)]
    pub n_ex: Option<f64>,
    /// Thermal mean photon number.
    #[arg(long)]
    pub n_b: Option<f64>,
    /// Source of the emission probabilities (default: scattering).
    #[arg(long, value_enum)]
    pub gain: Option<GainSource>,
    /// Output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ResonanceArgs {
    /// mesa or sinusoidal.
    #[arg(long)]
    pub profile: Option<ProfileArg>,
    /// Ratio k/kappa_n held fixed along the window.
    #[arg(long)]
    pub k_over_kappa: Option<f64>,
    /// Window start in kappa_n L.
    #[arg(long)]
    pub from: Option<Scalar>,
    /// Window end in kappa_n L.
    #[arg(long)]
    pub to: Option<Scalar>,
    /// t2 (well transmission) or pem (emission probability).
    #[arg(long)]
    pub observable: Option<ObservableArg>,
    /// Output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

/// A real number that may carry a trailing `pi` factor, such as `100pi` or `0.5*pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalar(pub f64);

impl FromStr for Scalar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        let (num, factor) = match t.strip_suffix("pi") {
            Some(rest) => (rest.trim_end_matches('*').trim(), std::f64::consts::PI),
            None => (t.as_str(), 1.0),
        };
        let v = if num.is_empty() {
            1.0
        } else {
            num.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?
        };
        let v = v * factor;
        if !v.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        Ok(Scalar(v))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Scalar(x)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

macro_rules! string_arg {
    ($name:ident, $inner:ty) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name(pub $inner);

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                s.parse::<$inner>().map($name).map_err(|e| e.to_string())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(&DisplayName(&self.0))
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?
                    .parse()
                    .map_err(serde::de::Error::custom)
            }
        }
    };
}

/// Names written back into metadata so a config round-trips.
trait ArgName {
    fn arg_name(&self) -> String;
}

struct DisplayName<'a, T>(&'a T);

impl<T: ArgName> fmt::Display for DisplayName<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.arg_name())
    }
}

impl ArgName for Engine {
    fn arg_name(&self) -> String {
        self.name().to_string()
    }
}

impl ArgName for ModeProfile {
    fn arg_name(&self) -> String {
        self.name().to_string()
    }
}

impl ArgName for BarrierModel {
    fn arg_name(&self) -> String {
        match self {
            BarrierModel::Wkb => "wkb",
            BarrierModel::LinearEdge => "linear-edge",
        }
        .to_string()
    }
}

impl ArgName for Quantity {
    fn arg_name(&self) -> String {
        self.label().to_string()
    }
}

impl ArgName for Observable {
    fn arg_name(&self) -> String {
        match self {
            Observable::WellTransmission => "t2",
            Observable::Emission => "pem",
        }
        .to_string()
    }
}

string_arg!(EngineArg, Engine);
string_arg!(ProfileArg, ModeProfile);
string_arg!(BarrierArg, BarrierModel);
string_arg!(QuantityArg, Quantity);
string_arg!(ObservableArg, Observable);

/// One profile or both.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet(pub Vec<ModeProfile>);

impl FromStr for ProfileSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("both") {
            return Ok(ProfileSet(ModeProfile::ALL.to_vec()));
        }
        s.parse::<ModeProfile>()
            .map(|p| ProfileSet(vec![p]))
            .map_err(|e| e.to_string())
    }
}

impl Serialize for ProfileSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.len() == 1 {
            s.serialize_str(self.0[0].name())
        } else {
            s.serialize_str("both")
        }
    }
}

impl<'de> Deserialize<'de> for ProfileSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// An initial field state written as `kind:value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec(pub FieldState);

impl FieldSpec {
    /// Column label fragment: `coh0.25`, `th1`, `num3`.
    pub fn label(&self) -> String {
        match self.0 {
            FieldState::Number { n } => format!("num{n}"),
            FieldState::Coherent { mean } => format!("coh{mean}"),
            FieldState::Thermal { mean } => format!("th{mean}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("`{s}`: expected kind:value"))?;
        let state = match kind.to_ascii_lowercase().as_str() {
            "number" | "num" | "fock" => FieldState::Number {
                n: value.parse().map_err(|e| format!("`{s}`: {e}"))?,
            },
            "coherent" | "coh" => FieldState::Coherent {
                mean: value.parse().map_err(|e| format!("`{s}`: {e}"))?,
            },
            "thermal" | "th" => FieldState::Thermal {
                mean: value.parse().map_err(|e| format!("`{s}`: {e}"))?,
            },
            other => return Err(format!("unknown field kind `{other}`")),
        };
        Ok(FieldSpec(state))
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = match self.0 {
            FieldState::Number { n } => format!("number:{n}"),
            FieldState::Coherent { mean } => format!("coherent:{mean}"),
            FieldState::Thermal { mean } => format!("thermal:{mean}"),
        };
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Overlays `flags` on `file`: every field set on the command line replaces the file's.
pub fn overlay<T: Serialize + DeserializeOwned>(file: Option<T>, flags: T) -> anyhow::Result<T> {
    let Some(file) = file else { return Ok(flags) };
    let mut base = serde_json::to_value(file)?;
    let top = serde_json::to_value(flags)?;
    if let (Some(base), Some(top)) = (base.as_object_mut(), top.as_object()) {
        for (k, v) in top {
            if !v.is_null() {
                base.insert(k.clone(), v.clone());
            }
        }
    }
    Ok(serde_json::from_value(base)?)
}

/// Contents of a `--config` file: global keys at the top level and one table per command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub engine: Option<EngineArg>,
    pub threads: Option<usize>,
    pub barrier: Option<BarrierArg>,
    pub exact_step_limit: Option<f64>,
    pub scatter: Option<ScatterArgs>,
    pub sweep: Option<SweepArgs>,
    pub steady_state: Option<SteadyArgs>,
    pub resonances: Option<ResonanceArgs>,
}

impl ConfigFile {
    pub fn globals(&self) -> Globals {
        Globals {
            config: None,
            out: self.out.clone(),
            engine: self.engine,
            threads: self.threads,
            barrier: self.barrier,
            exact_step_limit: self.exact_step_limit,
        }
    }
}

pub fn read_config(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> anyhow::Result<T> {
    match value {
        Some(v) => Ok(v.clone()),
        None => bail!("missing --{flag} (flag or config key `{flag}`)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_with_pi() {
        assert_eq!(
            "100pi".parse::<Scalar>().unwrap().0,
            100.0 * std::f64::consts::PI
        );
        assert_eq!(
            "0.5*pi".parse::<Scalar>().unwrap().0,
            0.5 * std::f64::consts::PI
        );
        assert_eq!("pi".parse::<Scalar>().unwrap().0, std::f64::consts::PI);
        assert_eq!("2.5e3".parse::<Scalar>().unwrap().0, 2500.0);
        assert!("x".parse::<Scalar>().is_err());
    }

    #[test]
    fn fields_round_trip() {
        let f: FieldSpec = "coherent:0.25".parse().unwrap();
        assert_eq!(f.0, FieldState::Coherent { mean: 0.25 });
        assert_eq!(f.label(), "coh0.25");
        assert_eq!("coh:2".parse::<FieldSpec>().unwrap().label(), "coh2");
        assert!("squeezed:1".parse::<FieldSpec>().is_err());
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<FieldSpec>(&json).unwrap(), f);
    }

    #[test]
    fn flags_override_file() {
        let file = SweepArgs {
            from: Some(Scalar(1.0)),
            to: Some(Scalar(2.0)),
            ..Default::default()
        };
        let flags = SweepArgs {
            to: Some(Scalar(3.0)),
            ..Default::default()
        };
        let merged = overlay(Some(file), flags).unwrap();
        assert_eq!(merged.from, Some(Scalar(1.0)));
        assert_eq!(merged.to, Some(Scalar(3.0)));
    }

    #[test]
    fn config_file_parses() {
        let cfg: ConfigFile = toml::from_str(
            "engine = \"auto\"\nthreads = 1\n[sweep]\nprofile = \"both\"\nfrom = \"100pi\"\nto = 320.5\nfield = [\"coherent:2\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.globals().engine, Some(EngineArg(Engine::Auto)));
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.profile.unwrap().0.len(), 2);
        assert_eq!(sweep.to, Some(Scalar(320.5)));
        assert!(toml::from_str::<ConfigFile>("bogus = 1").is_err());
    }
}
