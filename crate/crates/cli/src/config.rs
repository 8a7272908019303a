//! Run configuration: the JSON schema shared by config files and flags.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use hbarlab_core::field::fuzzy_level;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcommandName {
    Check,
    Explode,
    Moyal,
    Fuzzy,
    Planck,
    Field,
}

impl SubcommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            SubcommandName::Check => "check",
            SubcommandName::Explode => "explode",
            SubcommandName::Moyal => "moyal",
            SubcommandName::Fuzzy => "fuzzy",
            SubcommandName::Planck => "planck",
            SubcommandName::Field => "field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: SubcommandName,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default = "d_check_model")]
    pub model: String,
    #[serde(default = "d_check_n")]
    pub n: usize,
    #[serde(default = "d_check_tol")]
    pub tol: f64,
}

fn d_check_model() -> String {
    "constant-pi".into()
}
fn d_check_n() -> usize {
    10_000
}
fn d_check_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplodeParams {
    /// Builtin map name; ignored when `poly_map` is given.
    #[serde(default = "d_explode_model")]
    pub model: String,
    /// JSON polynomial map on a `(dims[0], dims[1], dims[2])` chart.
    #[serde(default)]
    pub poly_map: Option<PathBuf>,
    #[serde(default = "d_dims")]
    pub dims: [usize; 3],
    #[serde(default = "d_radius")]
    pub radius: f64,
    #[serde(default = "d_explode_n")]
    pub n: usize,
}

fn d_explode_model() -> String {
    "cubic-mixed".into()
}
fn d_dims() -> [usize; 3] {
    [1, 1, 1]
}
fn d_radius() -> f64 {
    2.0
}
fn d_explode_n() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoyalParams {
    #[serde(default = "d_moyal_hbar")]
    pub hbar: Vec<f64>,
    #[serde(default = "d_ev0_hbar")]
    pub ev0_hbar: Vec<f64>,
    #[serde(default = "d_points")]
    pub points: usize,
}

fn d_moyal_hbar() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn d_ev0_hbar() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn d_points() -> usize {
    65
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyParams {
    #[serde(default = "d_k_list")]
    pub k_list: Vec<usize>,
    /// Alternative to `k_list`: each entry must be `1/k`.
    #[serde(default)]
    pub hbar: Option<Vec<f64>>,
    #[serde(default = "d_symbol")]
    pub symbol: String,
    /// Node CSV (x,y,z,value) fitted to a polynomial; replaces `symbol`.
    #[serde(default)]
    pub nodes: Option<PathBuf>,
    /// Second symbol for the Dirac defect curve.
    #[serde(default)]
    pub partner: Option<String>,
}

fn d_k_list() -> Vec<usize> {
    vec![4, 8, 16, 32]
}
fn d_symbol() -> String {
    "z".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanckParams {
    #[serde(default = "d_planck_model")]
    pub model: String,
    /// Profile JSON file; replaces `model`.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default = "d_min_hbar")]
    pub min_hbar: f64,
}

fn d_planck_model() -> String {
    "fibonacci".into()
}
fn d_min_hbar() -> f64 {
    0.005
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    Fuzzy,
    Moyal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    #[serde(default = "d_backend")]
    pub backend: BackendName,
    #[serde(default)]
    pub symbol: Option<String>,
    #[serde(default)]
    pub partner: Option<String>,
    /// Fuzzy index `k_max, k_max/2, k_max/4, k_max/8` when `hbar` is absent.
    #[serde(default = "d_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub hbar: Option<Vec<f64>>,
}

fn d_backend() -> BackendName {
    BackendName::Fuzzy
}
fn d_k_max() -> usize {
    32
}

impl FieldParams {
    pub fn symbol(&self) -> &str {
        self.symbol.as_deref().unwrap_or(match self.backend {
            BackendName::Fuzzy => "z",
            BackendName::Moyal => "gaussian",
        })
    }

    pub fn partner(&self) -> &str {
        self.partner.as_deref().unwrap_or(match self.backend {
            BackendName::Fuzzy => "x",
            BackendName::Moyal => "shifted-gaussian",
        })
    }

    pub fn index(&self) -> Vec<f64> {
        if let Some(h) = &self.hbar {
            return h.clone();
        }
        let mut ks: Vec<usize> = (0..4).map(|i| self.k_max >> i).filter(|&k| k >= 1).collect();
        ks.dedup();
        ks.iter().map(|&k| 1.0 / k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Check(CheckParams),
    Explode(ExplodeParams),
    Moyal(MoyalParams),
    Fuzzy(FuzzyParams),
    Planck(PlanckParams),
    Field(FieldParams),
}

/// A config that passed schema and semantic validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    pub config: RunConfig,
    pub params: Params,
}

/// Schema or semantic error located by a JSON pointer into the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { pointer: pointer.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", if self.pointer.is_empty() { "/" } else { &self.pointer }, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer(prefix: &str, path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = prefix.to_string();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    out
}

fn located<E: fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> ConfigError {
    let mut p = pointer(prefix, e.path());
    let msg = e.inner().to_string();
    // Unknown-key errors are reported at the offending key.
    if let Some(key) = msg.strip_prefix("unknown field `").and_then(|s| s.split('`').next()) {
        if !p.ends_with(&format!("/{}", escape(key))) {
            p = format!("{p}/{}", escape(key));
        }
    }
    ConfigError::at(p, msg)
}

fn typed<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(v.clone()).map_err(|e| located("/parameters", e))
}

pub fn parse_config(text: &str) -> Result<ValidConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| located("", e))?;
    validate(config)
}

pub fn validate(config: RunConfig) -> Result<ValidConfig, ConfigError> {
    if !config.parameters.is_object() {
        return Err(ConfigError::at("/parameters", "parameters must be a JSON object"));
    }
    let v = &config.parameters;
    let params = match config.subcommand {
        SubcommandName::Check => {
            let p: CheckParams = typed(v)?;
            if !crate::models::GROUPOID_MODELS.iter().any(|(n, _)| *n == p.model) {
                return Err(unknown("/parameters/model", &p.model, crate::models::GROUPOID_MODELS));
            }
            positive_count("/parameters/n", p.n)?;
            positive("/parameters/tol", p.tol)?;
            Params::Check(p)
        }
        SubcommandName::Explode => {
            let p: ExplodeParams = typed(v)?;
            if p.poly_map.is_none() && !hbarlab_core::explosion::BUILTIN_MAPS.iter().any(|(n, _)| *n == p.model) {
                return Err(unknown("/parameters/model", &p.model, hbarlab_core::explosion::BUILTIN_MAPS));
            }
            positive_count("/parameters/n", p.n)?;
            positive("/parameters/radius", p.radius)?;
            Params::Explode(p)
        }
        SubcommandName::Moyal => {
            let p: MoyalParams = typed(v)?;
            for (i, h) in p.hbar.iter().enumerate() {
                positive(&format!("/parameters/hbar/{i}"), *h)?;
            }
            if p.hbar.is_empty() {
                return Err(ConfigError::at("/parameters/hbar", "at least one hbar is required"));
            }
            if p.ev0_hbar.len() < 3 {
                return Err(ConfigError::at("/parameters/ev0_hbar", "the classical limit needs at least 3 values"));
            }
            for (i, w) in p.ev0_hbar.windows(2).enumerate() {
                positive(&format!("/parameters/ev0_hbar/{i}"), w[0])?;
                if !(w[1] > 0.0 && w[1] < w[0]) {
                    return Err(ConfigError::at(format!("/parameters/ev0_hbar/{}", i + 1), "values must be positive and strictly decreasing"));
                }
            }
            if p.points < 3 || p.points % 2 == 0 || p.points > 257 {
                return Err(ConfigError::at("/parameters/points", "grid points must be odd and in 3..=257"));
            }
            Params::Moyal(p)
        }
        SubcommandName::Fuzzy => {
            let mut p: FuzzyParams = typed(v)?;
            if let Some(hs) = &p.hbar {
                p.k_list = fuzzy_ks(hs, "/parameters/hbar")?;
            }
            check_ks(&p.k_list, if p.hbar.is_some() { "/parameters/hbar" } else { "/parameters/k_list" })?;
            if p.nodes.is_none() {
                sphere_symbol("/parameters/symbol", &p.symbol)?;
            }
            if let Some(g) = &p.partner {
                sphere_symbol("/parameters/partner", g)?;
            }
            Params::Fuzzy(p)
        }
        SubcommandName::Planck => {
            let p: PlanckParams = typed(v)?;
            if p.profile.is_none() && !hbarlab_core::planck::BUILTIN_PROFILES.contains(&p.model.as_str()) {
                return Err(ConfigError::at(
                    "/parameters/model",
                    format!("unknown profile '{}'; expected one of {}", p.model, hbarlab_core::planck::BUILTIN_PROFILES.join(", ")),
                ));
            }
            positive("/parameters/min_hbar", p.min_hbar)?;
            Params::Planck(p)
        }
        SubcommandName::Field => {
            let p: FieldParams = typed(v)?;
            if p.backend == BackendName::Fuzzy {
                if let Some(hs) = &p.hbar {
                    fuzzy_ks(hs, "/parameters/hbar")?;
                }
                positive_count("/parameters/k_max", p.k_max)?;
                if p.k_max > hbarlab_core::fuzzy::MAX_K {
                    return Err(ConfigError::at("/parameters/k_max", format!("k_max above {}", hbarlab_core::fuzzy::MAX_K)));
                }
                sphere_symbol("/parameters/symbol", p.symbol())?;
                sphere_symbol("/parameters/partner", p.partner())?;
            } else {
                if let Some(hs) = &p.hbar {
                    for (i, h) in hs.iter().enumerate() {
                        positive(&format!("/parameters/hbar/{i}"), *h)?;
                    }
                }
                for (ptr, s) in [("/parameters/symbol", p.symbol()), ("/parameters/partner", p.partner())] {
                    if !hbarlab_core::field::LATTICE_SYMBOLS.contains(&s) {
                        return Err(ConfigError::at(
                            ptr,
                            format!("unknown lattice symbol '{s}'; expected one of {}", hbarlab_core::field::LATTICE_SYMBOLS.join(", ")),
                        ));
                    }
                }
            }
            if p.index().len() < 3 {
                return Err(ConfigError::at(
                    if p.hbar.is_some() { "/parameters/hbar" } else { "/parameters/k_max" },
                    "the continuity report needs at least 3 fibers",
                ));
            }
            Params::Field(p)
        }
    };
    Ok(ValidConfig { config, params })
}

fn unknown(ptr: &str, name: &str, known: &[(&str, &str)]) -> ConfigError {
    let names: Vec<&str> = known.iter().map(|(n, _)| *n).collect();
    ConfigError::at(ptr, format!("unknown model '{name}'; expected one of {}", names.join(", ")))
}

fn positive(ptr: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(ptr, format!("expected a positive finite number, got {v}")))
    }
}

fn positive_count(ptr: &str, n: usize) -> Result<(), ConfigError> {
    if n == 0 {
        Err(ConfigError::at(ptr, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn fuzzy_ks(hs: &[f64], ptr: &str) -> Result<Vec<usize>, ConfigError> {
    hs.iter()
        .enumerate()
        .map(|(i, &h)| fuzzy_level(h).map_err(|e| ConfigError::at(format!("{ptr}/{i}"), strip_kind(&e))))
        .collect()
}

fn check_ks(ks: &[usize], ptr: &str) -> Result<(), ConfigError> {
    if ks.is_empty() {
        return Err(ConfigError::at(ptr, "at least one level is required"));
    }
    for (i, &k) in ks.iter().enumerate() {
        if k == 0 || k > hbarlab_core::fuzzy::MAX_K {
            return Err(ConfigError::at(format!("{ptr}/{i}"), format!("k must be in 1..={}", hbarlab_core::fuzzy::MAX_K)));
        }
    }
    Ok(())
}

fn sphere_symbol(ptr: &str, name: &str) -> Result<(), ConfigError> {
    hbarlab_core::fuzzy::SphereSymbol::builtin(name).map(|_| ()).map_err(|e| ConfigError::at(ptr, strip_kind(&e)))
}

fn strip_kind(e: &hbarlab_core::Error) -> String {
    let s = e.to_string();
    match s.split_once(": ") {
        Some((_, rest)) => rest.to_string(),
        None => s,
    }
}
