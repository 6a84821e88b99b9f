//! Run configuration: scenario keys, config files and `--key value` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ionwalk::params::angular;
use ionwalk::{ApproxLevel, SimParams};
use serde_json::{Map, Value};

use crate::error::CliError;

/// Keys handled by the runner itself rather than by a scenario.
pub const RUNNER_KEYS: [&str; 5] = ["scenario", "config", "out", "workers", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Text,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Float => "number",
            Kind::Int => "integer",
            Kind::Bool => "boolean",
            Kind::Text => "string",
        }
    }
}

/// One accepted scenario key with its default.
#[derive(Clone, Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Value,
    pub help: &'static str,
}

impl Key {
    pub fn float(name: &'static str, default: f64, help: &'static str) -> Key {
        Key {
            name,
            kind: Kind::Float,
            default: Value::from(default),
            help,
        }
    }

    pub fn int(name: &'static str, default: u64, help: &'static str) -> Key {
        Key {
            name,
            kind: Kind::Int,
            default: Value::from(default),
            help,
        }
    }

    pub fn flag(name: &'static str, default: bool, help: &'static str) -> Key {
        Key {
            name,
            kind: Kind::Bool,
            default: Value::from(default),
            help,
        }
    }

    pub fn text(name: &'static str, default: &str, help: &'static str) -> Key {
        Key {
            name,
            kind: Kind::Text,
            default: Value::from(default),
            help,
        }
    }

    fn coerce(&self, v: &Value) -> Result<Value, CliError> {
        let bad = || CliError::Config(format!("key `{}` expects a {}, got {v}", self.name, self.kind.name()));
        match (self.kind, v) {
            (Kind::Float, Value::Number(n)) => n.as_f64().filter(|x| x.is_finite()).map(Value::from).ok_or_else(bad),
            (Kind::Float, Value::String(s)) => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Value::from)
                .ok_or_else(bad),
            (Kind::Int, Value::Number(n)) => n.as_u64().map(Value::from).ok_or_else(bad),
            (Kind::Int, Value::String(s)) => s.trim().parse::<u64>().map(Value::from).map_err(|_| bad()),
            (Kind::Bool, Value::Bool(b)) => Ok(Value::from(*b)),
            (Kind::Bool, Value::String(s)) => match s.trim() {
                "true" | "1" | "yes" => Ok(Value::from(true)),
                "false" | "0" | "no" => Ok(Value::from(false)),
                _ => Err(bad()),
            },
            (Kind::Text, Value::String(s)) => Ok(Value::from(s.clone())),
            (Kind::Text, Value::Number(n)) => Ok(Value::from(n.to_string())),
            _ => Err(bad()),
        }
    }
}

/// Physical parameter keys, defaulting to the experimental set with
/// `overrides` replacing individual defaults. `level` is left out for
/// scenarios that run several levels.
pub fn physics_keys(overrides: &[(&str, f64)], with_level: bool) -> Vec<Key> {
    let p = SimParams::experimental();
    let hz = |w: f64| w / std::f64::consts::TAU;
    let pick = |name: &str, default: f64| overrides.iter().find(|(k, _)| *k == name).map_or(default, |&(_, v)| v);
    let mut keys = vec![
        Key::float(
            "trap-hz",
            pick("trap-hz", hz(p.omega_z)),
            "axial trap frequency ω_z/2π (Hz)",
        ),
        Key::float(
            "delta-hz",
            pick("delta-hz", hz(p.delta)),
            "detuning δ/2π of the dipole drive (Hz)",
        ),
        Key::float(
            "omega-d-hz",
            pick("omega-d-hz", hz(p.omega_d)),
            "dipole Rabi frequency Ω_D/2π (Hz)",
        ),
        Key::float("eta", pick("eta", p.eta), "Lamb-Dicke parameter"),
        Key::float("phi0", pick("phi0", p.phi0), "drive phase at t = 0 (rad)"),
        Key::float("z0", pick("z0", p.z0), "ground-state width (m)"),
        Key::float("force-ratio", pick("force-ratio", p.force_ratio), "F_H/F_T"),
        Key::int("dim", pick("dim", p.dim as f64) as u64, "Fock space dimension"),
    ];
    if with_level {
        keys.push(Key::text(
            "level",
            p.level.name(),
            "approximation level: LDA, RWA or 3SB",
        ));
    }
    keys
}

/// Turns `--key value`, `--key=value` and bare `--flag` tokens into a map.
/// A bare flag followed by another `--` token or nothing is `true`.
pub fn parse_overrides(tokens: &[String]) -> Result<BTreeMap<String, Value>, CliError> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let Some(body) = tok.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument `{tok}`")));
        };
        if body.is_empty() {
            return Err(CliError::Config("empty key `--`".into()));
        }
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => match tokens.get(i + 1) {
                Some(next) if !next.starts_with("--") => {
                    i += 1;
                    (body.to_string(), next.clone())
                }
                _ => (body.to_string(), "true".to_string()),
            },
        };
        let key = normalize_key(&key);
        if out.insert(key.clone(), Value::String(value)).is_some() {
            return Err(CliError::Config(format!("key `{key}` given twice")));
        }
        i += 1;
    }
    Ok(out)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Reads a flat JSON object of key → value.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let map: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not a JSON object: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (k, v) in map {
        if v.is_object() || v.is_array() || v.is_null() {
            return Err(CliError::Config(format!("config key `{k}` must be a scalar")));
        }
        out.insert(normalize_key(&k), v);
    }
    Ok(out)
}

/// Runner settings after merging flags, overrides and the config file.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: String,
    pub config_file: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub seed: u64,
    /// Scenario keys as given, not yet checked.
    pub raw: BTreeMap<String, Value>,
}

pub const DEFAULT_SEED: u64 = 1;

/// Command-line layer of a run, highest precedence first.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub scenario: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub overrides: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn resolve(mut flags: Flags) -> Result<RunConfig, CliError> {
        let take = |m: &mut BTreeMap<String, Value>, k: &str| m.remove(k).map(|v| scalar_string(&v));
        let mut cli = std::mem::take(&mut flags.overrides);
        let scenario = flags.scenario.or(take(&mut cli, "scenario"));
        let config_file = flags.config.or(take(&mut cli, "config").map(PathBuf::from));

        let mut file = match &config_file {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        if file.contains_key("config") {
            return Err(CliError::Config(
                "config files cannot include other config files".into(),
            ));
        }
        let scenario = scenario
            .or(take(&mut file, "scenario"))
            .ok_or_else(|| CliError::Config("no scenario given".into()))?;
        let out = flags
            .out
            .or(take(&mut cli, "out").map(PathBuf::from))
            .or(take(&mut file, "out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(&scenario));
        let workers = match flags
            .workers
            .map(|w| w.to_string())
            .or(take(&mut cli, "workers"))
            .or(take(&mut file, "workers"))
        {
            Some(s) => Some(parse_count("workers", &s)?),
            None => None,
        };
        let seed = match flags
            .seed
            .map(|s| s.to_string())
            .or(take(&mut cli, "seed"))
            .or(take(&mut file, "seed"))
        {
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("seed must be a u64, got `{s}`")))?,
            None => DEFAULT_SEED,
        };
        let mut raw = file;
        raw.extend(cli);
        Ok(RunConfig {
            scenario,
            config_file,
            out,
            workers,
            seed,
            raw,
        })
    }
}

pub fn parse_level(s: &str) -> Result<ApproxLevel, CliError> {
    s.trim()
        .parse()
        .map_err(|e: ionwalk::Error| CliError::Config(e.to_string()))
}

fn parse_count(name: &str, s: &str) -> Result<usize, CliError> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(CliError::Config(format!(
            "{name} must be a positive integer, got `{s}`"
        ))),
    }
}

fn scalar_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Scenario inputs checked against the scenario's keys, defaults filled in.
#[derive(Clone, Debug)]
pub struct Inputs {
    values: BTreeMap<&'static str, Value>,
}

impl Inputs {
    pub fn resolve(keys: &[Key], raw: &BTreeMap<String, Value>) -> Result<Inputs, CliError> {
        for k in raw.keys() {
            if !keys.iter().any(|key| key.name == k) {
                let known: Vec<&str> = keys.iter().map(|key| key.name).collect();
                return Err(CliError::Config(format!(
                    "unknown key `{k}`; accepted: {}",
                    known.join(", ")
                )));
            }
        }
        let mut values = BTreeMap::new();
        for key in keys {
            let v = match raw.get(key.name) {
                Some(v) => key.coerce(v)?,
                None => key.default.clone(),
            };
            values.insert(key.name, v);
        }
        Ok(Inputs { values })
    }

    fn get(&self, name: &str) -> &Value {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("scenario reads undeclared key `{name}`"))
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.get(name).as_f64().expect("float key")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.get(name).as_u64().expect("integer key") as usize
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name).as_bool().expect("boolean key")
    }

    pub fn text(&self, name: &str) -> &str {
        self.get(name).as_str().expect("string key")
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.text(name)
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::Config(format!("key `{name}`: `{s}` is not a number")))
            })
            .collect()
    }

    /// Builds and validates `SimParams` from the physical keys.
    pub fn sim_params(&self) -> Result<SimParams, CliError> {
        let level = match self.values.get("level") {
            Some(_) => parse_level(self.text("level"))?,
            None => ApproxLevel::ThreeSideband,
        };
        let e = SimParams::experimental();
        let opt = |name: &str, fallback: f64| self.values.get(name).and_then(Value::as_f64).unwrap_or(fallback);
        let mut p = e
            .with_omega_z(angular(self.f64("trap-hz")))
            .with_delta(opt("delta-hz", e.delta / std::f64::consts::TAU) * std::f64::consts::TAU)
            .with_omega_d(angular(self.f64("omega-d-hz")))
            .with_eta(self.f64("eta"))
            .with_dim(self.usize("dim"))
            .with_level(level);
        p.phi0 = opt("phi0", e.phi0);
        p.z0 = opt("z0", e.z0);
        p.force_ratio = opt("force-ratio", e.force_ratio);
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }
}
