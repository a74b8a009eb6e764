//! Flat `key = value` configuration.
//!
//! One assignment per line, `#` starts a comment, and `include = path`
//! splices another file in place (paths are relative to the including
//! file). Later assignments win. Every key has a documented default, so an
//! empty file is a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
    pub section: &'static str,
}

macro_rules! keys {
    ($( $section:literal { $( $key:literal = $default:literal : $doc:literal ),* $(,)? } )*) => {
        &[ $( $( KeySpec { key: $key, default: $default, doc: $doc, section: $section }, )* )* ]
    };
}

pub const KEYS: &[KeySpec] = keys! {
    "general" {
        "seed" = "0" : "master seed; the MEGT_SEED environment variable overrides it",
        "precision" = "f64" : "floating point type for network and dynamics: f64 or f32",
    }
    "network" {
        "nodes" = "200" : "nodes per layer",
        "layers" = "2" : "number of layers",
        "topology" = "sf" : "sf, er or sw; a comma list gives one entry per layer",
        "er_p" = "0.02" : "Erdos-Renyi edge probability",
        "ws_k" = "4" : "Watts-Strogatz ring degree (even)",
        "ws_beta" = "0.1" : "Watts-Strogatz rewiring probability",
        "sf_m" = "2" : "scale-free edges per new node",
        "sf_m0" = "3" : "scale-free seed clique size (>= sf_m)",
        "sigma" = "1.0" : "spread of the homophily distance; small means strong homophily",
        "omega" = "1.0" : "inter-layer coupling strength",
        "network_file" = "" : "evolve/nash/sweep on this network file instead of generating one",
        "dump_comm" = "false" : "generate also writes comm.csv, the full communicability matrix",
    }
    "game" {
        "reward" = "1.0" : "R",
        "sucker" = "-0.5" : "S",
        "temptation" = "1.5" : "T",
        "punishment" = "0.0" : "P",
    }
    "dynamics" {
        "selection_intensity" = "0.1" : "K in the Fermi rule",
        "eta_min" = "0.5" : "imitation scale when every other layer agrees",
        "eta_max" = "1.0" : "imitation scale when no other layer agrees",
        "initial_coop" = "0.5" : "probability that a slot starts as a cooperator",
        "max_rounds" = "5000" : "round limit",
        "steady_window" = "200" : "rounds per window of the steady-state test",
        "steady_tolerance" = "0.001" : "largest change of window means counted as steady",
        "replicas" = "1" : "independent runs, each with its own network and RNG stream",
        "payoff_weights" = "weighted" : "weighted (link weights) or binary payoffs",
    }
    "sweep" {
        "t_min" = "0.0" : "lowest temptation",
        "t_max" = "2.0" : "highest temptation",
        "t_steps" = "21" : "temptation grid points",
        "s_min" = "-1.0" : "lowest sucker payoff",
        "s_max" = "1.0" : "highest sucker payoff",
        "s_steps" = "21" : "sucker grid points",
    }
    "nash" {
        "nash_projection" = "majority_tie_c" : "majority_tie_c, majority_tie_d or per_layer",
    }
    "crowdsense" {
        "reports" = "" : "report table scored by `score`",
        "budget" = "1000.0" : "incentive budget B",
        "preference_factor" = "0.5" : "weight of report counts against reputation in confidence",
        "publish_threshold" = "0.5" : "minimum confidence for publishing",
        "positive_rs_threshold" = "0.5" : "reputation at which a user counts as trusted",
        "mechanism" = "C" : "mechanism behind rs, gamma and decisions: A, B or C",
        "ledger_columns" = "all" : "incentive columns to fill: all, A, B or C",
        "epsilon" = "0.01" : "truthfulness clamp and mechanism C density floor",
    }
    "synth" {
        "synth_users" = "300" : "users in the synthetic corpus",
        "synth_days" = "7" : "days covered",
        "synth_honest" = "0.6" : "fraction of honest users",
        "synth_selfish" = "0.25" : "fraction of selfish users; the rest are malicious",
        "synth_streets" = "12" : "distinct streets",
        "synth_start" = "2024-03-04" : "first day of the corpus",
    }
};

const MAX_INCLUDE_DEPTH: usize = 16;

fn spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            values: KEYS.iter().map(|k| (k.key.to_string(), k.default.to_string())).collect(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg = Config::default();
        cfg.apply_file(path, 0)?;
        Ok(cfg)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> CliResult<Self> {
        let mut cfg = Config::default();
        for (k, v) in map {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path, depth: usize) -> CliResult<()> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(CliError::config(format!(
                "include nesting deeper than {MAX_INCLUDE_DEPTH} at {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.apply_text(&text, &base, &path.display().to_string(), depth)
    }

    /// Applies config text. `origin` labels error messages.
    pub fn apply_text(&mut self, text: &str, base: &Path, origin: &str, depth: usize) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "include" {
                let target: PathBuf = base.join(value);
                self.apply_file(&target, depth + 1)?;
            } else {
                self.set(key, value)
                    .map_err(|e| CliError::config(format!("{origin}:{}: {}", n + 1, strip(&e))))?;
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> CliResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if spec(key).is_none() {
            return Err(CliError::config(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        debug_assert!(spec(key).is_some(), "undeclared key {key}");
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .parse()
            .map_err(|e| CliError::config(format!("invalid value for `{key}`: `{}` ({e})", self.raw(key))))
    }

    pub fn get_bool(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::config(format!("invalid value for `{key}`: `{other}` (expected true or false)"))),
        }
    }

    /// `None` for an empty value.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

fn strip(e: &CliError) -> String {
    match e {
        CliError::Config(m) | CliError::Data(m) | CliError::Runtime(m) => m.clone(),
    }
}

/// The documented defaults, itself a valid config file.
pub fn print_defaults() -> String {
    let mut out = String::from("# megt configuration defaults\n");
    let mut section = "";
    for k in KEYS {
        if k.section != section {
            section = k.section;
            let _ = write!(out, "\n# [{section}]\n");
        }
        let _ = writeln!(out, "# {}\n{} = {}", k.doc, k.key, k.default);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_back() {
        let mut cfg = Config::default();
        cfg.apply_text(&print_defaults(), Path::new("."), "defaults", 0).unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.get::<usize>("nodes").unwrap(), 200);
        assert!(!cfg.get_bool("dump_comm").unwrap());
        assert!(cfg.get_path("reports").is_none());
    }

    #[test]
    fn keys_are_unique() {
        let mut names: Vec<&str> = KEYS.iter().map(|k| k.key).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), KEYS.len());
    }

    #[test]
    fn unknown_key_is_named() {
        let mut cfg = Config::default();
        let err = cfg.apply_text("nodes = 10\nnodez = 3\n", Path::new("."), "x.cfg", 0).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("nodez") && msg.contains("x.cfg:2"), "{msg}");
    }

    #[test]
    fn bad_value_is_named() {
        let mut cfg = Config::default();
        cfg.set("nodes", "many").unwrap();
        let err = cfg.get::<usize>("nodes").unwrap_err();
        assert!(err.to_string().contains("`nodes`"));
        cfg.set("dump_comm", "maybe").unwrap();
        assert!(cfg.get_bool("dump_comm").is_err());
    }

    #[test]
    fn comments_overrides_and_includes() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.cfg"), "layers = 3 # trailing\nsigma = 2\n").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/run.cfg"), "include = ../base.cfg\n\n# note\nsigma = 4\n").unwrap();
        let mut cfg = Config::load(&dir.path().join("sub/run.cfg")).unwrap();
        assert_eq!(cfg.raw("layers"), "3");
        assert_eq!(cfg.raw("sigma"), "4");
        cfg.apply_override("sigma=8").unwrap();
        assert_eq!(cfg.raw("sigma"), "8");
        assert!(cfg.apply_override("sigma").is_err());
    }

    #[test]
    fn include_cycle_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.cfg"), "include = a.cfg\n").unwrap();
        assert_eq!(Config::load(&dir.path().join("a.cfg")).unwrap_err().exit_code(), 2);
        assert_eq!(Config::load(&dir.path().join("none.cfg")).unwrap_err().exit_code(), 2);
    }
}
