//! Flat `key = value` run configuration: strict parsing, aggregated
//! validation errors, and a canonical form whose hash ties output files to
//! the exact configuration that produced them.

use fracstefan::{
    barrier_initial_condition, cone_initial_condition, quartic_initial_condition,
    quartic_max_amplitude, BcLeft, BcRight, Field, FixedPointConfig, Grid, ProblemSpec,
};
use sha2::{Digest, Sha256};
use statrs::function::gamma::gamma;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    /// Every validation problem found, reported together.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "cannot read config: {msg}"),
            ConfigError::Invalid(problems) => {
                writeln!(f, "invalid config ({} problems):", problems.len())?;
                for p in problems {
                    writeln!(f, "  - {p}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Solution mode of the `run` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Damped fixed-point iteration on the whole front path.
    StefanPicard,
    /// Single forward sweep, front advanced explicitly per step.
    StefanMarching,
}

impl RunMode {
    fn as_str(self) -> &'static str {
        match self {
            RunMode::StefanPicard => "stefan_picard",
            RunMode::StefanMarching => "stefan_marching",
        }
    }
}

/// Initial-condition family.
#[derive(Debug, Clone, PartialEq)]
pub enum U0Family {
    Quartic { amplitude: f64 },
    Cone { slope: f64 },
    Barrier,
    Custom { values: Vec<f64> },
}

/// Fully resolved run configuration: every optional key filled with its
/// default, ready to build a problem spec.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub b: f64,
    pub t_final: f64,
    pub m_bound: f64,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub mode: RunMode,
    pub family: U0Family,
    pub relaxation: f64,
    pub max_iters: usize,
    pub tol_sup: f64,
    pub tol_factor: f64,
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "b",
    "t_final",
    "m_bound",
    "n_nodes",
    "n_steps",
    "mode",
    "u0_family",
    "u0_amplitude",
    "u0_slope",
    "u0_values",
    "relaxation",
    "max_iters",
    "tol_sup",
    "tol_factor",
];

pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut problems: Vec<String> = Vec::new();
    let mut raw: BTreeMap<String, String> = BTreeMap::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    problems.push(format!("line {}: unknown key `{key}`", lineno + 1));
                    continue;
                }
                if raw.insert(key.clone(), value).is_some() {
                    problems.push(format!("line {}: key `{key}` given twice", lineno + 1));
                }
            }
            None => problems.push(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )),
        }
    }

    let take_f64 = |key: &str, default: Option<f64>, problems: &mut Vec<String>| -> f64 {
        match raw.get(key) {
            Some(v) => v.parse::<f64>().unwrap_or_else(|_| {
                problems.push(format!("key `{key}`: `{v}` is not a number"));
                f64::NAN
            }),
            None => match default {
                Some(d) => d,
                None => {
                    problems.push(format!("key `{key}` is required"));
                    f64::NAN
                }
            },
        }
    };

    let alpha = take_f64("alpha", None, &mut problems);
    let b = take_f64("b", Some(1.0), &mut problems);
    let t_final = take_f64("t_final", Some(0.5), &mut problems);
    let m_bound = take_f64("m_bound", Some(1.0), &mut problems);
    let relaxation = take_f64("relaxation", Some(0.5), &mut problems);
    let tol_sup = take_f64("tol_sup", Some(1e-6), &mut problems);
    let tol_factor = take_f64("tol_factor", Some(10.0), &mut problems);

    let take_usize = |key: &str, default: usize, problems: &mut Vec<String>| -> usize {
        match raw.get(key) {
            Some(v) => v.parse::<usize>().unwrap_or_else(|_| {
                problems.push(format!("key `{key}`: `{v}` is not a positive integer"));
                default
            }),
            None => default,
        }
    };
    let n_nodes = take_usize("n_nodes", 129, &mut problems);
    let n_steps = take_usize("n_steps", 128, &mut problems);
    let max_iters = take_usize("max_iters", 50, &mut problems);

    let mode = match raw.get("mode").map(String::as_str) {
        None | Some("stefan_picard") => RunMode::StefanPicard,
        Some("stefan_marching") => RunMode::StefanMarching,
        Some(other) => {
            problems.push(format!(
                "key `mode`: `{other}` is not one of stefan_picard, stefan_marching"
            ));
            RunMode::StefanPicard
        }
    };

    // range checks only when parsing produced actual numbers
    let check_pos = |name: &str, v: f64, problems: &mut Vec<String>| {
        if v.is_nan() {
            return;
        }
        if !(v.is_finite() && v > 0.0) {
            problems.push(format!("key `{name}`: must be positive, got {v}"));
        }
    };
    check_pos("b", b, &mut problems);
    check_pos("t_final", t_final, &mut problems);
    check_pos("m_bound", m_bound, &mut problems);
    check_pos("tol_sup", tol_sup, &mut problems);
    check_pos("tol_factor", tol_factor, &mut problems);
    if !alpha.is_nan() && !(alpha > 0.0 && alpha < 1.0) {
        problems.push(format!("key `alpha`: must lie in (0, 1), got {alpha}"));
    }
    if !relaxation.is_nan() && !(relaxation > 0.0 && relaxation <= 1.0) {
        problems.push(format!(
            "key `relaxation`: must lie in (0, 1], got {relaxation}"
        ));
    }
    if n_nodes < 3 {
        problems.push(format!("key `n_nodes`: need at least 3 nodes, got {n_nodes}"));
    }
    if n_steps < 1 {
        problems.push(format!("key `n_steps`: need at least 1 step, got {n_steps}"));
    }

    let family_name = raw
        .get("u0_family")
        .cloned()
        .unwrap_or_else(|| "quartic".to_string());
    let numbers_ok = !alpha.is_nan() && !b.is_nan() && !m_bound.is_nan();
    let family = match family_name.as_str() {
        "quartic" => {
            reject_key(&raw, "u0_slope", "quartic", &mut problems);
            reject_key(&raw, "u0_values", "quartic", &mut problems);
            let amplitude = match raw.get("u0_amplitude") {
                Some(v) => v.parse::<f64>().unwrap_or_else(|_| {
                    problems.push(format!("key `u0_amplitude`: `{v}` is not a number"));
                    f64::NAN
                }),
                None if numbers_ok => {
                    0.5 * quartic_max_amplitude(alpha, b, m_bound)
                }
                None => f64::NAN,
            };
            if !amplitude.is_nan() && amplitude < 0.0 {
                problems.push(format!(
                    "key `u0_amplitude`: must be nonnegative, got {amplitude}"
                ));
            }
            U0Family::Quartic { amplitude }
        }
        "cone" => {
            reject_key(&raw, "u0_amplitude", "cone", &mut problems);
            reject_key(&raw, "u0_values", "cone", &mut problems);
            let slope = match raw.get("u0_slope") {
                Some(v) => v.parse::<f64>().unwrap_or_else(|_| {
                    problems.push(format!("key `u0_slope`: `{v}` is not a number"));
                    f64::NAN
                }),
                None if numbers_ok => {
                    0.5 * m_bound * gamma(2.0 - alpha) * b.powf(alpha - 1.0)
                }
                None => f64::NAN,
            };
            if !slope.is_nan() && slope <= 0.0 {
                problems.push(format!("key `u0_slope`: must be positive, got {slope}"));
            }
            U0Family::Cone { slope }
        }
        "barrier" => {
            reject_key(&raw, "u0_amplitude", "barrier", &mut problems);
            reject_key(&raw, "u0_slope", "barrier", &mut problems);
            reject_key(&raw, "u0_values", "barrier", &mut problems);
            U0Family::Barrier
        }
        "custom" => {
            reject_key(&raw, "u0_amplitude", "custom", &mut problems);
            reject_key(&raw, "u0_slope", "custom", &mut problems);
            let values = match raw.get("u0_values") {
                Some(list) => {
                    let mut vals = Vec::new();
                    for (j, item) in list.split(',').enumerate() {
                        match item.trim().parse::<f64>() {
                            Ok(v) => vals.push(v),
                            Err(_) => problems.push(format!(
                                "key `u0_values`: entry {} (`{}`) is not a number",
                                j + 1,
                                item.trim()
                            )),
                        }
                    }
                    vals
                }
                None => {
                    problems.push("key `u0_values` is required for the custom family".into());
                    Vec::new()
                }
            };
            if !values.is_empty() && values.len() != n_nodes {
                problems.push(format!(
                    "key `u0_values`: {} entries but n_nodes = {n_nodes}",
                    values.len()
                ));
            }
            U0Family::Custom { values }
        }
        other => {
            problems.push(format!(
                "key `u0_family`: `{other}` is not one of quartic, cone, barrier, custom"
            ));
            U0Family::Barrier
        }
    };

    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems));
    }
    Ok(RunConfig {
        alpha,
        b,
        t_final,
        m_bound,
        n_nodes,
        n_steps,
        mode,
        family,
        relaxation,
        max_iters,
        tol_sup,
        tol_factor,
    })
}

fn reject_key(
    raw: &BTreeMap<String, String>,
    key: &str,
    family: &str,
    problems: &mut Vec<String>,
) {
    if raw.contains_key(key) {
        problems.push(format!("key `{key}` does not apply to the {family} family"));
    }
}

impl RunConfig {
    /// Builds the initial condition on the physical grid over [0, b].
    pub fn build_u0(&self) -> fracstefan::Result<Field> {
        match &self.family {
            U0Family::Quartic { amplitude } => {
                quartic_initial_condition(self.n_nodes, self.b, *amplitude)
            }
            U0Family::Cone { slope } => cone_initial_condition(self.n_nodes, self.b, *slope),
            U0Family::Barrier => {
                barrier_initial_condition(self.n_nodes, self.b, self.alpha, self.m_bound)
            }
            U0Family::Custom { values } => Field::new(
                Grid::physical(self.n_nodes, self.b)?,
                values.clone(),
                BcLeft::NeumannZero,
                BcRight::DirichletZero,
            ),
        }
    }

    pub fn build_spec(&self) -> fracstefan::Result<ProblemSpec> {
        ProblemSpec::new(
            self.alpha,
            self.b,
            self.t_final,
            self.m_bound,
            self.build_u0()?,
            self.n_steps,
        )
    }

    /// Same spec on a different resolution; the parametric families scale,
    /// a fixed nodal table cannot.
    pub fn build_spec_at(&self, n_nodes: usize, n_steps: usize) -> fracstefan::Result<ProblemSpec> {
        let mut scaled = self.clone();
        scaled.n_nodes = n_nodes;
        scaled.n_steps = n_steps;
        scaled.build_spec()
    }

    pub fn is_parametric(&self) -> bool {
        !matches!(self.family, U0Family::Custom { .. })
    }

    pub fn fixed_point_config(&self) -> FixedPointConfig {
        FixedPointConfig {
            max_iters: self.max_iters,
            tol_sup: self.tol_sup,
            relaxation: self.relaxation,
        }
    }

    /// Canonical text form: every key resolved, fixed order, full float
    /// precision. Two configs that behave identically render identically.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("alpha", format!("{:.16e}", self.alpha));
        push("b", format!("{:.16e}", self.b));
        push("m_bound", format!("{:.16e}", self.m_bound));
        push("max_iters", self.max_iters.to_string());
        push("mode", self.mode.as_str().to_string());
        push("n_nodes", self.n_nodes.to_string());
        push("n_steps", self.n_steps.to_string());
        push("relaxation", format!("{:.16e}", self.relaxation));
        push("t_final", format!("{:.16e}", self.t_final));
        push("tol_factor", format!("{:.16e}", self.tol_factor));
        push("tol_sup", format!("{:.16e}", self.tol_sup));
        match &self.family {
            U0Family::Quartic { amplitude } => {
                push("u0_amplitude", format!("{amplitude:.16e}"));
                push("u0_family", "quartic".to_string());
            }
            U0Family::Cone { slope } => {
                push("u0_family", "cone".to_string());
                push("u0_slope", format!("{slope:.16e}"));
            }
            U0Family::Barrier => push("u0_family", "barrier".to_string()),
            U0Family::Custom { values } => {
                push("u0_family", "custom".to_string());
                let list: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
                push("u0_values", list.join(","));
            }
        }
        out
    }

    pub fn sha256_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse_config_str("alpha = 0.5\n").unwrap();
        assert_eq!(cfg.n_nodes, 129);
        assert_eq!(cfg.n_steps, 128);
        assert_eq!(cfg.mode, RunMode::StefanPicard);
        assert_eq!(cfg.tol_factor, 10.0);
        match cfg.family {
            U0Family::Quartic { amplitude } => {
                let expected = 0.5 * quartic_max_amplitude(0.5, 1.0, 1.0);
                assert!((amplitude - expected).abs() < 1e-15);
            }
            other => panic!("unexpected family {other:?}"),
        }
    }

    #[test]
    fn all_problems_reported_together() {
        let err = parse_config_str(
            "alpha = 1.5\nn_nodes = 2\nbogus = 1\nmode = warp\n",
        )
        .unwrap_err();
        match err {
            ConfigError::Invalid(problems) => {
                assert_eq!(problems.len(), 4, "{problems:?}");
                assert!(problems.iter().any(|p| p.contains("unknown key `bogus`")));
                assert!(problems.iter().any(|p| p.contains("alpha")));
                assert!(problems.iter().any(|p| p.contains("n_nodes")));
                assert!(problems.iter().any(|p| p.contains("mode")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn family_key_crosstalk_is_rejected() {
        let err = parse_config_str("alpha = 0.3\nu0_family = cone\nu0_amplitude = 0.1\n")
            .unwrap_err();
        match err {
            ConfigError::Invalid(problems) => {
                assert!(problems[0].contains("u0_amplitude"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_family_length_must_match() {
        let err =
            parse_config_str("alpha = 0.5\nn_nodes = 5\nu0_family = custom\nu0_values = 1, 0\n")
                .unwrap_err();
        match err {
            ConfigError::Invalid(problems) => {
                assert!(problems[0].contains("2 entries but n_nodes = 5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_hash_ignores_formatting() {
        let a = parse_config_str("alpha = 0.5\nb = 1.0\n").unwrap();
        let b = parse_config_str("# comment\n  b   =  1.0\n\nalpha=0.5\n").unwrap();
        assert_eq!(a.sha256_hex(), b.sha256_hex());
        let c = parse_config_str("alpha = 0.25\n").unwrap();
        assert_ne!(a.sha256_hex(), c.sha256_hex());
    }
}
