//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoLevel { h_x: f64, h_z: f64 },
    Qim { n: usize, j: f64, h_x: f64, h_z: f64 },
    XxzNn { n: usize, j1: f64, delta1: f64 },
    XxzNnn { n: usize, j1: f64, j2: f64, delta1: f64, delta2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingSpec {
    #[default]
    Free,
    Palindromic,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub pattern: String,
    #[serde(default)]
    pub sharing: SharingSpec,
}

/// One propagator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum Method {
    Exact,
    Ts1,
    Ts2,
    Ruth4,
    Ts7,
    VarL1,
    VarL2,
    VarCubic,
    /// first-order variational equations with a Krylov trace of the given size
    VarKrylov(usize),
}

impl Method {
    pub fn is_variational(self) -> bool {
        matches!(self, Self::VarL1 | Self::VarL2 | Self::VarCubic | Self::VarKrylov(_))
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Ok(match s.as_str() {
            "exact" => Self::Exact,
            "ts1" => Self::Ts1,
            "ts2" => Self::Ts2,
            "ruth4" => Self::Ruth4,
            "ts7" => Self::Ts7,
            "var_l1" => Self::VarL1,
            "var_l2" => Self::VarL2,
            "var_cubic" => Self::VarCubic,
            other => {
                let size = other
                    .strip_prefix("var_krylov(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown method `{other}`"))?;
                let n = size
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad Krylov size in `{other}`"))?;
                if n == 0 {
                    return Err("Krylov size must be at least 1".into());
                }
                Self::VarKrylov(n)
            }
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => f.write_str("exact"),
            Self::Ts1 => f.write_str("ts1"),
            Self::Ts2 => f.write_str("ts2"),
            Self::Ruth4 => f.write_str("ruth4"),
            Self::Ts7 => f.write_str("ts7"),
            Self::VarL1 => f.write_str("var_l1"),
            Self::VarL2 => f.write_str("var_l2"),
            Self::VarCubic => f.write_str("var_cubic"),
            Self::VarKrylov(n) => write!(f, "var_krylov_{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeSpec {
    /// `points` equally spaced samples on `[0, t_end]`
    Grid { t_end: f64, points: usize },
    /// `⌊t_total/τ⌋` repetitions of one step of length `τ`
    Stroboscopic { t_total: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Frobenius,
    StrobFrobenius,
    Magnetization,
    Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

impl Default for TolerancesSpec {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// block order used by the fixed-coefficient formulas, outermost first
    #[serde(default)]
    pub split_order: Option<Vec<String>>,
    /// ansätze for the variational methods; one column set per ansatz
    #[serde(default)]
    pub ansatze: Vec<AnsatzSpec>,
    pub methods: Vec<Method>,
    pub time: TimeSpec,
    pub observable: Observable,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: TolerancesSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path.is_empty() { "." } else { &path }, e.inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(invalid(&format!("methods[{i}]"), format!("duplicate method `{m}`")));
            }
        }
        let any_var = self.methods.iter().any(|m| m.is_variational());
        if any_var && self.ansatze.is_empty() {
            return Err(invalid("ansatze", "variational methods need at least one ansatz"));
        }
        for (i, a) in self.ansatze.iter().enumerate() {
            if self.ansatze[..i].iter().any(|b| b.pattern == a.pattern) {
                return Err(invalid(&format!("ansatze[{i}].pattern"), "duplicate pattern"));
            }
        }
        match self.time {
            TimeSpec::Grid { t_end, points } => {
                if !(t_end.is_finite() && t_end > 0.0) {
                    return Err(invalid("time.grid.t_end", "must be positive"));
                }
                if points < 2 {
                    return Err(invalid("time.grid.points", "need at least 2 points"));
                }
            }
            TimeSpec::Stroboscopic { t_total, tau } => {
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(invalid("time.stroboscopic.tau", "must be positive"));
                }
                if !(t_total.is_finite() && t_total >= 0.0) {
                    return Err(invalid("time.stroboscopic.t_total", "must be non-negative"));
                }
            }
        }
        let strob = matches!(self.time, TimeSpec::Stroboscopic { .. });
        match self.observable {
            Observable::StrobFrobenius | Observable::Magnetization if !strob => {
                return Err(invalid("observable", "needs a stroboscopic time specification"));
            }
            Observable::Frobenius | Observable::Params if strob => {
                return Err(invalid("observable", "needs a grid time specification"));
            }
            Observable::Params if !any_var => {
                return Err(invalid("methods", "the params observable needs a variational method"));
            }
            _ => {}
        }
        let t = self.tolerances;
        if !(t.rtol > 0.0 && t.atol > 0.0) {
            return Err(invalid("tolerances", "rtol and atol must be positive"));
        }
        Ok(())
    }
}
