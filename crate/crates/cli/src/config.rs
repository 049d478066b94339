//! Experiment configuration: one JSON document per run.

use serde::{Deserialize, Serialize};

use covering::dist::DEFAULT_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsKind {
    Tightest,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Auto,
    Explicit,
    Collapsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    Independent,
    Aliased,
}

/// Event set over the n-fold block alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EventSpec {
    /// The weakly `δ`-typical set.
    Typical,
    /// Tuples whose listed variables carry identical sequences.
    Equal { vars: Vec<usize> },
    /// Listed tuples of block symbols (sequence codes, first position most
    /// significant).
    Explicit { members: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyQuery {
    pub set: Vec<usize>,
    #[serde(default)]
    pub given: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub alphabet_sizes: Vec<usize>,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sweep: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u64>>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_queries: Option<Vec<EntropyQuery>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_grid: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<bool>,
}

/// A configuration problem, tied to the field that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: field `{}`: {}", self.field, self.message)
    }
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        // serde_json appends " at line L column C"; keep it, it is one line.
        ConfigError::new(&field, e.into_inner().to_string())
    })
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {x}")))
    }
}

impl Config {
    /// Fills defaults and checks ranges of every field that is present.
    pub fn resolve(mut self) -> Result<Config, ConfigError> {
        if self.alphabet_sizes.len() < 3 {
            return Err(ConfigError::new("alphabet_sizes", "need at least 3 variables"));
        }
        let k = self.alphabet_sizes.len() - 2;
        match self.k {
            Some(given) if given != k => {
                return Err(ConfigError::new(
                    "k",
                    format!("{given} does not match {} alphabet sizes", self.alphabet_sizes.len()),
                ))
            }
            _ => self.k = Some(k),
        }
        let tol = self.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        positive("tolerance", tol)?;
        self.tolerance = Some(tol);
        if self.n.is_some() && self.n_sweep.is_some() {
            return Err(ConfigError::new("n_sweep", "give either `n` or `n_sweep`, not both"));
        }
        if self.n == Some(0) {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if let Some(sweep) = &self.n_sweep {
            if sweep.is_empty() || sweep.contains(&0) {
                return Err(ConfigError::new("n_sweep", "must be a nonempty list of positive lengths"));
            }
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ConfigError::new("delta", format!("must be nonnegative and finite, got {d}")));
            }
        }
        if self.epsilon.is_some() && self.epsilon_grid.is_some() {
            return Err(ConfigError::new("epsilon_grid", "give either `epsilon` or `epsilon_grid`, not both"));
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if let Some(grid) = &self.epsilon_grid {
            if grid.is_empty() {
                return Err(ConfigError::new("epsilon_grid", "must not be empty"));
            }
            for &e in grid {
                positive("epsilon_grid", e)?;
            }
        }
        if self.m.is_some() && self.r.is_some() {
            return Err(ConfigError::new("R", "give exactly one of `M` and `R`"));
        }
        if let Some(m) = &self.m {
            if m.len() != k {
                return Err(ConfigError::new("M", format!("expected {k} codebook sizes, got {}", m.len())));
            }
        }
        if let Some(r) = &self.r {
            if r.len() != k {
                return Err(ConfigError::new("R", format!("expected {k} rates, got {}", r.len())));
            }
            if let Some(&bad) = r.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(ConfigError::new("R", format!("rates must be nonnegative, got {bad}")));
            }
        }
        if self.trials == Some(0) {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        let guard = self.guard.unwrap_or(1e7);
        positive("guard", guard)?;
        self.guard = Some(guard);
        let conf = self.confidence.unwrap_or(0.95);
        if !(conf > 0.0 && conf < 1.0) {
            return Err(ConfigError::new("confidence", format!("must lie in (0, 1), got {conf}")));
        }
        self.confidence = Some(conf);
        self.seed = Some(self.seed.unwrap_or(0));
        self.format = Some(self.format.unwrap_or(Format::Csv));
        self.bits = Some(self.bits.unwrap_or(false));
        let num_vars = k + 2;
        let check_vars = |field: &str, vars: &[usize]| -> Result<(), ConfigError> {
            match vars.iter().find(|&&v| v >= num_vars) {
                Some(v) => Err(ConfigError::new(field, format!("variable {v} out of range 0..{num_vars}"))),
                None => Ok(()),
            }
        };
        if let Some(qs) = &self.entropy_queries {
            for q in qs {
                check_vars("entropy_queries", &q.set)?;
                check_vars("entropy_queries", &q.given)?;
                if q.set.is_empty() {
                    return Err(ConfigError::new("entropy_queries", "`set` must be nonempty"));
                }
            }
        }
        if let Some(scope) = &self.scope {
            check_vars("scope", scope)?;
            if scope.is_empty() {
                return Err(ConfigError::new("scope", "must be nonempty"));
            }
        }
        if let Some(grid) = &self.rate_grid {
            if grid.len() != k {
                return Err(ConfigError::new("rate_grid", format!("expected {k} axes, got {}", grid.len())));
            }
            if grid.iter().any(Vec::is_empty) {
                return Err(ConfigError::new("rate_grid", "axes must be nonempty"));
            }
        }
        if let Some(EventSpec::Equal { vars }) = &self.event {
            check_vars("event", vars)?;
            if vars.len() < 2 {
                return Err(ConfigError::new("event", "`equal` needs at least two variables"));
            }
            let size = self.alphabet_sizes[vars[0]];
            if vars.iter().any(|&v| self.alphabet_sizes[v] != size) {
                return Err(ConfigError::new("event", "`equal` variables must share an alphabet size"));
            }
        }
        Ok(self)
    }

    /// Block lengths to run: `n_sweep`, or `[n]`.
    pub fn lengths(&self) -> Result<Vec<usize>, ConfigError> {
        match (&self.n, &self.n_sweep) {
            (Some(n), _) => Ok(vec![*n]),
            (None, Some(s)) => Ok(s.clone()),
            (None, None) => Err(ConfigError::new("n", "required for this subcommand")),
        }
    }

    pub fn delta(&self) -> Result<f64, ConfigError> {
        self.delta.ok_or_else(|| ConfigError::new("delta", "required for this subcommand"))
    }

    /// Rates in nats, converting from bits when requested.
    pub fn rates_nats(&self) -> Option<Vec<f64>> {
        let scale = if self.bits == Some(true) { std::f64::consts::LN_2 } else { 1.0 };
        self.r.as_ref().map(|r| r.iter().map(|x| x * scale).collect())
    }
}
