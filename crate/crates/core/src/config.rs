//! Ranking and engine settings, layered from defaults, a TOML file,
//! environment variables and command-line flags (later layers win).

use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::error::ExplainError;

/// Hard upper bound on the number of changes in any explanation.
pub const MAX_SPARSITY: usize = 3;

/// One week, in milliseconds.
pub const DEFAULT_TEMPORALITY_SENTINEL_MS: i64 = 7 * 24 * 60 * 60 * 1000;

pub const ENV_PREFIX: &str = "CFEXPLAIN_";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub sparsity: f64,
    pub temporality: f64,
    pub proximity: f64,
    pub abnormality: f64,
}

impl Weights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.sparsity, self.temporality, self.proximity, self.abnormality]
    }

    pub fn from_array(w: [f64; 4]) -> Self {
        Weights { sparsity: w[0], temporality: w[1], proximity: w[2], abnormality: w[3] }
    }

    /// Parses `"a,b,c,d"` in sparsity, temporality, proximity, abnormality order.
    pub fn parse_list(text: &str) -> Result<Self, ExplainError> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ExplainError::InvalidConfig(format!("weights: {e}")))?;
        let arr: [f64; 4] =
            parts.try_into().map_err(|_| ExplainError::InvalidConfig("weights: expected four numbers".into()))?;
        Ok(Weights::from_array(arr))
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::from_array([0.25; 4])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    pub weights: Weights,
    pub sparsity_cap: usize,
    /// Temporality assigned to changes whose target state never occurred.
    pub temporality_sentinel_ms: i64,
    /// Only candidates of the smallest surviving size are ranked.
    pub sparsity_primary: bool,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            weights: Weights::default(),
            sparsity_cap: MAX_SPARSITY,
            temporality_sentinel_ms: DEFAULT_TEMPORALITY_SENTINEL_MS,
            sparsity_primary: true,
        }
    }
}

impl RankingConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        let w = self.weights.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ExplainError::InvalidConfig("weights must be non-negative".into()));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ExplainError::InvalidConfig("weights must sum to 1".into()));
        }
        if self.sparsity_cap == 0 || self.sparsity_cap > MAX_SPARSITY {
            return Err(ExplainError::InvalidConfig(format!("sparsity_cap must be between 1 and {MAX_SPARSITY}")));
        }
        if self.temporality_sentinel_ms <= 0 {
            return Err(ExplainError::InvalidConfig("temporality sentinel must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a request can tune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Settings {
    pub ranking: RankingConfig,
    pub engine: EngineConfig,
}

/// A partial set of overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub weights: Option<Weights>,
    pub sparsity_cap: Option<usize>,
    pub temporality_sentinel_ms: Option<i64>,
    pub sparsity_primary: Option<bool>,
    pub cascade_cap: Option<usize>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self, ExplainError> {
        toml::from_str(text).map_err(|e| ExplainError::InvalidConfig(e.to_string()))
    }

    /// Reads `CFEXPLAIN_*` variables from `vars`.
    pub fn from_env<I, K, V>(vars: I) -> Result<Self, ExplainError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut layer = ConfigLayer::default();
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let v = v.as_ref().trim();
            let bad = |what: &str| ExplainError::InvalidConfig(format!("{ENV_PREFIX}{what}: `{v}`"));
            match key {
                "WEIGHTS" => layer.weights = Some(Weights::parse_list(v)?),
                "SPARSITY_CAP" => layer.sparsity_cap = Some(v.parse().map_err(|_| bad(key))?),
                "TEMPORALITY_SENTINEL_MS" => layer.temporality_sentinel_ms = Some(v.parse().map_err(|_| bad(key))?),
                "SPARSITY_PRIMARY" => layer.sparsity_primary = Some(v.parse().map_err(|_| bad(key))?),
                "CASCADE_CAP" => layer.cascade_cap = Some(v.parse().map_err(|_| bad(key))?),
                _ => {}
            }
        }
        Ok(layer)
    }

    /// `other` takes precedence over `self`.
    pub fn overlay(self, other: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            weights: other.weights.or(self.weights),
            sparsity_cap: other.sparsity_cap.or(self.sparsity_cap),
            temporality_sentinel_ms: other.temporality_sentinel_ms.or(self.temporality_sentinel_ms),
            sparsity_primary: other.sparsity_primary.or(self.sparsity_primary),
            cascade_cap: other.cascade_cap.or(self.cascade_cap),
        }
    }

    pub fn apply(&self, base: &Settings) -> Result<Settings, ExplainError> {
        let mut s = base.clone();
        if let Some(w) = self.weights {
            s.ranking.weights = w;
        }
        if let Some(c) = self.sparsity_cap {
            s.ranking.sparsity_cap = c;
        }
        if let Some(t) = self.temporality_sentinel_ms {
            s.ranking.temporality_sentinel_ms = t;
        }
        if let Some(p) = self.sparsity_primary {
            s.ranking.sparsity_primary = p;
        }
        if let Some(c) = self.cascade_cap {
            if c == 0 {
                return Err(ExplainError::InvalidConfig("cascade_cap must be positive".into()));
            }
            s.engine.cascade_cap = c;
        }
        s.ranking.validate()?;
        Ok(s)
    }
}

/// Resolves settings with precedence flags > env > file > defaults.
pub fn resolve(file: Option<&str>, env: ConfigLayer, flags: ConfigLayer) -> Result<Settings, ExplainError> {
    let file = match file {
        Some(text) => ConfigLayer::from_toml(text)?,
        None => ConfigLayer::default(),
    };
    file.overlay(env).overlay(flags).apply(&Settings::default())
}
