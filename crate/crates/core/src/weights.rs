//! Metric weights and the relationship-type lookup table, plus the JSON
//! configuration file that carries both.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::RelationshipKind;

const SUM_TOLERANCE: f64 = 1e-9;

/// Bundled configuration: published optimum weights plus default LUT.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default.json");
/// Bundled configuration with uniform weights in every group.
pub const UNIFORM_CONFIG_JSON: &str = include_str!("../config/uniform.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("weight `{name}` = {value} lies outside [0, 1]")]
    WeightRange { name: &'static str, value: f64 },
    #[error("weight group {group} sums to {sum}, expected 1")]
    GroupSum { group: &'static str, sum: f64 },
    #[error("relationship-type table: {0}")]
    Lut(String),
    #[error("cannot read configuration {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
}

/// The fifteen weights. Each group sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    // diagram level
    pub w_e: f64,
    pub w_r: f64,
    // class level
    pub w_n: f64,
    pub w_a: f64,
    pub w_m: f64,
    // attribute level
    pub w_at: f64,
    pub w_an: f64,
    // method level
    pub w_mn: f64,
    pub w_mt: f64,
    pub w_mp: f64,
    // parameter level
    pub w_pt: f64,
    pub w_pn: f64,
    // relationship level
    pub w_rt: f64,
    pub w_rq: f64,
    pub w_rn: f64,
}

impl Default for WeightConfig {
    /// The published optimum fitted against instructor ratings.
    fn default() -> Self {
        Self {
            w_e: 0.810,
            w_r: 0.190,
            w_n: 0.787,
            w_a: 0.104,
            w_m: 0.109,
            w_at: 0.594,
            w_an: 0.406,
            w_mn: 0.730,
            w_mt: 0.153,
            w_mp: 0.117,
            w_pt: 0.050,
            w_pn: 0.950,
            w_rt: 0.156,
            w_rq: 0.220,
            w_rn: 0.624,
        }
    }
}

impl WeightConfig {
    pub fn uniform() -> Self {
        let third = 1.0 / 3.0;
        Self {
            w_e: 0.5,
            w_r: 0.5,
            w_n: third,
            w_a: third,
            w_m: third,
            w_at: 0.5,
            w_an: 0.5,
            w_mn: third,
            w_mt: third,
            w_mp: third,
            w_pt: 0.5,
            w_pn: 0.5,
            w_rt: third,
            w_rq: third,
            w_rn: third,
        }
    }

    pub fn named(&self) -> [(&'static str, f64); 15] {
        [
            ("w_e", self.w_e),
            ("w_r", self.w_r),
            ("w_n", self.w_n),
            ("w_a", self.w_a),
            ("w_m", self.w_m),
            ("w_at", self.w_at),
            ("w_an", self.w_an),
            ("w_mn", self.w_mn),
            ("w_mt", self.w_mt),
            ("w_mp", self.w_mp),
            ("w_pt", self.w_pt),
            ("w_pn", self.w_pn),
            ("w_rt", self.w_rt),
            ("w_rq", self.w_rq),
            ("w_rn", self.w_rn),
        ]
    }

    pub fn group_sums(&self) -> [(&'static str, f64); 6] {
        [
            ("diagram (w_e, w_r)", self.w_e + self.w_r),
            ("class (w_n, w_a, w_m)", self.w_n + self.w_a + self.w_m),
            ("attribute (w_at, w_an)", self.w_at + self.w_an),
            ("method (w_mn, w_mt, w_mp)", self.w_mn + self.w_mt + self.w_mp),
            ("parameter (w_pt, w_pn)", self.w_pt + self.w_pn),
            ("relationship (w_rt, w_rq, w_rn)", self.w_rt + self.w_rq + self.w_rn),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in self.named() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::WeightRange { name, value });
            }
        }
        for (group, sum) in self.group_sums() {
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(ConfigError::GroupSum { group, sum });
            }
        }
        Ok(())
    }
}

/// Symmetric 6×6 relationship-type similarity with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipTypeLut {
    table: [[f64; 6]; 6],
}

impl RelationshipTypeLut {
    #[allow(clippy::needless_range_loop)]
    pub fn new(table: [[f64; 6]; 6]) -> Result<Self, ConfigError> {
        for i in 0..6 {
            if table[i][i] != 1.0 {
                return Err(ConfigError::Lut(format!(
                    "diagonal entry {} must be 1, got {}",
                    RelationshipKind::ALL[i],
                    table[i][i]
                )));
            }
            for j in 0..6 {
                let v = table[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::Lut(format!(
                        "entry ({}, {}) = {v} lies outside [0, 1]",
                        RelationshipKind::ALL[i],
                        RelationshipKind::ALL[j]
                    )));
                }
                if v != table[j][i] {
                    return Err(ConfigError::Lut(format!(
                        "entries ({a}, {b}) and ({b}, {a}) differ",
                        a = RelationshipKind::ALL[i],
                        b = RelationshipKind::ALL[j]
                    )));
                }
            }
        }
        Ok(Self { table })
    }

    #[inline]
    pub fn get(&self, a: RelationshipKind, b: RelationshipKind) -> f64 {
        self.table[a.index()][b.index()]
    }
}

impl Default for RelationshipTypeLut {
    /// Shipped defaults; replace through the configuration file when a
    /// calibrated table is available.
    fn default() -> Self {
        use RelationshipKind::*;
        let mut table = [[0.0; 6]; 6];
        let mut set = |a: RelationshipKind, b: RelationshipKind, v: f64| {
            table[a.index()][b.index()] = v;
            table[b.index()][a.index()] = v;
        };
        for k in RelationshipKind::ALL {
            set(k, k, 1.0);
        }
        set(AG, CO, 0.7);
        set(AS, AG, 0.5);
        set(AS, CO, 0.5);
        set(GE, RE, 0.5);
        for k in [AS, AG, CO, GE, RE] {
            set(DE, k, 0.2);
        }
        for k in [AS, AG, CO] {
            set(GE, k, 0.1);
            set(RE, k, 0.1);
        }
        Self { table }
    }
}

type LutRepr = BTreeMap<RelationshipKind, BTreeMap<RelationshipKind, f64>>;

impl Serialize for RelationshipTypeLut {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr: LutRepr = RelationshipKind::ALL
            .into_iter()
            .map(|a| (a, RelationshipKind::ALL.into_iter().map(|b| (b, self.get(a, b))).collect()))
            .collect();
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RelationshipTypeLut {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = LutRepr::deserialize(deserializer)?;
        let mut table = [[f64::NAN; 6]; 6];
        for a in RelationshipKind::ALL {
            for b in RelationshipKind::ALL {
                table[a.index()][b.index()] = *repr
                    .get(&a)
                    .and_then(|row| row.get(&b))
                    .ok_or_else(|| serde::de::Error::custom(format!("missing LUT entry ({a}, {b})")))?;
            }
        }
        RelationshipTypeLut::new(table).map_err(serde::de::Error::custom)
    }
}

/// Contents of a weight configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClueConfig {
    pub weights: WeightConfig,
    #[serde(default)]
    pub lut: RelationshipTypeLut,
}

impl ClueConfig {
    pub fn new(weights: WeightConfig) -> Self {
        Self {
            weights,
            lut: RelationshipTypeLut::default(),
        }
    }

    pub fn bundled_default() -> Self {
        Self::from_json(DEFAULT_CONFIG_JSON).expect("bundled default configuration is valid")
    }

    pub fn bundled_uniform() -> Self {
        Self::from_json(UNIFORM_CONFIG_JSON).expect("bundled uniform configuration is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ClueConfig = serde_json::from_str(text)?;
        config.weights.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
