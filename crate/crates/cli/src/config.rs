//! Experiment configuration. Every field error names its JSON path.

use std::path::{Path, PathBuf};

use flatlab_core::conservation::StepRule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Profile,
    Compare,
    Certify,
    Flow,
    Descend,
    Matfac,
    Examples,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Profile => "profile",
            CommandKind::Compare => "compare",
            CommandKind::Certify => "certify",
            CommandKind::Flow => "flow",
            CommandKind::Descend => "descend",
            CommandKind::Matfac => "matfac",
            CommandKind::Examples => "examples",
        }
    }
}

/// A catalog objective, or the factorization loss of a CSV matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ObjectiveSpec {
    Catalog {
        name: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        params: Vec<f64>,
    },
    Matrix {
        /// Path of a `rows,cols` CSV, relative to the config file.
        matrix: String,
        /// Inner dimension; defaults to the numerical rank.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub m: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    flatlab_core::profiler::DEFAULT_BUDGET
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            r_min: 1e-3,
            r_max: 1e-1,
            m: 24,
            budget: default_budget(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    GradC,
    NegGradC,
    NegGradF,
    /// The closed-form monomial flattening field; needs a `monomial` objective.
    Monomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub field: FieldKind,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    /// Explicit `n×n` generators, row-major rows; otherwise derived from the
    /// objective's known symmetry group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<Vec<f64>>>>,
    /// Order of the flatness coefficient tracked in the `coeff` column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentConfig {
    pub iters: usize,
    #[serde(default = "default_step")]
    pub step: StepRule,
}

/// `(k+1)^{−1/6}`
pub fn default_step() -> StepRule {
    StepRule::PowerDecay {
        scale: 1.0,
        exponent: 1.0 / 6.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentConfig>,
    /// `r×r` gauge matrices for `matfac`, as lists of rows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauges: Vec<Vec<Vec<f64>>>,
    /// Number of seeded random gauges added for `matfac`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_gauges: Option<usize>,
    /// Parameters `t` of the ℓ1 curve `(at, bt, 1/t)` for `matfac` on `mf1_ab`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ts: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            CliError::validation(field_of_serde_error(&msg), msg)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }
}

/// Best-effort field name from a serde message such as
/// "unknown field `foo`" or "missing field `t_end`".
fn field_of_serde_error(msg: &str) -> String {
    if msg.contains("ObjectiveSpec") {
        return "objective".to_string();
    }
    for key in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(i) = msg.find(key) {
            let rest = &msg[i + key.len()..];
            if let Some(j) = rest.find('`') {
                return rest[..j].to_string();
            }
        }
    }
    "config".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let cfg = ExperimentConfig {
            command: Some(CommandKind::Flow),
            objective: Some(ObjectiveSpec::Catalog {
                name: "monomial".into(),
                params: vec![1.0, 2.0],
            }),
            points: vec![vec![0.1 + 0.2, 1.0 / 3.0, 5e-324]],
            grid: Some(GridConfig::default()),
            order: Some(2),
            flow: Some(FlowConfig {
                field: FieldKind::NegGradC,
                t_end: 10.0,
                dt: 1e-3,
                anchor: Some(vec![std::f64::consts::PI]),
                generators: None,
                coeff_order: Some(2),
            }),
            descent: Some(DescentConfig {
                iters: 1000,
                step: default_step(),
            }),
            gauges: vec![vec![vec![1.0, 0.0], vec![0.0, 2f64.sqrt()]]],
            random_gauges: Some(3),
            ts: vec![0.5],
            seed: u64::MAX,
            out_dir: Some("out".into()),
        };
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), text);
        let p = &back.points[0];
        assert_eq!(p[0].to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(p[2].to_bits(), 5e-324f64.to_bits());
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::from_json(r#"{"grid":{"r_min":1,"r_max":2,"m":3,"bogus":1}}"#).unwrap_err();
        assert_eq!(e.field(), Some("bogus"));
        let e = ExperimentConfig::from_json(r#"{"flow":{"field":"neg_grad_c","dt":0.1}}"#).unwrap_err();
        assert_eq!(e.field(), Some("t_end"));
    }
}
