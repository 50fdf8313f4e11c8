//! Declarative run configuration. Every field is optional; command-line
//! flags take precedence over the file.

use std::path::{Path, PathBuf};

use cfshap::recourse::{ActionKind, CostNorm, DirectionConvention};
use cfshap::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model_path: Option<PathBuf>,
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub label_column: Option<String>,
    pub methods: Option<Vec<MethodEntry>>,
    #[serde(default)]
    pub eval: EvalSection,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub base_score: Option<f64>,
    pub threshold: Option<f64>,
}

/// A background spec string such as `"knn:K=100"`, optionally named.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Spec(String),
    Named { name: String, spec: String },
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub k_values: Option<Vec<usize>>,
    pub action_kinds: Option<Vec<ActionKind>>,
    pub cost_norms: Option<Vec<CostNorm>>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub convention: Option<DirectionConvention>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema {
            path: format!("{origin}: line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = RunConfig::from_json(
            r#"{
                "model_path": "m.json", "train_csv": "train.csv", "label_column": "y",
                "methods": ["knn:K=100", {"name": "base", "spec": "train:n=50"}],
                "eval": {"k_values": [1, 2], "action_kinds": ["random"], "cost_norms": ["l1"], "n_samples": 10, "seed": 3}
            }"#,
            "cfg",
        )
        .unwrap();
        assert_eq!(cfg.label_column.as_deref(), Some("y"));
        assert_eq!(cfg.methods.as_ref().unwrap().len(), 2);
        assert_eq!(cfg.eval.action_kinds, Some(vec![ActionKind::Random]));
        assert_eq!(cfg.eval.seed, Some(3));
    }

    #[test]
    fn unknown_fields_are_located() {
        let err = RunConfig::from_json("{\n  \"modle\": 1\n}", "cfg.json").unwrap_err();
        assert_eq!(err.code(), "SchemaError");
        assert!(err.location().unwrap().starts_with("cfg.json: line 2"));
    }
}
