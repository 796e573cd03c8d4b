//! Run configuration, read from a single JSON document.
//!
//! Variable indices in the document (`allowed_dims`, `quantile_refine`) are
//! 1-based, matching the variable labels in the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::densities::{Marginal, ProductDensity};
use crate::error::{Error, Result};
use crate::models::{GFunction, Linear3, Lorenz, Model};

/// Models addressable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Gfunction,
    Linear3,
    Lorenz,
}

impl ModelName {
    pub fn dim(&self) -> usize {
        match self {
            ModelName::Gfunction => 10,
            ModelName::Linear3 => 3,
            ModelName::Lorenz => 6,
        }
    }

    pub fn build(&self) -> Box<dyn Model> {
        match self {
            ModelName::Gfunction => Box::new(GFunction::standard()),
            ModelName::Linear3 => Box::new(Linear3),
            ModelName::Lorenz => Box::new(Lorenz::default()),
        }
    }

    /// Display names of the inputs.
    pub fn variable_names(&self) -> Vec<String> {
        match self {
            ModelName::Lorenz => ["σ", "ρ", "β", "α1", "α2", "α3"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            _ => (1..=self.dim()).map(|k| format!("x{k}")).collect(),
        }
    }
}

fn default_min_leaf() -> usize {
    50
}

fn default_r() -> usize {
    60
}

fn default_tau() -> f64 {
    1.5
}

fn default_reps() -> usize {
    crate::sobol::DEFAULT_REPS
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Quantile refinement of one variable: every box is cut into `q` pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct QuantileRefine {
    /// 1-based variable.
    pub dim: usize,
    pub q: usize,
}

impl From<(usize, usize)> for QuantileRefine {
    fn from((dim, q): (usize, usize)) -> Self {
        Self { dim, q }
    }
}

impl From<QuantileRefine> for (usize, usize) {
    fn from(r: QuantileRefine) -> Self {
        (r.dim, r.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelName,
    pub marginals: Vec<Marginal>,
    pub n: usize,
    /// Minimum samples per tree leaf.
    #[serde(rename = "L", alias = "min_leaf", default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    /// Subsample replicates for standard deviations.
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile_refine: Option<QuantileRefine>,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Config with uniform marginals on `[0, 1]` and default settings.
    pub fn unit_cube(model: ModelName, n: usize) -> Self {
        Self {
            model,
            marginals: vec![Marginal::uniform(0.0, 1.0).expect("unit interval"); model.dim()],
            n,
            min_leaf: default_min_leaf(),
            r: default_r(),
            tau: default_tau(),
            seed: 0,
            reps: default_reps(),
            allowed_dims: None,
            quantile_refine: None,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.model.dim();
        if self.marginals.len() != p {
            return Err(Error::config(
                "marginals",
                format!("model {:?} needs {p} marginals, got {}", self.model, self.marginals.len()),
            ));
        }
        if self.min_leaf == 0 {
            return Err(Error::config("L", "must be at least 1"));
        }
        if self.n < 2 * self.min_leaf {
            return Err(Error::config(
                "n",
                format!("must be at least 2L = {}, got {}", 2 * self.min_leaf, self.n),
            ));
        }
        if self.n < 4 {
            return Err(Error::config("n", "must be at least 4"));
        }
        if self.r < 2 {
            return Err(Error::config("r", format!("must be at least 2, got {}", self.r)));
        }
        if !(self.tau > 1.0) {
            return Err(Error::config("tau", format!("must exceed 1, got {}", self.tau)));
        }
        if self.reps < 2 {
            return Err(Error::config("reps", "must be at least 2"));
        }
        if let Some(dims) = &self.allowed_dims {
            if dims.is_empty() {
                return Err(Error::config("allowed_dims", "must not be empty"));
            }
            for (i, &d) in dims.iter().enumerate() {
                if d == 0 || d > p {
                    return Err(Error::config(
                        format!("allowed_dims[{i}]"),
                        format!("variable {d} outside 1..={p}"),
                    ));
                }
            }
        }
        if let Some(refine) = self.quantile_refine {
            if refine.dim == 0 || refine.dim > p {
                return Err(Error::config(
                    "quantile_refine[0]",
                    format!("variable {} outside 1..={p}", refine.dim),
                ));
            }
            if refine.q < 2 {
                return Err(Error::config("quantile_refine[1]", "must be at least 2"));
            }
        }
        Ok(())
    }

    pub fn density(&self) -> Result<ProductDensity> {
        ProductDensity::new(self.marginals.clone())
    }

    /// 0-based dimensions the tree may split on.
    pub fn split_dims(&self) -> Vec<usize> {
        match &self.allowed_dims {
            Some(d) => {
                let mut v: Vec<usize> = d.iter().map(|k| k - 1).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (0..self.model.dim()).collect(),
        }
    }
}
