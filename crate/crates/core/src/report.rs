//! Serialized run outputs: `report.json`, `report.csv`, `histogram.csv`,
//! `partition.csv`, `derivatives.csv` and `bars.svg`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::frechet::{PerturbationBasis, PerturbationDirection, Target};
use crate::reweight::{PerturbationCandidate, RobustnessReport};
use crate::svg::BarChart;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NominalDoc {
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeNorm {
    pub target: Target,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateDoc {
    pub target: Target,
    pub delta: f64,
    pub normalizer: f64,
    pub t: f64,
    #[serde(rename = "T")]
    pub perturbed_t: Vec<f64>,
    #[serde(rename = "N")]
    pub perturbed_n: Vec<f64>,
    pub abs_change: f64,
    pub rel_change: f64,
    pub admissible: bool,
    pub degenerate: bool,
}

impl From<&PerturbationCandidate> for CandidateDoc {
    fn from(c: &PerturbationCandidate) -> Self {
        Self {
            target: c.target(),
            delta: c.delta(),
            normalizer: c.spec.normalizer,
            t: c.t,
            perturbed_t: c.perturbed_t.0.clone(),
            perturbed_n: c.perturbed_n.0.clone(),
            abs_change: c.abs_change,
            rel_change: c.rel_change,
            admissible: c.admissible,
            degenerate: c.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremes {
    pub abs: CandidateDoc,
    pub rel: CandidateDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSummary {
    pub boxes: usize,
    pub zero_floor_boxes: usize,
}

/// The machine-readable result of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDoc {
    pub config: RunConfig,
    pub variables: Vec<String>,
    pub evaluations: usize,
    pub partition: PartitionSummary,
    pub nominal: NominalDoc,
    pub derivative_norms: Vec<DerivativeNorm>,
    pub candidates: Vec<CandidateDoc>,
    pub extremes: Extremes,
}

impl ReportDoc {
    pub fn new(
        config: &RunConfig,
        evaluations: usize,
        basis: &PerturbationBasis,
        report: &RobustnessReport,
    ) -> Self {
        let floors = basis.effective_floors();
        Self {
            config: config.clone(),
            variables: config.model.variable_names(),
            evaluations,
            partition: PartitionSummary {
                boxes: basis.len(),
                zero_floor_boxes: floors.iter().filter(|b| **b == 0.0).count(),
            },
            nominal: NominalDoc {
                t: report.nominal.t.0.clone(),
                n: report.nominal.n.0.clone(),
                std: report.nominal.std.clone(),
            },
            derivative_norms: report
                .directions
                .iter()
                .map(|d: &PerturbationDirection| DerivativeNorm {
                    target: d.target,
                    norm: d.norm_value,
                })
                .collect(),
            candidates: report.candidates.iter().map(CandidateDoc::from).collect(),
            extremes: Extremes {
                abs: report.extreme_abs().into(),
                rel: report.extreme_rel().into(),
            },
        }
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        Ok(text)
    }

    /// One row per series and variable, same numbers as the JSON.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,target,variable,T,N,std,delta,t,admissible,abs_change,rel_change\n");
        let p = self.nominal.t.len();
        for k in 0..p {
            let _ = writeln!(
                out,
                "nominal,,{},{},{},{},,,,,",
                k + 1,
                self.nominal.t[k],
                self.nominal.n[k],
                self.nominal.std[k]
            );
        }
        let mut block = |series: &str, c: &CandidateDoc| {
            for k in 0..p {
                let _ = writeln!(
                    out,
                    "{series},{},{},{},{},,{},{},{},{},{}",
                    c.target.label(),
                    k + 1,
                    c.perturbed_t[k],
                    c.perturbed_n[k],
                    c.delta,
                    c.t,
                    c.admissible,
                    c.abs_change,
                    c.rel_change
                );
            }
        };
        for c in &self.candidates {
            block("candidate", c);
        }
        block("extreme_abs", &self.extremes.abs);
        block("extreme_rel", &self.extremes.rel);
        out
    }

    /// All `2p` perturbed values of every index, for histograms.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("variable,source,delta,T,N\n");
        for k in 0..self.nominal.t.len() {
            for c in &self.candidates {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    k + 1,
                    c.target.label(),
                    c.delta,
                    c.perturbed_t[k],
                    c.perturbed_n[k]
                );
            }
        }
        out
    }

    pub fn bar_chart(&self) -> BarChart {
        BarChart {
            title: format!("Total Sobol' indices ({:?})", self.config.model).to_lowercase(),
            groups: self.variables.clone(),
            series: vec![
                ("nominal".into(), self.nominal.t.clone()),
                (
                    format!("largest absolute change ({})", self.extremes.abs.target.label()),
                    self.extremes.abs.perturbed_t.clone(),
                ),
                (
                    format!("largest relative change ({})", self.extremes.rel.target.label()),
                    self.extremes.rel.perturbed_t.clone(),
                ),
            ],
        }
    }
}

/// One line per box: index, bounds per dimension, sample count, floor, volume.
pub fn partition_csv(basis: &PerturbationBasis) -> String {
    let part = basis.partition();
    let p = part.domain().dim();
    let mut out = String::from("box");
    for j in 1..=p {
        let _ = write!(out, ",lo_{j},hi_{j}");
    }
    out.push_str(",count,floor,volume\n");
    let counts = part.counts();
    for (i, b) in part.boxes().iter().enumerate() {
        let _ = write!(out, "{i}");
        for iv in b.intervals() {
            let _ = write!(out, ",{},{}", iv.lo(), iv.hi());
        }
        let _ = writeln!(out, ",{},{},{}", counts[i], basis.floors()[i], basis.volumes()[i]);
    }
    out
}

/// Derivative table as `variable,box,dT,dN` rows.
pub fn derivatives_csv(report: &RobustnessReport) -> String {
    let mut out = String::from("variable,box,dT,dN\n");
    for (k, (dt, dn)) in report.table.dt.iter().zip(&report.table.dn).enumerate() {
        for (i, (a, b)) in dt.iter().zip(dn).enumerate() {
            let _ = writeln!(out, "{},{i},{a},{b}", k + 1);
        }
    }
    out
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
}
