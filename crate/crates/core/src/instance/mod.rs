//! Problem instances, scenario distributions and random generators.

mod dataset;
mod generate;
mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{split_counts, Dataset, DatasetEntry, Split};
pub use generate::generate_instance;
pub use io::{instance_from_str, instance_to_string, read_instance, write_instance, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemClass {
    #[serde(rename = "SEL")]
    Selection,
    #[serde(rename = "VC")]
    VertexCover,
    #[serde(rename = "CFLP")]
    FacilityLocation,
}

impl ProblemClass {
    pub fn tag(self) -> &'static str {
        match self {
            ProblemClass::Selection => "SEL",
            ProblemClass::VertexCover => "VC",
            ProblemClass::FacilityLocation => "CFLP",
        }
    }

    /// Range every scenario entry of this class must fall into.
    pub fn value_domain(self) -> (f64, f64) {
        match self {
            ProblemClass::Selection | ProblemClass::VertexCover => (1.0, 100.0),
            ProblemClass::FacilityLocation => (10.0, 500.0),
        }
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProblemClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SEL" => Ok(ProblemClass::Selection),
            "VC" => Ok(ProblemClass::VertexCover),
            "CFLP" => Ok(ProblemClass::FacilityLocation),
            other => Err(Error::param(format!("unknown problem class {other:?}"))),
        }
    }
}

/// The finite uncertainty set: row `s` is scenario `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioSetRepr", into = "ScenarioSetRepr")]
pub struct ScenarioSet {
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioSetRepr {
    #[serde(rename = "S")]
    count: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ScenarioSetRepr> for ScenarioSet {
    type Error = Error;

    fn try_from(repr: ScenarioSetRepr) -> Result<Self> {
        if repr.count != repr.rows.len() {
            return Err(Error::Validation(format!(
                "scenarios.S = {} but {} rows given",
                repr.count,
                repr.rows.len()
            )));
        }
        ScenarioSet::new(repr.rows)
    }
}

impl From<ScenarioSet> for ScenarioSetRepr {
    fn from(set: ScenarioSet) -> Self {
        ScenarioSetRepr {
            count: set.rows.len(),
            rows: set.rows,
        }
    }
}

impl ScenarioSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Validation("scenario set is empty".into()));
        };
        let dim = first.len();
        for (s, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "scenario {s} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("scenario {s} holds non-finite value {v}")));
            }
        }
        Ok(ScenarioSet { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Keeps the first `count` scenarios.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.rows.len() {
            return Err(Error::param(format!(
                "cannot truncate {} scenarios to {count}",
                self.rows.len()
            )));
        }
        Ok(ScenarioSet {
            rows: self.rows[..count].to_vec(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ScenarioSet {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean_low: f64,
    pub mean_high: f64,
    /// Standard deviation as a fraction of the mean, before clipping.
    pub rel_sd: f64,
    pub sd_min: f64,
    pub sd_max: f64,
    pub clip_low: f64,
    pub clip_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultimodalParams {
    pub modes_min: usize,
    pub modes_max: usize,
    pub center_low: f64,
    pub center_high: f64,
    pub deviation_low: f64,
    pub deviation_high: f64,
    /// Draw one relative deviation per (mode, item) instead of one per mode.
    pub per_item_deviation: bool,
    /// Standard deviation of the multiplicative per-scenario scale factor
    /// around 1; zero disables scaling.
    pub scale_sd: f64,
    pub clip_low: f64,
    pub clip_high: f64,
}

/// How scenario rows are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionSpec {
    Uniform,
    Normal(NormalParams),
    Multimodal(MultimodalParams),
}

impl DistributionSpec {
    /// Per-item normal with class-specific mean band and clipping.
    pub fn normal(class: ProblemClass) -> Self {
        match class {
            ProblemClass::Selection | ProblemClass::VertexCover => DistributionSpec::Normal(NormalParams {
                mean_low: 25.0,
                mean_high: 75.0,
                rel_sd: 0.15,
                sd_min: 3.0,
                sd_max: 15.0,
                clip_low: 1.0,
                clip_high: 100.0,
            }),
            ProblemClass::FacilityLocation => DistributionSpec::Normal(NormalParams {
                mean_low: 180.0,
                mean_high: 260.0,
                rel_sd: 0.08,
                sd_min: 12.0,
                sd_max: 22.0,
                clip_low: 10.0,
                clip_high: 500.0,
            }),
        }
    }

    pub fn multimodal(class: ProblemClass) -> Self {
        match class {
            ProblemClass::Selection | ProblemClass::VertexCover => {
                DistributionSpec::Multimodal(MultimodalParams {
                    modes_min: 3,
                    modes_max: 8,
                    center_low: 25.0,
                    center_high: 75.0,
                    deviation_low: 0.1,
                    deviation_high: 0.5,
                    per_item_deviation: false,
                    scale_sd: 0.0,
                    clip_low: 1.0,
                    clip_high: 100.0,
                })
            }
            ProblemClass::FacilityLocation => DistributionSpec::Multimodal(MultimodalParams {
                modes_min: 3,
                modes_max: 6,
                center_low: 80.0,
                center_high: 380.0,
                deviation_low: 0.05,
                deviation_high: 0.20,
                per_item_deviation: true,
                scale_sd: 0.08,
                clip_low: 10.0,
                clip_high: 500.0,
            }),
        }
    }

    /// Parses `uniform`, `normal` or `multimodal` into the class defaults.
    pub fn by_name(name: &str, class: ProblemClass) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "uniform" => Ok(DistributionSpec::Uniform),
            "normal" => Ok(Self::normal(class)),
            "multimodal" | "mm" => Ok(Self::multimodal(class)),
            other => Err(Error::param(format!("unknown distribution family {other:?}"))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::Uniform => "uniform",
            DistributionSpec::Normal(_) => "normal",
            DistributionSpec::Multimodal(_) => "multimodal",
        }
    }

    /// Checks the parameters and that the clip range is the one of `class`.
    pub fn validate_for(&self, class: ProblemClass) -> Result<()> {
        let (lo, hi) = class.value_domain();
        let check_clip = |clip_low: f64, clip_high: f64| {
            if clip_low != lo || clip_high != hi {
                return Err(Error::param(format!(
                    "clip range [{clip_low}, {clip_high}] does not match {class} value domain [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        let check_band = |what: &str, a: f64, b: f64| {
            if !(a.is_finite() && b.is_finite() && a <= b && a >= lo && b <= hi) {
                return Err(Error::param(format!(
                    "{what} range [{a}, {b}] must be ordered and inside [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        match self {
            DistributionSpec::Uniform => Ok(()),
            DistributionSpec::Normal(p) => {
                check_clip(p.clip_low, p.clip_high)?;
                check_band("mean", p.mean_low, p.mean_high)?;
                if !(p.rel_sd > 0.0 && p.sd_min > 0.0 && p.sd_min <= p.sd_max) {
                    return Err(Error::param("normal deviation parameters must be positive and ordered"));
                }
                Ok(())
            }
            DistributionSpec::Multimodal(p) => {
                check_clip(p.clip_low, p.clip_high)?;
                check_band("center", p.center_low, p.center_high)?;
                if p.modes_min == 0 || p.modes_min > p.modes_max {
                    return Err(Error::param("mode count bounds must satisfy 1 <= min <= max"));
                }
                if !(0.0 <= p.deviation_low && p.deviation_low <= p.deviation_high && p.deviation_high < 1.0) {
                    return Err(Error::param("relative deviations must satisfy 0 <= low <= high < 1"));
                }
                if !(p.scale_sd >= 0.0 && p.scale_sd.is_finite()) {
                    return Err(Error::param("scale_sd must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }
}

/// Facility data of a capacitated facility location instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Facilities {
    pub fixed_cost: Vec<f64>,
    pub capacity_cost: Vec<f64>,
    pub max_capacity: Vec<f64>,
    /// `transport_cost[i][j]`: unit cost from facility `j` to customer `i`.
    pub transport_cost: Vec<Vec<f64>>,
}

impl Facilities {
    pub fn len(&self) -> usize {
        self.fixed_cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed_cost.is_empty()
    }
}

/// One two-stage robust problem instance over a discrete scenario set.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub class: ProblemClass,
    /// Items (SEL), nodes (VC) or customers (CFLP).
    pub n: usize,
    /// First-stage item/node costs; empty for CFLP.
    pub first_stage_cost: Vec<f64>,
    /// Undirected edges `(i, j)` with `i < j`; VC only.
    pub edges: Vec<(usize, usize)>,
    pub facilities: Option<Facilities>,
    pub scenarios: ScenarioSet,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Instance {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Number of facilities (CFLP only).
    pub fn m(&self) -> Option<usize> {
        self.facilities.as_ref().map(Facilities::len)
    }

    /// SEL cardinality target.
    pub fn selection_size(&self) -> usize {
        self.n / 2
    }

    /// Same instance restricted to its first `count` scenarios.
    pub fn with_scenario_prefix(&self, count: usize) -> Result<Instance> {
        Ok(Instance {
            scenarios: self.scenarios.truncated(count)?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.scenarios.dim() != self.n {
            return bad(format!(
                "scenario dimension {} does not match n = {}",
                self.scenarios.dim(),
                self.n
            ));
        }
        let nonneg = |name: &str, v: &[f64]| -> Result<()> {
            match v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                Some(x) => Err(Error::Validation(format!("{name} holds invalid cost {x}"))),
                None => Ok(()),
            }
        };
        for (s, row) in self.scenarios.rows().iter().enumerate() {
            nonneg(&format!("scenario {s}"), row)?;
        }
        match self.class {
            ProblemClass::Selection | ProblemClass::VertexCover => {
                if self.facilities.is_some() {
                    return bad(format!("{} instance carries facility data", self.class));
                }
                if self.first_stage_cost.len() != self.n {
                    return bad(format!(
                        "first_stage_cost has {} entries, expected {}",
                        self.first_stage_cost.len(),
                        self.n
                    ));
                }
                nonneg("first_stage_cost", &self.first_stage_cost)?;
                if self.class == ProblemClass::Selection && !self.edges.is_empty() {
                    return bad("SEL instance carries edges".into());
                }
                let mut seen = std::collections::HashSet::new();
                for &(i, j) in &self.edges {
                    if !(i < j && j < self.n) {
                        return bad(format!("edge ({i}, {j}) violates 0 <= i < j < n"));
                    }
                    if !seen.insert((i, j)) {
                        return bad(format!("duplicate edge ({i}, {j})"));
                    }
                }
            }
            ProblemClass::FacilityLocation => {
                let Some(fac) = &self.facilities else {
                    return bad("CFLP instance without facility data".into());
                };
                let m = fac.len();
                if m == 0 {
                    return bad("CFLP needs at least one facility".into());
                }
                if fac.capacity_cost.len() != m || fac.max_capacity.len() != m {
                    return bad(format!("capacity vectors must have length m = {m}"));
                }
                if fac.transport_cost.len() != self.n || fac.transport_cost.iter().any(|r| r.len() != m) {
                    return bad(format!("transport_cost must be {} x {m}", self.n));
                }
                if !self.first_stage_cost.is_empty() || !self.edges.is_empty() {
                    return bad("CFLP instance carries SEL/VC fields".into());
                }
                nonneg("fixed_cost", &fac.fixed_cost)?;
                nonneg("capacity_cost", &fac.capacity_cost)?;
                nonneg("max_capacity", &fac.max_capacity)?;
                for row in &fac.transport_cost {
                    nonneg("transport_cost", row)?;
                }
            }
        }
        Ok(())
    }
}
