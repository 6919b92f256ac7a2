//! JSON instance files, one instance per file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DistributionSpec, Facilities, Instance, ProblemClass, ScenarioSet};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema_version: String,
    class: ProblemClass,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    first_stage_cost: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_cost: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity_cost: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_capacity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transport_cost: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
    scenarios: ScenarioSet,
    seed: u64,
    dist: DistributionSpec,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<String>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let fac = inst.facilities.as_ref();
        let sel_or_vc = inst.class != ProblemClass::FacilityLocation;
        InstanceFile {
            schema_version: SCHEMA_VERSION.to_string(),
            class: inst.class,
            n: inst.n,
            m: inst.m(),
            first_stage_cost: sel_or_vc.then(|| inst.first_stage_cost.clone()),
            fixed_cost: fac.map(|f| f.fixed_cost.clone()),
            capacity_cost: fac.map(|f| f.capacity_cost.clone()),
            max_capacity: fac.map(|f| f.max_capacity.clone()),
            transport_cost: fac.map(|f| f.transport_cost.clone()),
            edges: (inst.class == ProblemClass::VertexCover).then(|| inst.edges.clone()),
            scenarios: inst.scenarios.clone(),
            seed: inst.seed,
            dist: inst.dist.clone(),
        }
    }
}

impl InstanceFile {
    fn into_instance(self, context: &str) -> Result<Instance> {
        let missing = |field: &str| Error::Parse {
            context: context.to_string(),
            message: format!("missing field `{field}` required for class {}", self.class),
        };
        let facilities = match self.class {
            ProblemClass::FacilityLocation => {
                let fac = Facilities {
                    fixed_cost: self.fixed_cost.clone().ok_or_else(|| missing("fixed_cost"))?,
                    capacity_cost: self.capacity_cost.clone().ok_or_else(|| missing("capacity_cost"))?,
                    max_capacity: self.max_capacity.clone().ok_or_else(|| missing("max_capacity"))?,
                    transport_cost: self.transport_cost.clone().ok_or_else(|| missing("transport_cost"))?,
                };
                let m = self.m.ok_or_else(|| missing("m"))?;
                if m != fac.len() {
                    return Err(Error::Validation(format!(
                        "{context}: m = {m} but fixed_cost has {} entries",
                        fac.len()
                    )));
                }
                Some(fac)
            }
            _ => None,
        };
        let first_stage_cost = match self.class {
            ProblemClass::FacilityLocation => Vec::new(),
            _ => self.first_stage_cost.clone().ok_or_else(|| missing("first_stage_cost"))?,
        };
        let edges = match self.class {
            ProblemClass::VertexCover => self.edges.clone().ok_or_else(|| missing("edges"))?,
            _ => self.edges.clone().unwrap_or_default(),
        };
        let inst = Instance {
            class: self.class,
            n: self.n,
            first_stage_cost,
            edges,
            facilities,
            scenarios: self.scenarios,
            seed: self.seed,
            dist: self.dist,
        };
        inst.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{context}: {msg}")),
            other => other,
        })?;
        Ok(inst)
    }
}

pub fn instance_to_string(inst: &Instance) -> Result<String> {
    serde_json::to_string_pretty(&InstanceFile::from(inst)).map_err(|e| Error::Parse {
        context: "instance".into(),
        message: e.to_string(),
    })
}

/// Parses an instance document; `context` names the source in errors.
pub fn instance_from_str(text: &str, context: &str) -> Result<Instance> {
    let parse_err = |e: serde_json::Error| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    };
    let probe: VersionProbe = serde_json::from_str(text).map_err(parse_err)?;
    match probe.schema_version.as_deref() {
        Some(SCHEMA_VERSION) => {}
        Some(other) => {
            return Err(Error::Version {
                context: context.to_string(),
                found: other.to_string(),
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::Parse {
                context: context.to_string(),
                message: "missing field `schema_version`".into(),
            })
        }
    }
    let file: InstanceFile = serde_json::from_str(text).map_err(parse_err)?;
    file.into_instance(context)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = instance_to_string(inst)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    instance_from_str(&text, &path.display().to_string())
}
