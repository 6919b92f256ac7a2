//! A dataset is a directory of instance files plus `manifest.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_instance, Instance, ProblemClass, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::param(format!("unknown split {other:?}"))),
        }
    }
}

/// Train/val/test sizes for `count` instances: val takes `floor(count/10)`,
/// train takes `floor(0.8 count)` but at least one, test takes the rest.
pub fn split_counts(count: usize) -> (usize, usize, usize) {
    if count == 0 {
        return (0, 0, 0);
    }
    let train = (count * 8 / 10).max(1);
    let val = (count / 10).min(count - train);
    (train, val, count - train - val)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub file: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub class: ProblemClass,
    pub entries: Vec<DatasetEntry>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn new(root: impl Into<PathBuf>, class: ProblemClass, entries: Vec<DatasetEntry>) -> Self {
        Dataset {
            root: root.into(),
            manifest: Manifest {
                schema_version: SCHEMA_VERSION.to_string(),
                class,
                entries,
            },
        }
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                context: path.display().to_string(),
                found: manifest.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(Dataset {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn write_manifest(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn entries<'a>(&'a self, splits: Option<&'a [Split]>) -> impl Iterator<Item = &'a DatasetEntry> {
        self.manifest
            .entries
            .iter()
            .filter(move |e| splits.map_or(true, |s| s.contains(&e.split)))
    }

    pub fn load(&self, entry: &DatasetEntry) -> Result<Instance> {
        read_instance(self.root.join(&entry.file))
    }

    /// Loads every instance of the requested splits (all when `None`).
    pub fn load_all(&self, splits: Option<&[Split]>) -> Result<Vec<(String, Instance)>> {
        self.entries(splits)
            .map(|e| Ok((e.id.clone(), self.load(e)?)))
            .collect()
    }
}
