//! External scenario rankings (JSON lines) and top-k extraction.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum RankingBody {
    Scores(Vec<f64>),
    Permutation(Vec<usize>),
}

/// Ordering over all scenarios of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RankingRepr", into = "RankingRepr")]
pub struct Ranking {
    pub instance_id: String,
    /// Producer tag, e.g. `"neurprise-0.1"`.
    pub method: String,
    pub body: RankingBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankingRepr {
    instance_id: String,
    method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    permutation: Option<Vec<usize>>,
}

impl TryFrom<RankingRepr> for Ranking {
    type Error = String;

    fn try_from(r: RankingRepr) -> std::result::Result<Self, String> {
        let body = match (r.scores, r.permutation) {
            (Some(s), None) => RankingBody::Scores(s),
            (None, Some(p)) => RankingBody::Permutation(p),
            _ => return Err("exactly one of `scores` and `permutation` is required".into()),
        };
        Ok(Ranking {
            instance_id: r.instance_id,
            method: r.method,
            body,
        })
    }
}

impl From<Ranking> for RankingRepr {
    fn from(r: Ranking) -> Self {
        let (scores, permutation) = match r.body {
            RankingBody::Scores(s) => (Some(s), None),
            RankingBody::Permutation(p) => (None, Some(p)),
        };
        RankingRepr {
            instance_id: r.instance_id,
            method: r.method,
            scores,
            permutation,
        }
    }
}

impl Ranking {
    pub fn from_permutation(instance_id: impl Into<String>, method: impl Into<String>, permutation: Vec<usize>) -> Self {
        Ranking {
            instance_id: instance_id.into(),
            method: method.into(),
            body: RankingBody::Permutation(permutation),
        }
    }

    pub fn from_scores(instance_id: impl Into<String>, method: impl Into<String>, scores: Vec<f64>) -> Self {
        Ranking {
            instance_id: instance_id.into(),
            method: method.into(),
            body: RankingBody::Scores(scores),
        }
    }

    pub fn len(&self) -> usize {
        match &self.body {
            RankingBody::Scores(s) => s.len(),
            RankingBody::Permutation(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Validated permutation; scores sort descending with ties to the
    /// smallest index.
    pub fn permutation(&self) -> Result<Vec<usize>> {
        let bad = |m: String| Err(Error::Validation(format!("ranking for {}: {m}", self.instance_id)));
        match &self.body {
            RankingBody::Scores(scores) => {
                if let Some(j) = scores.iter().position(|v| !v.is_finite()) {
                    return bad(format!("score {j} is not finite"));
                }
                let mut order: Vec<usize> = (0..scores.len()).collect();
                order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                Ok(order)
            }
            RankingBody::Permutation(perm) => {
                let mut seen = vec![false; perm.len()];
                for &j in perm {
                    if j >= perm.len() || seen[j] {
                        return bad(format!("entry {j} is out of range or repeated"));
                    }
                    seen[j] = true;
                }
                Ok(perm.clone())
            }
        }
    }

    /// Checks coverage of exactly `num_scenarios` indices.
    pub fn validate(&self, num_scenarios: usize) -> Result<()> {
        if self.len() != num_scenarios {
            return Err(Error::Validation(format!(
                "ranking for {} covers {} scenarios, instance has {num_scenarios}",
                self.instance_id,
                self.len()
            )));
        }
        self.permutation().map(|_| ())
    }
}

/// First `k` entries of the ranking's permutation.
pub fn top_k_from_ranking(rank: &Ranking, k: usize) -> Result<Vec<usize>> {
    let mut perm = rank.permutation()?;
    super::check_budget(k, perm.len())?;
    perm.truncate(k);
    Ok(perm)
}

pub fn write_rankings(rankings: &[Ranking], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in rankings {
        let json = serde_json::to_string(r).map_err(|e| Error::Validation(e.to_string()))?;
        writeln!(out, "{json}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_rankings(path: impl AsRef<Path>) -> Result<Vec<Ranking>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Ranking = serde_json::from_str(&line).map_err(|e| Error::Parse {
            context: format!("{}:{}", path.display(), no + 1),
            message: e.to_string(),
        })?;
        r.permutation()?;
        out.push(r);
    }
    Ok(out)
}
