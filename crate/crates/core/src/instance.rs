//! The JSON instance format shared by every subcommand.
//!
//! ```json
//! {"n": 4, "family": [[0,1],[2,3]],
//!  "fractional_cover": [{"set": [0,1], "weight": 1.0}],
//!  "lambdas": [{"host": [0,1], "weights": {"0": 0.5, "1": 0.5}}],
//!  "candidate_cover": [[0,1]]}
//! ```
//!
//! Everything after `family` is optional.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::Subset;
use crate::system::{FractionalCover, Lambdas, SetSystem, WeightVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSet {
    pub set: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostWeights {
    pub host: Vec<usize>,
    pub weights: BTreeMap<String, f64>,
}

/// Raw serialized form; [`Instance`] is the validated one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub family: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractional_cover: Option<Vec<WeightedSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<HostWeights>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_cover: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub family: SetSystem,
    pub cover: Option<FractionalCover>,
    pub lambdas: Option<Lambdas>,
    pub candidate: Option<SetSystem>,
}

fn to_subset(n: usize, list: &[usize]) -> Result<Subset> {
    let mut s = Subset::empty();
    for &x in list {
        if x >= n {
            return Err(Error::ElementOutOfRange { element: x, n });
        }
        s.insert(x);
    }
    Ok(s)
}

impl Instance {
    pub fn new(family: SetSystem) -> Self {
        Instance {
            family,
            cover: None,
            lambdas: None,
            candidate: None,
        }
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn from_file(raw: InstanceFile) -> Result<Self> {
        let n = raw.n;
        let family = SetSystem::from_lists(n, &raw.family)?;
        let cover = raw
            .fractional_cover
            .map(|entries| {
                let pairs = entries
                    .iter()
                    .map(|e| Ok((to_subset(n, &e.set)?, e.weight)))
                    .collect::<Result<Vec<_>>>()?;
                FractionalCover::new(n, pairs)
            })
            .transpose()?;
        let lambdas = raw
            .lambdas
            .map(|hosts| {
                let vectors = hosts
                    .iter()
                    .map(|hw| {
                        let host = to_subset(n, &hw.host)?;
                        let pairs = hw
                            .weights
                            .iter()
                            .map(|(k, v)| {
                                let idx: usize = k
                                    .parse()
                                    .map_err(|_| Error::input(format!("bad element key {k:?}")))?;
                                Ok((idx, *v))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        WeightVector::new(n, host, pairs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Lambdas::new(&family, vectors)
            })
            .transpose()?;
        let candidate = raw
            .candidate_cover
            .map(|lists| SetSystem::from_lists(n, &lists))
            .transpose()?;
        Ok(Instance {
            family,
            cover,
            lambdas,
            candidate,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n(),
            family: self.family.to_lists(),
            fractional_cover: self.cover.as_ref().map(|w| {
                w.iter()
                    .map(|(s, x)| WeightedSet {
                        set: s.to_vec(),
                        weight: x,
                    })
                    .collect()
            }),
            lambdas: self.lambdas.as_ref().map(|ls| {
                ls.iter()
                    .map(|l| HostWeights {
                        host: l.host().to_vec(),
                        weights: l.host().iter().map(|x| (x.to_string(), l.get(x))).collect(),
                    })
                    .collect()
            }),
            candidate_cover: self.candidate.as_ref().map(|c| c.to_lists()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(raw)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Weight vectors from the file, or uniform ones.
    pub fn lambdas_or_uniform(&self) -> Result<Lambdas> {
        match &self.lambdas {
            Some(l) => Ok(l.clone()),
            None => Lambdas::uniform(&self.family),
        }
    }
}
