use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::potential::PotentialFamily;
use crate::error::{Error, Result};
use crate::numerics::{GeneralMatrix, HermitianMatrix};

/// One sampled node: coordinate and matrix as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleNode {
    pub x: f64,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn parse_samples(text: &str) -> Result<(Vec<f64>, Vec<HermitianMatrix>)> {
    let nodes: Vec<SampleNode> =
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    if nodes.is_empty() {
        return Err(Error::Family("sample file lists no nodes".into()));
    }
    let mut xs = Vec::with_capacity(nodes.len());
    let mut ms = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.into_iter().enumerate() {
        let m = GeneralMatrix::from_pairs(&n.matrix)?;
        let h = HermitianMatrix::new(m)
            .map_err(|e| Error::Family(format!("node {i}: {e}")))?;
        xs.push(n.x);
        ms.push(h);
    }
    Ok((xs, ms))
}

pub fn load_samples(path: &Path) -> Result<(Vec<f64>, Vec<HermitianMatrix>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples(&text)
}

pub fn samples_to_string(fam: &PotentialFamily) -> String {
    let nodes: Vec<SampleNode> = (0..fam.len())
        .map(|i| SampleNode {
            x: fam.grid().x(i),
            matrix: fam.matrix(i).as_general().to_pairs(),
        })
        .collect();
    serde_json::to_string_pretty(&nodes).expect("sample nodes serialize")
}

pub fn save_samples(fam: &PotentialFamily, path: &Path) -> Result<()> {
    fs::write(path, samples_to_string(fam)).map_err(|e| Error::io(path, e))
}
