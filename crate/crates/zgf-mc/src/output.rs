use std::path::Path;

use serde::{Deserialize, Serialize};
use zgf_exact::inputs_digest;
use zgf_graph::{GraphJson, PlanarGraph};

use crate::{ChainSpec, McError};

/// One line of the observable CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub sweep: usize,
    pub observable: String,
    pub value: f64,
}

/// Writes `sweep,observable,value` with a header line.
pub fn write_observables(path: &Path, rows: &[ObservableRow]) -> Result<(), McError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// What a run needs to be reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec_digest: String,
    pub seed: u64,
    pub graph_digest: String,
    pub spec: ChainSpec,
}

impl Manifest {
    pub fn new(spec: &ChainSpec, g: &PlanarGraph) -> Self {
        Manifest {
            spec_digest: inputs_digest(spec),
            seed: spec.seed,
            graph_digest: inputs_digest(&GraphJson::from_graph(g)),
            spec: spec.clone(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), McError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifests serialize");
    std::fs::write(path, text)?;
    Ok(())
}
