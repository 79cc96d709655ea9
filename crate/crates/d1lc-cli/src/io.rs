//! JSON instance / report formats and the CSV sweep row.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use d1lc_core::driver::RunReport;
use d1lc_core::instance::{BuildError, Instance};

/// On-disk instance: `{"n": .., "edges": [[u,v], ..], "palettes": [[c, ..], ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub palettes: Vec<Vec<u32>>,
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance, BuildError> {
        Instance::build(self.n, &self.edges, self.palettes.clone())
    }

    pub fn read(path: &Path) -> anyhow::Result<InstanceFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Output of `run`: the coloring (indexed by node, null = uncolored)
/// plus the full run report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub coloring: Vec<Option<u32>>,
    #[serde(skip_deserializing)]
    pub report: Option<RunReport>,
}

impl ReportFile {
    pub fn read_coloring(path: &Path) -> anyhow::Result<Vec<Option<u32>>> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let file: ReportFile =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(file.coloring)
    }
}

/// One sweep grid point.
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub rounds: u64,
    pub f_edges: usize,
    pub gbad_edges: usize,
    pub depth: u32,
}

pub const SWEEP_HEADER: &str = "n,m,rounds,f_edges,gbad_edges,depth";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n, self.m, self.rounds, self.f_edges, self.gbad_edges, self.depth
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_roundtrip() {
        let file = InstanceFile {
            n: 3,
            edges: vec![(0, 1), (1, 2)],
            palettes: vec![vec![0, 1], vec![0, 1, 2], vec![0, 1]],
        };
        let text = serde_json::to_string(&file).unwrap();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        back.to_instance().unwrap();
    }
}
