use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::ValueEnum;
use modlab_core::AlgebraModel;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Modular,
    Flow,
    Tidy,
    Resolvent,
    Contour,
    Density,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Modular, Suite::Flow, Suite::Tidy, Suite::Resolvent, Suite::Contour, Suite::Density];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    StandardFactor,
    MaximalAbelian,
    DirectSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub models: Vec<AlgebraModel>,
    /// Trials per model.
    pub trials: usize,
    pub tol_base: f64,
    pub p_min: f64,
    pub out_dir: PathBuf,
    pub suites: Vec<Suite>,
}

impl RunConfig {
    /// `standard_factor(2)` and `standard_factor(3)`, 25 trials each, every suite.
    pub fn default_run(out_dir: PathBuf) -> Self {
        Self {
            seed: 1,
            models: vec![AlgebraModel::StandardFactor { n: 2 }, AlgebraModel::StandardFactor { n: 3 }],
            trials: 25,
            tol_base: 1e-9,
            p_min: 0.01,
            out_dir,
            suites: Suite::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(self.tol_base > 0.0 && self.tol_base.is_finite()) {
            bail!("tol_base must be positive, got {}", self.tol_base);
        }
        if self.models.is_empty() {
            bail!("no algebra model selected");
        }
        for model in &self.models {
            model.validate().with_context(|| format!("model {}", model.label()))?;
            // p_min floors Schmidt coefficients inside a block and the block weights
            let slots = model.blocks().iter().map(|&(n, m)| n.min(m)).max().unwrap_or(1).max(model.blocks().len());
            if !(self.p_min > 0.0 && self.p_min * slots as f64 <= 1.0) {
                bail!("p_min {} outside (0, 1/{slots}] for {}", self.p_min, model.label());
            }
        }
        if self.suites.is_empty() {
            bail!("no suite selected");
        }
        Ok(())
    }

    pub fn runs(&self, suite: Suite) -> bool {
        self.suites.contains(&suite)
    }

    /// Suites sorted and deduplicated.
    pub fn normalized(mut self) -> Self {
        self.suites.sort();
        self.suites.dedup();
        self
    }
}

/// Parses `"2x2,1x1"` into block sizes.
pub fn parse_blocks(s: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|part| {
            let (n, m) = part.trim().split_once('x').with_context(|| format!("block {part:?} is not of the form NxM"))?;
            Ok((n.trim().parse()?, m.trim().parse()?))
        })
        .collect()
}

pub fn build_model(kind: ModelKind, size: Option<usize>, blocks: Option<&str>) -> anyhow::Result<AlgebraModel> {
    Ok(match kind {
        ModelKind::StandardFactor => AlgebraModel::StandardFactor { n: size.unwrap_or(2) },
        ModelKind::MaximalAbelian => AlgebraModel::MaximalAbelian { d: size.unwrap_or(4) },
        ModelKind::DirectSum => AlgebraModel::DirectSum { blocks: parse_blocks(blocks.unwrap_or("2x2,1x1"))? },
    })
}
