//! Sampled spin configurations with provenance.

use crate::error::{Error, Result};
use crate::ising::SpinConfig;

/// Where a batch of reads came from; enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub problem_hash: String,
    pub sampler: String,
    pub seed: u64,
    pub embedding_id: Option<u64>,
    pub alpha: Option<f64>,
    pub c: Option<usize>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub device_model: Option<String>,
}

/// A batch of spin-configuration reads, all of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadSet {
    pub configs: Vec<SpinConfig>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl ReadSet {
    pub fn new(configs: Vec<SpinConfig>, provenance: Provenance) -> Result<ReadSet> {
        let weights = vec![1.0; configs.len()];
        ReadSet::with_weights(configs, weights, provenance)
    }

    pub fn with_weights(
        configs: Vec<SpinConfig>,
        weights: Vec<f64>,
        provenance: Provenance,
    ) -> Result<ReadSet> {
        if configs.len() != weights.len() {
            return Err(Error::Dimension {
                expected: configs.len(),
                got: weights.len(),
            });
        }
        if let Some(first) = configs.first() {
            let len = first.len();
            if configs.iter().any(|c| c.len() != len) {
                return Err(Error::Input("reads have inconsistent lengths".into()));
            }
        }
        Ok(ReadSet {
            configs,
            weights,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn spin_len(&self) -> usize {
        self.configs.first().map(|c| c.len()).unwrap_or(0)
    }
}
