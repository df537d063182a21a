use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Where a dataset came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub split: Option<Split>,
    pub seed: Option<u64>,
}

/// Observations `(X, Y)`; `X` is stored row-major with `dimensionality` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dimensionality: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    /// # Panics
    ///
    /// If `x.len() != y.len() * dimensionality` or `dimensionality == 0`.
    pub fn new(dimensionality: usize, x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(dimensionality > 0, "dimensionality must be positive");
        assert_eq!(x.len(), y.len() * dimensionality, "x/y shape mismatch");
        Dataset { dimensionality, x, y, provenance: Provenance::default() }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// One-input dataset from paired samples.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let (x, y) = pairs.into_iter().unzip();
        Dataset::new(1, x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dimensionality;
        &self.x[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.dimensionality)
    }
}
