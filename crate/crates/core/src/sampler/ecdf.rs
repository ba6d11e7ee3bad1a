use crate::error::{Error, Result};

use super::SamplePathBatch;

/// Right-continuous empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// `sup |F_n - F|` for a continuous `F`, evaluated at the jump points.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut sup = 0.0_f64;
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            let mut j = i;
            while j < self.sorted.len() && self.sorted[j] == x {
                j += 1;
            }
            let f = cdf(x);
            sup = sup.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
            i = j;
        }
        sup
    }
}

/// Empirical CDF of grid column `at_index` of a batch.
pub fn empirical_cdf(batch: &SamplePathBatch, at_index: usize) -> Result<EmpiricalCdf> {
    if batch.n_paths == 0 {
        return Err(Error::EmptySample);
    }
    EmpiricalCdf::new(batch.column(at_index))
}

pub fn ks_distance<F: Fn(f64) -> f64>(empirical: &EmpiricalCdf, cdf: F) -> f64 {
    empirical.ks_distance(cdf)
}
