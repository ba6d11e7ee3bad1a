//! Exact Gaussian path sampling on finite grids, discrete reflection and the
//! Monte Carlo batch engine.
//!
//! Every path draws its randomness from a ChaCha stream keyed by
//! `(master seed, path index)`, so path `i` is the same whatever the batch
//! size, block size or thread count.

mod ecdf;
mod embedded;
mod factor;
mod gaussian;
mod reflect;

pub use ecdf::{empirical_cdf, ks_distance, EmpiricalCdf};
pub use embedded::{sample_embedded, EmbeddedKind, EmbeddedSampler, PeriodicBridge};
pub use factor::{GramFactor, MarkovKernel};
pub use gaussian::{
    sample_conditioned_net_input, sample_pinned, sample_ray, GaussianPathSampler, RayKernelSource,
};
pub use reflect::{
    reflect, reflect_with_bridge_minima, regulate_path, regulated_endpoints, RegulatedPath,
    Reflection,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random source handed to path generators.
pub type PathRng = ChaCha8Rng;

/// Stream family used for the Gaussian values of a path.
pub(crate) const VALUES_STREAM: u64 = 0;
/// Stream family used for between-grid bridge minima.
pub(crate) const MINIMA_STREAM: u64 = 0x6d69_6e69_6d61;

/// The random stream for path `index` under `seed`.
pub fn path_rng(seed: u64, family: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ family.rotate_left(17));
    rng.set_stream(index);
    rng
}

/// Strictly increasing sample times in `(0, horizon]`. The origin is implicit
/// with `X(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>, horizon: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("no points".into()));
        }
        if !(points[0] > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "first point {} must be positive",
                points[0]
            )));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        let last = *points.last().unwrap();
        if !(last <= horizon) || !last.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "last point {last} exceeds the horizon {horizon}"
            )));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points `horizon·k/n`, `k = 1..=n`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("no points".into()));
        }
        let points = (1..=n).map(|k| horizon * k as f64 / n as f64).collect();
        Self::new(points, horizon)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the point equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == t)
    }
}

/// How paths are distributed over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Monte Carlo budget: path count, master seed and execution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::EmptySample);
        }
        Ok(())
    }
}

/// Something that writes one sample path onto its grid.
pub trait PathGenerator: Sync {
    fn grid(&self) -> &TimeGrid;

    /// Fills `out` (one value per grid point) using `rng`.
    fn fill(&self, rng: &mut PathRng, out: &mut [f64]);

    /// Whether the generated values include a deterministic drift.
    fn has_drift(&self) -> bool {
        false
    }
}

/// Paths per block handed to a streaming consumer.
pub const BLOCK_PATHS: usize = 2048;

fn fill_rows<G: PathGenerator + ?Sized>(
    gen: &G,
    seed: u64,
    first: usize,
    rows: &mut [f64],
    execution: Execution,
) {
    let width = gen.grid().len();
    let fill_one = |(offset, row): (usize, &mut [f64])| {
        let mut rng = path_rng(seed, VALUES_STREAM, (first + offset) as u64);
        gen.fill(&mut rng, row);
    };
    match execution {
        Execution::Sequential => rows.chunks_mut(width).enumerate().for_each(fill_one),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            rows.par_chunks_mut(width).enumerate().for_each(fill_one)
        }
    }
}

/// Generates all paths and keeps them.
pub fn generate_batch<G: PathGenerator + ?Sized>(gen: &G, mc: &McConfig) -> Result<SamplePathBatch> {
    mc.check()?;
    let width = gen.grid().len();
    let mut values = vec![0.0; mc.n_paths * width];
    fill_rows(gen, mc.seed, 0, &mut values, mc.execution);
    Ok(SamplePathBatch {
        grid: gen.grid().clone(),
        values,
        n_paths: mc.n_paths,
        seed: mc.seed,
        drift_applied: gen.has_drift(),
    })
}

/// Generates paths block by block and hands each block, in path order, to
/// `consume(first_path_index, rows)`. Memory stays at one block.
pub fn stream_blocks<G, F>(gen: &G, mc: &McConfig, mut consume: F) -> Result<()>
where
    G: PathGenerator + ?Sized,
    F: FnMut(usize, &[f64]),
{
    mc.check()?;
    let width = gen.grid().len();
    let mut buf = vec![0.0; BLOCK_PATHS.min(mc.n_paths) * width];
    let mut first = 0;
    while first < mc.n_paths {
        let count = BLOCK_PATHS.min(mc.n_paths - first);
        let rows = &mut buf[..count * width];
        fill_rows(gen, mc.seed, first, rows, mc.execution);
        consume(first, rows);
        first += count;
    }
    Ok(())
}

/// Applies `f(path_index, path)` to every path and collects the results in
/// path order.
pub fn map_paths<G, T, F>(gen: &G, mc: &McConfig, f: F) -> Result<Vec<T>>
where
    G: PathGenerator + ?Sized,
    T: Send,
    F: Fn(usize, &[f64]) -> T + Sync,
{
    mc.check()?;
    let width = gen.grid().len();
    let run = |index: usize, buf: &mut Vec<f64>| {
        let mut rng = path_rng(mc.seed, VALUES_STREAM, index as u64);
        gen.fill(&mut rng, buf);
        f(index, buf)
    };
    match mc.execution {
        Execution::Sequential => {
            let mut buf = vec![0.0; width];
            Ok((0..mc.n_paths).map(|i| run(i, &mut buf)).collect())
        }
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            Ok((0..mc.n_paths)
                .into_par_iter()
                .map_init(|| vec![0.0; width], |buf, i| run(i, buf))
                .collect())
        }
    }
}

/// Discretized paths: `n_paths × grid.len()` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePathBatch {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub drift_applied: bool,
}

impl SamplePathBatch {
    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.n_points();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_points())
    }

    pub fn value(&self, path: usize, point: usize) -> f64 {
        self.values[path * self.n_points() + point]
    }

    pub fn column(&self, point: usize) -> Vec<f64> {
        self.paths().map(|p| p[point]).collect()
    }

    pub fn mean(&self, point: usize) -> f64 {
        self.paths().map(|p| p[point]).sum::<f64>() / self.n_paths as f64
    }

    /// Unbiased sample covariance of two grid columns.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.mean(a), self.mean(b));
        let s: f64 = self.paths().map(|p| (p[a] - ma) * (p[b] - mb)).sum();
        s / (self.n_paths as f64 - 1.0)
    }

    pub fn variance(&self, point: usize) -> f64 {
        self.covariance(point, point)
    }
}
