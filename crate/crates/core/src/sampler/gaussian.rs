use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::process::{
    condition_superposition, superpose, ConditionedState, RayParams, SuperposedCov,
    SuperpositionSpec,
};

use super::{
    generate_batch, GramFactor, MarkovKernel, McConfig, PathGenerator, PathRng, SamplePathBatch,
    TimeGrid,
};

/// Mean function plus a Gaussian fluctuation drawn through a Gram factor.
#[derive(Debug, Clone)]
pub struct GaussianPathSampler {
    grid: TimeGrid,
    factor: GramFactor,
    mean: Vec<f64>,
}

fn check_grid(grid: &TimeGrid, horizon: f64) -> Result<()> {
    if grid.last() > horizon {
        return Err(Error::OutOfHorizon {
            time: grid.last(),
            lower: 0.0,
            upper: horizon,
        });
    }
    Ok(())
}

impl GaussianPathSampler {
    /// Zero-mean process with kernel `s(Θ - T t)`.
    pub fn ray(kernel: SuperposedCov, grid: TimeGrid) -> Result<Self> {
        check_grid(&grid, kernel.validity_limit())?;
        let factor = GramFactor::markov(MarkovKernel::Ray(kernel), &grid)?;
        let mean = vec![0.0; grid.len()];
        Ok(Self { grid, factor, mean })
    }

    /// Same law as [`GaussianPathSampler::ray`] but through a dense Cholesky
    /// factor of the Gram matrix.
    pub fn ray_dense(kernel: SuperposedCov, grid: TimeGrid) -> Result<Self> {
        check_grid(&grid, kernel.validity_limit())?;
        let factor = GramFactor::dense(|s, t| kernel.cov(s, t), &grid)?;
        let mean = vec![0.0; grid.len()];
        Ok(Self { grid, factor, mean })
    }

    /// Conditioned net input `ρ_{u;x} h + X_{u;x}(h)` on `[0, Δ - u]`.
    pub fn net_input(
        spec: &SuperpositionSpec,
        state: &ConditionedState,
        grid: TimeGrid,
    ) -> Result<Self> {
        let cond = condition_superposition(spec, state)?;
        check_grid(&grid, cond.horizon)?;
        let factor = GramFactor::markov(MarkovKernel::Ray(cond.cov), &grid)?;
        let mean = grid.points().iter().map(|&h| cond.drift * h).collect();
        Ok(Self { grid, factor, mean })
    }

    /// Net input over `[u, u + w]` given its total increment `z`: a bridge
    /// with variance rate `Θ` plus the line `z h / w`. Neither `ρ` nor the
    /// component states enter.
    pub fn pinned(
        spec: &SuperpositionSpec,
        state: &ConditionedState,
        window: f64,
        z: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        state.validate_for(spec)?;
        ensure_positive("w", window)?;
        ensure_finite("z", z)?;
        let remaining = spec.horizon() - state.u;
        if window > remaining {
            return Err(Error::OutOfHorizon {
                time: window,
                lower: 0.0,
                upper: remaining,
            });
        }
        check_grid(&grid, window)?;
        let kernel = MarkovKernel::Bridge {
            variance_rate: superpose(spec).variance_rate,
            window,
        };
        let factor = GramFactor::markov(kernel, &grid)?;
        let mean = grid.points().iter().map(|&h| z * (h / window)).collect();
        Ok(Self { grid, factor, mean })
    }

    /// Adds the line `drift · t` to every path.
    pub fn with_drift(mut self, drift: f64) -> Result<Self> {
        ensure_finite("drift", drift)?;
        for (m, &t) in self.mean.iter_mut().zip(self.grid.points()) {
            *m += drift * t;
        }
        Ok(self)
    }

    pub fn factor(&self) -> &GramFactor {
        &self.factor
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl PathGenerator for GaussianPathSampler {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn fill(&self, rng: &mut PathRng, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = StandardNormal.sample(rng);
        }
        match &self.factor {
            GramFactor::Markov { coef, scale } => {
                let mut prev = 0.0;
                for i in 0..out.len() {
                    prev = coef[i] * prev + scale[i] * out[i];
                    out[i] = prev;
                }
            }
            GramFactor::Dense { n, lower, .. } => {
                // Row i only reads z[..=i], so go bottom-up in place.
                for i in (0..*n).rev() {
                    let row = &lower[i * n..i * n + i + 1];
                    out[i] = row.iter().zip(out.iter()).map(|(l, z)| l * z).sum();
                }
            }
        }
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    fn has_drift(&self) -> bool {
        self.mean.iter().any(|&m| m != 0.0)
    }
}

/// Source of a ray kernel together with the horizon it is valid on.
pub trait RayKernelSource {
    fn kernel(&self) -> SuperposedCov;
    fn horizon(&self) -> f64;
}

impl RayKernelSource for RayParams {
    fn kernel(&self) -> SuperposedCov {
        RayParams::kernel(self)
    }

    fn horizon(&self) -> f64 {
        RayParams::horizon(self)
    }
}

impl RayKernelSource for SuperposedCov {
    fn kernel(&self) -> SuperposedCov {
        *self
    }

    fn horizon(&self) -> f64 {
        self.validity_limit()
    }
}

/// Exact draws of a zero-mean ray (or superposed kernel) on `grid`.
pub fn sample_ray<K: RayKernelSource>(
    source: &K,
    grid: &TimeGrid,
    mc: &McConfig,
) -> Result<SamplePathBatch> {
    check_grid(grid, source.horizon())?;
    let sampler = GaussianPathSampler::ray(source.kernel(), grid.clone())?;
    generate_batch(&sampler, mc)
}

/// Draws `V_{u;x,v}(h) = ρ_{u;x} h + X_{u;x}(h)` on `grid ⊂ (0, Δ - u]`.
pub fn sample_conditioned_net_input(
    spec: &SuperpositionSpec,
    state: &ConditionedState,
    grid: &TimeGrid,
    mc: &McConfig,
) -> Result<SamplePathBatch> {
    let sampler = GaussianPathSampler::net_input(spec, state, grid.clone())?;
    generate_batch(&sampler, mc)
}

/// Draws the net-input increment pinned to `z` at `h = w`.
pub fn sample_pinned(
    spec: &SuperpositionSpec,
    state: &ConditionedState,
    window: f64,
    z: f64,
    grid: &TimeGrid,
    mc: &McConfig,
) -> Result<SamplePathBatch> {
    let sampler = GaussianPathSampler::pinned(spec, state, window, z, grid.clone())?;
    generate_batch(&sampler, mc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{ray_cov, RayComponent};
    use crate::sampler::Execution;

    fn bridge_like() -> RayParams {
        RayParams::new(1.0, 1.05, 1.0).unwrap()
    }

    #[test]
    fn ray_batch_matches_kernel() {
        let p = bridge_like();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let n = 100_000;
        let batch = sample_ray(&p, &grid, &McConfig::new(n, 11)).unwrap();
        assert!(!batch.drift_applied);
        let t = grid.points();
        for i in 0..grid.len() {
            let sd = ray_cov(&p, t[i], t[i]).unwrap().sqrt();
            assert!(batch.mean(i).abs() < 4.0 * sd / (n as f64).sqrt());
            for j in i..grid.len() {
                let (rss, rtt, rst) = (
                    ray_cov(&p, t[i], t[i]).unwrap(),
                    ray_cov(&p, t[j], t[j]).unwrap(),
                    ray_cov(&p, t[i], t[j]).unwrap(),
                );
                let se = ((rss * rtt + rst * rst) / n as f64).sqrt();
                let emp = batch.covariance(i, j);
                assert!((emp - rst).abs() < 4.0 * se + 1e-12, "({i},{j}) {emp} vs {rst}");
            }
        }
    }

    #[test]
    fn increment_variance_is_the_same_at_two_anchors() {
        let kernel = SuperposedCov::new(1.0, 0.6).unwrap();
        let grid = TimeGrid::new(vec![0.2, 0.5, 0.9, 1.2], 1.5).unwrap();
        let n = 100_000;
        let batch = sample_ray(&kernel, &grid, &McConfig::new(n, 3)).unwrap();
        let d = 0.3;
        let want = d * (1.0 - 0.6 * d);
        for (a, b) in [(0, 1), (2, 3)] {
            let inc: Vec<f64> = batch.paths().map(|p| p[b] - p[a]).collect();
            let m = inc.iter().sum::<f64>() / n as f64;
            let var = inc.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
            let se = want * (2.0 / n as f64).sqrt();
            assert!((var - want).abs() < 4.0 * se, "{var} vs {want}");
        }
    }

    #[test]
    fn dense_and_markov_samplers_agree_path_by_path() {
        let kernel = SuperposedCov::new(0.8, 0.3).unwrap();
        let grid = TimeGrid::uniform(2.0, 8).unwrap();
        let mc = McConfig::new(50, 5);
        let a = generate_batch(&GaussianPathSampler::ray(kernel, grid.clone()).unwrap(), &mc).unwrap();
        let b = generate_batch(&GaussianPathSampler::ray_dense(kernel, grid).unwrap(), &mc).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_batches_are_reproducible_and_independent_of_batch_size() {
        let p = bridge_like();
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let a = sample_ray(&p, &grid, &McConfig::new(300, 9)).unwrap();
        let b = sample_ray(&p, &grid, &McConfig::new(300, 9)).unwrap();
        assert_eq!(a, b);
        let small = sample_ray(&p, &grid, &McConfig::new(7, 9)).unwrap();
        assert_eq!(small.path(6), a.path(6));
        let seq = sample_ray(
            &p,
            &grid,
            &McConfig::new(300, 9).with_execution(Execution::Sequential),
        )
        .unwrap();
        assert_eq!(seq.values, a.values);
        let other = sample_ray(&p, &grid, &McConfig::new(300, 10)).unwrap();
        assert_ne!(other.values, a.values);
    }

    #[test]
    fn unconditioned_net_input_is_drifted_ray() {
        let p = RayParams::new(2.0, 3.0, 1.0).unwrap();
        let spec = SuperpositionSpec::single(p, 0.7).unwrap();
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let mc = McConfig::new(40, 1);
        let v = sample_conditioned_net_input(
            &spec,
            &ConditionedState::initial(1, 0.0).unwrap(),
            &grid,
            &mc,
        )
        .unwrap();
        let x = sample_ray(&p, &grid, &mc).unwrap();
        assert!(v.drift_applied);
        for (i, (a, b)) in v.values.iter().zip(&x.values).enumerate() {
            let h = grid.points()[i % grid.len()];
            assert!((a - (b + 0.7 * h)).abs() < 1e-14);
        }
    }

    #[test]
    fn conditioned_net_input_moments() {
        let a = RayParams::new(1.0, 1.5, 1.0).unwrap();
        let b = RayParams::new(2.0, 4.0, 1.0).unwrap();
        let spec = SuperpositionSpec::new(
            vec![RayComponent::new(1.0, a).unwrap(), RayComponent::new(-0.5, b).unwrap()],
            0.2,
        )
        .unwrap();
        let state = ConditionedState::new(0.3, vec![0.4, -1.0], 0.5).unwrap();
        let cond = condition_superposition(&spec, &state).unwrap();
        let grid = TimeGrid::uniform(0.7, 7).unwrap();
        let n = 100_000;
        let batch = sample_conditioned_net_input(&spec, &state, &grid, &McConfig::new(n, 21)).unwrap();
        let j = 6;
        let h = grid.points()[j];
        let var = h * (cond.cov.variance_rate - cond.cov.ar_rate * h);
        assert!((batch.mean(j) - cond.drift * h).abs() < 4.0 * (var / n as f64).sqrt());
        assert!((batch.variance(j) - var).abs() < 4.0 * var * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn pinned_paths_hit_the_pin_and_ignore_drift() {
        let p = RayParams::new(1.0, 1.2, 1.0).unwrap();
        let spec0 = SuperpositionSpec::single(p, 0.0).unwrap();
        let spec7 = SuperpositionSpec::single(p, 7.0).unwrap();
        let state = ConditionedState::new(0.1, vec![0.3], 0.0).unwrap();
        let state_x = ConditionedState::new(0.1, vec![-2.0], 0.0).unwrap();
        let w = 0.7;
        let grid = TimeGrid::uniform(w, 70).unwrap();
        let mc = McConfig::new(500, 4);
        let a = sample_pinned(&spec0, &state, w, 0.25, &grid, &mc).unwrap();
        let b = sample_pinned(&spec7, &state_x, w, 0.25, &grid, &mc).unwrap();
        assert_eq!(a, b);
        let last = grid.len() - 1;
        let worst = a.paths().map(|p| (p[last] - 0.25).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8);
        assert!(sample_pinned(&spec0, &state, 0.95, 0.0, &grid, &mc).is_err());
    }

    #[test]
    fn pinned_covariance_matches_bridge_kernel() {
        let p = RayParams::new(1.0, 2.0, 1.0).unwrap();
        let spec = SuperpositionSpec::single(p, 0.0).unwrap();
        let theta = superpose(&spec).variance_rate;
        let state = ConditionedState::initial(1, 0.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let n = 100_000;
        let batch = sample_pinned(&spec, &state, 1.0, -0.3, &grid, &McConfig::new(n, 8)).unwrap();
        let t = grid.points();
        for i in 0..3 {
            for j in i..3 {
                let r = |a: f64, b: f64| crate::process::pinned_bridge_cov(theta, 1.0, a, b).unwrap();
                let want = r(t[i], t[j]);
                let se = ((r(t[i], t[i]) * r(t[j], t[j]) + want * want) / n as f64).sqrt();
                assert!((batch.covariance(i, j) - want).abs() < 4.0 * se);
            }
        }
    }
}
