use crate::error::{Error, Result};
use crate::process::SuperposedCov;

use super::TimeGrid;

/// Kernels of the product form `R(s, t) = s·g(t)` for `s ≤ t`, whose Cholesky
/// factor on an ordered grid is a first-order recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkovKernel {
    /// `s(Θ - T t)`
    Ray(SuperposedCov),
    /// `sΘ(1 - t/w)`: written separately so the tail is exactly zero at `w`.
    Bridge { variance_rate: f64, window: f64 },
}

impl MarkovKernel {
    /// `g(t)`, the part of the kernel that depends on the later time.
    fn tail(&self, t: f64) -> f64 {
        match *self {
            MarkovKernel::Ray(c) => c.variance_rate - c.ar_rate * t,
            MarkovKernel::Bridge {
                variance_rate,
                window,
            } => variance_rate * (1.0 - t / window),
        }
    }

    fn variance_rate(&self) -> f64 {
        match *self {
            MarkovKernel::Ray(c) => c.variance_rate,
            MarkovKernel::Bridge { variance_rate, .. } => variance_rate,
        }
    }

    pub fn cov(&self, s: f64, t: f64) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        s * self.tail(t)
    }
}

/// Lower-triangular factor `L` of a grid Gram matrix `Σ = L Lᵀ`; a path is
/// `L z` for a standard normal vector `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum GramFactor {
    /// Row-major dense factor, with the diagonal jitter that was needed.
    Dense {
        n: usize,
        lower: Vec<f64>,
        jitter: f64,
    },
    /// `L[i][j] = scale[j] · coef[j+1] ⋯ coef[i]`, applied by recursion.
    Markov { coef: Vec<f64>, scale: Vec<f64> },
}

impl GramFactor {
    /// Dense Cholesky of the Gram matrix of `kernel` on `grid`.
    ///
    /// Retries with diagonal jitter `1e-12·trace` and then `1e-10·trace`
    /// before failing.
    pub fn dense<K>(kernel: K, grid: &TimeGrid) -> Result<Self>
    where
        K: Fn(f64, f64) -> f64,
    {
        let t = grid.points();
        let n = t.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(t[j], t[i]);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
        let mut failure = None;
        for jitter in [0.0, 1e-12 * trace, 1e-10 * trace] {
            match cholesky(&gram, n, jitter) {
                Ok(lower) => return Ok(GramFactor::Dense { n, lower, jitter }),
                Err((i, pivot)) => failure = Some((i, pivot)),
            }
        }
        let (i, variance) = failure.unwrap();
        Err(Error::NotPositiveDefinite {
            time: t[i],
            variance,
        })
    }

    /// Exact factor of a product-form kernel. Zero-variance points (a pinned
    /// endpoint) are allowed only as the last grid point.
    pub fn markov(kernel: MarkovKernel, grid: &TimeGrid) -> Result<Self> {
        let t = grid.points();
        let n = t.len();
        let mut coef = Vec::with_capacity(n);
        let mut scale = Vec::with_capacity(n);
        let theta = kernel.variance_rate();
        let mut prev_tail = 0.0;
        for (i, &ti) in t.iter().enumerate() {
            let tail = kernel.tail(ti);
            if tail < 0.0 || (i > 0 && prev_tail == 0.0) {
                return Err(Error::NotPositiveDefinite {
                    time: ti,
                    variance: ti * tail,
                });
            }
            if i == 0 {
                coef.push(0.0);
                scale.push((ti * tail).sqrt());
            } else {
                // Var(X_i | X_{i-1}) = g_i Θ (t_i - t_{i-1}) / g_{i-1}
                coef.push(tail / prev_tail);
                scale.push((tail * theta * (ti - t[i - 1]) / prev_tail).sqrt());
            }
            prev_tail = tail;
        }
        Ok(GramFactor::Markov { coef, scale })
    }

    pub fn len(&self) -> usize {
        match self {
            GramFactor::Dense { n, .. } => *n,
            GramFactor::Markov { coef, .. } => coef.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out = L z`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        match self {
            GramFactor::Dense { n, lower, .. } => {
                for i in 0..*n {
                    let row = &lower[i * n..i * n + i + 1];
                    out[i] = row.iter().zip(z).map(|(l, z)| l * z).sum();
                }
            }
            GramFactor::Markov { coef, scale } => {
                let mut prev = 0.0;
                for i in 0..coef.len() {
                    prev = coef[i] * prev + scale[i] * z[i];
                    out[i] = prev;
                }
            }
        }
    }

    /// The factor as a dense row-major lower-triangular matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            GramFactor::Dense { lower, .. } => lower.clone(),
            GramFactor::Markov { coef, scale } => {
                let n = coef.len();
                let mut l = vec![0.0; n * n];
                for j in 0..n {
                    let mut v = scale[j];
                    l[j * n + j] = v;
                    for i in j + 1..n {
                        v *= coef[i];
                        l[i * n + j] = v;
                    }
                }
                l
            }
        }
    }
}

/// Cholesky–Banachiewicz. On failure returns the row and its pivot.
fn cholesky(a: &[f64], n: usize, jitter: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let pivot = a[i * n + i] + jitter - dot;
                if !(pivot > 0.0) {
                    return Err((i, pivot));
                }
                l[i * n + i] = pivot.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - dot) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(points: &[f64], horizon: f64) -> TimeGrid {
        TimeGrid::new(points.to_vec(), horizon).unwrap()
    }

    #[test]
    fn markov_factor_is_the_cholesky_factor() {
        let cov = SuperposedCov::new(1.3, 0.4).unwrap();
        let g = grid(&[0.1, 0.35, 0.5, 0.9, 1.4, 2.0], 2.0);
        let dense = GramFactor::dense(|s, t| cov.cov(s, t), &g).unwrap();
        let markov = GramFactor::markov(MarkovKernel::Ray(cov), &g).unwrap();
        let (a, b) = (dense.to_dense(), markov.to_dense());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
        let z = [0.3, -1.2, 0.8, 2.1, -0.4, 0.05];
        let mut o1 = [0.0; 6];
        let mut o2 = [0.0; 6];
        dense.apply(&z, &mut o1);
        markov.apply(&z, &mut o2);
        for (x, y) in o1.iter().zip(&o2) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn factor_reproduces_gram() {
        let cov = SuperposedCov::new(0.7, 0.2).unwrap();
        let g = grid(&[0.2, 0.4, 1.0, 1.5, 3.0], 3.0);
        let l = GramFactor::markov(MarkovKernel::Ray(cov), &g).unwrap().to_dense();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                let want = cov.cov(g.points()[i], g.points()[j]);
                assert!((s - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pinned_endpoint_has_zero_scale() {
        let g = grid(&[0.1, 0.2, 0.3], 0.3);
        let f = GramFactor::markov(
            MarkovKernel::Bridge {
                variance_rate: 1.0,
                window: 0.3,
            },
            &g,
        )
        .unwrap();
        let GramFactor::Markov { coef, scale } = f else { panic!() };
        assert_eq!(coef[2], 0.0);
        assert_eq!(scale[2], 0.0);
    }

    #[test]
    fn grid_beyond_validity_names_the_time() {
        let cov = SuperposedCov::new(1.0, 1.0).unwrap();
        let g = grid(&[0.5, 1.0, 1.5], 2.0);
        match GramFactor::markov(MarkovKernel::Ray(cov), &g) {
            Err(Error::NotPositiveDefinite { time, .. }) => assert_eq!(time, 1.5),
            other => panic!("{other:?}"),
        }
        match GramFactor::dense(|s, t| cov.cov(s, t), &g) {
            Err(Error::NotPositiveDefinite { time, .. }) => assert!(time >= 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dense_factor_uses_jitter_for_semidefinite_grams() {
        // Bridge evaluated at its pinned endpoint: last row is zero.
        let g = grid(&[0.25, 0.5, 0.75, 1.0], 1.0);
        let k = MarkovKernel::Bridge {
            variance_rate: 1.0,
            window: 1.0,
        };
        match GramFactor::dense(|s, t| k.cov(s, t), &g).unwrap() {
            GramFactor::Dense { jitter, .. } => assert!(jitter > 0.0),
            _ => unreachable!(),
        }
    }
}
