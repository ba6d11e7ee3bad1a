use rand::Rng;

use crate::error::{ensure_non_negative, ensure_positive, Result};

use super::{map_paths, path_rng, McConfig, PathGenerator, PathRng, MINIMA_STREAM};

/// Queue level `q` and cumulative lost potential output `l` on the grid of
/// the net-input path that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatedPath {
    pub q: Vec<f64>,
    pub l: Vec<f64>,
}

/// One-sided reflection at zero of `v + V(h)`:
/// `q(h) = v + V(h) - min(0, v + inf_{s ≤ h} V(s))`, with the infimum taken
/// over the origin and the grid points up to `h`.
pub fn reflect(net_input: &[f64], v: f64) -> Result<RegulatedPath> {
    ensure_non_negative("v", v)?;
    let mut q = Vec::with_capacity(net_input.len());
    let mut l = Vec::with_capacity(net_input.len());
    let mut inf = 0.0_f64;
    for &x in net_input {
        inf = inf.min(x);
        let lost = (-inf - v).max(0.0);
        q.push(v + x + lost);
        l.push(lost);
    }
    Ok(RegulatedPath { q, l })
}

/// Minimum of a Brownian bridge from `a` to `b` over a duration `dt` with
/// variance rate `theta`, drawn by inverting its closed-form law.
fn bridge_minimum(a: f64, b: f64, dt: f64, theta: f64, rng: &mut PathRng) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let d = b - a;
    0.5 * (a + b - (d * d - 2.0 * theta * dt * u.ln()).sqrt())
}

/// Reflection of the continuous path behind `net_input`: between grid points
/// the path is a Brownian bridge with variance rate `Θ`, and its minimum is
/// drawn exactly, so the result has the law of the continuous-time queue at
/// the grid times.
pub fn reflect_with_bridge_minima(
    net_input: &[f64],
    times: &[f64],
    v: f64,
    variance_rate: f64,
    rng: &mut PathRng,
) -> Result<RegulatedPath> {
    ensure_non_negative("v", v)?;
    ensure_positive("Theta", variance_rate)?;
    let mut q = Vec::with_capacity(net_input.len());
    let mut l = Vec::with_capacity(net_input.len());
    let (mut prev_t, mut prev_x, mut inf) = (0.0, 0.0, 0.0_f64);
    for (&x, &t) in net_input.iter().zip(times) {
        inf = inf.min(bridge_minimum(prev_x, x, t - prev_t, variance_rate, rng));
        let lost = (-inf - v).max(0.0);
        q.push(v + x + lost);
        l.push(lost);
        prev_t = t;
        prev_x = x;
    }
    Ok(RegulatedPath { q, l })
}

/// Discretization of the running infimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reflection {
    /// Infimum over grid points only.
    GridPoints,
    /// Exact between-grid minima of the bridge with variance rate `Θ`.
    BridgeMinima { variance_rate: f64 },
}

/// Regulated version of path `index` of a batch drawn with `seed`. Bridge
/// minima come from a stream of their own, so the result does not depend on
/// how the batch was split.
pub fn regulate_path(
    net_input: &[f64],
    times: &[f64],
    v: f64,
    reflection: Reflection,
    seed: u64,
    index: usize,
) -> Result<RegulatedPath> {
    match reflection {
        Reflection::GridPoints => reflect(net_input, v),
        Reflection::BridgeMinima { variance_rate } => {
            let mut rng = path_rng(seed, MINIMA_STREAM, index as u64);
            reflect_with_bridge_minima(net_input, times, v, variance_rate, &mut rng)
        }
    }
}

/// Terminal queue level of every path, in path order.
pub fn regulated_endpoints<G: PathGenerator + ?Sized>(
    gen: &G,
    v: f64,
    reflection: Reflection,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    ensure_non_negative("v", v)?;
    if let Reflection::BridgeMinima { variance_rate } = reflection {
        ensure_positive("Theta", variance_rate)?;
    }
    let times = gen.grid().points();
    map_paths(gen, mc, |index, path| {
        regulate_path(path, times, v, reflection, mc.seed, index)
            .map(|r| r.q[path.len() - 1])
            .unwrap_or(f64::NAN)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cumulative(increments: &[f64]) -> Vec<f64> {
        increments
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect()
    }

    #[test]
    fn stays_away_from_boundary() {
        let r = reflect(&cumulative(&[-1.0, -1.0]), 5.0).unwrap();
        assert_eq!(r.q, vec![4.0, 3.0]);
        assert_eq!(r.l, vec![0.0, 0.0]);
    }

    #[test]
    fn hits_boundary() {
        let r = reflect(&cumulative(&[-2.0, 1.0]), 1.0).unwrap();
        assert_eq!(r.q, vec![0.0, 1.0]);
        assert_eq!(r.l, vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_negative_level() {
        assert!(reflect(&[1.0], -0.5).is_err());
    }

    /// Case split written out directly from the reflection formula.
    fn reflect_by_cases(path: &[f64], v: f64) -> Vec<f64> {
        (0..path.len())
            .map(|h| {
                let inf = path[..=h].iter().cloned().fold(0.0, f64::min);
                if inf > -v {
                    v + path[h]
                } else {
                    path[h] - inf
                }
            })
            .collect()
    }

    #[test]
    fn bridge_minima_never_exceed_grid_minima() {
        let mut rng = path_rng(1, MINIMA_STREAM, 0);
        let path = cumulative(&[0.3, -0.8, 0.1, -0.4, 0.9]);
        let times = [0.2, 0.4, 0.6, 0.8, 1.0];
        let coarse = reflect(&path, 0.2).unwrap();
        let fine = reflect_with_bridge_minima(&path, &times, 0.2, 1.0, &mut rng).unwrap();
        for (a, b) in coarse.q.iter().zip(&fine.q) {
            assert!(b >= a);
        }
    }

    proptest! {
        #[test]
        fn matches_case_formula(incs in proptest::collection::vec(-2.0f64..2.0, 1..6), v in 0.0f64..3.0) {
            let path = cumulative(&incs);
            let got = reflect(&path, v).unwrap().q;
            for (a, b) in got.iter().zip(reflect_by_cases(&path, v)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn regulator_invariants(incs in proptest::collection::vec(-1.0f64..1.0, 1..200), v in 0.0f64..2.0) {
            let path = cumulative(&incs);
            let r = reflect(&path, v).unwrap();
            let mut prev = 0.0;
            for (q, l) in r.q.iter().zip(&r.l) {
                prop_assert!(*q >= 0.0);
                prop_assert!(*l >= prev);
                if *l > prev {
                    prop_assert!(q.abs() < 1e-12);
                }
                prev = *l;
            }
        }

        #[test]
        fn bridge_reflection_invariants(incs in proptest::collection::vec(-1.0f64..1.0, 1..100), v in 0.0f64..2.0, seed in 0u64..1000) {
            let path = cumulative(&incs);
            let times: Vec<f64> = (1..=path.len()).map(|i| i as f64 * 0.01).collect();
            let mut rng = path_rng(seed, MINIMA_STREAM, 0);
            let r = reflect_with_bridge_minima(&path, &times, v, 1.0, &mut rng).unwrap();
            let mut prev = 0.0;
            for (q, l) in r.q.iter().zip(&r.l) {
                prop_assert!(*q >= 0.0);
                prop_assert!(*l >= prev);
                prev = *l;
            }
        }
    }
}
