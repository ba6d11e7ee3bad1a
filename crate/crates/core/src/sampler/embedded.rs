//! Half-line processes whose increments over windows no longer than the
//! shortest bridge period are Brownian rays: a periodically extended bridge,
//! optionally superposed with an independent Brownian motion and further
//! bridges of other periods.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::process::{RayParams, SuperposedCov};

use super::{
    generate_batch, GramFactor, MarkovKernel, McConfig, PathGenerator, PathRng, SamplePathBatch,
    TimeGrid,
};

/// Brownian bridge on `[0, period]` scaled so that its increments over
/// windows up to `period` are the ray `(phi, period)`, then repeated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicBridge {
    pub phi: f64,
    pub period: f64,
}

impl PeriodicBridge {
    pub fn new(phi: f64, period: f64) -> Result<Self> {
        ensure_positive("phi", phi)?;
        ensure_positive("period", period)?;
        Ok(Self { phi, period })
    }

    fn variance_rate(&self) -> f64 {
        self.phi / self.period
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddedKind {
    PeriodicBridge(PeriodicBridge),
    MotionPlusPeriodicBridge {
        motion_rate: f64,
        bridge: PeriodicBridge,
    },
    /// Bridges must have distinct periods.
    MotionPlusBridges {
        motion_rate: f64,
        bridges: Vec<PeriodicBridge>,
    },
}

impl EmbeddedKind {
    fn parts(&self) -> (f64, &[PeriodicBridge]) {
        match self {
            EmbeddedKind::PeriodicBridge(b) => (0.0, std::slice::from_ref(b)),
            EmbeddedKind::MotionPlusPeriodicBridge {
                motion_rate,
                bridge,
            } => (*motion_rate, std::slice::from_ref(bridge)),
            EmbeddedKind::MotionPlusBridges {
                motion_rate,
                bridges,
            } => (*motion_rate, bridges),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (motion_rate, bridges) = self.parts();
        ensure_non_negative("motion_rate", motion_rate)?;
        if bridges.is_empty() {
            return Err(Error::InvalidSuperposition("no periodic bridge".into()));
        }
        for (i, b) in bridges.iter().enumerate() {
            PeriodicBridge::new(b.phi, b.period)?;
            if bridges[..i].iter().any(|o| o.period == b.period) {
                return Err(Error::InvalidParameter {
                    name: "period",
                    value: b.period,
                    reason: "bridge periods must be distinct",
                });
            }
        }
        Ok(())
    }

    /// Kernel of increments over short windows: `Θ = β + Σ φ_j/δ_j`,
    /// `T = Σ φ_j/δ_j²`.
    pub fn matched_kernel(&self) -> SuperposedCov {
        let (motion_rate, bridges) = self.parts();
        let (th, t) = bridges.iter().fold((motion_rate, 0.0), |(th, t), b| {
            (th + b.phi / b.period, t + b.phi / (b.period * b.period))
        });
        SuperposedCov {
            variance_rate: th,
            ar_rate: t,
        }
    }

    /// Longest increment window with ray law: the shortest period.
    pub fn window_limit(&self) -> f64 {
        self.parts()
            .1
            .iter()
            .map(|b| b.period)
            .fold(f64::INFINITY, f64::min)
    }

    /// The ray `(φ, δ)` matching increment windows of length `window`.
    pub fn matched_ray(&self, window: f64) -> Result<RayParams> {
        if window > self.window_limit() {
            return Err(Error::OutOfHorizon {
                time: window,
                lower: 0.0,
                upper: self.window_limit(),
            });
        }
        self.matched_kernel().as_ray(window)
    }
}

#[derive(Debug, Clone)]
struct BridgeSlots {
    factor: GramFactor,
    n_phases: usize,
    /// Phase slot per grid point; `None` where the phase is zero.
    slot: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct EmbeddedSampler {
    grid: TimeGrid,
    motion_rate: f64,
    bridges: Vec<BridgeSlots>,
}

impl EmbeddedSampler {
    pub fn new(kind: &EmbeddedKind, grid: TimeGrid) -> Result<Self> {
        kind.validate()?;
        let (motion_rate, bridges) = kind.parts();
        let bridges = bridges
            .iter()
            .map(|b| bridge_slots(b, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            motion_rate,
            bridges,
        })
    }
}

/// Phases closer than this fraction of the period are the same phase, so
/// `1.3 mod 1` and `0.3` share a slot.
const PHASE_TOL: f64 = 1e-9;

fn bridge_slots(bridge: &PeriodicBridge, grid: &TimeGrid) -> Result<BridgeSlots> {
    let tol = PHASE_TOL * bridge.period;
    let phases: Vec<f64> = grid
        .points()
        .iter()
        .map(|t| {
            let p = t.rem_euclid(bridge.period);
            if p < tol || bridge.period - p < tol {
                0.0
            } else {
                p
            }
        })
        .collect();
    let mut sorted: Vec<f64> = phases.iter().cloned().filter(|&p| p > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let mut unique: Vec<f64> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if unique.last().is_none_or(|&u| p - u >= tol) {
            unique.push(p);
        }
    }
    let slot = phases
        .iter()
        .map(|&p| {
            if p > 0.0 {
                let i = unique.partition_point(|&u| u <= p + tol);
                Some(i - 1)
            } else {
                None
            }
        })
        .collect();
    let n_phases = unique.len();
    let factor = if n_phases == 0 {
        GramFactor::Markov {
            coef: vec![],
            scale: vec![],
        }
    } else {
        let phase_grid = TimeGrid::new(unique, bridge.period)?;
        GramFactor::markov(
            MarkovKernel::Bridge {
                variance_rate: bridge.variance_rate(),
                window: bridge.period,
            },
            &phase_grid,
        )?
    };
    Ok(BridgeSlots {
        factor,
        n_phases,
        slot,
    })
}

impl PathGenerator for EmbeddedSampler {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn fill(&self, rng: &mut PathRng, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.motion_rate > 0.0 {
            let (mut prev_t, mut level) = (0.0, 0.0);
            for (o, &t) in out.iter_mut().zip(self.grid.points()) {
                let z: f64 = StandardNormal.sample(rng);
                level += (self.motion_rate * (t - prev_t)).sqrt() * z;
                *o = level;
                prev_t = t;
            }
        }
        let mut z = Vec::new();
        let mut phase_values = Vec::new();
        for b in &self.bridges {
            z.clear();
            z.extend((0..b.n_phases).map(|_| Distribution::<f64>::sample(&StandardNormal, rng)));
            phase_values.resize(b.n_phases, 0.0);
            b.factor.apply(&z, &mut phase_values);
            for (o, s) in out.iter_mut().zip(&b.slot) {
                if let Some(k) = s {
                    *o += phase_values[*k];
                }
            }
        }
    }
}

/// Draws the half-line process on `grid` (which may extend past any period).
pub fn sample_embedded(
    kind: &EmbeddedKind,
    grid: &TimeGrid,
    mc: &McConfig,
) -> Result<SamplePathBatch> {
    let sampler = EmbeddedSampler::new(kind, grid.clone())?;
    generate_batch(&sampler, mc)
}
