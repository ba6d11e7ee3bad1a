//! Brownian-ray parameter algebra and covariance kernels.
//!
//! A Brownian ray on `[0, Δ]` is the zero-mean Gaussian process with
//! covariance `φ (s/δ)(1 - t/δ)` for `s ≤ t`, where `δ ≥ Δ`. Everything in
//! this module is closed-form double-precision arithmetic; tolerances live in
//! the tests.

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// One Brownian ray `(φ, δ)` on the modelling horizon `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayParams {
    phi: f64,
    delta: f64,
    horizon: f64,
}

impl RayParams {
    /// Validates `φ > 0` and `δ ≥ Δ > 0`.
    pub fn new(phi: f64, delta: f64, horizon: f64) -> Result<Self> {
        ensure_positive("phi", phi)?;
        ensure_positive("horizon", horizon)?;
        ensure_positive("delta", delta)?;
        if delta < horizon {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "delta must be at least the horizon",
            });
        }
        Ok(Self { phi, delta, horizon })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The modelling horizon `Δ`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn theta_tau(&self) -> ThetaTau {
        ThetaTau {
            theta: self.phi / self.delta,
            tau: self.phi / (self.delta * self.delta),
        }
    }

    /// Rebuilds `(φ, δ)` from the rates: `δ = θ/τ`, `φ = θ²/τ`.
    pub fn from_theta_tau(tt: ThetaTau, horizon: f64) -> Result<Self> {
        let delta = tt.theta / tt.tau;
        let phi = tt.theta * tt.theta / tt.tau;
        Self::new(phi, delta, horizon)
    }

    /// The ray's kernel in `(Θ, T)` form, `s(θ - τt)`.
    pub fn kernel(&self) -> SuperposedCov {
        let tt = self.theta_tau();
        SuperposedCov {
            variance_rate: tt.theta,
            ar_rate: tt.tau,
        }
    }

    /// The ray seen from time `u` onwards, conditioned on its state at `u`:
    /// `φ_u = φ(δ-u)/δ`, `δ_u = δ - u`, horizon `Δ - u`.
    pub fn condition(&self, u: f64) -> Result<Self> {
        check_observation_time(u, self.horizon)?;
        let delta_u = self.delta - u;
        Ok(Self {
            phi: self.phi * delta_u / self.delta,
            delta: delta_u,
            horizon: self.horizon - u,
        })
    }
}

/// Variance rate `θ = φ/δ` and autoregressive rate `τ = φ/δ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTau {
    pub theta: f64,
    pub tau: f64,
}

impl ThetaTau {
    pub fn new(theta: f64, tau: f64) -> Result<Self> {
        ensure_positive("theta", theta)?;
        ensure_positive("tau", tau)?;
        Ok(Self { theta, tau })
    }
}

pub fn to_theta_tau(p: &RayParams) -> ThetaTau {
    p.theta_tau()
}

pub fn from_theta_tau(tt: ThetaTau, horizon: f64) -> Result<RayParams> {
    RayParams::from_theta_tau(tt, horizon)
}

fn check_observation_time(u: f64, horizon: f64) -> Result<()> {
    if !(u >= 0.0 && u < horizon) {
        return Err(Error::OutOfHorizon {
            time: u,
            lower: 0.0,
            upper: horizon,
        });
    }
    Ok(())
}

fn check_window(s: f64, t: f64, upper: f64) -> Result<()> {
    for time in [s, t] {
        if !(time >= 0.0 && time <= upper) {
            return Err(Error::OutOfHorizon {
                time,
                lower: 0.0,
                upper,
            });
        }
    }
    Ok(())
}

/// Ray covariance `φ (s/δ)(1 - t/δ)`, symmetric in its time arguments.
pub fn ray_cov(p: &RayParams, s: f64, t: f64) -> Result<f64> {
    check_window(s, t, p.horizon)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    Ok(p.phi * (s / p.delta) * (1.0 - t / p.delta))
}

/// Result of composing a bridge and a motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Composed {
    Ray(RayParams),
    /// `χ = 1`: no bridge term, so `δ = ∞`. The process is `√β B(t)`.
    PureBrownianMotion { variance_rate: f64 },
}

/// Weights of the canonical bridge-plus-motion representation
/// `(1-χ)√Ψ B⁰_Δ(t) + χ√β B(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalWeights {
    pub chi: f64,
    pub psi: f64,
    pub beta: f64,
}

/// Builds the ray represented by a weighted bridge plus an independent motion.
pub fn canonical_compose(chi: f64, psi: f64, beta: f64, horizon: f64) -> Result<Composed> {
    if !(0.0..=1.0).contains(&chi) {
        return Err(Error::InvalidParameter {
            name: "chi",
            value: chi,
            reason: "must lie in [0, 1]",
        });
    }
    ensure_positive("psi", psi)?;
    ensure_positive("beta", beta)?;
    ensure_positive("horizon", horizon)?;
    if chi == 1.0 {
        return Ok(Composed::PureBrownianMotion {
            variance_rate: beta,
        });
    }
    let bridge = psi * (1.0 - chi) * (1.0 - chi);
    let total = bridge + horizon * beta * chi * chi;
    let phi = total * total / bridge;
    let delta = horizon * total / bridge;
    // total ≥ bridge, so delta ≥ horizon up to rounding in the last ulp.
    Ok(Composed::Ray(RayParams::new(phi, delta.max(horizon), horizon)?))
}

/// Inverse of [`canonical_compose`] for a given bridge/motion split `χ ∈ (0, 1)`.
///
/// `Ψ = Δ²φ/(δ(1-χ))²` and `β = (δ-Δ)φ/(δχ)²`; `β = 0` when `δ = Δ`.
pub fn canonical_decompose(p: &RayParams, chi: f64) -> Result<CanonicalWeights> {
    if !(chi > 0.0 && chi < 1.0) {
        return Err(Error::InvalidParameter {
            name: "chi",
            value: chi,
            reason: "must lie in (0, 1)",
        });
    }
    let (phi, delta, horizon) = (p.phi, p.delta, p.horizon);
    let psi = horizon * horizon * phi / (delta * (1.0 - chi)).powi(2);
    let beta = (delta - horizon) * phi / (delta * chi).powi(2);
    Ok(CanonicalWeights { chi, psi, beta })
}

/// Drift `-x/(δ-u)` induced on a ray by observing `X(u) = x`.
pub fn induced_drift(x: f64, p: &RayParams, u: f64) -> Result<f64> {
    check_observation_time(u, p.horizon)?;
    Ok(-x / (p.delta - u))
}

pub fn condition_ray(p: &RayParams, u: f64) -> Result<RayParams> {
    p.condition(u)
}

/// A weighted ray inside a superposition. Weights may be negative or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayComponent {
    pub weight: f64,
    pub params: RayParams,
}

impl RayComponent {
    pub fn new(weight: f64, params: RayParams) -> Result<Self> {
        ensure_finite("weight", weight)?;
        Ok(Self { weight, params })
    }
}

/// Independent weighted rays plus a drift: `Z(t) = ρt + Σ k_i X_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionSpec {
    components: Vec<RayComponent>,
    rho: f64,
}

impl SuperpositionSpec {
    pub fn new(components: Vec<RayComponent>, rho: f64) -> Result<Self> {
        ensure_finite("rho", rho)?;
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidSuperposition("no components".into()))?;
        let horizon = first.params.horizon;
        if let Some(c) = components.iter().find(|c| c.params.horizon != horizon) {
            return Err(Error::InvalidSuperposition(format!(
                "components must share one horizon: {} != {}",
                c.params.horizon, horizon
            )));
        }
        if components.iter().all(|c| c.weight == 0.0) {
            return Err(Error::InvalidSuperposition(
                "at least one weight must be nonzero".into(),
            ));
        }
        Ok(Self { components, rho })
    }

    /// A single unit-weight ray with drift.
    pub fn single(params: RayParams, rho: f64) -> Result<Self> {
        Self::new(vec![RayComponent { weight: 1.0, params }], rho)
    }

    pub fn components(&self) -> &[RayComponent] {
        &self.components
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn horizon(&self) -> f64 {
        self.components[0].params.horizon
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Same components with a different drift.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.components.clone(), rho)
    }

    fn min_delta(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.params.delta)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Kernel `s(Θ - T t)` for `s ≤ t` of a (superposed, possibly conditioned) ray.
///
/// `T = 0` is admitted as the Brownian-motion limit; `T > 0` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperposedCov {
    /// `Θ`
    pub variance_rate: f64,
    /// `T` (or `T_u` after conditioning)
    pub ar_rate: f64,
}

impl SuperposedCov {
    pub fn new(variance_rate: f64, ar_rate: f64) -> Result<Self> {
        ensure_positive("Theta", variance_rate)?;
        ensure_non_negative("T", ar_rate)?;
        Ok(Self {
            variance_rate,
            ar_rate,
        })
    }

    /// Brownian motion with variance rate `Θ`.
    pub fn motion(variance_rate: f64) -> Result<Self> {
        Self::new(variance_rate, 0.0)
    }

    /// Symmetric kernel; no range checks.
    #[inline]
    pub fn cov(&self, s: f64, t: f64) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        s * (self.variance_rate - self.ar_rate * t)
    }

    #[inline]
    pub fn variance(&self, t: f64) -> f64 {
        self.cov(t, t)
    }

    /// Largest time at which the kernel is still a covariance, `Θ/T`.
    pub fn validity_limit(&self) -> f64 {
        if self.ar_rate == 0.0 {
            f64::INFINITY
        } else {
            self.variance_rate / self.ar_rate
        }
    }

    /// Equivalent single ray on `horizon`, when `T > 0`.
    pub fn as_ray(&self, horizon: f64) -> Result<RayParams> {
        RayParams::from_theta_tau(ThetaTau::new(self.variance_rate, self.ar_rate)?, horizon)
    }
}

/// `Θ = Σ k²θ_i`, `T = Σ k²τ_i`.
pub fn superpose(spec: &SuperpositionSpec) -> SuperposedCov {
    let (variance_rate, ar_rate) = spec.components.iter().fold((0.0, 0.0), |(th, t), c| {
        let tt = c.params.theta_tau();
        let k2 = c.weight * c.weight;
        (th + k2 * tt.theta, t + k2 * tt.tau)
    });
    SuperposedCov {
        variance_rate,
        ar_rate,
    }
}

/// Observation made at time `u`: component states `x_i` and queue level `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedState {
    pub u: f64,
    pub x: Vec<f64>,
    pub v: f64,
}

impl ConditionedState {
    pub fn new(u: f64, x: Vec<f64>, v: f64) -> Result<Self> {
        ensure_non_negative("u", u)?;
        ensure_non_negative("v", v)?;
        for &xi in &x {
            ensure_finite("x", xi)?;
        }
        Ok(Self { u, x, v })
    }

    /// `u = 0`, all component states zero, queue level `v`.
    pub fn initial(k: usize, v: f64) -> Result<Self> {
        Self::new(0.0, vec![0.0; k], v)
    }

    pub fn validate_for(&self, spec: &SuperpositionSpec) -> Result<()> {
        if self.x.len() != spec.len() {
            return Err(Error::InvalidSuperposition(format!(
                "state has {} component values, superposition has {}",
                self.x.len(),
                spec.len()
            )));
        }
        check_observation_time(self.u, spec.horizon())?;
        if self.u >= spec.min_delta() {
            return Err(Error::OutOfHorizon {
                time: self.u,
                lower: 0.0,
                upper: spec.min_delta(),
            });
        }
        ensure_non_negative("v", self.v)?;
        Ok(())
    }
}

/// A superposition seen from an observation time: kernel `s(Θ - T_u t)`,
/// drift `ρ_{u;x}` and remaining horizon `Δ - u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedSuperposition {
    pub cov: SuperposedCov,
    pub drift: f64,
    pub horizon: f64,
}

/// Conditions every component on its state at `u`.
///
/// `T_u = Σ k² φ_u/δ_u²` (which equals `Σ k² θ_i/(δ_i - u)`), `Θ` is unchanged and
/// `ρ_{u;x} = ρ - Σ k_i x_i/(δ_i - u)`.
pub fn condition_superposition(
    spec: &SuperpositionSpec,
    state: &ConditionedState,
) -> Result<ConditionedSuperposition> {
    state.validate_for(spec)?;
    let mut variance_rate = 0.0;
    let mut ar_rate = 0.0;
    let mut drift = spec.rho;
    for (c, &xi) in spec.components.iter().zip(&state.x) {
        let cond = c.params.condition(state.u)?;
        let k2 = c.weight * c.weight;
        variance_rate += k2 * cond.phi / cond.delta;
        ar_rate += k2 * cond.phi / (cond.delta * cond.delta);
        drift -= c.weight * xi / (c.params.delta - state.u);
    }
    Ok(ConditionedSuperposition {
        cov: SuperposedCov {
            variance_rate,
            ar_rate,
        },
        drift,
        horizon: spec.horizon() - state.u,
    })
}

/// Covariance `sΘ(1 - t/w)` of the net input pinned over a window `w`.
pub fn pinned_bridge_cov(variance_rate: f64, window: f64, s: f64, t: f64) -> Result<f64> {
    ensure_positive("window", window)?;
    check_window(s, t, window)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    Ok(s * variance_rate * (1.0 - t / window))
}

/// `E[(X(t+d) - X(t))²] = d(Θ - T d)`, the same for every admissible `t`.
pub fn increment_variance(cov: &SuperposedCov, lag: f64) -> Result<f64> {
    ensure_non_negative("lag", lag)?;
    Ok(lag * (cov.variance_rate - cov.ar_rate * lag))
}

/// Doob's time change: `(1 + tT)/Θ · X(tΘ/(1 + tT))` is a standard Brownian
/// motion. Returns `(original time, scale)`.
pub fn doob_time_change(variance_rate: f64, ar_rate: f64, t: f64) -> Result<(f64, f64)> {
    ensure_positive("Theta", variance_rate)?;
    ensure_non_negative("t", t)?;
    let denom = 1.0 + t * ar_rate;
    Ok((t * variance_rate / denom, denom / variance_rate))
}
