//! Transient and limiting laws of a queue `Q = Q(0) + Z + L` whose net input
//! `Z` is a superposition of Brownian rays with drift, reflected at zero.
//!
//! All CDFs share the shape `½ erfc(α) - ½ e^A erfc(β)`. Writing it with
//! complementary error functions keeps the tails accurate, and
//! [`exp_erfc`] keeps `e^A erfc(β)` finite when `A` alone would overflow.

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::process::{
    condition_superposition, superpose, ConditionedState, ConditionedSuperposition,
    SuperpositionSpec,
};
use crate::quad::integrate;
use crate::special::{erfc, exp_erfc, gaussian_pdf};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Law of `v + V(h)` reflected at zero, where `V` is a drifted ray with
/// kernel `s(Θ - T t)`. `T = 0` gives regulated Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientLaw {
    pub variance_rate: f64,
    pub ar_rate: f64,
    pub drift: f64,
    pub level: f64,
}

struct Terms {
    a: f64,
    alpha: f64,
    beta: f64,
    s: f64,
}

impl TransientLaw {
    fn terms(&self, h: f64, q: f64) -> Terms {
        let (th, t, rho, v) = (self.variance_rate, self.ar_rate, self.drift, self.level);
        let s = (2.0 * h * (th - t * h)).sqrt();
        Terms {
            a: -2.0 * q * (t * q - th * rho) / (th * th),
            alpha: (-q + v + rho * h) / s,
            beta: (th * (q + v) - (2.0 * t * q - th * rho) * h) / (th * s),
            s,
        }
    }

    /// `P(Q(h) ≤ q)`. Caller guarantees `h > 0` and `Θ - T h > 0`.
    ///
    /// At `q = 0` the two terms cancel exactly (`A = 0`, `β = -α`), so the
    /// value is returned as 0 rather than as a rounding residue. Elsewhere the
    /// result is clamped to `[0, 1]` against last-bit rounding only.
    pub fn cdf(&self, h: f64, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let k = self.terms(h, q);
        (0.5 * erfc(k.alpha) - 0.5 * exp_erfc(k.a, k.beta)).clamp(0.0, 1.0)
    }

    /// `d/dq P(Q(h) ≤ q)` for `q ≥ 0`:
    /// `e^{-α²}/(√π s) - ½A'·e^A erfc(β) + e^{A-β²} β'/√π` with
    /// `A' = -(4Tq - 2Θρ)/Θ²`, `β' = (Θ - 2Th)/(Θ s)`.
    pub fn density(&self, h: f64, q: f64) -> f64 {
        if q < 0.0 {
            return 0.0;
        }
        let (th, t, rho) = (self.variance_rate, self.ar_rate, self.drift);
        let k = self.terms(h, q);
        let da = -(4.0 * t * q - 2.0 * th * rho) / (th * th);
        let dbeta = (th - 2.0 * t * h) / (th * k.s);
        (-k.alpha * k.alpha).exp() * FRAC_1_SQRT_PI / k.s - 0.5 * da * exp_erfc(k.a, k.beta)
            + (k.a - k.beta * k.beta).exp() * dbeta * FRAC_1_SQRT_PI
    }

    /// Bridge of variance rate `Θ` pinned to `z` at `w`, reflected from `v`.
    pub fn pinned(variance_rate: f64, window: f64, z: f64, level: f64) -> Self {
        Self {
            variance_rate,
            ar_rate: variance_rate / window,
            drift: z / window,
            level,
        }
    }
}

/// A superposed net input observed at `u` (component states `x`, queue
/// level `v`) together with the derived `Θ`, `T_u` and `ρ_{u;x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatedQueue {
    cond: ConditionedSuperposition,
    level: f64,
}

impl RegulatedQueue {
    pub fn new(spec: &SuperpositionSpec, state: &ConditionedState) -> Result<Self> {
        let cond = condition_superposition(spec, state)?;
        Ok(Self {
            cond,
            level: state.v,
        })
    }

    pub fn conditioned(&self) -> &ConditionedSuperposition {
        &self.cond
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn law(&self) -> TransientLaw {
        TransientLaw {
            variance_rate: self.cond.cov.variance_rate,
            ar_rate: self.cond.cov.ar_rate,
            drift: self.cond.drift,
            level: self.level,
        }
    }

    fn check_elapsed(&self, h: f64) -> Result<()> {
        if !(h > 0.0 && h <= self.cond.horizon) {
            return Err(Error::OutOfHorizon {
                time: h,
                lower: 0.0,
                upper: self.cond.horizon,
            });
        }
        let var = h * (self.cond.cov.variance_rate - self.cond.cov.ar_rate * h);
        if !(var > 0.0) {
            return Err(Error::NotPositiveDefinite {
                time: h,
                variance: var,
            });
        }
        Ok(())
    }

    pub fn cdf(&self, h: f64, q: f64) -> Result<f64> {
        self.check_elapsed(h)?;
        ensure_finite("q", q)?;
        Ok(self.law().cdf(h, q))
    }

    pub fn density(&self, h: f64, q: f64) -> Result<f64> {
        self.check_elapsed(h)?;
        ensure_finite("q", q)?;
        Ok(self.law().density(h, q))
    }

    /// `E V(h) = ρ_{u;x} h`.
    pub fn netinput_mean(&self, h: f64) -> Result<f64> {
        self.check_elapsed(h)?;
        Ok(self.cond.drift * h)
    }

    /// `Var V(h) = h(Θ - T_u h)`.
    pub fn netinput_var(&self, h: f64) -> Result<f64> {
        self.check_elapsed(h)?;
        Ok(h * (self.cond.cov.variance_rate - self.cond.cov.ar_rate * h))
    }

    /// `P(V(h) ≤ a)`, the large-`v` limit of `P(Q(h) - v ≤ a)`.
    pub fn netinput_cdf(&self, h: f64, a: f64) -> Result<f64> {
        let (m, var) = (self.netinput_mean(h)?, self.netinput_var(h)?);
        Ok(0.5 * erfc(-(a - m) / (2.0 * var).sqrt()))
    }

    pub fn netinput_density(&self, h: f64, a: f64) -> Result<f64> {
        let (m, var) = (self.netinput_mean(h)?, self.netinput_var(h)?);
        Ok(gaussian_pdf(a, m, var))
    }

    /// The queue additionally conditioned on `Z(u + w) - Z(u) = z`.
    pub fn pinned(&self, window: f64, z: f64) -> Result<PinnedQueue> {
        if !(window > 0.0 && window <= self.cond.horizon) {
            return Err(Error::OutOfHorizon {
                time: window,
                lower: 0.0,
                upper: self.cond.horizon,
            });
        }
        ensure_finite("z", z)?;
        Ok(PinnedQueue {
            variance_rate: self.cond.cov.variance_rate,
            window,
            z,
            level: self.level,
        })
    }
}

/// Queue over `[u, u + w]` given the net-input increment `z` over the window.
/// Only `Θ`, `w`, `z` and `v` enter: not `ρ`, not the component states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinnedQueue {
    variance_rate: f64,
    window: f64,
    z: f64,
    level: f64,
}

impl PinnedQueue {
    pub fn window(&self) -> f64 {
        self.window
    }

    fn law(&self) -> TransientLaw {
        TransientLaw::pinned(self.variance_rate, self.window, self.z, self.level)
    }

    fn check_inside(&self, h: f64) -> Result<()> {
        if !(h > 0.0 && h < self.window) {
            return Err(Error::OutOfHorizon {
                time: h,
                lower: 0.0,
                upper: self.window,
            });
        }
        Ok(())
    }

    /// `P(Q(u+h) ≤ q | pin)` for `0 < h < w`.
    pub fn cdf(&self, h: f64, q: f64) -> Result<f64> {
        self.check_inside(h)?;
        ensure_finite("q", q)?;
        Ok(self.law().cdf(h, q))
    }

    pub fn density(&self, h: f64, q: f64) -> Result<f64> {
        self.check_inside(h)?;
        Ok(self.law().density(h, q))
    }

    /// Large-`v` limit in the shifted level `a = q - v`:
    /// `½(1 + erf((a - zh/w)/√(2h(Θ - Θh/w))))`.
    pub fn large_level_cdf(&self, h: f64, a: f64) -> Result<f64> {
        self.check_inside(h)?;
        let th = self.variance_rate;
        let s = (2.0 * h * (th - th * h / self.window)).sqrt();
        Ok(0.5 * erfc(-(a - self.z * h / self.window) / s))
    }

    /// Location and mass of the atom of `Q(u + w)`: the queue sits at
    /// `v + z` exactly when it never touched zero.
    pub fn endpoint_atom(&self) -> (f64, f64) {
        let at = self.level + self.z;
        if at > 0.0 {
            let mass = -(-2.0 * at * self.level / (self.window * self.variance_rate)).exp_m1();
            (at, mass)
        } else {
            (0.0, 0.0)
        }
    }

    /// Right-continuous `P(Q(u + w) ≤ q)`: `1 - e^{-2q(q-z)/(wΘ)}` from
    /// `max(0, v + z)` on, zero below.
    pub fn endpoint_cdf(&self, q: f64) -> f64 {
        if q < 0.0 || q < self.level + self.z {
            return 0.0;
        }
        -(-2.0 * q * (q - self.z) / (self.window * self.variance_rate)).exp_m1()
    }

    /// Continuous part of the endpoint law: `e^{-2q(q-z)/(wΘ)}(4q - 2z)/(wΘ)`
    /// above the atom, zero elsewhere.
    pub fn endpoint_density(&self, q: f64) -> f64 {
        if q < 0.0 || q < self.level + self.z {
            return 0.0;
        }
        let c = self.window * self.variance_rate;
        (-2.0 * q * (q - self.z) / c).exp() * (4.0 * q - 2.0 * self.z) / c
    }

    /// `E Q(u + w) = ∫ (1 - F)` by adaptive quadrature.
    pub fn endpoint_mean(&self) -> Result<f64> {
        let (start, _) = self.endpoint_atom();
        let c = self.window * self.variance_rate;
        let z = self.z;
        // Integrand is ≤ exp(-2(q - start)²/c) beyond `start`.
        let tail = integrate(
            |q| (-2.0 * q * (q - z) / c).exp(),
            start,
            start + 12.0 * c.sqrt(),
            1e-14,
            1e-13,
        )?;
        Ok(start + tail)
    }
}

/// One transient query: `P(Q(u+h) ≤ q | Q(u) = v, X_i(u) = x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueQuery {
    pub spec: SuperpositionSpec,
    pub state: ConditionedState,
    pub h: f64,
    pub q: f64,
}

/// A transient query additionally pinned by `Z(u+w) - Z(u) = z`, `h < w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedQueueQuery {
    pub query: QueueQuery,
    pub w: f64,
    pub z: f64,
}

pub fn transient_cdf(query: &QueueQuery) -> Result<f64> {
    ensure_non_negative("q", query.q)?;
    RegulatedQueue::new(&query.spec, &query.state)?.cdf(query.h, query.q)
}

/// `d/dq` of [`transient_cdf`].
pub fn transient_density(query: &QueueQuery) -> Result<f64> {
    RegulatedQueue::new(&query.spec, &query.state)?.density(query.h, query.q)
}

/// Law of `Q(t)` started from `Q(0) = v` with every component at zero.
pub fn unconditional_cdf(spec: &SuperpositionSpec, v: f64, t: f64, q: f64) -> Result<f64> {
    let state = ConditionedState::initial(spec.len(), v)?;
    RegulatedQueue::new(spec, &state)?.cdf(t, q)
}

/// Stationary law of the regulated Brownian bridge, reached as `t → Θ/T`
/// from an empty queue: `1 - e^{-2q(Tq - Θρ)/Θ²}` from `max(0, ρΘ/T)` on.
/// Below that point (only possible when `ρ > 0`) the queue has not yet
/// emptied its own input, and the CDF is zero.
pub fn rbb_stationary_cdf(variance_rate: f64, ar_rate: f64, rho: f64, q: f64) -> Result<f64> {
    ensure_positive("Theta", variance_rate)?;
    ensure_positive("T", ar_rate)?;
    ensure_finite("rho", rho)?;
    ensure_finite("q", q)?;
    let start = (rho * variance_rate / ar_rate).max(0.0);
    if q < start {
        return Ok(0.0);
    }
    Ok(-(-2.0 * q * (ar_rate * q - variance_rate * rho) / (variance_rate * variance_rate)).exp_m1())
}

/// Transient law of regulated Brownian motion `ρt + √Θ B(t)` from level `v`.
pub fn rbm_transient_cdf(variance_rate: f64, rho: f64, v: f64, t: f64, q: f64) -> Result<f64> {
    ensure_positive("Theta", variance_rate)?;
    ensure_positive("t", t)?;
    ensure_non_negative("v", v)?;
    ensure_finite("rho", rho)?;
    ensure_finite("q", q)?;
    if q <= 0.0 {
        return Ok(0.0);
    }
    let s = (2.0 * variance_rate * t).sqrt();
    let lower = (-q + rho * t + v) / s;
    let upper = (q + rho * t + v) / s;
    Ok((0.5 * (erfc(lower) - exp_erfc(2.0 * rho * q / variance_rate, upper))).clamp(0.0, 1.0))
}

pub fn netinput_cdf(spec: &SuperpositionSpec, state: &ConditionedState, h: f64, a: f64) -> Result<f64> {
    RegulatedQueue::new(spec, state)?.netinput_cdf(h, a)
}

pub fn netinput_mean(spec: &SuperpositionSpec, state: &ConditionedState, h: f64) -> Result<f64> {
    RegulatedQueue::new(spec, state)?.netinput_mean(h)
}

pub fn netinput_var(spec: &SuperpositionSpec, state: &ConditionedState, h: f64) -> Result<f64> {
    RegulatedQueue::new(spec, state)?.netinput_var(h)
}

fn pinned_from(spec: &SuperpositionSpec, state: &ConditionedState, w: f64, z: f64) -> Result<PinnedQueue> {
    RegulatedQueue::new(spec, state)?.pinned(w, z)
}

pub fn pinned_transient_cdf(query: &PinnedQueueQuery) -> Result<f64> {
    let QueueQuery { spec, state, h, q } = &query.query;
    pinned_from(spec, state, query.w, query.z)?.cdf(*h, *q)
}

/// Large-level limit of the pinned law at `h < w`; it tends to the step at
/// `a = z` as `h → w`.
pub fn pinned_pointmass_limit(variance_rate: f64, w: f64, z: f64, h: f64, a: f64) -> Result<f64> {
    ensure_positive("Theta", variance_rate)?;
    ensure_positive("w", w)?;
    PinnedQueue {
        variance_rate,
        window: w,
        z,
        level: 0.0,
    }
    .large_level_cdf(h, a)
}

pub fn endpoint_cdf(spec: &SuperpositionSpec, state: &ConditionedState, w: f64, z: f64, q: f64) -> Result<f64> {
    Ok(pinned_from(spec, state, w, z)?.endpoint_cdf(q))
}

pub fn endpoint_mean(spec: &SuperpositionSpec, state: &ConditionedState, w: f64, z: f64) -> Result<f64> {
    pinned_from(spec, state, w, z)?.endpoint_mean()
}

/// Posterior of the net-input increment `z` over `[u, u+w]` given the queue
/// level `q` at `u + w`, assembled by Bayes' rule from the pinned endpoint
/// law, the Gaussian prior of the increment and the unpinned queue law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetInputPosterior {
    queue: RegulatedQueue,
    window: f64,
    q: f64,
    evidence: f64,
}

impl NetInputPosterior {
    pub fn new(spec: &SuperpositionSpec, state: &ConditionedState, w: f64, q: f64) -> Result<Self> {
        let queue = RegulatedQueue::new(spec, state)?;
        ensure_finite("q", q)?;
        let evidence = if q < 0.0 { 0.0 } else { queue.density(w, q)? };
        if !(evidence > 0.0 && evidence.is_finite()) {
            return Err(Error::VanishingDensity { q });
        }
        queue.pinned(w, 0.0)?;
        Ok(Self {
            queue,
            window: w,
            q,
            evidence,
        })
    }

    /// `d_q F(w; q)`, the normalizing density of the observed level.
    pub fn evidence(&self) -> f64 {
        self.evidence
    }

    /// Prior density of the increment, `d_z H(w; z)`.
    pub fn prior(&self, z: f64) -> f64 {
        self.queue
            .netinput_density(self.window, z)
            .unwrap_or(0.0)
    }

    /// Mean and variance of the prior.
    pub fn prior_moments(&self) -> (f64, f64) {
        (
            self.queue.netinput_mean(self.window).unwrap(),
            self.queue.netinput_var(self.window).unwrap(),
        )
    }

    fn pinned(&self, z: f64) -> PinnedQueue {
        PinnedQueue {
            variance_rate: self.queue.cond.cov.variance_rate,
            window: self.window,
            z,
            level: self.queue.level,
        }
    }

    /// Continuous part `d_q F^{z}(w; q) · d_z H(w; z) / d_q F(w; q)`,
    /// supported on `z < q - v`.
    pub fn density(&self, z: f64) -> f64 {
        self.pinned(z).endpoint_density(self.q) * self.prior(z) / self.evidence
    }

    /// The increment `z = q - v` that leaves the queue untouched by the
    /// boundary, and its posterior probability.
    pub fn atom(&self) -> (f64, f64) {
        let z = self.q - self.queue.level;
        let (at, mass) = self.pinned(z).endpoint_atom();
        if mass > 0.0 && at == self.q {
            (z, mass * self.prior(z) / self.evidence)
        } else {
            (z, 0.0)
        }
    }

    /// Posterior mass of the continuous part, by quadrature.
    pub fn continuous_mass(&self) -> Result<f64> {
        let (m, var) = self.prior_moments();
        let upper = self.q - self.queue.level;
        let lower = (m - 40.0 * var.sqrt()).min(upper);
        integrate(|z| self.density(z), lower, upper, 1e-13, 1e-12)
    }
}

pub fn netinput_posterior_density(
    spec: &SuperpositionSpec,
    state: &ConditionedState,
    w: f64,
    q: f64,
    z: f64,
) -> Result<f64> {
    Ok(NetInputPosterior::new(spec, state, w, q)?.density(z))
}

/// `Θ` shared by every query on `spec`.
pub fn variance_rate(spec: &SuperpositionSpec) -> f64 {
    superpose(spec).variance_rate
}
