//! European calls on a geometric Brownian ray `S(t) = S(0) e^{ρt + X(t)}`.
//!
//! The rational price is the Black–Scholes–Merton formula with variance rate
//! `σ² = θ = φ/δ` of the ray; the autoregressive rate `τ` and the drift do
//! not enter. The simulation side (terminal prices, discrete delta hedging)
//! samples the conditioned ray exactly on the rebalancing grid.

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::process::{ConditionedState, RayParams, SuperpositionSpec};
use crate::sampler::{map_paths, GaussianPathSampler, McConfig, TimeGrid};
use crate::special::norm_cdf;

/// Price model: initial price, log-drift and the ray driving the log-price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbrSpec {
    pub s0: f64,
    pub rho: f64,
    pub ray: RayParams,
}

impl GbrSpec {
    pub fn new(s0: f64, rho: f64, ray: RayParams) -> Result<Self> {
        ensure_positive("s0", s0)?;
        ensure_finite("rho", rho)?;
        Ok(Self { s0, rho, ray })
    }

    /// `θ` of the ray, the only ray parameter the price depends on.
    pub fn theta(&self) -> f64 {
        self.ray.theta_tau().theta
    }

    /// Price at `u` given `X(u) = x1`: `S(0) e^{ρu + x1}`.
    pub fn conditioned_spot(&self, u: f64, x1: f64) -> f64 {
        self.s0 * (self.rho * u + x1).exp()
    }

    /// `ρ_{u;x1} = ρ - x1/(δ - u)`.
    pub fn conditioned_drift(&self, u: f64, x1: f64) -> Result<f64> {
        Ok(self.rho + crate::process::induced_drift(x1, &self.ray, u)?)
    }

    fn net_input(&self, u: f64, x1: f64, maturity: f64, steps: usize) -> Result<GaussianPathSampler> {
        let spec = SuperpositionSpec::single(self.ray, self.rho)?;
        let state = ConditionedState::new(u, vec![x1], 0.0)?;
        let remaining = self.ray.horizon() - u;
        if !(maturity > 0.0 && maturity <= remaining) {
            return Err(Error::OutOfHorizon {
                time: maturity,
                lower: 0.0,
                upper: remaining,
            });
        }
        GaussianPathSampler::net_input(&spec, &state, TimeGrid::uniform(maturity, steps)?)
    }
}

/// European call: strike `C`, continuously compounded rate `r`, time to
/// maturity `H` and current price of the underlying.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionContract {
    pub strike: f64,
    pub rate: f64,
    pub maturity: f64,
    pub spot: f64,
}

impl OptionContract {
    pub fn new(strike: f64, rate: f64, maturity: f64, spot: f64) -> Result<Self> {
        ensure_positive("strike", strike)?;
        ensure_positive("rate", rate)?;
        ensure_non_negative("maturity", maturity)?;
        ensure_positive("spot", spot)?;
        Ok(Self {
            strike,
            rate,
            maturity,
            spot,
        })
    }

    fn with(&self, spot: f64, maturity: f64) -> Self {
        Self {
            spot,
            maturity,
            ..*self
        }
    }
}

pub fn payoff(terminal_price: f64, strike: f64) -> f64 {
    (terminal_price - strike).max(0.0)
}

fn d1_d2(c: &OptionContract, theta: f64) -> (f64, f64) {
    let vol = (theta * c.maturity).sqrt();
    let d1 = ((c.spot / c.strike).ln() + (c.rate + 0.5 * theta) * c.maturity) / vol;
    (d1, d1 - vol)
}

fn check_theta(theta: f64) -> Result<()> {
    ensure_positive("theta1", theta).map(|_| ())
}

/// `s Φ(d1) - C e^{-rH} Φ(d2)` with `d1 = (ln(s/C) + (r + θ/2)H)/√(θH)`.
pub fn bsm_price(contract: &OptionContract, theta1: f64) -> Result<f64> {
    check_theta(theta1)?;
    let c = contract;
    if c.maturity == 0.0 {
        return Ok(payoff(c.spot, c.strike));
    }
    let (d1, d2) = d1_d2(c, theta1);
    Ok(c.spot * norm_cdf(d1) - c.strike * (-c.rate * c.maturity).exp() * norm_cdf(d2))
}

/// Shares held by the replicating portfolio, `Φ(d1)`.
pub fn bsm_delta(contract: &OptionContract, theta1: f64) -> Result<f64> {
    check_theta(theta1)?;
    let c = contract;
    if c.maturity == 0.0 {
        return Ok(if c.spot > c.strike { 1.0 } else { 0.0 });
    }
    Ok(norm_cdf(d1_d2(c, theta1).0))
}

/// `θ = R(u,u)/u + uτ` from the variance at `u` and the autoregressive rate.
pub fn theta_from_variance(r_uu: f64, u: f64, tau: f64) -> Result<f64> {
    ensure_positive("u", u)?;
    Ok(r_uu / u + u * tau)
}

/// `θ = ((u + H) R(u,u)/u - R(u, u+H)) / H` from two covariances.
pub fn theta_from_covariances(r_uu: f64, r_u_uh: f64, u: f64, h: f64) -> Result<f64> {
    ensure_positive("u", u)?;
    ensure_positive("H", h)?;
    Ok(((u + h) * r_uu / u - r_u_uh) / h)
}

/// Terminal prices `S(u+H)` given `X(u) = x1`: log-normal with log-mean
/// `ln S_u + ρ_{u;x1}H` and log-variance `H(θ - τ_u H)`.
pub fn gbr_sample_terminal(
    spec: &GbrSpec,
    u: f64,
    x1: f64,
    maturity: f64,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    let sampler = spec.net_input(u, x1, maturity, 1)?;
    let spot = spec.conditioned_spot(u, x1);
    map_paths(&sampler, mc, |_, path| spot * path[0].exp())
}

/// One path of a discrete delta hedge: positions chosen at each rebalance
/// time and the portfolio value carried into it.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgePlan {
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
    /// Shares held over `[t_k, t_{k+1})`.
    pub shares: Vec<f64>,
    /// Bond units over `[t_k, t_{k+1})`, bond price `e^{rt}`.
    pub bonds: Vec<f64>,
    /// Portfolio value at each time, before rebalancing.
    pub values: Vec<f64>,
}

impl HedgePlan {
    pub fn steps(&self) -> usize {
        self.shares.len()
    }

    /// Terminal portfolio minus the option payoff.
    pub fn replication_error(&self, strike: f64) -> f64 {
        let last = self.prices.len() - 1;
        self.values[last] - payoff(self.prices[last], strike)
    }

    /// Largest gap between the value carried into a rebalance and the value
    /// of the new position, `s_k S_k + p_k P_k`. Zero for a self-financing plan.
    pub fn self_financing_residual(&self, rate: f64) -> f64 {
        (0..self.steps())
            .map(|k| {
                let held = self.shares[k] * self.prices[k] + self.bonds[k] * (rate * self.times[k]).exp();
                (held - self.values[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Delta hedge of `contract` along one price path observed at `times`
/// (starting at 0, ending at maturity), funded by the option premium.
pub fn hedge_path(times: &[f64], prices: &[f64], contract: &OptionContract, theta1: f64) -> Result<HedgePlan> {
    check_theta(theta1)?;
    if times.len() != prices.len() || times.len() < 2 {
        return Err(Error::InvalidGrid("hedge needs matching times and prices".into()));
    }
    let n = times.len() - 1;
    let maturity = times[n];
    let mut plan = HedgePlan {
        times: times.to_vec(),
        prices: prices.to_vec(),
        shares: Vec::with_capacity(n),
        bonds: Vec::with_capacity(n),
        values: Vec::with_capacity(n + 1),
    };
    let mut value = bsm_price(&contract.with(prices[0], maturity), theta1)?;
    for k in 0..n {
        plan.values.push(value);
        let c = contract.with(prices[k], maturity - times[k]);
        let shares = bsm_delta(&c, theta1)?;
        let bonds = (value - shares * prices[k]) * (-contract.rate * times[k]).exp();
        value = shares * prices[k + 1] + bonds * (contract.rate * times[k + 1]).exp();
        plan.shares.push(shares);
        plan.bonds.push(bonds);
    }
    plan.values.push(value);
    Ok(plan)
}

/// Replication error statistics over many hedged paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeStats {
    pub n_steps: usize,
    pub n_paths: usize,
    pub mean: f64,
    pub rms: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
}

/// Simulates the conditioned price from `u`, hedges each path on `n_steps`
/// uniform rebalances and reports the terminal error of portfolio vs payoff.
/// The contract's `spot` is the starting price; `spec` supplies the dynamics.
pub fn hedge_replicate(
    spec: &GbrSpec,
    u: f64,
    x1: f64,
    contract: &OptionContract,
    n_steps: usize,
    mc: &McConfig,
) -> Result<HedgeStats> {
    if n_steps < 2 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: n_steps as f64,
            reason: "at least two rebalances",
        });
    }
    let sampler = spec.net_input(u, x1, contract.maturity, n_steps)?;
    let theta = spec.theta();
    let mut times = vec![0.0];
    times.extend_from_slice(sampler_grid(&sampler));
    let errors = map_paths(&sampler, mc, |_, path| {
        let prices: Vec<f64> = std::iter::once(contract.spot)
            .chain(path.iter().map(|x| contract.spot * x.exp()))
            .collect();
        hedge_path(&times, &prices, contract, theta)
            .map(|p| p.replication_error(contract.strike))
            .unwrap_or(f64::NAN)
    })?;
    Ok(summarize(n_steps, &errors))
}

fn sampler_grid(s: &GaussianPathSampler) -> &[f64] {
    use crate::sampler::PathGenerator;
    s.grid().points()
}

fn summarize(n_steps: usize, errors: &[f64]) -> HedgeStats {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let ms = errors.iter().map(|e| e * e).sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    HedgeStats {
        n_steps,
        n_paths: errors.len(),
        mean,
        rms: ms.sqrt(),
        std_error: (var / n).sqrt(),
    }
}

/// `E[e^{-rH}(S(u+H) - C)⁺]` under the price model itself (not the pricing
/// measure), with its standard error.
pub fn discounted_expected_payoff(
    spec: &GbrSpec,
    u: f64,
    x1: f64,
    contract: &OptionContract,
    mc: &McConfig,
) -> Result<(f64, f64)> {
    let terminal = gbr_sample_terminal(spec, u, x1, contract.maturity, mc)?;
    let disc = (-contract.rate * contract.maturity).exp();
    let pv: Vec<f64> = terminal.iter().map(|s| disc * payoff(*s, contract.strike)).collect();
    let stats = summarize(1, &pv);
    Ok((stats.mean, stats.std_error))
}
