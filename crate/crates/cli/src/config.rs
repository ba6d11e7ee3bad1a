//! JSON run configuration. One file describes a scenario, its parameters,
//! and optionally an evaluation sweep, a simulation grid, a Monte Carlo
//! budget and an output path.

use std::path::{Path, PathBuf};

use brownian_ray::process::{ConditionedState, RayComponent, RayParams, SuperpositionSpec};
use brownian_ray::sampler::{EmbeddedKind, PeriodicBridge, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum Scenario {
    Ray(NetInputCfg),
    Queue(QueueCfg),
    PinnedQueue(PinnedCfg),
    Rbm(RbmCfg),
    Rbb(RbbCfg),
    Option(OptionCfg),
    Embedded(EmbeddedCfg),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Ray(_) => "ray",
            Scenario::Queue(_) => "queue",
            Scenario::PinnedQueue(_) => "pinned-queue",
            Scenario::Rbm(_) => "rbm",
            Scenario::Rbb(_) => "rbb",
            Scenario::Option(_) => "option",
            Scenario::Embedded(_) => "embedded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCfg {
    #[serde(default = "one")]
    pub weight: f64,
    pub phi: f64,
    pub delta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCfg {
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub v: f64,
}

/// Superposed net input `ρt + Σ k_i X_i(t)` on `[0, horizon]`, optionally
/// observed at `u` with component values `x` and queue level `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInputCfg {
    pub horizon: f64,
    pub components: Vec<ComponentCfg>,
    #[serde(default)]
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateCfg>,
}

impl NetInputCfg {
    pub fn spec(&self) -> Result<SuperpositionSpec, CliError> {
        let comps = self
            .components
            .iter()
            .map(|c| RayComponent::new(c.weight, RayParams::new(c.phi, c.delta, self.horizon)?))
            .collect::<brownian_ray::Result<Vec<_>>>()?;
        Ok(SuperpositionSpec::new(comps, self.rho)?)
    }

    pub fn state(&self) -> Result<ConditionedState, CliError> {
        let k = self.components.len();
        let state = match &self.state {
            None => ConditionedState::initial(k, 0.0)?,
            Some(s) => {
                let x = if s.x.is_empty() { vec![0.0; k] } else { s.x.clone() };
                ConditionedState::new(s.u, x, s.v)?
            }
        };
        state.validate_for(&self.spec()?)?;
        Ok(state)
    }

    /// Length of the interval left after the observation time.
    pub fn remaining(&self) -> f64 {
        self.horizon - self.state.as_ref().map_or(0.0, |s| s.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReflectionCfg {
    /// Running infimum over grid points only.
    Grid,
    /// Exact between-grid minima.
    #[default]
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueCfg {
    #[serde(flatten)]
    pub net: NetInputCfg,
    /// Elapsed time for closed-form evaluation.
    pub h: f64,
    #[serde(default)]
    pub reflection: ReflectionCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnedCfg {
    #[serde(flatten)]
    pub net: NetInputCfg,
    pub w: f64,
    pub z: f64,
    /// Elapsed time for evaluation; `h = w` (or absent) selects the endpoint law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default)]
    pub reflection: ReflectionCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmCfg {
    pub theta: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub v: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbbCfg {
    pub theta: f64,
    /// Autoregressive rate `T`.
    pub ar_rate: f64,
    #[serde(default)]
    pub rho: f64,
    /// Simulation only: initial queue level.
    #[serde(default)]
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionCfg {
    pub s0: f64,
    #[serde(default)]
    pub rho: f64,
    pub phi: f64,
    pub delta: f64,
    pub horizon: f64,
    pub strike: f64,
    pub rate: f64,
    pub maturity: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub x1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeCfg {
    pub phi: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedCfg {
    #[serde(default)]
    pub motion_rate: f64,
    pub bridges: Vec<BridgeCfg>,
}

impl EmbeddedCfg {
    pub fn kind(&self) -> Result<EmbeddedKind, CliError> {
        let bridges = self
            .bridges
            .iter()
            .map(|b| PeriodicBridge::new(b.phi, b.period))
            .collect::<brownian_ray::Result<Vec<_>>>()?;
        let kind = match bridges.as_slice() {
            [] => return Err(CliError::Config("embedded scenario needs at least one bridge".into())),
            [b] if self.motion_rate == 0.0 => EmbeddedKind::PeriodicBridge(*b),
            [b] => EmbeddedKind::MotionPlusPeriodicBridge {
                motion_rate: self.motion_rate,
                bridge: *b,
            },
            _ => EmbeddedKind::MotionPlusBridges {
                motion_rate: self.motion_rate,
                bridges,
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Evenly spaced abscissae `from, ..., to` (both included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.to > self.from) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(CliError::Config(format!(
                "sweep needs finite from < to and at least 2 points, got {self:?}"
            )));
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| if i + 1 == self.points { self.to } else { self.from + step * i as f64 })
            .collect())
    }
}

/// Simulation grid: either explicit `times`, or `points` evenly spaced up to
/// `end` (default: the scenario's natural end).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 100;

    pub fn build(spec: Option<&GridSpec>, natural_end: f64) -> Result<TimeGrid, CliError> {
        let g = spec.cloned().unwrap_or(GridSpec {
            points: None,
            end: None,
            times: None,
        });
        if let Some(times) = g.times {
            return Ok(TimeGrid::new(times, natural_end)?);
        }
        let end = g.end.unwrap_or(natural_end);
        if end > natural_end {
            return Err(CliError::Config(format!("grid end {end} exceeds {natural_end}")));
        }
        Ok(TimeGrid::uniform(end, g.points.unwrap_or(Self::DEFAULT_POINTS))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the scenario parameters against the library's invariants.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.scenario {
            Scenario::Ray(n) => {
                n.state()?;
            }
            Scenario::Queue(q) => {
                q.net.state()?;
            }
            Scenario::PinnedQueue(p) => {
                p.net.state()?;
            }
            Scenario::Rbm(_) | Scenario::Rbb(_) | Scenario::Option(_) => {}
            Scenario::Embedded(e) => {
                e.kind()?;
            }
        }
        if let Some(s) = &self.sweep {
            s.values()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_queue_config() {
        let c = RunConfig::from_json(
            r#"{"scenario": "queue", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 2.0}],
                "rho": -0.1, "state": {"u": 0.2, "x": [0.1], "v": 0.5}, "h": 0.5,
                "sweep": {"from": 0, "to": 3, "points": 4}, "mc": {"n_paths": 10, "seed": 3}}"#,
        )
        .unwrap();
        let Scenario::Queue(q) = &c.scenario else { panic!() };
        assert_eq!(q.reflection, ReflectionCfg::Exact);
        assert_eq!(q.net.components[0].weight, 1.0);
        assert_eq!(c.sweep.as_ref().unwrap().values().unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_scenario() {
        assert!(RunConfig::from_json(r#"{"scenario": "nope"}"#).is_err());
    }

    #[test]
    fn invalid_delta_is_named() {
        let c = RunConfig::from_json(
            r#"{"scenario": "ray", "horizon": 2.0, "components": [{"phi": 1.0, "delta": 1.0}]}"#,
        )
        .unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("delta"));
    }

    #[test]
    fn round_trip_is_identity() {
        let texts = [
            r#"{"scenario": "ray", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 2.0}], "grid": {"points": 20}, "mc": {"n_paths": 5, "seed": 1}}"#,
            r#"{"scenario": "queue", "horizon": 1.0, "components": [{"weight": 2.0, "phi": 1.0, "delta": 2.0}], "rho": 0.3, "state": {"u": 0.1, "x": [0.2], "v": 1.0}, "h": 0.4, "reflection": "grid", "output": "out.csv"}"#,
            r#"{"scenario": "pinned-queue", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 2.0}], "w": 0.5, "z": -0.1, "h": 0.25, "sweep": {"from": 0.0, "to": 1.0, "points": 11}}"#,
            r#"{"scenario": "rbm", "theta": 1.0, "rho": 0.0, "v": 0.0, "t": 1.0}"#,
            r#"{"scenario": "rbb", "theta": 1.0, "ar_rate": 1.0}"#,
            r#"{"scenario": "option", "s0": 100.0, "phi": 0.08, "delta": 2.0, "horizon": 1.0, "strike": 100.0, "rate": 0.05, "maturity": 1.0, "u": 0.0, "x1": 0.0}"#,
            r#"{"scenario": "embedded", "motion_rate": 0.1, "bridges": [{"phi": 1.0, "period": 1.0}, {"phi": 0.5, "period": 2.0}], "grid": {"times": [0.5, 1.0]}}"#,
        ];
        for t in texts {
            let a = RunConfig::from_json(t).unwrap();
            let b = RunConfig::from_json(&a.to_json()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_json(), b.to_json());
            a.validate().unwrap();
        }
    }
}
