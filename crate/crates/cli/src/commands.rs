use std::io::Write;
use std::path::Path;

use brownian_ray::options::{bsm_delta, bsm_price, GbrSpec, OptionContract};
use brownian_ray::process::{superpose, ConditionedState, RayParams, SuperposedCov, SuperpositionSpec};
use brownian_ray::queue::{rbb_stationary_cdf, rbm_transient_cdf, RegulatedQueue};
use brownian_ray::sampler::{
    regulate_path, stream_blocks, EmbeddedSampler, Execution, GaussianPathSampler, McConfig, PathGenerator,
    Reflection, TimeGrid,
};
use brownian_ray::verify::{run_suite, Suite, VerifyConfig};

use crate::config::{GridSpec, ReflectionCfg, RunConfig, Scenario, Sweep};
use crate::csv_out::CsvOut;
use crate::CliError;

const DEFAULT_SIM_PATHS: usize = 10_000;

fn sweep_or(cfg: &RunConfig, from: f64, to: f64, points: usize) -> Result<Vec<f64>, CliError> {
    cfg.sweep.clone().unwrap_or(Sweep { from, to, points }).values()
}

/// Evaluates the scenario's closed form over its sweep and writes
/// `(abscissa, value...)` rows. Returns the number of data rows.
pub fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<usize, CliError> {
    cfg.validate()?;
    match &cfg.scenario {
        Scenario::Ray(n) => {
            let queue = RegulatedQueue::new(&n.spec()?, &n.state()?)?;
            let end = n.remaining();
            let mut w = CsvOut::create(out, &["t", "netinput_mean", "netinput_variance"])?;
            for t in sweep_or(cfg, end / 100.0, end, 100)? {
                w.row(&[t, queue.netinput_mean(t)?, queue.netinput_var(t)?])?;
            }
            w.finish()
        }
        Scenario::Queue(q) => {
            let queue = RegulatedQueue::new(&q.net.spec()?, &q.net.state()?)?;
            let mut w = CsvOut::create(out, &["q", "transient_cdf", "transient_density"])?;
            for x in sweep_or(cfg, 0.0, 5.0, 101)? {
                w.row(&[x, queue.cdf(q.h, x)?, queue.density(q.h, x)?])?;
            }
            w.finish()
        }
        Scenario::PinnedQueue(p) => {
            let pinned = RegulatedQueue::new(&p.net.spec()?, &p.net.state()?)?.pinned(p.w, p.z)?;
            let sweep = sweep_or(cfg, 0.0, 5.0, 101)?;
            match p.h {
                Some(h) if h != p.w => {
                    let mut w = CsvOut::create(out, &["q", "pinned_transient_cdf", "pinned_transient_density"])?;
                    for x in sweep {
                        w.row(&[x, pinned.cdf(h, x)?, pinned.density(h, x)?])?;
                    }
                    w.finish()
                }
                _ => {
                    let mut w = CsvOut::create(out, &["q", "endpoint_cdf"])?;
                    for x in sweep {
                        w.row(&[x, pinned.endpoint_cdf(x)])?;
                    }
                    w.finish()
                }
            }
        }
        Scenario::Rbm(r) => {
            let mut w = CsvOut::create(out, &["q", "rbm_transient_cdf"])?;
            for x in sweep_or(cfg, 0.0, 5.0, 101)? {
                w.row(&[x, rbm_transient_cdf(r.theta, r.rho, r.v, r.t, x)?])?;
            }
            w.finish()
        }
        Scenario::Rbb(r) => {
            let mut w = CsvOut::create(out, &["q", "rbb_stationary_cdf"])?;
            for x in sweep_or(cfg, 0.0, 5.0, 101)? {
                w.row(&[x, rbb_stationary_cdf(r.theta, r.ar_rate, r.rho, x)?])?;
            }
            w.finish()
        }
        Scenario::Option(o) => {
            let (spec, contract) = option_parts(o)?;
            let theta = spec.theta();
            let spot = contract.spot;
            let mut w = CsvOut::create(out, &["spot", "bsm_price", "bsm_delta"])?;
            for s in sweep_or(cfg, 0.5 * spot, 1.5 * spot, 101)? {
                let k = OptionContract::new(contract.strike, contract.rate, contract.maturity, s)?;
                w.row(&[s, bsm_price(&k, theta)?, bsm_delta(&k, theta)?])?;
            }
            w.finish()
        }
        Scenario::Embedded(e) => {
            let kind = e.kind()?;
            let window = kind.window_limit();
            let kernel = kind.matched_kernel();
            let mut w = CsvOut::create(out, &["lag", "increment_variance"])?;
            for s in sweep_or(cfg, window / 100.0, window, 100)? {
                if !(s > 0.0 && s <= window) {
                    return Err(CliError::Config(format!("lag {s} outside (0, {window}]")));
                }
                w.row(&[s, kernel.variance(s)])?;
            }
            w.finish()
        }
    }
}

fn option_parts(o: &crate::config::OptionCfg) -> Result<(GbrSpec, OptionContract), CliError> {
    let spec = GbrSpec::new(o.s0, o.rho, RayParams::new(o.phi, o.delta, o.horizon)?)?;
    if !(o.u >= 0.0 && o.u < o.horizon) {
        return Err(CliError::Config(format!("u = {} must lie in [0, horizon)", o.u)));
    }
    if o.maturity > o.horizon - o.u {
        return Err(CliError::Config(format!(
            "maturity {} exceeds the remaining horizon {}",
            o.maturity,
            o.horizon - o.u
        )));
    }
    let contract = OptionContract::new(o.strike, o.rate, o.maturity, spec.conditioned_spot(o.u, o.x1))?;
    Ok((spec, contract))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulateOptions {
    pub full_paths: bool,
    pub execution: Execution,
}

/// What is recorded per path and grid point.
#[derive(Debug, Clone, Copy)]
enum Channels {
    /// The sampled value.
    Plain,
    /// Net input, queue level and lost potential output.
    Regulated { v: f64, reflection: Reflection },
    /// Price `spot · e^{value}`.
    Price { spot: f64 },
}

impl Channels {
    fn names(&self) -> &'static [&'static str] {
        match self {
            Channels::Plain => &["value"],
            Channels::Regulated { .. } => &["netinput", "queue", "lost"],
            Channels::Price { .. } => &["price"],
        }
    }

    fn summary_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        match self {
            Channels::Plain => h.extend(["mean", "variance"].map(String::from)),
            Channels::Regulated { .. } => h.extend(
                [
                    "netinput_mean",
                    "netinput_variance",
                    "queue_mean",
                    "queue_variance",
                    "queue_min",
                    "lost_mean",
                ]
                .map(String::from),
            ),
            Channels::Price { .. } => h.extend(["price_mean", "price_variance"].map(String::from)),
        }
        h
    }
}

/// Running mean, second moment and minimum per column (Welford).
struct ColumnStats {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    min: Vec<f64>,
}

impl ColumnStats {
    fn new(width: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
            min: vec![f64::INFINITY; width],
        }
    }

    fn push(&mut self, row: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for (j, &x) in row.iter().enumerate() {
            let d = x - self.mean[j];
            self.mean[j] += d / n;
            self.m2[j] += d * (x - self.mean[j]);
            self.min[j] = self.min[j].min(x);
        }
    }

    fn variance(&self, j: usize) -> f64 {
        if self.n > 1 {
            self.m2[j] / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationReport {
    pub n_paths: usize,
    pub n_points: usize,
    pub rows: usize,
}

/// Simulates the scenario on its grid and writes either a per-time summary
/// or, with `full_paths`, one row per path and time.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path, opts: SimulateOptions) -> Result<SimulationReport, CliError> {
    cfg.validate()?;
    let mc = cfg.mc.as_ref();
    let mc = McConfig::new(mc.map_or(DEFAULT_SIM_PATHS, |m| m.n_paths), mc.map_or(0, |m| m.seed))
        .with_execution(opts.execution);
    if mc.n_paths == 0 {
        return Err(CliError::Config("mc.n_paths must be positive".into()));
    }
    let grid = |end: f64| GridSpec::build(cfg.grid.as_ref(), end);
    let reflection = |kind: ReflectionCfg, theta: f64| match kind {
        ReflectionCfg::Grid => Reflection::GridPoints,
        ReflectionCfg::Exact => Reflection::BridgeMinima { variance_rate: theta },
    };
    match &cfg.scenario {
        Scenario::Ray(n) => {
            let gen = GaussianPathSampler::net_input(&n.spec()?, &n.state()?, grid(n.remaining())?)?;
            run(&gen, &mc, Channels::Plain, out, opts)
        }
        Scenario::Queue(q) => {
            let (spec, state) = (q.net.spec()?, q.net.state()?);
            let theta = RegulatedQueue::new(&spec, &state)?.law().variance_rate;
            let gen = GaussianPathSampler::net_input(&spec, &state, grid(q.net.remaining())?)?;
            let ch = Channels::Regulated {
                v: state.v,
                reflection: reflection(q.reflection, theta),
            };
            run(&gen, &mc, ch, out, opts)
        }
        Scenario::PinnedQueue(p) => {
            let (spec, state) = (p.net.spec()?, p.net.state()?);
            let theta = superpose(&spec).variance_rate;
            let gen = GaussianPathSampler::pinned(&spec, &state, p.w, p.z, grid(p.w)?)?;
            let ch = Channels::Regulated {
                v: state.v,
                reflection: reflection(p.reflection, theta),
            };
            run(&gen, &mc, ch, out, opts)
        }
        Scenario::Rbm(r) => {
            let gen = GaussianPathSampler::ray(SuperposedCov::motion(r.theta)?, grid(r.t)?)?.with_drift(r.rho)?;
            let ch = Channels::Regulated {
                v: nonneg_level(r.v)?,
                reflection: Reflection::BridgeMinima { variance_rate: r.theta },
            };
            run(&gen, &mc, ch, out, opts)
        }
        Scenario::Rbb(r) => {
            let kernel = SuperposedCov::new(r.theta, r.ar_rate)?;
            let gen = GaussianPathSampler::ray(kernel, grid(kernel.validity_limit())?)?.with_drift(r.rho)?;
            let ch = Channels::Regulated {
                v: nonneg_level(r.v)?,
                reflection: Reflection::BridgeMinima { variance_rate: r.theta },
            };
            run(&gen, &mc, ch, out, opts)
        }
        Scenario::Option(o) => {
            let (spec, contract) = option_parts(o)?;
            let single = SuperpositionSpec::single(spec.ray, spec.rho)?;
            let state = ConditionedState::new(o.u, vec![o.x1], 0.0)?;
            let gen = GaussianPathSampler::net_input(&single, &state, grid(o.maturity)?)?;
            run(&gen, &mc, Channels::Price { spot: contract.spot }, out, opts)
        }
        Scenario::Embedded(e) => {
            let kind = e.kind()?;
            let gen = EmbeddedSampler::new(&kind, grid(2.0 * kind.window_limit())?)?;
            run(&gen, &mc, Channels::Plain, out, opts)
        }
    }
}

fn nonneg_level(v: f64) -> Result<f64, CliError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("queue level v = {v} must be non-negative")))
    }
}

fn run<G: PathGenerator>(
    gen: &G,
    mc: &McConfig,
    channels: Channels,
    out: &Path,
    opts: SimulateOptions,
) -> Result<SimulationReport, CliError> {
    let grid: &TimeGrid = gen.grid();
    let times = grid.points();
    let width = times.len();
    let k = channels.names().len();
    let mut stats = ColumnStats::new(width * k);
    let mut full = if opts.full_paths {
        let mut header = vec!["path", "t"];
        header.extend_from_slice(channels.names());
        Some(CsvOut::create(out, &header)?)
    } else {
        None
    };
    let mut failure: Option<CliError> = None;
    let mut derived = vec![0.0; width * k];
    stream_blocks(gen, mc, |first, rows| {
        for (i, path) in rows.chunks(width).enumerate() {
            if failure.is_some() {
                return;
            }
            let index = first + i;
            match channels {
                Channels::Plain => derived.copy_from_slice(path),
                Channels::Price { spot } => {
                    for (d, x) in derived.iter_mut().zip(path) {
                        *d = spot * x.exp();
                    }
                }
                Channels::Regulated { v, reflection } => {
                    match regulate_path(path, times, v, reflection, mc.seed, index) {
                        Ok(r) => {
                            for j in 0..width {
                                derived[3 * j] = path[j];
                                derived[3 * j + 1] = r.q[j];
                                derived[3 * j + 2] = r.l[j];
                            }
                        }
                        Err(e) => {
                            failure = Some(e.into());
                            return;
                        }
                    }
                }
            }
            stats.push(&derived);
            if let Some(w) = full.as_mut() {
                for j in 0..width {
                    let mut vals = vec![times[j]];
                    vals.extend_from_slice(&derived[k * j..k * (j + 1)]);
                    if let Err(e) = w.labeled_row(index, &vals) {
                        failure = Some(e);
                        return;
                    }
                }
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let rows = match full {
        Some(w) => w.finish()?,
        None => {
            let header = channels.summary_header();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut w = CsvOut::create(out, &header)?;
            for (j, &t) in times.iter().enumerate() {
                let c = |m: usize| k * j + m;
                let row = match channels {
                    Channels::Plain | Channels::Price { .. } => vec![t, stats.mean[c(0)], stats.variance(c(0))],
                    Channels::Regulated { .. } => vec![
                        t,
                        stats.mean[c(0)],
                        stats.variance(c(0)),
                        stats.mean[c(1)],
                        stats.variance(c(1)),
                        stats.min[c(1)],
                        stats.mean[c(2)],
                    ],
                };
                w.row(&row)?;
            }
            w.finish()?
        }
    };
    Ok(SimulationReport {
        n_paths: mc.n_paths,
        n_points: width,
        rows,
    })
}

/// Where the verification seed came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSource {
    Default,
    Flag,
    Env(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRequest {
    pub suite: Suite,
    pub n_paths: usize,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub execution: Execution,
}

impl VerifyRequest {
    /// Resolves the seed from the flag, then the environment, then the default.
    pub fn resolve_seed(flag: Option<u64>, env: Option<String>) -> Result<(u64, SeedSource), CliError> {
        if let Some(s) = flag {
            return Ok((s, SeedSource::Flag));
        }
        match env {
            Some(text) => {
                let s = text.trim().parse::<u64>().map_err(|_| {
                    CliError::Config(format!("{} must be an unsigned integer, got `{text}`", crate::SEED_ENV))
                })?;
                Ok((s, SeedSource::Env(text)))
            }
            None => Ok((VerifyConfig::DEFAULT_SEED, SeedSource::Default)),
        }
    }
}

/// Runs the requested suite, writing one line per check to `report`.
/// Fails with [`CliError::VerificationFailed`] if any check fails.
pub fn cmd_verify<W: Write>(req: &VerifyRequest, report: &mut W) -> Result<usize, CliError> {
    if req.n_paths < 100 {
        return Err(CliError::Config(format!("--paths must be at least 100, got {}", req.n_paths)));
    }
    let source = match &req.seed_source {
        SeedSource::Default => "default".to_string(),
        SeedSource::Flag => "--seed".to_string(),
        SeedSource::Env(v) => format!("{}={v}", crate::SEED_ENV),
    };
    writeln!(
        report,
        "verify suite={} paths={} seed={} (seed from {source}) execution={:?}",
        req.suite.name(),
        req.n_paths,
        req.seed,
        req.execution
    )?;
    let cfg = VerifyConfig {
        n_paths: req.n_paths,
        seed: req.seed,
        execution: req.execution,
    };
    let started = std::time::Instant::now();
    let outcomes = run_suite(req.suite, &cfg)?;
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    for o in &outcomes {
        writeln!(report, "{o}")?;
    }
    writeln!(
        report,
        "{} checks, {} failed, {:.1} s",
        outcomes.len(),
        failed,
        started.elapsed().as_secs_f64()
    )?;
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(outcomes.len())
}
