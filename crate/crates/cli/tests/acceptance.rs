//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! statistic, its pinned tolerance and the wall time against its budget.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use brownian_ray::options::{bsm_price, discounted_expected_payoff, GbrSpec, OptionContract};
use brownian_ray::process::{superpose, ConditionedState, RayComponent, RayParams, SuperpositionSpec, ThetaTau};
use brownian_ray::sampler::{EmbeddedKind, McConfig, PeriodicBridge};
use brownian_ray::verify::{
    boundary_violations, bridge_limit_gap, canonical_queue_scenarios, canonical_round_trip_error,
    covariance_pair_coverage, embedded_window_deviation, endpoint_mean_comparison, hedge_curve,
    motion_reduction_gap, periodic_sources_gap, pinned_invariance_mismatches, pinned_ks, posterior_cases,
    posterior_consistency, candidate_endpoint_mean, naive_weight_round_trip_error, quadrature_price, queue_ks,
    ReflectionKind,
};
use brownian_ray::Result;

const SEED: u64 = 20_110_917;
const N: usize = 100_000;

struct Line {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Line {
    Line { passed, detail }
}

fn mc(stream: u64) -> McConfig {
    McConfig::new(N, SEED + stream)
}

fn mixed_spec(rho: f64) -> Result<SuperpositionSpec> {
    SuperpositionSpec::new(
        vec![
            RayComponent::new(1.0, RayParams::new(1.0, 1.05, 1.0)?)?,
            RayComponent::new(0.7, RayParams::new(30.0, 100.0, 1.0)?)?,
        ],
        rho,
    )
}

fn gbm_like(rho: f64, theta: f64) -> Result<GbrSpec> {
    GbrSpec::new(100.0, rho, RayParams::from_theta_tau(ThetaTau::new(theta, 1e-9)?, 1.0)?)
}

fn round_trip() -> Result<Line> {
    let err = canonical_round_trip_error(1000, SEED)?;
    let naive = naive_weight_round_trip_error()?;
    Ok(check(
        err < 1e-12 && naive > 1e-6,
        format!("max rel. error {err:.3e} < 1e-12 over 1000 triples; (Δχ)² denominator error {naive:.3e} > 1e-6"),
    ))
}

fn covariance() -> Result<Line> {
    let kernels = [
        ("bridge-like", RayParams::new(1.0, 1.05, 1.0)?.kernel()),
        ("motion-like", RayParams::new(100.0, 100.0, 1.0)?.kernel()),
        ("mixed K=2", superpose(&mixed_spec(0.0)?)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, k)) in kernels.iter().enumerate() {
        let share = covariance_pair_coverage(*k, 1.0, &mc(10 + i as u64))?;
        ok &= share >= 0.95;
        parts.push(format!("{name} {share:.3}"));
    }
    Ok(check(ok, format!("share of pairs within 4 SE >= 0.95: {}", parts.join(", "))))
}

fn queue_transient() -> Result<Line> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, sc) in canonical_queue_scenarios()?.iter().enumerate() {
        let ks = queue_ks(sc, 1000, ReflectionKind::Exact, &mc(30 + i as u64))?;
        ok &= ks < 0.02;
        parts.push(format!("{} {ks:.4}", sc.name));
    }
    Ok(check(ok, format!("KS < 0.02 (1000-point grid, n = {N}): {}", parts.join(", "))))
}

fn reductions() -> Result<Line> {
    let motion = motion_reduction_gap(500, SEED)?;
    let bridge = bridge_limit_gap()?;
    let periodic = periodic_sources_gap()?;
    Ok(check(
        motion < 1e-12 && bridge < 1e-3 && periodic < 1e-15,
        format!("T = 0 rel. gap {motion:.3e} < 1e-12; t → Θ/T gap {bridge:.3e} < 1e-3; periodic sources gap {periodic:.3e} < 1e-15"),
    ))
}

fn boundaries() -> Result<Line> {
    let bad = boundary_violations(50, SEED)?;
    Ok(check(bad == 0, format!("{bad} violations over 50 sets × 200 levels (F(0) = 0, tail ≥ 1 - 1e-9, monotone)")))
}

fn pinned() -> Result<Line> {
    let mismatches = pinned_invariance_mismatches()?;
    let a = pinned_ks(0.3, &mc(40))?;
    let b = pinned_ks(0.6, &mc(41))?;
    Ok(check(
        mismatches == 0 && a < 0.02 && b < 0.02,
        format!("{mismatches} bitwise mismatches across (ρ, x); KS < 0.02: h = 0.3 {a:.4}, h = 0.6 {b:.4}"),
    ))
}

fn bayes() -> Result<Line> {
    let (mut mass, mut ltp) = (0.0_f64, 0.0_f64);
    for (spec, state, w, q) in posterior_cases()? {
        let (m, l) = posterior_consistency(&spec, &state, w, q)?;
        mass = mass.max(m);
        ltp = ltp.max(l);
    }
    Ok(check(
        mass < 1e-6 && ltp < 1e-5,
        format!("3 sets: |mass - 1| {mass:.3e} < 1e-6; total-probability rel. gap {ltp:.3e} < 1e-5"),
    ))
}

fn endpoint_mean() -> Result<Line> {
    let (quad, mean, se, theta) = endpoint_mean_comparison(&mc(50))?;
    let z = (quad - mean).abs() / se;
    let v = 0.3;
    let w1 = brownian_ray::queue::RegulatedQueue::new(&mixed_spec(0.0)?, &ConditionedState::new(0.0, vec![0.0, 0.0], v)?)?
        .pinned(1.0, -0.2)?
        .endpoint_mean()?;
    let candidate = candidate_endpoint_mean(theta, -0.2, v);
    Ok(check(
        z < 4.0,
        format!("quadrature {quad:.5} vs simulated {mean:.5}: {z:.2} SE < 4; info: candidate closed mean at w = 1 {candidate:.5} vs quadrature {w1:.5}"),
    ))
}

fn option_price() -> Result<Line> {
    let theta = 0.04;
    let canon = OptionContract::new(100.0, 0.05, 1.0, 100.0)?;
    let price = bsm_price(&canon, theta)?;
    let quad = quadrature_price(&canon, theta)?;
    let rn = gbm_like(canon.rate - theta / 2.0, theta)?;
    let draws = McConfig::new(1_000_000, SEED + 60);
    let mut worst: f64 = 0.0;
    for s0 in [80.0, 95.0, 100.0, 105.0, 120.0] {
        let k = OptionContract { spot: s0, ..canon };
        let (m, se) = discounted_expected_payoff(&GbrSpec { s0, ..rn }, 0.0, 0.0, &k, &draws)?;
        worst = worst.max((bsm_price(&k, theta)? - m).abs() / se);
    }
    let canonical_gap = (price - 10.4506).abs();
    let quad_gap = (price - quad).abs();
    Ok(check(
        canonical_gap < 5e-4 && quad_gap < 1e-8 && worst < 4.0,
        format!(
            "canonical {price:.6} (|gap| {canonical_gap:.2e} < 5e-4, quadrature gap {quad_gap:.1e} < 1e-8); \
             10^6-draw MC worst {worst:.2} SE < 4 over 5 spots"
        ),
    ))
}

fn hedging() -> Result<Line> {
    let canon = OptionContract::new(100.0, 0.05, 1.0, 100.0)?;
    let hedge_mc = McConfig::new(N / 5, SEED + 70);
    let (gbm, gbm_slope) = hedge_curve(&gbm_like(0.08, 0.04)?, &canon, &hedge_mc)?;
    let ar_spec = GbrSpec::new(100.0, 0.08, RayParams::new(0.044, 1.1, 1.0)?)?;
    let (ar, ar_slope) = hedge_curve(&ar_spec, &canon, &hedge_mc)?;
    let strictly = |s: &[brownian_ray::options::HedgeStats]| s.windows(2).all(|w| w[1].rms < w[0].rms);
    let rms = |s: &[brownian_ray::options::HedgeStats]| {
        s.iter().map(|x| format!("{:.3}", x.rms)).collect::<Vec<_>>().join(" > ")
    };
    Ok(check(
        strictly(&gbm) && strictly(&ar) && (gbm_slope + 0.5).abs() < 0.15,
        format!(
            "RMS over 16/32/64/128 steps, GBM limit {} (slope {gbm_slope:.3}, |slope + 0.5| < 0.15), \
             δ = 1.1Δ {} (slope {ar_slope:.3})",
            rms(&gbm),
            rms(&ar)
        ),
    ))
}

fn embedded() -> Result<Line> {
    let kind = EmbeddedKind::PeriodicBridge(PeriodicBridge::new(1.0, 1.0)?);
    let a = embedded_window_deviation(&kind, 0.3, &mc(20))?;
    let b = embedded_window_deviation(&kind, 1.85, &mc(21))?;
    Ok(check(
        a < 4.0 && b < 4.0,
        format!("max |dev|/SE < 4: anchor 0.3 {a:.2}, anchor 1.85 {b:.2}"),
    ))
}

fn determinism() -> Result<Line> {
    let dir = tempfile::TempDir::new().expect("temp dir");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": "queue", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 1.05}, {"weight": 0.7, "phi": 30.0, "delta": 100.0}],
            "rho": -0.1, "state": {"u": 0.2, "x": [0.3, -0.4], "v": 0.5}, "h": 0.7,
            "grid": {"points": 200}, "mc": {"n_paths": 5000, "seed": 12}}"#,
    )
    .expect("write config");
    let runs: [&[&str]; 5] = [&[], &[], &["--threads", "1"], &["--threads", "4"], &["--sequential"]];
    let mut outputs = Vec::new();
    for (i, extra) in runs.iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_bray"))
            .args(*extra)
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("bray runs")
            .status;
        if !status.success() {
            return Ok(check(false, format!("simulate run {i} exited with {status}")));
        }
        outputs.push(std::fs::read(&out).expect("read output"));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(check(
        same,
        format!(
            "{} runs (default twice, --threads 1, --threads 4, --sequential), {} bytes each, byte-identical: {same}",
            outputs.len(),
            outputs[0].len()
        ),
    ))
}

type Criterion = (u32, &'static str, u64, fn() -> Result<Line>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "canonical round trip", 1, round_trip),
        (2, "covariance law of sampled rays", 30, covariance),
        (3, "queue transient CDF", 360, queue_transient),
        (4, "reduction identities", 1, reductions),
        (5, "boundary values and monotonicity", 5, boundaries),
        (6, "pinned-case invariance", 120, pinned),
        (7, "Bayes consistency", 30, bayes),
        (8, "endpoint mean", 60, endpoint_mean),
        (9, "option pricing", 30, option_price),
        (10, "hedging replication", 120, hedging),
        (11, "embedded-process stationarity", 30, embedded),
        (12, "determinism", 10, determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (passed, detail) = match result {
            Ok(l) => (l.passed && in_time, l.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!(
            "[{}] {id:>2} {name}: {detail} [{:.1} s, budget {budget} s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
