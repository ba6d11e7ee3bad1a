use brownian_ray::process::{ConditionedState, RayParams, SuperpositionSpec};
use brownian_ray::queue::RegulatedQueue;
use brownian_ray::sampler::{regulated_endpoints, EmpiricalCdf, GaussianPathSampler, McConfig, Reflection, TimeGrid};

fn main() -> brownian_ray::Result<()> {
    let spec = SuperpositionSpec::single(RayParams::new(1.0, 1.05, 1.0)?, 0.0)?;
    let state = ConditionedState::initial(1, 0.2)?;
    let law = RegulatedQueue::new(&spec, &state)?.law();
    println!("P(Q(0.9) <= 0.5) = {}", law.cdf(0.9, 0.5));

    let grid = TimeGrid::uniform(0.9, 1000)?;
    let gen = GaussianPathSampler::net_input(&spec, &state, grid)?;
    let reflection = Reflection::BridgeMinima { variance_rate: law.variance_rate };
    let q = regulated_endpoints(&gen, 0.2, reflection, &McConfig::new(100_000, 7))?;
    let ecdf = EmpiricalCdf::new(q)?;
    println!("simulated          = {}", ecdf.eval(0.5));
    println!("KS distance        = {}", ecdf.ks_distance(|x| law.cdf(0.9, x)));
    Ok(())
}
