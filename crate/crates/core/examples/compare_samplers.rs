//! Replicated runs of the three samplers on one dataset. The spread of the
//! estimates across replications shows how fast each sampler mixes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spath_hazard::samplers::{compare_samplers, ChainConfig};
use spath_hazard::survdata::{simulate_piecewise_exponential, PiecewiseConstantHazard};
use spath_hazard::{PosteriorModel, PriorSpec, SamplerKind};

fn main() -> spath_hazard::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let data = simulate_piecewise_exponential(&PiecewiseConstantHazard::step_down(), 100, 3.0, &mut rng)?;
    let model = PosteriorModel::new(data, PriorSpec::gamma_process(6.0))?;

    let base = ChainConfig::new(SamplerKind::Ap, 1000, 2000, 20, Vec::new());
    let rows = compare_samplers(&model, 50, &base, &SamplerKind::ALL, &[0.5, 0.99, 1.01, 2.0])?;
    println!("   t   sampler    mean      se");
    for r in rows {
        println!("{:>5} {:>6}  {:.4}  {:.4}", r.t, r.sampler.to_string(), r.mean, r.se.unwrap_or(f64::NAN));
    }
    Ok(())
}
