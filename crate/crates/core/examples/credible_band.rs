//! Pointwise credible band from draws of the full random hazard: the
//! latent jumps plus a truncated draw of the remaining measure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spath_hazard::samplers::{credible_band, uniform_grid, ChainConfig};
use spath_hazard::survdata::{simulate_piecewise_exponential, PiecewiseConstantHazard};
use spath_hazard::{PosteriorModel, PriorSpec, SamplerKind};

fn main() -> spath_hazard::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = simulate_piecewise_exponential(&PiecewiseConstantHazard::step_down(), 200, 3.0, &mut rng)?;
    let model = PosteriorModel::new(data, PriorSpec::gamma_process(6.0))?;

    let config = ChainConfig::new(SamplerKind::Ap, 1000, 500, 8, uniform_grid(6.0, 13));
    let band = credible_band(&model, &config, 1e-3, 0.9)?;
    println!("   t   5%      median  95%");
    for g in 0..band.grid.len() {
        println!("{:>4.1}  {:.4}  {:.4}  {:.4}", band.grid[g], band.lower[g], band.median[g], band.upper[g]);
    }
    Ok(())
}
