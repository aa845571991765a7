//! Accelerated path sampler on simulated data, with batch-means errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spath_hazard::samplers::{run_chain, uniform_grid, ChainConfig};
use spath_hazard::survdata::{simulate_piecewise_exponential, PiecewiseConstantHazard};
use spath_hazard::{PosteriorModel, PriorSpec, SamplerKind};

fn main() -> spath_hazard::Result<()> {
    let truth = PiecewiseConstantHazard::step_down();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = simulate_piecewise_exponential(&truth, 500, 3.0, &mut rng)?;
    let model = PosteriorModel::new(data, PriorSpec::gamma_process(6.0))?;

    let config = ChainConfig::new(SamplerKind::Ap, 2000, 1000, 5, uniform_grid(6.0, 13));
    let run = run_chain(&model, &config)?;
    let c = &run.curve;
    println!(
        "n = {}, move rate {:.3}, mean blocks {:.1}",
        model.n(),
        run.diagnostics.move_rate,
        run.diagnostics.mean_blocks
    );
    println!("   t   estimate   mc_se    true");
    for g in 0..c.grid.len() {
        let t = c.grid[g];
        println!("{t:>4.1}  {:8.4}  {:7.4}  {:5.2}", c.estimate[g], c.mc_se[g], truth.hazard(t));
    }
    Ok(())
}
