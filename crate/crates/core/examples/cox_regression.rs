//! Proportional hazards with a decreasing baseline: posterior for the
//! regression coefficient and the baseline hazard.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spath_hazard::cox::{run_cox, CoxConfig};
use spath_hazard::samplers::uniform_grid;
use spath_hazard::survdata::{simulate_proportional_hazards, PiecewiseConstantHazard};
use spath_hazard::PriorSpec;

fn main() -> spath_hazard::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = simulate_proportional_hazards(&PiecewiseConstantHazard::step_down(), &[0.7], 200, 3.0, &mut rng, |r| {
        vec![StandardNormal.sample(r)]
    })?;

    let mut config = CoxConfig::new(3000, 1000, 31);
    config.grid = uniform_grid(6.0, 7);
    let run = run_cox(data, PriorSpec::gamma_process(6.0), &config)?;
    let th = &run.theta;
    println!(
        "theta: mean {:.3}, sd {:.3}, 95% interval [{:.3}, {:.3}] (true 0.7)",
        th.mean[0], th.sd[0], th.lower[0], th.upper[0]
    );
    println!("metropolis acceptance {:.2}, final step {:.3}", th.acceptance, th.final_step);
    println!("\nbaseline hazard:");
    let b = &run.baseline;
    for g in 0..b.grid.len() {
        println!("  t = {:.1}  {:.4} ± {:.4}", b.grid[g], b.estimate[g], b.mc_se[g]);
    }
    Ok(())
}
