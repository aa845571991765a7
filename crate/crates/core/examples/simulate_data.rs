//! Draws censored lifetimes from a step-down hazard and summarizes them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spath_hazard::cli::write_dataset;
use spath_hazard::survdata::{simulate_piecewise_exponential, PiecewiseConstantHazard};

fn main() -> spath_hazard::Result<()> {
    let hazard = PiecewiseConstantHazard::step_down();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let data = simulate_piecewise_exponential(&hazard, 100, 3.0, &mut rng)?;
    println!(
        "{} records, {} complete, {} censored at tau = {}",
        data.n_total(),
        data.n_complete(),
        data.censored_count(),
        data.tau()
    );
    let g = data.ttt();
    for u in [0.5, 1.0, 2.0, 3.0, 6.0] {
        println!("total time on test g({u}) = {:.3}", g.eval(u));
    }
    let csv = write_dataset(data.records(), 0);
    println!("\nfirst rows of the CSV form:");
    for line in csv.lines().take(6) {
        println!("{line}");
    }
    Ok(())
}
