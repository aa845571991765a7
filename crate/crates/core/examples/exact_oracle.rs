//! Exact posterior-mean hazard for a small sample, summed over S-paths and
//! over set partitions.

use spath_hazard::posterior::{exact_hazard_curve, exact_path_distribution, partition_hazard_curve};
use spath_hazard::{PosteriorModel, PriorSpec, Record, SurvivalDataset};

fn main() -> spath_hazard::Result<()> {
    let records = [0.15, 0.4, 0.55, 1.2, 1.9, 2.6]
        .into_iter()
        .map(Record::complete)
        .chain([Record::censored(3.0), Record::censored(3.0)])
        .collect();
    let data = SurvivalDataset::from_records(records, 3.0)?;
    let model = PosteriorModel::new(data, PriorSpec::gamma_process(6.0))?;

    let mut dist = exact_path_distribution(&model)?;
    dist.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("most probable paths:");
    for (s, p) in dist.iter().take(5) {
        println!("  {s}  {p:.4}");
    }

    let times: Vec<f64> = (0..=12).map(|k| k as f64 * 0.5).collect();
    let by_path = exact_hazard_curve(&model, &times)?;
    let by_partition = partition_hazard_curve(&model, &times)?;
    println!("\n   t    paths        partitions");
    for ((t, a), b) in times.iter().zip(&by_path).zip(&by_partition) {
        println!("{t:>4.1}  {a:.10}  {b:.10}");
    }
    Ok(())
}
