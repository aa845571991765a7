//! S-paths against set partitions for growing sample sizes.

use spath_hazard::cli::count_row;

fn main() -> spath_hazard::Result<()> {
    println!("{:>3} {:>22} {:>28} {:>9}", "n", "paths", "partitions", "ratio");
    for n in [1, 3, 5, 7, 10, 15, 20, 30, 50] {
        let row = count_row(n)?;
        println!("{:>3} {:>22} {:>28} {:>9}", n, row.paths, row.partitions, row.ratio_text());
    }
    Ok(())
}
