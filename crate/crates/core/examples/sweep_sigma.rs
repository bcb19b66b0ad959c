//! Accuracy of MBC(L) against the standard baselines over a noise grid.
//! Prints the tidy CSV table to stdout.
//!
//! cargo run --release --example sweep_sigma -- [runs] [L] [sigma2,...]

use p300_fsc::sim::{sweep, BookSpec, MbcSource, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let runs: usize = args.first().map_or(Ok(2000), |s| s.parse())?;
    let l: usize = args.get(1).map_or(Ok(1), |s| s.parse())?;
    let sigma2 = match args.get(2) {
        Some(list) => list.split(',').map(str::parse).collect::<Result<Vec<f64>, _>>()?,
        None => vec![0.5, 1.0, 2.0, 3.0, 5.0],
    };

    let spec = SweepSpec {
        sigma2,
        refractory: vec![l],
        books: vec![
            BookSpec::Mbc,
            BookSpec::Rcp,
            BookSpec::Cbp { min_gap: 2 },
            BookSpec::MinDist { weight: 10, trials: 200 },
        ],
        len: 60,
        runs,
        seed: 11,
        mbc: MbcSource::Gbaa { sample_len: 50_000, max_iters: 30 },
    };
    let table = sweep(&spec)?;
    print!("{}", table.to_csv());
    for (point, err) in &table.failures {
        eprintln!("{point}: {err}");
    }
    Ok(())
}
