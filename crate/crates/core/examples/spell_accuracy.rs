//! Spelling accuracy of one codebook on the AWGN refractory channel, with
//! the characters the decoder confuses most often.
//!
//! cargo run --release --example spell_accuracy -- [sigma2] [L]

use p300_fsc::codebook::{gen_mbc, gen_rcp, GridLayout};
use p300_fsc::rate::maxentropic_source;
use p300_fsc::sim::run_experiment;
use p300_fsc::{ChannelSpec, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sigma2: f64 = args.first().map_or(Ok(1.0), |s| s.parse())?;
    let l: usize = args.get(1).map_or(Ok(1), |s| s.parse())?;
    let channel = ChannelSpec::awgn(l, sigma2)?;

    for book in [gen_mbc(&maxentropic_source(l.max(1))?, 36, 60, 1)?, gen_rcp(GridLayout::default(), 60, 1)?] {
        let cfg = SimConfig {
            runs: 5000,
            confusion: true,
            ..SimConfig::new(book, channel, 2)
        };
        let rep = run_experiment(&cfg)?;
        println!(
            "{:<8} accuracy {:.4}  95% CI [{:.4}, {:.4}]",
            rep.codebook, rep.accuracy, rep.wilson_ci95.0, rep.wilson_ci95.1
        );
        let m = rep.confusion.unwrap_or_default();
        let mut errors: Vec<(u64, usize, usize)> = (0..m.len())
            .flat_map(|i| (0..m.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (m[i][j], i, j))
            .collect();
        errors.sort_unstable_by(|a, b| b.cmp(a));
        for (count, i, j) in errors.into_iter().take(3) {
            println!("         {i:>2} read as {j:>2}: {count}");
        }
    }
    Ok(())
}
