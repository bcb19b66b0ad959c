//! Optimize a Markov input for the refractory channel with AWGN.
//!
//! cargo run --release --example gbaa_awgn -- [L] [sigma2] [order]

use p300_fsc::rate::{fixed_point_a, noiseless_rate};
use p300_fsc::{gbaa, ChannelSpec, GbaaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let l: usize = args.first().map_or(Ok(1), |s| s.parse())?;
    let sigma2: f64 = args.get(1).map_or(Ok(0.5), |s| s.parse())?;
    let order: usize = args.get(2).map_or(Ok(l.max(1)), |s| s.parse())?;

    let channel = ChannelSpec::awgn(l, sigma2)?;
    let cfg = GbaaConfig::new(order, 7);
    let out = gbaa::gbaa_optimize(&channel, &cfg)?;

    println!("iter  rate     std_err");
    for (i, r) in out.trace.iter().enumerate() {
        let mark = if i == out.best_iter { " *" } else { "" };
        println!("{i:>4}  {:.5}  {:.5}{mark}", r.rate, r.std_err);
    }
    println!();
    println!("noiseless bound   {:.5}", noiseless_rate(l).rate);
    println!("P(1 | all zero)   {:.5}  (a* = {:.5})", out.source.p_one(0), fixed_point_a(l));
    println!("source:\n{}", out.source.to_text());
    Ok(())
}
