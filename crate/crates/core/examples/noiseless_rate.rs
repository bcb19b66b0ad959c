//! Noiseless capacity of the refractory channel for a range of L,
//! computed two ways, with the optimal one-probability a*.

use p300_fsc::rate::{entropy_rate, fixed_point_a, maxentropic_source, noiseless_rate, rll_capacity_perron};

fn main() -> p300_fsc::Result<()> {
    println!(" L   a*        rate      Perron    H(maxent)");
    for l in 0..=8 {
        let h = if l == 0 { 1.0 } else { entropy_rate(&maxentropic_source(l)?)? };
        println!(
            "{l:>2}   {:.6}  {:.6}  {:.6}  {:.6}",
            fixed_point_a(l),
            noiseless_rate(l).rate,
            rll_capacity_perron(l)?.rate,
            h
        );
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    println!("\nlog2(golden ratio) = {:.6}", phi.log2());
    Ok(())
}
