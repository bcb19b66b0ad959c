//! Simulated information rate against exact enumeration on short blocks,
//! for the noiseless-optimal source over binary symmetric noise.

use p300_fsc::gbaa::estimate_rate;
use p300_fsc::rate::{brute_force_mi, maxentropic_source};
use p300_fsc::{ChannelSpec, ChannelState};

fn main() -> p300_fsc::Result<()> {
    let source = maxentropic_source(1)?;
    println!("eps    I12/12   12*I12-11*I11   simulated (+- se)");
    for eps in [0.0, 0.01, 0.05, 0.1, 0.2, 0.3] {
        let channel = ChannelSpec::bsc(1, eps)?;
        let i12 = brute_force_mi(&source, &channel, 12, ChannelState::Ground)?;
        let i11 = brute_force_mi(&source, &channel, 11, ChannelState::Ground)?;
        let est = estimate_rate(&source, &channel, 200_000, 1)?;
        println!(
            "{eps:<5}  {i12:.4}   {:.4}          {:.4} (+- {:.4})",
            12.0 * i12 - 11.0 * i11,
            est.rate,
            est.std_err
        );
    }
    Ok(())
}
