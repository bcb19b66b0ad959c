//! Step an input sequence through the refractory state machine.
//!
//! cargo run --example fsm_trace -- 1101001 2

use p300_fsc::channel::fsm_run;
use p300_fsc::ChannelState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let x: Vec<u8> = args
        .first()
        .map_or("110100110001", String::as_str)
        .bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(format!("not a bit: {}", b as char)),
        })
        .collect::<Result<_, _>>()?;
    let l: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;

    let (z, states) = fsm_run(&x, ChannelState::Ground, l)?;
    println!("t   x  state    z");
    for (t, (xt, zt)) in x.iter().zip(&z).enumerate() {
        let s = match states[t] {
            ChannelState::Ground => "G".to_string(),
            ChannelState::Refractory(k) => format!("R{k}"),
        };
        println!("{t:<3} {xt}  {s:<8} {zt}");
    }
    Ok(())
}
