//! Generate one codebook of each kind and compare their structure.
//! Writes the CSVs to the directory given as the first argument, if any.

use std::path::PathBuf;

use p300_fsc::codebook::{export_codebook, gen_cbp, gen_mbc, gen_min_dist, gen_rcp, min_gap_of, GridLayout};
use p300_fsc::rate::maxentropic_source;
use p300_fsc::ChannelState;

fn main() -> p300_fsc::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let (n, seed) = (72, 42);
    let books = [
        gen_mbc(&maxentropic_source(1)?, 36, n, seed)?,
        gen_mbc(&maxentropic_source(2)?, 36, n, seed)?,
        gen_rcp(GridLayout::default(), n, seed)?,
        gen_cbp(n, 2, seed)?,
        gen_min_dist(36, n, 12, 500, seed)?,
    ];

    println!("kind          flashes/row  min gap  min dist  distinct z (L=1, L=2)");
    for book in &books {
        let flashes = book.rows().iter().flatten().filter(|&&b| b == 1).count() as f64 / 36.0;
        let gap = book.rows().iter().filter_map(|r| min_gap_of(r)).min();
        println!(
            "{:<13} {flashes:>11.1}  {:>7}  {:>8}  {}, {}",
            book.kind.label(),
            gap.map_or("-".into(), |g| g.to_string()),
            book.min_distance(),
            book.distinct_responses(1, ChannelState::Ground)?,
            book.distinct_responses(2, ChannelState::Ground)?,
        );
        if let Some(dir) = &out_dir {
            export_codebook(book, &dir.join(format!("{}.csv", book.kind.label())))?;
        }
    }
    Ok(())
}
