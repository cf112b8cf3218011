//! Run every campaign mode on one program and print a line per run.
//!
//!     cargo run --release --example ablation -- corpus/bugbench.dmir [execs] [seeds]

use std::sync::Arc;
use std::time::Instant;

use paramfuzz::fuzzer::{run_campaign, CampaignConfig, Mode};
use paramfuzz::{descgen, dmir, extractor, relations, vkernel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).ok_or("usage: ablation <file.dmir> [execs] [seeds]")?;
    let execs: u64 = args.get(2).map_or(Ok(100_000), |s| s.parse())?;
    let seeds: u64 = args.get(3).map_or(Ok(5), |s| s.parse())?;

    let p = Arc::new(dmir::parse(&std::fs::read_to_string(path)?)?);
    let st = vkernel::boot(&p)?;
    let g = descgen::generate(&p, &extractor::build_inventory(&p), &relations::relate(&st))?;
    for mode in Mode::ALL {
        for seed in 1..=seeds {
            let cfg = CampaignConfig {
                mode,
                budget_execs: execs,
                seed,
                ..CampaignConfig::default()
            };
            let t = Instant::now();
            let c = run_campaign(p.clone(), &g.descriptors, &g.meta, &cfg)?;
            println!(
                "{:<17} seed={seed} {:>5.2}s edges={:<3} corpus={:<3} titles={:?}",
                mode.as_str(),
                t.elapsed().as_secs_f64(),
                c.report.edges,
                c.report.corpus_size,
                c.report.titles
            );
        }
    }
    Ok(())
}
