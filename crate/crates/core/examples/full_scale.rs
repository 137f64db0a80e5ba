//! Index 10,000 synthetic tokens with a BAYC-like trait profile and time a
//! `both` query. Run with `--release` for representative numbers.

use std::time::Instant;

use nft_recsys::model::Scope;
use nft_recsys::recommend::{recommend, ModelSelection};
use nft_recsys::synth::{generate, SynthConfig};
use nft_recsys::Index;

fn peak_rss_mb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let kb: u64 = status.lines().find(|l| l.starts_with("VmHWM:"))?.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10_000);

    let t = Instant::now();
    let collection = generate(&SynthConfig::bayc_like(tokens, 2021));
    println!("generated {tokens} tokens in {:.2?}", t.elapsed());

    let t = Instant::now();
    let index = Index::build(&collection, Scope::Local)?;
    println!("indexed {} trait strings in {:.2?}", index.vocabulary().len(), t.elapsed());

    let mut worst = std::time::Duration::ZERO;
    for i in (0..tokens).step_by((tokens / 20).max(1)) {
        let t = Instant::now();
        let lists = recommend(&collection.tokens()[i].token_ref, ModelSelection::Both, 10, &index)?;
        worst = worst.max(t.elapsed());
        assert_eq!(lists.len(), 2);
    }
    println!("slowest k=10 both query: {worst:.2?}");
    if let Some(mb) = peak_rss_mb() {
        println!("peak resident memory: {mb} MB");
    }
    Ok(())
}
