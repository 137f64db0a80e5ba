//! Total rarity scores for a synthetic collection: the rarest tokens and
//! the rarest individual traits.

use nft_recsys::model::Scope;
use nft_recsys::rarity::{RarityReport, TraitFrequencyTable};
use nft_recsys::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let collection = generate(&SynthConfig::bayc_like(2_000, 42));
    let table = TraitFrequencyTable::build(&collection, Scope::Local);
    let report = RarityReport::build(&collection, &table)?;

    let mut ranked: Vec<_> = report.per_token.iter().collect();
    ranked.sort_by(|a, b| b.total.total_cmp(&a.total));
    println!("rarest tokens out of {}:", table.total_supply());
    for t in ranked.iter().take(5) {
        println!("  {:>10.3}  {}", t.total, t.token_ref);
    }

    let mut traits: Vec<_> = table.counts().iter().collect();
    traits.sort_by_key(|(s, c)| (**c, s.as_str()));
    println!("rarest traits:");
    for (s, c) in traits.iter().take(5) {
        println!("  {c:>4} tokens  {s}");
    }

    println!("first rows of the totals CSV:");
    let mut csv = Vec::new();
    report.write_totals_csv(&mut csv)?;
    for line in String::from_utf8(csv)?.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
