//! Place both models' recommendations on both metric axes and summarize
//! how each model scores on the other's metric.

use nft_recsys::evaluate::{cross_evaluate, summary_stats, write_csv};
use nft_recsys::model::Scope;
use nft_recsys::synth::{generate, SynthConfig};
use nft_recsys::Index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let collection = generate(&SynthConfig::bayc_like(5_000, 7));
    let index = Index::build(&collection, Scope::Local)?;
    let reference = collection.tokens()[1234].token_ref.clone();

    let frame = cross_evaluate(&reference, 10, &index)?;
    let mut csv = Vec::new();
    write_csv(&frame, &mut csv)?;
    print!("{}", String::from_utf8(csv)?);

    println!();
    println!("{:<14} {:>5} {:>12} {:>12} {:>12} {:>12}", "source", "rows", "cos mean", "cos sd", "rarity mean", "rarity sd");
    for (source, s) in summary_stats(&frame) {
        println!(
            "{:<14} {:>5} {:>12.4} {:>12.4} {:>12.2} {:>12.2}",
            source.as_str(),
            s.count,
            s.cosine_to_reference.mean,
            s.cosine_to_reference.stddev,
            s.total_rarity.mean,
            s.total_rarity.stddev
        );
    }
    Ok(())
}
