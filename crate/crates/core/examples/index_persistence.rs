//! Save an index to disk, load it back and check that queries agree.

use nft_recsys::model::Scope;
use nft_recsys::recommend::{recommend, render_json, ModelSelection};
use nft_recsys::synth::{generate, SynthConfig};
use nft_recsys::Index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let collection = generate(&SynthConfig::bayc_like(1_000, 3));
    let index = Index::build(&collection, Scope::Local)?;

    let dir = std::env::temp_dir().join(format!("recsys-index-{}", std::process::id()));
    index.save(&dir)?;
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        println!("{:>10} bytes  {}", entry.metadata()?.len(), entry.file_name().to_string_lossy());
    }

    let loaded = Index::load(&dir)?;
    assert_eq!(loaded, index);
    let r = &collection.tokens()[42].token_ref;
    let before = render_json(&recommend(r, ModelSelection::Both, 5, &index)?);
    let after = render_json(&recommend(r, ModelSelection::Both, 5, &loaded)?);
    assert_eq!(before, after);
    println!("reloaded index answers identically for {r}");

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
