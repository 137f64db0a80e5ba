//! Parse both supported dump formats and print the normalized documents.

use std::path::Path;

use nft_recsys::ingest::{load_collection, InputFormat};
use nft_recsys::model::{trait_document, Scope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for (file, format) in [
        ("opensea_assets_3.json", InputFormat::OpenseaAssets),
        ("erc721_metadata.json", InputFormat::Erc721Metadata),
    ] {
        let c = load_collection(&fixtures.join(file), format)?;
        println!("{file} ({format}): {} tokens, contract {}", c.total_supply(), c.contract());
        for t in c.tokens() {
            println!("  {:<4} {:?}", t.token_ref.token_id(), trait_document(t, Scope::Local));
        }
    }

    match load_collection(&fixtures.join("opensea_duplicate.json"), InputFormat::OpenseaAssets) {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("opensea_duplicate.json rejected: {e}"),
    }
    Ok(())
}
