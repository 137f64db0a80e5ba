//! Build an index over a handful of tokens and ask both models for
//! recommendations.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use nft_recsys::model::{Collection, Scope, Token, TokenRef, Trait};
use nft_recsys::recommend::{recommend, render_json, render_table, ModelSelection};
use nft_recsys::Index;

const CONTRACT: &str = "0xbc4ca0eda7647a8ab7c2061c2e118a18a936f13d";

fn token(id: u32, traits: &[(&str, &str)]) -> Token {
    let traits = traits.iter().map(|(t, v)| Trait::new(*t, *v).unwrap()).collect();
    Token::new(TokenRef::new(CONTRACT, &id.to_string()).unwrap(), traits)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens = vec![
        token(0, &[("Background", "Orange"), ("Fur", "Black"), ("Eyes", "Bored"), ("Hat", "King's Crown")]),
        token(1, &[("Background", "Blue"), ("Fur", "Black"), ("Eyes", "Bored")]),
        token(2, &[("Background", "Orange"), ("Fur", "Gold"), ("Eyes", "Laser Eyes")]),
        token(3, &[("Background", "Orange"), ("Fur", "Black"), ("Eyes", "Sleepy"), ("Hat", "Beanie")]),
        token(4, &[("Background", "Purple"), ("Fur", "Zombie"), ("Eyes", "Laser Eyes"), ("Hat", "King's Crown")]),
        token(5, &[]),
    ];
    let collection = Collection::new(CONTRACT, Some("Quickstart".into()), tokens)?;
    let index = Index::build(&collection, Scope::Local)?;

    let reference = TokenRef::new(CONTRACT, "0")?;
    let lists = recommend(&reference, ModelSelection::Both, 3, &index)?;
    print!("{}", render_table(&lists));
    println!("{}", render_json(&lists));
    Ok(())
}
