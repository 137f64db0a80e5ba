//! Count vectors and cosine similarity on raw trait documents.

use nft_recsys::similarity::{build_vocabulary, cosine, vectorize, CountMatrix};

fn main() {
    let docs = vec![
        vec!["fur::black", "eyes::bored"],
        vec!["eyes::bored", "hat::beanie"],
        vec!["fur::black", "eyes::bored"],
        vec!["mouth::grin"],
        vec![],
    ];
    let vocab = build_vocabulary(&docs);
    println!("vocabulary: {:?}", vocab.terms());

    let a = vectorize(&docs[0], &vocab).unwrap();
    let b = vectorize(&docs[1], &vocab).unwrap();
    println!("cosine(doc0, doc1) = {}", cosine(&a, &b));
    println!("cosine(doc0, doc0) = {}", cosine(&a, &a));

    let matrix = CountMatrix::build(&docs, &vocab).unwrap();
    for i in 0..matrix.len() {
        let row = matrix.similarity_row(i).unwrap();
        let cells: Vec<String> = row.iter().map(|s| format!("{s:.3}")).collect();
        println!("row {i}: [{}]", cells.join(", "));
    }
}
