//! Content-based recommendations for NFT collections.
//!
//! Two complementary models rank the tokens of a collection against a
//! reference token:
//!
//! * **traits**: cosine similarity of count-vectorized trait strings
//!   ([`similarity`]).
//! * **rarity**: closeness of total trait-rarity scores, where a trait held
//!   by `c` of `N` tokens scores `N / c` ([`rarity`]).
//!
//! [`evaluate`] places both models' outputs on both metric axes for
//! side-by-side comparison. Collections come from JSON dumps or a
//! rate-limited OpenSea-compatible API ([`ingest`]) and are compiled into an
//! immutable, persistable [`Index`]. The [`server`] module exposes the index
//! over a read-only HTTP API and [`cli`] drives everything from the `recsys`
//! binary.
//!
//! ```no_run
//! use nft_recsys::{ingest, Index, ModelSelection, Scope};
//! use std::path::Path;
//!
//! let collection = ingest::load_collection(Path::new("assets.json"), ingest::InputFormat::OpenseaAssets)?;
//! let index = Index::build(&collection, Scope::Local)?;
//! let reference = &collection.tokens()[0].token_ref;
//! for list in nft_recsys::recommend(reference, ModelSelection::Both, 10, &index)? {
//!     println!("{}: {:?}", list.model, list.results);
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod evaluate;
pub mod index;
pub mod ingest;
pub mod model;
pub mod rarity;
pub mod recommend;
pub mod server;
pub mod similarity;
pub mod synth;
pub mod topk;

pub use evaluate::{cross_evaluate, summary_stats, EvaluationFrame};
pub use index::Index;
pub use model::{parse_token_ref, Collection, Scope, Token, TokenRef, Trait};
pub use recommend::{recommend, Model, ModelSelection, RankedRecommendation, RecommendationList, DEFAULT_K};
