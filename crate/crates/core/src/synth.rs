//! Seeded synthetic collections for demos, benchmarks and property tests.
//!
//! Trait values are drawn with Zipf-like skew, so a handful of values are
//! common and a long tail is rare, and optional trait types are sometimes
//! absent. The same config and seed always produce the same collection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Collection, Token, TokenRef, Trait};

pub const SYNTH_CONTRACT: &str = "0xbc4ca0eda7647a8ab7c2061c2e118a18a936f13d";

#[derive(Debug, Clone, PartialEq)]
pub struct TraitProfile {
    pub name: String,
    /// Number of distinct values.
    pub values: usize,
    /// Probability that a token carries this trait type at all.
    pub presence: f64,
}

impl TraitProfile {
    pub fn new(name: impl Into<String>, values: usize, presence: f64) -> Self {
        Self {
            name: name.into(),
            values,
            presence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub contract: String,
    pub tokens: usize,
    pub traits: Vec<TraitProfile>,
    /// Weight of the `r`-th value is `1 / r^zipf_exponent`.
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Seven trait types with 20 to 170 values each, some optional.
    pub fn bayc_like(tokens: usize, seed: u64) -> Self {
        Self {
            contract: SYNTH_CONTRACT.to_string(),
            tokens,
            traits: vec![
                TraitProfile::new("Background", 20, 1.0),
                TraitProfile::new("Fur", 36, 1.0),
                TraitProfile::new("Eyes", 46, 1.0),
                TraitProfile::new("Mouth", 66, 1.0),
                TraitProfile::new("Clothes", 88, 0.8),
                TraitProfile::new("Hat", 120, 0.77),
                TraitProfile::new("Earring", 170, 0.3),
            ],
            zipf_exponent: 0.9,
            seed,
        }
    }

    /// A small random profile: up to `max_types` trait types with up to
    /// `max_values` values each.
    pub fn random(tokens: usize, max_types: usize, max_values: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let types = rng.random_range(1..=max_types.max(1));
        let traits = (0..types)
            .map(|t| {
                TraitProfile::new(
                    format!("Type {t}"),
                    rng.random_range(1..=max_values.max(1)),
                    rng.random_range(0.3..=1.0),
                )
            })
            .collect();
        Self {
            contract: SYNTH_CONTRACT.to_string(),
            tokens,
            traits,
            zipf_exponent: rng.random_range(0.0..1.5),
            seed,
        }
    }
}

/// Generates `cfg.tokens` tokens with ids `0..tokens`.
pub fn generate(cfg: &SynthConfig) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pickers: Vec<WeightedIndex<f64>> = cfg
        .traits
        .iter()
        .map(|p| {
            let weights = (1..=p.values.max(1)).map(|r| 1.0 / (r as f64).powf(cfg.zipf_exponent));
            WeightedIndex::new(weights).expect("weights are positive")
        })
        .collect();
    let tokens = (0..cfg.tokens)
        .map(|i| {
            let traits = cfg
                .traits
                .iter()
                .zip(&pickers)
                .filter_map(|(p, pick)| {
                    if !rng.random_bool(p.presence.clamp(0.0, 1.0)) {
                        return None;
                    }
                    let v = pick.sample(&mut rng);
                    Some(Trait::new(p.name.clone(), format!("{} {v}", p.name)).expect("non-empty type"))
                })
                .collect();
            let mut tok = Token::new(
                TokenRef::new(&cfg.contract, &i.to_string()).expect("synthetic refs are valid"),
                traits,
            );
            tok.name = Some(format!("Synthetic #{i}"));
            tok.image_url = Some(format!("ipfs://synthetic/{i}.png"));
            tok
        })
        .collect();
    Collection::new(&cfg.contract, Some("Synthetic Collection".into()), tokens).expect("ids are unique")
}

/// Same tokens in a seeded random order.
pub fn shuffled(c: &Collection, seed: u64) -> Collection {
    use rand::seq::SliceRandom;
    let mut tokens = c.tokens().to_vec();
    tokens.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Collection::new(c.contract(), c.name().map(str::to_string), tokens).expect("same refs stay unique")
}
