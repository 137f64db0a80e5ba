//! Top-k recommendations under the trait-similarity and rarity models.
//!
//! Both models stream one score per candidate through a bounded [`TopK`]
//! selector. Equal scores fall back to ascending numeric token id, then
//! ascending contract, so every query has exactly one answer. Cosines are
//! ranked by exact integer comparison, so mathematically equal scores always
//! reach the tie-break.

use std::cmp::Reverse;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::Index;
use crate::model::TokenRef;
use crate::similarity::{cosine_from_parts, ExactCosine};
use crate::topk::{Score, TopK};

/// Number of recommendations returned when no `k` is given.
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error("token {0} not found in the index")]
    NotFound(TokenRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Cosine similarity of trait count vectors; higher is better.
    Traits,
    /// Absolute difference of total rarity; lower is better.
    Rarity,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Traits => "traits",
            Model::Rarity => "rarity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelSelection {
    Traits,
    Rarity,
    #[default]
    Both,
}

impl ModelSelection {
    pub fn models(self) -> &'static [Model] {
        match self {
            ModelSelection::Traits => &[Model::Traits],
            ModelSelection::Rarity => &[Model::Rarity],
            ModelSelection::Both => &[Model::Traits, Model::Rarity],
        }
    }
}

impl FromStr for ModelSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "traits" => Ok(Self::Traits),
            "rarity" => Ok(Self::Rarity),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown model {other:?} (expected traits, rarity or both)")),
        }
    }
}

impl fmt::Display for ModelSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Traits => "traits",
            Self::Rarity => "rarity",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecommendation {
    pub rank: usize,
    #[serde(rename = "id")]
    pub token_ref: TokenRef,
    pub score: f64,
    #[serde(skip)]
    pub model: Option<Model>,
}

/// One model's result list; serializes to the shared result JSON shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub reference: TokenRef,
    pub model: Model,
    pub k: usize,
    pub results: Vec<RankedRecommendation>,
}

fn finish<K>(index: &Index, model: Model, picked: Vec<(K, u32, usize)>, score: impl Fn(&K) -> f64) -> Vec<RankedRecommendation> {
    picked
        .into_iter()
        .enumerate()
        .map(|(i, (key, _, row))| RankedRecommendation {
            rank: i + 1,
            token_ref: index.tokens()[row].id.clone(),
            score: score(&key),
            model: Some(model),
        })
        .collect()
}

fn reference_row(reference: &TokenRef, index: &Index) -> Result<usize, RecommendError> {
    index
        .row_of(reference)
        .ok_or_else(|| RecommendError::NotFound(reference.clone()))
}

/// The `k` tokens most cosine-similar to `reference`, excluding itself.
pub fn recommend_by_traits(
    reference: &TokenRef,
    k: usize,
    index: &Index,
) -> Result<Vec<RankedRecommendation>, RecommendError> {
    let row = reference_row(reference, index)?;
    let m = index.matrix();
    let dots = m.dot_row(row).expect("row of a known reference is in range");
    let sq_ref = m.squared_norm(row);
    let mut top = TopK::new(k);
    top.extend(dots.iter().enumerate().filter(|&(j, _)| j != row).map(|(j, &dot)| {
        let key = ExactCosine {
            dot,
            squared_norm: m.squared_norm(j),
        };
        (Reverse(key), index.tie_break_rank(j), j)
    }));
    Ok(finish(index, Model::Traits, top.into_sorted_vec(), |Reverse(c)| {
        cosine_from_parts(c.dot, sq_ref, c.squared_norm)
    }))
}

/// The `k` tokens whose total rarity is closest to the reference's.
pub fn recommend_by_rarity(
    reference: &TokenRef,
    k: usize,
    index: &Index,
) -> Result<Vec<RankedRecommendation>, RecommendError> {
    let row = reference_row(reference, index)?;
    let target = index.total_rarity(row);
    let mut top = TopK::new(k);
    top.extend(
        index
            .totals()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != row)
            .map(|(j, &t)| (Score((t - target).abs()), index.tie_break_rank(j), j)),
    );
    Ok(finish(index, Model::Rarity, top.into_sorted_vec(), |Score(s)| *s))
}

pub fn recommend_with(
    reference: &TokenRef,
    model: Model,
    k: usize,
    index: &Index,
) -> Result<RecommendationList, RecommendError> {
    let results = match model {
        Model::Traits => recommend_by_traits(reference, k, index)?,
        Model::Rarity => recommend_by_rarity(reference, k, index)?,
    };
    Ok(RecommendationList {
        reference: reference.clone(),
        model,
        k,
        results,
    })
}

/// Runs each selected model independently with the same `k`.
pub fn recommend(
    reference: &TokenRef,
    selection: ModelSelection,
    k: usize,
    index: &Index,
) -> Result<Vec<RecommendationList>, RecommendError> {
    selection
        .models()
        .iter()
        .map(|&m| recommend_with(reference, m, k, index))
        .collect()
}

/// Compact JSON: one object for a single model, an array of objects
/// (traits first) for both.
pub fn render_json(lists: &[RecommendationList]) -> String {
    let out = match lists {
        [single] => serde_json::to_string(single),
        many => serde_json::to_string(many),
    };
    out.expect("recommendation lists always serialize")
}

/// Fixed-width table of the same rows as [`render_json`].
pub fn render_table(lists: &[RecommendationList]) -> String {
    let mut out = String::new();
    for list in lists {
        let _ = writeln!(out, "reference: {}  model: {}  k: {}", list.reference, list.model, list.k);
        let _ = writeln!(out, "{:>4}  {:<60}  {:>20}", "rank", "id", "score");
        for r in &list.results {
            let _ = writeln!(out, "{:>4}  {:<60}  {:>20.12}", r.rank, r.token_ref.to_string(), r.score);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Collection, Scope, Token, Trait};

    const A: &str = "0xaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa";

    fn index(traits: &[&[&str]]) -> Index {
        let tokens = traits
            .iter()
            .enumerate()
            .map(|(i, ts)| {
                Token::new(
                    TokenRef::new(A, &i.to_string()).unwrap(),
                    ts.iter()
                        .map(|s| {
                            let (t, v) = s.split_once('=').unwrap();
                            Trait::new(t, v).unwrap()
                        })
                        .collect(),
                )
            })
            .collect();
        Index::build(&Collection::new(A, None, tokens).unwrap(), Scope::Local).unwrap()
    }

    fn r(id: usize) -> TokenRef {
        TokenRef::new(A, &id.to_string()).unwrap()
    }

    fn ids(list: &[RankedRecommendation]) -> Vec<String> {
        list.iter().map(|x| x.token_ref.token_id().to_string()).collect()
    }

    #[test]
    fn zero_k_is_empty() {
        let idx = index(&[&["a=1"], &["a=1"]]);
        assert!(recommend_by_traits(&r(0), 0, &idx).unwrap().is_empty());
        assert!(recommend_by_rarity(&r(0), 0, &idx).unwrap().is_empty());
    }

    #[test]
    fn duplicate_document_ranks_first() {
        let idx = index(&[&["a=1", "b=2"], &["a=1"], &["c=3"], &["b=2", "a=1"]]);
        let got = recommend_by_traits(&r(0), 2, &idx).unwrap();
        assert_eq!(got[0].token_ref, r(3));
        assert_eq!(got[0].score, 1.0);
        assert_eq!(got[0].rank, 1);
        assert_eq!(got[1].rank, 2);
        assert!(got.iter().all(|x| x.token_ref != r(0)));
    }

    #[test]
    fn ties_break_on_numeric_id() {
        let traits: Vec<&[&str]> = vec![&["a=1"]; 12];
        let idx = index(&traits);
        let got = recommend_by_traits(&r(5), 10, &idx).unwrap();
        assert_eq!(ids(&got), ["0", "1", "2", "3", "4", "6", "7", "8", "9", "10"]);
        let got = recommend_by_rarity(&r(0), 3, &idx).unwrap();
        assert_eq!(ids(&got), ["1", "2", "3"]);
        assert!(got.iter().all(|x| x.score == 0.0));
    }

    #[test]
    fn traitless_reference_uses_tie_break_order() {
        let idx = index(&[&["a=1"], &[], &["b=1"], &["a=1"]]);
        let got = recommend_by_traits(&r(1), 10, &idx).unwrap();
        assert_eq!(ids(&got), ["0", "2", "3"]);
        assert!(got.iter().all(|x| x.score == 0.0));
    }

    #[test]
    fn rarity_orders_by_difference() {
        // totals: t0 = 4/1 + 4/3 ; t1 = 4/3 ; t2 = 4/3 + 4/1 ; t3 = 4/1
        let idx = index(&[&["a=1", "b=1"], &["b=1"], &["b=1", "c=1"], &["d=1"]]);
        let got = recommend_by_rarity(&r(0), 10, &idx).unwrap();
        assert_eq!(ids(&got), ["2", "3", "1"]);
        assert_eq!(got[0].score, 0.0);
        assert!(got.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn unknown_reference() {
        let idx = index(&[&["a=1"]]);
        assert_eq!(
            recommend_by_traits(&r(9), 1, &idx),
            Err(RecommendError::NotFound(r(9)))
        );
        assert!(recommend(&r(9), ModelSelection::Both, 1, &idx).is_err());
    }

    #[test]
    fn dispatch_and_json_shape() {
        let traits: Vec<&[&str]> = (0..12).map(|i| if i % 2 == 0 { &["a=1"][..] } else { &["b=1"][..] }).collect();
        let idx = index(&traits);
        let both = recommend(&r(0), ModelSelection::Both, 10, &idx).unwrap();
        assert_eq!(both.len(), 2);
        assert!(both.iter().all(|l| l.results.len() == 10));
        assert_eq!(both[0].results, recommend_by_traits(&r(0), 10, &idx).unwrap());
        assert_eq!(both[1].results, recommend_by_rarity(&r(0), 10, &idx).unwrap());

        let single = recommend(&r(0), ModelSelection::Traits, 1, &idx).unwrap();
        let json = render_json(&single);
        assert_eq!(
            json,
            format!(r#"{{"reference":"{A}-0","model":"traits","k":1,"results":[{{"rank":1,"id":"{A}-2","score":1.0}}]}}"#)
        );
        let v: serde_json::Value = serde_json::from_str(&render_json(&both)).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[1]["model"], "rarity");

        let table = render_table(&single);
        assert!(table.contains("model: traits"));
        assert!(table.contains("1.000000000000"));
    }
}
