//! Trait rarity scores.
//!
//! A trait carried by `c` of the collection's `N` tokens scores `N / c`
//! (the reciprocal of its frequency). A token's total rarity is the sum of
//! these scores over its distinct trait strings.
//!
//! Presence is counted per token: a trait listed twice on one token adds one
//! to its frequency and is summed once into that token's total. Each total
//! is summed in ascending order of its terms, so two tokens whose traits have
//! the same multiset of frequencies get bit-identical totals.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::model::{trait_document, Collection, Scope, Token, TokenRef};
use crate::similarity::CountMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RarityError {
    #[error("trait count {count} outside 1..={supply}")]
    Domain { count: u64, supply: u64 },
    #[error("trait {0:?} is not in the frequency table")]
    UnknownTrait(String),
}

/// Occurrence count per trait string plus the total supply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraitFrequencyTable {
    counts: BTreeMap<String, u32>,
    total_supply: u32,
    scope: Scope,
}

impl TraitFrequencyTable {
    /// Counts how many tokens carry each trait string under `scope`.
    pub fn build(c: &Collection, scope: Scope) -> Self {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for tok in c.tokens() {
            let mut doc = trait_document(tok, scope);
            doc.sort_unstable();
            doc.dedup();
            for t in doc {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        Self {
            counts,
            total_supply: c.total_supply() as u32,
            scope,
        }
    }

    pub(crate) fn from_parts(counts: BTreeMap<String, u32>, total_supply: u32, scope: Scope) -> Self {
        Self {
            counts,
            total_supply,
            scope,
        }
    }

    pub fn count(&self, trait_string: &str) -> Option<u32> {
        self.counts.get(trait_string).copied()
    }

    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }

    pub fn total_supply(&self) -> u32 {
        self.total_supply
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    /// Number of distinct trait strings.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of trait rarities over the distinct strings of `doc`.
    pub fn document_rarity<S: AsRef<str>>(&self, doc: &[S]) -> Result<f64, RarityError> {
        Ok(sum(self.document_breakdown(doc)?.values().copied()))
    }

    fn document_breakdown<S: AsRef<str>>(&self, doc: &[S]) -> Result<BTreeMap<String, f64>, RarityError> {
        let mut per_trait = BTreeMap::new();
        for s in doc {
            let s = s.as_ref();
            if per_trait.contains_key(s) {
                continue;
            }
            let c = self
                .count(s)
                .ok_or_else(|| RarityError::UnknownTrait(s.to_string()))?;
            per_trait.insert(s.to_string(), trait_rarity(c.into(), self.total_supply.into())?);
        }
        Ok(per_trait)
    }
}

/// Sums rarity terms smallest first. Starts from +0.0 (`Iterator::sum` on
/// floats starts from -0.0).
fn sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut terms: Vec<f64> = values.collect();
    terms.sort_unstable_by(f64::total_cmp);
    terms.into_iter().fold(0.0, |acc, v| acc + v)
}

/// Local-scope frequency table of `c`.
pub fn count_frequencies(c: &Collection) -> TraitFrequencyTable {
    TraitFrequencyTable::build(c, Scope::Local)
}

/// `total_supply / count`, defined for `1 <= count <= total_supply`.
pub fn trait_rarity(count: u64, total_supply: u64) -> Result<f64, RarityError> {
    if count == 0 || count > total_supply {
        return Err(RarityError::Domain {
            count,
            supply: total_supply,
        });
    }
    Ok(total_supply as f64 / count as f64)
}

/// Total rarity of `tok`, using the table's scope to build its document.
pub fn total_rarity(tok: &Token, table: &TraitFrequencyTable) -> Result<f64, RarityError> {
    table.document_rarity(&trait_document(tok, table.scope))
}

/// Number of rows carrying each column.
pub fn column_frequencies(m: &CountMatrix) -> Vec<u32> {
    let mut freq = vec![0u32; m.columns()];
    for row in m.rows() {
        for &(c, _) in row.entries() {
            freq[c as usize] += 1;
        }
    }
    freq
}

/// Total rarity of every row, computed from column presence in the matrix.
/// Agrees bit for bit with [`total_rarity`] over the same collection.
pub fn totals_from_matrix(m: &CountMatrix) -> Vec<f64> {
    let supply = m.len() as f64;
    let freq = column_frequencies(m);
    m.rows()
        .iter()
        .map(|row| {
            sum(row.entries().iter().map(|&(c, _)| supply / f64::from(freq[c as usize])))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenRarity {
    pub token_ref: TokenRef,
    pub per_trait: BTreeMap<String, f64>,
    pub total: f64,
}

/// Per-token breakdown of rarity scores, in collection order.
#[derive(Debug, Clone, PartialEq)]
pub struct RarityReport {
    pub per_token: Vec<TokenRarity>,
}

impl RarityReport {
    pub fn build(c: &Collection, table: &TraitFrequencyTable) -> Result<Self, RarityError> {
        let per_token = c
            .tokens()
            .iter()
            .map(|tok| {
                let per_trait = table.document_breakdown(&trait_document(tok, table.scope))?;
                let total = sum(per_trait.values().copied());
                Ok(TokenRarity {
                    token_ref: tok.token_ref.clone(),
                    per_trait,
                    total,
                })
            })
            .collect::<Result<_, RarityError>>()?;
        Ok(Self { per_token })
    }

    pub fn get(&self, r: &TokenRef) -> Option<&TokenRarity> {
        self.per_token.iter().find(|t| &t.token_ref == r)
    }

    /// `reference_id,total_rarity`
    pub fn write_totals_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["reference_id", "total_rarity"])?;
        for t in &self.per_token {
            out.write_record([t.token_ref.to_string(), t.total.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Long format: `reference_id,trait,rarity`.
    pub fn write_per_trait_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["reference_id", "trait", "rarity"])?;
        for t in &self.per_token {
            let id = t.token_ref.to_string();
            for (name, score) in &t.per_trait {
                out.write_record([id.as_str(), name.as_str(), &score.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
