//! Domain types for collections, tokens and traits.
//!
//! Both recommenders consume the same normalized *trait strings*: the trait
//! type and value are trimmed, lowercased and joined with `::`, so that
//! `("Fur", "Black")` becomes `fur::black`. In cross-collection scope the
//! contract address is prepended as a further `::` segment.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Separator between trait type, value and (optionally) the contract prefix.
pub const TRAIT_SEPARATOR: &str = "::";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed token reference {0:?}: expected \"<contract>-<token id>\"")]
    MissingHyphen(String),
    #[error("malformed contract address {0:?}: expected 0x followed by 40 hex digits")]
    BadAddress(String),
    #[error("malformed token id {0:?}: expected a canonical non-negative decimal integer")]
    BadTokenId(String),
    #[error("trait type must not be empty")]
    EmptyTraitType,
    #[error("duplicate token {0}")]
    DuplicateRef(TokenRef),
}

/// Lowercases and validates a contract address.
pub fn canonical_address(s: &str) -> Result<String, ModelError> {
    let lower = s.trim().to_ascii_lowercase();
    let hex = lower
        .strip_prefix("0x")
        .ok_or_else(|| ModelError::BadAddress(s.to_string()))?;
    if hex.len() != 40 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(ModelError::BadAddress(s.to_string()));
    }
    Ok(lower)
}

fn check_token_id(s: &str) -> Result<(), ModelError> {
    let canonical = !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s == "0" || !s.starts_with('0'));
    if canonical {
        Ok(())
    } else {
        Err(ModelError::BadTokenId(s.to_string()))
    }
}

/// Globally unique reference to one token: contract address plus token id.
///
/// Token ids are uint256 on chain, so they are kept as canonical decimal
/// strings rather than a fixed-width integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenRef {
    contract: String,
    token_id: String,
}

impl TokenRef {
    pub fn new(contract: &str, token_id: &str) -> Result<Self, ModelError> {
        let contract = canonical_address(contract)?;
        check_token_id(token_id)?;
        Ok(Self {
            contract,
            token_id: token_id.to_string(),
        })
    }

    pub fn contract(&self) -> &str {
        &self.contract
    }

    pub fn token_id(&self) -> &str {
        &self.token_id
    }

    /// Deterministic tie-break order: ascending numeric token id, then
    /// ascending contract.
    pub fn tie_break_cmp(&self, other: &Self) -> Ordering {
        self.token_id
            .len()
            .cmp(&other.token_id.len())
            .then_with(|| self.token_id.cmp(&other.token_id))
            .then_with(|| self.contract.cmp(&other.contract))
    }
}

impl fmt::Display for TokenRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.contract, self.token_id)
    }
}

/// Parses `"<contract>-<token id>"`. The address is lowercased.
pub fn parse_token_ref(s: &str) -> Result<TokenRef, ModelError> {
    let (contract, token_id) = s
        .split_once('-')
        .ok_or_else(|| ModelError::MissingHyphen(s.to_string()))?;
    TokenRef::new(contract, token_id)
}

impl FromStr for TokenRef {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_token_ref(s)
    }
}

impl Serialize for TokenRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TokenRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_token_ref(&s).map_err(serde::de::Error::custom)
    }
}

/// Renders a JSON number as a canonical decimal: integers without a
/// fractional part, other values in shortest round-trip form.
pub fn canonical_number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    let f = n.as_f64().unwrap_or(f64::NAN);
    canonical_float(f)
}

/// Shortest round-trip decimal for a float; integral values lose the `.0`.
pub fn canonical_float(f: f64) -> String {
    if f == 0.0 {
        // folds -0.0 into 0
        return "0".to_string();
    }
    if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e15 {
        return format!("{}", f as i64);
    }
    format!("{f}")
}

/// One `(trait_type, value)` property of a token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trait {
    trait_type: String,
    value: String,
}

impl Trait {
    pub fn new(trait_type: impl Into<String>, value: impl Into<String>) -> Result<Self, ModelError> {
        let trait_type = trait_type.into();
        if trait_type.trim().is_empty() {
            return Err(ModelError::EmptyTraitType);
        }
        Ok(Self {
            trait_type,
            value: value.into(),
        })
    }

    /// A trait whose value is numeric; the value is stored in canonical
    /// decimal form.
    pub fn numeric(trait_type: impl Into<String>, value: f64) -> Result<Self, ModelError> {
        Self::new(trait_type, canonical_float(value))
    }

    pub fn trait_type(&self) -> &str {
        &self.trait_type
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

/// `lowercase(trim(type)) + "::" + lowercase(trim(value))`.
pub fn normalize_trait(t: &Trait) -> String {
    let ty = t.trait_type.trim().to_lowercase();
    let value = t.value.trim().to_lowercase();
    let mut s = String::with_capacity(ty.len() + value.len() + TRAIT_SEPARATOR.len());
    s.push_str(&ty);
    s.push_str(TRAIT_SEPARATOR);
    s.push_str(&value);
    s
}

/// Whether trait strings are qualified by the contract address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// `type::value`
    #[default]
    Local,
    /// `<contract>::type::value`
    Cross,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Local => "local",
            Scope::Cross => "cross",
        })
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Scope::Local),
            "cross" => Ok(Scope::Cross),
            other => Err(format!("unknown scope {other:?} (expected local or cross)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub token_ref: TokenRef,
    pub traits: Vec<Trait>,
    pub name: Option<String>,
    pub image_url: Option<String>,
}

impl Token {
    pub fn new(token_ref: TokenRef, traits: Vec<Trait>) -> Self {
        Self {
            token_ref,
            traits,
            name: None,
            image_url: None,
        }
    }

    /// Number of traits, duplicates included.
    pub fn trait_count(&self) -> usize {
        self.traits.len()
    }
}

/// The token's trait strings in input order, one per trait.
pub fn trait_document(tok: &Token, scope: Scope) -> Vec<String> {
    tok.traits
        .iter()
        .map(|t| match scope {
            Scope::Local => normalize_trait(t),
            Scope::Cross => format!(
                "{}{}{}",
                tok.token_ref.contract(),
                TRAIT_SEPARATOR,
                normalize_trait(t)
            ),
        })
        .collect()
}

/// An ordered set of tokens with unique references.
///
/// The total supply used for rarity scoring is the number of loaded tokens.
/// Tokens normally share `contract`, but merged dumps may carry tokens of
/// several contracts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    contract: String,
    name: Option<String>,
    tokens: Vec<Token>,
}

impl Collection {
    pub fn new(contract: &str, name: Option<String>, tokens: Vec<Token>) -> Result<Self, ModelError> {
        let contract = canonical_address(contract)?;
        let mut seen = HashSet::with_capacity(tokens.len());
        for t in &tokens {
            if !seen.insert(&t.token_ref) {
                return Err(ModelError::DuplicateRef(t.token_ref.clone()));
            }
        }
        Ok(Self {
            contract,
            name,
            tokens,
        })
    }

    pub fn contract(&self) -> &str {
        &self.contract
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn total_supply(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Concatenates collections, keeping the first one's contract and name.
    pub fn merge(
        first: Collection,
        rest: impl IntoIterator<Item = Collection>,
    ) -> Result<Self, ModelError> {
        let Collection {
            contract,
            name,
            mut tokens,
        } = first;
        for c in rest {
            tokens.extend(c.tokens);
        }
        Self::new(&contract, name, tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn addr(c: char) -> String {
        format!("0x{}", c.to_string().repeat(40))
    }

    #[test]
    fn parses_reference() {
        let r = parse_token_ref(&format!("{}-0", addr('a'))).unwrap();
        assert_eq!(r.contract(), addr('a'));
        assert_eq!(r.token_id(), "0");
    }

    #[test]
    fn lowercases_address() {
        let s = format!("0X{}-7", "A".repeat(40));
        let r = parse_token_ref(&s).unwrap();
        assert_eq!(r.contract(), addr('a'));
        assert_eq!(r.token_id(), "7");
        assert_eq!(r.to_string(), s.to_lowercase());
    }

    #[test]
    fn rejects_short_address() {
        let err = parse_token_ref("0x1234-5").unwrap_err();
        assert_eq!(err, ModelError::BadAddress("0x1234".into()));
        assert!(err.to_string().contains("0x1234"));
    }

    #[test]
    fn rejects_missing_hyphen_and_bad_ids() {
        assert!(matches!(
            parse_token_ref(&addr('b')),
            Err(ModelError::MissingHyphen(_))
        ));
        assert!(matches!(
            parse_token_ref(&format!("{}-", addr('b'))),
            Err(ModelError::BadTokenId(_))
        ));
        assert!(matches!(
            parse_token_ref(&format!("{}-007", addr('b'))),
            Err(ModelError::BadTokenId(_))
        ));
        assert!(matches!(
            parse_token_ref(&format!("{}-1-2", addr('b'))),
            Err(ModelError::BadTokenId(_))
        ));
        assert!(matches!(
            parse_token_ref(&format!("0x{}-1", "g".repeat(40))),
            Err(ModelError::BadAddress(_))
        ));
    }

    #[test]
    fn tie_break_is_numeric() {
        let a = TokenRef::new(&addr('a'), "9").unwrap();
        let b = TokenRef::new(&addr('a'), "10").unwrap();
        let c = TokenRef::new(&addr('b'), "9").unwrap();
        assert_eq!(a.tie_break_cmp(&b), Ordering::Less);
        assert_eq!(a.tie_break_cmp(&c), Ordering::Less);
        assert_eq!(c.tie_break_cmp(&b), Ordering::Less);
    }

    #[test]
    fn normalizes_traits() {
        assert_eq!(normalize_trait(&Trait::new("Fur", "Black").unwrap()), "fur::black");
        assert_eq!(
            normalize_trait(&Trait::new(" Hat ", "  King's Crown").unwrap()),
            "hat::king's crown"
        );
        assert_eq!(normalize_trait(&Trait::numeric("Level", 3.0).unwrap()), "level::3");
        assert_eq!(normalize_trait(&Trait::new("Mood", "").unwrap()), "mood::");
        assert_eq!(Trait::new("  ", "x"), Err(ModelError::EmptyTraitType));
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(canonical_float(3.0), "3");
        assert_eq!(canonical_float(-0.0), "0");
        assert_eq!(canonical_float(2.5), "2.5");
        let n: serde_json::Number = serde_json::from_str("3.0").unwrap();
        assert_eq!(canonical_number(&n), "3");
        let n: serde_json::Number = serde_json::from_str("42").unwrap();
        assert_eq!(canonical_number(&n), "42");
        let n: serde_json::Number = serde_json::from_str("0.125").unwrap();
        assert_eq!(canonical_number(&n), "0.125");
    }

    #[test]
    fn documents_in_both_scopes() {
        let r = TokenRef::new(&addr('a'), "1").unwrap();
        let tok = Token::new(
            r,
            vec![
                Trait::new("Fur", "Black").unwrap(),
                Trait::new("Hat", "Crown").unwrap(),
            ],
        );
        assert_eq!(trait_document(&tok, Scope::Local), vec!["fur::black", "hat::crown"]);
        let a = addr('a');
        assert_eq!(
            trait_document(&tok, Scope::Cross),
            vec![format!("{a}::fur::black"), format!("{a}::hat::crown")]
        );
        let empty = Token::new(TokenRef::new(&a, "2").unwrap(), vec![]);
        assert!(trait_document(&empty, Scope::Local).is_empty());
        assert!(trait_document(&empty, Scope::Cross).is_empty());
    }

    #[test]
    fn collection_rejects_duplicates() {
        let a = addr('a');
        let t = |id: &str| Token::new(TokenRef::new(&a, id).unwrap(), vec![]);
        let err = Collection::new(&a, None, vec![t("5"), t("1"), t("5")]).unwrap_err();
        assert!(err.to_string().ends_with("-5"));
        let c = Collection::new(&a, None, vec![t("5"), t("1")]).unwrap();
        assert_eq!(c.total_supply(), 2);
    }

    fn arb_trait() -> impl Strategy<Value = Trait> {
        ("[ a-zA-Z]{0,3}[a-zA-Z][ a-zA-Z']{0,6}", "[ a-zA-Z0-9']{0,8}")
            .prop_map(|(ty, v)| Trait::new(ty, v).unwrap())
    }

    proptest! {
        #[test]
        fn ref_round_trip(hex in "[0-9a-fA-F]{40}", id in 0u128..u128::MAX) {
            let s = format!("0x{hex}-{id}");
            let r = parse_token_ref(&s).unwrap();
            prop_assert_eq!(r.to_string(), s.to_lowercase());
            prop_assert_eq!(parse_token_ref(&r.to_string()).unwrap(), r);
        }

        #[test]
        fn normalize_is_idempotent(t in arb_trait()) {
            let once = normalize_trait(&t);
            let (ty, v) = once.split_once(TRAIT_SEPARATOR).unwrap();
            prop_assert_eq!(normalize_trait(&Trait::new(ty, v).unwrap()), once);
        }

        #[test]
        fn document_length_matches(traits in proptest::collection::vec(arb_trait(), 0..8)) {
            let r = TokenRef::new(&addr('c'), "3").unwrap();
            let tok = Token::new(r.clone(), traits.clone());
            let twin = Token::new(TokenRef::new(&addr('c'), "4").unwrap(), traits);
            prop_assert_eq!(trait_document(&tok, Scope::Local).len(), tok.trait_count());
            prop_assert_eq!(trait_document(&tok, Scope::Cross).len(), tok.trait_count());
            prop_assert_eq!(trait_document(&tok, Scope::Local), trait_document(&twin, Scope::Local));
        }
    }
}
