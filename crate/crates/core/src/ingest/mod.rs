//! Loading collections from JSON files and from an OpenSea-compatible API.
//!
//! Two file shapes are understood:
//!
//! * `opensea-assets`: `{"assets":[{"token_id", "name", "image_url",
//!   "asset_contract":{"address"}, "traits":[{"trait_type","value"}]}]}`
//! * `erc721-metadata`: `[{"token_id", "contract", "name", "image",
//!   "attributes":[{"trait_type","value"}]}]`
//!
//! Trait values may be strings or numbers; numbers are stored in canonical
//! decimal form. A *collection directory* holds a single `collection.json`
//! in the `erc721-metadata` shape.

mod fetch;

pub use fetch::{
    fetch_assets, replay_snapshots, Clock, FetchConfig, FetchError, HttpResponse, RateLimiter, RawSnapshot,
    SnapshotStore, SystemClock, Transport, TransportError, UreqTransport, VirtualClock, API_KEY_ENV,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{canonical_number, Collection, ModelError, Token, TokenRef, Trait};

/// Placeholder contract for collections loaded without any token.
pub const EMPTY_CONTRACT: &str = "0x0000000000000000000000000000000000000000";

pub const COLLECTION_FILE: &str = "collection.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    OpenseaAssets,
    Erc721Metadata,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "opensea-assets" => Ok(Self::OpenseaAssets),
            "erc721-metadata" => Ok(Self::Erc721Metadata),
            other => Err(format!(
                "unknown input format {other:?} (expected opensea-assets or erc721-metadata)"
            )),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OpenseaAssets => "opensea-assets",
            Self::Erc721Metadata => "erc721-metadata",
        })
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON at byte {offset} (line {line}, column {column}): {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("record {record}: missing required field {field:?}")]
    MissingField { record: usize, field: String },
    #[error("record {record}: field {field:?}: {message}")]
    InvalidField {
        record: usize,
        field: String,
        message: String,
    },
    #[error("{0}")]
    Shape(String),
    #[error("duplicate token {0}")]
    Duplicate(TokenRef),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for IngestError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DuplicateRef(r) => IngestError::Duplicate(r),
            other => IngestError::Model(other),
        }
    }
}

fn syntax_error(bytes: &[u8], e: serde_json::Error) -> IngestError {
    let (line, column) = (e.line(), e.column());
    let offset = bytes
        .split_inclusive(|&b| b == b'\n')
        .take(line.saturating_sub(1))
        .map(<[u8]>::len)
        .sum::<usize>()
        + column.saturating_sub(1);
    IngestError::Syntax {
        offset,
        line,
        column,
        message: e.to_string(),
    }
}

/// Reads and validates a collection file.
pub fn load_collection(path: &Path, format: InputFormat) -> Result<Collection, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_collection(&bytes, format)
}

/// Parses a collection from bytes; token order follows the input.
pub fn parse_collection(bytes: &[u8], format: InputFormat) -> Result<Collection, IngestError> {
    let (tokens, name) = match format {
        InputFormat::OpenseaAssets => parse_assets(bytes)?,
        InputFormat::Erc721Metadata => (parse_erc721(bytes)?, None),
    };
    let contract = tokens
        .first()
        .map(|t| t.token_ref.contract().to_string())
        .unwrap_or_else(|| EMPTY_CONTRACT.to_string());
    Ok(Collection::new(&contract, name, tokens)?)
}

/// Parses one `opensea-assets` document (a whole dump or one API page).
pub fn parse_assets_page(bytes: &[u8]) -> Result<Vec<Token>, IngestError> {
    parse_assets(bytes).map(|(tokens, _)| tokens)
}

fn parse_assets(bytes: &[u8]) -> Result<(Vec<Token>, Option<String>), IngestError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, e))?;
    let assets = doc
        .get("assets")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Shape("expected a top-level object with an \"assets\" array".into()))?;
    let mut name = None;
    let tokens = assets
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let rec = Record::new(i, v)?;
            let contract_obj = rec.object("asset_contract")?;
            let contract = Record { index: i, fields: contract_obj }.string("asset_contract.address", "address")?;
            if name.is_none() {
                name = contract_obj.get("name").and_then(Value::as_str).map(str::to_string);
            }
            let token_ref = rec.token_ref(&contract)?;
            Ok(Token {
                token_ref,
                traits: rec.traits("traits")?,
                name: rec.optional_string("name")?,
                image_url: rec.optional_string("image_url")?,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok((tokens, name))
}

fn parse_erc721(bytes: &[u8]) -> Result<Vec<Token>, IngestError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| syntax_error(bytes, e))?;
    let records = doc
        .as_array()
        .ok_or_else(|| IngestError::Shape("expected a top-level array of token metadata".into()))?;
    records
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let rec = Record::new(i, v)?;
            let contract = rec.string("contract", "contract")?;
            Ok(Token {
                token_ref: rec.token_ref(&contract)?,
                traits: rec.traits("attributes")?,
                name: rec.optional_string("name")?,
                image_url: rec.optional_string("image")?,
            })
        })
        .collect()
}

struct Record<'a> {
    index: usize,
    fields: &'a Map<String, Value>,
}

impl<'a> Record<'a> {
    fn new(index: usize, v: &'a Value) -> Result<Self, IngestError> {
        let fields = v
            .as_object()
            .ok_or_else(|| IngestError::Shape(format!("record {index}: expected an object")))?;
        Ok(Self { index, fields })
    }

    fn invalid(&self, field: &str, message: impl Into<String>) -> IngestError {
        IngestError::InvalidField {
            record: self.index,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn required(&self, label: &str, key: &str) -> Result<&'a Value, IngestError> {
        match self.fields.get(key) {
            None | Some(Value::Null) => Err(IngestError::MissingField {
                record: self.index,
                field: label.to_string(),
            }),
            Some(v) => Ok(v),
        }
    }

    fn string(&self, label: &str, key: &str) -> Result<String, IngestError> {
        self.required(label, key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.invalid(label, "expected a string"))
    }

    fn object(&self, key: &str) -> Result<&'a Map<String, Value>, IngestError> {
        self.required(key, key)?
            .as_object()
            .ok_or_else(|| self.invalid(key, "expected an object"))
    }

    fn optional_string(&self, key: &str) -> Result<Option<String>, IngestError> {
        match self.fields.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.invalid(key, "expected a string or null")),
        }
    }

    fn token_ref(&self, contract: &str) -> Result<TokenRef, IngestError> {
        let id = match self.required("token_id", "token_id")? {
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_u64() => n.to_string(),
            _ => return Err(self.invalid("token_id", "expected a non-negative integer or decimal string")),
        };
        TokenRef::new(contract, &id).map_err(|e| match e {
            ModelError::BadAddress(_) => self.invalid("contract", e.to_string()),
            other => self.invalid("token_id", other.to_string()),
        })
    }

    fn traits(&self, key: &str) -> Result<Vec<Trait>, IngestError> {
        let list = self
            .required(key, key)?
            .as_array()
            .ok_or_else(|| self.invalid(key, "expected an array"))?;
        list.iter()
            .enumerate()
            .map(|(j, t)| {
                let label = |f: &str| format!("{key}[{j}].{f}");
                let obj = t
                    .as_object()
                    .ok_or_else(|| self.invalid(&format!("{key}[{j}]"), "expected an object"))?;
                let field = Record { index: self.index, fields: obj };
                let trait_type = field.string(&label("trait_type"), "trait_type")?;
                let value = match field.required(&label("value"), "value")? {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => canonical_number(n),
                    _ => return Err(self.invalid(&label("value"), "expected a string or number")),
                };
                Trait::new(trait_type, value).map_err(|e| self.invalid(&label("trait_type"), e.to_string()))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct MetadataRecord<'a> {
    token_id: &'a str,
    contract: &'a str,
    name: Option<&'a str>,
    image: Option<&'a str>,
    attributes: &'a [Trait],
}

/// Serializes a collection in the `erc721-metadata` shape.
pub fn to_metadata_json(c: &Collection) -> Vec<u8> {
    let records: Vec<MetadataRecord<'_>> = c
        .tokens()
        .iter()
        .map(|t| MetadataRecord {
            token_id: t.token_ref.token_id(),
            contract: t.token_ref.contract(),
            name: t.name.as_deref(),
            image: t.image_url.as_deref(),
            attributes: &t.traits,
        })
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&records).expect("metadata records always serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes `<dir>/collection.json`.
pub fn save_collection_dir(dir: &Path, c: &Collection) -> Result<PathBuf, IngestError> {
    let io = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(COLLECTION_FILE);
    fs::write(&path, to_metadata_json(c)).map_err(|source| IngestError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Reads `<dir>/collection.json`; a plain file path is read directly.
pub fn load_collection_dir(dir: &Path) -> Result<Collection, IngestError> {
    let path = if dir.is_dir() { dir.join(COLLECTION_FILE) } else { dir.to_path_buf() };
    load_collection(&path, InputFormat::Erc721Metadata)
}
