//! Query-ready index over one collection and its on-disk form.
//!
//! An index directory holds:
//!
//! ```text
//! manifest.json    {"format_version":1,"scope":"local","tokens":N,"terms":V}
//! vocabulary.txt   one trait string per line; line number = column
//! matrix.tsv       one row per token: "<ref>\t<col>:<count>,<col>:<count>,..."
//! tokens.json      [{"id":..,"name":..,"image_url":..}, ...] in row order
//! ```
//!
//! Trait strings are written with `\\`, `\n`, `\r` and `\t` escaped so that
//! each occupies exactly one line.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{trait_document, Collection, ModelError, Scope, TokenRef};
use crate::rarity::{column_frequencies, totals_from_matrix, TraitFrequencyTable};
use crate::similarity::{build_vocabulary, CountMatrix, CountVector, SimilarityError, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const VOCABULARY: &str = "vocabulary.txt";
const MATRIX: &str = "matrix.tsv";
const TOKENS: &str = "tokens.json";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IndexError + '_ {
    move |source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Display fields carried alongside each row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub id: TokenRef,
    pub name: Option<String>,
    pub image_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    scope: Scope,
    tokens: usize,
    terms: usize,
}

/// Immutable vocabulary, count matrix and rarity totals for one collection.
#[derive(Debug, Clone)]
pub struct Index {
    scope: Scope,
    tokens: Vec<TokenMeta>,
    vocabulary: Vocabulary,
    matrix: CountMatrix,
    frequencies: Vec<u32>,
    totals: Vec<f64>,
    /// Position of each row in tie-break order.
    order: Vec<u32>,
    rows_by_ref: HashMap<TokenRef, usize>,
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.scope == other.scope
            && self.tokens == other.tokens
            && self.vocabulary == other.vocabulary
            && self.matrix == other.matrix
            && self.frequencies == other.frequencies
            && self.totals.len() == other.totals.len()
            && self
                .totals
                .iter()
                .zip(&other.totals)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Index {
    pub fn build(collection: &Collection, scope: Scope) -> Result<Self, IndexError> {
        let docs: Vec<Vec<String>> = collection
            .tokens()
            .iter()
            .map(|t| trait_document(t, scope))
            .collect();
        let vocabulary = build_vocabulary(&docs);
        let matrix = CountMatrix::build(&docs, &vocabulary)?;
        let tokens = collection
            .tokens()
            .iter()
            .map(|t| TokenMeta {
                id: t.token_ref.clone(),
                name: t.name.clone(),
                image_url: t.image_url.clone(),
            })
            .collect();
        Ok(Self::assemble(scope, tokens, vocabulary, matrix))
    }

    fn assemble(scope: Scope, tokens: Vec<TokenMeta>, vocabulary: Vocabulary, matrix: CountMatrix) -> Self {
        let frequencies = column_frequencies(&matrix);
        let totals = totals_from_matrix(&matrix);
        let mut by_tie_break: Vec<usize> = (0..tokens.len()).collect();
        by_tie_break.sort_by(|&a, &b| tokens[a].id.tie_break_cmp(&tokens[b].id));
        let mut order = vec![0u32; tokens.len()];
        for (pos, row) in by_tie_break.into_iter().enumerate() {
            order[row] = pos as u32;
        }
        let rows_by_ref = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        Self {
            scope,
            tokens,
            vocabulary,
            matrix,
            frequencies,
            totals,
            order,
            rows_by_ref,
        }
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[TokenMeta] {
        &self.tokens
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn matrix(&self) -> &CountMatrix {
        &self.matrix
    }

    pub fn row_of(&self, r: &TokenRef) -> Option<usize> {
        self.rows_by_ref.get(r).copied()
    }

    /// Total rarity of every row.
    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn total_rarity(&self, row: usize) -> f64 {
        self.totals[row]
    }

    /// Rank of `row` under the tie-break order (ascending numeric token id,
    /// then contract).
    pub fn tie_break_rank(&self, row: usize) -> u32 {
        self.order[row]
    }

    /// Number of tokens carrying each trait string.
    pub fn trait_frequencies(&self) -> TraitFrequencyTable {
        let counts = self
            .vocabulary
            .terms()
            .iter()
            .cloned()
            .zip(self.frequencies.iter().copied())
            .collect();
        TraitFrequencyTable::from_parts(counts, self.tokens.len() as u32, self.scope)
    }

    pub fn save(&self, dir: &Path) -> Result<(), IndexError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            scope: self.scope,
            tokens: self.tokens.len(),
            terms: self.vocabulary.len(),
        };
        write_json(&dir.join(MANIFEST), &manifest)?;

        let path = dir.join(VOCABULARY);
        write_lines(&path, |w| {
            for term in self.vocabulary.terms() {
                writeln!(w, "{}", escape_line(term))?;
            }
            Ok(())
        })?;

        let path = dir.join(MATRIX);
        write_lines(&path, |w| {
            for (meta, row) in self.tokens.iter().zip(self.matrix.rows()) {
                write!(w, "{}\t", meta.id)?;
                for (i, (c, n)) in row.entries().iter().enumerate() {
                    if i > 0 {
                        w.write_all(b",")?;
                    }
                    write!(w, "{c}:{n}")?;
                }
                w.write_all(b"\n")?;
            }
            Ok(())
        })?;

        write_json(&dir.join(TOKENS), &self.tokens)
    }

    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(IndexError::Format {
                path: dir.join(MANIFEST),
                line: 1,
                message: format!("unsupported format version {}", manifest.format_version),
            });
        }

        let path = dir.join(VOCABULARY);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let terms = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                unescape_line(l).map_err(|message| IndexError::Format {
                    path: path.clone(),
                    line: i + 1,
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let vocabulary = Vocabulary::from_sorted(terms).map_err(|e| IndexError::Format {
            path: path.clone(),
            line: 0,
            message: e.to_string(),
        })?;

        let tokens: Vec<TokenMeta> = read_json(&dir.join(TOKENS))?;

        let path = dir.join(MATRIX);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut rows = Vec::with_capacity(tokens.len());
        for (i, line) in text.lines().enumerate() {
            let fmt_err = |message: String| IndexError::Format {
                path: path.clone(),
                line: i + 1,
                message,
            };
            let (id, cells) = line
                .split_once('\t')
                .ok_or_else(|| fmt_err("missing tab separator".into()))?;
            let expected = tokens.get(i).map(|t| t.id.to_string());
            if expected.as_deref() != Some(id) {
                return Err(fmt_err(format!("row {id:?} does not match tokens.json")));
            }
            rows.push(parse_row(cells).map_err(fmt_err)?);
        }
        if rows.len() != tokens.len() || rows.len() != manifest.tokens || vocabulary.len() != manifest.terms {
            return Err(IndexError::Format {
                path: dir.join(MANIFEST),
                line: 0,
                message: format!(
                    "manifest declares {} tokens and {} terms, found {} rows, {} tokens, {} terms",
                    manifest.tokens,
                    manifest.terms,
                    rows.len(),
                    tokens.len(),
                    vocabulary.len()
                ),
            });
        }
        let matrix = CountMatrix::from_rows(rows, vocabulary.len())?;
        Ok(Self::assemble(manifest.scope, tokens, vocabulary, matrix))
    }
}

fn parse_row(cells: &str) -> Result<CountVector, String> {
    if cells.is_empty() {
        return Ok(CountVector::default());
    }
    let entries = cells
        .split(',')
        .map(|cell| {
            let (c, n) = cell
                .split_once(':')
                .ok_or_else(|| format!("malformed cell {cell:?}"))?;
            let c = c.parse::<u32>().map_err(|e| format!("column {c:?}: {e}"))?;
            let n = n.parse::<u32>().map_err(|e| format!("count {n:?}: {e}"))?;
            Ok((c, n))
        })
        .collect::<Result<Vec<_>, String>>()?;
    CountVector::from_entries(entries).map_err(|e| e.to_string())
}

fn write_lines(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), IndexError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IndexError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| IndexError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IndexError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| IndexError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn escape_line(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_line(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            other => return Err(format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Token, Trait};
    use crate::rarity::{count_frequencies, total_rarity};
    use proptest::prelude::*;

    const A: &str = "0xaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa";

    fn sample() -> Collection {
        let mk = |id: &str, traits: &[(&str, &str)]| {
            let mut t = Token::new(
                TokenRef::new(A, id).unwrap(),
                traits.iter().map(|(k, v)| Trait::new(*k, *v).unwrap()).collect(),
            );
            t.name = Some(format!("#{id}"));
            t
        };
        Collection::new(
            A,
            None,
            vec![
                mk("10", &[("Fur", "Black"), ("Hat", "Crown")]),
                mk("2", &[("Fur", "Black"), ("Note", "two\nlines\\\t")]),
                mk("7", &[]),
                mk("3", &[("Fur", "Brown"), ("Fur", "Brown")]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let idx = Index::build(&sample(), Scope::Local).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let loaded = Index::load(dir.path()).unwrap();
        assert_eq!(idx, loaded);
        assert_eq!(loaded.tie_break_rank(0), 3);
        assert_eq!(loaded.tie_break_rank(1), 0);

        let matrix = fs::read_to_string(dir.path().join(MATRIX)).unwrap();
        assert!(matrix.contains(&format!("{A}-7\t\n")));
        assert!(matrix.contains(&format!("{A}-3\t1:2\n")));
        let vocab = fs::read_to_string(dir.path().join(VOCABULARY)).unwrap();
        assert_eq!(vocab.lines().count(), idx.vocabulary().len());
    }

    #[test]
    fn totals_match_rarity_module() {
        let c = sample();
        let idx = Index::build(&c, Scope::Local).unwrap();
        let table = count_frequencies(&c);
        assert_eq!(idx.trait_frequencies(), table);
        for (row, tok) in c.tokens().iter().enumerate() {
            assert_eq!(idx.total_rarity(row), total_rarity(tok, &table).unwrap());
        }
        let cross = Index::build(&c, Scope::Cross).unwrap();
        assert!(cross.vocabulary().terms().iter().all(|t| t.starts_with(A)));
        assert_eq!(cross.totals(), idx.totals());
    }

    #[test]
    fn load_rejects_corruption() {
        let idx = Index::build(&sample(), Scope::Local).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let path = dir.path().join(MATRIX);
        let text = fs::read_to_string(&path).unwrap().replace("1:2", "99:2");
        fs::write(&path, text).unwrap();
        assert!(Index::load(dir.path()).is_err());
        assert!(matches!(
            Index::load(&dir.path().join("missing")),
            Err(IndexError::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn escape_round_trip(s in "\\PC*|[\\\\\n\r\tabn]*") {
            let e = escape_line(&s);
            prop_assert!(!e.contains('\n'));
            prop_assert_eq!(unescape_line(&e).unwrap(), s);
        }
    }
}
