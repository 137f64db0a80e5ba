//! Count vectorization of trait documents and cosine similarity.
//!
//! Every distinct trait string is one column; a token's vector holds how many
//! times each string occurs in its document. No term weighting is applied, so
//! every trait contributes equally. Similarities are computed row by row on
//! demand; the full n×n matrix is never built.
//!
//! Dot products and squared norms are exact integers. A cosine is
//! `dot / sqrt(|a|² · |b|²)`, which makes `cosine(a, a)` exactly `1.0` and
//! keeps the score symmetric bit for bit.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("trait {0:?} is not in the vocabulary")]
    UnknownTrait(String),
    #[error("row {index} out of range for a matrix of {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("invalid count vector: {0}")]
    InvalidVector(String),
}

/// Sorted, gap-free mapping from trait string to column index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms that are already sorted and distinct.
    pub fn from_sorted(terms: Vec<String>) -> Result<Self, SimilarityError> {
        if let Some(w) = terms.windows(2).find(|w| w[0] >= w[1]) {
            return Err(SimilarityError::InvalidVector(format!(
                "vocabulary terms out of order at {:?}",
                w[1]
            )));
        }
        Ok(Self { terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.terms
            .binary_search_by(|t| t.as_str().cmp(term))
            .ok()
            .map(|i| i as u32)
    }

    pub fn term(&self, column: u32) -> Option<&str> {
        self.terms.get(column as usize).map(String::as_str)
    }

    /// Terms in column order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Sorted distinct trait strings across all documents.
pub fn build_vocabulary<D, S>(docs: &[D]) -> Vocabulary
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut terms: Vec<String> = docs
        .iter()
        .flat_map(|d| d.as_ref().iter().map(|s| s.as_ref().to_string()))
        .collect();
    terms.sort_unstable();
    terms.dedup();
    Vocabulary { terms }
}

/// Sparse `(column, count)` pairs with strictly increasing columns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountVector {
    entries: Vec<(u32, u32)>,
}

impl CountVector {
    pub fn from_entries(entries: Vec<(u32, u32)>) -> Result<Self, SimilarityError> {
        if entries.iter().any(|&(_, c)| c == 0) {
            return Err(SimilarityError::InvalidVector("zero count".into()));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(SimilarityError::InvalidVector(
                "columns not strictly increasing".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of stored (nonzero) columns.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn squared_norm(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c) * u64::from(c)).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.squared_norm() as f64).sqrt()
    }

    pub fn dot(&self, other: &CountVector) -> u64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut acc = 0u64;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += u64::from(a[i].1) * u64::from(b[j].1);
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Counts the multiplicity of each trait string of `doc`.
pub fn vectorize<S: AsRef<str>>(doc: &[S], vocab: &Vocabulary) -> Result<CountVector, SimilarityError> {
    let mut cols = doc
        .iter()
        .map(|s| {
            vocab
                .index_of(s.as_ref())
                .ok_or_else(|| SimilarityError::UnknownTrait(s.as_ref().to_string()))
        })
        .collect::<Result<Vec<u32>, _>>()?;
    cols.sort_unstable();
    let mut entries: Vec<(u32, u32)> = Vec::with_capacity(cols.len());
    for c in cols {
        match entries.last_mut() {
            Some((last, n)) if *last == c => *n += 1,
            _ => entries.push((c, 1)),
        }
    }
    Ok(CountVector { entries })
}

/// A cosine against a fixed query, kept as `(dot, |candidate|²)` so that
/// candidates compare exactly: `d1/√s1 < d2/√s2  ⇔  d1²·s2 < d2²·s1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCosine {
    pub dot: u64,
    pub squared_norm: u64,
}

impl Ord for ExactCosine {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self.dot, other.dot) {
            (0, 0) => std::cmp::Ordering::Equal,
            (0, _) => std::cmp::Ordering::Less,
            (_, 0) => std::cmp::Ordering::Greater,
            (a, b) => {
                let lhs = u128::from(a) * u128::from(a) * u128::from(other.squared_norm);
                let rhs = u128::from(b) * u128::from(b) * u128::from(self.squared_norm);
                lhs.cmp(&rhs)
            }
        }
    }
}

impl PartialOrd for ExactCosine {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub(crate) fn cosine_from_parts(dot: u64, sq_a: u64, sq_b: u64) -> f64 {
    if sq_a == 0 || sq_b == 0 {
        return 0.0;
    }
    let denom = ((u128::from(sq_a) * u128::from(sq_b)) as f64).sqrt();
    dot as f64 / denom
}

/// Cosine similarity in `[0, 1]`; `0.0` when either vector is empty.
pub fn cosine(a: &CountVector, b: &CountVector) -> f64 {
    cosine_from_parts(a.dot(b), a.squared_norm(), b.squared_norm())
}

/// One count vector per token, in collection order, with cached norms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountMatrix {
    rows: Vec<CountVector>,
    squared_norms: Vec<u64>,
    row_norms: Vec<f64>,
    columns: usize,
}

impl CountMatrix {
    /// Vectorizes every document against `vocab`.
    pub fn build<D, S>(docs: &[D], vocab: &Vocabulary) -> Result<Self, SimilarityError>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let rows = docs
            .iter()
            .map(|d| vectorize(d.as_ref(), vocab))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows, vocab.len())
    }

    pub fn from_rows(rows: Vec<CountVector>, columns: usize) -> Result<Self, SimilarityError> {
        for (i, r) in rows.iter().enumerate() {
            if let Some(&(c, _)) = r.entries.last() {
                if c as usize >= columns {
                    return Err(SimilarityError::InvalidVector(format!(
                        "row {i} references column {c} but the vocabulary has {columns} terms"
                    )));
                }
            }
        }
        let squared_norms: Vec<u64> = rows.iter().map(CountVector::squared_norm).collect();
        let row_norms = squared_norms.iter().map(|&s| (s as f64).sqrt()).collect();
        Ok(Self {
            rows,
            squared_norms,
            row_norms,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> &[CountVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Option<&CountVector> {
        self.rows.get(i)
    }

    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    /// Squared Euclidean norm of row `i`.
    pub fn squared_norm(&self, i: usize) -> u64 {
        self.squared_norms[i]
    }

    /// Exact dot product of row `i` with every row, in row order.
    pub fn dot_row(&self, i: usize) -> Result<Vec<u64>, SimilarityError> {
        let query = self.rows.get(i).ok_or(SimilarityError::RowOutOfRange {
            index: i,
            rows: self.rows.len(),
        })?;
        if query.is_empty() {
            return Ok(vec![0; self.rows.len()]);
        }
        let mut dense = vec![0u32; self.columns];
        for &(c, n) in &query.entries {
            dense[c as usize] = n;
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                row.entries
                    .iter()
                    .map(|&(c, n)| u64::from(dense[c as usize]) * u64::from(n))
                    .sum()
            })
            .collect())
    }

    /// Cosine of row `i` against every row, in row order.
    pub fn similarity_row(&self, i: usize) -> Result<Vec<f64>, SimilarityError> {
        let dots = self.dot_row(i)?;
        let sq_q = self.squared_norms[i];
        Ok(dots
            .iter()
            .zip(&self.squared_norms)
            .map(|(&dot, &sq)| cosine_from_parts(dot, sq_q, sq))
            .collect())
    }
}

/// Free-function form of [`CountMatrix::similarity_row`].
pub fn similarity_row(i: usize, m: &CountMatrix) -> Result<Vec<f64>, SimilarityError> {
    m.similarity_row(i)
}
