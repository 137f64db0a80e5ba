//! Side-by-side evaluation of both models for one reference token.
//!
//! Each model's top-k is placed on both metric axes: cosine similarity to the
//! reference and total rarity. The resulting [`EvaluationFrame`] is what the
//! scatter views plot, and [`summary_stats`] reduces it to per-source
//! dispersion numbers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::Index;
use crate::model::TokenRef;
use crate::recommend::{recommend_by_rarity, recommend_by_traits, RecommendError};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Which model(s) produced a frame row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Reference,
    TraitsModel,
    RarityModel,
    Both,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Reference => "reference",
            Source::TraitsModel => "traits-model",
            Source::RarityModel => "rarity-model",
            Source::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub id: TokenRef,
    pub source: Source,
    pub cosine_to_reference: f64,
    pub total_rarity: f64,
    pub rank_traits: Option<usize>,
    pub rank_rarity: Option<usize>,
}

/// Reference row first, then traits-model rows in rank order, then
/// rarity-only rows in rank order. Ids are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFrame {
    pub reference: TokenRef,
    pub rows: Vec<FrameRow>,
}

impl EvaluationFrame {
    pub fn reference_row(&self) -> &FrameRow {
        &self.rows[0]
    }

    /// Rows recommended by the traits model (`traits-model` and `both`).
    pub fn traits_rows(&self) -> impl Iterator<Item = &FrameRow> {
        self.rows.iter().filter(|r| r.rank_traits.is_some())
    }

    /// Rows recommended by the rarity model (`rarity-model` and `both`).
    pub fn rarity_rows(&self) -> impl Iterator<Item = &FrameRow> {
        self.rows.iter().filter(|r| r.rank_rarity.is_some())
    }
}

/// Runs both recommenders at `k` and measures every result on both axes.
pub fn cross_evaluate(reference: &TokenRef, k: usize, index: &Index) -> Result<EvaluationFrame, EvaluateError> {
    let ref_row = index
        .row_of(reference)
        .ok_or_else(|| RecommendError::NotFound(reference.clone()))?;
    let by_traits = recommend_by_traits(reference, k, index)?;
    let by_rarity = recommend_by_rarity(reference, k, index)?;
    let cosines = index
        .matrix()
        .similarity_row(ref_row)
        .expect("row of a known reference is in range");

    let row_for = |id: &TokenRef, source, rank_traits, rank_rarity| {
        let i = index.row_of(id).expect("recommended ids come from the index");
        FrameRow {
            id: id.clone(),
            source,
            cosine_to_reference: cosines[i],
            total_rarity: index.total_rarity(i),
            rank_traits,
            rank_rarity,
        }
    };

    let mut rows = Vec::with_capacity(1 + by_traits.len() + by_rarity.len());
    rows.push(row_for(reference, Source::Reference, None, None));
    let rarity_rank: BTreeMap<&TokenRef, usize> =
        by_rarity.iter().map(|r| (&r.token_ref, r.rank)).collect();
    for r in &by_traits {
        let other = rarity_rank.get(&r.token_ref).copied();
        let source = if other.is_some() { Source::Both } else { Source::TraitsModel };
        rows.push(row_for(&r.token_ref, source, Some(r.rank), other));
    }
    let traits_ids: std::collections::HashSet<&TokenRef> = by_traits.iter().map(|r| &r.token_ref).collect();
    for r in by_rarity.iter().filter(|r| !traits_ids.contains(&r.token_ref)) {
        rows.push(row_for(&r.token_ref, Source::RarityModel, None, Some(r.rank)));
    }
    Ok(EvaluationFrame {
        reference: reference.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl Stats {
    /// Welford's single-pass update. `None` for an empty input.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut n = 0u64;
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
            min = min.min(x);
            max = max.max(x);
        }
        (n > 0).then(|| Stats {
            mean,
            min,
            max,
            stddev: (m2 / n as f64).max(0.0).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub count: usize,
    pub cosine_to_reference: Stats,
    pub total_rarity: Stats,
}

/// Dispersion of both metrics per row source. Sources without rows are
/// omitted.
pub fn summary_stats(frame: &EvaluationFrame) -> BTreeMap<Source, SourceStats> {
    let mut grouped: BTreeMap<Source, Vec<&FrameRow>> = BTreeMap::new();
    for row in &frame.rows {
        grouped.entry(row.source).or_default().push(row);
    }
    grouped
        .into_iter()
        .filter_map(|(source, rows)| {
            let cosine = Stats::of(rows.iter().map(|r| r.cosine_to_reference))?;
            let rarity = Stats::of(rows.iter().map(|r| r.total_rarity))?;
            Some((
                source,
                SourceStats {
                    count: rows.len(),
                    cosine_to_reference: cosine,
                    total_rarity: rarity,
                },
            ))
        })
        .collect()
}

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "reference_id",
    "item_id",
    "source",
    "cosine_to_reference",
    "total_rarity",
    "rank_traits",
    "rank_rarity",
];

pub fn write_csv<W: Write>(frame: &EvaluationFrame, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    let reference = frame.reference.to_string();
    let rank = |r: Option<usize>| r.map(|r| r.to_string()).unwrap_or_default();
    for row in &frame.rows {
        out.write_record([
            reference.clone(),
            row.id.to_string(),
            row.source.as_str().to_string(),
            format_sig12(row.cosine_to_reference),
            format_sig12(row.total_rarity),
            rank(row.rank_traits),
            rank(row.rank_rarity),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_json(frame: &EvaluationFrame) -> String {
    serde_json::to_string(frame).expect("frames always serialize")
}

/// Writes the frame to `path` in the given format.
pub fn export_frame(frame: &EvaluationFrame, format: ExportFormat, path: &Path) -> Result<(), EvaluateError> {
    let io = |source| EvaluateError::Io {
        path: path.to_path_buf(),
        source,
    };
    match format {
        ExportFormat::Csv => {
            let file = fs::File::create(path).map_err(io)?;
            write_csv(frame, std::io::BufWriter::new(file)).map_err(|source| EvaluateError::Csv {
                path: path.to_path_buf(),
                source,
            })
        }
        ExportFormat::Json => {
            let mut body = serde_json::to_vec_pretty(frame).map_err(|source| EvaluateError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            body.push(b'\n');
            fs::write(path, body).map_err(io)
        }
    }
}

/// Reads a frame previously written with [`ExportFormat::Json`].
pub fn import_frame_json(path: &Path) -> Result<EvaluationFrame, EvaluateError> {
    let bytes = fs::read(path).map_err(|source| EvaluateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| EvaluateError::Json {
        path: path.to_path_buf(),
        source,
    })
}
