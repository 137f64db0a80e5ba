mod common;

use std::path::{Path, PathBuf};

use common::cli;

const BAYC: &str = "0xbc4ca0eda7647a8ab7c2061c2e118a18a936f13d";

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Ingests the three-asset fixture and builds an index; returns the index dir.
fn indexed(tmp: &Path) -> PathBuf {
    let coll = tmp.join("collection");
    let idx = tmp.join("index");
    let (code, out, err) = cli(&[
        "ingest",
        "--input",
        &fixture("opensea_assets_3.json"),
        "--format",
        "opensea-assets",
        "--out",
        coll.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains(r#""tokens":3"#), "{out}");
    let (code, _, err) = cli(&["index", "--collection", coll.to_str().unwrap(), "--out", idx.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    idx
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["fetch", "ingest", "index", "recommend", "evaluate", "serve"] {
        assert!(out.contains(sub), "help lacks {sub}");
    }
    let (code, out, _) = cli(&["recommend", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("--model"));
    assert_eq!(cli(&["--version"]).0, 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cli(&[]).0, 2);
    assert_eq!(cli(&["recommend", "--index", "x"]).0, 2);
    assert_eq!(cli(&["recommend", "--index", "x", "--ref", "y", "--model", "popular"]).0, 2);
    let (code, _, err) = cli(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("frobnicate"));
    let (code, _, err) = cli(&["fetch", "--api-base", "http://127.0.0.1:9", "--contract", BAYC, "--out", "/tmp/x", "--rate", "0"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn recommend_json_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let idx = indexed(tmp.path());
    let r = format!("{BAYC}-0");
    let (code, out, err) = cli(&["recommend", "--index", idx.to_str().unwrap(), "--ref", &r, "--model", "traits", "-k", "5"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.ends_with('\n'));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["reference"], r);
    assert_eq!(v["model"], "traits");
    assert_eq!(v["k"], 5);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["rank"], 1);
    assert_eq!(results[0]["score"], 0.5);
    assert_eq!(results[1]["score"], 0.25);

    let (code, out, _) = cli(&["recommend", "--index", idx.to_str().unwrap(), "--ref", &r]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["model"], "rarity");

    let (code, out, _) = cli(&["recommend", "--index", idx.to_str().unwrap(), "--ref", &r, "--format", "table"]);
    assert_eq!(code, 0);
    assert!(out.contains("model: traits") && out.contains("model: rarity"));
}

#[test]
fn mixed_case_reference_is_canonicalized() {
    let tmp = tempfile::tempdir().unwrap();
    let idx = indexed(tmp.path());
    let (code, out, err) = cli(&[
        "recommend",
        "--index",
        idx.to_str().unwrap(),
        "--ref",
        "0xBC4CA0EdA7647A8aB7C2061c2E118A18a936f13D-1",
        "--model",
        "rarity",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains(&format!(r#""reference":"{BAYC}-1""#)));
}

#[test]
fn unknown_or_malformed_reference_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let idx = indexed(tmp.path());
    let (code, out, err) = cli(&["recommend", "--index", idx.to_str().unwrap(), "--ref", &format!("{BAYC}-999")]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains(&format!("{BAYC}-999")), "{err}");
    let (code, _, err) = cli(&["recommend", "--index", idx.to_str().unwrap(), "--ref", "missing-token"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing-token"), "{err}");
    let (code, _, err) = cli(&["recommend", "--index", tmp.path().join("nope").to_str().unwrap(), "--ref", &format!("{BAYC}-0")]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"), "{err}");
}

#[test]
fn ingest_reports_duplicates_and_bad_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let (code, _, err) = cli(&[
        "ingest",
        "--input",
        &fixture("opensea_duplicate.json"),
        "--format",
        "opensea-assets",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("-5"), "{err}");

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"assets\": [\n    {\"token_id\": \"1\",,}\n  ]\n}").unwrap();
    let (code, _, err) = cli(&["ingest", "--input", bad.to_str().unwrap(), "--format", "opensea-assets", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn evaluate_writes_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let idx = indexed(tmp.path());
    let csv_path = tmp.path().join("frame.csv");
    let r = format!("{BAYC}-1");
    let (code, out, err) = cli(&["evaluate", "--index", idx.to_str().unwrap(), "--ref", &r, "-k", "1", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let summary: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(summary["summary"]["reference"]["count"] == 1);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("reference_id,item_id,source,cosine_to_reference,total_rarity,rank_traits,rank_rarity")
    );
    let reference_row = lines.next().unwrap();
    assert!(reference_row.starts_with(&format!("{r},{r},reference,1,")), "{reference_row}");
    assert!(reference_row.ends_with(",,"));

    let k0 = tmp.path().join("k0.json");
    let (code, _, _) = cli(&["evaluate", "--index", idx.to_str().unwrap(), "--ref", &r, "-k", "0", "--out", k0.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&k0).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["source"], "reference");
}

#[test]
fn rarity_export() {
    let tmp = tempfile::tempdir().unwrap();
    let coll = tmp.path().join("c");
    assert_eq!(
        cli(&["ingest", "--input", &fixture("erc721_metadata.json"), "--format", "erc721-metadata", "--out", coll.to_str().unwrap()]).0,
        0
    );
    let totals = tmp.path().join("totals.csv");
    let per_trait = tmp.path().join("per_trait.csv");
    let (code, _, err) = cli(&[
        "rarity",
        "--collection",
        coll.to_str().unwrap(),
        "--out",
        totals.to_str().unwrap(),
        "--per-trait",
        per_trait.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&totals).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().next().unwrap().contains("total_rarity"));
    assert!(std::fs::read_to_string(&per_trait).unwrap().lines().count() > 5);
}
