//! Page through an assets API with rate limiting, retries and on-disk
//! snapshots. A throwaway local server stands in for the real API: it
//! answers the first request with 429 and then serves three pages.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::{Duration, Instant};

use nft_recsys::ingest::{fetch_assets, replay_snapshots, FetchConfig, SnapshotStore, SystemClock, UreqTransport};

const CONTRACT: &str = "0xbc4ca0eda7647a8ab7c2061c2e118a18a936f13d";

fn page(ids: std::ops::Range<usize>) -> String {
    let assets: Vec<_> = ids
        .map(|i| {
            serde_json::json!({
                "token_id": i.to_string(),
                "name": format!("Local #{i}"),
                "image_url": null,
                "asset_contract": {"address": CONTRACT},
                "traits": [{"trait_type": "Fur", "value": if i % 3 == 0 { "Gold" } else { "Black" }}],
            })
        })
        .collect();
    serde_json::json!({ "assets": assets }).to_string()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let base = format!("http://{}", listener.local_addr()?);
    let replies = vec![(429, String::from("{}")), (200, page(0..20)), (200, page(20..40)), (200, page(40..45))];
    std::thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = [0u8; 4096];
            let _ = stream.read(&mut buf);
            let head = format!("HTTP/1.1 {status} OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n", body.len());
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(body.as_bytes());
        }
    });

    let cfg = FetchConfig {
        page_size: 20,
        rate_limit: 5.0,
        backoff_base: Duration::from_millis(300),
        ..FetchConfig::new(base, CONTRACT)
    };
    let out = std::env::temp_dir().join(format!("recsys-fetch-{}", std::process::id()));
    let store = SnapshotStore::open(&out)?;

    let started = Instant::now();
    let live = fetch_assets(&cfg, &store, &UreqTransport::default(), &SystemClock::default())?;
    println!("fetched {} assets in {:.2?} at <= {} requests/s", live.total_supply(), started.elapsed(), cfg.rate_limit);
    println!("cursor: {:?}, snapshot dir {}", store.cursor()?, out.display());

    let replayed = replay_snapshots(&cfg, &store)?;
    assert_eq!(replayed, live);
    println!("offline replay reproduces the same {} tokens", replayed.total_supply());
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
