//! Serve the read-only API over a synthetic index.
//!
//! ```bash
//! cargo run --example http_server            # self-check, then exit
//! cargo run --example http_server -- 8080    # keep serving on port 8080
//! ```

use std::net::SocketAddr;
use std::sync::Arc;

use nft_recsys::model::Scope;
use nft_recsys::server::{router, serve};
use nft_recsys::synth::{generate, SynthConfig, SYNTH_CONTRACT};
use nft_recsys::Index;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let index = Arc::new(Index::build(&generate(&SynthConfig::bayc_like(500, 1)), Scope::Local)?);

    if let Some(port) = std::env::args().nth(1) {
        let addr = SocketAddr::from(([127, 0, 0, 1], port.parse()?));
        println!("serving {} tokens on http://{addr}", index.len());
        serve(index, addr, None).await?;
        return Ok(());
    }

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(index, None)).await });

    let paths = [
        "/health".to_string(),
        "/tokens?offset=0&limit=2".to_string(),
        format!("/recommendations/{SYNTH_CONTRACT}/7?model=traits&k=3"),
        format!("/recommendations/{SYNTH_CONTRACT}/99999"),
    ];
    for path in paths {
        let url = format!("{base}{path}");
        let (status, body) = tokio::task::spawn_blocking(move || {
            let agent = ureq::Agent::config_builder().http_status_as_error(false).build().new_agent();
            let mut resp = agent.get(&url).call().unwrap();
            (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
        })
        .await?;
        println!("GET {path} -> {status}\n  {body}");
    }
    Ok(())
}
