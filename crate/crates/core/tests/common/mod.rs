//! Shared test support: brute-force oracles and a scripted HTTP stub server.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use nft_recsys::model::{trait_document, Collection, Scope, TokenRef};
use nft_recsys::synth::{generate, SynthConfig};

/// Random instance in the acceptance envelope: `n ∈ [2, 200]`, at most 30
/// trait types with at most 10 values each. Every fifth instance merges a
/// second contract with overlapping ids so the contract tie-break is used.
pub fn random_instance(seed: u64) -> Collection {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=200usize);
    if seed % 5 == 4 && n >= 4 {
        let first = generate(&SynthConfig::random(n / 2, 30, 10, seed));
        let mut cfg = SynthConfig::random(n - n / 2, 30, 10, seed + 1);
        cfg.contract = "0x00000000000000000000000000000000000000ff".into();
        let second = generate(&cfg);
        Collection::merge(first, [second]).unwrap()
    } else {
        generate(&SynthConfig::random(n, 30, 10, seed))
    }
}

/// Per-token count maps and trait-string sets, built directly from the
/// collection without the vectorizer.
pub struct Brute {
    pub refs: Vec<TokenRef>,
    pub counts: Vec<BTreeMap<String, u64>>,
}

impl Brute {
    pub fn new(c: &Collection, scope: Scope) -> Self {
        let mut counts = Vec::new();
        for t in c.tokens() {
            let mut m = BTreeMap::new();
            for s in trait_document(t, scope) {
                *m.entry(s).or_insert(0u64) += 1;
            }
            counts.push(m);
        }
        Self {
            refs: c.tokens().iter().map(|t| t.token_ref.clone()).collect(),
            counts,
        }
    }

    pub fn row(&self, r: &TokenRef) -> usize {
        self.refs.iter().position(|x| x == r).unwrap()
    }

    pub fn dot(&self, i: usize, j: usize) -> u64 {
        self.counts[i]
            .iter()
            .filter_map(|(s, a)| self.counts[j].get(s).map(|b| a * b))
            .sum()
    }

    pub fn squared(&self, i: usize) -> u64 {
        self.counts[i].values().map(|c| c * c).sum()
    }

    /// Plain float cosine over dense counts.
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.squared(i), self.squared(j));
        if a == 0 || b == 0 {
            return 0.0;
        }
        self.dot(i, j) as f64 / ((a as f64).sqrt() * (b as f64).sqrt())
    }

    /// Number of tokens carrying each trait string.
    pub fn presence(&self) -> HashMap<&str, u64> {
        let mut p = HashMap::new();
        for m in &self.counts {
            for s in m.keys() {
                *p.entry(s.as_str()).or_insert(0) += 1;
            }
        }
        p
    }

    /// Total rarity per token: terms `N / c_t` summed smallest first.
    pub fn totals(&self) -> Vec<f64> {
        let n = self.refs.len() as f64;
        let p = self.presence();
        self.counts
            .iter()
            .map(|m| {
                let mut terms: Vec<f64> = m.keys().map(|s| n / p[s.as_str()] as f64).collect();
                terms.sort_by(f64::total_cmp);
                terms.into_iter().fold(0.0, |a, b| a + b)
            })
            .collect()
    }

    pub fn distinct_terms(&self) -> usize {
        self.counts.iter().flat_map(|m| m.keys()).collect::<BTreeSet<_>>().len()
    }

    /// Full sort of every candidate by exact cosine (via `d₁²·s₂` vs
    /// `d₂²·s₁`), then id, then contract; first `k` with float scores.
    pub fn traits_top_k(&self, r: usize, k: usize) -> Vec<(TokenRef, f64)> {
        let mut all: Vec<(usize, u128, u128)> = (0..self.refs.len())
            .filter(|&j| j != r)
            .map(|j| (j, self.dot(r, j) as u128, self.squared(j) as u128))
            .collect();
        all.sort_by(|&(x, dx, sx), &(y, dy, sy)| {
            let by_cos = match (dx, dy) {
                (0, 0) => Ordering::Equal,
                (0, _) => Ordering::Greater,
                (_, 0) => Ordering::Less,
                _ => (dy * dy * sx).cmp(&(dx * dx * sy)),
            };
            by_cos.then_with(|| tie_break(&self.refs[x], &self.refs[y]))
        });
        all.into_iter()
            .take(k)
            .map(|(j, _, _)| (self.refs[j].clone(), self.cosine(r, j)))
            .collect()
    }

    pub fn rarity_top_k(&self, r: usize, k: usize) -> Vec<(TokenRef, f64)> {
        let totals = self.totals();
        let mut all: Vec<(usize, f64)> = (0..self.refs.len())
            .filter(|&j| j != r)
            .map(|j| (j, (totals[j] - totals[r]).abs()))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| tie_break(&self.refs[a.0], &self.refs[b.0])));
        all.into_iter().take(k).map(|(j, d)| (self.refs[j].clone(), d)).collect()
    }
}

/// Numeric token id, then contract.
pub fn tie_break(a: &TokenRef, b: &TokenRef) -> Ordering {
    let (x, y) = (a.token_id(), b.token_id());
    x.len()
        .cmp(&y.len())
        .then_with(|| x.cmp(y))
        .then_with(|| a.contract().cmp(b.contract()))
}

/// One scripted HTTP reply.
#[derive(Debug, Clone)]
pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Self { status: 200, body: body.into() }
    }

    pub fn status(status: u16) -> Self {
        Self { status, body: br#"{"detail":"scripted"}"#.to_vec() }
    }
}

/// A request as seen by the stub: request target and lowercased headers.
#[derive(Debug, Clone)]
pub struct Seen {
    pub target: String,
    pub headers: HashMap<String, String>,
}

/// Single-threaded HTTP/1.1 server on 127.0.0.1 that answers each
/// connection with the next scripted reply, then closes it. Exits once the
/// script is exhausted.
pub struct StubServer {
    pub addr: SocketAddr,
    pub seen: Arc<Mutex<Vec<Seen>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        let handle = std::thread::spawn(move || {
            for reply in script {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let mut buf = Vec::new();
                let mut chunk = [0u8; 1024];
                while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
                    match stream.read(&mut chunk) {
                        Ok(0) | Err(_) => break,
                        Ok(n) => buf.extend_from_slice(&chunk[..n]),
                    }
                }
                let text = String::from_utf8_lossy(&buf);
                let mut lines = text.split("\r\n");
                let target = lines
                    .next()
                    .and_then(|l| l.split_whitespace().nth(1))
                    .unwrap_or_default()
                    .to_string();
                let headers = lines
                    .filter_map(|l| l.split_once(':'))
                    .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
                    .collect();
                log.lock().unwrap().push(Seen { target, headers });
                let head = format!(
                    "HTTP/1.1 {} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    reply.status,
                    reply.body.len()
                );
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(&reply.body);
                let _ = stream.flush();
            }
        });
        Self { addr, seen, handle: Some(handle) }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/api/v1", self.addr)
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }

    /// Waits for the script to finish.
    pub fn join(mut self) -> Vec<Seen> {
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
        self.requests()
    }
}

/// An OpenSea-style assets page with ids in `ids`.
pub fn assets_page(contract: &str, ids: std::ops::Range<usize>) -> Vec<u8> {
    let assets: Vec<_> = ids
        .map(|i| {
            serde_json::json!({
                "token_id": i.to_string(),
                "name": format!("Stub #{i}"),
                "image_url": format!("https://img.example/{i}.png"),
                "asset_contract": {"address": contract},
                "traits": [
                    {"trait_type": "Fur", "value": (["Black", "Gold", "Red"][i % 3])},
                    {"trait_type": "Level", "value": i % 4},
                ],
            })
        })
        .collect();
    serde_json::to_vec(&serde_json::json!({ "assets": assets })).unwrap()
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("recsys").chain(args.iter().copied());
    let code = nft_recsys::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
