//! HTTP client for hosted embedding models.
//!
//! Wire format: `POST <endpoint>` with `{"model": <name>, "input": [..]}`;
//! the response is `{"data": [{"index": i, "embedding": [..]}, ..]}` and
//! entries are matched to inputs by `index`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::EmbedError;

use super::{EmbeddingCache, EmbeddingVector, ProviderDescriptor, TextEmbedder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteOptions {
    pub batch_size: usize,
    pub max_retries: usize,
    pub initial_backoff_ms: u64,
    /// Upper bound on requests in flight at once.
    pub parallelism: usize,
    pub timeout_secs: u64,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
    pub cache_path: Option<PathBuf>,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_retries: 3,
            initial_backoff_ms: 200,
            parallelism: 4,
            timeout_secs: 60,
            api_key_env: Some("TAGA_API_KEY".into()),
            cache_path: None,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct Response {
    data: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    index: usize,
    embedding: Vec<f32>,
}

pub struct RemoteEmbedder {
    desc: ProviderDescriptor,
    options: RemoteOptions,
    cache: EmbeddingCache,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(desc: ProviderDescriptor, options: RemoteOptions) -> Result<Self, EmbedError> {
        let cache = match &options.cache_path {
            Some(p) => EmbeddingCache::open(p)?,
            None => EmbeddingCache::in_memory(),
        };
        Self::with_cache(desc, options, cache)
    }

    pub fn with_cache(
        desc: ProviderDescriptor,
        options: RemoteOptions,
        cache: EmbeddingCache,
    ) -> Result<Self, EmbedError> {
        desc.validate()?;
        if options.batch_size == 0 || options.parallelism == 0 {
            return Err(EmbedError::Descriptor("batch size and parallelism must be positive".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(options.timeout_secs)))
            .build()
            .into();
        Ok(Self { desc, options, cache, agent })
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    fn model(&self) -> &str {
        self.desc.model_name.as_deref().expect("validated")
    }

    fn request_once(&self, batch: &[&str]) -> Result<Vec<Vec<f32>>, Attempt> {
        let endpoint = self.desc.endpoint.as_deref().expect("validated");
        let mut req = self.agent.post(endpoint);
        if let Some(token) = self.options.api_key_env.as_deref().and_then(|v| std::env::var(v).ok()) {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp =
            req.send_json(Request { model: self.model(), input: batch }).map_err(|e| Attempt::Retry(e.to_string()))?;
        let parsed: Response =
            resp.body_mut().read_json().map_err(|e| Attempt::Fatal(EmbedError::BadResponse(e.to_string())))?;

        if parsed.data.len() != batch.len() {
            return Err(Attempt::Fatal(EmbedError::PartialResponse { expected: batch.len(), got: parsed.data.len() }));
        }
        let mut out: Vec<Option<Vec<f32>>> = vec![None; batch.len()];
        for item in parsed.data {
            if item.embedding.len() != self.desc.dimension {
                return Err(Attempt::Fatal(EmbedError::DimensionMismatch {
                    expected: self.desc.dimension,
                    got: item.embedding.len(),
                }));
            }
            match out.get_mut(item.index) {
                Some(slot @ None) => *slot = Some(item.embedding),
                _ => return Err(Attempt::Fatal(EmbedError::BadResponse(format!("unexpected index {}", item.index)))),
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every index filled")).collect())
    }

    fn request(&self, batch: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut delay = Duration::from_millis(self.options.initial_backoff_ms);
        let attempts = self.options.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.request_once(batch) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("embedding request failed (attempt {}/{attempts}): {msg}", attempt + 1);
                    last = msg;
                    if attempt + 1 < attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(EmbedError::Network { attempts, message: last })
    }
}

enum Attempt {
    Retry(String),
    Fatal(EmbedError),
}

impl TextEmbedder for RemoteEmbedder {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.desc
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let dim = self.desc.dimension;
        let model = self.model().to_string();
        let mut found: HashMap<&str, Vec<f32>> = HashMap::new();
        let mut missing: Vec<&str> = Vec::new();
        for t in texts {
            if found.contains_key(t.as_str()) || missing.contains(&t.as_str()) {
                continue;
            }
            match self.cache.get(&model, dim, t) {
                Some(v) => {
                    found.insert(t, v);
                }
                None => missing.push(t),
            }
        }

        let batches: Vec<&[&str]> = missing.chunks(self.options.batch_size).collect();
        for group in batches.chunks(self.options.parallelism) {
            let results: Vec<Result<Vec<Vec<f32>>, EmbedError>> = std::thread::scope(|s| {
                let handles: Vec<_> = group.iter().map(|b| s.spawn(move || self.request(b))).collect();
                handles.into_iter().map(|h| h.join().expect("request thread panicked")).collect()
            });
            for (batch, result) in group.iter().zip(results) {
                let vectors = result?;
                let items: Vec<(&str, Vec<f32>)> = batch.iter().copied().zip(vectors).collect();
                self.cache.insert_many(&model, dim, &items)?;
                found.extend(items);
            }
        }

        texts
            .iter()
            .map(|t| {
                let raw = &found[t.as_str()];
                let v = EmbeddingVector::new(raw.iter().map(|&x| f64::from(x)).collect());
                if !v.is_finite() {
                    return Err(EmbedError::NonFinite);
                }
                Ok(if self.desc.normalize { v.normalized() } else { v })
            })
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod mock {
    //! Minimal HTTP/1.1 embedding server for tests.

    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    pub struct MockServer {
        pub url: String,
        pub requests: Arc<Mutex<Vec<serde_json::Value>>>,
    }

    /// `respond` maps (request number, parsed body) to (status, body).
    pub fn serve<F>(respond: F) -> MockServer
    where
        F: Fn(usize, &serde_json::Value) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/embeddings", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        std::thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = l.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let value: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
                log.lock().unwrap().push(value.clone());
                let (status, text) = respond(n, &value);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        MockServer { url, requests }
    }

    /// Deterministic fake embedding: `[len(text), index-in-batch, 1, ...]`.
    pub fn echo_embeddings(body: &serde_json::Value, dim: usize) -> String {
        let inputs = body["input"].as_array().cloned().unwrap_or_default();
        let data: Vec<serde_json::Value> = inputs
            .iter()
            .enumerate()
            .rev()
            .map(|(i, t)| {
                let mut v = vec![1.0f32; dim];
                v[0] = t.as_str().unwrap().len() as f32;
                if dim > 1 {
                    v[1] = 0.25;
                }
                serde_json::json!({"index": i, "embedding": v})
            })
            .collect();
        serde_json::json!({ "data": data }).to_string()
    }
}
