//! Text-annotator backends: a predictions file or a live HTTP endpoint.
//!
//! The endpoint speaks a minimal JSON protocol: `POST {"prompt": ...}` and
//! the response body is `{"label": ...}`. Requests are retried with
//! exponential backoff; a node whose attempts are exhausted yields no raw
//! response rather than failing the run. An optional on-disk cache keyed by
//! the prompt hash makes reruns replayable without network traffic.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::util::sha256_hex;

/// Connection settings for the annotator endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout: Duration,
    pub max_attempts: u32,
    pub concurrency: usize,
    /// First retry delay; later retries double it.
    pub backoff_base: Duration,
    /// Replay cache location; hits skip the network entirely.
    pub cache_path: Option<PathBuf>,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> EndpointConfig {
        EndpointConfig {
            url: url.into(),
            timeout: Duration::from_secs(30),
            max_attempts: 5,
            concurrency: 4,
            backoff_base: Duration::from_millis(100),
            cache_path: None,
        }
    }
}

/// Loads a JSONL predictions file of `{"node_id": <id>, "label": <string>}`
/// records into a node-to-raw-label map. Duplicate nodes are an error.
pub fn load_predictions_file(path: impl AsRef<Path>) -> Result<HashMap<NodeId, String>> {
    #[derive(Deserialize)]
    struct Record {
        node_id: usize,
        label: String,
    }

    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut map = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if map.insert(record.node_id, record.label).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate prediction for node {}", record.node_id),
            ));
        }
    }
    Ok(map)
}

/// Cache key for one prompt.
pub fn prompt_digest(prompt: &str) -> String {
    sha256_hex(prompt.as_bytes())
}

fn load_cache(path: &Path) -> Result<BTreeMap<String, String>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn save_cache(path: &Path, cache: &BTreeMap<String, String>) -> Result<()> {
    let text = serde_json::to_string_pretty(cache).expect("serialize cache");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn request_label(
    client: &reqwest::blocking::Client,
    config: &EndpointConfig,
    prompt: &str,
) -> Option<String> {
    #[derive(Deserialize)]
    struct LabelResponse {
        label: String,
    }

    for attempt in 0..config.max_attempts {
        if attempt > 0 {
            let delay = config.backoff_base * 2u32.saturating_pow(attempt - 1);
            std::thread::sleep(delay);
        }
        let outcome = client
            .post(&config.url)
            .json(&serde_json::json!({ "prompt": prompt }))
            .send()
            .and_then(|resp| resp.error_for_status())
            .and_then(|resp| resp.json::<LabelResponse>());
        match outcome {
            Ok(body) => return Some(body.label),
            Err(_) => continue,
        }
    }
    None
}

/// Fetches raw annotator responses for each `(node, prompt)` pair.
///
/// Uses `concurrency` worker threads; results are returned in input order
/// regardless of completion order. A node still unanswered after
/// `max_attempts` tries maps to `None`. Fetched responses are appended to
/// the replay cache when one is configured.
pub fn fetch_llm_predictions(
    config: &EndpointConfig,
    prompts: &[(NodeId, String)],
) -> Result<Vec<(NodeId, Option<String>)>> {
    if config.url.is_empty() {
        return Err(Error::Endpoint("endpoint url is empty".to_string()));
    }
    if config.concurrency == 0 {
        return Err(Error::Endpoint("concurrency must be positive".to_string()));
    }
    let mut cache = match &config.cache_path {
        Some(path) => load_cache(path)?,
        None => BTreeMap::new(),
    };

    let mut results: Vec<Option<Option<String>>> = vec![None; prompts.len()];
    let mut jobs: VecDeque<(usize, &str)> = VecDeque::new();
    for (idx, (_, prompt)) in prompts.iter().enumerate() {
        match cache.get(&prompt_digest(prompt)) {
            Some(label) => results[idx] = Some(Some(label.clone())),
            None => jobs.push_back((idx, prompt.as_str())),
        }
    }

    if !jobs.is_empty() {
        let jobs = Mutex::new(jobs);
        let fetched: Mutex<Vec<(usize, Option<String>)>> = Mutex::new(Vec::new());
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for _ in 0..config.concurrency.min(prompts.len()) {
                handles.push(scope.spawn(|| {
                    let client = reqwest::blocking::Client::builder()
                        .timeout(config.timeout)
                        .build()
                        .map_err(|e| Error::Endpoint(e.to_string()))?;
                    loop {
                        let job = jobs.lock().expect("job queue lock").pop_front();
                        let Some((idx, prompt)) = job else {
                            return Ok(());
                        };
                        let label = request_label(&client, config, prompt);
                        fetched.lock().expect("result lock").push((idx, label));
                    }
                }));
            }
            for handle in handles {
                handle.join().expect("worker thread panicked")?;
            }
            Ok(())
        })?;
        for (idx, label) in fetched.into_inner().expect("result lock") {
            if let Some(label) = &label {
                cache.insert(prompt_digest(&prompts[idx].1), label.clone());
            }
            results[idx] = Some(label);
        }
        if let Some(path) = &config.cache_path {
            save_cache(path, &cache)?;
        }
    }

    Ok(prompts
        .iter()
        .zip(results)
        .map(|(&(node, _), r)| (node, r.expect("every prompt resolved")))
        .collect())
}
