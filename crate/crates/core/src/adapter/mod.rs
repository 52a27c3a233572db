//! Uniform interface to candidate optimizers: a remote chat-completion
//! endpoint, a replay cache of previous responses, or the built-in peephole
//! engine posing as the model. Also owns k-shot prompt construction and
//! code extraction from free-form replies.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::{parse_block, print_block, BlockItem};
use crate::corpus::SamplePair;
use crate::rng::{hash_str, mix};

/// Versioned instruction preamble. The exact wording shipped with the tool,
/// not a reconstruction of anyone else's prompt.
pub const PROMPT_PREAMBLE_V1: &str = "You are an AArch64 peephole optimizer. Given a basic block of AArch64 assembly, produce the shortest equivalent basic block. Reply with assembly only, no commentary.";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    #[error("remote call failed with status {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("replay cache miss for prompt hash {hash}")]
    CacheMiss { hash: String },
    #[error("no assembly found in response")]
    ExtractionFailure,
    #[error("oracle could not parse the target block: {0}")]
    OracleParse(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub preamble: String,
    pub shots: Vec<(String, String)>,
    pub target: String,
}

impl PromptSpec {
    pub fn new(shots: Vec<(String, String)>, target: impl Into<String>) -> PromptSpec {
        PromptSpec {
            preamble: PROMPT_PREAMBLE_V1.to_string(),
            shots,
            target: target.into(),
        }
    }
}

/// Deterministic prompt text: preamble, k worked examples, then the target.
pub fn build_prompt(spec: &PromptSpec) -> String {
    assert!(spec.shots.len() <= 8, "at most 8 shots");
    let mut prompt = String::new();
    prompt.push_str(&spec.preamble);
    prompt.push('\n');
    for (nonopt, opt) in &spec.shots {
        prompt.push_str("Input:\n");
        prompt.push_str(nonopt);
        prompt.push_str("\nOutput:\n");
        prompt.push_str(opt);
        prompt.push('\n');
    }
    prompt.push_str("Input:\n");
    prompt.push_str(&spec.target);
    prompt.push_str("\nOutput:\n");
    prompt
}

/// Seeded shot selection. Shot sets are nested: the k-shot set is a prefix
/// of the (k+1)-shot set, so few-shot sweeps vary only the count.
pub fn select_shots(pairs: &[SamplePair], k: usize, seed: u64) -> Vec<(String, String)> {
    let mut keyed: Vec<(u64, &SamplePair)> = pairs
        .iter()
        .map(|p| (mix(seed ^ 0x53484F54, hash_str(&p.id)), p))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    keyed
        .into_iter()
        .take(k)
        .map(|(_, p)| (p.nonopt.clone(), p.opt.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Remote,
    Replay,
    Oracle,
}

#[derive(Debug, Clone)]
pub struct AdapterResponse {
    /// Raw model output.
    pub text: String,
    /// Extracted block text, when any line of assembly could be recovered.
    pub extracted: Result<String, AdapterError>,
    pub latency_ms: u64,
    pub adapter: AdapterKind,
}

/// Token bucket shared by concurrent remote workers.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    refill_per_sec: f64,
    state: std::sync::Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_second: f64) -> RateLimiter {
        let capacity = per_second.max(1.0);
        RateLimiter {
            capacity,
            refill_per_sec: per_second.max(0.001),
            state: std::sync::Mutex::new((capacity, Instant::now())),
        }
    }

    /// Block until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                let (ref mut tokens, ref mut last) = *state;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.refill_per_sec)
                    .min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.refill_per_sec
            };
            std::thread::sleep(std::time::Duration::from_secs_f64(wait.min(1.0)));
        }
    }
}

#[derive(Debug, Clone)]
pub enum AdapterConfig {
    /// The reference peephole engine answers the prompt.
    Oracle,
    /// Look responses up in a primed cache directory; misses are errors.
    Replay { cache_dir: PathBuf },
    /// One chat-completion call with bounded retries; responses are cached
    /// on first fetch when a cache directory is configured.
    Remote {
        endpoint: String,
        model: String,
        token_env: String,
        cache_dir: Option<PathBuf>,
        max_retries: u32,
        backoff_ms: u64,
        timeout_ms: u64,
        rate: Option<std::sync::Arc<RateLimiter>>,
    },
}

impl AdapterConfig {
    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> AdapterConfig {
        AdapterConfig::Remote {
            endpoint: endpoint.into(),
            model: model.into(),
            token_env: "PEEPEVAL_API_TOKEN".into(),
            cache_dir: None,
            max_retries: 3,
            backoff_ms: 500,
            timeout_ms: 60_000,
            rate: None,
        }
    }

    pub fn kind(&self) -> AdapterKind {
        match self {
            AdapterConfig::Oracle => AdapterKind::Oracle,
            AdapterConfig::Replay { .. } => AdapterKind::Replay,
            AdapterConfig::Remote { .. } => AdapterKind::Remote,
        }
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache entry layout: `cache/<sha256(prompt)>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt: String,
    pub text: String,
    pub latency_ms: u64,
    pub timestamp: String,
}

pub fn cache_path(cache_dir: &Path, prompt: &str) -> PathBuf {
    cache_dir.join(format!("{}.json", prompt_hash(prompt)))
}

/// Atomic store: write a temp file, then rename into place.
pub fn cache_store(cache_dir: &Path, entry: &CacheEntry) -> Result<(), AdapterError> {
    std::fs::create_dir_all(cache_dir).map_err(|e| AdapterError::Io(e.to_string()))?;
    let final_path = cache_path(cache_dir, &entry.prompt);
    let tmp_path = cache_dir.join(format!(".tmp-{}", prompt_hash(&entry.prompt)));
    let body = serde_json::to_string_pretty(entry).map_err(|e| AdapterError::Io(e.to_string()))?;
    std::fs::write(&tmp_path, body).map_err(|e| AdapterError::Io(e.to_string()))?;
    std::fs::rename(&tmp_path, &final_path).map_err(|e| AdapterError::Io(e.to_string()))?;
    Ok(())
}

fn cache_load(cache_dir: &Path, prompt: &str) -> Result<Option<CacheEntry>, AdapterError> {
    let path = cache_path(cache_dir, prompt);
    match std::fs::read_to_string(&path) {
        Ok(text) => {
            let entry = serde_json::from_str(&text).map_err(|e| AdapterError::Io(e.to_string()))?;
            Ok(Some(entry))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(AdapterError::Io(e.to_string())),
    }
}

/// Dispatch one prompt to the configured backend.
pub fn query(config: &AdapterConfig, prompt: &str) -> Result<AdapterResponse, AdapterError> {
    match config {
        AdapterConfig::Oracle => query_oracle(prompt),
        AdapterConfig::Replay { cache_dir } => {
            let entry = cache_load(cache_dir, prompt)?.ok_or_else(|| AdapterError::CacheMiss {
                hash: prompt_hash(prompt),
            })?;
            Ok(AdapterResponse {
                extracted: extract_code(&entry.text),
                text: entry.text,
                latency_ms: entry.latency_ms,
                adapter: AdapterKind::Replay,
            })
        }
        AdapterConfig::Remote {
            endpoint,
            model,
            token_env,
            cache_dir,
            max_retries,
            backoff_ms,
            timeout_ms,
            rate,
        } => {
            if let Some(dir) = cache_dir {
                if let Some(entry) = cache_load(dir, prompt)? {
                    return Ok(AdapterResponse {
                        extracted: extract_code(&entry.text),
                        text: entry.text,
                        latency_ms: entry.latency_ms,
                        adapter: AdapterKind::Remote,
                    });
                }
            }
            if let Some(limiter) = rate {
                limiter.acquire();
            }
            let started = Instant::now();
            let text = remote_call(
                endpoint,
                model,
                token_env,
                prompt,
                *max_retries,
                *backoff_ms,
                *timeout_ms,
            )?;
            let latency_ms = started.elapsed().as_millis() as u64;
            if let Some(dir) = cache_dir {
                cache_store(
                    dir,
                    &CacheEntry {
                        prompt: prompt.to_string(),
                        text: text.clone(),
                        latency_ms,
                        timestamp: crate::corpus::now_timestamp(),
                    },
                )?;
            }
            Ok(AdapterResponse {
                extracted: extract_code(&text),
                text,
                latency_ms,
                adapter: AdapterKind::Remote,
            })
        }
    }
}

/// Pull the final target block out of a built prompt.
pub fn target_from_prompt(prompt: &str) -> Option<&str> {
    let start = prompt.rfind("Input:\n")? + "Input:\n".len();
    let rest = &prompt[start..];
    let end = rest.rfind("\nOutput:")?;
    Some(&rest[..end])
}

fn query_oracle(prompt: &str) -> Result<AdapterResponse, AdapterError> {
    let started = Instant::now();
    let target = target_from_prompt(prompt)
        .ok_or_else(|| AdapterError::OracleParse("prompt has no Input/Output frame".into()))?;
    let block = parse_block(target).map_err(|e| AdapterError::OracleParse(e.to_string()))?;
    let (optimized, _) = crate::peephole::optimize(&block);
    let text = print_block(&optimized);
    Ok(AdapterResponse {
        extracted: Ok(text.clone()),
        text,
        latency_ms: started.elapsed().as_millis() as u64,
        adapter: AdapterKind::Oracle,
    })
}

fn remote_call(
    endpoint: &str,
    model: &str,
    token_env: &str,
    prompt: &str,
    max_retries: u32,
    backoff_ms: u64,
    timeout_ms: u64,
) -> Result<String, AdapterError> {
    let body = serde_json::json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    });
    let mut last_error = AdapterError::Remote {
        status: 0,
        message: "no attempt made".into(),
    };
    for attempt in 0..=max_retries {
        if attempt > 0 {
            std::thread::sleep(std::time::Duration::from_millis(
                backoff_ms.saturating_mul(1 << (attempt - 1)),
            ));
        }
        let mut request = ureq::post(endpoint)
            .timeout(std::time::Duration::from_millis(timeout_ms))
            .set("content-type", "application/json");
        if let Ok(token) = std::env::var(token_env) {
            request = request.set("authorization", &format!("Bearer {token}"));
        }
        match request.send_json(body.clone()) {
            Ok(response) => {
                let json: serde_json::Value = response
                    .into_json()
                    .map_err(|e| AdapterError::Io(e.to_string()))?;
                let content = json["choices"][0]["message"]["content"]
                    .as_str()
                    .ok_or_else(|| AdapterError::Remote {
                        status: 200,
                        message: "response has no choices[0].message.content".into(),
                    })?;
                return Ok(content.to_string());
            }
            Err(ureq::Error::Status(status, response)) => {
                last_error = AdapterError::Remote {
                    status,
                    message: response.into_string().unwrap_or_default(),
                };
                // 4xx other than rate limiting will not improve on retry.
                if status != 429 && status < 500 {
                    return Err(last_error);
                }
            }
            Err(ureq::Error::Transport(t)) => {
                last_error = AdapterError::Remote {
                    status: 0,
                    message: t.to_string(),
                };
            }
        }
    }
    Err(last_error)
}

/// True when a line stands alone as an assembly item.
fn line_is_asm(line: &str) -> Option<BlockItem> {
    match crate::asm::parse_line(line, 1) {
        Ok(Some(item)) => Some(item),
        _ => None,
    }
}

/// Take the first fenced code region if present, else the run of
/// assembly-parseable lines with the most instructions. Prompt-echo labels
/// like `Output:` are trimmed from the front, and the run is cut after its
/// first terminator instruction (a block is straight-line).
pub fn extract_code(response: &str) -> Result<String, AdapterError> {
    if let Some(fenced) = extract_fenced(response) {
        if block_text_ok(&fenced) {
            return Ok(fenced);
        }
    }

    let lines = crate::asm::split_lines(response);
    let parsed: Vec<Option<BlockItem>> = lines
        .iter()
        .map(|line| {
            if line.trim().is_empty() {
                None
            } else {
                line_is_asm(line)
            }
        })
        .collect();

    // Maximal runs of parseable lines, ranked by instruction count.
    let mut best: Option<(usize, usize, usize)> = None;
    let mut start = None;
    let flush =
        |start: &mut Option<usize>, end: usize, best: &mut Option<(usize, usize, usize)>| {
            if let Some(s) = start.take() {
                let instrs = parsed[s..end]
                    .iter()
                    .filter(|i| matches!(i, Some(BlockItem::Instr(_))))
                    .count();
                if best.map_or(true, |(_, _, n)| instrs > n) {
                    *best = Some((s, end, instrs));
                }
            }
        };
    for i in 0..lines.len() {
        if parsed[i].is_some() {
            if start.is_none() {
                start = Some(i);
            }
        } else {
            flush(&mut start, i, &mut best);
        }
    }
    flush(&mut start, lines.len(), &mut best);

    let (start, end, instrs) = best.ok_or(AdapterError::ExtractionFailure)?;
    if instrs == 0 {
        return Err(AdapterError::ExtractionFailure);
    }

    let mut selected: Vec<&str> = lines[start..end].iter().map(|l| l.trim()).collect();
    while let Some(first) = selected.first() {
        match line_is_asm(first) {
            Some(BlockItem::Label(name)) if !name.starts_with('.') => {
                selected.remove(0);
            }
            _ => break,
        }
    }
    if let Some(cut) = selected.iter().position(|line| {
        matches!(line_is_asm(line), Some(BlockItem::Instr(i)) if crate::asm::is_terminator_mnemonic(&i.mnemonic))
    }) {
        selected.truncate(cut + 1);
    }

    let text = selected.join("\n");
    if block_text_ok(&text) {
        Ok(text)
    } else {
        Err(AdapterError::ExtractionFailure)
    }
}

/// A usable extraction parses and contains at least one instruction.
fn block_text_ok(text: &str) -> bool {
    match parse_block(text) {
        Ok(block) => block.instruction_count() > 0,
        Err(_) => false,
    }
}

fn extract_fenced(response: &str) -> Option<String> {
    let lines = crate::asm::split_lines(response);
    let open = lines.iter().position(|l| l.trim().starts_with("```"))?;
    let close = lines[open + 1..]
        .iter()
        .position(|l| l.trim().starts_with("```"))?
        + open
        + 1;
    let body: Vec<&str> = lines[open + 1..close].iter().map(|l| l.trim()).collect();
    if body.is_empty() {
        return None;
    }
    Some(body.join("\n"))
}

#[cfg(test)]
mod tests;
