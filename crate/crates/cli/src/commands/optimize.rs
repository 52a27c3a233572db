use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, ValueEnum};
use peepeval::adapter::{
    build_prompt, query, select_shots, AdapterConfig, AdapterError, PromptSpec,
};
use peepeval::corpus::SamplePair;

use super::CandidateRecord;
use crate::report::{manifest_fingerprint, write_json, write_jsonl, RunConfig};
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdapterChoice {
    Oracle,
    Replay,
    Remote,
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub adapter: AdapterChoice,
    /// Chat-completions endpoint URL (remote adapter).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    /// Response cache directory (required for replay, optional for remote).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Number of worked examples prepended to each prompt.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bounded worker threads for remote calls.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Token-bucket request budget for the remote adapter, in requests/sec.
    #[arg(long)]
    pub rate_limit: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub(crate) fn adapter_config(args: &OptimizeArgs) -> Result<AdapterConfig, AppError> {
    match args.adapter {
        AdapterChoice::Oracle => Ok(AdapterConfig::Oracle),
        AdapterChoice::Replay => {
            let cache_dir = args
                .cache
                .clone()
                .ok_or_else(|| AppError::Input("--adapter replay requires --cache DIR".into()))?;
            Ok(AdapterConfig::Replay { cache_dir })
        }
        AdapterChoice::Remote => {
            let endpoint = args.endpoint.clone().ok_or_else(|| {
                AppError::Input("--adapter remote requires --endpoint URL".into())
            })?;
            let mut config = AdapterConfig::remote(endpoint, args.model.clone());
            if let AdapterConfig::Remote {
                cache_dir, rate, ..
            } = &mut config
            {
                *cache_dir = args.cache.clone();
                *rate = args
                    .rate_limit
                    .map(|rps| std::sync::Arc::new(peepeval::adapter::RateLimiter::new(rps)));
            }
            Ok(config)
        }
    }
}

/// Run the adapter over every pair with a bounded worker pool; results are
/// written in dataset order regardless of completion order.
pub fn generate_candidates(
    pairs: &[SamplePair],
    shots: &[(String, String)],
    config: &AdapterConfig,
    jobs: usize,
) -> (Vec<CandidateRecord>, Vec<(String, AdapterError)>) {
    let jobs = jobs.max(1);
    let results: Mutex<Vec<Option<CandidateRecord>>> = Mutex::new(vec![None; pairs.len()]);
    let failures: Mutex<Vec<(String, AdapterError)>> = Mutex::new(Vec::new());
    let next: AtomicUsize = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(pairs.len().max(1)) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= pairs.len() {
                    break;
                }
                let pair = &pairs[idx];
                let prompt = build_prompt(&PromptSpec::new(shots.to_vec(), pair.nonopt.clone()));
                match query(config, &prompt) {
                    Ok(response) => {
                        let candidate = match response.extracted {
                            Ok(text) => text,
                            // Unextractable responses are kept raw: they
                            // score as unparseable candidates downstream.
                            Err(_) => response.text.clone(),
                        };
                        results.lock().unwrap()[idx] = Some(CandidateRecord {
                            id: pair.id.clone(),
                            candidate,
                            latency_ms: response.latency_ms,
                        });
                    }
                    Err(e) => failures.lock().unwrap().push((pair.id.clone(), e)),
                }
            });
        }
    });

    let records = results
        .into_inner()
        .unwrap()
        .into_iter()
        .flatten()
        .collect();
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    (records, failures)
}

pub fn run(args: OptimizeArgs) -> Result<(), AppError> {
    let dataset = super::load_dataset(&args.dataset)?;
    let config = adapter_config(&args)?;
    let shots = select_shots(&dataset.pairs, args.shots, args.seed);

    let (records, failures) = generate_candidates(&dataset.pairs, &shots, &config, args.jobs);
    write_jsonl(&args.out, &records)?;

    let mut run_config = RunConfig::new("optimize", &args.out, args.seed);
    run_config.dataset = Some(args.dataset.display().to_string());
    run_config.adapter = Some(format!("{:?}", args.adapter).to_lowercase());
    run_config.endpoint = args.endpoint.clone();
    run_config.model = Some(args.model.clone());
    run_config.shots = Some(args.shots);
    run_config.jobs = Some(args.jobs);
    let meta = serde_json::json!({
        "run_config": run_config,
        "dataset_manifest": manifest_fingerprint(&args.dataset),
        "candidates": records.len(),
        "failures": failures.len(),
    });
    let mut meta_path = args.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write_json(std::path::Path::new(&meta_path), &meta)?;

    println!(
        "wrote {} candidates -> {} ({} failures)",
        records.len(),
        args.out.display(),
        failures.len()
    );

    if !failures.is_empty() {
        let cache_misses = failures
            .iter()
            .filter(|(_, e)| matches!(e, AdapterError::CacheMiss { .. }))
            .count();
        for (id, error) in &failures {
            eprintln!("{id}: {error}");
        }
        if cache_misses > 0 {
            return Err(AppError::Input(format!(
                "{cache_misses} prompt(s) missing from the replay cache"
            )));
        }
        return Err(AppError::Internal(format!(
            "{} adapter call(s) failed",
            failures.len()
        )));
    }
    Ok(())
}
