use std::path::PathBuf;

use clap::Args;
use peepeval::adapter::select_shots;
use peepeval::corpus::sample;
use serde::Serialize;

use super::optimize::{generate_candidates, AdapterChoice};
use crate::report::{manifest_fingerprint, write_json, RunConfig};
use crate::AppError;

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub adapter: AdapterChoice,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Fixed sub-sample size evaluated at every shot count.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub k_min: usize,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    k: usize,
    emr: f64,
    bleu: f64,
}

pub fn run(args: SweepArgs) -> Result<(), AppError> {
    if args.k_max < args.k_min {
        return Err(AppError::Input("--k-max must be >= --k-min".into()));
    }
    let dataset = super::load_dataset(&args.dataset)?;
    let subset = sample(&dataset, args.samples.min(dataset.pairs.len()), args.seed)
        .map_err(|e| AppError::Input(e.to_string()))?;

    let config = crate::commands::optimize::OptimizeArgs {
        dataset: args.dataset.clone(),
        adapter: args.adapter,
        endpoint: args.endpoint.clone(),
        model: args.model.clone(),
        cache: args.cache.clone(),
        shots: 0,
        seed: args.seed,
        jobs: args.jobs,
        rate_limit: None,
        out: PathBuf::new(),
    };
    let adapter = super::optimize::adapter_config(&config)?;

    // Shot sets are nested: the k-shot prompt set is a prefix of k+1's.
    let mut rows = Vec::new();
    for k in args.k_min..=args.k_max {
        let shots = select_shots(&dataset.pairs, k, args.seed);
        let (candidates, failures) =
            generate_candidates(&subset.pairs, &shots, &adapter, args.jobs);
        if !failures.is_empty() {
            for (id, error) in &failures {
                eprintln!("k={k}: {id}: {error}");
            }
            return Err(AppError::Input(format!(
                "{} adapter call(s) failed at k={k}",
                failures.len()
            )));
        }
        let (records, metrics) =
            super::evaluate::evaluate_records(&subset, &candidates, args.trials, args.seed);
        let _ = records;
        let summary = peepeval::metrics::aggregate(&metrics)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        rows.push(SweepRow {
            k,
            emr: summary.emr_rate,
            bleu: summary.bleu_mean,
        });
    }

    std::fs::create_dir_all(&args.out)?;
    let mut csv = String::from("k,emr,bleu\n");
    for row in &rows {
        csv.push_str(&format!("{},{:.6},{:.6}\n", row.k, row.emr, row.bleu));
    }
    std::fs::write(args.out.join("shots_sweep.csv"), &csv)?;

    let mut run_config = RunConfig::new("shots-sweep", &args.out, args.seed);
    run_config.dataset = Some(args.dataset.display().to_string());
    run_config.adapter = Some(format!("{:?}", args.adapter).to_lowercase());
    run_config.trials = Some(args.trials);
    let report = serde_json::json!({
        "run_config": run_config,
        "dataset_manifest": manifest_fingerprint(&args.dataset),
        "samples": subset.pairs.len(),
        "rows": rows,
    });
    write_json(&args.out.join("shots_sweep.json"), &report)?;
    print!("{csv}");
    Ok(())
}
