use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use peepeval::interp::{DEFAULT_SEED, DEFAULT_TRIALS};
use peepeval::metrics::{aggregate, evaluate_sample, IoOutcome, MetricsSummary, SampleMetrics};
use serde::Serialize;

use crate::report::{
    manifest_fingerprint, render_summary_table, write_json, write_jsonl, RunConfig,
};
use crate::AppError;

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Randomized IO-equivalence trials per sample.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory for records.jsonl, summary.json, summary.txt.
    #[arg(long)]
    pub out: PathBuf,
}

/// Per-sample outcome: metrics plus candidate text and timing.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub id: String,
    pub source: String,
    pub bleu: f64,
    pub emr: u8,
    pub syntactic: u8,
    pub io: IoOutcome,
    pub latency_ms: u64,
    pub candidate: String,
}

pub fn evaluate_records(
    dataset: &peepeval::corpus::Dataset,
    candidates: &[super::CandidateRecord],
    trials: u64,
    seed: u64,
) -> (Vec<EvalRecord>, Vec<SampleMetrics>) {
    let by_id: BTreeMap<&str, &super::CandidateRecord> =
        candidates.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut records = Vec::new();
    let mut metrics = Vec::new();
    for pair in &dataset.pairs {
        let (candidate, latency_ms) = match by_id.get(pair.id.as_str()) {
            Some(c) => (c.candidate.clone(), c.latency_ms),
            None => (String::new(), 0),
        };
        // Per-sample seeds derive from the run seed and the sample id.
        let sample_seed = peepeval::rng::mix(seed, peepeval::rng::hash_str(&pair.id));
        let m = evaluate_sample(&pair.opt, &candidate, trials, sample_seed);
        records.push(EvalRecord {
            id: pair.id.clone(),
            source: pair.source.tag(),
            bleu: m.bleu,
            emr: m.emr as u8,
            syntactic: m.syntactic as u8,
            io: m.io,
            latency_ms,
            candidate,
        });
        metrics.push(m);
    }
    (records, metrics)
}

pub fn summarize(
    records: &[EvalRecord],
    metrics: &[SampleMetrics],
) -> Result<(MetricsSummary, BTreeMap<String, MetricsSummary>), AppError> {
    let overall = aggregate(metrics).map_err(|e| AppError::Input(e.to_string()))?;
    let mut by_source: BTreeMap<String, Vec<SampleMetrics>> = BTreeMap::new();
    for (record, metric) in records.iter().zip(metrics.iter()) {
        by_source
            .entry(record.source.clone())
            .or_default()
            .push(metric.clone());
    }
    let mut per_source = BTreeMap::new();
    for (tag, group) in by_source {
        let summary = aggregate(&group).map_err(|e| AppError::Internal(e.to_string()))?;
        per_source.insert(tag, summary);
    }
    Ok((overall, per_source))
}

pub fn run(args: EvaluateArgs) -> Result<(), AppError> {
    let dataset = super::load_dataset(&args.dataset)?;
    let candidates = super::load_candidates(&args.candidates)?;
    if args.trials == 0 {
        return Err(AppError::Input("--trials must be at least 1".into()));
    }

    let (records, metrics) = evaluate_records(&dataset, &candidates, args.trials, args.seed);
    let (overall, per_source) = summarize(&records, &metrics)?;

    std::fs::create_dir_all(&args.out)?;
    write_jsonl(&args.out.join("records.jsonl"), &records)?;
    let mut csv = String::from("id,source,bleu,emr,syntactic,io,latency_ms\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{:.6},{},{},{:?},{}\n",
            r.id, r.source, r.bleu, r.emr, r.syntactic, r.io, r.latency_ms
        ));
    }
    std::fs::write(args.out.join("records.csv"), csv)?;

    let mut run_config = RunConfig::new("evaluate", &args.out, args.seed);
    run_config.dataset = Some(args.dataset.display().to_string());
    run_config.trials = Some(args.trials);
    let summary = serde_json::json!({
        "run_config": run_config,
        "dataset_manifest": manifest_fingerprint(&args.dataset),
        "overall": overall,
        "per_source": per_source,
    });
    write_json(&args.out.join("summary.json"), &summary)?;

    let table = render_summary_table(&overall, &per_source);
    std::fs::write(args.out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}
