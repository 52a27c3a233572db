use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use peepeval::asm::{parse_block, print_block};
use peepeval::corpus::reference_mnemonic_counts;
use peepeval::taxonomy::{
    classify_errors, per_mnemonic_error_stats, render_stats_csv, render_stats_table, ErrorCategory,
    ErrorRecord,
};

use crate::report::{manifest_fingerprint, write_json, write_jsonl, RunConfig};
use crate::AppError;

#[derive(Args)]
pub struct ErrorsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Minimum corpus occurrences for a mnemonic to enter the stats tables.
    #[arg(long, default_value_t = 50)]
    pub min_samples: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ErrorsArgs) -> Result<(), AppError> {
    let dataset = super::load_dataset(&args.dataset)?;
    let candidates = super::load_candidates(&args.candidates)?;
    let by_id: BTreeMap<&str, &super::CandidateRecord> =
        candidates.iter().map(|c| (c.id.as_str(), c)).collect();

    let mut all_records: Vec<ErrorRecord> = Vec::new();
    let mut unparseable = 0usize;
    let mut examined = 0usize;
    for pair in &dataset.pairs {
        let Some(candidate) = by_id.get(pair.id.as_str()) else {
            continue;
        };
        let Ok(reference) = parse_block(&pair.opt) else {
            continue;
        };
        let Ok(cand_block) = parse_block(&candidate.candidate) else {
            unparseable += 1;
            continue;
        };
        // Exact matches cannot contribute errors; skip the alignment work.
        if print_block(&cand_block) == print_block(&reference) {
            continue;
        }
        examined += 1;
        all_records.extend(classify_errors(&cand_block, &reference));
    }

    let mut category_counts: BTreeMap<String, usize> = BTreeMap::new();
    for category in [
        ErrorCategory::Opcode,
        ErrorCategory::ImmediateValue,
        ErrorCategory::Label,
        ErrorCategory::Register,
    ] {
        category_counts.insert(
            format!("{category:?}"),
            all_records
                .iter()
                .filter(|r| r.category == category)
                .count(),
        );
    }

    let corpus_counts = reference_mnemonic_counts(&dataset.pairs);
    let stats = per_mnemonic_error_stats(&all_records, &corpus_counts, args.min_samples);
    let top10: Vec<_> = stats.iter().take(10).cloned().collect();
    let bottom10: Vec<_> = stats.iter().rev().take(10).cloned().collect();

    std::fs::create_dir_all(&args.out)?;
    write_jsonl(&args.out.join("error_records.jsonl"), &all_records)?;
    std::fs::write(
        &args.out.join("mnemonic_stats.csv"),
        render_stats_csv(&stats),
    )?;

    let mut run_config = RunConfig::new("errors", &args.out, 0);
    run_config.dataset = Some(args.dataset.display().to_string());
    run_config.min_samples = Some(args.min_samples);
    let report = serde_json::json!({
        "run_config": run_config,
        "dataset_manifest": manifest_fingerprint(&args.dataset),
        "examined": examined,
        "unparseable_candidates": unparseable,
        "category_counts": category_counts,
        "top10": top10,
        "bottom10": bottom10,
    });
    write_json(&args.out.join("errors.json"), &report)?;

    let mut table = String::from("Error Category    Count\n");
    for (category, count) in &category_counts {
        table.push_str(&format!("{category:<17} {count}\n"));
    }
    table.push('\n');
    table.push_str("Top 10 error probability (min samples filter applied)\n");
    table.push_str(&render_stats_table(&top10));
    table.push('\n');
    table.push_str("Bottom 10 error probability\n");
    table.push_str(&render_stats_table(&bottom10));
    std::fs::write(args.out.join("errors.txt"), &table)?;
    print!("{table}");
    Ok(())
}
