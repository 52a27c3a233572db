use std::path::PathBuf;

use clap::Args;
use peepeval::corpus::{
    self, extract_pairs, new_dataset, normalize, sample, save_dataset, synth_blocks, SamplePair,
};

use crate::report::{write_json, RunConfig};
use crate::AppError;

#[derive(Args)]
pub struct ExtractArgs {
    /// Directory of paired listings named <name>.O0.s / <name>.opt.s.
    #[arg(long)]
    pub input_dir: Option<PathBuf>,
    /// Generate N synthetic pairs instead of (or in addition to) ingesting.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop non-optimized blocks with more instruction lines than this.
    #[arg(long, default_value_t = corpus::MAX_BLOCK_LINES)]
    pub max_lines: usize,
    /// Randomly keep only N pairs (seeded, without replacement).
    #[arg(long)]
    pub sample: Option<usize>,
    /// Output dataset path (JSONL; a .manifest.json sidecar is written too).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ExtractArgs) -> Result<(), AppError> {
    if args.input_dir.is_none() && args.synthetic.is_none() {
        return Err(AppError::Input(
            "nothing to do: pass --input-dir and/or --synthetic N".into(),
        ));
    }
    let max_lines = args.max_lines.min(corpus::MAX_BLOCK_LINES);

    let mut pairs: Vec<SamplePair> = Vec::new();
    let mut parse_failures = 0usize;
    let mut skip_logs = Vec::new();

    if let Some(dir) = &args.input_dir {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| AppError::Input(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".O0.s"))
            .collect();
        entries.sort();
        if entries.is_empty() {
            eprintln!("warning: no *.O0.s files under {}", dir.display());
        }
        for nonopt_path in entries {
            let name = nonopt_path.to_string_lossy().to_string();
            let opt_path = PathBuf::from(name.replace(".O0.s", ".opt.s"));
            if !opt_path.exists() {
                eprintln!("skip {}: no matching .opt.s", nonopt_path.display());
                parse_failures += 1;
                continue;
            }
            let nonopt_text = std::fs::read_to_string(&nonopt_path)?;
            let opt_text = std::fs::read_to_string(&opt_path)?;
            let file_tag = nonopt_path
                .file_name()
                .map(|f| f.to_string_lossy().replace(".O0.s", ""))
                .unwrap_or_default();
            match extract_pairs(&nonopt_text, &opt_text, &file_tag) {
                Ok((mut extracted, skips)) => {
                    for skip in &skips {
                        eprintln!("skip {file_tag}:{}: {}", skip.function, skip.reason);
                    }
                    skip_logs.extend(skips);
                    pairs.append(&mut extracted);
                }
                Err(e) => {
                    eprintln!("parse failure: {e}");
                    parse_failures += 1;
                }
            }
        }
    }

    if let Some(n) = args.synthetic {
        pairs.extend(synth_blocks(n, args.seed, max_lines));
    }

    let pairs = normalize(pairs);
    let pairs: Vec<SamplePair> = pairs
        .into_iter()
        .filter(|p| {
            peepeval::asm::parse_block(&p.nonopt)
                .map(|b| b.instruction_count() <= max_lines)
                .unwrap_or(false)
        })
        .collect();

    let mut dataset = new_dataset(pairs);
    if let Some(n) = args.sample {
        dataset = sample(&dataset, n, args.seed).map_err(|e| AppError::Input(e.to_string()))?;
    }

    save_dataset(&dataset, &args.out).map_err(|e| AppError::Internal(e.to_string()))?;

    let mut config = RunConfig::new("extract", &args.out, args.seed);
    config.max_lines = Some(max_lines);
    config.synthetic = args.synthetic;
    let mut meta_path = args.out.clone().into_os_string();
    meta_path.push(".run.json");
    write_json(std::path::Path::new(&meta_path), &config)?;
    if !skip_logs.is_empty() {
        let mut skips_path = args.out.clone().into_os_string();
        skips_path.push(".skips.json");
        write_json(std::path::Path::new(&skips_path), &skip_logs)?;
    }

    println!(
        "extracted {} pairs -> {}",
        dataset.pairs.len(),
        args.out.display()
    );
    if parse_failures > 0 {
        return Err(AppError::Input(format!(
            "{parse_failures} input file(s) failed to parse"
        )));
    }
    Ok(())
}
