//! Dataset construction: ingest whole-file assembly listings produced
//! outside the harness (non-optimized and optimized), split them into
//! function/block pairs, normalize, deduplicate, sample, and persist as
//! JSON Lines. A seeded synthetic generator provides desk-scale corpora
//! without a compiler installation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::{parse_block, print_block, BasicBlock, BlockItem};
use crate::peephole::optimize;
use crate::rng::{hash_str, mix, Rng};

/// Normalization recipe identifier recorded in every manifest: drop `.`
/// directives except `.cfi_*`, keep labels, canonical reprint, cap at 15
/// instruction lines, dedup by content hash.
pub const NORMALIZER_VERSION: &str = "norm-v1-keep-cfi-labels";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("{file}: line {line}: unparseable listing ({message})")]
    UnparseableFile {
        file: String,
        line: u32,
        message: String,
    },
    #[error("requested {requested} samples from a dataset of {available}")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed dataset file: {0}")]
    MalformedDataset(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSource {
    Ingested {
        file: String,
        function: String,
        block_ordinal: usize,
    },
    Synthetic {
        seed: u64,
    },
}

impl SampleSource {
    /// Coarse tag for per-source reporting.
    pub fn tag(&self) -> String {
        match self {
            SampleSource::Ingested { file, .. } => file.clone(),
            SampleSource::Synthetic { .. } => "synthetic".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub id: String,
    pub source: SampleSource,
    pub nonopt: String,
    pub opt: String,
    pub histogram: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub created: String,
    pub normalizer_version: String,
    pub counts_per_source: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampleInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<SamplePair>,
    pub manifest: Manifest,
}

/// Content hash of a pair: first 32 hex digits of sha256(nonopt \0 opt).
pub fn pair_id(nonopt: &str, opt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(nonopt.as_bytes());
    hasher.update([0u8]);
    hasher.update(opt.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(32);
    for byte in digest.iter().take(16) {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

pub fn mnemonic_histogram(block: &BasicBlock) -> BTreeMap<String, u64> {
    let mut histogram = BTreeMap::new();
    for instr in block.instructions() {
        *histogram.entry(instr.mnemonic.clone()).or_default() += 1;
    }
    histogram
}

fn make_pair(source: SampleSource, nonopt: String, opt: String) -> Option<SamplePair> {
    let block = parse_block(&nonopt).ok()?;
    parse_block(&opt).ok()?;
    Some(SamplePair {
        id: pair_id(&nonopt, &opt),
        source,
        histogram: mnemonic_histogram(&block),
        nonopt,
        opt,
    })
}

// ── Listing extraction ───────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipLog {
    pub function: String,
    pub reason: String,
}

/// Blocks of one function within a listing, as raw text.
type FunctionBlocks = Vec<(String, Vec<String>)>;

/// Split a whole-file listing into (function, blocks-of-text). Functions
/// start at non-dot labels; `.LBB*` labels and terminator-class instructions
/// delimit blocks. Input without any function label is treated as a single
/// anonymous function.
fn split_listing(text: &str, file: &str) -> Result<FunctionBlocks, CorpusError> {
    let mut functions: FunctionBlocks = Vec::new();
    let mut current_fn: Option<(String, Vec<String>)> = None;
    let mut current_block: Vec<String> = Vec::new();

    fn close_block(block: &mut Vec<String>, blocks: &mut Vec<String>) {
        let has_instruction = block.iter().any(|line| {
            matches!(
                crate::asm::parse_line(line, 1),
                Ok(Some(BlockItem::Instr(_)))
            )
        });
        if has_instruction {
            blocks.push(block.join("\n"));
        }
        block.clear();
    }
    fn close_fn(
        functions: &mut FunctionBlocks,
        current: &mut Option<(String, Vec<String>)>,
        block: &mut Vec<String>,
    ) {
        if let Some((name, mut blocks)) = current.take() {
            close_block(block, &mut blocks);
            functions.push((name, blocks));
        }
        block.clear();
    }

    for (idx, line) in crate::asm::split_lines(text).iter().enumerate() {
        let line_no = (idx + 1) as u32;
        let item =
            crate::asm::parse_line(line, line_no).map_err(|e| CorpusError::UnparseableFile {
                file: file.to_string(),
                line: line_no,
                message: e.to_string(),
            })?;
        match item {
            None => {}
            Some(BlockItem::Label(name)) => {
                if name.starts_with(".Lfunc_end") {
                    close_fn(&mut functions, &mut current_fn, &mut current_block);
                } else if !name.starts_with('.') {
                    close_fn(&mut functions, &mut current_fn, &mut current_block);
                    current_fn = Some((name, Vec::new()));
                } else if let Some((_, blocks)) = current_fn.as_mut() {
                    close_block(&mut current_block, blocks);
                    current_block.push(format!("{name}:"));
                }
            }
            Some(BlockItem::Directive(_)) => {
                if current_fn.is_some() {
                    current_block.push(line.trim().to_string());
                }
            }
            Some(BlockItem::Instr(instr)) => {
                if current_fn.is_none() {
                    current_fn = Some((String::from("<anon>"), Vec::new()));
                }
                current_block.push(line.trim().to_string());
                if crate::asm::is_terminator_mnemonic(&instr.mnemonic) {
                    if let Some((_, blocks)) = current_fn.as_mut() {
                        close_block(&mut current_block, blocks);
                    }
                }
            }
        }
    }
    close_fn(&mut functions, &mut current_fn, &mut current_block);
    Ok(functions)
}

/// Match optimized and non-optimized listings by (function, block ordinal).
/// Functions whose block counts differ are skipped: the optimizer contract
/// is CFG-preserving, so a count mismatch means something else changed.
pub fn extract_pairs(
    nonopt_asm: &str,
    opt_asm: &str,
    file: &str,
) -> Result<(Vec<SamplePair>, Vec<SkipLog>), CorpusError> {
    let nonopt_fns = split_listing(nonopt_asm, file)?;
    let opt_fns = split_listing(opt_asm, file)?;
    let opt_map: BTreeMap<&str, &Vec<String>> =
        opt_fns.iter().map(|(n, b)| (n.as_str(), b)).collect();

    let mut pairs = Vec::new();
    let mut skips = Vec::new();
    for (name, nonopt_blocks) in &nonopt_fns {
        let Some(opt_blocks) = opt_map.get(name.as_str()) else {
            skips.push(SkipLog {
                function: name.clone(),
                reason: "missing from optimized listing".into(),
            });
            continue;
        };
        if nonopt_blocks.len() != opt_blocks.len() {
            skips.push(SkipLog {
                function: name.clone(),
                reason: format!(
                    "block count changed ({} vs {})",
                    nonopt_blocks.len(),
                    opt_blocks.len()
                ),
            });
            continue;
        }
        for (ordinal, (nb, ob)) in nonopt_blocks.iter().zip(opt_blocks.iter()).enumerate() {
            let source = SampleSource::Ingested {
                file: file.to_string(),
                function: name.clone(),
                block_ordinal: ordinal,
            };
            if let Some(pair) = make_pair(source, nb.clone(), ob.clone()) {
                pairs.push(pair);
            } else {
                skips.push(SkipLog {
                    function: name.clone(),
                    reason: format!("block {ordinal} failed to parse"),
                });
            }
        }
    }
    for (name, _) in &opt_fns {
        if !nonopt_fns.iter().any(|(n, _)| n == name) {
            skips.push(SkipLog {
                function: name.clone(),
                reason: "missing from non-optimized listing".into(),
            });
        }
    }
    Ok((pairs, skips))
}

// ── Normalization ────────────────────────────────────────────────────────

pub const MAX_BLOCK_LINES: usize = 15;

fn normalize_text(text: &str) -> Option<String> {
    let block = parse_block(text).ok()?;
    let items: Vec<BlockItem> = block
        .items
        .into_iter()
        .filter(|item| match item {
            BlockItem::Directive(d) => d.starts_with(".cfi_"),
            _ => true,
        })
        .collect();
    if !items.iter().any(|i| matches!(i, BlockItem::Instr(_))) {
        return None;
    }
    let rebuilt = items
        .iter()
        .map(|item| match item {
            BlockItem::Instr(i) => crate::asm::print_instruction(i),
            BlockItem::Directive(d) => d.clone(),
            BlockItem::Label(l) => format!("{l}:"),
        })
        .collect::<Vec<_>>()
        .join("\n");
    parse_block(&rebuilt).ok()?;
    Some(rebuilt)
}

/// Strip metadata directives (keeping `.cfi_*` and labels), canonicalize,
/// drop non-optimized blocks longer than 15 instruction lines, and dedup by
/// content hash. Idempotent.
pub fn normalize(pairs: Vec<SamplePair>) -> Vec<SamplePair> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for pair in pairs {
        let Some(nonopt) = normalize_text(&pair.nonopt) else {
            continue;
        };
        let Some(opt) = normalize_text(&pair.opt) else {
            continue;
        };
        let Ok(block) = parse_block(&nonopt) else {
            continue;
        };
        if block.instruction_count() > MAX_BLOCK_LINES {
            continue;
        }
        let id = pair_id(&nonopt, &opt);
        if !seen.insert(id.clone()) {
            continue;
        }
        out.push(SamplePair {
            id,
            source: pair.source,
            histogram: mnemonic_histogram(&block),
            nonopt,
            opt,
        });
    }
    out
}

// ── Sampling ─────────────────────────────────────────────────────────────

/// Uniform sample without replacement, deterministic for a fixed seed and
/// invariant to input order: selection priority is keyed by the pair id.
pub fn sample(dataset: &Dataset, n: usize, seed: u64) -> Result<Dataset, CorpusError> {
    if n > dataset.pairs.len() {
        return Err(CorpusError::NotEnoughSamples {
            requested: n,
            available: dataset.pairs.len(),
        });
    }
    let mut keyed: Vec<(u64, &SamplePair)> = dataset
        .pairs
        .iter()
        .map(|p| (mix(seed, hash_str(&p.id)), p))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    let pairs: Vec<SamplePair> = keyed.into_iter().take(n).map(|(_, p)| p.clone()).collect();
    Ok(Dataset {
        manifest: Manifest {
            created: dataset.manifest.created.clone(),
            normalizer_version: dataset.manifest.normalizer_version.clone(),
            counts_per_source: count_sources(&pairs),
            sampled: Some(SampleInfo { n, seed }),
        },
        pairs,
    })
}

pub fn count_sources(pairs: &[SamplePair]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for pair in pairs {
        *counts.entry(pair.source.tag()).or_default() += 1;
    }
    counts
}

// ── Synthetic generation ─────────────────────────────────────────────────

const SCRATCH_W: &[&str] = &["w8", "w9", "w10", "w11", "w12"];

fn synth_template(rng: &mut Rng, max_len: usize) -> Vec<String> {
    let scratch = *rng.pick(SCRATCH_W);
    let c1 = rng.below(100) + 1;
    let c2 = rng.below(100) + 1;
    match rng.below(8) {
        // Constant chain that folds to a single move.
        0 => {
            let mut lines = vec![
                format!("mov {scratch}, #{c1}"),
                format!("add {scratch}, {scratch}, #{c2}"),
            ];
            if max_len > 5 && rng.chance(1, 2) {
                lines.push(format!("sub {scratch}, {scratch}, #{}", rng.below(50)));
            }
            lines.push(format!("mov w0, {scratch}"));
            lines.push("ret".into());
            lines
        }
        // Multiplication by a zero temporary.
        1 => vec![
            format!("mov {scratch}, wzr"),
            format!("mul w0, w1, {scratch}"),
            "ret".into(),
        ],
        // Copy then multiply by a power of two.
        2 => {
            let p = 1u64 << (rng.below(4) + 1);
            vec![
                format!("mov {scratch}, w0"),
                format!("mul w0, {scratch}, #{p}"),
                "ret".into(),
            ]
        }
        // Shift followed by a no-op shift.
        3 => vec![
            format!("lsl {scratch}, {scratch}, #{}", rng.below(8) + 1),
            format!("lsr {scratch}, {scratch}, #0"),
            format!("mov w0, {scratch}"),
            "ret".into(),
        ],
        // Stack spill/reload frame.
        4 => {
            let off = 4 * (rng.below(3) + 1);
            vec![
                "sub sp, sp, #16".into(),
                ".cfi_def_cfa_offset 16".into(),
                format!("mov {scratch}, #{c1}"),
                format!("str {scratch}, [sp, #{off}]"),
                format!("ldr w0, [sp, #{off}]"),
                "add sp, sp, #16".into(),
                "ret".into(),
            ]
        }
        // Shift-add pair combining into a single shift.
        5 => {
            let t = ["x2", "x3", "x4"][rng.below(3) as usize];
            vec![
                format!("lsl {t}, x1, #{}", rng.below(5) + 1),
                format!("add x5, {t}, {t}"),
                "mov x0, x5".into(),
                "ret".into(),
            ]
        }
        // Overwritten constant.
        6 => vec![
            format!("mov {scratch}, #{c1}"),
            format!("mov {scratch}, #{c2}"),
            format!("mov w0, {scratch}"),
            "ret".into(),
        ],
        // Already-optimal blocks.
        _ => match rng.below(3) {
            0 => vec![format!("mov w0, #{c1}"), "ret".into()],
            1 => vec!["add w0, w1, w2".into(), "ret".into()],
            _ => vec![format!("ldr w0, [x1, #{}]", 4 * rng.below(4)), "ret".into()],
        },
    }
}

/// Generate `count` distinct synthetic pairs. The optimized side is the
/// reference engine's output, so every pair is IO-equivalent by
/// construction. Deterministic in `(count, seed)`.
pub fn synth_blocks(count: usize, seed: u64, max_len: usize) -> Vec<SamplePair> {
    assert!(
        max_len <= MAX_BLOCK_LINES,
        "max_len must be <= {MAX_BLOCK_LINES}"
    );
    let mut pairs = Vec::with_capacity(count);
    let mut seen = std::collections::BTreeSet::new();
    let mut attempt = 0u64;
    while pairs.len() < count {
        let pair_seed = mix(seed, attempt);
        attempt += 1;
        let mut rng = Rng::new(pair_seed);
        let lines = synth_template(&mut rng, max_len);
        if lines.iter().filter(|l| !l.starts_with('.')).count() > max_len {
            continue;
        }
        let nonopt = lines.join("\n");
        let Ok(block) = parse_block(&nonopt) else {
            continue;
        };
        let (optimized, _) = optimize(&block);
        let nonopt = print_block(&block);
        let opt = print_block(&optimized);
        let id = pair_id(&nonopt, &opt);
        if !seen.insert(id.clone()) {
            continue;
        }
        pairs.push(SamplePair {
            id,
            source: SampleSource::Synthetic { seed: pair_seed },
            histogram: mnemonic_histogram(&block),
            nonopt,
            opt,
        });
    }
    pairs
}

// ── Stats ────────────────────────────────────────────────────────────────

/// Mnemonic frequency over the non-optimized side, sorted by descending
/// count (name breaks ties).
pub fn corpus_stats(pairs: &[SamplePair]) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for pair in pairs {
        for (mnemonic, count) in &pair.histogram {
            *counts.entry(mnemonic.clone()).or_default() += count;
        }
    }
    let mut rows: Vec<(String, u64)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows
}

/// Mnemonic frequency over the optimized side (used as the error-statistics
/// denominator: these are the instructions the candidate was asked to emit).
pub fn reference_mnemonic_counts(pairs: &[SamplePair]) -> BTreeMap<String, u64> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for pair in pairs {
        if let Ok(block) = parse_block(&pair.opt) {
            for instr in block.instructions() {
                *counts.entry(instr.mnemonic.clone()).or_default() += 1;
            }
        }
    }
    counts
}

// ── Persistence ──────────────────────────────────────────────────────────

pub fn now_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

pub fn new_dataset(pairs: Vec<SamplePair>) -> Dataset {
    Dataset {
        manifest: Manifest {
            created: now_timestamp(),
            normalizer_version: NORMALIZER_VERSION.to_string(),
            counts_per_source: count_sources(&pairs),
            sampled: None,
        },
        pairs,
    }
}

/// Write `<path>` as JSONL plus a `<path>.manifest.json` sidecar.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), CorpusError> {
    let mut lines = String::new();
    for pair in &dataset.pairs {
        lines.push_str(&serde_json::to_string(pair).map_err(|e| CorpusError::Io(e.to_string()))?);
        lines.push('\n');
    }
    std::fs::write(path, lines).map_err(|e| CorpusError::Io(e.to_string()))?;
    let manifest = serde_json::to_string_pretty(&dataset.manifest)
        .map_err(|e| CorpusError::Io(e.to_string()))?;
    std::fs::write(manifest_path(path), manifest).map_err(|e| CorpusError::Io(e.to_string()))?;
    Ok(())
}

pub fn manifest_path(dataset_path: &Path) -> std::path::PathBuf {
    let mut name = dataset_path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    dataset_path.with_file_name(name)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(e.to_string()))?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: SamplePair = serde_json::from_str(line)
            .map_err(|e| CorpusError::MalformedDataset(format!("line {}: {e}", idx + 1)))?;
        pairs.push(pair);
    }
    let manifest = match std::fs::read_to_string(manifest_path(path)) {
        Ok(text) => serde_json::from_str(&text)
            .map_err(|e| CorpusError::MalformedDataset(format!("manifest: {e}")))?,
        Err(_) => Manifest {
            created: String::from("unknown"),
            normalizer_version: NORMALIZER_VERSION.to_string(),
            counts_per_source: count_sources(&pairs),
            sampled: None,
        },
    };
    Ok(Dataset { pairs, manifest })
}
