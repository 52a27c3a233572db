//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line with its measured result. Criteria 6 and 8 drive the compiled
//! binary end to end; the rest exercise the library directly.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use peepeval::asm::{parse_block, print_block, validate_block, DiagnosticCode};
use peepeval::interp::{io_equivalent, EquivalenceVerdict};
use peepeval::metrics::{bleu, emr};
use peepeval::peephole::optimize;
use peepeval::rng::Rng;
use peepeval::taxonomy::{classify_errors, confidence_interval, ErrorCategory};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_peepeval"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("peepeval-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

// ── Criterion 1: confidence-interval fidelity ────────────────────────────

/// Golden (Error Count, Total Count) rows with their expected
/// (Error Prob, Conf) values at six printed decimals.
const GOLDEN_CI_ROWS: &[(&str, u64, u64, f64, f64)] = &[
    ("eor", 22, 51, 0.431373, 0.135929),
    ("ldurb", 73, 175, 0.417143, 0.073057),
    ("asr", 29, 81, 0.358025, 0.104407),
    ("adds", 22, 65, 0.338462, 0.115035),
    ("lsr", 24, 72, 0.333333, 0.108889),
    ("fmov", 58, 222, 0.261261, 0.057791),
    ("stur", 1381, 5718, 0.241518, 0.011094),
    ("tbnz", 140, 588, 0.238095, 0.034427),
    ("ldursw", 35, 151, 0.231788, 0.067306),
    ("orr", 16, 71, 0.225352, 0.097187),
    ("stp", 37, 7250, 0.005103, 0.001640),
    ("ldp", 37, 5164, 0.007165, 0.002300),
    ("ret", 73, 7028, 0.010387, 0.002370),
    ("fadd", 9, 682, 0.013196, 0.008565),
    ("bl", 218, 15087, 0.014450, 0.001904),
    ("cbz", 27, 1145, 0.023581, 0.008789),
    ("b", 499, 18584, 0.026851, 0.002324),
    ("mul", 37, 1040, 0.035577, 0.011258),
    ("sdiv", 46, 1192, 0.038591, 0.010935),
    ("fcmp", 7, 181, 0.038674, 0.028091),
];

#[test]
fn criterion_1_confidence_interval_fidelity() {
    let started = Instant::now();
    for (mnemonic, errors, total, want_p, want_conf) in GOLDEN_CI_ROWS {
        let (p, conf) = confidence_interval(*errors, *total).unwrap();
        assert!(
            (p - want_p).abs() <= 1e-6,
            "{mnemonic}: prob {p} vs golden {want_p}"
        );
        assert!(
            (conf - want_conf).abs() <= 1e-6,
            "{mnemonic}: conf {conf} vs golden {want_conf}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 1: all 20 golden CI rows reproduced at 1e-6 in {elapsed:?}");
}

// ── Criterion 2: optimization goldens ────────────────────────────────────

#[test]
fn criterion_2_optimization_goldens() {
    let started = Instant::now();
    let golden = |input: &str, want: &str| {
        let block = parse_block(input).unwrap();
        let (optimized, _) = optimize(&block);
        assert_eq!(print_block(&optimized), want, "input {input:?}");
    };
    golden("mov w0, #2\nadd w0, w0, #3\nret", "mov w0, #5\nret");
    golden("mov w1, w0\nmul w0, w1, #2\nret", "lsl w0, w0, #1\nret");
    golden("lsl w8, w8, #1\nlsr w8, w8, #0\nret", "lsl w8, w8, #1\nret");
    golden("mov w9, wzr\nmul w8, w8, w9\nret", "mov w8, wzr\nret");
    golden(
        "sub sp, sp, #16\n.cfi_def_cfa_offset 16\nmov w8, #1\nstr w8, [sp, #12]\nldr w0, [sp, #12]\nadd sp, sp, #16\nret",
        "mov w0, #1\nret",
    );

    // Combine-operations golden: the circulated optimized text
    // (add x3, x1, x1) computes x1*2, not x1*4, so the engine's
    // value-correct rewrite is asserted instead and the discrepancy is
    // checked at register level.
    let input = parse_block("lsl x2, x1, #1\nadd x3, x2, x2").unwrap();
    let (optimized, _) = optimize(&input);
    assert_eq!(print_block(&optimized), "lsl x3, x1, #2");
    assert!(
        io_equivalent(&input, &optimized, 200, 0xFE).is_equivalent(),
        "combine rewrite must preserve value"
    );
    let circulated = parse_block("add x3, x1, x1").unwrap();
    let mut state = peepeval::interp::init_state(9);
    state.x[1] = 3;
    let x3_input = peepeval::interp::run_block(state.clone(), &input)
        .final_state
        .x[3];
    let x3_engine = peepeval::interp::run_block(state.clone(), &optimized)
        .final_state
        .x[3];
    let x3_circulated = peepeval::interp::run_block(state, &circulated)
        .final_state
        .x[3];
    assert_eq!(x3_input, 12);
    assert_eq!(x3_engine, 12);
    assert_eq!(x3_circulated, 6, "the circulated text halves the result");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 2: six optimization-category goldens reproduced in {elapsed:?}");
}

// ── Criterion 3: equivalence fixtures ────────────────────────────────────

const BLOCK_A_ORIGINAL: &str = "sub sp, sp, #16\n.cfi_def_cfa_offset 16\nmov w8, w1\nstr w8, [sp, #12]\nstr x0, [sp]\nldr x9, [sp]\nldrsw x10, [sp, #12]\nmov w8, #5\nstr w8, [x9, x10, lsl #2]\nadd sp, sp, #16\nret";
const BLOCK_B_LLVM: &str =
    "lsl x8, x1, #32\nasr x9, x8, #32\nmov w8, #5\nstr w8, [x0, x9, lsl #2]\nret";
const BLOCK_D_LLAMA2: &str =
    "movsl x8, x0, #2\nmovr x8, x0, #2\nstr w8, #5\nstr w8, [x0, x9, lsl #2]\nret";
const BLOCK_E_GPT_O1: &str = "mov w8, #5\nstr w8, [x0, w1, sxtw #2]\nret";

#[test]
fn criterion_3_equivalence_fixtures() {
    let started = Instant::now();
    let a = parse_block(BLOCK_A_ORIGINAL).unwrap();
    let b = parse_block(BLOCK_B_LLVM).unwrap();
    let d = parse_block(BLOCK_D_LLAMA2).unwrap();
    let e = parse_block(BLOCK_E_GPT_O1).unwrap();

    assert!(
        io_equivalent(&b, &e, 1000, 0xC0FFEE).is_equivalent(),
        "b vs e"
    );
    assert!(
        io_equivalent(&a, &b, 1000, 0xC0FFEE).is_equivalent(),
        "a vs b"
    );
    assert!(
        io_equivalent(&a, &e, 1000, 0xC0FFEE).is_equivalent(),
        "a vs e"
    );

    let report = validate_block(&d);
    assert!(!report.valid());
    assert!(
        report
            .diagnostics
            .iter()
            .any(|diag| diag.code == DiagnosticCode::UnknownMnemonic
                && diag.message.contains("movsl"))
    );
    assert!(matches!(
        io_equivalent(&d, &b, 10, 0),
        EquivalenceVerdict::Uncheckable { .. }
    ));

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("PASS criterion 3: code-comparison fixtures equivalent at 1000 trials in {elapsed:?}");
}

// ── Criterion 4: error-taxonomy goldens ──────────────────────────────────

#[test]
fn criterion_4_error_taxonomy_goldens() {
    let fixtures = [
        (
            "mov w8, w0, #0xff\nlsr w8, w8, #4\norr w0, w8, w9",
            "and w8, w0, #0xff\nlsr w8, w8, #4\norr w0, w8, w9",
            ErrorCategory::Opcode,
        ),
        (
            "mov w0, #r\nret",
            "mov w0, wzr\nret",
            ErrorCategory::ImmediateValue,
        ),
        (
            "adrp x0, .Lstrstr\nadd x0, x0, :lo12:.L.str",
            "adrp x0, .L.str\nadd x0, x0, :lo12:.L.str",
            ErrorCategory::Label,
        ),
        (
            "mov w8, x0\nmov w0, #3\nstr w0, [x8]\nret",
            "mov x8, x0\nmov w0, #3\nstr w0, [x8]\nret",
            ErrorCategory::Register,
        ),
    ];
    for (candidate, reference, want) in fixtures {
        let records = classify_errors(
            &parse_block(candidate).unwrap(),
            &parse_block(reference).unwrap(),
        );
        assert_eq!(
            records.len(),
            1,
            "{candidate:?} produced {:?}",
            records.iter().map(|r| r.category).collect::<Vec<_>>()
        );
        assert_eq!(records[0].category, want, "{candidate:?}");
    }
    println!(
        "PASS criterion 4: the four error-example pairs classify to exactly one category each"
    );
}

// ── Criterion 5: metric and pipeline laws over generated cases ───────────

fn random_block_text(rng: &mut Rng) -> String {
    let w_regs = ["w0", "w1", "w2", "w8", "w9", "w10"];
    let x_regs = ["x0", "x1", "x2", "x8", "x9", "x10"];
    let mut lines: Vec<String> = Vec::new();
    let with_frame = rng.chance(1, 4);
    if with_frame {
        lines.push("sub sp, sp, #16".into());
        lines.push(".cfi_def_cfa_offset 16".into());
    }
    for _ in 0..(1 + rng.below(6)) {
        let wide = rng.chance(1, 3);
        let bank: &[&str] = if wide { &x_regs } else { &w_regs };
        let (rd, rn, rm) = (*rng.pick(bank), *rng.pick(bank), *rng.pick(bank));
        lines.push(match rng.below(10) {
            0 => format!("mov {rd}, #{}", rng.below(500)),
            1 => format!("mov {rd}, {rn}"),
            2 => format!("add {rd}, {rn}, #{}", rng.below(128)),
            3 => format!("sub {rd}, {rn}, {rm}"),
            4 => format!("mul {rd}, {rn}, #{}", rng.below(9)),
            5 => format!("orr {rd}, {rn}, {rm}"),
            6 => format!("eor {rd}, {rn}, #{}", rng.below(64)),
            7 => format!("lsl {rd}, {rn}, #{}", rng.below(if wide { 64 } else { 32 })),
            8 if with_frame => format!("str {}, [sp, #{}]", rng.pick(&w_regs), 4 * rng.below(4)),
            _ if with_frame => format!("ldr {}, [sp, #{}]", rng.pick(&w_regs), 4 * rng.below(4)),
            _ => format!("udiv {rd}, {rn}, {rm}"),
        });
    }
    if with_frame {
        lines.push("add sp, sp, #16".into());
    }
    lines.push("ret".into());
    lines.join("\n")
}

#[test]
fn criterion_5_metric_and_pipeline_laws() {
    let started = Instant::now();
    let mut rng = Rng::new(0x5EED);
    let cases = 1000usize;
    for i in 0..cases {
        let text = random_block_text(&mut rng);
        let block = parse_block(&text).unwrap_or_else(|e| panic!("case {i}: {e}"));
        assert!(validate_block(&block).valid(), "case {i} invalid: {text}");

        // Parse/print round trip.
        let printed = print_block(&block);
        let reparsed = parse_block(&printed).unwrap();
        assert_eq!(reparsed, block, "case {i} round trip");
        assert_eq!(
            print_block(&reparsed),
            printed,
            "case {i} print idempotence"
        );

        // Exact match implies BLEU 1. Mangle whitespace without changing
        // structure; both must canonicalize to the same text.
        let mangled = printed.replace(", ", ",  ").replace('\n', " \n");
        assert!(emr(&mangled, &printed), "case {i} emr");
        assert_eq!(bleu(&printed, &printed), 1.0, "case {i} bleu identity");

        // Normalization idempotence.
        let pair = peepeval::corpus::SamplePair {
            id: format!("case-{i}"),
            source: peepeval::corpus::SampleSource::Synthetic { seed: i as u64 },
            nonopt: format!(".globl f{i}\n{printed}"),
            opt: printed.clone(),
            histogram: Default::default(),
        };
        let once = peepeval::corpus::normalize(vec![pair]);
        let twice = peepeval::corpus::normalize(once.clone());
        assert_eq!(once, twice, "case {i} normalize idempotence");

        // Optimizer laws: idempotent, size-monotone, semantics-preserving.
        let (optimized, _) = optimize(&block);
        assert!(
            optimized.instruction_count() <= block.instruction_count(),
            "case {i} grew"
        );
        let (again, _) = optimize(&optimized);
        assert_eq!(again, optimized, "case {i} optimize idempotence");
        let verdict = io_equivalent(&block, &optimized, 50, 0x1CE);
        assert!(
            verdict.is_equivalent(),
            "case {i} semantics broken:\n{text}\n->\n{}\n{verdict:?}",
            print_block(&optimized)
        );
    }
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 5: metric/pipeline laws held on {cases} generated cases in {elapsed:?}"
    );
}

// ── Criterion 6: oracle closure end to end ───────────────────────────────

#[test]
fn criterion_6_oracle_closure_end_to_end() {
    let started = Instant::now();
    let dir = workdir("closure");
    let dataset = dir.join("dataset.jsonl");
    let candidates = dir.join("candidates.jsonl");
    let eval_dir = dir.join("eval");

    let status = bin()
        .args(["extract", "--synthetic", "500", "--seed", "7", "--out"])
        .arg(&dataset)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .args([
            "optimize",
            "--adapter",
            "oracle",
            "--jobs",
            "1",
            "--dataset",
        ])
        .arg(&dataset)
        .arg("--out")
        .arg(&candidates)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .args(["evaluate", "--trials", "100", "--dataset"])
        .arg(&dataset)
        .arg("--candidates")
        .arg(&candidates)
        .arg("--out")
        .arg(&eval_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("summary.json")).unwrap())
            .unwrap();
    let overall = &summary["overall"];
    assert_eq!(overall["n"], 500);
    assert_eq!(overall["bleu_mean"], 1.0, "{overall}");
    assert_eq!(overall["emr_rate"], 1.0, "{overall}");
    assert_eq!(overall["syntactic_rate"], 1.0, "{overall}");
    assert_eq!(overall["io_rate"], 1.0, "{overall}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: oracle closure over 500 synthetic pairs scored all-ones in {elapsed:?}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

// ── Criterion 7: NZCV against the exhaustive 8-bit oracle ────────────────

struct Flags8 {
    n: bool,
    z: bool,
    c: bool,
    v: bool,
}

/// Straight two's-complement arithmetic at 8 bits.
fn oracle_adds8(a: u8, b: u8) -> Flags8 {
    let wide = a as u16 + b as u16;
    let result = (wide & 0xFF) as u8;
    Flags8 {
        n: result >= 0x80,
        z: result == 0,
        c: wide > 0xFF,
        v: (a as i8 as i16 + b as i8 as i16) != (result as i8 as i16),
    }
}

fn oracle_subs8(a: u8, b: u8) -> Flags8 {
    let result = a.wrapping_sub(b);
    Flags8 {
        n: result >= 0x80,
        z: result == 0,
        c: a >= b,
        v: (a as i8 as i16 - b as i8 as i16) != (result as i8 as i16),
    }
}

#[test]
fn criterion_7_flag_semantics_exhaustive() {
    let started = Instant::now();
    let adds = parse_block("adds w0, w1, w2\nret").unwrap();
    let subs = parse_block("subs w0, w1, w2\nret").unwrap();
    let base = peepeval::interp::init_state(0);
    // Operands live in the top byte of the 32-bit datapath, so carries,
    // signs, and overflow line up with the 8-bit oracle exactly.
    for a in 0..=255u32 {
        for b in 0..=255u32 {
            let mut state = base.clone();
            state.x[1] = (a as u64) << 24;
            state.x[2] = (b as u64) << 24;

            let flags = peepeval::interp::run_block(state.clone(), &adds)
                .final_state
                .nzcv;
            let want = oracle_adds8(a as u8, b as u8);
            assert!(
                flags.n == want.n && flags.z == want.z && flags.c == want.c && flags.v == want.v,
                "adds {a:#x},{b:#x}: got {flags:?}"
            );

            let flags = peepeval::interp::run_block(state, &subs).final_state.nzcv;
            let want = oracle_subs8(a as u8, b as u8);
            assert!(
                flags.n == want.n && flags.z == want.z && flags.c == want.c && flags.v == want.v,
                "subs {a:#x},{b:#x}: got {flags:?}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS criterion 7: adds/subs NZCV matched the 8-bit oracle on all 65536 pairs in {elapsed:?}");
}

// ── Criterion 8: few-shot sweep smoke from a primed replay cache ─────────

fn prime_cache(cache: &Path, dataset: &peepeval::corpus::Dataset, seed: u64) {
    use peepeval::adapter::{build_prompt, cache_store, CacheEntry, PromptSpec};
    let subset = peepeval::corpus::sample(dataset, 20, seed).unwrap();
    for k in 0..=5usize {
        let shots = peepeval::adapter::select_shots(&dataset.pairs, k, seed);
        for (idx, pair) in subset.pairs.iter().enumerate() {
            let prompt = build_prompt(&PromptSpec::new(shots.clone(), pair.nonopt.clone()));
            // Scripted improvement with shot count: no shots never matches,
            // three or more always match, two gets every other sample right.
            let correct = k >= 3 || (k == 2 && idx % 2 == 0);
            let text = if correct {
                pair.opt.clone()
            } else {
                format!("mov w13, #999\n{}", pair.opt)
            };
            cache_store(
                cache,
                &CacheEntry {
                    prompt,
                    text,
                    latency_ms: 40 + 10 * k as u64,
                    timestamp: "unix:0".into(),
                },
            )
            .unwrap();
        }
    }
}

#[test]
fn criterion_8_shots_sweep_smoke() {
    let dir = workdir("sweep");
    let dataset_path = dir.join("dataset.jsonl");
    let cache = dir.join("cache");
    let out = dir.join("out");

    let status = bin()
        .args(["extract", "--synthetic", "60", "--seed", "3", "--out"])
        .arg(&dataset_path)
        .status()
        .unwrap();
    assert!(status.success());

    let dataset = peepeval::corpus::load_dataset(&dataset_path).unwrap();
    prime_cache(&cache, &dataset, 3);

    let status = bin()
        .args([
            "shots-sweep",
            "--adapter",
            "replay",
            "--samples",
            "20",
            "--k-min",
            "0",
            "--k-max",
            "5",
            "--seed",
            "3",
            "--trials",
            "20",
        ])
        .arg("--dataset")
        .arg(&dataset_path)
        .arg("--cache")
        .arg(&cache)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(out.join("shots_sweep.csv")).unwrap();
    let mut emr_by_k = Vec::new();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        emr_by_k.push(fields[1].parse::<f64>().unwrap());
    }
    assert_eq!(emr_by_k.len(), 6);
    for window in emr_by_k.windows(2) {
        assert!(
            window[1] >= window[0],
            "EMR curve not monotone: {emr_by_k:?}"
        );
    }
    assert_eq!(emr_by_k[0], 0.0, "{emr_by_k:?}");
    assert!((emr_by_k[2] - 0.5).abs() < 1e-9, "{emr_by_k:?}");
    assert_eq!(emr_by_k[5], 1.0, "{emr_by_k:?}");

    println!("PASS criterion 8: primed replay sweep produced a monotone EMR curve {emr_by_k:?}");
    std::fs::remove_dir_all(&dir).ok();
}
