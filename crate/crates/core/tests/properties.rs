//! Property suite: parser/printer round-trips over the full operand
//! grammar, metric laws, pipeline idempotence, and optimizer soundness on
//! randomized valid blocks.

use proptest::prelude::*;

use peepeval::asm::{parse_block, print_block, validate_block, BasicBlock};
use peepeval::corpus::{normalize, synth_blocks, SamplePair, SampleSource};
use peepeval::interp::io_equivalent;
use peepeval::metrics::{bleu, emr, evaluate_sample};
use peepeval::peephole::optimize;
use peepeval::rng::Rng;

// ── Structural generators ────────────────────────────────────────────────

fn arb_plain_reg() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u8..=30).prop_map(|n| format!("w{n}")),
        (0u8..=30).prop_map(|n| format!("x{n}")),
        Just("sp".to_string()),
        Just("wzr".to_string()),
        Just("xzr".to_string()),
    ]
}

/// Labels that cannot be confused with registers, shifts, or extends.
fn arb_label_name() -> impl Strategy<Value = String> {
    "[A-Za-z_.][A-Za-z0-9_.]{0,8}".prop_filter("not register/shift/extend-shaped", |s| {
        let lower = s.to_ascii_lowercase();
        peepeval::asm::Register::parse(&lower).is_none()
            && !matches!(
                lower.as_str(),
                "lsl"
                    | "lsr"
                    | "asr"
                    | "ror"
                    | "sxtw"
                    | "uxtw"
                    | "sxtb"
                    | "uxtb"
                    | "sxth"
                    | "uxth"
                    | "sxtx"
            )
            && !(lower.starts_with('w') || lower.starts_with('x'))
    })
}

fn arb_imm() -> impl Strategy<Value = String> {
    prop_oneof![
        (-5000i64..5000).prop_map(|v| format!("#{v}")),
        (0u64..0xFFFF).prop_map(|v| format!("#0x{v:x}")),
        "[a-z]{1,3}"
            .prop_filter("not numeric", |s| s.parse::<u64>().is_err())
            .prop_map(|s| format!("#{s}")),
    ]
}

fn arb_mem() -> impl Strategy<Value = String> {
    let base = prop_oneof![
        (0u8..=28).prop_map(|n| format!("x{n}")),
        Just("sp".to_string())
    ];
    prop_oneof![
        base.clone().prop_map(|b| format!("[{b}]")),
        (base.clone(), -256i64..256).prop_map(|(b, d)| format!("[{b}, #{d}]")),
        (base.clone(), -256i64..256).prop_map(|(b, d)| format!("[{b}, #{d}]!")),
        (base.clone(), -256i64..256).prop_map(|(b, d)| format!("[{b}], #{d}")),
        (base.clone(), 0u8..=28).prop_map(|(b, i)| format!("[{b}, x{i}]")),
        (base.clone(), 0u8..=28, 0u8..=4).prop_map(|(b, i, s)| format!("[{b}, x{i}, lsl #{s}]")),
        (base.clone(), 0u8..=28, 0u8..=4).prop_map(|(b, i, s)| format!("[{b}, w{i}, sxtw #{s}]")),
        (base, 0u8..=28).prop_map(|(b, i)| format!("[{b}, w{i}, uxtw]")),
    ]
}

fn arb_operand() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => arb_plain_reg(),
        2 => arb_imm(),
        2 => arb_mem(),
        1 => arb_label_name(),
        1 => (31u8..=99).prop_map(|n| format!("w{n}")),
        1 => (arb_plain_reg(), prop_oneof![Just("lsl"), Just("lsr"), Just("asr")], 0u8..=31)
            .prop_map(|(r, s, a)| format!("{r}, {s} #{a}")),
        1 => (0u8..=28).prop_map(|n| format!("x{n}, sxtw #2")),
        1 => arb_label_name().prop_map(|l| format!(":lo12:{l}")),
    ]
}

fn arb_mnemonic() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,5}".prop_filter("not terminator-class", |m| {
        !peepeval::asm::is_terminator_mnemonic(m)
    })
}

fn arb_instruction_line() -> impl Strategy<Value = String> {
    (
        arb_mnemonic(),
        proptest::collection::vec(arb_operand(), 0..4),
    )
        .prop_map(|(mnemonic, operands)| {
            if operands.is_empty() {
                mnemonic
            } else {
                format!("{mnemonic} {}", operands.join(", "))
            }
        })
}

fn arb_item_line() -> impl Strategy<Value = String> {
    prop_oneof![
        6 => arb_instruction_line(),
        1 => arb_label_name().prop_map(|l| format!("{l}:")),
        1 => "[a-z_]{1,10}".prop_map(|d| format!(".{d} 16")),
    ]
}

fn arb_terminator_line() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("ret".to_string()),
        arb_label_name().prop_map(|l| format!("b {l}")),
        (0u8..=30, arb_label_name()).prop_map(|(r, l)| format!("cbz w{r}, {l}")),
        arb_label_name().prop_map(|l| format!("b.eq {l}")),
    ]
}

fn arb_block_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(arb_item_line(), 1..8),
        proptest::option::of(arb_terminator_line()),
    )
        .prop_map(|(mut lines, terminator)| {
            if let Some(t) = terminator {
                lines.push(t);
            }
            lines.join("\n")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    /// Anything the parser accepts survives print → parse structurally, and
    /// printing is canonical (idempotent).
    #[test]
    fn parse_print_round_trip(text in arb_block_text()) {
        if let Ok(block) = parse_block(&text) {
            let printed = print_block(&block);
            let reparsed = parse_block(&printed).expect("printed block parses");
            prop_assert_eq!(&reparsed, &block);
            prop_assert_eq!(print_block(&reparsed), printed);
        }
    }

    /// Exact canonical match forces BLEU to 1 even through whitespace noise.
    #[test]
    fn exact_match_implies_bleu_one(
        text in arb_block_text(),
        extra_spaces in proptest::collection::vec(0usize..4, 1..6),
    ) {
        if let Ok(block) = parse_block(&text) {
            let reference = print_block(&block);
            // Mangle whitespace without changing structure.
            let mut candidate = reference.replace(", ", ",");
            for width in extra_spaces {
                candidate = candidate.replacen(' ', &" ".repeat(width + 1), 1);
            }
            if emr(&candidate, &reference) {
                let m = evaluate_sample(&reference, &candidate, 4, 0);
                prop_assert!(m.emr);
                prop_assert_eq!(m.bleu, 1.0);
            }
        }
    }

    /// BLEU self-score is exactly one for any non-empty parsed block.
    #[test]
    fn bleu_identity(text in arb_block_text()) {
        if let Ok(block) = parse_block(&text) {
            let canon = print_block(&block);
            if !canon.is_empty() {
                prop_assert_eq!(bleu(&canon, &canon), 1.0);
            }
        }
    }
}

// ── Seeded executable-block generator ────────────────────────────────────

/// Random valid straight-line integer blocks: ALU chains, optional stack
/// frame with spill/reload, plain `ret`. Never calls out, never traps.
fn random_exec_block(rng: &mut Rng) -> String {
    let w_regs = ["w0", "w1", "w2", "w8", "w9", "w10", "w11"];
    let x_regs = ["x0", "x1", "x2", "x8", "x9", "x10", "x11"];
    let mut lines: Vec<String> = Vec::new();
    let with_frame = rng.chance(1, 3);
    if with_frame {
        lines.push("sub sp, sp, #16".into());
        if rng.chance(1, 2) {
            lines.push(".cfi_def_cfa_offset 16".into());
        }
    }
    let body = 1 + rng.below(7);
    for _ in 0..body {
        let wide = rng.chance(1, 3);
        let bank: &[&str] = if wide { &x_regs } else { &w_regs };
        let rd = *rng.pick(bank);
        let rn = *rng.pick(bank);
        let rm = *rng.pick(bank);
        let line = match rng.below(12) {
            0 => format!("mov {rd}, #{}", rng.below(1000)),
            1 => format!("mov {rd}, {rn}"),
            2 => format!("add {rd}, {rn}, #{}", rng.below(256)),
            3 => format!("add {rd}, {rn}, {rm}"),
            4 => format!("sub {rd}, {rn}, #{}", rng.below(256)),
            5 => format!("mul {rd}, {rn}, #{}", rng.below(16)),
            6 => format!("mul {rd}, {rn}, {rm}"),
            7 => format!("udiv {rd}, {rn}, {rm}"),
            8 => {
                let shift = ["lsl", "lsr", "asr"][rng.below(3) as usize];
                let max = if wide { 63 } else { 31 };
                format!("{shift} {rd}, {rn}, #{}", rng.below(max + 1))
            }
            9 => {
                let op = ["and", "orr", "eor"][rng.below(3) as usize];
                format!("{op} {rd}, {rn}, {rm}")
            }
            10 if with_frame => {
                let off = 4 * rng.below(4);
                format!("str {}, [sp, #{off}]", rng.pick(&w_regs))
            }
            _ if with_frame => {
                let off = 4 * rng.below(4);
                format!("ldr {}, [sp, #{off}]", rng.pick(&w_regs))
            }
            _ => format!("mov {rd}, {}", if wide { "xzr" } else { "wzr" }),
        };
        lines.push(line);
    }
    if with_frame {
        lines.push("add sp, sp, #16".into());
    }
    lines.push("ret".into());
    lines.join("\n")
}

fn exec_blocks(count: usize, seed: u64) -> Vec<BasicBlock> {
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|_| {
            let text = random_exec_block(&mut rng);
            let block = parse_block(&text).expect("generator emits parseable blocks");
            assert!(
                validate_block(&block).valid(),
                "generator emitted invalid block:\n{text}"
            );
            block
        })
        .collect()
}

#[test]
fn optimizer_preserves_semantics_on_random_blocks() {
    for (i, block) in exec_blocks(1000, 0xFEED).iter().enumerate() {
        let (optimized, trace) = optimize(block);
        assert!(!trace.cap_exceeded, "case {i} hit the iteration cap");
        assert!(
            optimized.instruction_count() <= block.instruction_count(),
            "case {i} grew: {:?}",
            print_block(block)
        );
        assert!(
            validate_block(&optimized).valid(),
            "case {i} produced invalid output:\n{}\n->\n{}",
            print_block(block),
            print_block(&optimized)
        );
        let verdict = io_equivalent(block, &optimized, 50, 0xA11CE);
        assert!(
            verdict.is_equivalent(),
            "case {i} changed semantics:\n{}\n->\n{}\n{verdict:?}",
            print_block(block),
            print_block(&optimized)
        );
    }
}

#[test]
fn optimizer_is_idempotent_on_random_blocks() {
    for (i, block) in exec_blocks(400, 0xBEEF).iter().enumerate() {
        let (once, _) = optimize(block);
        let (twice, trace) = optimize(&once);
        assert_eq!(
            twice,
            once,
            "case {i} not idempotent: {:?} (extra rules: {:?})",
            print_block(block),
            trace.applied
        );
    }
}

#[test]
fn io_equivalence_is_reflexive_and_symmetric_on_random_blocks() {
    let blocks = exec_blocks(60, 0xCAFE);
    for block in &blocks {
        assert!(io_equivalent(block, block, 20, 1).is_equivalent());
    }
    for pair in blocks.chunks(2) {
        if let [a, b] = pair {
            let ab = io_equivalent(a, b, 20, 2).is_equivalent();
            let ba = io_equivalent(b, a, 20, 2).is_equivalent();
            assert_eq!(ab, ba);
        }
    }
}

#[test]
fn normalization_is_idempotent_on_noisy_pairs() {
    let mut rng = Rng::new(0x909);
    let mut pairs: Vec<SamplePair> = Vec::new();
    for (i, nonopt) in synth_blocks(150, 5, 15).into_iter().enumerate() {
        // Inject metadata noise that normalization must strip.
        let noisy = format!(".globl f{i}\n.p2align 2\n{}\n.size f{i}, 8", nonopt.nonopt);
        let keep = rng.chance(1, 2);
        pairs.push(SamplePair {
            id: format!("noisy-{i}"),
            source: SampleSource::Synthetic { seed: i as u64 },
            nonopt: if keep { noisy } else { nonopt.nonopt.clone() },
            opt: nonopt.opt.clone(),
            histogram: Default::default(),
        });
    }
    let once = normalize(pairs);
    let twice = normalize(once.clone());
    assert_eq!(once, twice);
    for pair in &once {
        assert!(!pair.nonopt.contains(".globl"));
        assert!(parse_block(&pair.nonopt).is_ok());
        assert!(
            parse_block(&pair.nonopt).unwrap().instruction_count() <= 15,
            "oversized block survived normalization"
        );
    }
}

#[test]
fn synthetic_pairs_round_trip_the_whole_metric_stack() {
    for pair in synth_blocks(120, 77, 15) {
        let m = evaluate_sample(&pair.opt, &pair.opt, 20, 9);
        assert!(m.emr);
        assert_eq!(m.bleu, 1.0);
        assert!(m.syntactic);
    }
}

// ── Opt-in soak tests (run with `cargo test -- --ignored`) ───────────────

/// Wider instruction mix than the default generator: flag setters and
/// consumers, conditional terminators, byte/half stores, register pairs,
/// heavy register aliasing.
fn adversarial_block(rng: &mut Rng) -> String {
    let w: Vec<String> = (0..12).map(|n| format!("w{n}")).collect();
    let x: Vec<String> = (0..12).map(|n| format!("x{n}")).collect();
    let mut lines: Vec<String> = Vec::new();
    let frame = match rng.below(3) {
        0 => 0,
        1 => 16,
        _ => 32,
    };
    if frame > 0 {
        lines.push(format!("sub sp, sp, #{frame}"));
        if rng.chance(1, 2) {
            lines.push(format!(".cfi_def_cfa_offset {frame}"));
        }
    }
    let mut flags_set = false;
    for _ in 0..(1 + rng.below(9)) {
        let wide = rng.chance(1, 3);
        let bank = if wide { &x } else { &w };
        let rd = rng.pick(bank).clone();
        let rn = rng.pick(bank).clone();
        let rm = rng.pick(bank).clone();
        let line = match rng.below(16) {
            0 => format!("mov {rd}, #{}", rng.below(2000)),
            1 => format!("mov {rd}, {rn}"),
            2 => format!("add {rd}, {rn}, #{}", rng.below(512)),
            3 => format!("sub {rd}, {rn}, {rm}"),
            4 => format!("mul {rd}, {rn}, #{}", rng.below(17)),
            5 => format!("sdiv {rd}, {rn}, {rm}"),
            6 => {
                let shift = ["lsl", "lsr", "asr"][rng.below(3) as usize];
                format!(
                    "{shift} {rd}, {rn}, #{}",
                    rng.below(if wide { 64 } else { 32 })
                )
            }
            7 => format!(
                "{} {rd}, {rn}, {rm}",
                ["and", "orr", "eor"][rng.below(3) as usize]
            ),
            8 => {
                flags_set = true;
                format!(
                    "{} {rd}, {rn}, {rm}",
                    ["adds", "subs", "ands"][rng.below(3) as usize]
                )
            }
            9 => {
                flags_set = true;
                format!("cmp {rn}, {rm}")
            }
            10 if flags_set => format!(
                "cset {rd}, {}",
                ["eq", "ne", "lt", "hi"][rng.below(4) as usize]
            ),
            11 => format!("{} {rd}, {rn}", ["neg", "mvn"][rng.below(2) as usize]),
            12 if frame > 0 => {
                let (op, width) = [("strb", 1u64), ("strh", 2), ("str", 4)][rng.below(3) as usize];
                let off = rng.below(frame - width + 1);
                format!("{op} {}, [sp, #{off}]", rng.pick(&w))
            }
            13 if frame > 0 => {
                let (op, width) = [("ldrb", 1u64), ("ldrh", 2), ("ldr", 4)][rng.below(3) as usize];
                let off = rng.below(frame - width + 1);
                format!("{op} {}, [sp, #{off}]", rng.pick(&w))
            }
            14 if frame >= 16 => format!("stp x0, x1, [sp, #{}]", 8 * rng.below(frame / 16)),
            _ => format!("sxtw {}, {}", rng.pick(&x), rng.pick(&w)),
        };
        lines.push(line);
    }
    if frame > 0 {
        lines.push(format!("add sp, sp, #{frame}"));
    }
    match rng.below(5) {
        0 => lines.push("b .LBB0_7".into()),
        1 => lines.push(format!("cbz {}, .LBB0_3", rng.pick(&w))),
        2 if flags_set => lines.push("b.eq .LBB0_2".into()),
        3 => {} // fall-through block
        _ => lines.push("ret".into()),
    }
    lines.join("\n")
}

#[test]
#[ignore = "soak test, minutes of fuzzing"]
fn soak_optimizer_soundness() {
    let mut rng = Rng::new(0xDEAD_BEA7);
    let mut rewritten = 0usize;
    for i in 0..30_000 {
        let text = adversarial_block(&mut rng);
        let Ok(block) = parse_block(&text) else {
            continue;
        };
        let (optimized, trace) = optimize(&block);
        assert!(!trace.cap_exceeded, "case {i} hit cap:\n{text}");
        assert!(
            optimized.instruction_count() <= block.instruction_count(),
            "case {i} grew:\n{text}"
        );
        if !trace.applied.is_empty() {
            rewritten += 1;
        }
        if let peepeval::interp::EquivalenceVerdict::Divergent { detail, .. } =
            io_equivalent(&block, &optimized, 20, 0x50AC)
        {
            panic!(
                "case {i} diverged ({detail}):\n{text}\n->\n{}",
                print_block(&optimized)
            );
        }
        let (twice, _) = optimize(&optimized);
        assert_eq!(twice, optimized, "case {i} not idempotent:\n{text}");
    }
    assert!(
        rewritten > 5_000,
        "generator too tame: only {rewritten} rewrites"
    );
}

#[test]
#[ignore = "soak test"]
fn soak_parser_never_panics() {
    let mut rng = Rng::new(0x7E57);
    let alphabet: Vec<char> = "abwx0123456789#[], .:_-\n\\nrlsmovdiuqzp\t!"
        .chars()
        .collect();
    for _ in 0..100_000 {
        let len = rng.below(60) as usize;
        let text: String = (0..len)
            .map(|_| alphabet[rng.below(alphabet.len() as u64) as usize])
            .collect();
        let _ = parse_block(&text);
        let _ = peepeval::adapter::extract_code(&text);
        if let Ok(block) = parse_block(&text) {
            let _ = validate_block(&block);
            let _ = print_block(&block);
            let _ = optimize(&block);
        }
    }
}
