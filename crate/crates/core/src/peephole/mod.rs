//! Reference rule-based peephole optimizer.
//!
//! Implements the six block-local optimization categories (constant folding,
//! strength reduction, null sequences, combine operations, algebraic laws,
//! address-mode operations) as a fixpoint of single-pass rewrites. Serves as
//! the internal compiler oracle: dataset references and the oracle adapter
//! both run through `optimize`.
//!
//! | Rule                 | Example                                            |
//! |----------------------|----------------------------------------------------|
//! | fold-constants       | `mov w0, #2; add w0, w0, #3` → `mov w0, #5`        |
//! | fold-mov-chain       | `mov w1, w0; mul w0, w1, #2` → `mul w0, w0, #2`    |
//! | algebraic-identity   | `mul w8, w8, w9` (w9=0) → `mov w8, wzr`            |
//! | mul-pow2-to-shift    | `mul w0, w0, #2` → `lsl w0, w0, #1`                |
//! | shift-by-zero        | `lsr w8, w8, #0` → (removed)                       |
//! | self-move            | `mov x1, x1` → (removed)                           |
//! | dead-register-write  | unread write → (removed)                           |
//! | dead-stack-store     | own-frame store never reloaded → (removed)         |
//! | shift-add-combine    | `lsl x2, x1, #1; add x3, x2, x2` → `lsl x3, x1, #2`|
//! | store-load-forward   | `str w8, [sp, #12]; ldr w0, [sp, #12]` → `mov`     |
//! | frame-elim           | unused `sub sp / add sp` pair → (removed)          |

mod analysis;
mod rules;

use serde::Serialize;

use crate::asm::{print_block, print_instruction, BasicBlock, BlockItem};

use analysis::live_out_set;
use rules::{reclassify_terminator, RuleCtx, RULES};

pub const ITERATION_CAP: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleCategory {
    ConstantFolding,
    StrengthReduction,
    NullSequences,
    CombineOperations,
    AlgebraicLaws,
    AddressModeOperations,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub rule: &'static str,
    pub category: RuleCategory,
    pub position: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct OptimizationTrace {
    pub applied: Vec<TraceStep>,
    pub iterations: u32,
    pub cap_exceeded: bool,
}

/// One left-to-right sweep: at each position, apply the first matching rule
/// from the fixed priority list, then continue past the rewritten window.
fn pass(
    block: &BasicBlock,
    live: &std::collections::BTreeSet<crate::interp::access::RegSlot>,
    trace: &mut Vec<TraceStep>,
) -> (BasicBlock, bool) {
    let mut items = block.items.clone();
    let mut terminator = block.terminator.clone();
    let mut changed = false;
    let mut pos = 0;
    while pos < items.len() {
        let current = BasicBlock {
            items: items.clone(),
            terminator: terminator.clone(),
        };
        let ctx = RuleCtx {
            items: &items,
            live,
            block: &current,
        };
        let Some(rewrite) = RULES.iter().find_map(|rule| rule(&ctx, pos)) else {
            pos += 1;
            continue;
        };
        changed = true;

        let mut touched: Vec<usize> = rewrite
            .remove
            .iter()
            .chain(rewrite.replace.iter().map(|(i, _)| i))
            .copied()
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let before = touched
            .iter()
            .filter_map(|&i| items.get(i))
            .map(print_item)
            .collect::<Vec<_>>()
            .join("; ");
        let after = rewrite
            .replace
            .iter()
            .map(|(_, instr)| print_instruction(instr))
            .collect::<Vec<_>>()
            .join("; ");
        trace.push(TraceStep {
            rule: rewrite.rule,
            category: rewrite.category,
            position: pos,
            before,
            after,
        });

        for (idx, instr) in rewrite.replace {
            items[idx] = BlockItem::Instr(instr);
        }
        let mut removals = rewrite.remove;
        removals.sort_unstable();
        removals.dedup();
        let removed_before = removals.iter().filter(|&&i| i <= pos).count();
        for idx in removals.into_iter().rev() {
            items.remove(idx);
        }
        terminator = reclassify_terminator(&items);
        pos = pos + 1 - removed_before;
    }
    (BasicBlock { items, terminator }, changed)
}

fn print_item(item: &BlockItem) -> String {
    match item {
        BlockItem::Instr(i) => print_instruction(i),
        BlockItem::Directive(d) => d.clone(),
        BlockItem::Label(l) => format!("{l}:"),
    }
}

/// Apply one rewrite sweep. Liveness is computed from the given block.
pub fn apply_rules_once(block: &BasicBlock) -> (BasicBlock, bool, Vec<TraceStep>) {
    let live = live_out_set(block);
    let mut trace = Vec::new();
    let (next, changed) = pass(block, &live, &mut trace);
    (next, changed, trace)
}

/// Iterate rewrite sweeps to a fixpoint (capped). Liveness is taken from the
/// input block and threaded through; once stable, the sweep is re-checked
/// under the output block's own liveness so that `optimize` is idempotent.
pub fn optimize(block: &BasicBlock) -> (BasicBlock, OptimizationTrace) {
    let mut live = live_out_set(block);
    let mut current = block.clone();
    let mut trace = OptimizationTrace::default();
    loop {
        if trace.iterations >= ITERATION_CAP {
            trace.cap_exceeded = true;
            break;
        }
        let (next, changed) = pass(&current, &live, &mut trace.applied);
        trace.iterations += 1;
        if changed {
            current = next;
            continue;
        }
        let fresh = live_out_set(&current);
        if fresh == live {
            break;
        }
        live = fresh;
    }
    (current, trace)
}

/// Convenience: optimize assembly text, returning canonical optimized text.
pub fn optimize_text(text: &str) -> Result<(String, OptimizationTrace), crate::asm::ParseError> {
    let block = crate::asm::parse_block(text)?;
    let (optimized, trace) = optimize(&block);
    Ok((print_block(&optimized), trace))
}
