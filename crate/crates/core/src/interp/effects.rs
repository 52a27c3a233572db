//! Observable effects of a block execution: the returned value register,
//! the terminator outcome, and every store that lands outside the block's
//! own stack frame. Stores into the own frame are scratch traffic that a
//! correct optimizer is free to remove.

use crate::asm::{BasicBlock, Operand, Register};

use super::access::{writes_slot, RegSlot};
use super::exec::{ExecutionResult, StoreRecord, TerminatorOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectSet {
    pub x0: u64,
    pub terminator: TerminatorOutcome,
    /// Sorted multiset of stores outside the own frame.
    pub external_stores: Vec<StoreRecord>,
}

impl EffectSet {
    pub fn describe_difference(&self, other: &EffectSet) -> Option<String> {
        if self.x0 != other.x0 {
            return Some(format!("x0: {:#x} vs {:#x}", self.x0, other.x0));
        }
        if self.terminator != other.terminator {
            return Some(format!(
                "terminator: {:?} vs {:?}",
                self.terminator, other.terminator
            ));
        }
        if self.external_stores != other.external_stores {
            return Some(format!(
                "stores: {:?} vs {:?}",
                self.external_stores, other.external_stores
            ));
        }
        None
    }
}

/// Size of the frame claimed by a leading `sub sp, sp, #k` and released by a
/// trailing `add sp, sp, #k`, with no other writes to sp in between.
pub fn own_frame_size(block: &BasicBlock) -> Option<u64> {
    let instrs: Vec<_> = block.instructions().collect();
    let first = instrs.first()?;
    let k = sp_adjustment(first, "sub")?;

    // The releasing add must be the last instruction or directly precede the
    // terminator.
    let mut release = None;
    for (i, instr) in instrs.iter().enumerate().skip(1) {
        if sp_adjustment(instr, "add") == Some(k) {
            release = Some(i);
        }
    }
    let release = release?;
    let after: Vec<_> = instrs[release + 1..].iter().collect();
    let tail_ok = after.is_empty()
        || (after.len() == 1 && crate::asm::is_terminator_mnemonic(&after[0].mnemonic));
    if !tail_ok {
        return None;
    }
    if instrs[1..release]
        .iter()
        .any(|i| writes_slot(i, RegSlot::Sp))
    {
        return None;
    }
    Some(k)
}

fn sp_adjustment(instr: &crate::asm::Instruction, mnemonic: &str) -> Option<u64> {
    if instr.mnemonic != mnemonic || instr.operands.len() != 3 {
        return None;
    }
    if instr.operands[0].as_reg() != Some(Register::Sp)
        || instr.operands[1].as_reg() != Some(Register::Sp)
    {
        return None;
    }
    match instr.operands[2] {
        Operand::Imm { value, .. } if value > 0 => Some(value as u64),
        _ => None,
    }
}

/// Project the observable effects of `result`. Requires `result.trap` to be
/// `None`.
pub fn observable_effects(result: &ExecutionResult, block: &BasicBlock) -> EffectSet {
    debug_assert!(result.trap.is_none());
    let frame = own_frame_size(block).map(|k| {
        let hi = result.final_state.sp;
        (hi.wrapping_sub(k), hi)
    });
    let mut external_stores: Vec<StoreRecord> = result
        .stores
        .iter()
        .filter(|s| {
            match frame {
                Some((lo, hi)) => {
                    let end = s.addr.wrapping_add(s.bytes as u64);
                    // Outside unless the whole span fits in [lo, hi).
                    !(s.addr >= lo && end <= hi && s.addr < end)
                }
                None => true,
            }
        })
        .copied()
        .collect();
    external_stores.sort();
    EffectSet {
        x0: result.final_state.x[0],
        terminator: result.terminator_outcome.clone(),
        external_stores,
    }
}
