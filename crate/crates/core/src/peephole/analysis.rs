//! Block-local dataflow queries used by the rewrite rules: forward constant
//! and copy tracking, next-access scans, and the live-out approximation.
//!
//! Liveness model: a register whose final in-block access is a write holds a
//! result the rest of the program may consume, so it is live-out; a register
//! whose final access is a read was a consumed temporary. The return-value
//! register (w0/x0) is live-out whenever the block ends in `ret`. Any
//! barrier instruction (calls, unknown or floating-point mnemonics) makes
//! every register live and blocks all scans across it.

use std::collections::BTreeSet;

use crate::asm::{BasicBlock, BlockItem, Instruction, Operand, Register};
use crate::interp::access::{instruction_access, RegSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

pub fn instr_at(items: &[BlockItem], idx: usize) -> Option<&Instruction> {
    items.get(idx).and_then(BlockItem::as_instr)
}

pub fn reads_slot(instr: &Instruction, slot: RegSlot) -> bool {
    let acc = instruction_access(instr);
    acc.barrier || acc.reads.iter().any(|r| RegSlot::of(*r) == Some(slot))
}

pub fn writes_slot(instr: &Instruction, slot: RegSlot) -> bool {
    let acc = instruction_access(instr);
    acc.barrier || acc.writes.iter().any(|r| RegSlot::of(*r) == Some(slot))
}

/// True when the instruction reads the 64-bit view of `slot` (upper bits
/// matter to it).
pub fn reads_slot_x_width(instr: &Instruction, slot: RegSlot) -> bool {
    let acc = instruction_access(instr);
    acc.barrier
        || acc
            .reads
            .iter()
            .any(|r| RegSlot::of(*r) == Some(slot) && r.is_64bit())
}

/// First access of `slot` strictly after item `after`.
pub fn next_access(
    items: &[BlockItem],
    after: usize,
    slot: RegSlot,
) -> Option<(usize, AccessKind)> {
    for (idx, item) in items.iter().enumerate().skip(after + 1) {
        let Some(instr) = item.as_instr() else {
            continue;
        };
        if reads_slot(instr, slot) {
            return Some((idx, AccessKind::Read));
        }
        if writes_slot(instr, slot) {
            return Some((idx, AccessKind::Write));
        }
    }
    None
}

/// Is the value in `slot` after item `idx` provably dead? True when the slot
/// is overwritten before any read, or never accessed again and not live-out.
pub fn is_dead_after(
    items: &[BlockItem],
    idx: usize,
    slot: RegSlot,
    live: &BTreeSet<RegSlot>,
) -> bool {
    match next_access(items, idx, slot) {
        Some((_, AccessKind::Read)) => false,
        Some((_, AccessKind::Write)) => true,
        None => !live.contains(&slot),
    }
}

/// Live-out register set of a block under the final-access model.
pub fn live_out_set(block: &BasicBlock) -> BTreeSet<RegSlot> {
    let mut live = BTreeSet::new();
    let mut last: std::collections::BTreeMap<RegSlot, AccessKind> = Default::default();
    for instr in block.instructions() {
        let acc = instruction_access(instr);
        if acc.barrier {
            for n in 0..=30 {
                live.insert(RegSlot::Gpr(n));
            }
            live.insert(RegSlot::Sp);
            return live;
        }
        for r in &acc.reads {
            if let Some(slot) = RegSlot::of(*r) {
                last.insert(slot, AccessKind::Read);
            }
        }
        for r in &acc.writes {
            if let Some(slot) = RegSlot::of(*r) {
                last.insert(slot, AccessKind::Write);
            }
        }
    }
    for (slot, kind) in last {
        if kind == AccessKind::Write {
            live.insert(slot);
        }
    }
    // The effect model always compares x0, so it is never dead.
    live.insert(RegSlot::Gpr(0));
    live
}

/// Walk backward from `use_idx` for a constant definition of `reg`'s slot.
/// Returns the full 64-bit slot value (W moves zero-extend) and the def index.
pub fn known_const(items: &[BlockItem], use_idx: usize, reg: Register) -> Option<(u64, usize)> {
    let slot = RegSlot::of(reg)?;
    for idx in (0..use_idx).rev() {
        let Some(instr) = instr_at(items, idx) else {
            continue;
        };
        let acc = instruction_access(instr);
        if acc.barrier {
            return None;
        }
        if !acc.writes.iter().any(|r| RegSlot::of(*r) == Some(slot)) {
            continue;
        }
        if instr.mnemonic != "mov" || instr.operands.len() != 2 {
            return None;
        }
        let dest = instr.operands[0].as_reg()?;
        if RegSlot::of(dest) != Some(slot) {
            return None;
        }
        return match &instr.operands[1] {
            Operand::Imm { value, .. } => {
                let slot_value = if dest.is_64bit() {
                    *value as u64
                } else {
                    *value as u64 & 0xFFFF_FFFF
                };
                Some((slot_value, idx))
            }
            Operand::Reg(r) if r.is_zero() => Some((0, idx)),
            _ => None,
        };
    }
    None
}

/// Walk backward from `use_idx` for a register-to-register copy defining
/// `reg`, with the source unchanged in between. A 32-bit copy only supports
/// 32-bit uses; a 64-bit copy supports both widths.
pub fn copy_source(
    items: &[BlockItem],
    use_idx: usize,
    reg: Register,
) -> Option<(Register, usize)> {
    let slot = RegSlot::of(reg)?;
    for idx in (0..use_idx).rev() {
        let Some(instr) = instr_at(items, idx) else {
            continue;
        };
        let acc = instruction_access(instr);
        if acc.barrier {
            return None;
        }
        if !acc.writes.iter().any(|r| RegSlot::of(*r) == Some(slot)) {
            continue;
        }
        if instr.mnemonic != "mov" || instr.operands.len() != 2 {
            return None;
        }
        let dest = instr.operands[0].as_reg()?;
        let src = instr.operands[1].as_reg()?;
        if RegSlot::of(dest) != Some(slot) || src.is_zero() || src.is_sp() || dest.is_sp() {
            return None;
        }
        if !dest.is_64bit() && reg.is_64bit() {
            return None; // 32-bit copy does not define the upper half
        }
        let src_slot = RegSlot::of(src)?;
        for between in idx + 1..use_idx {
            if let Some(i) = instr_at(items, between) {
                if writes_slot(i, src_slot) {
                    return None;
                }
            }
        }
        return Some((src, idx));
    }
    None
}

/// May the defining move at `def_idx` be deleted once its value is folded
/// into the consumer at `use_idx`? Requires the consumer to be the only
/// remaining reader and the value to be dead afterwards.
pub fn def_consumable(
    items: &[BlockItem],
    def_idx: usize,
    use_idx: usize,
    slot: RegSlot,
    consumer_overwrites: bool,
    live: &BTreeSet<RegSlot>,
) -> bool {
    for idx in def_idx + 1..use_idx {
        if let Some(instr) = instr_at(items, idx) {
            let acc = instruction_access(instr);
            if acc.barrier || acc.reads.iter().any(|r| RegSlot::of(*r) == Some(slot)) {
                return false;
            }
        }
    }
    consumer_overwrites || is_dead_after(items, use_idx, slot, live)
}

/// Instruction whose only architectural effect is a single register write
/// (no flags, no memory, no control flow). These are candidates for dead
/// write elimination.
pub fn sole_written_slot(instr: &Instruction) -> Option<RegSlot> {
    if crate::asm::is_terminator_mnemonic(&instr.mnemonic) {
        return None;
    }
    let acc = instruction_access(instr);
    if acc.barrier || acc.writes_flags || acc.stores_mem {
        return None;
    }
    match acc.writes.as_slice() {
        [only] => RegSlot::of(*only),
        _ => None,
    }
}

/// Removing an instruction whose only effect is rewriting `slot` with its
/// own 32-bit value is safe when the upper half cannot be observed: either
/// the previous write already zero-extended (a W write), or no later reader
/// sees the 64-bit view before the slot is overwritten.
pub fn w_self_write_removable(
    items: &[BlockItem],
    idx: usize,
    slot: RegSlot,
    live: &BTreeSet<RegSlot>,
) -> bool {
    for item in items[..idx].iter().rev() {
        let Some(instr) = item.as_instr() else {
            continue;
        };
        let acc = crate::interp::access::instruction_access(instr);
        if acc.barrier {
            break;
        }
        let writes_w = acc
            .writes
            .iter()
            .filter(|r| RegSlot::of(**r) == Some(slot))
            .map(|r| !r.is_64bit())
            .collect::<Vec<_>>();
        if !writes_w.is_empty() {
            if writes_w.iter().all(|w| *w) {
                return true; // upper half is already zero
            }
            break;
        }
    }
    for item in items.iter().skip(idx + 1) {
        let Some(instr) = item.as_instr() else {
            continue;
        };
        if reads_slot_x_width(instr, slot) {
            return false;
        }
        if writes_slot(instr, slot) {
            return true;
        }
    }
    !live.contains(&slot)
}
