//! The rewrite rules, grouped by the six optimization categories. At each
//! instruction position the engine tries the categories in a fixed priority
//! order (folding > algebraic > strength > null > combine > address-mode)
//! and applies the first match.

use std::collections::BTreeSet;

use crate::asm::{
    AddrMode, BasicBlock, BlockItem, Instruction, MemOperand, Operand, Register, Terminator,
};
use crate::interp::access::{instruction_access, RegSlot};
use crate::interp::own_frame_size;

use super::analysis::*;
use super::RuleCategory;

/// A single rule application: items to remove and in-place replacements.
#[derive(Debug)]
pub struct Rewrite {
    pub rule: &'static str,
    pub category: RuleCategory,
    pub remove: Vec<usize>,
    pub replace: Vec<(usize, Instruction)>,
}

pub struct RuleCtx<'a> {
    pub items: &'a [BlockItem],
    pub live: &'a BTreeSet<RegSlot>,
    pub block: &'a BasicBlock,
}

fn synth(mnemonic: &str, operands: Vec<Operand>) -> Instruction {
    Instruction {
        mnemonic: mnemonic.to_string(),
        operands,
        raw: String::new(),
        line: 0,
    }
}

fn imm_for_width(value: u64, is64: bool) -> Operand {
    let v = if is64 {
        value as i64
    } else {
        value as u32 as i32 as i64
    };
    Operand::imm(v)
}

fn zero_reg(is64: bool) -> Register {
    if is64 {
        Register::Xzr
    } else {
        Register::Wzr
    }
}

/// Plain writable destination register of a 3-operand ALU instruction.
fn alu3_parts(instr: &Instruction) -> Option<(Register, Register, &Operand)> {
    if instr.operands.len() != 3 {
        return None;
    }
    let rd = instr.operands[0].as_reg()?;
    let rn = instr.operands[1].as_reg()?;
    if rd.is_sp() || rn.is_sp() || rd.is_zero() {
        return None;
    }
    Some((rd, rn, &instr.operands[2]))
}

const FOLDABLE: &[&str] = &[
    "add", "sub", "mul", "udiv", "sdiv", "and", "orr", "eor", "lsl", "lsr", "asr",
];

/// Constant evaluation mirroring the interpreter's integer semantics.
fn const_eval(mnemonic: &str, a: u64, b: u64, is64: bool) -> Option<u64> {
    let mask = if is64 { u64::MAX } else { 0xFFFF_FFFF };
    let (a, b) = (a & mask, b & mask);
    let datasize = if is64 { 64u64 } else { 32 };
    let v = match mnemonic {
        "add" => a.wrapping_add(b),
        "sub" => a.wrapping_sub(b),
        "mul" => a.wrapping_mul(b),
        "udiv" => {
            if b == 0 {
                0
            } else {
                a / b
            }
        }
        "sdiv" => {
            if is64 {
                let (a, b) = (a as i64, b as i64);
                if b == 0 {
                    0
                } else {
                    a.wrapping_div(b) as u64
                }
            } else {
                let (a, b) = (a as u32 as i32, b as u32 as i32);
                if b == 0 {
                    0
                } else {
                    a.wrapping_div(b) as u32 as u64
                }
            }
        }
        "and" => a & b,
        "orr" => a | b,
        "eor" => a ^ b,
        "lsl" => a.checked_shl((b % datasize) as u32).unwrap_or(0),
        "lsr" => a.checked_shr((b % datasize) as u32).unwrap_or(0),
        "asr" => {
            let sh = (b % datasize) as u32;
            if is64 {
                ((a as i64) >> sh) as u64
            } else {
                ((a as u32 as i32) >> sh) as u32 as u64
            }
        }
        _ => return None,
    };
    Some(v & mask)
}

/// Value of a source operand when it is statically known. Also reports the
/// def index when the value came from a register so the def can be consumed.
fn static_value(
    ctx: &RuleCtx<'_>,
    pos: usize,
    op: &Operand,
    is64: bool,
) -> Option<(u64, Option<(usize, RegSlot)>)> {
    let mask = if is64 { u64::MAX } else { 0xFFFF_FFFF };
    match op {
        Operand::Imm { value, .. } => Some((*value as u64 & mask, None)),
        Operand::Reg(r) if r.is_zero() => Some((0, None)),
        Operand::Reg(r) => {
            let (v, def) = known_const(ctx.items, pos, *r)?;
            Some((v & mask, Some((def, RegSlot::of(*r)?))))
        }
        _ => None,
    }
}

/// Try to delete the def feeding a consumed value.
fn consume_def(
    ctx: &RuleCtx<'_>,
    rewrite: &mut Rewrite,
    pos: usize,
    def: Option<(usize, RegSlot)>,
    consumer_dest: Register,
) {
    if let Some((def_idx, slot)) = def {
        let overwrites = RegSlot::of(consumer_dest) == Some(slot);
        if def_consumable(ctx.items, def_idx, pos, slot, overwrites, ctx.live) {
            rewrite.remove.push(def_idx);
        }
    }
}

// ── ConstantFolding ──────────────────────────────────────────────────────

/// Fold ALU ops and register moves whose sources are all known constants
/// into a single immediate move, consuming the feeding movs when dead.
pub fn fold_constants(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let is64;
    let result;
    let mut defs = Vec::new();
    let rd;

    if instr.mnemonic == "mov" && instr.operands.len() == 2 {
        rd = instr.operands[0].as_reg()?;
        if rd.is_sp() || rd.is_zero() {
            return None;
        }
        is64 = rd.is_64bit();
        // Only fold register sources; an immediate mov is already folded.
        let src = instr.operands[1].as_reg()?;
        if src.is_zero() || src.is_sp() {
            return None;
        }
        let (v, def) = static_value(ctx, pos, &instr.operands[1], is64)?;
        result = v;
        defs.push(def);
    } else if FOLDABLE.contains(&instr.mnemonic.as_str()) {
        let (d, rn, op2) = alu3_parts(instr)?;
        rd = d;
        is64 = rd.is_64bit();
        let (a, def_a) = static_value(ctx, pos, &Operand::Reg(rn), is64)?;
        let (b, def_b) = static_value(ctx, pos, op2, is64)?;
        result = const_eval(&instr.mnemonic, a, b, is64)?;
        defs.push(def_a);
        defs.push(def_b);
    } else {
        return None;
    }

    // Zero results materialize from the zero register, matching the
    // compiler's own output style.
    let source = if result == 0 {
        Operand::Reg(zero_reg(is64))
    } else {
        imm_for_width(result, is64)
    };
    let mut rewrite = Rewrite {
        rule: "fold-constants",
        category: RuleCategory::ConstantFolding,
        remove: Vec::new(),
        replace: vec![(pos, synth("mov", vec![Operand::Reg(rd), source]))],
    };
    let mut seen = BTreeSet::new();
    for def in defs {
        if let Some((idx, slot)) = def {
            if seen.insert(idx) {
                consume_def(ctx, &mut rewrite, pos, Some((idx, slot)), rd);
            }
        }
    }
    Some(rewrite)
}

/// Replace the single remaining use of a register copy with its source and
/// drop the copy ("fold mov chains").
pub fn propagate_copy(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let acc = instruction_access(instr);
    if acc.barrier {
        return None;
    }
    for reg in &acc.reads {
        if reg.is_zero() || reg.is_sp() {
            continue;
        }
        let slot = RegSlot::of(*reg)?;
        let Some((src, def_idx)) = copy_source(ctx.items, pos, *reg) else {
            continue;
        };
        // Only fire when the copy itself can be consumed.
        let overwrites = acc.writes.iter().any(|w| RegSlot::of(*w) == Some(slot));
        if !def_consumable(ctx.items, def_idx, pos, slot, overwrites, ctx.live) {
            continue;
        }
        let replacement_src = if reg.is_64bit() {
            src
        } else {
            match RegSlot::of(src) {
                Some(RegSlot::Gpr(n)) => Register::W(n),
                _ => continue,
            }
        };
        let mut new_instr = instr.clone();
        substitute_read_operands(&mut new_instr, *reg, replacement_src);
        // All reads must be gone or the copy is still needed; write-back
        // addressing can pin a read in place.
        if new_instr == *instr || reads_slot(&new_instr, slot) {
            continue;
        }
        return Some(Rewrite {
            rule: "fold-mov-chain",
            category: RuleCategory::ConstantFolding,
            remove: vec![def_idx],
            replace: vec![(pos, new_instr)],
        });
    }
    None
}

/// Replace `from` with `to` in the read positions of an instruction,
/// leaving destinations and write-back bases untouched.
fn substitute_read_operands(instr: &mut Instruction, from: Register, to: Register) {
    use crate::asm::{classify, MnemonicClass};
    let first_read_index = match classify(&instr.mnemonic) {
        Some(
            MnemonicClass::Mov
            | MnemonicClass::Alu3
            | MnemonicClass::Alu3Flags
            | MnemonicClass::Unary
            | MnemonicClass::ExtendOp
            | MnemonicClass::Load { .. }
            | MnemonicClass::Adrp,
        ) => 1,
        Some(MnemonicClass::LoadStorePair { load: true }) => 2,
        Some(
            MnemonicClass::Store { .. }
            | MnemonicClass::LoadStorePair { load: false }
            | MnemonicClass::Cmp
            | MnemonicClass::CompareBranch
            | MnemonicClass::TestBranch,
        ) => 0,
        _ => return,
    };
    for op in instr.operands.iter_mut().skip(first_read_index) {
        match op {
            Operand::Reg(r) if *r == from => *r = to,
            Operand::ShiftedReg { reg, .. } | Operand::ExtendedReg { reg, .. } if *reg == from => {
                *reg = to;
            }
            Operand::Mem(mem) => {
                // A pre/post-indexed base is also a destination.
                if mem.base == from && mem.mode == crate::asm::AddrMode::Offset {
                    mem.base = to;
                }
                if let Some(index) = &mut mem.index {
                    match index {
                        crate::asm::MemIndex::Shifted(r, _, _)
                        | crate::asm::MemIndex::Extended(r, _, _) => {
                            if *r == from {
                                *r = to;
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

// ── AlgebraicLaws ────────────────────────────────────────────────────────

/// x*0 → 0, x*1 → x, x+0 → x, x-0 → x, x|0 → x, x^0 → x. Immediate and
/// known-zero/one register forms; the feeding mov is consumed when dead.
pub fn algebraic_identity(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    if !matches!(
        instr.mnemonic.as_str(),
        "mul" | "add" | "sub" | "orr" | "eor"
    ) {
        return None;
    }
    let (rd, rn, op2) = alu3_parts(instr)?;
    let is64 = rd.is_64bit();

    let value = static_value(ctx, pos, op2, is64);
    let mul_commuted = if instr.mnemonic == "mul" && value.is_none() {
        static_value(ctx, pos, &Operand::Reg(rn), is64).map(|v| (v, true))
    } else {
        None
    };
    let ((b, def), commuted) = match (value, mul_commuted) {
        (Some(v), _) => (v, false),
        (None, Some((v, c))) => (v, c),
        (None, None) => return None,
    };
    let other = if commuted {
        match op2 {
            Operand::Reg(r) => *r,
            _ => return None,
        }
    } else {
        rn
    };

    let replacement = match (instr.mnemonic.as_str(), b) {
        ("mul", 0) => synth("mov", vec![Operand::Reg(rd), Operand::Reg(zero_reg(is64))]),
        ("mul", 1) => synth("mov", vec![Operand::Reg(rd), Operand::Reg(other)]),
        ("add" | "sub" | "orr" | "eor", 0) if !commuted => {
            synth("mov", vec![Operand::Reg(rd), Operand::Reg(other)])
        }
        _ => return None,
    };

    let mut rewrite = Rewrite {
        rule: "algebraic-identity",
        category: RuleCategory::AlgebraicLaws,
        remove: Vec::new(),
        replace: vec![(pos, replacement)],
    };
    consume_def(ctx, &mut rewrite, pos, def, rd);
    Some(rewrite)
}

// ── StrengthReduction ────────────────────────────────────────────────────

/// mul by 2^k → lsl #k.
pub fn strength_reduce_mul(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    if instr.mnemonic != "mul" {
        return None;
    }
    let (rd, rn, op2) = alu3_parts(instr)?;
    let is64 = rd.is_64bit();
    let (b, def) = static_value(ctx, pos, op2, is64)?;
    if b < 2 || !b.is_power_of_two() {
        return None;
    }
    let k = b.trailing_zeros() as i64;
    if k > if is64 { 63 } else { 31 } {
        return None;
    }
    let mut rewrite = Rewrite {
        rule: "mul-pow2-to-shift",
        category: RuleCategory::StrengthReduction,
        remove: Vec::new(),
        replace: vec![(
            pos,
            synth(
                "lsl",
                vec![Operand::Reg(rd), Operand::Reg(rn), Operand::imm(k)],
            ),
        )],
    };
    consume_def(ctx, &mut rewrite, pos, def, rd);
    Some(rewrite)
}

// ── NullSequences ────────────────────────────────────────────────────────

/// Shift-by-zero and self-moves are no-ops (eliminated or turned into a
/// plain move when source and destination differ).
pub fn identity_elim(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    match instr.mnemonic.as_str() {
        "lsl" | "lsr" | "asr" => {
            let (rd, rn, op2) = alu3_parts(instr)?;
            if op2.as_imm() != Some(0) {
                return None;
            }
            if rd == rn {
                let removable = rd.is_64bit()
                    || w_self_write_removable(ctx.items, pos, RegSlot::of(rd)?, ctx.live);
                if !removable {
                    return None;
                }
                Some(Rewrite {
                    rule: "shift-by-zero",
                    category: RuleCategory::NullSequences,
                    remove: vec![pos],
                    replace: Vec::new(),
                })
            } else {
                Some(Rewrite {
                    rule: "shift-by-zero",
                    category: RuleCategory::NullSequences,
                    remove: Vec::new(),
                    replace: vec![(pos, synth("mov", vec![Operand::Reg(rd), Operand::Reg(rn)]))],
                })
            }
        }
        "mov" => {
            let rd = instr.operands[0].as_reg()?;
            let rm = instr.operands.get(1)?.as_reg()?;
            if rd != rm || rd.is_sp() || rd.is_zero() {
                return None;
            }
            let removable =
                rd.is_64bit() || w_self_write_removable(ctx.items, pos, RegSlot::of(rd)?, ctx.live);
            if !removable {
                return None;
            }
            Some(Rewrite {
                rule: "self-move",
                category: RuleCategory::NullSequences,
                remove: vec![pos],
                replace: Vec::new(),
            })
        }
        _ => None,
    }
}

/// Remove a pure register write whose result is never used.
pub fn dead_write_elim(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let slot = sole_written_slot(instr)?;
    if !is_dead_after(ctx.items, pos, slot, ctx.live) {
        return None;
    }
    Some(Rewrite {
        rule: "dead-register-write",
        category: RuleCategory::NullSequences,
        remove: vec![pos],
        replace: Vec::new(),
    })
}

/// Width in bytes of a single-register store/load mnemonic.
fn transfer_width(instr: &Instruction, reg: Register) -> Option<u8> {
    match instr.mnemonic.as_str() {
        "str" | "stur" | "ldr" | "ldur" => Some(if reg.is_64bit() { 8 } else { 4 }),
        "strb" | "sturb" | "ldrb" | "ldurb" => Some(1),
        "strh" | "sturh" | "ldrh" | "ldurh" => Some(2),
        _ => None,
    }
}

/// Static sp-relative store: `str rt, [sp, #d]` with no index, offset mode.
fn sp_store(instr: &Instruction) -> Option<(Register, i64, u8)> {
    if !matches!(
        instr.mnemonic.as_str(),
        "str" | "stur" | "strb" | "sturb" | "strh" | "sturh"
    ) {
        return None;
    }
    let rt = instr.operands.first()?.as_reg()?;
    let mem = match instr.operands.get(1)? {
        Operand::Mem(m) => m,
        _ => return None,
    };
    if mem.base != Register::Sp || mem.index.is_some() || mem.mode != AddrMode::Offset {
        return None;
    }
    Some((rt, mem.disp, transfer_width(instr, rt)?))
}

fn any_mem_operand(instr: &Instruction) -> Option<(&MemOperand, u8)> {
    for op in &instr.operands {
        if let Operand::Mem(mem) = op {
            let rt = instr.operands.first().and_then(Operand::as_reg);
            let width = match instr.mnemonic.as_str() {
                "ldp" | "stp" => match rt {
                    Some(r) if !r.is_64bit() => 8,
                    _ => 16,
                },
                _ => rt.and_then(|r| transfer_width(instr, r)).unwrap_or(8),
            };
            return Some((mem, width));
        }
    }
    None
}

/// Remove a store into the block's own frame that no later in-block load can
/// observe before the frame is released.
pub fn dead_stack_store(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let (_, disp, width) = sp_store(instr)?;
    let frame = own_frame_size(ctx.block)? as i64;
    if disp < 0 || disp + width as i64 > frame {
        return None; // store escapes the frame
    }
    let lo = disp;
    let hi = disp + width as i64;

    for item in ctx.items.iter().skip(pos + 1) {
        let Some(later) = item.as_instr() else {
            continue;
        };
        let acc = instruction_access(later);
        if acc.barrier {
            return None;
        }
        if sp_adjust(later, "add").is_some() {
            break; // frame released, remaining lifetime is unobservable
        }
        if writes_slot(later, RegSlot::Sp) {
            return None;
        }
        if acc.loads_mem || acc.stores_mem {
            let Some((mem, w)) = any_mem_operand(later) else {
                return None;
            };
            if mem.base != Register::Sp || mem.index.is_some() || mem.mode != AddrMode::Offset {
                return None; // dynamic address might alias
            }
            let (l2, h2) = (mem.disp, mem.disp + w as i64);
            let overlaps = l2 < hi && lo < h2;
            if acc.loads_mem && overlaps {
                return None;
            }
            if acc.stores_mem && l2 <= lo && h2 >= hi {
                break; // fully overwritten before any load
            }
            if acc.stores_mem && overlaps {
                return None; // partial overwrite is not tracked
            }
        }
    }

    Some(Rewrite {
        rule: "dead-stack-store",
        category: RuleCategory::NullSequences,
        remove: vec![pos],
        replace: Vec::new(),
    })
}

fn sp_adjust(instr: &Instruction, mnemonic: &str) -> Option<u64> {
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

// ── CombineOperations ────────────────────────────────────────────────────

/// `lsl rT, rN, #k` + `add rD, rT, rT` → `lsl rD, rN, #(k+1)` when the
/// intermediate is dead afterwards.
pub fn shift_add_combine(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    if instr.mnemonic != "lsl" {
        return None;
    }
    let (rt, rn, op2) = alu3_parts(instr)?;
    let k = op2.as_imm()?;
    let is64 = rt.is_64bit();
    if rt.is_zero() || !(0..if is64 { 63 } else { 31 }).contains(&k) {
        return None;
    }
    let rt_slot = RegSlot::of(rt)?;
    let (j, kind) = next_access(ctx.items, pos, rt_slot)?;
    if kind != AccessKind::Read {
        return None;
    }
    let consumer = instr_at(ctx.items, j)?;
    if consumer.mnemonic != "add" {
        return None;
    }
    let (rd, a, b) = alu3_parts(consumer)?;
    if a != rt || b.as_reg() != Some(rt) || rd.is_64bit() != is64 {
        return None;
    }
    // rN must still hold the shifted value's source at the add.
    let rn_slot = RegSlot::of(rn)?;
    for idx in pos + 1..j {
        if let Some(between) = instr_at(ctx.items, idx) {
            if writes_slot(between, rn_slot) {
                return None;
            }
        }
    }
    let overwrites = RegSlot::of(rd) == Some(rt_slot);
    if !(overwrites || is_dead_after(ctx.items, j, rt_slot, ctx.live)) {
        return None;
    }
    Some(Rewrite {
        rule: "shift-add-combine",
        category: RuleCategory::CombineOperations,
        remove: vec![pos],
        replace: vec![(
            j,
            synth(
                "lsl",
                vec![Operand::Reg(rd), Operand::Reg(rn), Operand::imm(k + 1)],
            ),
        )],
    })
}

// ── AddressModeOperations ────────────────────────────────────────────────

/// Forward a stack store to a same-width load of the same slot:
/// the load becomes a register move (or disappears entirely).
pub fn store_load_forward(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let (rs, disp, width) = sp_store(instr)?;
    if !matches!(instr.mnemonic.as_str(), "str" | "stur") {
        return None; // byte/half forwarding would need masking
    }
    let rs_slot = RegSlot::of(rs);

    for (j, item) in ctx.items.iter().enumerate().skip(pos + 1) {
        let Some(later) = item.as_instr() else {
            continue;
        };
        let acc = instruction_access(later);
        if acc.barrier || writes_slot(later, RegSlot::Sp) {
            return None;
        }
        if acc.loads_mem || acc.stores_mem {
            let Some((mem, w)) = any_mem_operand(later) else {
                return None;
            };
            if mem.base != Register::Sp || mem.index.is_some() || mem.mode != AddrMode::Offset {
                return None;
            }
            let overlaps = mem.disp < disp + width as i64 && disp < mem.disp + w as i64;
            if overlaps {
                if acc.stores_mem {
                    return None; // clobbered before a load saw it
                }
                // Forward only to an exact-slot, same-width plain load.
                if !matches!(later.mnemonic.as_str(), "ldr" | "ldur")
                    || mem.disp != disp
                    || w != width
                {
                    return None;
                }
                let rd = later.operands.first()?.as_reg()?;
                if rd.is_64bit() != rs.is_64bit() {
                    return None;
                }
                if rd == rs {
                    let removable = rd.is_64bit()
                        || w_self_write_removable(ctx.items, j, RegSlot::of(rd)?, ctx.live);
                    if !removable {
                        return None;
                    }
                    return Some(Rewrite {
                        rule: "store-load-forward",
                        category: RuleCategory::AddressModeOperations,
                        remove: vec![j],
                        replace: Vec::new(),
                    });
                }
                return Some(Rewrite {
                    rule: "store-load-forward",
                    category: RuleCategory::AddressModeOperations,
                    remove: Vec::new(),
                    replace: vec![(j, synth("mov", vec![Operand::Reg(rd), Operand::Reg(rs)]))],
                });
            }
        }
        if let Some(slot) = rs_slot {
            if writes_slot(later, slot) {
                return None;
            }
        }
    }
    None
}

/// Drop a `sub sp / add sp` pair (and the frame's cfi directive) once no
/// instruction between them references sp.
pub fn frame_elim(ctx: &RuleCtx<'_>, pos: usize) -> Option<Rewrite> {
    let instr = instr_at(ctx.items, pos)?;
    let k = sp_adjust(instr, "sub")?;
    // Must be the leading instruction.
    if ctx.items[..pos].iter().any(|i| i.as_instr().is_some()) {
        return None;
    }

    let mut release = None;
    for (j, item) in ctx.items.iter().enumerate().skip(pos + 1) {
        let Some(later) = item.as_instr() else {
            continue;
        };
        if sp_adjust(later, "add") == Some(k) {
            release = Some(j);
            continue;
        }
        if release.is_some() {
            if crate::asm::is_terminator_mnemonic(&later.mnemonic) {
                continue;
            }
            return None; // the add was not trailing
        }
        let acc = instruction_access(later);
        if acc.barrier || acc.reads.contains(&Register::Sp) || acc.writes.contains(&Register::Sp) {
            return None;
        }
    }
    let release = release?;

    let mut remove = vec![pos, release];
    if let Some(BlockItem::Directive(text)) = ctx.items.get(pos + 1) {
        if text.starts_with(".cfi_def_cfa_offset") {
            remove.push(pos + 1);
        }
    }
    Some(Rewrite {
        rule: "frame-elim",
        category: RuleCategory::AddressModeOperations,
        remove,
        replace: Vec::new(),
    })
}

/// Rule priority at each position.
pub const RULES: &[fn(&RuleCtx<'_>, usize) -> Option<Rewrite>] = &[
    fold_constants,
    propagate_copy,
    algebraic_identity,
    strength_reduce_mul,
    identity_elim,
    dead_write_elim,
    dead_stack_store,
    shift_add_combine,
    store_load_forward,
    frame_elim,
];

/// Recompute the terminator summary; copy propagation may rewrite the
/// arguments of a conditional branch.
pub fn reclassify_terminator(items: &[BlockItem]) -> Terminator {
    match items.iter().rev().find_map(BlockItem::as_instr) {
        Some(instr) if crate::asm::is_terminator_mnemonic(&instr.mnemonic) => {
            crate::asm::terminator_of(instr)
        }
        _ => Terminator::None,
    }
}
