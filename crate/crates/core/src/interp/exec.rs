//! Straight-line executor for the integer subset.
//!
//! Supported: moves, add/sub (flag-setting forms included), mul, udiv/sdiv,
//! logical ops, shifts, cmp/cset, neg/mvn, sxtw/uxtw, the scaled/unscaled/
//! sign-extending load-store families, register pairs, adrp + :lo12:
//! materialization against a synthetic symbol table, and the terminator
//! class. NZCV follows ARMv8; division by zero yields 0. Anything else
//! (including all floating point) traps without aborting.

use serde::Serialize;

use crate::asm::{
    AddrMode, BasicBlock, Extend, Instruction, MemIndex, MemOperand, Operand, Register, Shift,
};

use super::state::{symbol_address, MachineState, Nzcv};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TerminatorOutcome {
    Returned,
    BranchTaken(String),
    BranchNotTaken,
    CalledExternal(String),
    FellThrough,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Trap {
    UnsupportedInstruction(String),
    Misaligned(u64),
}

/// One completed memory store: address, width in bytes, stored value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct StoreRecord {
    pub addr: u64,
    pub bytes: u8,
    pub value: u64,
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub final_state: MachineState,
    pub stores: Vec<StoreRecord>,
    pub terminator_outcome: TerminatorOutcome,
    pub trap: Option<Trap>,
}

enum Control {
    Continue,
    Done(TerminatorOutcome),
}

/// Execute a block from `state`. Directives and labels are skipped; a trap
/// stops execution and is reported in the result.
pub fn run_block(mut state: MachineState, block: &BasicBlock) -> ExecutionResult {
    let mut stores = Vec::new();
    let mut outcome = TerminatorOutcome::FellThrough;
    let mut trap = None;
    for instr in block.instructions() {
        match step(&mut state, &mut stores, instr) {
            Ok(Control::Continue) => {}
            Ok(Control::Done(o)) => {
                outcome = o;
                break;
            }
            Err(t) => {
                trap = Some(t);
                break;
            }
        }
    }
    ExecutionResult {
        final_state: state,
        stores,
        terminator_outcome: outcome,
        trap,
    }
}

fn unsupported(instr: &Instruction) -> Trap {
    Trap::UnsupportedInstruction(instr.mnemonic.clone())
}

fn mask(is64: bool) -> u64 {
    if is64 {
        u64::MAX
    } else {
        0xFFFF_FFFF
    }
}

/// ARM AddWithCarry at the given width, returning the result and NZCV.
pub fn add_with_carry(a: u64, b: u64, carry_in: bool, is64: bool) -> (u64, Nzcv) {
    let m = mask(is64);
    let sign = if is64 { 63 } else { 31 };
    let (a, b) = (a & m, b & m);
    let wide = a as u128 + b as u128 + carry_in as u128;
    let result = (wide as u64) & m;
    let flags = Nzcv {
        n: (result >> sign) & 1 == 1,
        z: result == 0,
        c: wide > m as u128,
        v: ((!(a ^ b) & (a ^ result)) >> sign) & 1 == 1,
    };
    (result, flags)
}

pub fn condition_holds(cond: &str, f: Nzcv) -> Option<bool> {
    Some(match cond {
        "eq" => f.z,
        "ne" => !f.z,
        "cs" | "hs" => f.c,
        "cc" | "lo" => !f.c,
        "mi" => f.n,
        "pl" => !f.n,
        "vs" => f.v,
        "vc" => !f.v,
        "hi" => f.c && !f.z,
        "ls" => !(f.c && !f.z),
        "ge" => f.n == f.v,
        "lt" => f.n != f.v,
        "gt" => !f.z && f.n == f.v,
        "le" => f.z || f.n != f.v,
        "al" => true,
        _ => return None,
    })
}

fn extend_value(v: u64, extend: Extend) -> u64 {
    match extend {
        Extend::Sxtb => v as u8 as i8 as i64 as u64,
        Extend::Uxtb => v & 0xFF,
        Extend::Sxth => v as u16 as i16 as i64 as u64,
        Extend::Uxth => v & 0xFFFF,
        Extend::Sxtw => v as u32 as i32 as i64 as u64,
        Extend::Uxtw => v & 0xFFFF_FFFF,
        Extend::Sxtx => v,
    }
}

fn shifted_value(value: u64, shift: Shift, amount: u8, is64: bool) -> u64 {
    let m = mask(is64);
    let v = value & m;
    let amount = amount as u32;
    let r = match (shift, is64) {
        (Shift::Lsl, _) => v.checked_shl(amount).unwrap_or(0),
        (Shift::Lsr, true) => v.checked_shr(amount).unwrap_or(0),
        (Shift::Lsr, false) => ((v as u32).checked_shr(amount).unwrap_or(0)) as u64,
        (Shift::Asr, true) => {
            let sh = amount.min(63);
            ((v as i64) >> sh) as u64
        }
        (Shift::Asr, false) => {
            let sh = amount.min(31);
            ((v as u32 as i32) >> sh) as u32 as u64
        }
    };
    r & m
}

/// Second source operand of an ALU instruction, evaluated at `is64` width.
fn op2_value(state: &MachineState, op: &Operand, is64: bool) -> Option<u64> {
    let v = match op {
        Operand::Reg(r) => state.read_reg(*r),
        Operand::Imm { value, .. } => *value as u64,
        Operand::ShiftedReg { reg, shift, amount } => {
            shifted_value(state.read_reg(*reg), *shift, *amount, is64)
        }
        Operand::ExtendedReg {
            reg,
            extend,
            amount,
        } => {
            let extended = extend_value(state.read_reg(*reg), *extend);
            extended.wrapping_shl(amount.unwrap_or(0) as u32)
        }
        // ":lo12:name" resolves through the synthetic symbol table.
        Operand::LabelRef { name, lo12: true } => symbol_address(name) & 0xFFF,
        _ => return None,
    };
    Some(v & mask(is64))
}

/// Effective address plus optional register writeback (pre/post-index).
fn mem_address(state: &MachineState, mem: &MemOperand) -> (u64, Option<u64>) {
    let base = state.read_reg(mem.base);
    let index = match mem.index {
        None => 0,
        Some(MemIndex::Shifted(reg, shift, amount)) => {
            shifted_value(state.read_reg(reg), shift, amount, true)
        }
        Some(MemIndex::Extended(reg, extend, amount)) => {
            extend_value(state.read_reg(reg), extend).wrapping_shl(amount.unwrap_or(0) as u32)
        }
    };
    match mem.mode {
        AddrMode::Offset => (base.wrapping_add(index).wrapping_add(mem.disp as u64), None),
        AddrMode::PreIndex => {
            let addr = base.wrapping_add(mem.disp as u64);
            (addr, Some(addr))
        }
        AddrMode::PostIndex => (base, Some(base.wrapping_add(mem.disp as u64))),
    }
}

fn want_reg(instr: &Instruction, idx: usize) -> Result<Register, Trap> {
    instr
        .operands
        .get(idx)
        .and_then(Operand::as_reg)
        .ok_or_else(|| unsupported(instr))
}

fn want_mem<'a>(instr: &'a Instruction, idx: usize) -> Result<&'a MemOperand, Trap> {
    match instr.operands.get(idx) {
        Some(Operand::Mem(m)) => Ok(m),
        _ => Err(unsupported(instr)),
    }
}

fn want_label(instr: &Instruction, idx: usize) -> Result<&str, Trap> {
    match instr.operands.get(idx) {
        Some(Operand::LabelRef { name, lo12: false }) => Ok(name),
        _ => Err(unsupported(instr)),
    }
}

fn transfer_bytes(reg: Register, class_bytes: u8) -> u8 {
    if class_bytes != 0 {
        class_bytes
    } else if reg.is_64bit() {
        8
    } else {
        4
    }
}

fn step(
    state: &mut MachineState,
    stores: &mut Vec<StoreRecord>,
    instr: &Instruction,
) -> Result<Control, Trap> {
    let m = instr.mnemonic.as_str();
    match m {
        "mov" => {
            let rd = want_reg(instr, 0)?;
            let v = op2_value(
                state,
                instr.operands.get(1).ok_or_else(|| unsupported(instr))?,
                rd.is_64bit(),
            )
            .ok_or_else(|| unsupported(instr))?;
            state.write_reg(rd, v);
        }
        "add" | "sub" | "adds" | "subs" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            let is64 = rd.is_64bit();
            let a = state.read_reg(rn);
            let b = op2_value(
                state,
                instr.operands.get(2).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            let subtract = m.starts_with("sub");
            let (result, flags) = if subtract {
                add_with_carry(a, !b & mask(is64), true, is64)
            } else {
                add_with_carry(a, b, false, is64)
            };
            if m.ends_with('s') {
                state.nzcv = flags;
            }
            state.write_reg(rd, result);
        }
        "cmp" => {
            let rn = want_reg(instr, 0)?;
            let is64 = rn.is_64bit();
            let a = state.read_reg(rn);
            let b = op2_value(
                state,
                instr.operands.get(1).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            let (_, flags) = add_with_carry(a, !b & mask(is64), true, is64);
            state.nzcv = flags;
        }
        "mul" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            let is64 = rd.is_64bit();
            let a = state.read_reg(rn);
            let b = op2_value(
                state,
                instr.operands.get(2).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            state.write_reg(rd, a.wrapping_mul(b) & mask(is64));
        }
        "udiv" => {
            let rd = want_reg(instr, 0)?;
            let is64 = rd.is_64bit();
            let a = state.read_reg(want_reg(instr, 1)?) & mask(is64);
            let b = op2_value(
                state,
                instr.operands.get(2).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            state.write_reg(rd, if b == 0 { 0 } else { a / b });
        }
        "sdiv" => {
            let rd = want_reg(instr, 0)?;
            let is64 = rd.is_64bit();
            let a = state.read_reg(want_reg(instr, 1)?);
            let b = op2_value(
                state,
                instr.operands.get(2).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            let q = if is64 {
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
            };
            state.write_reg(rd, q);
        }
        "and" | "ands" | "orr" | "eor" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            let is64 = rd.is_64bit();
            let a = state.read_reg(rn) & mask(is64);
            let b = op2_value(
                state,
                instr.operands.get(2).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            let result = match m {
                "and" | "ands" => a & b,
                "orr" => a | b,
                _ => a ^ b,
            };
            if m == "ands" {
                let sign = if is64 { 63 } else { 31 };
                state.nzcv = Nzcv {
                    n: (result >> sign) & 1 == 1,
                    z: result == 0,
                    c: false,
                    v: false,
                };
            }
            state.write_reg(rd, result);
        }
        "lsl" | "lsr" | "asr" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            let is64 = rd.is_64bit();
            let datasize = if is64 { 64 } else { 32 };
            let amount = match instr.operands.get(2) {
                Some(Operand::Imm { value, .. }) => (*value as u64 % datasize) as u8,
                Some(Operand::Reg(r)) => (state.read_reg(*r) % datasize) as u8,
                _ => return Err(unsupported(instr)),
            };
            let shift = match m {
                "lsl" => Shift::Lsl,
                "lsr" => Shift::Lsr,
                _ => Shift::Asr,
            };
            let v = shifted_value(state.read_reg(rn), shift, amount, is64);
            state.write_reg(rd, v);
        }
        "cset" => {
            let rd = want_reg(instr, 0)?;
            let cond = instr
                .operands
                .get(1)
                .and_then(Operand::as_cond)
                .ok_or_else(|| unsupported(instr))?;
            let holds = condition_holds(cond, state.nzcv).ok_or_else(|| unsupported(instr))?;
            state.write_reg(rd, holds as u64);
        }
        "neg" => {
            let rd = want_reg(instr, 0)?;
            let is64 = rd.is_64bit();
            let b = op2_value(
                state,
                instr.operands.get(1).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            let (result, _) = add_with_carry(0, !b & mask(is64), true, is64);
            state.write_reg(rd, result);
        }
        "mvn" => {
            let rd = want_reg(instr, 0)?;
            let is64 = rd.is_64bit();
            let b = op2_value(
                state,
                instr.operands.get(1).ok_or_else(|| unsupported(instr))?,
                is64,
            )
            .ok_or_else(|| unsupported(instr))?;
            state.write_reg(rd, !b & mask(is64));
        }
        "sxtw" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            state.write_reg(rd, extend_value(state.read_reg(rn), Extend::Sxtw));
        }
        "uxtw" => {
            let rd = want_reg(instr, 0)?;
            let rn = want_reg(instr, 1)?;
            state.write_reg(rd, extend_value(state.read_reg(rn), Extend::Uxtw));
        }
        "ldr" | "ldur" | "ldrb" | "ldurb" | "ldrh" | "ldurh" => {
            let rt = want_reg(instr, 0)?;
            let mem = want_mem(instr, 1)?;
            let bytes = transfer_bytes(
                rt,
                match m {
                    "ldrb" | "ldurb" => 1,
                    "ldrh" | "ldurh" => 2,
                    _ => 0,
                },
            );
            let (addr, writeback) = mem_address(state, mem);
            let v = state.read_mem(addr, bytes);
            state.write_reg(rt, v);
            if let Some(wb) = writeback {
                state.write_reg(mem.base, wb);
            }
        }
        "ldrsb" | "ldursb" | "ldrsh" | "ldursh" | "ldrsw" | "ldursw" => {
            let rt = want_reg(instr, 0)?;
            let mem = want_mem(instr, 1)?;
            let bytes: u8 = match m {
                "ldrsb" | "ldursb" => 1,
                "ldrsh" | "ldursh" => 2,
                _ => 4,
            };
            let (addr, writeback) = mem_address(state, mem);
            let raw = state.read_mem(addr, bytes);
            let shift = 64 - 8 * bytes as u32;
            let extended = (((raw << shift) as i64) >> shift) as u64;
            state.write_reg(rt, extended & mask(rt.is_64bit()));
            if let Some(wb) = writeback {
                state.write_reg(mem.base, wb);
            }
        }
        "str" | "stur" | "strb" | "sturb" | "strh" | "sturh" => {
            let rt = want_reg(instr, 0)?;
            let mem = want_mem(instr, 1)?;
            let bytes = transfer_bytes(
                rt,
                match m {
                    "strb" | "sturb" => 1,
                    "strh" | "sturh" => 2,
                    _ => 0,
                },
            );
            let (addr, writeback) = mem_address(state, mem);
            let value = state.read_reg(rt)
                & if bytes == 8 {
                    u64::MAX
                } else {
                    (1u64 << (8 * bytes)) - 1
                };
            state.write_mem(addr, bytes, value);
            stores.push(StoreRecord { addr, bytes, value });
            if let Some(wb) = writeback {
                state.write_reg(mem.base, wb);
            }
        }
        "ldp" | "stp" => {
            let rt1 = want_reg(instr, 0)?;
            let rt2 = want_reg(instr, 1)?;
            let mem = want_mem(instr, 2)?;
            let bytes = if rt1.is_64bit() { 8u8 } else { 4u8 };
            let (addr, writeback) = mem_address(state, mem);
            let second = addr.wrapping_add(bytes as u64);
            if m == "ldp" {
                let v1 = state.read_mem(addr, bytes);
                let v2 = state.read_mem(second, bytes);
                state.write_reg(rt1, v1);
                state.write_reg(rt2, v2);
            } else {
                let keep = if bytes == 8 { u64::MAX } else { 0xFFFF_FFFF };
                let v1 = state.read_reg(rt1) & keep;
                let v2 = state.read_reg(rt2) & keep;
                state.write_mem(addr, bytes, v1);
                state.write_mem(second, bytes, v2);
                stores.push(StoreRecord {
                    addr,
                    bytes,
                    value: v1,
                });
                stores.push(StoreRecord {
                    addr: second,
                    bytes,
                    value: v2,
                });
            }
            if let Some(wb) = writeback {
                state.write_reg(mem.base, wb);
            }
        }
        "adrp" => {
            let rd = want_reg(instr, 0)?;
            let name = want_label(instr, 1)?;
            state.write_reg(rd, symbol_address(name) & !0xFFF);
        }
        "nop" => {}
        "ret" => return Ok(Control::Done(TerminatorOutcome::Returned)),
        "b" => {
            let target = want_label(instr, 0)?;
            return Ok(Control::Done(TerminatorOutcome::BranchTaken(target.into())));
        }
        "bl" => {
            let target = want_label(instr, 0)?;
            return Ok(Control::Done(TerminatorOutcome::CalledExternal(
                target.into(),
            )));
        }
        "cbz" | "cbnz" => {
            let rt = want_reg(instr, 0)?;
            let target = want_label(instr, 1)?;
            let v = state.read_reg(rt);
            let taken = (v == 0) == (m == "cbz");
            return Ok(Control::Done(if taken {
                TerminatorOutcome::BranchTaken(target.into())
            } else {
                TerminatorOutcome::BranchNotTaken
            }));
        }
        "tbz" | "tbnz" => {
            let rt = want_reg(instr, 0)?;
            let bit = instr
                .operands
                .get(1)
                .and_then(Operand::as_imm)
                .filter(|b| (0..64).contains(b))
                .ok_or_else(|| unsupported(instr))?;
            let target = want_label(instr, 2)?;
            let set = (state.read_reg(rt) >> bit) & 1 == 1;
            let taken = set == (m == "tbnz");
            return Ok(Control::Done(if taken {
                TerminatorOutcome::BranchTaken(target.into())
            } else {
                TerminatorOutcome::BranchNotTaken
            }));
        }
        _ if m.starts_with("b.") => {
            let cond = &m[2..];
            let holds = condition_holds(cond, state.nzcv).ok_or_else(|| unsupported(instr))?;
            let target = want_label(instr, 0)?;
            return Ok(Control::Done(if holds {
                TerminatorOutcome::BranchTaken(target.into())
            } else {
                TerminatorOutcome::BranchNotTaken
            }));
        }
        _ => return Err(unsupported(instr)),
    }
    Ok(Control::Continue)
}
