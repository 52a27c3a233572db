//! Per-instruction register/flag/memory access model, shared by the
//! effect computation and the peephole engine's liveness checks.

use crate::asm::{classify, AddrMode, Instruction, MnemonicClass, Operand, Register};

#[derive(Debug, Clone, Default)]
pub struct RegAccess {
    pub reads: Vec<Register>,
    pub writes: Vec<Register>,
    pub reads_flags: bool,
    pub writes_flags: bool,
    pub loads_mem: bool,
    pub stores_mem: bool,
    /// Unknown or call-like instruction: assume it can read and write
    /// anything. No rewrite may reorder across or delete a barrier.
    pub barrier: bool,
}

fn push_operand_reads(op: &Operand, reads: &mut Vec<Register>, writes: &mut Vec<Register>) {
    match op {
        Operand::Reg(r) => reads.push(*r),
        Operand::ShiftedReg { reg, .. } | Operand::ExtendedReg { reg, .. } => reads.push(*reg),
        Operand::Mem(mem) => {
            reads.push(mem.base);
            if let Some(index) = &mem.index {
                reads.push(index.reg());
            }
            if matches!(mem.mode, AddrMode::PreIndex | AddrMode::PostIndex) {
                writes.push(mem.base);
            }
        }
        _ => {}
    }
}

pub fn instruction_access(instr: &Instruction) -> RegAccess {
    let mut acc = RegAccess::default();
    let class = match classify(&instr.mnemonic) {
        Some(c) => c,
        None => {
            acc.barrier = true;
            return acc;
        }
    };

    let ops = &instr.operands;
    let read_from = |acc: &mut RegAccess, range: std::ops::Range<usize>| {
        for op in ops.iter().take(range.end).skip(range.start) {
            push_operand_reads(op, &mut acc.reads, &mut acc.writes);
        }
    };
    let write0 = |acc: &mut RegAccess| {
        if let Some(r) = ops.first().and_then(Operand::as_reg) {
            acc.writes.push(r);
        }
    };

    use MnemonicClass::*;
    match class {
        Mov | Unary | ExtendOp => {
            write0(&mut acc);
            read_from(&mut acc, 1..2);
        }
        Alu3 => {
            write0(&mut acc);
            read_from(&mut acc, 1..3);
        }
        Alu3Flags => {
            write0(&mut acc);
            read_from(&mut acc, 1..3);
            acc.writes_flags = true;
        }
        Cmp => {
            read_from(&mut acc, 0..2);
            acc.writes_flags = true;
        }
        Cset => {
            write0(&mut acc);
            acc.reads_flags = true;
        }
        Load { .. } => {
            write0(&mut acc);
            read_from(&mut acc, 1..2);
            acc.loads_mem = true;
        }
        Store { .. } => {
            read_from(&mut acc, 0..2);
            acc.stores_mem = true;
        }
        LoadStorePair { load } => {
            if load {
                write0(&mut acc);
                if let Some(r) = ops.get(1).and_then(Operand::as_reg) {
                    acc.writes.push(r);
                }
                read_from(&mut acc, 2..3);
                acc.loads_mem = true;
            } else {
                read_from(&mut acc, 0..3);
                acc.stores_mem = true;
            }
        }
        Adrp => write0(&mut acc),
        Ret | Nop => {}
        BranchLabel => {
            // `bl` clobbers per the call ABI and reads argument registers.
            if instr.mnemonic == "bl" {
                acc.barrier = true;
            }
        }
        CompareBranch => read_from(&mut acc, 0..1),
        TestBranch => read_from(&mut acc, 0..1),
        CondBranch => acc.reads_flags = true,
        Float { .. } => acc.barrier = true,
    }
    acc
}

/// True when the instruction writes the named architectural register slot
/// (a W write clobbers the whole X register).
pub fn writes_slot(instr: &Instruction, slot: RegSlot) -> bool {
    let acc = instruction_access(instr);
    acc.barrier || acc.writes.iter().any(|r| RegSlot::of(*r) == Some(slot))
}

/// Architectural register identity, width-insensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegSlot {
    Gpr(u8),
    Sp,
}

impl RegSlot {
    pub fn of(reg: Register) -> Option<RegSlot> {
        match reg {
            Register::W(n) | Register::X(n) => Some(RegSlot::Gpr(n)),
            Register::Sp => Some(RegSlot::Sp),
            Register::Wzr | Register::Xzr => None,
        }
    }
}
