//! Data model for the AArch64 basic-block assembly subset.
//!
//! Blocks are straight-line: at most one terminator-class instruction, and it
//! must be the last instruction. Directives and labels are carried verbatim;
//! they have no execution semantics.

use std::fmt;

/// An integer register reference as it appears in assembly text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Register {
    /// 32-bit view `w0..w30`.
    W(u8),
    /// 64-bit view `x0..x30`.
    X(u8),
    /// Stack pointer.
    Sp,
    /// 32-bit zero register.
    Wzr,
    /// 64-bit zero register.
    Xzr,
}

impl Register {
    /// Architectural register number, when the register has one.
    pub fn number(self) -> Option<u8> {
        match self {
            Register::W(n) | Register::X(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_64bit(self) -> bool {
        matches!(self, Register::X(_) | Register::Sp | Register::Xzr)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Register::Wzr | Register::Xzr)
    }

    pub fn is_sp(self) -> bool {
        matches!(self, Register::Sp)
    }

    /// Parse a register token (`w8`, `x8`, `sp`, `wzr`, `xzr`).
    ///
    /// Returns `None` for tokens that are not register-shaped at all;
    /// register-shaped tokens with an out-of-range index (`w31`) are the
    /// caller's problem and also return `None` here.
    pub fn parse(tok: &str) -> Option<Register> {
        match tok {
            "sp" => return Some(Register::Sp),
            "wzr" => return Some(Register::Wzr),
            "xzr" => return Some(Register::Xzr),
            _ => {}
        }
        let (kind, rest) = tok.split_at(1.min(tok.len()));
        let idx: u8 = rest.parse().ok()?;
        if idx > 30 {
            return None;
        }
        match kind {
            "w" => Some(Register::W(idx)),
            "x" => Some(Register::X(idx)),
            _ => None,
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Register::W(n) => write!(f, "w{n}"),
            Register::X(n) => write!(f, "x{n}"),
            Register::Sp => write!(f, "sp"),
            Register::Wzr => write!(f, "wzr"),
            Register::Xzr => write!(f, "xzr"),
        }
    }
}

/// Shift kind for shifted-register operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shift {
    Lsl,
    Lsr,
    Asr,
}

impl Shift {
    pub fn name(self) -> &'static str {
        match self {
            Shift::Lsl => "lsl",
            Shift::Lsr => "lsr",
            Shift::Asr => "asr",
        }
    }

    pub fn parse(tok: &str) -> Option<Shift> {
        match tok {
            "lsl" => Some(Shift::Lsl),
            "lsr" => Some(Shift::Lsr),
            "asr" => Some(Shift::Asr),
            _ => None,
        }
    }
}

/// Extension kind for extended-register operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extend {
    Sxtw,
    Uxtw,
    Sxtb,
    Uxtb,
    Sxth,
    Uxth,
    Sxtx,
}

impl Extend {
    pub fn name(self) -> &'static str {
        match self {
            Extend::Sxtw => "sxtw",
            Extend::Uxtw => "uxtw",
            Extend::Sxtb => "sxtb",
            Extend::Uxtb => "uxtb",
            Extend::Sxth => "sxth",
            Extend::Uxth => "uxth",
            Extend::Sxtx => "sxtx",
        }
    }

    pub fn parse(tok: &str) -> Option<Extend> {
        match tok {
            "sxtw" => Some(Extend::Sxtw),
            "uxtw" => Some(Extend::Uxtw),
            "sxtb" => Some(Extend::Sxtb),
            "uxtb" => Some(Extend::Uxtb),
            "sxth" => Some(Extend::Sxth),
            "uxth" => Some(Extend::Uxth),
            "sxtx" => Some(Extend::Sxtx),
            _ => None,
        }
    }
}

/// Addressing mode of a memory operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddrMode {
    /// `[base, #disp]`
    Offset,
    /// `[base, #disp]!`
    PreIndex,
    /// `[base], #disp`
    PostIndex,
}

/// Register index of a memory operand: `[base, Xm, lsl #2]` or
/// `[base, Wm, sxtw #2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemIndex {
    Shifted(Register, Shift, u8),
    Extended(Register, Extend, Option<u8>),
}

impl MemIndex {
    pub fn reg(&self) -> Register {
        match *self {
            MemIndex::Shifted(r, _, _) | MemIndex::Extended(r, _, _) => r,
        }
    }
}

/// A memory operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemOperand {
    pub base: Register,
    pub index: Option<MemIndex>,
    pub disp: i64,
    pub mode: AddrMode,
}

/// An instruction operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(Register),
    Imm {
        value: i64,
        hex: bool,
    },
    ShiftedReg {
        reg: Register,
        shift: Shift,
        amount: u8,
    },
    ExtendedReg {
        reg: Register,
        extend: Extend,
        amount: Option<u8>,
    },
    Mem(MemOperand),
    LabelRef {
        name: String,
        lo12: bool,
    },
    /// `#` followed by something that is not an integer literal (`#r`, `#1.0`).
    /// Representable so the validator can diagnose it.
    MalformedImm(String),
    /// Register-shaped token with an out-of-range index (`w31`).
    MalformedReg(String),
}

impl Operand {
    pub fn imm(value: i64) -> Operand {
        Operand::Imm { value, hex: false }
    }

    pub fn as_reg(&self) -> Option<Register> {
        match self {
            Operand::Reg(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_imm(&self) -> Option<i64> {
        match self {
            Operand::Imm { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// Condition-code name when this operand is a bare identifier (`eq`, `ne`, ...).
    pub fn as_cond(&self) -> Option<&str> {
        match self {
            Operand::LabelRef { name, lo12: false } if is_condition_name(name) => Some(name),
            _ => None,
        }
    }
}

pub(crate) fn is_condition_name(name: &str) -> bool {
    matches!(
        name,
        "eq" | "ne"
            | "cs"
            | "hs"
            | "cc"
            | "lo"
            | "mi"
            | "pl"
            | "vs"
            | "vc"
            | "hi"
            | "ls"
            | "ge"
            | "lt"
            | "gt"
            | "le"
            | "al"
    )
}

/// One parsed instruction. `raw` keeps the original source line (including
/// any comment); structural equality ignores `raw` and `line`.
#[derive(Debug, Clone, Eq)]
pub struct Instruction {
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    pub raw: String,
    pub line: u32,
}

impl PartialEq for Instruction {
    fn eq(&self, other: &Self) -> bool {
        self.mnemonic == other.mnemonic && self.operands == other.operands
    }
}

impl std::hash::Hash for Instruction {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.mnemonic.hash(state);
        self.operands.hash(state);
    }
}

/// One line of a basic block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BlockItem {
    Instr(Instruction),
    Directive(String),
    Label(String),
}

impl BlockItem {
    pub fn as_instr(&self) -> Option<&Instruction> {
        match self {
            BlockItem::Instr(i) => Some(i),
            _ => None,
        }
    }
}

/// Terminator classification of a block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Terminator {
    Ret,
    Branch(String),
    CondBranch {
        mnemonic: String,
        args: Vec<Operand>,
        target: String,
    },
    Call(String),
    None,
}

/// A straight-line AArch64 basic block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasicBlock {
    pub items: Vec<BlockItem>,
    pub terminator: Terminator,
}

impl BasicBlock {
    /// Iterate over the instructions, skipping directives and labels.
    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.items.iter().filter_map(BlockItem::as_instr)
    }

    pub fn instruction_count(&self) -> usize {
        self.instructions().count()
    }
}

/// Mnemonics that end a straight-line block. `bl` is treated as terminal
/// because the callee's effects are invisible at block granularity.
pub fn is_terminator_mnemonic(mnemonic: &str) -> bool {
    matches!(
        mnemonic,
        "ret" | "b" | "bl" | "cbz" | "cbnz" | "tbz" | "tbnz"
    ) || mnemonic.starts_with("b.")
}
