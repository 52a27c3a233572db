//! Curated mnemonic table for the integer/base subset the harness handles.
//!
//! Covers the instruction inventory observed in the evaluation corpus:
//! moves, ALU ops, shifts, compares, the load/store families (scaled,
//! unscaled, sign-extending, pairs), address materialization, and the
//! terminator class. Floating-point mnemonics are present but validate on
//! arity only and never execute.

/// Broad shape class used by the validator to pick the right operand checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnemonicClass {
    /// `mov rd, (rm|#imm)`
    Mov,
    /// `rd, rn, op2` integer ALU (add, sub, mul, div, logical, shifts).
    Alu3,
    /// Flag-setting `rd, rn, op2` (adds, subs, ands).
    Alu3Flags,
    /// `cmp rn, op2`
    Cmp,
    /// `rd, rm` unary (neg, mvn).
    Unary,
    /// `sxtw/uxtw xd, wn`
    ExtendOp,
    /// `cset rd, cond`
    Cset,
    /// Load with a memory operand; payload is the transfer width in bytes
    /// and whether the destination may be 64-bit.
    Load {
        bytes: u8,
        allow64: bool,
        sign_extend: bool,
    },
    /// Store counterpart.
    Store { bytes: u8, allow64: bool },
    /// `ldp/stp rt1, rt2, [mem]`
    LoadStorePair { load: bool },
    /// `adrp xd, label`
    Adrp,
    /// `ret`
    Ret,
    /// `b label` / `bl label`
    BranchLabel,
    /// `cbz/cbnz rt, label`
    CompareBranch,
    /// `tbz/tbnz rt, #bit, label`
    TestBranch,
    /// `b.cond label`
    CondBranch,
    /// Floating point: validated on arity only, never executed.
    Float { arity: u8 },
    /// `nop`
    Nop,
}

/// Look up a mnemonic. `None` means the mnemonic is unknown to the table.
pub fn classify(mnemonic: &str) -> Option<MnemonicClass> {
    use MnemonicClass::*;
    let class = match mnemonic {
        "mov" => Mov,
        "add" | "sub" | "mul" | "udiv" | "sdiv" | "and" | "orr" | "eor" | "lsl" | "lsr" | "asr" => {
            Alu3
        }
        "adds" | "subs" | "ands" => Alu3Flags,
        "cmp" => Cmp,
        "neg" | "mvn" => Unary,
        "sxtw" | "uxtw" => ExtendOp,
        "cset" => Cset,
        "ldr" => Load {
            bytes: 0,
            allow64: true,
            sign_extend: false,
        },
        "ldur" => Load {
            bytes: 0,
            allow64: true,
            sign_extend: false,
        },
        "ldrb" | "ldurb" => Load {
            bytes: 1,
            allow64: false,
            sign_extend: false,
        },
        "ldrh" | "ldurh" => Load {
            bytes: 2,
            allow64: false,
            sign_extend: false,
        },
        "ldrsb" | "ldursb" => Load {
            bytes: 1,
            allow64: true,
            sign_extend: true,
        },
        "ldrsh" | "ldursh" => Load {
            bytes: 2,
            allow64: true,
            sign_extend: true,
        },
        "ldrsw" | "ldursw" => Load {
            bytes: 4,
            allow64: true,
            sign_extend: true,
        },
        "str" => Store {
            bytes: 0,
            allow64: true,
        },
        "stur" => Store {
            bytes: 0,
            allow64: true,
        },
        "strb" | "sturb" => Store {
            bytes: 1,
            allow64: false,
        },
        "strh" | "sturh" => Store {
            bytes: 2,
            allow64: false,
        },
        "ldp" => LoadStorePair { load: true },
        "stp" => LoadStorePair { load: false },
        "adrp" => Adrp,
        "ret" => Ret,
        "b" | "bl" => BranchLabel,
        "cbz" | "cbnz" => CompareBranch,
        "tbz" | "tbnz" => TestBranch,
        "fmov" | "fcmp" => Float { arity: 2 },
        "fadd" => Float { arity: 3 },
        "nop" => Nop,
        m if m.starts_with("b.") && super::types::is_condition_name(&m[2..]) => CondBranch,
        _ => return None,
    };
    Some(class)
}

/// True when the table knows the mnemonic.
pub fn is_known(mnemonic: &str) -> bool {
    classify(mnemonic).is_some()
}
