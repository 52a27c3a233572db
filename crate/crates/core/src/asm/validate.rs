//! Syntactic validator: checks every instruction against the mnemonic table
//! (arity, operand kinds, register-width consistency, immediate ranges).
//! Stands in for "does the assembler accept this block" so runs are hermetic.

use serde::Serialize;

use super::mnemonics::{classify, MnemonicClass};
use super::types::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticCode {
    UnknownMnemonic,
    BadOperandArity,
    BadOperandKind,
    MalformedImmediate,
    MalformedRegister,
    UnknownLabelSyntax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: u32,
    pub code: DiagnosticCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// One JSON object per diagnostic, newline separated.
    pub fn to_json_lines(&self) -> String {
        self.diagnostics
            .iter()
            .map(|d| serde_json::to_string(d).expect("diagnostic serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn validate_block(block: &BasicBlock) -> ValidationReport {
    let mut report = ValidationReport::default();
    for instr in block.instructions() {
        validate_instruction(instr, &mut report.diagnostics);
    }
    report
}

struct Ctx<'a> {
    instr: &'a Instruction,
    diags: &'a mut Vec<Diagnostic>,
}

impl<'a> Ctx<'a> {
    fn push(&mut self, code: DiagnosticCode, message: String) {
        self.diags.push(Diagnostic {
            line: self.instr.line,
            code,
            message,
        });
    }

    fn arity(&mut self, expected: std::ops::RangeInclusive<usize>) -> bool {
        let got = self.instr.operands.len();
        if expected.contains(&got) {
            true
        } else {
            self.push(
                DiagnosticCode::BadOperandArity,
                format!(
                    "'{}' expects {}..{} operands, got {got}",
                    self.instr.mnemonic,
                    expected.start(),
                    expected.end()
                ),
            );
            false
        }
    }

    /// Flag malformed immediate/register tokens wherever they appear.
    fn scan_malformed(&mut self) -> bool {
        let mut clean = true;
        let ops: Vec<Operand> = self.instr.operands.clone();
        for op in &ops {
            match op {
                Operand::MalformedImm(text) => {
                    self.push(
                        DiagnosticCode::MalformedImmediate,
                        format!("'#{text}' is not an integer immediate"),
                    );
                    clean = false;
                }
                Operand::MalformedReg(text) => {
                    self.push(
                        DiagnosticCode::MalformedRegister,
                        format!("'{text}' is not a valid register"),
                    );
                    clean = false;
                }
                _ => {}
            }
        }
        clean
    }

    fn want_reg(&mut self, idx: usize, want64: Option<bool>) -> Option<Register> {
        let op = &self.instr.operands[idx];
        match op.as_reg() {
            Some(r) => {
                if let Some(want64) = want64 {
                    if r.is_64bit() != want64 {
                        self.push(
                            DiagnosticCode::BadOperandKind,
                            format!(
                                "operand {} of '{}': expected {} register, got '{r}'",
                                idx + 1,
                                self.instr.mnemonic,
                                if want64 { "64-bit" } else { "32-bit" }
                            ),
                        );
                        return None;
                    }
                }
                Some(r)
            }
            None => {
                self.push(
                    DiagnosticCode::BadOperandKind,
                    format!(
                        "operand {} of '{}': expected register",
                        idx + 1,
                        self.instr.mnemonic
                    ),
                );
                None
            }
        }
    }

    fn width_mismatch(&mut self, a: Register, b: Register) {
        self.push(
            DiagnosticCode::BadOperandKind,
            format!("register width mismatch: '{a}' vs '{b}'"),
        );
    }

    fn want_mem(&mut self, idx: usize) {
        match &self.instr.operands[idx] {
            Operand::Mem(mem) => self.check_mem(mem),
            _ => self.push(
                DiagnosticCode::BadOperandKind,
                format!(
                    "operand {} of '{}': expected memory operand",
                    idx + 1,
                    self.instr.mnemonic
                ),
            ),
        }
    }

    fn check_mem(&mut self, mem: &MemOperand) {
        if !(mem.base.is_64bit() && !matches!(mem.base, Register::Xzr)) {
            self.push(
                DiagnosticCode::BadOperandKind,
                format!(
                    "memory base must be a 64-bit register or sp, got '{}'",
                    mem.base
                ),
            );
        }
        match mem.index {
            Some(MemIndex::Shifted(reg, _, amount)) => {
                if !matches!(reg, Register::X(_)) {
                    self.push(
                        DiagnosticCode::BadOperandKind,
                        format!("shifted index register must be 64-bit, got '{reg}'"),
                    );
                }
                if amount > 4 {
                    self.push(
                        DiagnosticCode::MalformedImmediate,
                        format!("index shift amount #{amount} out of range"),
                    );
                }
            }
            Some(MemIndex::Extended(reg, extend, amount)) => {
                let want64 = matches!(extend, Extend::Sxtx);
                if reg.is_64bit() != want64 || reg.number().is_none() {
                    self.push(
                        DiagnosticCode::BadOperandKind,
                        format!(
                            "index register '{reg}' does not match extend '{}'",
                            extend.name()
                        ),
                    );
                }
                if let Some(a) = amount {
                    if a > 4 {
                        self.push(
                            DiagnosticCode::MalformedImmediate,
                            format!("index extend amount #{a} out of range"),
                        );
                    }
                }
            }
            None => {}
        }
    }
}

/// Second source operand of ALU-shaped instructions: register, immediate,
/// shifted/extended register, or `:lo12:` label (add only).
fn check_op2(ctx: &mut Ctx<'_>, idx: usize, dest64: bool, allow_lo12: bool) {
    let op = ctx.instr.operands[idx].clone();
    match op {
        Operand::Reg(r) => {
            if r.is_sp() {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    "sp is not valid as a source here".into(),
                );
            } else if r.is_64bit() != dest64 {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("register width mismatch: source '{r}'"),
                );
            }
        }
        Operand::Imm { .. } => {}
        Operand::ShiftedReg { reg, amount, .. } => {
            if reg.is_64bit() != dest64 {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("register width mismatch: source '{reg}'"),
                );
            }
            let max = if dest64 { 63 } else { 31 };
            if amount > max {
                ctx.push(
                    DiagnosticCode::MalformedImmediate,
                    format!("shift amount #{amount} out of range for this width"),
                );
            }
        }
        Operand::ExtendedReg {
            reg,
            extend,
            amount,
        } => {
            let want64 = matches!(extend, Extend::Sxtx);
            if reg.is_64bit() != want64 || reg.number().is_none() {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("register '{reg}' does not match extend '{}'", extend.name()),
                );
            }
            if let Some(a) = amount {
                if a > 4 {
                    ctx.push(
                        DiagnosticCode::MalformedImmediate,
                        format!("extend amount #{a} out of range"),
                    );
                }
            }
        }
        Operand::LabelRef { name, lo12 } => {
            if !(allow_lo12 && lo12) {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("unexpected label operand '{name}'"),
                );
            }
        }
        _ => ctx.push(
            DiagnosticCode::BadOperandKind,
            "expected register or immediate source".into(),
        ),
    }
}

fn validate_instruction(instr: &Instruction, diags: &mut Vec<Diagnostic>) {
    let mut ctx = Ctx { instr, diags };
    let class = match classify(&instr.mnemonic) {
        Some(c) => c,
        None => {
            ctx.push(
                DiagnosticCode::UnknownMnemonic,
                format!("unknown mnemonic '{}'", instr.mnemonic),
            );
            return;
        }
    };

    // Float mnemonics validate on arity only.
    if let MnemonicClass::Float { arity } = class {
        ctx.arity(arity as usize..=arity as usize);
        return;
    }

    if !ctx.scan_malformed() {
        return;
    }

    use MnemonicClass::*;
    match class {
        Mov => {
            if !ctx.arity(2..=2) {
                return;
            }
            let Some(rd) = ctx.want_reg(0, None) else {
                return;
            };
            match &ctx.instr.operands[1] {
                Operand::Reg(rm) => {
                    // mov to/from sp is a legal alias; otherwise widths must agree.
                    if !rd.is_sp() && !rm.is_sp() && rd.is_64bit() != rm.is_64bit() {
                        ctx.width_mismatch(rd, *rm);
                    }
                }
                Operand::Imm { .. } => {}
                _ => ctx.push(
                    DiagnosticCode::BadOperandKind,
                    "mov expects a register or immediate source".into(),
                ),
            }
        }
        Alu3 | Alu3Flags => {
            if !ctx.arity(3..=3) {
                return;
            }
            let Some(rd) = ctx.want_reg(0, None) else {
                return;
            };
            let Some(rn) = ctx.want_reg(1, None) else {
                return;
            };
            let sp_arith = matches!(instr.mnemonic.as_str(), "add" | "sub");
            if (rd.is_sp() || rn.is_sp()) && !sp_arith {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("sp is not a valid operand for '{}'", instr.mnemonic),
                );
                return;
            }
            if rd.is_64bit() != rn.is_64bit() && !rd.is_sp() && !rn.is_sp() {
                ctx.width_mismatch(rd, rn);
                return;
            }
            let lo12_ok = instr.mnemonic == "add";
            check_op2(&mut ctx, 2, rd.is_64bit(), lo12_ok);
            // Immediate shift amounts are range checked against the width.
            if matches!(instr.mnemonic.as_str(), "lsl" | "lsr" | "asr") {
                if let Some(amount) = ctx.instr.operands[2].as_imm() {
                    let max = if rd.is_64bit() { 63 } else { 31 };
                    if !(0..=max).contains(&amount) {
                        ctx.push(
                            DiagnosticCode::MalformedImmediate,
                            format!("shift amount #{amount} out of range"),
                        );
                    }
                }
            }
        }
        Cmp => {
            if !ctx.arity(2..=2) {
                return;
            }
            let Some(rn) = ctx.want_reg(0, None) else {
                return;
            };
            check_op2(&mut ctx, 1, rn.is_64bit(), false);
        }
        Unary => {
            if !ctx.arity(2..=2) {
                return;
            }
            let Some(rd) = ctx.want_reg(0, None) else {
                return;
            };
            match &ctx.instr.operands[1] {
                Operand::Reg(rm) => {
                    if rd.is_64bit() != rm.is_64bit() {
                        ctx.width_mismatch(rd, *rm);
                    }
                }
                Operand::ShiftedReg { reg, .. } => {
                    if rd.is_64bit() != reg.is_64bit() {
                        ctx.width_mismatch(rd, *reg);
                    }
                }
                _ => ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("'{}' expects a register source", instr.mnemonic),
                ),
            }
        }
        ExtendOp => {
            if !ctx.arity(2..=2) {
                return;
            }
            if instr.mnemonic == "sxtw" {
                ctx.want_reg(0, Some(true));
            } else {
                ctx.want_reg(0, None);
            }
            ctx.want_reg(1, Some(false));
        }
        Cset => {
            if !ctx.arity(2..=2) {
                return;
            }
            ctx.want_reg(0, None);
            if ctx.instr.operands[1].as_cond().is_none() {
                ctx.push(
                    DiagnosticCode::BadOperandKind,
                    "cset expects a condition code".into(),
                );
            }
        }
        Load {
            bytes,
            allow64,
            sign_extend,
        } => {
            if !ctx.arity(2..=2) {
                return;
            }
            if let Some(rt) = ctx.want_reg(0, None) {
                if rt.is_sp() {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        "sp is not a transfer register".into(),
                    );
                } else if rt.is_64bit() && !allow64 {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        format!("'{}' requires a 32-bit destination", instr.mnemonic),
                    );
                } else if sign_extend && bytes == 4 && !rt.is_64bit() {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        format!("'{}' requires a 64-bit destination", instr.mnemonic),
                    );
                }
            }
            ctx.want_mem(1);
        }
        Store { allow64, .. } => {
            if !ctx.arity(2..=2) {
                return;
            }
            if let Some(rt) = ctx.want_reg(0, None) {
                if rt.is_sp() {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        "sp is not a transfer register".into(),
                    );
                } else if rt.is_64bit() && !allow64 {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        format!("'{}' requires a 32-bit source", instr.mnemonic),
                    );
                }
            }
            ctx.want_mem(1);
        }
        LoadStorePair { .. } => {
            if !ctx.arity(3..=3) {
                return;
            }
            let rt1 = ctx.want_reg(0, None);
            let rt2 = ctx.want_reg(1, None);
            if let (Some(a), Some(b)) = (rt1, rt2) {
                if a.is_sp() || b.is_sp() {
                    ctx.push(
                        DiagnosticCode::BadOperandKind,
                        "sp is not a transfer register".into(),
                    );
                } else if a.is_64bit() != b.is_64bit() {
                    ctx.width_mismatch(a, b);
                }
            }
            ctx.want_mem(2);
        }
        Adrp => {
            if !ctx.arity(2..=2) {
                return;
            }
            ctx.want_reg(0, Some(true));
            match &ctx.instr.operands[1] {
                Operand::LabelRef { lo12: false, .. } => {}
                Operand::LabelRef { name, lo12: true } => ctx.push(
                    DiagnosticCode::UnknownLabelSyntax,
                    format!("adrp target ':lo12:{name}' must be a plain label"),
                ),
                _ => ctx.push(
                    DiagnosticCode::BadOperandKind,
                    "adrp expects a label".into(),
                ),
            }
        }
        Ret => {
            if ctx.arity(0..=1) && ctx.instr.operands.len() == 1 {
                ctx.want_reg(0, Some(true));
            }
        }
        BranchLabel => {
            if !ctx.arity(1..=1) {
                return;
            }
            if !matches!(
                &ctx.instr.operands[0],
                Operand::LabelRef { lo12: false, .. }
            ) {
                ctx.push(
                    DiagnosticCode::UnknownLabelSyntax,
                    format!("'{}' expects a label target", instr.mnemonic),
                );
            }
        }
        CompareBranch => {
            if !ctx.arity(2..=2) {
                return;
            }
            ctx.want_reg(0, None);
            if !matches!(
                &ctx.instr.operands[1],
                Operand::LabelRef { lo12: false, .. }
            ) {
                ctx.push(
                    DiagnosticCode::UnknownLabelSyntax,
                    format!("'{}' expects a label target", instr.mnemonic),
                );
            }
        }
        TestBranch => {
            if !ctx.arity(3..=3) {
                return;
            }
            let reg = ctx.want_reg(0, None);
            match ctx.instr.operands[1].as_imm() {
                Some(bit) => {
                    let max = match reg {
                        Some(r) if r.is_64bit() => 63,
                        _ => 31,
                    };
                    if !(0..=max).contains(&bit) {
                        ctx.push(
                            DiagnosticCode::MalformedImmediate,
                            format!("bit number #{bit} out of range"),
                        );
                    }
                }
                None => ctx.push(
                    DiagnosticCode::BadOperandKind,
                    format!("'{}' expects a bit-number immediate", instr.mnemonic),
                ),
            }
            if !matches!(
                &ctx.instr.operands[2],
                Operand::LabelRef { lo12: false, .. }
            ) {
                ctx.push(
                    DiagnosticCode::UnknownLabelSyntax,
                    format!("'{}' expects a label target", instr.mnemonic),
                );
            }
        }
        CondBranch => {
            if !ctx.arity(1..=1) {
                return;
            }
            if !matches!(
                &ctx.instr.operands[0],
                Operand::LabelRef { lo12: false, .. }
            ) {
                ctx.push(
                    DiagnosticCode::UnknownLabelSyntax,
                    format!("'{}' expects a label target", instr.mnemonic),
                );
            }
        }
        Nop => {
            ctx.arity(0..=0);
        }
        Float { .. } => unreachable!("handled above"),
    }
}
