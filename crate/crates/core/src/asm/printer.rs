//! Canonical printer: one item per line, single space after the mnemonic,
//! `", "` between operands, decimal immediates (hex preserved when the source
//! used hex). `print ∘ parse ∘ print == print`.

use std::fmt::Write;

use super::types::*;

pub fn print_block(block: &BasicBlock) -> String {
    let mut out = String::new();
    for (i, item) in block.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            BlockItem::Instr(instr) => out.push_str(&print_instruction(instr)),
            BlockItem::Directive(text) => out.push_str(text),
            BlockItem::Label(name) => {
                out.push_str(name);
                out.push(':');
            }
        }
    }
    out
}

pub fn print_instruction(instr: &Instruction) -> String {
    let mut s = instr.mnemonic.clone();
    for (i, op) in instr.operands.iter().enumerate() {
        s.push_str(if i == 0 { " " } else { ", " });
        s.push_str(&print_operand(op));
    }
    s
}

fn print_imm(value: i64, hex: bool) -> String {
    if hex {
        if value < 0 {
            format!("#-0x{:x}", value.unsigned_abs())
        } else {
            format!("#0x{value:x}")
        }
    } else {
        format!("#{value}")
    }
}

pub fn print_operand(op: &Operand) -> String {
    match op {
        Operand::Reg(r) => r.to_string(),
        Operand::Imm { value, hex } => print_imm(*value, *hex),
        Operand::ShiftedReg { reg, shift, amount } => {
            format!("{reg}, {} #{amount}", shift.name())
        }
        Operand::ExtendedReg {
            reg,
            extend,
            amount,
        } => match amount {
            Some(a) => format!("{reg}, {} #{a}", extend.name()),
            None => format!("{reg}, {}", extend.name()),
        },
        Operand::Mem(mem) => print_mem(mem),
        Operand::LabelRef { name, lo12 } => {
            if *lo12 {
                format!(":lo12:{name}")
            } else {
                name.clone()
            }
        }
        Operand::MalformedImm(text) => format!("#{text}"),
        Operand::MalformedReg(text) => text.clone(),
    }
}

fn print_mem(mem: &MemOperand) -> String {
    let mut s = String::from("[");
    s.push_str(&mem.base.to_string());
    match (&mem.index, mem.mode) {
        (Some(index), _) => {
            match index {
                MemIndex::Shifted(reg, Shift::Lsl, 0) => {
                    let _ = write!(s, ", {reg}");
                }
                MemIndex::Shifted(reg, shift, amount) => {
                    let _ = write!(s, ", {reg}, {} #{amount}", shift.name());
                }
                MemIndex::Extended(reg, extend, Some(amount)) => {
                    let _ = write!(s, ", {reg}, {} #{amount}", extend.name());
                }
                MemIndex::Extended(reg, extend, None) => {
                    let _ = write!(s, ", {reg}, {}", extend.name());
                }
            }
            s.push(']');
        }
        (None, AddrMode::Offset) => {
            if mem.disp != 0 {
                let _ = write!(s, ", #{}", mem.disp);
            }
            s.push(']');
        }
        (None, AddrMode::PreIndex) => {
            let _ = write!(s, ", #{}", mem.disp);
            s.push_str("]!");
        }
        (None, AddrMode::PostIndex) => {
            let _ = write!(s, "], #{}", mem.disp);
        }
    }
    s
}
