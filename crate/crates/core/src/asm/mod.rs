//! AArch64 basic-block data model, parser, canonical printer, and validator.

mod mnemonics;
mod parser;
mod printer;
mod types;
mod validate;

pub use mnemonics::{classify, is_known, MnemonicClass};
pub use parser::{parse_block, ParseError};
pub use printer::{print_block, print_instruction, print_operand};
pub use types::is_terminator_mnemonic;
pub use types::{
    AddrMode, BasicBlock, BlockItem, Extend, Instruction, MemIndex, MemOperand, Operand, Register,
    Shift, Terminator,
};
pub use validate::{validate_block, Diagnostic, DiagnosticCode, ValidationReport};

pub(crate) use parser::{classify_terminator as terminator_of, parse_line, split_lines};
