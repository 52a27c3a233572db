//! Text → `BasicBlock` parser.
//!
//! Lenient on purpose: any well-formed `mnemonic op, op, ...` line parses, even
//! when the mnemonic does not exist, so model-invented opcodes like `movsl`
//! are representable. Syntactic legality is the validator's job.

use thiserror::Error;

use super::types::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: cannot lex token '{token}'")]
    Lex { line: u32, token: String },
    #[error("line {line}: unbalanced brackets in operand")]
    UnbalancedBracket { line: u32 },
    #[error("line {line}: control transfer '{mnemonic}' before end of block")]
    InternalControlFlow { line: u32, mnemonic: String },
}

/// Split input on real newlines and on the literal two-character `\n` escape.
/// Model responses and printed tables use the escaped form.
pub(crate) fn split_lines(text: &str) -> Vec<String> {
    let mut lines = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => {
                lines.push(std::mem::take(&mut cur));
            }
            '\\' if chars.peek() == Some(&'n') => {
                chars.next();
                lines.push(std::mem::take(&mut cur));
            }
            '\r' => {}
            _ => cur.push(c),
        }
    }
    lines.push(cur);
    lines
}

/// Parse a block of assembly text.
pub fn parse_block(text: &str) -> Result<BasicBlock, ParseError> {
    let lines = split_lines(text);
    let mut items = Vec::new();
    for (idx, raw_line) in lines.iter().enumerate() {
        let line_no = (idx + 1) as u32;
        if let Some(item) = parse_line(raw_line, line_no)? {
            items.push(item);
        }
    }
    if items.is_empty() {
        return Err(ParseError::EmptyInput);
    }

    let last_instr_pos = items.iter().rposition(|i| matches!(i, BlockItem::Instr(_)));
    let mut terminator = Terminator::None;
    for (pos, item) in items.iter().enumerate() {
        let instr = match item {
            BlockItem::Instr(i) => i,
            _ => continue,
        };
        if !is_terminator_mnemonic(&instr.mnemonic) {
            continue;
        }
        if Some(pos) != last_instr_pos {
            return Err(ParseError::InternalControlFlow {
                line: instr.line,
                mnemonic: instr.mnemonic.clone(),
            });
        }
        terminator = classify_terminator(instr);
    }

    Ok(BasicBlock { items, terminator })
}

pub(crate) fn classify_terminator(instr: &Instruction) -> Terminator {
    let target = || -> String {
        match instr.operands.last() {
            Some(Operand::LabelRef { name, .. }) => name.clone(),
            Some(other) => format!("{other:?}"),
            None => String::new(),
        }
    };
    match instr.mnemonic.as_str() {
        "ret" => Terminator::Ret,
        "b" => Terminator::Branch(target()),
        "bl" => Terminator::Call(target()),
        _ => Terminator::CondBranch {
            mnemonic: instr.mnemonic.clone(),
            args: instr
                .operands
                .iter()
                .take(instr.operands.len().saturating_sub(1))
                .cloned()
                .collect(),
            target: target(),
        },
    }
}

/// Parse one line into a block item. Blank lines yield `None`.
pub(crate) fn parse_line(raw: &str, line_no: u32) -> Result<Option<BlockItem>, ParseError> {
    let without_comment = match raw.find("//") {
        Some(pos) => &raw[..pos],
        None => raw,
    };
    let text = without_comment.trim();
    if text.is_empty() {
        return Ok(None);
    }

    // A label is a single colon-terminated token.
    if let Some(name) = text.strip_suffix(':') {
        if !name.is_empty() && !name.contains(char::is_whitespace) && is_symbolish(name) {
            return Ok(Some(BlockItem::Label(name.to_string())));
        }
    }

    if text.starts_with('.') {
        return Ok(Some(BlockItem::Directive(text.to_string())));
    }

    let (mnemonic_tok, rest) = match text.find(char::is_whitespace) {
        Some(pos) => (&text[..pos], text[pos..].trim_start()),
        None => (text, ""),
    };
    let mnemonic = mnemonic_tok.to_ascii_lowercase();
    if !is_symbolish(&mnemonic) {
        return Err(ParseError::Lex {
            line: line_no,
            token: mnemonic_tok.to_string(),
        });
    }

    let operands = parse_operands(rest, line_no)?;
    Ok(Some(BlockItem::Instr(Instruction {
        mnemonic,
        operands,
        raw: raw.trim_end().to_string(),
        line: line_no,
    })))
}

fn is_symbolish(tok: &str) -> bool {
    !tok.is_empty()
        && tok
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$' | '@' | '+' | '-'))
}

/// Split an operand string on top-level commas (commas inside `[...]` nest).
fn split_fields(s: &str, line_no: u32) -> Result<Vec<String>, ParseError> {
    let mut fields = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '[' => {
                depth += 1;
                cur.push(c);
            }
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(ParseError::UnbalancedBracket { line: line_no });
                }
                cur.push(c);
            }
            ',' if depth == 0 => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if depth != 0 {
        return Err(ParseError::UnbalancedBracket { line: line_no });
    }
    fields.push(cur);
    Ok(fields.into_iter().map(|f| f.trim().to_string()).collect())
}

fn parse_operands(s: &str, line_no: u32) -> Result<Vec<Operand>, ParseError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let fields = split_fields(s, line_no)?;
    if fields.iter().any(|f| f.is_empty()) {
        return Err(ParseError::Lex {
            line: line_no,
            token: ",".to_string(),
        });
    }

    let mut operands: Vec<Operand> = Vec::new();
    let mut iter = fields.into_iter().peekable();
    while let Some(field) = iter.next() {
        // Shift/extend fields attach to the preceding register operand:
        // "add x0, x1, x2, lsl #3".
        if let Some(op) = parse_shift_or_extend(&field, line_no)? {
            match (operands.pop(), op) {
                (Some(Operand::Reg(reg)), MergedMod::Shift(shift, amount)) => {
                    operands.push(Operand::ShiftedReg { reg, shift, amount });
                }
                (Some(Operand::Reg(reg)), MergedMod::Extend(extend, amount)) => {
                    operands.push(Operand::ExtendedReg {
                        reg,
                        extend,
                        amount,
                    });
                }
                _ => {
                    return Err(ParseError::Lex {
                        line: line_no,
                        token: field,
                    })
                }
            }
            continue;
        }

        let op = parse_field(&field, line_no)?;

        // Post-index: "[sp], #16", an immediate right after a bare memory operand.
        if let Operand::Imm { value, .. } = op {
            if let Some(Operand::Mem(mem)) = operands.last_mut() {
                if mem.mode == AddrMode::Offset && mem.index.is_none() && mem.disp == 0 {
                    mem.mode = AddrMode::PostIndex;
                    mem.disp = value;
                    continue;
                }
            }
        }
        operands.push(op);
    }
    Ok(operands)
}

enum MergedMod {
    Shift(Shift, u8),
    Extend(Extend, Option<u8>),
}

/// Recognize "lsl #2", "sxtw #2", or bare "sxtw" fields.
fn parse_shift_or_extend(field: &str, line_no: u32) -> Result<Option<MergedMod>, ParseError> {
    let mut parts = field.split_whitespace();
    let head = match parts.next() {
        Some(h) => h.to_ascii_lowercase(),
        None => return Ok(None),
    };
    let amount_tok = parts.next();
    if parts.next().is_some() {
        return Ok(None);
    }
    let parse_amount = |tok: &str| -> Result<u8, ParseError> {
        tok.strip_prefix('#')
            .and_then(|t| t.parse::<u8>().ok())
            .ok_or_else(|| ParseError::Lex {
                line: line_no,
                token: tok.to_string(),
            })
    };
    if let Some(shift) = Shift::parse(&head) {
        if let Some(tok) = amount_tok {
            return Ok(Some(MergedMod::Shift(shift, parse_amount(tok)?)));
        }
        return Ok(None); // a bare "lsl" token is not a shift spec
    }
    if let Some(extend) = Extend::parse(&head) {
        let amount = match amount_tok {
            Some(tok) => Some(parse_amount(tok)?),
            None => None,
        };
        return Ok(Some(MergedMod::Extend(extend, amount)));
    }
    Ok(None)
}

fn parse_field(field: &str, line_no: u32) -> Result<Operand, ParseError> {
    if field.starts_with('[') {
        return parse_mem(field, line_no);
    }
    if let Some(imm) = field.strip_prefix('#') {
        return Ok(parse_imm_token(imm));
    }
    if let Some(rest) = field.strip_prefix(":lo12:") {
        if is_symbolish(rest) {
            return Ok(Operand::LabelRef {
                name: rest.to_string(),
                lo12: true,
            });
        }
        return Err(ParseError::Lex {
            line: line_no,
            token: field.to_string(),
        });
    }
    let lower = field.to_ascii_lowercase();
    if let Some(reg) = Register::parse(&lower) {
        return Ok(Operand::Reg(reg));
    }
    if is_register_shaped(&lower) {
        return Ok(Operand::MalformedReg(field.to_string()));
    }
    if is_symbolish(field) && !field.contains(char::is_whitespace) {
        return Ok(Operand::LabelRef {
            name: field.to_string(),
            lo12: false,
        });
    }
    Err(ParseError::Lex {
        line: line_no,
        token: field.to_string(),
    })
}

/// `w31`, `x99`: register-shaped but with an index outside 0..30.
fn is_register_shaped(tok: &str) -> bool {
    tok.len() >= 2
        && (tok.starts_with('w') || tok.starts_with('x'))
        && tok[1..].chars().all(|c| c.is_ascii_digit())
}

fn parse_imm_token(tok: &str) -> Operand {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let parsed = if let Some(hexbody) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X"))
    {
        u64::from_str_radix(hexbody, 16)
            .ok()
            .map(|v| (v as i64, true))
    } else {
        body.parse::<u64>().ok().map(|v| (v as i64, false))
    };
    match parsed {
        Some((value, hex)) => Operand::Imm {
            value: if neg { value.wrapping_neg() } else { value },
            hex,
        },
        None => Operand::MalformedImm(tok.to_string()),
    }
}

fn parse_mem(field: &str, line_no: u32) -> Result<Operand, ParseError> {
    let (inner, pre_index) = if let Some(stripped) = field.strip_suffix("]!") {
        (stripped, true)
    } else if let Some(stripped) = field.strip_suffix(']') {
        (stripped, false)
    } else {
        return Err(ParseError::UnbalancedBracket { line: line_no });
    };
    let inner = inner
        .strip_prefix('[')
        .ok_or(ParseError::UnbalancedBracket { line: line_no })?;

    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.is_empty() || parts[0].is_empty() {
        return Err(ParseError::Lex {
            line: line_no,
            token: field.to_string(),
        });
    }
    let base = Register::parse(&parts[0].to_ascii_lowercase()).ok_or_else(|| ParseError::Lex {
        line: line_no,
        token: parts[0].to_string(),
    })?;

    let mut disp = 0i64;
    let mut index: Option<MemIndex> = None;
    match parts.len() {
        1 => {}
        2 => {
            let p = parts[1];
            if let Some(imm) = p.strip_prefix('#') {
                disp = match parse_imm_token(imm) {
                    Operand::Imm { value, .. } => value,
                    _ => {
                        return Err(ParseError::Lex {
                            line: line_no,
                            token: p.to_string(),
                        })
                    }
                };
            } else if let Some(reg) = Register::parse(&p.to_ascii_lowercase()) {
                index = Some(MemIndex::Shifted(reg, Shift::Lsl, 0));
            } else {
                return Err(ParseError::Lex {
                    line: line_no,
                    token: p.to_string(),
                });
            }
        }
        3 => {
            let reg =
                Register::parse(&parts[1].to_ascii_lowercase()).ok_or_else(|| ParseError::Lex {
                    line: line_no,
                    token: parts[1].to_string(),
                })?;
            match parse_shift_or_extend(parts[2], line_no)? {
                Some(MergedMod::Shift(shift, amount)) => {
                    index = Some(MemIndex::Shifted(reg, shift, amount));
                }
                Some(MergedMod::Extend(extend, amount)) => {
                    index = Some(MemIndex::Extended(reg, extend, amount));
                }
                None => {
                    return Err(ParseError::Lex {
                        line: line_no,
                        token: parts[2].to_string(),
                    })
                }
            }
        }
        _ => {
            return Err(ParseError::Lex {
                line: line_no,
                token: field.to_string(),
            })
        }
    }

    if pre_index && index.is_some() {
        return Err(ParseError::Lex {
            line: line_no,
            token: field.to_string(),
        });
    }
    Ok(Operand::Mem(MemOperand {
        base,
        index,
        disp,
        mode: if pre_index {
            AddrMode::PreIndex
        } else {
            AddrMode::Offset
        },
    }))
}
