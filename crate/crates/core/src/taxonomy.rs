//! Error taxonomy: aligns candidate/reference instructions, classifies
//! discrepancies into the four error categories (opcode, immediate value,
//! label, register), and computes per-mnemonic error probabilities with 95%
//! confidence intervals.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::asm::{is_known, BasicBlock, Instruction, MemIndex, Operand};
use crate::metrics::tokenize;

/// 95% two-sided normal quantile. The golden probability tables reproduce
/// at 1e-6 with 1.96 (and not with more decimal places).
pub const CONFIDENCE_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaxonomyError {
    #[error("confidence interval over an empty sample")]
    DomainError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ErrorCategory {
    Opcode,
    ImmediateValue,
    Label,
    Register,
}

/// One classified discrepancy anchored to an aligned instruction pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub category: ErrorCategory,
    pub candidate_index: usize,
    pub reference_index: usize,
    pub candidate_line: String,
    pub reference_line: String,
    pub reference_mnemonic: String,
    /// The offending candidate-side token.
    pub token: String,
}

/// An aligned step: indices into the candidate/reference instruction lists,
/// `None` marking a gap.
pub type Alignment = Vec<(Option<usize>, Option<usize>)>;

const INDEL_COST: f64 = 0.6;

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: std::collections::BTreeSet<&String> = a.iter().collect();
    let sb: std::collections::BTreeSet<&String> = b.iter().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Minimum-edit-distance alignment over instruction lines. Substitution
/// costs `1 - jaccard(tokens)`, insertions and deletions cost 0.6; ties
/// prefer substitution, then the earliest position.
pub fn align_instructions(candidate: &BasicBlock, reference: &BasicBlock) -> Alignment {
    let cand: Vec<Vec<String>> = candidate
        .instructions()
        .map(|i| tokenize(&crate::asm::print_instruction(i)))
        .collect();
    let refr: Vec<Vec<String>> = reference
        .instructions()
        .map(|i| tokenize(&crate::asm::print_instruction(i)))
        .collect();
    let (n, m) = (cand.len(), refr.len());

    let mut cost = vec![vec![0.0f64; m + 1]; n + 1];
    for (i, row) in cost.iter_mut().enumerate() {
        row[0] = i as f64 * INDEL_COST;
    }
    for j in 0..=m {
        cost[0][j] = j as f64 * INDEL_COST;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = cost[i - 1][j - 1] + (1.0 - jaccard(&cand[i - 1], &refr[j - 1]));
            let del = cost[i - 1][j] + INDEL_COST;
            let ins = cost[i][j - 1] + INDEL_COST;
            cost[i][j] = sub.min(del).min(ins);
        }
    }

    let mut steps = Vec::new();
    let (mut i, mut j) = (n, m);
    let eps = 1e-9;
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub = cost[i - 1][j - 1] + (1.0 - jaccard(&cand[i - 1], &refr[j - 1]));
            if (cost[i][j] - sub).abs() < eps {
                steps.push((Some(i - 1), Some(j - 1)));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && (cost[i][j] - (cost[i - 1][j] + INDEL_COST)).abs() < eps {
            steps.push((Some(i - 1), None));
            i -= 1;
            continue;
        }
        steps.push((None, Some(j - 1)));
        j -= 1;
    }
    steps.reverse();
    steps
}

/// Classify every aligned substitution into error records. Decision order
/// per operand position: register pairs first, then anything involving an
/// immediate, then labels. A line with several differing tokens yields
/// several records.
pub fn classify_errors(candidate: &BasicBlock, reference: &BasicBlock) -> Vec<ErrorRecord> {
    let cand: Vec<&Instruction> = candidate.instructions().collect();
    let refr: Vec<&Instruction> = reference.instructions().collect();
    let mut records = Vec::new();

    for (ci, ri) in align_instructions(candidate, reference) {
        let (Some(ci), Some(ri)) = (ci, ri) else {
            continue;
        };
        let (c, r) = (cand[ci], refr[ri]);
        let mut push = |category: ErrorCategory, token: String| {
            records.push(ErrorRecord {
                category,
                candidate_index: ci,
                reference_index: ri,
                candidate_line: crate::asm::print_instruction(c),
                reference_line: crate::asm::print_instruction(r),
                reference_mnemonic: r.mnemonic.clone(),
                token,
            });
        };

        if c.mnemonic != r.mnemonic {
            push(ErrorCategory::Opcode, c.mnemonic.clone());
        } else if !is_known(&c.mnemonic) {
            // Same unknown mnemonic on both sides is not a discrepancy.
        }

        for k in 0..c.operands.len().min(r.operands.len()) {
            if let Some((category, token)) = diff_operand(&c.operands[k], &r.operands[k]) {
                push(category, token);
            }
        }
    }
    records
}

fn op_token(op: &Operand) -> String {
    crate::asm::print_operand(op)
}

/// Categorize a differing operand pair; `None` when equal.
fn diff_operand(c: &Operand, r: &Operand) -> Option<(ErrorCategory, String)> {
    use Operand::*;
    if c == r {
        return None;
    }
    let category = match (c, r) {
        (Reg(_), Reg(_)) | (MalformedReg(_), Reg(_)) | (Reg(_), MalformedReg(_)) => {
            ErrorCategory::Register
        }
        (
            ShiftedReg {
                reg: a,
                shift: s1,
                amount: k1,
            },
            ShiftedReg {
                reg: b,
                shift: s2,
                amount: k2,
            },
        ) => {
            if a != b {
                ErrorCategory::Register
            } else if s1 != s2 || k1 != k2 {
                ErrorCategory::ImmediateValue
            } else {
                return None;
            }
        }
        (ExtendedReg { reg: a, .. }, ExtendedReg { reg: b, .. }) => {
            if a != b {
                ErrorCategory::Register
            } else {
                ErrorCategory::ImmediateValue
            }
        }
        (Mem(cm), Mem(rm)) => {
            if cm.base != rm.base {
                ErrorCategory::Register
            } else if index_reg(cm.index.as_ref()) != index_reg(rm.index.as_ref()) {
                ErrorCategory::Register
            } else {
                ErrorCategory::ImmediateValue
            }
        }
        (LabelRef { .. }, LabelRef { .. }) => ErrorCategory::Label,
        _ if matches!(c, Imm { .. } | MalformedImm(_))
            || matches!(r, Imm { .. } | MalformedImm(_)) =>
        {
            ErrorCategory::ImmediateValue
        }
        _ if matches!(c, Reg(_) | MalformedReg(_)) || matches!(r, Reg(_) | MalformedReg(_)) => {
            ErrorCategory::Register
        }
        _ if matches!(c, LabelRef { .. }) || matches!(r, LabelRef { .. }) => ErrorCategory::Label,
        _ => ErrorCategory::ImmediateValue,
    };
    Some((category, op_token(c)))
}

fn index_reg(index: Option<&MemIndex>) -> Option<crate::asm::Register> {
    index.map(|i| i.reg())
}

/// Normal-approximation binomial proportion with its 95% half-width.
pub fn confidence_interval(errors: u64, total: u64) -> Result<(f64, f64), TaxonomyError> {
    if total == 0 || errors > total {
        return Err(TaxonomyError::DomainError);
    }
    let p = errors as f64 / total as f64;
    let halfwidth = CONFIDENCE_Z * (p * (1.0 - p) / total as f64).sqrt();
    Ok((p, halfwidth))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MnemonicErrorStat {
    pub mnemonic: String,
    pub error_count: u64,
    pub total_count: u64,
    pub error_prob: f64,
    pub conf_halfwidth: f64,
}

/// Per-mnemonic opcode-error probabilities over mnemonics with more than
/// `min_samples` corpus occurrences, sorted by descending probability
/// (mnemonic name breaks ties).
pub fn per_mnemonic_error_stats(
    error_records: &[ErrorRecord],
    corpus_counts: &BTreeMap<String, u64>,
    min_samples: u64,
) -> Vec<MnemonicErrorStat> {
    let mut errors_by_mnemonic: BTreeMap<&str, u64> = BTreeMap::new();
    for record in error_records {
        if record.category == ErrorCategory::Opcode {
            *errors_by_mnemonic
                .entry(record.reference_mnemonic.as_str())
                .or_default() += 1;
        }
    }
    let mut stats: Vec<MnemonicErrorStat> = corpus_counts
        .iter()
        .filter(|(_, total)| **total > min_samples)
        .map(|(mnemonic, total)| {
            let error_count = errors_by_mnemonic
                .get(mnemonic.as_str())
                .copied()
                .unwrap_or(0);
            let error_count = error_count.min(*total);
            let (error_prob, conf_halfwidth) =
                confidence_interval(error_count, *total).expect("total > 0");
            MnemonicErrorStat {
                mnemonic: mnemonic.clone(),
                error_count,
                total_count: *total,
                error_prob,
                conf_halfwidth,
            }
        })
        .collect();
    stats.sort_by(|a, b| {
        b.error_prob
            .partial_cmp(&a.error_prob)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.mnemonic.cmp(&b.mnemonic))
    });
    stats
}

/// Aligned text table:
/// Instr, Error Count, Total Count, Error Prob, Conf.
pub fn render_stats_table(rows: &[MnemonicErrorStat]) -> String {
    let mut out = String::from("Instr    Error Count  Total Count  Error Prob  Conf\n");
    for row in rows {
        out.push_str(&format!(
            "{:<8} {:>11}  {:>11}  {:>10.6}  {:>8.6}\n",
            row.mnemonic, row.error_count, row.total_count, row.error_prob, row.conf_halfwidth
        ));
    }
    out
}

pub fn render_stats_csv(rows: &[MnemonicErrorStat]) -> String {
    let mut out = String::from("mnemonic,error_count,total_count,error_prob,conf\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            row.mnemonic, row.error_count, row.total_count, row.error_prob, row.conf_halfwidth
        ));
    }
    out
}
