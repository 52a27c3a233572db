//! Randomized differential IO-equivalence over seeded machine states.

use crate::asm::BasicBlock;
use crate::rng::mix;

use super::effects::observable_effects;
use super::exec::{run_block, ExecutionResult, TerminatorOutcome};
use super::state::{init_state, MachineState};

pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceVerdict {
    Equivalent,
    Divergent {
        trial: u64,
        seed: u64,
        witness: Box<MachineState>,
        detail: String,
    },
    Uncheckable {
        reason: String,
    },
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent)
    }

    /// Divergence witnesses serialize as
    /// `{trial, seed, registers, mismatched_effect}`.
    pub fn witness_json(&self) -> Option<serde_json::Value> {
        match self {
            EquivalenceVerdict::Divergent {
                trial,
                seed,
                witness,
                detail,
            } => Some(serde_json::json!({
                "trial": trial,
                "seed": seed,
                "registers": witness.register_json(),
                "mismatched_effect": detail,
            })),
            _ => None,
        }
    }
}

fn uncheckable(result: &ExecutionResult, side: &str) -> Option<String> {
    if let Some(trap) = &result.trap {
        return Some(format!("{side} block trapped: {trap:?}"));
    }
    if let TerminatorOutcome::CalledExternal(target) = &result.terminator_outcome {
        return Some(format!("{side} block calls external '{target}'"));
    }
    None
}

/// Run both blocks from `trials` seeded initial states and compare their
/// observable effects trial by trial. A pure function of its arguments:
/// per-trial seeds derive from `(seed, trial)`, never from shared state.
pub fn io_equivalent(a: &BasicBlock, b: &BasicBlock, trials: u64, seed: u64) -> EquivalenceVerdict {
    assert!(trials >= 1, "trials must be >= 1");
    for trial in 0..trials {
        let trial_seed = mix(seed, trial);
        let initial = init_state(trial_seed);
        let ra = run_block(initial.clone(), a);
        let rb = run_block(initial.clone(), b);
        for (result, side) in [(&ra, "left"), (&rb, "right")] {
            if let Some(reason) = uncheckable(result, side) {
                return EquivalenceVerdict::Uncheckable { reason };
            }
        }
        let ea = observable_effects(&ra, a);
        let eb = observable_effects(&rb, b);
        if let Some(detail) = ea.describe_difference(&eb) {
            return EquivalenceVerdict::Divergent {
                trial,
                seed: trial_seed,
                witness: Box::new(initial),
                detail,
            };
        }
    }
    EquivalenceVerdict::Equivalent
}
