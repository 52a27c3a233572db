//! Deterministic interpreter for straight-line AArch64 integer code and the
//! randomized IO-equivalence check built on top of it.

pub mod access;
mod effects;
mod equiv;
mod exec;
mod state;

pub use effects::{observable_effects, own_frame_size, EffectSet};
pub use equiv::{io_equivalent, EquivalenceVerdict, DEFAULT_SEED, DEFAULT_TRIALS};
pub use exec::{
    add_with_carry, condition_holds, run_block, ExecutionResult, StoreRecord, TerminatorOutcome,
    Trap,
};
pub use state::{init_state, symbol_address, MachineState, Nzcv, INITIAL_SP};
