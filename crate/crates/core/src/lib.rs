//! Desk-scale harness for studying peephole optimization of AArch64 basic
//! blocks: parse optimized/non-optimized block pairs, query a candidate
//! optimizer (reference engine, replay cache, or remote chat endpoint), and
//! score candidates with BLEU, exact-match, syntactic, and IO-equivalence
//! metrics plus an error taxonomy with confidence intervals.

pub mod adapter;
pub mod asm;
pub mod corpus;
pub mod interp;
pub mod metrics;
pub mod peephole;
pub mod rng;
pub mod taxonomy;
