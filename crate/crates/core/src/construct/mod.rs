pub mod corollary;
pub mod delta;
pub mod lemma2;
pub mod target;
pub mod theorem;

pub use corollary::{corollary32_check, piece_capacity, CorollaryResult};
pub use delta::{choose_delta, DeltaChoice, DeltaContext, DeltaMode, DeltaPolicy};
pub use lemma2::{lemma2_interpolant, Lemma2Plan, ResidualTrace};
pub use target::{HolderTarget, HolderViolation, TargetFn};
pub use theorem::{construct, psi, psi0, theorem_d1, theorem_dd, Construction};
