//! Population drivers: parallel tempering, PTEEM and the equi-energy sampler.
//!
//! All three keep a [`Population`] of chains, run one local move per chain
//! per iteration and interleave global moves:
//!
//! - PT proposes one swap between a uniformly chosen pair of neighbouring
//!   temperatures;
//! - PTEEM picks a ring holding at least two chains, then two of those
//!   chains, and proposes to exchange their current states;
//! - EES replaces a chain's state, with probability `p_ee`, by a stored past
//!   state of the next hotter chain from the same energy ring.
//!
//! Each chain draws from its own random stream and global decisions from a
//! separate one, so a run is a pure function of `(config, seed)`.

mod budget;
mod ees;
mod population;
mod tempering;
mod trace;

pub use budget::{move_budget, Algorithm, EesBudgetReading, MoveBudget};
pub use ees::{run_ees, EesConfig};
pub use population::Population;
pub use tempering::{pt_swap, pteem_exchange, run_tempering, GlobalMove, TemperingConfig};
pub use trace::{exchange_matrix, ExchangeEvent, MoveCounts, MoveKind, Trace};

/// Burn-in and kept iteration counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLength {
    pub burn_in: usize,
    pub kept: usize,
}

impl RunLength {
    pub fn new(burn_in: usize, kept: usize) -> Self {
        Self { burn_in, kept }
    }

    pub fn total(&self) -> usize {
        self.burn_in + self.kept
    }
}
