use alloc::vec::Vec;

use crate::error::ModelError;
use crate::ladders::EnergyLadder;
use crate::model::{self, LogDensity, TargetModel};

/// Current states of all chains with cached densities, energies and rings.
///
/// `energies[i]` and `rings[i]` always describe `states[i]` between moves.
#[derive(Debug, Clone)]
pub struct Population<S> {
    pub states: Vec<S>,
    pub densities: Vec<LogDensity>,
    pub energies: Vec<f64>,
    pub rings: Vec<usize>,
}

impl<S: Clone + core::fmt::Debug> Population<S> {
    pub fn new<M: TargetModel<State = S>>(model: &M, states: Vec<S>, ladder: &EnergyLadder) -> Result<Self, ModelError> {
        let n = states.len();
        let mut pop = Self {
            densities: Vec::with_capacity(n),
            energies: Vec::with_capacity(n),
            rings: Vec::with_capacity(n),
            states,
        };
        for x in &pop.states {
            let h = model::energy(model, x)?;
            pop.densities.push(model.log_density_parts(x));
            pop.energies.push(h);
            pop.rings.push(ladder.ring_index(h));
        }
        Ok(pop)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Recomputes energy and ring of chain `i` from its cached density.
    pub fn refresh(&mut self, i: usize, ladder: &EnergyLadder) -> Result<(), ModelError> {
        let h = self.densities[i].energy();
        if h.is_nan() {
            return Err(ModelError::NonFinite(alloc::format!("{:?}", self.states[i])));
        }
        self.energies[i] = h;
        self.rings[i] = ladder.ring_index(h);
        Ok(())
    }

    /// Exchanges the states (and their cached values) of chains `i` and `k`.
    pub fn swap(&mut self, i: usize, k: usize) {
        self.states.swap(i, k);
        self.densities.swap(i, k);
        self.energies.swap(i, k);
        self.rings.swap(i, k);
    }

    /// Whether the cached values agree with a fresh evaluation.
    pub fn is_consistent<M: TargetModel<State = S>>(&self, model: &M, ladder: &EnergyLadder) -> bool {
        self.states.iter().enumerate().all(|(i, x)| {
            let d = model.log_density_parts(x);
            let h = d.energy();
            (d == self.densities[i] || (d.total().is_nan() && self.densities[i].total().is_nan()))
                && (h == self.energies[i] || (h.is_nan() && self.energies[i].is_nan()))
                && ladder.ring_index(h) == self.rings[i]
        })
    }
}
