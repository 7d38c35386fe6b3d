use alloc::vec;
use alloc::vec::Vec;

use super::budget::Algorithm;
use crate::ladders::OccupancyTable;
use crate::rng::RunSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    /// PTEEM exchange between two chains of one ring.
    EquiEnergy,
    /// PT swap between neighbouring temperatures.
    Swap,
    /// EES jump to a stored state of the next hotter chain.
    Jump,
}

impl MoveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MoveKind::EquiEnergy => "equi_energy",
            MoveKind::Swap => "swap",
            MoveKind::Jump => "jump",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "equi_energy" => Some(MoveKind::EquiEnergy),
            "swap" => Some(MoveKind::Swap),
            "jump" => Some(MoveKind::Jump),
            _ => None,
        }
    }
}

/// A proposed global move. `pair` is `None` when no move was possible
/// (no ring with two chains, or an empty EES ring).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeEvent {
    pub iteration: u32,
    pub kind: MoveKind,
    pub pair: Option<(u16, u16)>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounts {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rejected(&self) -> u64 {
        self.proposed - self.accepted
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, other: &MoveCounts) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Record of one sampler run.
#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub algorithm: Algorithm,
    pub seed: RunSeed,
    pub levels: Vec<f64>,
    /// Kept states of chain 0 (the target chain).
    pub samples: Vec<S>,
    /// Energies of the kept chain-0 states.
    pub sample_energies: Vec<f64>,
    /// Kept states of additional chains requested by the caller.
    pub watched: Vec<(usize, Vec<S>)>,
    /// Ring of every chain at each recorded (post burn-in) iteration.
    pub ring_history: Vec<Vec<u16>>,
    pub events: Vec<ExchangeEvent>,
    /// Local move counts per chain, over the whole run.
    pub local: Vec<MoveCounts>,
    /// Global moves actually proposed (skips excluded), over the whole run.
    pub global: MoveCounts,
    /// Global moves that could not be proposed.
    pub skipped: u64,
}

impl<S> Trace<S> {
    pub(crate) fn new(algorithm: Algorithm, seed: RunSeed, levels: Vec<f64>, chains: usize) -> Self {
        Self {
            algorithm,
            seed,
            levels,
            samples: Vec::new(),
            sample_energies: Vec::new(),
            watched: Vec::new(),
            ring_history: vec![Vec::new(); chains],
            events: Vec::new(),
            local: vec![MoveCounts::default(); chains],
            global: MoveCounts::default(),
            skipped: 0,
        }
    }

    pub fn chains(&self) -> usize {
        self.local.len()
    }

    /// Local acceptance pooled over chains.
    pub fn local_acceptance(&self) -> f64 {
        let mut all = MoveCounts::default();
        for c in &self.local {
            all.merge(c);
        }
        all.rate()
    }

    pub fn global_acceptance(&self) -> f64 {
        self.global.rate()
    }

    pub fn total_local_moves(&self) -> u64 {
        self.local.iter().map(|c| c.proposed).sum()
    }

    /// Chains × rings visit counts over the recorded iterations.
    pub fn occupancy(&self) -> Option<OccupancyTable> {
        OccupancyTable::from_rings(&self.ring_history, self.levels.len())
    }

    /// Watched samples of `chain`, chain 0 included.
    pub fn chain_samples(&self, chain: usize) -> Option<&[S]> {
        if chain == 0 {
            return Some(&self.samples);
        }
        self.watched.iter().find(|(c, _)| *c == chain).map(|(_, s)| s.as_slice())
    }
}

/// `entry[i][j]`: percentage of chain `i`'s accepted global moves that were
/// made with chain `j`. Rows of chains without accepted moves are zero.
pub fn exchange_matrix(events: &[ExchangeEvent], chains: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0u64; chains]; chains];
    for e in events {
        if let (true, Some((a, b))) = (e.accepted, e.pair) {
            let (a, b) = (a as usize, b as usize);
            if a != b && a < chains && b < chains {
                counts[a][b] += 1;
                counts[b][a] += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.into_iter()
                .map(|c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect()
}
