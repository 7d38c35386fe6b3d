use alloc::vec::Vec;

use rand::Rng;

use super::budget::Algorithm;
use super::population::Population;
use super::trace::{ExchangeEvent, MoveKind, Trace};
use super::RunLength;
use crate::error::{ConfigError, EngineError};
use crate::kernels::LocalKernel;
use crate::ladders::{EnergyLadder, TemperatureLadder};
use crate::math;
use crate::model::{LogDensity, TargetModel, TemperedDensity};
use crate::rng::RunSeed;

/// Which global move follows the local sweep of each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalMove {
    /// PTEEM exchange inside an energy ring.
    EquiEnergy,
    /// PT swap of one random pair of neighbouring temperatures.
    AdjacentSwap,
}

#[derive(Debug, Clone)]
pub struct TemperingConfig {
    pub temperatures: TemperatureLadder,
    /// Ring partition. PT uses it for occupancy diagnostics only.
    pub energy: EnergyLadder,
    pub length: RunLength,
    pub global: GlobalMove,
    /// Extra chains (0-based, chain 0 is always kept) whose kept states are
    /// stored in the trace.
    pub watch: Vec<usize>,
}

/// Log acceptance ratio of exchanging the states of chains at temperatures
/// `ti` and `tk`: `(1/ti - 1/tk) (t(x_k) - t(x_i))` in terms of the tempered
/// parts. NaN when both states are off support.
fn exchange_log_ratio(ti: f64, tk: f64, di: &LogDensity, dk: &LogDensity) -> f64 {
    if ti == tk {
        return 0.0;
    }
    (1.0 / ti - 1.0 / tk) * (dk.tempered - di.tempered)
}

fn try_exchange<S: Clone + core::fmt::Debug, R: Rng + ?Sized>(
    pop: &mut Population<S>,
    temps: &TemperatureLadder,
    i: usize,
    k: usize,
    rng: &mut R,
) -> bool {
    let log_ratio = exchange_log_ratio(temps.get(i), temps.get(k), &pop.densities[i], &pop.densities[k]);
    let u: f64 = rng.random();
    let accepted = u < math::acceptance(log_ratio);
    if accepted {
        pop.swap(i, k);
    }
    accepted
}

/// PTEEM global move: a uniformly chosen ring holding at least two chains,
/// a uniformly chosen pair `i < k` in it, and a Metropolis exchange.
///
/// Chains with infinite energy take no part. Returns `None` (move skipped)
/// when no ring holds two chains.
pub fn pteem_exchange<S: Clone + core::fmt::Debug, R: Rng + ?Sized>(
    pop: &mut Population<S>,
    ladder: &EnergyLadder,
    temps: &TemperatureLadder,
    rng: &mut R,
) -> Option<((usize, usize), bool)> {
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); ladder.rings()];
    for (chain, (&ring, &h)) in pop.rings.iter().zip(&pop.energies).enumerate() {
        if h.is_finite() || h == f64::NEG_INFINITY {
            members[ring].push(chain);
        }
    }
    let candidates: Vec<&Vec<usize>> = members.iter().filter(|m| m.len() >= 2).collect();
    if candidates.is_empty() {
        return None;
    }
    let ring = candidates[rng.random_range(0..candidates.len())];
    let a = rng.random_range(0..ring.len());
    let mut b = rng.random_range(0..ring.len() - 1);
    if b >= a {
        b += 1;
    }
    let (i, k) = (ring[a.min(b)], ring[a.max(b)]);
    Some(((i, k), try_exchange(pop, temps, i, k, rng)))
}

/// PT global move: swap proposal between chains `i` and `i + 1`, `i` uniform.
pub fn pt_swap<S: Clone + core::fmt::Debug, R: Rng + ?Sized>(
    pop: &mut Population<S>,
    temps: &TemperatureLadder,
    rng: &mut R,
) -> Option<((usize, usize), bool)> {
    if pop.len() < 2 {
        return None;
    }
    let i = rng.random_range(0..pop.len() - 1);
    Some(((i, i + 1), try_exchange(pop, temps, i, i + 1, rng)))
}

/// Runs PT or PTEEM: per iteration one local move per chain (chain `i`
/// targets its tempered density) followed by one global move.
///
/// `kernels[i]` drives chain `i`. The kept part of the run is recorded in the
/// returned trace.
pub fn run_tempering<M, K>(
    model: &M,
    kernels: &[K],
    config: &TemperingConfig,
    init: Vec<M::State>,
    seed: RunSeed,
) -> Result<Trace<M::State>, EngineError>
where
    M: TargetModel,
    K: LocalKernel<M>,
{
    let n = config.temperatures.len();
    if kernels.len() != n {
        return Err(ConfigError::ChainMismatch { what: "kernel count", got: kernels.len(), chains: n }.into());
    }
    if init.len() != n {
        return Err(ConfigError::ChainMismatch { what: "initial state count", got: init.len(), chains: n }.into());
    }
    let targets: Vec<TemperedDensity> = config
        .temperatures
        .as_slice()
        .iter()
        .map(|&t| TemperedDensity::new(t))
        .collect::<Result<_, _>>()?;
    let algorithm = match config.global {
        GlobalMove::EquiEnergy => Algorithm::Pteem,
        GlobalMove::AdjacentSwap => Algorithm::Pt,
    };
    let kind = match config.global {
        GlobalMove::EquiEnergy => MoveKind::EquiEnergy,
        GlobalMove::AdjacentSwap => MoveKind::Swap,
    };
    let ladder = &config.energy;
    let mut pop = Population::new(model, init, ladder)?;
    let mut chain_rngs: Vec<_> = (0..n).map(|c| seed.chain(c)).collect();
    let mut exchange_rng = seed.exchange();
    let mut trace = Trace::new(algorithm, seed, ladder.levels().to_vec(), n);
    let watch: Vec<usize> = config.watch.iter().copied().filter(|&c| c > 0 && c < n).collect();
    trace.watched = watch.iter().map(|&c| (c, Vec::with_capacity(config.length.kept))).collect();
    for h in trace.ring_history.iter_mut() {
        h.reserve(config.length.kept);
    }

    for iteration in 0..config.length.total() {
        for c in 0..n {
            let accepted = kernels[c].step(
                model,
                &targets[c],
                &mut pop.states[c],
                &mut pop.densities[c],
                &mut chain_rngs[c],
            );
            trace.local[c].record(accepted);
            pop.refresh(c, ladder)?;
        }

        let outcome = match config.global {
            GlobalMove::EquiEnergy => pteem_exchange(&mut pop, ladder, &config.temperatures, &mut exchange_rng),
            GlobalMove::AdjacentSwap => pt_swap(&mut pop, &config.temperatures, &mut exchange_rng),
        };
        let event = match outcome {
            Some(((i, k), accepted)) => {
                trace.global.record(accepted);
                ExchangeEvent { iteration: iteration as u32, kind, pair: Some((i as u16, k as u16)), accepted }
            }
            None => {
                trace.skipped += 1;
                ExchangeEvent { iteration: iteration as u32, kind, pair: None, accepted: false }
            }
        };
        trace.events.push(event);

        if iteration >= config.length.burn_in {
            trace.samples.push(pop.states[0].clone());
            trace.sample_energies.push(pop.energies[0]);
            for (c, store) in trace.watched.iter_mut() {
                store.push(pop.states[*c].clone());
            }
            for (c, h) in trace.ring_history.iter_mut().enumerate() {
                h.push(pop.rings[c] as u16);
            }
        }
    }
    debug_assert!(pop.is_consistent(model, ladder));
    Ok(trace)
}
