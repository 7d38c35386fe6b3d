//! The equi-energy sampler.
//!
//! Chains run from the hottest (`K`) down to the target chain. In the
//! original schedule chain `i` starts once chain `i + 1` has completed its
//! burn-in `B` and ring-construction period `R`, and all started chains then
//! advance together. Here each chain is run to completion before the next
//! colder one, but a jump from chain `i` at its step `s` only sees the states
//! chain `i + 1` had stored by the same point of the staggered schedule, i.e.
//! those from its steps `B..B + R + s`. The draws are therefore identical to
//! the concurrent schedule while only one ring store is alive at a time.
//!
//! Chain `i` (1-based) runs `i (B + R) + M` iterations; the target chain
//! keeps its last `M`.

use alloc::vec::Vec;

use rand::Rng;

use super::budget::Algorithm;
use super::trace::{ExchangeEvent, MoveKind, Trace};
use crate::error::{ConfigError, EngineError};
use crate::kernels::LocalKernel;
use crate::ladders::{EnergyLadder, TemperatureLadder};
use crate::math;
use crate::model::{self, LogDensity, TargetModel, TemperedDensity};
use crate::rng::RunSeed;

#[derive(Debug, Clone)]
pub struct EesConfig {
    pub temperatures: TemperatureLadder,
    /// One level per chain; level `i` truncates chain `i`'s energy.
    pub energy: EnergyLadder,
    pub jump_probability: f64,
    pub burn_in: usize,
    pub ring_period: usize,
    pub kept: usize,
    /// Chains whose target is left untruncated (a Gibbs-driven target chain,
    /// for instance).
    pub untruncated: Vec<usize>,
    pub watch: Vec<usize>,
}

impl EesConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = self.temperatures.len();
        if k < 2 {
            return Err(ConfigError::LadderSize { min: 2, got: k });
        }
        if self.energy.rings() != k {
            return Err(ConfigError::ChainMismatch { what: "energy level count", got: self.energy.rings(), chains: k });
        }
        if !(self.jump_probability > 0.0 && self.jump_probability < 1.0) {
            return Err(ConfigError::JumpProbability(self.jump_probability));
        }
        Ok(())
    }

    /// Per-chain targets `exp(-max(h, H_i) / T_i)`.
    pub fn targets(&self) -> Result<Vec<TemperedDensity>, ConfigError> {
        self.temperatures
            .as_slice()
            .iter()
            .zip(self.energy.levels())
            .enumerate()
            .map(|(c, (&t, &h))| {
                if self.untruncated.contains(&c) {
                    TemperedDensity::new(t)
                } else {
                    TemperedDensity::truncated(t, h)
                }
            })
            .collect()
    }

    /// Iterations run by chain `c` (0-based).
    pub fn chain_length(&self, c: usize) -> usize {
        (c + 1) * (self.burn_in + self.ring_period) + self.kept
    }
}

struct Stored<S> {
    step: usize,
    state: S,
    density: LogDensity,
}

/// Past post-burn-in states of one chain, filed by energy ring in step order.
struct RingStore<S> {
    rings: Vec<Vec<Stored<S>>>,
}

impl<S> RingStore<S> {
    fn new(rings: usize) -> Self {
        Self { rings: (0..rings).map(|_| Vec::new()).collect() }
    }

    /// Number of states of `ring` stored before `step`.
    fn available(&self, ring: usize, step: usize) -> usize {
        self.rings[ring].partition_point(|s| s.step < step)
    }
}

/// Runs the equi-energy sampler. `kernels[i]` performs chain `i`'s local
/// moves on its (truncated) tempered target.
pub fn run_ees<M, K>(
    model: &M,
    kernels: &[K],
    config: &EesConfig,
    init: Vec<M::State>,
    seed: RunSeed,
) -> Result<Trace<M::State>, EngineError>
where
    M: TargetModel,
    K: LocalKernel<M>,
{
    config.validate()?;
    let k = config.temperatures.len();
    if kernels.len() != k {
        return Err(ConfigError::ChainMismatch { what: "kernel count", got: kernels.len(), chains: k }.into());
    }
    if init.len() != k {
        return Err(ConfigError::ChainMismatch { what: "initial state count", got: init.len(), chains: k }.into());
    }
    let targets = config.targets()?;
    let ladder: &EnergyLadder = &config.energy;
    let lag = config.burn_in + config.ring_period;
    let mut trace = Trace::new(Algorithm::Ees, seed, ladder.levels().to_vec(), k);
    let mut hotter: Option<RingStore<M::State>> = None;
    let mut init = init;

    for c in (0..k).rev() {
        let mut x = init[c].clone();
        let mut density = model.log_density_parts(&x);
        let mut h = model::energy(model, &x)?;
        let mut store = RingStore::new(ladder.rings());
        let mut rng = seed.chain(c);
        let mut jump_rng = seed.stream(0x1_0000_0000 + c as u64);
        let steps = config.chain_length(c);
        let watched = c > 0 && config.watch.contains(&c);
        let mut watched_samples = Vec::new();

        for s in 0..steps {
            let mut did_jump = false;
            if let Some(prev) = hotter.as_ref() {
                if jump_rng.random::<f64>() < config.jump_probability {
                    let ring = ladder.ring_index(h);
                    let avail = prev.available(ring, lag + s);
                    if avail > 0 {
                        did_jump = true;
                        let y = &prev.rings[ring][jump_rng.random_range(0..avail)];
                        let (cold, hot) = (&targets[c], &targets[c + 1]);
                        let log_ratio = cold.log_density(&y.density) + hot.log_density(&density)
                            - cold.log_density(&density)
                            - hot.log_density(&y.density);
                        let accepted = jump_rng.random::<f64>() < math::acceptance(log_ratio);
                        if accepted {
                            x = y.state.clone();
                            density = y.density;
                        }
                        trace.global.record(accepted);
                        trace.events.push(ExchangeEvent {
                            iteration: s as u32,
                            kind: MoveKind::Jump,
                            pair: Some((c as u16, (c + 1) as u16)),
                            accepted,
                        });
                    } else {
                        trace.skipped += 1;
                    }
                }
            }
            if !did_jump {
                let accepted = kernels[c].step(model, &targets[c], &mut x, &mut density, &mut rng);
                trace.local[c].record(accepted);
            }
            h = density.energy();
            if h.is_nan() {
                return Err(crate::error::ModelError::NonFinite(alloc::format!("{x:?}")).into());
            }

            if s >= config.burn_in {
                let ring = ladder.ring_index(h);
                trace.ring_history[c].push(ring as u16);
                if c > 0 {
                    store.rings[ring].push(Stored { step: s, state: x.clone(), density });
                }
                if s >= lag {
                    if c == 0 {
                        trace.samples.push(x.clone());
                        trace.sample_energies.push(h);
                    } else if watched {
                        watched_samples.push(x.clone());
                    }
                }
            }
        }
        if watched {
            trace.watched.push((c, watched_samples));
        }
        hotter = Some(store);
        // the state is no longer needed; free it early for large states
        init.truncate(c);
    }
    trace.watched.sort_by_key(|(c, _)| *c);
    Ok(trace)
}
