//! Local moves.
//!
//! A [`LocalKernel`] advances one chain by one iteration while leaving its
//! tempered target invariant. The random-walk Metropolis step works on any
//! real-vector state; Gibbs samplers implement [`GibbsSweep`] and are lifted
//! to kernels through [`Gibbs`].

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::ConfigError;
use crate::model::{LogDensity, TargetModel, TemperedDensity};

/// A one-iteration update of a single chain.
///
/// `density` caches the split log density of `state` and must be kept in
/// sync by the kernel. Returns whether the move was accepted; Gibbs sweeps
/// always report `true`.
pub trait LocalKernel<M: TargetModel> {
    fn step<R: Rng + ?Sized>(
        &self,
        model: &M,
        target: &TemperedDensity,
        state: &mut M::State,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool;
}

/// Isotropic Gaussian random-walk proposal `x' = x + tau * z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwProposal {
    step_scale: f64,
}

impl RwProposal {
    pub fn new(step_scale: f64) -> Result<Self, ConfigError> {
        if !(step_scale > 0.0) || !step_scale.is_finite() {
            return Err(ConfigError::Invalid {
                key: "step_scale",
                reason: alloc::format!("must be positive, got {step_scale}"),
            });
        }
        Ok(Self { step_scale })
    }

    /// `tau = base * sqrt(T)`.
    pub fn scaled(base: f64, temperature: f64) -> Result<Self, ConfigError> {
        Self::new(base * libm::sqrt(temperature))
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }
}

/// One random-walk Metropolis–Hastings step. Rejection keeps `x` as is.
pub fn rw_mh_step<M, R>(
    model: &M,
    target: &TemperedDensity,
    proposal: &RwProposal,
    x: &mut M::State,
    density: &mut LogDensity,
    rng: &mut R,
) -> bool
where
    M: TargetModel,
    M::State: AsMut<[f64]>,
    R: Rng + ?Sized,
{
    let mut candidate = x.clone();
    for c in candidate.as_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *c += proposal.step_scale * z;
    }
    let cand_density = model.log_density_parts(&candidate);
    let log_ratio = target.log_density(&cand_density) - target.log_density(density);
    // a uniform is always drawn so the stream position does not depend on the outcome
    let u: f64 = rng.random();
    if u < crate::math::acceptance(log_ratio) {
        *x = candidate;
        *density = cand_density;
        true
    } else {
        false
    }
}

impl<M> LocalKernel<M> for RwProposal
where
    M: TargetModel,
    M::State: AsMut<[f64]>,
{
    fn step<R: Rng + ?Sized>(
        &self,
        model: &M,
        target: &TemperedDensity,
        state: &mut M::State,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool {
        rw_mh_step(model, target, self, state, density, rng)
    }
}

/// A full Gibbs sweep at temperature `T`: every block is redrawn once from
/// its tempered full conditional, in a fixed order.
pub trait GibbsSweep<M: TargetModel> {
    fn sweep<R: Rng + ?Sized>(&self, model: &M, temperature: f64, state: &mut M::State, rng: &mut R);
}

/// Adapter running a [`GibbsSweep`] as a [`LocalKernel`].
///
/// Gibbs conditionals are those of the untruncated tempered density, so the
/// target must not carry a truncation level.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gibbs<G>(pub G);

impl<M: TargetModel, G: GibbsSweep<M>> LocalKernel<M> for Gibbs<G> {
    fn step<R: Rng + ?Sized>(
        &self,
        model: &M,
        target: &TemperedDensity,
        state: &mut M::State,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool {
        debug_assert!(target.truncation().is_none(), "Gibbs sweep on a truncated target");
        self.0.sweep(model, target.temperature(), state, rng);
        *density = model.log_density_parts(state);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{DiscreteTarget, ExactDraw};
    use crate::model::{tempered_log_density, LogDensity};
    use crate::rng::RunSeed;
    use alloc::vec;
    use alloc::vec::Vec;

    /// Flat density on the real line, -inf outside [-1, 1].
    struct Window;

    impl TargetModel for Window {
        type State = [f64; 1];
        fn log_density_parts(&self, x: &[f64; 1]) -> LogDensity {
            if x[0].abs() <= 1.0 {
                LogDensity::tempered(0.0)
            } else {
                LogDensity::OFF_SUPPORT
            }
        }
    }

    /// Two-component 1-D Gaussian mixture.
    struct Bimodal;

    impl TargetModel for Bimodal {
        type State = [f64; 1];
        fn log_density_parts(&self, x: &[f64; 1]) -> LogDensity {
            let a = -0.5 * (x[0] + 1.0) * (x[0] + 1.0) / 0.25;
            let b = -0.5 * (x[0] - 1.5) * (x[0] - 1.5) / 0.36;
            LogDensity::tempered(crate::math::log_sum_exp(&[a + libm::log(0.3 / 0.5), b + libm::log(0.7 / 0.6)]))
        }
    }

    #[test]
    fn equal_density_always_accepts() {
        let mut rng = RunSeed::new(1, 0).chain(0);
        let td = TemperedDensity::untempered();
        let prop = RwProposal::new(1e-9).unwrap();
        let mut x = [0.0];
        let mut d = Window.log_density_parts(&x);
        for _ in 0..1000 {
            assert!(rw_mh_step(&Window, &td, &prop, &mut x, &mut d, &mut rng));
        }
    }

    #[test]
    fn off_support_proposal_always_rejected() {
        let mut rng = RunSeed::new(2, 0).chain(0);
        let td = TemperedDensity::untempered();
        let prop = RwProposal::new(1e6).unwrap();
        let mut x = [0.0];
        let mut d = Window.log_density_parts(&x);
        let accepted = (0..1000)
            .filter(|_| rw_mh_step(&Window, &td, &prop, &mut x, &mut d, &mut rng))
            .count();
        assert_eq!(accepted, 0);
        assert_eq!(x, [0.0]);
    }

    #[test]
    fn invalid_scale_rejected() {
        assert!(RwProposal::new(0.0).is_err());
        assert!(RwProposal::new(-1.0).is_err());
        assert!((RwProposal::scaled(0.25, 4.0).unwrap().step_scale() - 0.5).abs() < 1e-15);
    }

    /// Flow between grid cells of a reversible chain is symmetric in
    /// stationarity: F(a, b) and F(b, a) differ only by binomial noise.
    #[test]
    fn rw_mh_detailed_balance_on_grid() {
        let mut rng = RunSeed::new(3, 0).chain(0);
        let td = TemperedDensity::new(1.5).unwrap();
        let prop = RwProposal::new(0.6).unwrap();
        let edges: Vec<f64> = (0..=14).map(|i| -2.5 + 0.4 * i as f64).collect();
        let cell = |x: f64| edges.partition_point(|&e| e <= x);
        let cells = edges.len() + 1;
        let mut flow = vec![vec![0u64; cells]; cells];
        let mut x = [0.0];
        let mut d = Bimodal.log_density_parts(&x);
        for _ in 0..10_000 {
            rw_mh_step(&Bimodal, &td, &prop, &mut x, &mut d, &mut rng);
        }
        let steps = 1_000_000u64;
        for _ in 0..steps {
            let a = cell(x[0]);
            rw_mh_step(&Bimodal, &td, &prop, &mut x, &mut d, &mut rng);
            flow[a][cell(x[0])] += 1;
        }
        let mut checked = 0;
        for a in 0..cells {
            for b in a + 1..cells {
                let (fab, fba) = (flow[a][b] as f64, flow[b][a] as f64);
                if fab + fba < 100.0 {
                    continue;
                }
                // binomial(n, 1/2) split of the n crossings: sd of the difference is sqrt(n)
                let sigma = libm::sqrt(fab + fba);
                assert!((fab - fba).abs() <= 3.0 * sigma, "cells {a},{b}: {fab} vs {fba}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn rw_mh_recovers_tempered_window_mass() {
        // long-run mass left of 0 on the tempered bimodal target, vs quadrature
        let td = TemperedDensity::new(2.0).unwrap();
        let grid: Vec<f64> = (0..60_000).map(|i| -6.0 + i as f64 * 2e-4).collect();
        let w: Vec<f64> = grid.iter().map(|&x| libm::exp(tempered_log_density(&Bimodal, &td, &[x]))).collect();
        let total: f64 = w.iter().sum();
        let left: f64 = grid.iter().zip(&w).filter(|(x, _)| **x < 0.0).map(|(_, w)| w).sum();
        let exact = left / total;

        let mut rng = RunSeed::new(4, 0).chain(0);
        let prop = RwProposal::new(1.0).unwrap();
        let mut x = [0.0];
        let mut d = Bimodal.log_density_parts(&x);
        let n = 400_000;
        let mut hits = 0;
        for _ in 0..n {
            rw_mh_step(&Bimodal, &td, &prop, &mut x, &mut d, &mut rng);
            hits += (x[0] < 0.0) as usize;
        }
        assert!((hits as f64 / n as f64 - exact).abs() < 0.01);
    }

    #[test]
    fn exact_two_point_conditional_frequencies() {
        let target = DiscreteTarget::from_probabilities(&[0.3, 0.7]);
        let kernel = Gibbs(ExactDraw);
        let td = TemperedDensity::untempered();
        let mut rng = RunSeed::new(5, 0).chain(0);
        let mut x = 0usize;
        let mut d = target.log_density_parts(&x);
        let mut ones = 0;
        let n = 100_000;
        for _ in 0..n {
            assert!(kernel.step(&target, &td, &mut x, &mut d, &mut rng));
            ones += x;
        }
        assert!((ones as f64 / n as f64 - 0.7).abs() < 0.01);
    }
}
