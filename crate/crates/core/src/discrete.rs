//! Finite discrete targets for stationarity checks against exact enumeration.

use alloc::vec::Vec;

use rand::Rng;

use crate::kernels::{GibbsSweep, LocalKernel};
use crate::math;
use crate::model::{LogDensity, TargetModel, TemperedDensity};

/// Unnormalized distribution on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTarget {
    log_weights: Vec<f64>,
}

impl DiscreteTarget {
    pub fn new(log_weights: Vec<f64>) -> Self {
        Self { log_weights }
    }

    pub fn from_probabilities(p: &[f64]) -> Self {
        Self::new(p.iter().map(|&q| math::ln(q)).collect())
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// Normalized law of `td` by enumeration.
    pub fn exact(&self, td: &TemperedDensity) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.len())
            .map(|x| td.log_density(&self.log_density_parts(&x)))
            .collect();
        let z = math::log_sum_exp(&logs);
        logs.iter().map(|l| math::exp(l - z)).collect()
    }
}

impl TargetModel for DiscreteTarget {
    type State = usize;

    fn log_density_parts(&self, x: &usize) -> LogDensity {
        match self.log_weights.get(*x) {
            Some(&w) => LogDensity::tempered(w),
            None => LogDensity::OFF_SUPPORT,
        }
    }
}

/// Metropolis step proposing a uniform neighbour `x ± 1` on the cycle.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeighborMetropolis;

impl LocalKernel<DiscreteTarget> for NeighborMetropolis {
    fn step<R: Rng + ?Sized>(
        &self,
        model: &DiscreteTarget,
        target: &TemperedDensity,
        state: &mut usize,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool {
        let n = model.len();
        let candidate = if rng.random::<bool>() { (*state + 1) % n } else { (*state + n - 1) % n };
        let cand = model.log_density_parts(&candidate);
        let u: f64 = rng.random();
        if u < math::acceptance(target.log_density(&cand) - target.log_density(density)) {
            *state = candidate;
            *density = cand;
            true
        } else {
            false
        }
    }
}

/// Draws the whole (single-block) state from its tempered law.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactDraw;

impl GibbsSweep<DiscreteTarget> for ExactDraw {
    fn sweep<R: Rng + ?Sized>(&self, model: &DiscreteTarget, temperature: f64, state: &mut usize, rng: &mut R) {
        let td = TemperedDensity::new(temperature).expect("temperature >= 1");
        let p = model.exact(&td);
        let mut u: f64 = rng.random();
        *state = p.len() - 1;
        for (i, q) in p.iter().enumerate() {
            if u < *q {
                *state = i;
                break;
            }
            u -= q;
        }
    }
}

/// `sum |p - q|` over the common support.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Empirical law of a sample of states in `{0, .., n-1}`.
pub fn empirical(samples: &[usize], n: usize) -> Vec<f64> {
    let mut counts = alloc::vec![0.0; n];
    for &s in samples {
        counts[s] += 1.0;
    }
    let total = samples.len().max(1) as f64;
    counts.iter().map(|c| c / total).collect()
}
