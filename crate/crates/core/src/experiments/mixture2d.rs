//! Twenty-component bivariate Gaussian mixture benchmark.
//!
//! The density is `f(x) = sum_i w_i / (sigma_i sqrt(2 pi)) exp(-|x - mu_i|^2 / (2 sigma_i^2))`
//! (note the one-dimensional normalizing factor, kept so that the energy
//! levels of the benchmark apply). Samples of the target chain are
//! assigned to the nearest mean and count as visiting that mode when they
//! lie within `4 sigma` of it.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::engines::{
    run_ees, run_tempering, Algorithm, EesConfig, GlobalMove, RunLength, TemperingConfig, Trace,
};
use crate::error::{ConfigError, EngineError};
use crate::kernels::RwProposal;
use crate::ladders::{EnergyLadder, EnergyScheme, TemperatureLadder, TemperatureScheme};
use crate::math;
use crate::model::{LogDensity, TargetModel};
use crate::rng::RunSeed;

pub const MEANS: [[f64; 2]; 20] = [
    [2.18, 5.76],
    [8.67, 9.59],
    [4.24, 8.48],
    [8.41, 1.68],
    [3.93, 8.82],
    [3.25, 3.47],
    [1.70, 0.50],
    [4.59, 5.60],
    [6.91, 5.81],
    [6.87, 5.40],
    [5.41, 2.65],
    [2.70, 7.88],
    [4.98, 3.70],
    [1.14, 2.39],
    [8.33, 9.50],
    [4.93, 1.50],
    [1.83, 0.09],
    [2.26, 0.31],
    [5.54, 6.86],
    [1.69, 8.11],
];

/// Capture radius for mode visits, in component standard deviations.
pub const CAPTURE_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// All `sigma_i = 0.1`.
    Equal,
    /// `sigma = 0.4` for components 1–5, `0.1` for 6–13, `0.05` for 14–20.
    Unequal,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Equal => "equal",
            Variant::Unequal => "unequal",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "equal" => Ok(Variant::Equal),
            "unequal" => Ok(Variant::Unequal),
            other => Err(ConfigError::Invalid {
                key: "variant",
                reason: alloc::format!("unknown variant '{other}' (expected equal or unequal)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture2D {
    means: Vec<[f64; 2]>,
    sigmas: Vec<f64>,
    weights: Vec<f64>,
    // ln w_i - ln(sigma_i sqrt(2 pi)), and 1 / (2 sigma_i^2)
    log_coef: Vec<f64>,
    inv_two_var: Vec<f64>,
}

impl GaussianMixture2D {
    pub fn new(means: Vec<[f64; 2]>, sigmas: Vec<f64>, weights: Vec<f64>) -> Result<Self, ConfigError> {
        if means.len() != sigmas.len() || means.len() != weights.len() || means.is_empty() {
            return Err(ConfigError::Invalid { key: "mixture", reason: "component arrays differ in length".into() });
        }
        if sigmas.iter().any(|&s| !(s > 0.0)) || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(ConfigError::Invalid { key: "mixture", reason: "sigmas and weights must be positive".into() });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ConfigError::Invalid { key: "mixture", reason: alloc::format!("weights sum to {total}") });
        }
        let log_coef = sigmas
            .iter()
            .zip(&weights)
            .map(|(&s, &w)| math::ln(w) - math::ln(s) - 0.5 * math::LN_2PI)
            .collect();
        let inv_two_var = sigmas.iter().map(|s| 0.5 / (s * s)).collect();
        Ok(Self { means, sigmas, weights, log_coef, inv_two_var })
    }

    pub fn variant(variant: Variant) -> Self {
        let sigmas = match variant {
            Variant::Equal => vec![0.1; 20],
            Variant::Unequal => (0..20).map(|i| if i < 5 { 0.4 } else if i < 13 { 0.1 } else { 0.05 }).collect(),
        };
        Self::new(MEANS.to_vec(), sigmas, vec![0.05; 20]).expect("benchmark mixture is valid")
    }

    pub fn components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[[f64; 2]] {
        &self.means
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Log of `f(x)` through a log-sum-exp over the components.
    pub fn log_density_at(&self, x: &[f64; 2]) -> f64 {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return f64::NEG_INFINITY;
        }
        let mut terms = [0.0f64; 32];
        let n = self.means.len();
        let mut heap;
        let buf: &mut [f64] = if n <= terms.len() {
            &mut terms[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        for (i, t) in buf.iter_mut().enumerate() {
            let (dx, dy) = (x[0] - self.means[i][0], x[1] - self.means[i][1]);
            *t = self.log_coef[i] - (dx * dx + dy * dy) * self.inv_two_var[i];
        }
        math::log_sum_exp(buf)
    }

    /// Nearest mean and whether `x` lies within its capture radius.
    pub fn assign_mode(&self, x: &[f64; 2]) -> (usize, bool) {
        let mut best = (0, f64::INFINITY);
        for (i, m) in self.means.iter().enumerate() {
            let d2 = (x[0] - m[0]) * (x[0] - m[0]) + (x[1] - m[1]) * (x[1] - m[1]);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        let radius = CAPTURE_SIGMAS * self.sigmas[best.0];
        (best.0, best.1 < radius * radius)
    }

    /// `(E X1, E X2, E X1^2, E X2^2)` in closed form. The density above is
    /// normalized as a 2-D isotropic Gaussian mixture only up to the factor
    /// `sigma_i sqrt(2 pi)`, so each component's mass is `w_i sigma_i sqrt(2 pi)`.
    pub fn exact_moments(&self) -> [f64; 4] {
        let masses: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.sigmas)
            .map(|(w, s)| w * s * math::sqrt(2.0 * core::f64::consts::PI))
            .collect();
        let z: f64 = masses.iter().sum();
        let mut m = [0.0; 4];
        for ((mu, s), mass) in self.means.iter().zip(&self.sigmas).zip(&masses) {
            let p = mass / z;
            m[0] += p * mu[0];
            m[1] += p * mu[1];
            m[2] += p * (mu[0] * mu[0] + s * s);
            m[3] += p * (mu[1] * mu[1] + s * s);
        }
        m
    }

    /// I.i.d. draw from the normalized density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let masses: Vec<f64> = self.weights.iter().zip(&self.sigmas).map(|(w, s)| w * s).collect();
        let z: f64 = masses.iter().sum();
        let mut u: f64 = rng.random::<f64>() * z;
        let mut comp = masses.len() - 1;
        for (i, m) in masses.iter().enumerate() {
            if u < *m {
                comp = i;
                break;
            }
            u -= m;
        }
        let (a, b): (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
        [self.means[comp][0] + self.sigmas[comp] * a, self.means[comp][1] + self.sigmas[comp] * b]
    }
}

impl TargetModel for GaussianMixture2D {
    type State = [f64; 2];

    fn log_density_parts(&self, x: &[f64; 2]) -> LogDensity {
        LogDensity::tempered(self.log_density_at(x))
    }
}

/// Visit counts and frequency errors of one run's target-chain samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStats {
    pub visits: Vec<u64>,
    /// Frequencies over visited samples; zero when nothing was captured.
    pub frequencies: Vec<f64>,
    /// `|f_i - 1/20|`.
    pub errors: Vec<f64>,
}

impl ModeStats {
    pub fn from_samples(model: &GaussianMixture2D, samples: &[[f64; 2]]) -> Self {
        let k = model.components();
        let mut visits = vec![0u64; k];
        for x in samples {
            let (mode, hit) = model.assign_mode(x);
            if hit {
                visits[mode] += 1;
            }
        }
        let total: u64 = visits.iter().sum();
        let frequencies: Vec<f64> =
            visits.iter().map(|&v| if total == 0 { 0.0 } else { v as f64 / total as f64 }).collect();
        let target = 1.0 / k as f64;
        let errors = frequencies.iter().map(|f| (f - target).abs()).collect();
        Self { visits, frequencies, errors }
    }

    pub fn visited_modes(&self) -> usize {
        self.visits.iter().filter(|&&v| v > 0).count()
    }
}

/// Sample moments `(E X1, E X2, E X1^2, E X2^2)`.
pub fn sample_moments(samples: &[[f64; 2]]) -> [f64; 4] {
    let n = samples.len().max(1) as f64;
    let mut m = [0.0; 4];
    for x in samples {
        m[0] += x[0];
        m[1] += x[1];
        m[2] += x[0] * x[0];
        m[3] += x[1] * x[1];
    }
    m.map(|v| v / n)
}

/// Settings of one benchmark run.
#[derive(Debug, Clone)]
pub struct Mixture2dConfig {
    pub algorithm: Algorithm,
    pub variant: Variant,
    pub temperatures: TemperatureLadder,
    pub energy: EnergyLadder,
    pub length: RunLength,
    /// EES ring-construction period.
    pub ring_period: usize,
    pub jump_probability: f64,
    /// `tau_i = step_base * sqrt(T_i)`.
    pub step_base: f64,
    pub watch: Vec<usize>,
}

const EQUAL_LEVELS: [f64; 5] = [0.2, 2.0, 6.3, 20.0, 63.2];
const EES_EQUAL_TEMPS: [f64; 5] = [1.0, 2.8, 7.7, 21.6, 60.0];

fn unequal_levels() -> EnergyLadder {
    let mut levels = vec![0.5];
    let upper = EnergyLadder::build(1.5, 20.0, 5, EnergyScheme::LogLevels).expect("valid levels");
    levels.extend_from_slice(upper.levels());
    EnergyLadder::new(levels).expect("valid levels")
}

impl Mixture2dConfig {
    /// Benchmark defaults for an algorithm and variant.
    pub fn defaults(algorithm: Algorithm, variant: Variant) -> Self {
        let (temperatures, energy) = match (algorithm, variant) {
            (Algorithm::Ees, Variant::Equal) => (
                TemperatureLadder::new(EES_EQUAL_TEMPS.to_vec()).unwrap(),
                EnergyLadder::new(EQUAL_LEVELS.to_vec()).unwrap(),
            ),
            (Algorithm::Ees, Variant::Unequal) => {
                (TemperatureLadder::build(60.0, 6, TemperatureScheme::LogEven).unwrap(), unequal_levels())
            }
            (_, Variant::Equal) => (
                TemperatureLadder::build(60.0, 20, TemperatureScheme::LogEven).unwrap(),
                EnergyLadder::new(EQUAL_LEVELS.to_vec()).unwrap(),
            ),
            (_, Variant::Unequal) => {
                (TemperatureLadder::build(60.0, 20, TemperatureScheme::LogEven).unwrap(), unequal_levels())
            }
        };
        Self {
            algorithm,
            variant,
            temperatures,
            energy,
            length: RunLength::new(2500, 2500),
            ring_period: 500,
            jump_probability: 0.1,
            step_base: 0.25,
            watch: Vec::new(),
        }
    }

    pub fn chains(&self) -> usize {
        self.temperatures.len()
    }
}

/// One finished run.
#[derive(Debug, Clone)]
pub struct MixtureRun {
    pub trace: Trace<[f64; 2]>,
    pub stats: ModeStats,
    pub moments: [f64; 4],
}

/// Initial states uniform on `[0, 1]^2`.
pub fn initial_states(chains: usize, seed: RunSeed) -> Vec<[f64; 2]> {
    let mut rng = seed.setup();
    (0..chains).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

pub fn run_mixture2d(config: &Mixture2dConfig, seed: RunSeed) -> Result<MixtureRun, EngineError> {
    let model = GaussianMixture2D::variant(config.variant);
    let kernels: Vec<RwProposal> = config
        .temperatures
        .as_slice()
        .iter()
        .map(|&t| RwProposal::scaled(config.step_base, t))
        .collect::<Result<_, _>>()?;
    let init = initial_states(config.chains(), seed);
    let trace = match config.algorithm {
        Algorithm::Pt | Algorithm::Pteem => {
            let tc = TemperingConfig {
                temperatures: config.temperatures.clone(),
                energy: config.energy.clone(),
                length: config.length,
                global: if config.algorithm == Algorithm::Pt { GlobalMove::AdjacentSwap } else { GlobalMove::EquiEnergy },
                watch: config.watch.clone(),
            };
            run_tempering(&model, &kernels, &tc, init, seed)?
        }
        Algorithm::Ees => {
            let ec = EesConfig {
                temperatures: config.temperatures.clone(),
                energy: config.energy.clone(),
                jump_probability: config.jump_probability,
                burn_in: config.length.burn_in,
                ring_period: config.ring_period,
                kept: config.length.kept,
                untruncated: Vec::new(),
                watch: config.watch.clone(),
            };
            run_ees(&model, &kernels, &ec, init, seed)?
        }
    };
    let stats = ModeStats::from_samples(&model, &trace.samples);
    let moments = sample_moments(&trace.samples);
    Ok(MixtureRun { trace, stats, moments })
}

/// Statistics pooled over independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSummary {
    pub runs: usize,
    pub visited: Vec<usize>,
    pub mean_visited: f64,
    pub moment_mean: [f64; 4],
    pub moment_sd: [f64; 4],
    /// Per-mode median and maximum of `err_i` across runs.
    pub err_median: Vec<f64>,
    pub err_max: Vec<f64>,
    pub local_acceptance: f64,
    pub global_acceptance: f64,
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var))
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn summarize(runs: &[MixtureRun]) -> MixtureSummary {
    let visited: Vec<usize> = runs.iter().map(|r| r.stats.visited_modes()).collect();
    let mean_visited = visited.iter().sum::<usize>() as f64 / runs.len().max(1) as f64;
    let mut moment_mean = [0.0; 4];
    let mut moment_sd = [0.0; 4];
    for j in 0..4 {
        let col: Vec<f64> = runs.iter().map(|r| r.moments[j]).collect();
        (moment_mean[j], moment_sd[j]) = mean_sd(&col);
    }
    let modes = runs.first().map_or(0, |r| r.stats.errors.len());
    let mut err_median = Vec::with_capacity(modes);
    let mut err_max = Vec::with_capacity(modes);
    for i in 0..modes {
        let mut col: Vec<f64> = runs.iter().map(|r| r.stats.errors[i]).collect();
        err_max.push(col.iter().copied().fold(0.0, f64::max));
        err_median.push(median(&mut col));
    }
    let local: Vec<f64> = runs.iter().map(|r| r.trace.local_acceptance()).collect();
    let global: Vec<f64> = runs.iter().map(|r| r.trace.global_acceptance()).collect();
    MixtureSummary {
        runs: runs.len(),
        visited,
        mean_visited,
        moment_mean,
        moment_sd,
        err_median,
        err_max,
        local_acceptance: mean_sd(&local).0,
        global_acceptance: mean_sd(&global).0,
    }
}

/// Per-mode ratios `(R_med, R_max)` of `numerator` over `denominator`.
pub fn error_ratios(numerator: &MixtureSummary, denominator: &MixtureSummary) -> (Vec<f64>, Vec<f64>) {
    let ratio = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x / y).collect::<Vec<f64>>();
    (
        ratio(&numerator.err_median, &denominator.err_median),
        ratio(&numerator.err_max, &denominator.err_max),
    )
}
