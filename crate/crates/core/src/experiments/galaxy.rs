//! `k`-component Gaussian mixture on the galaxy velocity data, sampled by
//! tempered Gibbs sweeps.
//!
//! Only the likelihood is tempered: chain `i` targets
//! `p(y | x)^(1/T_i) p(x)` with `x = (mu, sigma^-2, w, c, beta)`. Ring
//! energies use the untempered joint `-log[p(y | x) p(x)]` with normalized
//! prior densities and the likelihood taken without its `(2 pi)^(-n/2)`. Label switching is tracked through the permutation that
//! sorts `mu`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::engines::{run_tempering, Algorithm, GlobalMove, RunLength, TemperingConfig, Trace};
use crate::error::{ConfigError, EngineError, ModelError};
use crate::experiments::mixture2d::{mean_sd, median};
use crate::kernels::{Gibbs, GibbsSweep};
use crate::ladders::{EnergyLadder, TemperatureLadder, TemperatureScheme};
use crate::math::{self, lgamma, ln, LN_2PI};
use crate::model::{LogDensity, TargetModel};
use crate::rng::RunSeed;

/// Velocities of 82 galaxies, in units of 1000 km/s, one per line.
pub const GALAXY_DATA: &str = include_str!("../../data/galaxy.txt");

/// Parses one value per line; blank lines and `#` comments are skipped.
pub fn parse_velocities(text: &str) -> Result<Vec<f64>, ModelError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| ModelError::Degenerate(alloc::format!("line {}: '{line}' is not a number", n + 1)))?;
        if !v.is_finite() {
            return Err(ModelError::NonFinite(alloc::format!("line {}: {line}", n + 1)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(ModelError::Degenerate("no observations".into()));
    }
    Ok(out)
}

pub fn galaxy_velocities() -> Vec<f64> {
    parse_velocities(GALAXY_DATA).expect("bundled data parses")
}

/// Fixed prior parameters. `beta` and `h` are rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalaxyHyper {
    pub xi: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub g: f64,
    pub h: f64,
    pub delta: f64,
    pub k: usize,
    pub range: f64,
}

impl GalaxyHyper {
    /// `alpha = 3, xi = 20, delta = 1, kappa = 1/R^2, g = 0.2, h = 10/R^2` with `R = 10`.
    pub fn defaults(k: usize) -> Self {
        Self::with_range(k, 10.0)
    }

    pub fn with_range(k: usize, range: f64) -> Self {
        Self {
            xi: 20.0,
            kappa: 1.0 / (range * range),
            alpha: 3.0,
            g: 0.2,
            h: 10.0 / (range * range),
            delta: 1.0,
            k,
            range,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [("kappa", self.kappa), ("alpha", self.alpha), ("g", self.g), ("h", self.h), ("delta", self.delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid { key, reason: alloc::format!("must be positive, got {v}") });
            }
        }
        if !self.xi.is_finite() {
            return Err(ConfigError::Invalid { key: "xi", reason: "must be finite".into() });
        }
        if self.k == 0 || self.k > 255 {
            return Err(ConfigError::Invalid { key: "k", reason: alloc::format!("component count {} outside 1..=255", self.k) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalaxyState {
    pub mu: Vec<f64>,
    /// Precisions `sigma_j^-2`.
    pub prec: Vec<f64>,
    pub w: Vec<f64>,
    /// 0-based component labels.
    pub c: Vec<u8>,
    pub beta: f64,
}

impl GalaxyState {
    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut m = vec![0; k];
        for &c in &self.c {
            m[c as usize] += 1;
        }
        m
    }

    fn check(&self, k: usize, n: usize) -> Result<(), ModelError> {
        if self.mu.len() != k || self.prec.len() != k || self.w.len() != k || self.c.len() != n {
            return Err(ModelError::Degenerate("state dimensions do not match the model".into()));
        }
        if let Some(p) = self.prec.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
            return Err(ModelError::Degenerate(alloc::format!("precision {p}")));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(ModelError::Degenerate(alloc::format!("rate {}", self.beta)));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(ModelError::NonFinite(String::from("component mean")));
        }
        if self.c.iter().any(|&c| c as usize >= k) {
            return Err(ModelError::Degenerate("label out of range".into()));
        }
        Ok(())
    }

    /// Applies `perm` to the labels: new component `j` is old component `perm[j]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0u8; perm.len()];
        for (j, &p) in perm.iter().enumerate() {
            inverse[p] = j as u8;
        }
        Self {
            mu: perm.iter().map(|&p| self.mu[p]).collect(),
            prec: perm.iter().map(|&p| self.prec[p]).collect(),
            w: perm.iter().map(|&p| self.w[p]).collect(),
            c: self.c.iter().map(|&c| inverse[c as usize]).collect(),
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GalaxyModel {
    data: Vec<f64>,
    hyper: GalaxyHyper,
}

impl GalaxyModel {
    pub fn new(data: Vec<f64>, hyper: GalaxyHyper) -> Result<Self, ConfigError> {
        hyper.validate()?;
        if data.is_empty() || data.iter().any(|y| !y.is_finite()) {
            return Err(ConfigError::Invalid { key: "data", reason: "observations must be finite and non-empty".into() });
        }
        Ok(Self { data, hyper })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn hyper(&self) -> &GalaxyHyper {
        &self.hyper
    }

    pub fn k(&self) -> usize {
        self.hyper.k
    }

    /// `log p(y | mu, sigma^-2, c)` without the constant `-(n/2) log(2 pi)`,
    /// i.e. `sum_p -m_p log sigma_p - sum_l (y_l - mu_{c_l})^2 / (2 sigma_{c_l}^2)`.
    /// The constant cancels in every acceptance ratio and conditional; leaving
    /// it out places target-chain energies on the 180–260 ladder.
    pub fn log_likelihood(&self, x: &GalaxyState) -> f64 {
        let mut ll = 0.0;
        let log_prec: Vec<f64> = x.prec.iter().map(|&p| ln(p)).collect();
        for (&y, &c) in self.data.iter().zip(&x.c) {
            let j = c as usize;
            let d = y - x.mu[j];
            ll += 0.5 * log_prec[j] - 0.5 * x.prec[j] * d * d;
        }
        ll
    }

    /// The omitted `-(n/2) log(2 pi)`.
    pub fn likelihood_constant(&self) -> f64 {
        -0.5 * self.data.len() as f64 * LN_2PI
    }

    /// `log p(mu, sigma^-2, w, c, beta)`, every factor normalized.
    pub fn log_prior(&self, x: &GalaxyState) -> f64 {
        let h = &self.hyper;
        let k = h.k as f64;
        let mut lp = 0.0;
        for j in 0..h.k {
            let d = x.mu[j] - h.xi;
            lp += 0.5 * (ln(h.kappa) - LN_2PI) - 0.5 * h.kappa * d * d;
            lp += h.alpha * ln(x.beta) - lgamma(h.alpha) + (h.alpha - 1.0) * ln(x.prec[j]) - x.beta * x.prec[j];
            lp += (h.delta - 1.0) * ln(x.w[j]);
        }
        lp += lgamma(k * h.delta) - k * lgamma(h.delta);
        lp += h.g * ln(h.h) - lgamma(h.g) + (h.g - 1.0) * ln(x.beta) - h.h * x.beta;
        for &c in &x.c {
            lp += ln(x.w[c as usize]);
        }
        lp
    }

    /// `(1/T) log p(y | x) + log p(x)`.
    pub fn tempered_posterior_log(&self, x: &GalaxyState, temperature: f64) -> Result<f64, ModelError> {
        x.check(self.k(), self.data.len())?;
        Ok(self.log_likelihood(x) / temperature + self.log_prior(x))
    }

    pub fn sample_means<R: Rng + ?Sized>(&self, x: &mut GalaxyState, t: f64, rng: &mut R) {
        let h = &self.hyper;
        let k = h.k;
        let mut m = vec![0usize; k];
        let mut sum = vec![0.0; k];
        for (&y, &c) in self.data.iter().zip(&x.c) {
            m[c as usize] += 1;
            sum[c as usize] += y;
        }
        for p in 0..k {
            let precision = m[p] as f64 * x.prec[p] / t + h.kappa;
            let mean = (x.prec[p] / t * sum[p] + h.xi * h.kappa) / precision;
            let z: f64 = rng.sample(StandardNormal);
            x.mu[p] = mean + z / math::sqrt(precision);
        }
    }

    pub fn sample_precisions<R: Rng + ?Sized>(&self, x: &mut GalaxyState, t: f64, rng: &mut R) {
        let h = &self.hyper;
        let mut m = vec![0usize; h.k];
        let mut ss = vec![0.0; h.k];
        for (&y, &c) in self.data.iter().zip(&x.c) {
            let j = c as usize;
            m[j] += 1;
            ss[j] += (y - x.mu[j]) * (y - x.mu[j]);
        }
        for p in 0..h.k {
            let shape = h.alpha + m[p] as f64 / (2.0 * t);
            let rate = x.beta + ss[p] / (2.0 * t);
            x.prec[p] = gamma_draw(shape, rate, rng);
        }
    }

    pub fn sample_weights<R: Rng + ?Sized>(&self, x: &mut GalaxyState, rng: &mut R) {
        let m = x.counts(self.k());
        let mut total = 0.0;
        for (w, &mj) in x.w.iter_mut().zip(&m) {
            *w = gamma_draw(self.hyper.delta + mj as f64, 1.0, rng);
            total += *w;
        }
        for w in &mut x.w {
            *w /= total;
        }
    }

    /// Log of the unnormalized label probabilities of observation `y`.
    pub fn label_log_weights(&self, x: &GalaxyState, y: f64, t: f64, out: &mut [f64]) {
        for (p, o) in out.iter_mut().enumerate() {
            let d = y - x.mu[p];
            *o = 0.5 * ln(x.prec[p]) / t - 0.5 * x.prec[p] * d * d / t + ln(x.w[p]);
        }
    }

    pub fn sample_labels<R: Rng + ?Sized>(&self, x: &mut GalaxyState, t: f64, rng: &mut R) {
        let k = self.k();
        let mut lw = vec![0.0; k];
        for l in 0..self.data.len() {
            self.label_log_weights(x, self.data[l], t, &mut lw);
            x.c[l] = categorical_log(&mut lw, rng) as u8;
        }
    }

    pub fn sample_rate<R: Rng + ?Sized>(&self, x: &mut GalaxyState, rng: &mut R) {
        let h = &self.hyper;
        let shape = h.g + h.k as f64 * h.alpha;
        let rate = h.h + x.prec.iter().sum::<f64>();
        x.beta = gamma_draw(shape, rate, rng);
    }
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters").sample(rng)
}

/// Draws an index from unnormalized log weights (overwritten).
fn categorical_log<R: Rng + ?Sized>(lw: &mut [f64], rng: &mut R) -> usize {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in lw.iter_mut() {
        *v = math::exp(*v - max);
        total += *v;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &v) in lw.iter().enumerate() {
        if u < v {
            return i;
        }
        u -= v;
    }
    lw.len() - 1
}

impl TargetModel for GalaxyModel {
    type State = GalaxyState;

    fn log_density_parts(&self, x: &GalaxyState) -> LogDensity {
        if x.check(self.k(), self.data.len()).is_err() {
            return LogDensity { tempered: f64::NAN, fixed: 0.0 };
        }
        LogDensity { tempered: self.log_likelihood(x), fixed: self.log_prior(x) }
    }
}

/// One Gibbs sweep in the order `mu, sigma^-2, w, c, beta`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GalaxyGibbs;

impl GibbsSweep<GalaxyModel> for GalaxyGibbs {
    fn sweep<R: Rng + ?Sized>(&self, model: &GalaxyModel, t: f64, x: &mut GalaxyState, rng: &mut R) {
        model.sample_means(x, t, rng);
        model.sample_precisions(x, t, rng);
        model.sample_weights(x, rng);
        model.sample_labels(x, t, rng);
        model.sample_rate(x, rng);
    }
}

/// `min{1, (p(y|x_i) / p(y|x_j))^(1/T_j - 1/T_i)}`.
pub fn galaxy_ee_acceptance(model: &GalaxyModel, xi: &GalaxyState, xj: &GalaxyState, ti: f64, tj: f64) -> f64 {
    if ti == tj {
        return 1.0;
    }
    let log_ratio = (1.0 / tj - 1.0 / ti) * (model.log_likelihood(xi) - model.log_likelihood(xj));
    math::acceptance(log_ratio)
}

pub fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// 1-based lexicographic rank of a permutation of `0..k`.
pub fn permutation_rank(perm: &[usize]) -> usize {
    let k = perm.len();
    let mut rank = 0;
    for i in 0..k {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        rank += smaller * factorial(k - 1 - i);
    }
    rank + 1
}

/// The permutation sorting `mu` ascending (ties by index) and its rank.
pub fn label_mode_of(mu: &[f64]) -> usize {
    let mut perm: Vec<usize> = (0..mu.len()).collect();
    perm.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]).then(a.cmp(&b)));
    permutation_rank(&perm)
}

#[derive(Debug, Clone)]
pub struct GalaxyConfig {
    pub algorithm: Algorithm,
    pub temperatures: TemperatureLadder,
    pub energy: EnergyLadder,
    pub length: RunLength,
    pub hyper: GalaxyHyper,
    pub watch: Vec<usize>,
}

pub const GALAXY_LEVELS: [f64; 5] = [180.0, 197.3, 216.3, 237.2, 260.0];

impl GalaxyConfig {
    /// 20 chains with inverse-even temperatures in `[1, 4]`, the five
    /// benchmark levels, 2000 burn-in and 10000 kept iterations, `k = 6`.
    pub fn defaults(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            temperatures: TemperatureLadder::build(4.0, 20, TemperatureScheme::InverseEven).unwrap(),
            energy: EnergyLadder::new(GALAXY_LEVELS.to_vec()).unwrap(),
            length: RunLength::new(2000, 10_000),
            hyper: GalaxyHyper::defaults(6),
            watch: Vec::new(),
        }
    }

    pub fn chains(&self) -> usize {
        self.temperatures.len()
    }
}

/// Starting state: means at data points drawn at random, unit precisions,
/// equal weights, nearest-mean labels and `beta = 1`.
pub fn initial_state<R: Rng + ?Sized>(model: &GalaxyModel, rng: &mut R) -> GalaxyState {
    let k = model.k();
    let data = model.data();
    let mu: Vec<f64> = (0..k).map(|_| data[rng.random_range(0..data.len())]).collect();
    let c = data
        .iter()
        .map(|&y| {
            let mut best = 0;
            for j in 1..k {
                if (y - mu[j]).abs() < (y - mu[best]).abs() {
                    best = j;
                }
            }
            best as u8
        })
        .collect();
    GalaxyState { mu, prec: vec![1.0; k], w: vec![1.0 / k as f64; k], c, beta: 1.0 }
}

#[derive(Debug, Clone)]
pub struct GalaxyRun {
    pub trace: Trace<GalaxyState>,
    /// Label mode (1-based rank) of every kept target-chain state.
    pub modes: Vec<u32>,
    pub mode_counts: Vec<u32>,
}

impl GalaxyRun {
    pub fn visited_modes(&self) -> usize {
        self.mode_counts.iter().filter(|&&c| c > 0).count()
    }

    /// `|f_i - 1/k!|` for every mode.
    pub fn frequency_errors(&self) -> Vec<f64> {
        let n = self.modes.len().max(1) as f64;
        let target = 1.0 / self.mode_counts.len() as f64;
        self.mode_counts.iter().map(|&c| (c as f64 / n - target).abs()).collect()
    }
}

pub fn run_galaxy(model: &GalaxyModel, config: &GalaxyConfig, seed: RunSeed) -> Result<GalaxyRun, EngineError> {
    let global = match config.algorithm {
        Algorithm::Pt => GlobalMove::AdjacentSwap,
        Algorithm::Pteem => GlobalMove::EquiEnergy,
        Algorithm::Ees => {
            return Err(ConfigError::Invalid {
                key: "algorithm",
                reason: "EES needs truncated targets, which the Gibbs sweeps cannot sample; use pt or pteem".into(),
            }
            .into())
        }
    };
    if model.k() > 8 {
        return Err(ConfigError::Invalid { key: "k", reason: "label-mode counting supports k <= 8".into() }.into());
    }
    let mut setup = seed.setup();
    let init: Vec<GalaxyState> = (0..config.chains()).map(|_| initial_state(model, &mut setup)).collect();
    let kernels = vec![Gibbs(GalaxyGibbs); config.chains()];
    let tc = TemperingConfig {
        temperatures: config.temperatures.clone(),
        energy: config.energy.clone(),
        length: config.length,
        global,
        watch: config.watch.clone(),
    };
    let trace = run_tempering(model, &kernels, &tc, init, seed)?;
    let mut mode_counts = vec![0u32; factorial(model.k())];
    let modes: Vec<u32> = trace
        .samples
        .iter()
        .map(|x| {
            let r = label_mode_of(&x.mu);
            mode_counts[r - 1] += 1;
            r as u32
        })
        .collect();
    Ok(GalaxyRun { trace, modes, mode_counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalaxySummary {
    pub runs: usize,
    pub visited: Vec<usize>,
    pub mean_visited: f64,
    pub sd_visited: f64,
    pub min_visited: usize,
    pub max_visited: usize,
    /// Mean and median of `err_i` pooled over runs and modes.
    pub err_mean: f64,
    pub err_median: f64,
    pub local_acceptance: f64,
    pub global_acceptance: f64,
}

pub fn summarize(runs: &[GalaxyRun]) -> GalaxySummary {
    let visited: Vec<usize> = runs.iter().map(GalaxyRun::visited_modes).collect();
    let vf: Vec<f64> = visited.iter().map(|&v| v as f64).collect();
    let (mean_visited, sd_visited) = mean_sd(&vf);
    let mut errors: Vec<f64> = runs.iter().flat_map(|r| r.frequency_errors()).collect();
    let err_mean = mean_sd(&errors).0;
    let err_median = median(&mut errors);
    let local: Vec<f64> = runs.iter().map(|r| r.trace.local_acceptance()).collect();
    let global: Vec<f64> = runs.iter().map(|r| r.trace.global_acceptance()).collect();
    GalaxySummary {
        runs: runs.len(),
        mean_visited,
        sd_visited,
        min_visited: visited.iter().copied().min().unwrap_or(0),
        max_visited: visited.iter().copied().max().unwrap_or(0),
        visited,
        err_mean,
        err_median,
        local_acceptance: mean_sd(&local).0,
        global_acceptance: mean_sd(&global).0,
    }
}
