//! Motif (transcription-factor binding site) discovery with a collapsed
//! posterior over site allocations.
//!
//! The `M` sequences are handled as one long sequence of `L* = sum(L_m - w + 1)`
//! possible start positions. Sites never cross sequence boundaries and are
//! not allowed to overlap. The background is an order-1 Markov chain whose
//! stationary law starts every sequence; the motif is a product multinomial
//! that the collapsed posterior integrates out together with the site
//! abundance.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::engines::{
    run_ees, run_tempering, Algorithm, EesConfig, GlobalMove, RunLength, TemperingConfig, Trace,
};
use crate::error::{ConfigError, EngineError, ModelError};
use crate::kernels::{GibbsSweep, LocalKernel};
use crate::ladders::{EnergyLadder, EnergyScheme, TemperatureLadder, TemperatureScheme};
use crate::math::{self, exp, lgamma, ln, log1p};
use crate::model::{LogDensity, TargetModel, TemperedDensity};
use crate::rng::RunSeed;

pub const NUCLEOTIDES: [u8; 4] = *b"ACGT";

/// Maps `A, C, G, T` (either case) to `0..4`.
pub fn nucleotide_code(b: u8) -> Option<u8> {
    match b {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

/// Order-1 Markov background.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    transition: [[f64; 4]; 4],
    initial: [f64; 4],
}

impl Background {
    /// `initial` is the stationary law of `transition`.
    pub fn new(transition: [[f64; 4]; 4]) -> Result<Self, ConfigError> {
        for row in &transition {
            if row.iter().any(|&p| !(p > 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(ConfigError::Invalid {
                    key: "background",
                    reason: "transition rows must be positive and sum to 1".into(),
                });
            }
        }
        let mut pi = [0.25; 4];
        for _ in 0..10_000 {
            let mut next = [0.0; 4];
            for (i, &p) in pi.iter().enumerate() {
                for j in 0..4 {
                    next[j] += p * transition[i][j];
                }
            }
            let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if delta < 1e-15 {
                break;
            }
        }
        Ok(Self { transition, initial: pi })
    }

    /// `1 - 3 alpha` on the diagonal, `alpha` elsewhere.
    pub fn symmetric(alpha: f64) -> Result<Self, ConfigError> {
        let mut t = [[alpha; 4]; 4];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = 1.0 - 3.0 * alpha;
        }
        Self::new(t)
    }

    pub fn transition(&self) -> &[[f64; 4]; 4] {
        &self.transition
    }

    pub fn initial(&self) -> &[f64; 4] {
        &self.initial
    }

    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<u8> {
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let p = if i == 0 { &self.initial } else { &self.transition[out[i - 1] as usize] };
            out.push(draw4(p, rng));
        }
        out
    }
}

fn draw4<R: Rng + ?Sized>(p: &[f64; 4], rng: &mut R) -> u8 {
    let mut u: f64 = rng.random();
    for (j, &pj) in p.iter().enumerate() {
        if u < pj {
            return j as u8;
        }
        u -= pj;
    }
    // rounding: last category with positive mass
    (0..4).rev().find(|&j| p[j] > 0.0).unwrap_or(3) as u8
}

/// Product-multinomial motif: one probability 4-vector per position.
#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    columns: Vec<[f64; 4]>,
}

impl Motif {
    pub fn new(columns: Vec<[f64; 4]>) -> Result<Self, ConfigError> {
        if columns.is_empty() {
            return Err(ConfigError::Invalid { key: "motif", reason: "width must be positive".into() });
        }
        for (k, c) in columns.iter().enumerate() {
            if c.iter().any(|&p| !(p >= 0.0)) || (c.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(ConfigError::Invalid {
                    key: "motif",
                    reason: alloc::format!("column {} is not a probability vector", k + 1),
                });
            }
        }
        Ok(Self { columns })
    }

    /// The 12-position benchmark motif, columns over `A, C, G, T`.
    pub fn benchmark() -> Self {
        Self::new(vec![
            [0.6, 0.0, 0.0, 0.4],
            [0.1, 0.0, 0.2, 0.7],
            [0.0, 0.8, 0.0, 0.2],
            [0.6, 0.0, 0.1, 0.3],
            [0.1, 0.0, 0.8, 0.1],
            [0.0, 0.0, 0.7, 0.3],
            [0.3, 0.0, 0.0, 0.7],
            [0.0, 0.0, 0.9, 0.1],
            [0.2, 0.2, 0.0, 0.6],
            [0.0, 0.5, 0.0, 0.5],
            [0.5, 0.25, 0.25, 0.0],
            [0.0, 0.7, 0.2, 0.1],
        ])
        .expect("benchmark motif is valid")
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[[f64; 4]] {
        &self.columns
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        self.columns.iter().map(|c| draw4(c, rng)).collect()
    }
}

/// Nucleotide-coded sequences with a motif width.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub names: Vec<alloc::string::String>,
    pub sequences: Vec<Vec<u8>>,
    pub width: usize,
}

impl SequenceSet {
    pub fn new(names: Vec<alloc::string::String>, sequences: Vec<Vec<u8>>, width: usize) -> Result<Self, ConfigError> {
        if width == 0 {
            return Err(ConfigError::Invalid { key: "width", reason: "must be positive".into() });
        }
        if sequences.is_empty() || names.len() != sequences.len() {
            return Err(ConfigError::Invalid { key: "sequences", reason: "need one name per sequence and at least one".into() });
        }
        for (name, s) in names.iter().zip(&sequences) {
            if s.len() < width {
                return Err(ConfigError::Invalid {
                    key: "sequences",
                    reason: alloc::format!("sequence '{name}' is shorter than the motif width {width}"),
                });
            }
            if s.iter().any(|&b| b > 3) {
                return Err(ConfigError::Invalid { key: "sequences", reason: alloc::format!("sequence '{name}' is not nucleotide-coded") });
            }
        }
        Ok(Self { names, sequences, width })
    }

    /// `L*_m = L_m - (w - 1)`.
    pub fn starts_in(&self, m: usize) -> usize {
        self.sequences[m].len() + 1 - self.width
    }

    pub fn total_starts(&self) -> usize {
        (0..self.sequences.len()).map(|m| self.starts_in(m)).sum()
    }
}

/// Site allocation over the `L*` start positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    pub active: Vec<bool>,
}

impl Allocation {
    pub fn empty(len: usize) -> Self {
        Self { active: vec![false; len] }
    }

    pub fn from_positions(len: usize, positions: &[usize]) -> Self {
        let mut a = Self::empty(len);
        for &p in positions {
            a.active[p] = true;
        }
        a
    }

    pub fn size(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect()
    }
}

/// Dirichlet pseudocounts `beta_k` per motif position and Beta `(a, b)`
/// for the site abundance.
#[derive(Debug, Clone, PartialEq)]
pub struct TfbsPriors {
    pub beta: Vec<[f64; 4]>,
    pub a: f64,
    pub b: f64,
}

impl TfbsPriors {
    /// Uniform Dirichlet and `Be(1, 99)` (1% prior site abundance).
    pub fn defaults(width: usize) -> Self {
        Self { beta: vec![[1.0; 4]; width], a: 1.0, b: 99.0 }
    }

    pub fn validate(&self, width: usize) -> Result<(), ConfigError> {
        if self.beta.len() != width {
            return Err(ConfigError::Invalid {
                key: "beta",
                reason: alloc::format!("{} pseudocount vectors for width {width}", self.beta.len()),
            });
        }
        if self.beta.iter().flatten().any(|&v| !(v > 0.0 && v.is_finite())) || !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(ConfigError::Invalid { key: "priors", reason: "pseudocounts and (a, b) must be positive".into() });
        }
        Ok(())
    }
}

/// Nucleotide counts of the aligned sites, one 4-vector per motif position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    pub counts: Vec<[u32; 4]>,
    pub sites: usize,
}

impl CountMatrix {
    fn zero(width: usize) -> Self {
        Self { counts: vec![[0; 4]; width], sites: 0 }
    }
}

/// Collapsed posterior over allocations for fixed sequences and background.
#[derive(Debug, Clone)]
pub struct TfbsModel {
    sequences: SequenceSet,
    background: Background,
    priors: TfbsPriors,
    width: usize,
    lstar: usize,
    /// Concatenated bases.
    bases: Vec<u8>,
    /// Per start position: index of its first base in `bases`.
    first_base: Vec<u32>,
    /// Per start position: sequence index.
    sequence_of: Vec<u32>,
    /// Per start position: log-probability of its w-mer under the
    /// background, entry transition included.
    background_log: Vec<f64>,
    beta_totals: Vec<f64>,
}

impl TfbsModel {
    pub fn new(sequences: SequenceSet, background: Background, priors: TfbsPriors) -> Result<Self, ConfigError> {
        let width = sequences.width;
        priors.validate(width)?;
        let mut bases = Vec::new();
        let mut first_base = Vec::new();
        let mut sequence_of = Vec::new();
        let mut background_log = Vec::new();
        for (m, s) in sequences.sequences.iter().enumerate() {
            let offset = bases.len();
            for start in 0..sequences.starts_in(m) {
                first_base.push((offset + start) as u32);
                sequence_of.push(m as u32);
                let mut lp = if start == 0 {
                    ln(background.initial[s[0] as usize])
                } else {
                    ln(background.transition[s[start - 1] as usize][s[start] as usize])
                };
                for k in 1..width {
                    lp += ln(background.transition[s[start + k - 1] as usize][s[start + k] as usize]);
                }
                background_log.push(lp);
            }
            bases.extend_from_slice(s);
        }
        let lstar = first_base.len();
        let beta_totals = priors.beta.iter().map(|b| b.iter().sum()).collect();
        Ok(Self { sequences, background, priors, width, lstar, bases, first_base, sequence_of, background_log, beta_totals })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn lstar(&self) -> usize {
        self.lstar
    }

    pub fn sequences(&self) -> &SequenceSet {
        &self.sequences
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn priors(&self) -> &TfbsPriors {
        &self.priors
    }

    pub fn background_log(&self, i: usize) -> f64 {
        self.background_log[i]
    }

    /// `(sequence, offset)` of start position `i`.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        let m = self.sequence_of[i] as usize;
        let seq_start = self.first_base[i] as usize - self.offset_in_bases(i);
        (m, self.first_base[i] as usize - seq_start)
    }

    fn offset_in_bases(&self, i: usize) -> usize {
        // start positions of one sequence are consecutive; walk back to its first
        let m = self.sequence_of[i];
        let mut j = i;
        while j > 0 && self.sequence_of[j - 1] == m {
            j -= 1;
        }
        i - j
    }

    /// Long-sequence index of `(sequence, offset)`.
    pub fn position_of(&self, sequence: usize, offset: usize) -> Option<usize> {
        if sequence >= self.sequences.sequences.len() || offset >= self.sequences.starts_in(sequence) {
            return None;
        }
        Some((0..sequence).map(|m| self.sequences.starts_in(m)).sum::<usize>() + offset)
    }

    /// The `w` bases of the site starting at `i`.
    pub fn site(&self, i: usize) -> &[u8] {
        let f = self.first_base[i] as usize;
        &self.bases[f..f + self.width]
    }

    /// Whether activating `i` would overlap an active site other than `i`.
    pub fn conflicts(&self, i: usize, a: &Allocation) -> bool {
        let m = self.sequence_of[i];
        let lo = i.saturating_sub(self.width - 1);
        let hi = (i + self.width).min(self.lstar);
        (lo..hi).any(|j| j != i && a.active[j] && self.sequence_of[j] == m)
    }

    pub fn has_overlap(&self, a: &Allocation) -> bool {
        let mut last: Option<usize> = None;
        for i in 0..self.lstar {
            if a.active[i] {
                if let Some(p) = last {
                    if self.sequence_of[p] == self.sequence_of[i] && i - p < self.width {
                        return true;
                    }
                }
                last = Some(i);
            }
        }
        false
    }

    pub fn count_matrix(&self, a: &Allocation) -> CountMatrix {
        let mut c = CountMatrix::zero(self.width);
        for i in 0..self.lstar {
            if a.active[i] {
                self.add_site(&mut c, i);
            }
        }
        c
    }

    fn add_site(&self, c: &mut CountMatrix, i: usize) {
        let f = self.first_base[i] as usize;
        for k in 0..self.width {
            c.counts[k][self.bases[f + k] as usize] += 1;
        }
        c.sites += 1;
    }

    fn remove_site(&self, c: &mut CountMatrix, i: usize) {
        let f = self.first_base[i] as usize;
        for k in 0..self.width {
            c.counts[k][self.bases[f + k] as usize] -= 1;
        }
        c.sites -= 1;
    }

    /// Log of the unnormalized collapsed posterior:
    /// `-sum_{active} log pi(site | theta0) + log B(|A| + a, L* - |A| + b)
    ///  + sum_k [sum_j lnG(C_kj + beta_kj) - lnG(|A| + |beta_k|)]`.
    pub fn collapsed_log_posterior(&self, a: &Allocation) -> Result<f64, ModelError> {
        if a.active.len() != self.lstar {
            return Err(ModelError::Degenerate(alloc::format!(
                "allocation of length {} for {} start positions",
                a.active.len(),
                self.lstar
            )));
        }
        let mut last: Option<usize> = None;
        for i in a.positions() {
            if let Some(p) = last {
                if self.sequence_of[p] == self.sequence_of[i] && i - p < self.width {
                    return Err(ModelError::Overlap(p, i));
                }
            }
            last = Some(i);
        }
        let c = self.count_matrix(a);
        let bg: f64 = a.positions().iter().map(|&i| self.background_log[i]).sum();
        Ok(-bg + self.counts_log_term(&c))
    }

    fn counts_log_term(&self, c: &CountMatrix) -> f64 {
        let n = c.sites as f64;
        let (pa, pb) = (self.priors.a, self.priors.b);
        let ls = self.lstar as f64;
        let mut lp = lgamma(n + pa) + lgamma(ls - n + pb) - lgamma(ls + pa + pb);
        for k in 0..self.width {
            for j in 0..4 {
                lp += lgamma(c.counts[k][j] as f64 + self.priors.beta[k][j]);
            }
            lp -= lgamma(n + self.beta_totals[k]);
        }
        lp
    }

    /// Log of the untempered odds `p(a_i = 1 | A_[-i]) / p(a_i = 0 | A_[-i])`,
    /// where `without` is the count matrix of `A_[-i]`.
    pub fn log_odds(&self, i: usize, without: &CountMatrix) -> f64 {
        let n = without.sites as f64;
        let mut lo = -self.background_log[i] + ln(n + self.priors.a) - ln(self.lstar as f64 - n - 1.0 + self.priors.b);
        let f = self.first_base[i] as usize;
        for k in 0..self.width {
            let j = self.bases[f + k] as usize;
            lo += ln(without.counts[k][j] as f64 + self.priors.beta[k][j]) - ln(n + self.beta_totals[k]);
        }
        lo
    }

    /// Odds of `a_i = 1` vs `a_i = 0` given the rest of `a`, raised to `1/T`.
    pub fn predictive_update_odds(&self, i: usize, a: &Allocation, temperature: f64) -> f64 {
        let mut c = self.count_matrix(a);
        if a.active[i] {
            self.remove_site(&mut c, i);
        }
        exp(self.log_odds(i, &c) / temperature)
    }
}

impl TargetModel for TfbsModel {
    type State = Allocation;

    fn log_density_parts(&self, a: &Allocation) -> LogDensity {
        match self.collapsed_log_posterior(a) {
            Ok(v) => LogDensity::tempered(v),
            Err(ModelError::Overlap(..)) => LogDensity::OFF_SUPPORT,
            Err(_) => LogDensity { tempered: f64::NAN, fixed: 0.0 },
        }
    }
}

/// `P(1)` from log odds, `1 / (1 + exp(-x))`.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `log(logistic(x))`.
fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -log1p(exp(-x))
    } else {
        x - log1p(exp(x))
    }
}

/// Tempered predictive-update Gibbs sweep over positions in ascending order.
/// Activations that would overlap an active site are set to 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfbsGibbs;

impl TfbsGibbs {
    pub fn sweep_with_counts<R: Rng + ?Sized>(
        model: &TfbsModel,
        t: f64,
        a: &mut Allocation,
        counts: &mut CountMatrix,
        rng: &mut R,
    ) {
        let mut cache = OddsCache::new(model, counts);
        for i in 0..model.lstar {
            if a.active[i] {
                model.remove_site(counts, i);
                cache.refresh(model, counts, i);
                a.active[i] = false;
            }
            let u: f64 = rng.random();
            if model.conflicts(i, a) {
                continue;
            }
            if u < logistic(cache.log_odds(model, i) / t) {
                a.active[i] = true;
                model.add_site(counts, i);
                cache.refresh(model, counts, i);
            }
        }
    }
}

/// Logs of the count-dependent factors of the predictive odds, updated
/// when a site is added or removed.
struct OddsCache {
    log_num: Vec<[f64; 4]>,
    /// `ln(n + a) - ln(L* - n - 1 + b) - sum_k ln(n + |beta_k|)`.
    shared: f64,
}

impl OddsCache {
    fn new(model: &TfbsModel, counts: &CountMatrix) -> Self {
        let log_num = (0..model.width)
            .map(|k| {
                let mut row = [0.0; 4];
                for (j, r) in row.iter_mut().enumerate() {
                    *r = ln(counts.counts[k][j] as f64 + model.priors.beta[k][j]);
                }
                row
            })
            .collect();
        Self { log_num, shared: Self::shared(model, counts.sites) }
    }

    fn shared(model: &TfbsModel, sites: usize) -> f64 {
        let n = sites as f64;
        let mut v = ln(n + model.priors.a) - ln(model.lstar as f64 - n - 1.0 + model.priors.b);
        for bt in &model.beta_totals {
            v -= ln(n + bt);
        }
        v
    }

    /// Recomputes the entries touched by the site starting at `i`.
    fn refresh(&mut self, model: &TfbsModel, counts: &CountMatrix, i: usize) {
        let f = model.first_base[i] as usize;
        for k in 0..model.width {
            let j = model.bases[f + k] as usize;
            self.log_num[k][j] = ln(counts.counts[k][j] as f64 + model.priors.beta[k][j]);
        }
        self.shared = Self::shared(model, counts.sites);
    }

    fn log_odds(&self, model: &TfbsModel, i: usize) -> f64 {
        let f = model.first_base[i] as usize;
        let mut lo = self.shared - model.background_log[i];
        for (k, row) in self.log_num.iter().enumerate() {
            lo += row[model.bases[f + k] as usize];
        }
        lo
    }
}

impl GibbsSweep<TfbsModel> for TfbsGibbs {
    fn sweep<R: Rng + ?Sized>(&self, model: &TfbsModel, t: f64, a: &mut Allocation, rng: &mut R) {
        let mut counts = model.count_matrix(a);
        Self::sweep_with_counts(model, t, a, &mut counts, rng);
    }
}

/// Metropolis–Hastings move for a (truncated) tempered chain: estimate the
/// motif by frequency counting with pseudocounts, score every position
/// against the background, and propose a whole new allocation by independent
/// Bernoulli draws from the tempered scores, left to right, with positions
/// that would overlap an already proposed site forced to 0. The proposal
/// depends on the current state through the estimate, so the acceptance
/// ratio carries both proposal densities.
#[derive(Debug, Clone, Copy, Default)]
pub struct MotifRefit;

impl MotifRefit {
    /// Per-position log odds of the proposal built from `a`.
    pub fn proposal_log_odds(model: &TfbsModel, counts: &CountMatrix, t: f64) -> Vec<f64> {
        let n = counts.sites as f64;
        let (pa, pb) = (model.priors.a, model.priors.b);
        let abundance = (n + pa) / (model.lstar as f64 + pa + pb);
        let prior = ln(abundance) - ln(1.0 - abundance);
        let log_theta: Vec<[f64; 4]> = (0..model.width)
            .map(|k| {
                let mut row = [0.0; 4];
                for (j, r) in row.iter_mut().enumerate() {
                    *r = ln((counts.counts[k][j] as f64 + model.priors.beta[k][j]) / (n + model.beta_totals[k]));
                }
                row
            })
            .collect();
        (0..model.lstar)
            .map(|i| {
                let f = model.first_base[i] as usize;
                let mut s = prior - model.background_log[i];
                for (k, row) in log_theta.iter().enumerate() {
                    s += row[model.bases[f + k] as usize];
                }
                s / t
            })
            .collect()
    }

    /// Whether an active site before `i` overlaps a site starting at `i`.
    fn forced_off(model: &TfbsModel, i: usize, a: &Allocation) -> bool {
        let m = model.sequence_of[i];
        (i.saturating_sub(model.width - 1)..i).any(|j| a.active[j] && model.sequence_of[j] == m)
    }

    fn propose<R: Rng + ?Sized>(model: &TfbsModel, odds: &[f64], rng: &mut R) -> Allocation {
        let mut a = Allocation::empty(model.lstar);
        for (i, &o) in odds.iter().enumerate() {
            let u: f64 = rng.random();
            if !Self::forced_off(model, i, &a) && u < logistic(o) {
                a.active[i] = true;
            }
        }
        a
    }

    /// Log-probability that `propose` with `odds` returns `a`
    /// (`a` must be overlap-free).
    pub fn log_proposal(model: &TfbsModel, odds: &[f64], a: &Allocation) -> f64 {
        (0..model.lstar)
            .filter(|&i| a.active[i] || !Self::forced_off(model, i, a))
            .map(|i| if a.active[i] { log_logistic(odds[i]) } else { log_logistic(-odds[i]) })
            .sum()
    }
}

impl LocalKernel<TfbsModel> for MotifRefit {
    fn step<R: Rng + ?Sized>(
        &self,
        model: &TfbsModel,
        target: &TemperedDensity,
        a: &mut Allocation,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool {
        let t = target.temperature();
        let forward = Self::proposal_log_odds(model, &model.count_matrix(a), t);
        let proposal = Self::propose(model, &forward, rng);
        let u: f64 = rng.random();
        let new_density = model.log_density_parts(&proposal);
        let backward = Self::proposal_log_odds(model, &model.count_matrix(&proposal), t);
        let log_ratio = target.log_density(&new_density) - target.log_density(density)
            + Self::log_proposal(model, &backward, a)
            - Self::log_proposal(model, &forward, &proposal);
        if u < math::acceptance(log_ratio) {
            *a = proposal;
            *density = new_density;
            true
        } else {
            false
        }
    }
}

/// Local kernel per chain: Gibbs for untruncated chains, the refitting MH
/// move for truncated EES chains.
#[derive(Debug, Clone, Copy)]
pub enum TfbsKernel {
    Gibbs,
    Refit,
}

impl LocalKernel<TfbsModel> for TfbsKernel {
    fn step<R: Rng + ?Sized>(
        &self,
        model: &TfbsModel,
        target: &TemperedDensity,
        a: &mut Allocation,
        density: &mut LogDensity,
        rng: &mut R,
    ) -> bool {
        match self {
            TfbsKernel::Gibbs => {
                debug_assert!(target.truncation().is_none());
                TfbsGibbs.sweep(model, target.temperature(), a, rng);
                *density = model.log_density_parts(a);
                true
            }
            TfbsKernel::Refit => MotifRefit.step(model, target, a, density, rng),
        }
    }
}

/// Equi-energy acceptance between chains at `t1` and `t2` from the expanded
/// ratio of background, Beta and Dirichlet terms.
pub fn tfbs_ee_acceptance(model: &TfbsModel, a1: &Allocation, a2: &Allocation, t1: f64, t2: f64) -> f64 {
    if t1 == t2 {
        return 1.0;
    }
    let (c1, c2) = (model.count_matrix(a1), model.count_matrix(a2));
    let (n1, n2) = (c1.sites as f64, c2.sites as f64);
    let (pa, pb, ls) = (model.priors.a, model.priors.b, model.lstar as f64);
    let bg = |a: &Allocation| a.positions().iter().map(|&i| model.background_log[i]).sum::<f64>();
    let log_beta = |x: f64, y: f64| lgamma(x) + lgamma(y) - lgamma(x + y);
    let mut log_ratio = bg(a1) - bg(a2) + log_beta(n2 + pa, ls - n2 + pb) - log_beta(n1 + pa, ls - n1 + pb);
    for k in 0..model.width {
        for j in 0..4 {
            let beta = model.priors.beta[k][j];
            log_ratio += lgamma(c2.counts[k][j] as f64 + beta) - lgamma(c1.counts[k][j] as f64 + beta);
        }
        log_ratio += lgamma(n1 + model.beta_totals[k]) - lgamma(n2 + model.beta_totals[k]);
    }
    math::acceptance((1.0 / t1 - 1.0 / t2) * log_ratio)
}

/// A planted site: sequence index and offset of its first base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedSite {
    pub sequence: usize,
    pub offset: usize,
}

/// `m` background sequences of length `bg_len`, each with `sites` motif
/// occurrences inserted at uniformly drawn, non-overlapping places.
pub fn generate_dataset<R: Rng + ?Sized>(
    background: &Background,
    motif: &Motif,
    m: usize,
    bg_len: usize,
    sites: usize,
    rng: &mut R,
) -> Result<(SequenceSet, Vec<PlantedSite>), ConfigError> {
    if m == 0 {
        return Err(ConfigError::Invalid { key: "sequences", reason: "need at least one sequence".into() });
    }
    let w = motif.width();
    if bg_len + sites * w < w {
        return Err(ConfigError::Invalid { key: "sites", reason: "sequences too short to hold a site".into() });
    }
    let mut names = Vec::with_capacity(m);
    let mut seqs = Vec::with_capacity(m);
    let mut truth = Vec::new();
    for s in 0..m {
        let bg = background.sample(bg_len, rng);
        // insertion points in the background, with repetition: sorted cut
        // points give non-overlapping sites in the final sequence
        let mut cuts: Vec<usize> = (0..sites).map(|_| rng.random_range(0..=bg_len)).collect();
        cuts.sort_unstable();
        let mut seq = Vec::with_capacity(bg_len + sites * w);
        let mut prev = 0;
        for (n, &cut) in cuts.iter().enumerate() {
            seq.extend_from_slice(&bg[prev..cut]);
            truth.push(PlantedSite { sequence: s, offset: cut + n * w });
            seq.extend(motif.sample(rng));
            prev = cut;
        }
        seq.extend_from_slice(&bg[prev..]);
        names.push(alloc::format!("seq{}", s + 1));
        seqs.push(seq);
    }
    Ok((SequenceSet::new(names, seqs, w)?, truth))
}

/// Per-position frequency of `a_i = 1` over the samples.
pub fn posterior_site_probabilities(samples: &[Allocation], lstar: usize) -> Vec<f64> {
    let mut p = vec![0.0; lstar];
    for a in samples {
        for (pi, &on) in p.iter_mut().zip(&a.active) {
            if on {
                *pi += 1.0;
            }
        }
    }
    let n = samples.len().max(1) as f64;
    p.iter_mut().for_each(|v| *v /= n);
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteCall {
    pub position: usize,
    pub probability: f64,
    pub sequence: usize,
    pub offset: usize,
}

/// Positions whose posterior probability exceeds `threshold`.
pub fn detected_sites(model: &TfbsModel, probabilities: &[f64], threshold: f64) -> Vec<SiteCall> {
    probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, &p)| {
            let (sequence, offset) = model.locate(i);
            SiteCall { position: i, probability: p, sequence, offset }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionScore {
    /// Planted sites overlapped by at least one called position.
    pub detected: usize,
    /// Planted sites whose exact start was called.
    pub exact: usize,
    pub planted: usize,
}

pub fn score_detection(calls: &[SiteCall], truth: &[PlantedSite], width: usize) -> DetectionScore {
    let mut detected = 0;
    let mut exact = 0;
    for t in truth {
        let near = calls.iter().filter(|c| c.sequence == t.sequence && c.offset.abs_diff(t.offset) < width);
        let mut any = false;
        let mut hit = false;
        for c in near {
            any = true;
            hit |= c.offset == t.offset;
        }
        detected += any as usize;
        exact += hit as usize;
    }
    DetectionScore { detected, exact, planted: truth.len() }
}

#[derive(Debug, Clone)]
pub struct TfbsConfig {
    pub algorithm: Algorithm,
    pub temperatures: TemperatureLadder,
    pub energy: EnergyLadder,
    pub length: RunLength,
    /// EES ring-construction period.
    pub ring_period: usize,
    pub jump_probability: f64,
    pub sequences: usize,
    pub background_length: usize,
    pub sites_per_sequence: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub watch: Vec<usize>,
}

pub const EES_TEMPERATURES: [f64; 9] = [1.0, 1.001, 1.002, 1.005, 1.01, 1.02, 1.06, 1.1, 1.3];

impl TfbsConfig {
    /// PTEEM/PT: 15 chains with inverse-even temperatures in `[1, 1.3]`, five
    /// log-even levels in `[10, 100]`, 200 + 800 iterations. EES: nine
    /// chains, nine log-even levels in `[10, 100]`, `p_ee = 0.1`, 200 burn-in,
    /// 100 ring-construction iterations and 700 further kept iterations, so
    /// the target chain runs 1000 iterations.
    pub fn defaults(algorithm: Algorithm) -> Self {
        let (temperatures, energy, length) = match algorithm {
            Algorithm::Ees => (
                TemperatureLadder::new(EES_TEMPERATURES.to_vec()).unwrap(),
                EnergyLadder::build(10.0, 100.0, 9, EnergyScheme::LogLevels).unwrap(),
                RunLength::new(200, 700),
            ),
            _ => (
                TemperatureLadder::build(1.3, 15, TemperatureScheme::InverseEven).unwrap(),
                EnergyLadder::build(10.0, 100.0, 5, EnergyScheme::LogLevels).unwrap(),
                RunLength::new(200, 800),
            ),
        };
        Self {
            algorithm,
            temperatures,
            energy,
            length,
            ring_period: 100,
            jump_probability: 0.1,
            sequences: 10,
            background_length: 200,
            sites_per_sequence: 2,
            alpha: 0.12,
            threshold: 0.8,
            watch: Vec::new(),
        }
    }

    pub fn chains(&self) -> usize {
        self.temperatures.len()
    }
}

#[derive(Debug, Clone)]
pub struct TfbsRun {
    pub trace: Trace<Allocation>,
    pub probabilities: Vec<f64>,
    /// Acceptance of the refitting MH move per chain (EES only; zero otherwise).
    pub refit_acceptance: Vec<f64>,
}

/// Runs one sampler on a fixed model. All chains start from the empty
/// allocation.
pub fn run_tfbs(model: &TfbsModel, config: &TfbsConfig, seed: RunSeed) -> Result<TfbsRun, EngineError> {
    let n = config.chains();
    let init = vec![Allocation::empty(model.lstar()); n];
    let trace = match config.algorithm {
        Algorithm::Pt | Algorithm::Pteem => {
            let tc = TemperingConfig {
                temperatures: config.temperatures.clone(),
                energy: config.energy.clone(),
                length: config.length,
                global: if config.algorithm == Algorithm::Pt { GlobalMove::AdjacentSwap } else { GlobalMove::EquiEnergy },
                watch: config.watch.clone(),
            };
            run_tempering(model, &vec![TfbsKernel::Gibbs; n], &tc, init, seed)?
        }
        Algorithm::Ees => {
            let ec = EesConfig {
                temperatures: config.temperatures.clone(),
                energy: config.energy.clone(),
                jump_probability: config.jump_probability,
                burn_in: config.length.burn_in,
                ring_period: config.ring_period,
                kept: config.length.kept,
                untruncated: vec![0],
                watch: config.watch.clone(),
            };
            let mut kernels = vec![TfbsKernel::Refit; n];
            kernels[0] = TfbsKernel::Gibbs;
            run_ees(model, &kernels, &ec, init, seed)?
        }
    };
    let probabilities = posterior_site_probabilities(&trace.samples, model.lstar());
    let refit_acceptance = if config.algorithm == Algorithm::Ees {
        trace.local.iter().enumerate().map(|(c, m)| if c == 0 { 0.0 } else { m.rate() }).collect()
    } else {
        vec![0.0; n]
    };
    Ok(TfbsRun { trace, probabilities, refit_acceptance })
}

/// Generated benchmark data for one seed (setup stream).
pub fn generate_benchmark(config: &TfbsConfig, seed: RunSeed) -> Result<(TfbsModel, Vec<PlantedSite>), ConfigError> {
    let background = Background::symmetric(config.alpha)?;
    let motif = Motif::benchmark();
    let mut rng = seed.setup();
    let (seqs, truth) = generate_dataset(
        &background,
        &motif,
        config.sequences,
        config.background_length,
        config.sites_per_sequence,
        &mut rng,
    )?;
    let priors = TfbsPriors::defaults(motif.width());
    Ok((TfbsModel::new(seqs, background, priors)?, truth))
}

/// Allocation with exactly the planted sites active.
pub fn planted_allocation(model: &TfbsModel, truth: &[PlantedSite]) -> Allocation {
    let positions: Vec<usize> = truth.iter().filter_map(|t| model.position_of(t.sequence, t.offset)).collect();
    Allocation::from_positions(model.lstar(), &positions)
}

/// All non-overlapping allocations with their normalized posterior at `t`.
/// Intended for small instances (`L* <= 20`).
pub fn enumerate_posterior(model: &TfbsModel, t: f64) -> Vec<(Allocation, f64)> {
    assert!(model.lstar() <= 20, "enumeration is exponential in L*");
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << model.lstar()) {
        let a = Allocation { active: (0..model.lstar()).map(|i| mask >> i & 1 == 1).collect() };
        if let Ok(lp) = model.collapsed_log_posterior(&a) {
            out.push((a, lp / t));
        }
    }
    let logs: Vec<f64> = out.iter().map(|(_, l)| *l).collect();
    let z = math::log_sum_exp(&logs);
    out.into_iter().map(|(a, l)| (a, exp(l - z))).collect()
}

/// Two length-10 sequences with a planted `TGA`, width 3 (`L* = 16`), small
/// enough to enumerate all 784 overlap-free allocations.
pub fn enumerable_instance() -> TfbsModel {
    let seqs: Vec<Vec<u8>> = [&b"ACTGATTCAG"[..], &b"GTTGACCATG"[..]]
        .iter()
        .map(|s| s.iter().map(|&b| nucleotide_code(b).unwrap()).collect())
        .collect();
    let set = SequenceSet::new(vec!["toy1".into(), "toy2".into()], seqs, 3).unwrap();
    let priors = TfbsPriors { beta: vec![[0.5; 4]; 3], a: 1.0, b: 3.0 };
    TfbsModel::new(set, Background::symmetric(0.12).unwrap(), priors).unwrap()
}

/// PTEEM settings for the enumerable instance: four chains log-even up to
/// `T = 3` and three rings cut at the 25%, 50% and 75% energy quantiles of
/// the enumerated states.
pub fn enumerable_config(model: &TfbsModel, kept: usize) -> TfbsConfig {
    let mut energies: Vec<f64> =
        enumerate_posterior(model, 1.0).iter().map(|(a, _)| -model.collapsed_log_posterior(a).unwrap()).collect();
    energies.sort_by(|x, y| x.total_cmp(y));
    let q = |f: f64| energies[((energies.len() - 1) as f64 * f) as usize];
    let mut cfg = TfbsConfig::defaults(Algorithm::Pteem);
    cfg.temperatures = TemperatureLadder::build(3.0, 4, TemperatureScheme::LogEven).unwrap();
    cfg.energy = EnergyLadder::new(vec![q(0.25), q(0.5), q(0.75)]).unwrap();
    cfg.length = RunLength::new(1000, kept);
    cfg
}
