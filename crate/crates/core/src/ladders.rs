//! Temperature and energy ladders, ring assignment and the ring-occupancy
//! diagnostics used to check a ladder calibration.
//!
//! Chains and rings are 0-based in this API. Ring 0 is `(-inf, H_2)`, ring
//! `j` is `[H_{j+1}, H_{j+2})` and the last ring `[H_d, inf)`; the lowest
//! level `H_1` only serves as the truncation level of the first EES chain.

use alloc::vec::Vec;

use crate::error::ConfigError;

/// Minimum share of histogram mass two adjacent chains must have in common.
pub const MIN_RING_OVERLAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureScheme {
    /// `log T` evenly spaced.
    LogEven,
    /// `1/T` evenly spaced.
    InverseEven,
    /// `1/T` in geometric progression. This coincides with [`LogEven`]
    /// up to rounding; it is kept as a separate name for configuration.
    ///
    /// [`LogEven`]: TemperatureScheme::LogEven
    InverseGeometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyScheme {
    /// `ln H` evenly spaced.
    LogLevels,
    /// `ln(H_{i+1} - H_i)` evenly spaced: gaps grow geometrically with the
    /// common ratio `(H_d/H_1)^(1/(d-1))`, rescaled to span `[H_1, H_d]`.
    LogIncrements,
}

/// `T_1 = 1 < T_2 < ... < T_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureLadder {
    temperatures: Vec<f64>,
}

impl TemperatureLadder {
    /// Validates an explicit ladder.
    pub fn new(temperatures: Vec<f64>) -> Result<Self, ConfigError> {
        match temperatures.first() {
            None => return Err(ConfigError::LadderSize { min: 1, got: 0 }),
            Some(&t) if t != 1.0 => return Err(ConfigError::Temperature(t)),
            _ => {}
        }
        for w in temperatures.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(ConfigError::Invalid {
                    key: "temperatures",
                    reason: alloc::format!("not strictly increasing at {} -> {}", w[0], w[1]),
                });
            }
        }
        Ok(Self { temperatures })
    }

    pub fn build(t_max: f64, n: usize, scheme: TemperatureScheme) -> Result<Self, ConfigError> {
        if !(t_max > 1.0) || !t_max.is_finite() {
            return Err(ConfigError::MaxTemperature(t_max));
        }
        if n < 2 {
            return Err(ConfigError::LadderSize { min: 2, got: n });
        }
        let last = (n - 1) as f64;
        let mut temps: Vec<f64> = (0..n)
            .map(|i| {
                let frac = i as f64 / last;
                match scheme {
                    TemperatureScheme::LogEven => libm::pow(t_max, frac),
                    TemperatureScheme::InverseEven => 1.0 / (1.0 - frac * (1.0 - 1.0 / t_max)),
                    TemperatureScheme::InverseGeometric => 1.0 / libm::pow(1.0 / t_max, frac),
                }
            })
            .collect();
        temps[0] = 1.0;
        temps[n - 1] = t_max;
        Self::new(temps)
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperatures.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn get(&self, chain: usize) -> f64 {
        self.temperatures[chain]
    }
}

/// `H_1 < ... < H_d`, with `H_{d+1} = inf` implied. `d` is the ring count.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLadder {
    levels: Vec<f64>,
}

impl EnergyLadder {
    pub fn new(levels: Vec<f64>) -> Result<Self, ConfigError> {
        if levels.is_empty() {
            return Err(ConfigError::LadderSize { min: 1, got: 0 });
        }
        for w in levels.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ConfigError::LevelOrder(w[0], w[1]));
            }
        }
        if let Some(bad) = levels.iter().find(|h| !h.is_finite()) {
            return Err(ConfigError::Invalid {
                key: "energy levels",
                reason: alloc::format!("non-finite level {bad}"),
            });
        }
        Ok(Self { levels })
    }

    pub fn build(h1: f64, hd: f64, d: usize, scheme: EnergyScheme) -> Result<Self, ConfigError> {
        if d < 2 {
            return Err(ConfigError::LadderSize { min: 2, got: d });
        }
        if !(h1 > 0.0) {
            return Err(ConfigError::NonPositiveLevel(h1));
        }
        if !(hd > h1) {
            return Err(ConfigError::LevelOrder(h1, hd));
        }
        let steps = (d - 1) as f64;
        let ratio = libm::pow(hd / h1, 1.0 / steps);
        let mut levels = Vec::with_capacity(d);
        match scheme {
            EnergyScheme::LogLevels => {
                let (a, b) = (libm::log(h1), libm::log(hd));
                levels.extend((0..d).map(|i| libm::exp(a + (b - a) * i as f64 / steps)));
            }
            EnergyScheme::LogIncrements => {
                let gaps: Vec<f64> = (0..d - 1).map(|i| libm::pow(ratio, i as f64)).collect();
                let total: f64 = gaps.iter().sum();
                let mut h = h1;
                levels.push(h);
                for g in &gaps {
                    h += g / total * (hd - h1);
                    levels.push(h);
                }
            }
        }
        levels[0] = h1;
        levels[d - 1] = hd;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of rings `d`.
    pub fn rings(&self) -> usize {
        self.levels.len()
    }

    /// Lower edge of each ring; `-inf` for ring 0.
    pub fn ring_lower_bounds(&self) -> impl Iterator<Item = f64> + '_ {
        core::iter::once(f64::NEG_INFINITY).chain(self.levels[1..].iter().copied())
    }

    /// Ring holding energy `h`. Infinite or NaN energies land in the top ring.
    pub fn ring_index(&self, h: f64) -> usize {
        if h.is_nan() {
            return self.levels.len() - 1;
        }
        self.levels[1..].partition_point(|&level| level <= h)
    }
}

/// Visit counts, chains in rows and rings in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable {
    pub counts: Vec<Vec<u64>>,
}

impl OccupancyTable {
    /// Builds the table from per-chain ring records.
    pub fn from_rings(rings_per_chain: &[Vec<u16>], rings: usize) -> Option<Self> {
        if rings_per_chain.iter().all(|r| r.is_empty()) {
            return None;
        }
        let counts = rings_per_chain
            .iter()
            .map(|chain| {
                let mut row = alloc::vec![0u64; rings];
                for &r in chain {
                    row[r as usize] += 1;
                }
                row
            })
            .collect();
        Some(Self { counts })
    }

    pub fn chains(&self) -> usize {
        self.counts.len()
    }

    pub fn rings(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }
}

/// Outcome of [`check_repartition`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepartitionReport {
    /// Chains `i` such that chains `i` and `i+1` occupy no common ring.
    pub energy_gaps: Vec<usize>,
    /// Adjacent pairs `(i, overlap)` sharing a ring but with histogram
    /// overlap below [`MIN_RING_OVERLAP`].
    pub weak_overlaps: Vec<(usize, f64)>,
}

impl RepartitionReport {
    pub fn is_ok(&self) -> bool {
        self.energy_gaps.is_empty() && self.weak_overlaps.is_empty()
    }
}

/// Histogram intersection `sum_j min(p_a(j), p_b(j))` of two rows.
pub fn ring_overlap(a: &[u64], b: &[u64]) -> f64 {
    let (sa, sb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / sa).min(y as f64 / sb))
        .sum()
}

/// Looks for energy gaps between adjacent chains.
pub fn check_repartition(table: &OccupancyTable) -> RepartitionReport {
    let mut report = RepartitionReport::default();
    for (i, pair) in table.counts.windows(2).enumerate() {
        let shared = pair[0].iter().zip(&pair[1]).any(|(&a, &b)| a > 0 && b > 0);
        if !shared {
            report.energy_gaps.push(i);
            continue;
        }
        let overlap = ring_overlap(&pair[0], &pair[1]);
        if overlap < MIN_RING_OVERLAP {
            report.weak_overlaps.push((i, overlap));
        }
    }
    report
}

/// `true` when `chains >= 3 * rings`, the usual lower bound for the chain count.
pub fn enough_chains(chains: usize, rings: usize) -> bool {
    chains >= 3 * rings
}
