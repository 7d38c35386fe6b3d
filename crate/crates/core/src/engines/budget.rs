use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Pt,
    Ees,
    Pteem,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Pt => "pt",
            Algorithm::Ees => "ees",
            Algorithm::Pteem => "pteem",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "pt" => Ok(Algorithm::Pt),
            "ees" => Ok(Algorithm::Ees),
            "pteem" => Ok(Algorithm::Pteem),
            other => Err(ConfigError::Invalid {
                key: "algorithm",
                reason: alloc::format!("unknown algorithm '{other}' (expected pt, ees or pteem)"),
            }),
        }
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the post-ring-construction sample enters the EES count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EesBudgetReading {
    /// The closed form with `(M - R)` terms: the target chain runs `B + M`
    /// iterations in total.
    Printed,
    /// `M` counted after both burn-in and ring construction: the target
    /// chain runs `B + R + M` iterations. This is what the EES engine does.
    AfterRings,
}

/// Expected number of local and global moves of a run.
///
/// EES counts are expectations over the jump coin and may be fractional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveBudget {
    pub local_moves: f64,
    pub global_moves: f64,
}

/// Move accounting for a run of `chains` chains with burn-in `burn_in` and
/// target sample size `kept`.
///
/// PT and PTEEM: `N (M + B)` local moves and `M + B` global moves. EES with
/// `K` chains: chain `i` (1-based) runs `i (B + R) + S` iterations, where
/// `S` is `M - R` or `M` depending on `reading`; every iteration of chains
/// below `K` is a jump with probability `p_ee`.
pub fn move_budget(
    algorithm: Algorithm,
    burn_in: usize,
    ring_period: usize,
    kept: usize,
    chains: usize,
    jump_probability: f64,
    reading: EesBudgetReading,
) -> Result<MoveBudget, ConfigError> {
    let (b, r, m, n) = (burn_in as f64, ring_period as f64, kept as f64, chains as f64);
    match algorithm {
        Algorithm::Pt | Algorithm::Pteem => Ok(MoveBudget {
            local_moves: n * (m + b),
            global_moves: m + b,
        }),
        Algorithm::Ees => {
            if ring_period > kept && reading == EesBudgetReading::Printed {
                return Err(ConfigError::RingPeriod {
                    rings: ring_period,
                    samples: kept,
                });
            }
            if !(0.0..=1.0).contains(&jump_probability) {
                return Err(ConfigError::JumpProbability(jump_probability));
            }
            let tail = match reading {
                EesBudgetReading::Printed => m - r,
                EesBudgetReading::AfterRings => m,
            };
            let mixed = (n - 1.0) * n / 2.0 * (b + r) + (n - 1.0) * tail;
            Ok(MoveBudget {
                local_moves: n * (b + r) + tail + (1.0 - jump_probability) * mixed,
                global_moves: jump_probability * mixed,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pteem_default_budget() {
        let b = move_budget(Algorithm::Pteem, 2500, 0, 2500, 20, 0.0, EesBudgetReading::Printed).unwrap();
        assert_eq!(b.local_moves, 100_000.0);
        assert_eq!(b.global_moves, 5_000.0);
    }

    #[test]
    fn motif_ees_budget_printed_reading() {
        // K = 9, B = 200, R = 100, M = 800, p = 0.1
        let b = move_budget(Algorithm::Ees, 200, 100, 800, 9, 0.1, EesBudgetReading::Printed).unwrap();
        assert!((b.local_moves - 18_160.0).abs() < 1e-6);
        assert!((b.global_moves - 1_640.0).abs() < 1e-6);
        let p = move_budget(Algorithm::Pteem, 200, 0, 800, 15, 0.0, EesBudgetReading::Printed).unwrap();
        assert_eq!((p.local_moves, p.global_moves), (15_000.0, 1_000.0));
    }

    #[test]
    fn ees_budget_both_readings() {
        let printed = move_budget(Algorithm::Ees, 2500, 500, 2500, 6, 0.1, EesBudgetReading::Printed).unwrap();
        // 6*3000 + 2000 + 0.9*(15*3000 + 5*2000) = 20000 + 49500
        assert!((printed.local_moves - 69_500.0).abs() < 1e-6);
        assert!((printed.global_moves - 5_500.0).abs() < 1e-6);
        let after = move_budget(Algorithm::Ees, 2500, 500, 2500, 6, 0.1, EesBudgetReading::AfterRings).unwrap();
        assert!((after.local_moves - 72_250.0).abs() < 1e-6);
        assert!((after.global_moves - 5_750.0).abs() < 1e-6);
    }

    #[test]
    fn ees_without_jumps_has_no_global_moves() {
        let b = move_budget(Algorithm::Ees, 100, 10, 100, 4, 0.0, EesBudgetReading::Printed).unwrap();
        assert_eq!(b.global_moves, 0.0);
        // nothing is lost: sum of chain lengths
        let lengths: f64 = (1..=4).map(|i| (i * 110 + 90) as f64).sum();
        assert_eq!(b.local_moves, lengths);
    }

    #[test]
    fn ring_period_longer_than_sample_is_an_error() {
        assert!(move_budget(Algorithm::Ees, 10, 50, 20, 3, 0.1, EesBudgetReading::Printed).is_err());
    }

    #[test]
    fn algorithm_names() {
        assert_eq!(Algorithm::parse("PTEEM").unwrap(), Algorithm::Pteem);
        assert!(Algorithm::parse("gibbs").is_err());
    }
}
