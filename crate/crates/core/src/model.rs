//! Target densities, energies and the tempered density family.
//!
//! A model reports its unnormalized log density split into a part that is
//! scaled by `1/T` under tempering and a part that is not. For a plain
//! `pi^(1/T)` family everything is tempered; the Galaxy mixture tempers only
//! its likelihood and keeps the prior fixed. Energies are always
//! `h(x) = -log pi~(x)` of the untempered, unnormalized density.

use alloc::format;
use core::fmt::Debug;

use crate::error::{ConfigError, ModelError};

/// Unnormalized log density of a state, split by how tempering acts on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    /// Contribution raised to `1/T` (scaled by `1/T` in log space).
    pub tempered: f64,
    /// Contribution left untouched by tempering.
    pub fixed: f64,
}

impl LogDensity {
    pub const OFF_SUPPORT: Self = Self {
        tempered: f64::NEG_INFINITY,
        fixed: 0.0,
    };

    /// Fully tempered log density, as for `pi^(1/T)`.
    pub fn tempered(value: f64) -> Self {
        Self {
            tempered: value,
            fixed: 0.0,
        }
    }

    /// `log pi~(x)` at temperature 1.
    pub fn total(&self) -> f64 {
        self.tempered + self.fixed
    }

    /// `h(x) = -log pi~(x)`.
    pub fn energy(&self) -> f64 {
        -self.total()
    }

    /// Log density at temperature `t`.
    pub fn at(&self, t: f64) -> f64 {
        if t == 1.0 {
            self.total()
        } else {
            self.tempered / t + self.fixed
        }
    }
}

/// An unnormalized target density on some state space.
///
/// Implementations must be pure: the same state always gives the same value,
/// and states off the support return a `-inf` tempered part.
pub trait TargetModel {
    type State: Clone + Debug;

    fn log_density_parts(&self, x: &Self::State) -> LogDensity;

    fn log_density(&self, x: &Self::State) -> f64 {
        self.log_density_parts(x).total()
    }
}

/// `h(x) = -log pi~(x)`; `+inf` off the support.
pub fn energy<M: TargetModel>(model: &M, x: &M::State) -> Result<f64, ModelError> {
    let h = model.log_density_parts(x).energy();
    if h.is_nan() {
        return Err(ModelError::NonFinite(format!("{x:?}")));
    }
    Ok(h)
}

/// One member of the tempered family: `pi^(1/T)`, or the truncated form
/// `exp(-max(h, H)/T)` when a truncation level is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperedDensity {
    temperature: f64,
    truncation: Option<f64>,
}

impl TemperedDensity {
    pub fn new(temperature: f64) -> Result<Self, ConfigError> {
        if !(temperature >= 1.0) || !temperature.is_finite() {
            return Err(ConfigError::Temperature(temperature));
        }
        Ok(Self {
            temperature,
            truncation: None,
        })
    }

    pub fn truncated(temperature: f64, level: f64) -> Result<Self, ConfigError> {
        let mut td = Self::new(temperature)?;
        td.truncation = Some(level);
        Ok(td)
    }

    pub fn untempered() -> Self {
        Self {
            temperature: 1.0,
            truncation: None,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// Log density of this member given the split log density of a state.
    pub fn log_density(&self, parts: &LogDensity) -> f64 {
        match self.truncation {
            None => parts.at(self.temperature),
            Some(level) => {
                let h = parts.energy();
                if h.is_nan() {
                    return f64::NAN;
                }
                -h.max(level) / self.temperature
            }
        }
    }
}

/// Convenience wrapper evaluating `td` at state `x` of `model`.
pub fn tempered_log_density<M: TargetModel>(model: &M, td: &TemperedDensity, x: &M::State) -> f64 {
    td.log_density(&model.log_density_parts(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::LN_2PI;
    use proptest::prelude::*;

    struct StdNormal;

    impl TargetModel for StdNormal {
        type State = f64;
        fn log_density_parts(&self, x: &f64) -> LogDensity {
            if !x.is_finite() {
                return LogDensity::OFF_SUPPORT;
            }
            LogDensity::tempered(-0.5 * LN_2PI - 0.5 * x * x)
        }
    }

    /// Positive-support model: exponential density.
    struct Exponential;

    impl TargetModel for Exponential {
        type State = f64;
        fn log_density_parts(&self, x: &f64) -> LogDensity {
            if *x < 0.0 {
                LogDensity::OFF_SUPPORT
            } else {
                LogDensity::tempered(-x)
            }
        }
    }

    struct NanModel;

    impl TargetModel for NanModel {
        type State = f64;
        fn log_density_parts(&self, _: &f64) -> LogDensity {
            LogDensity::tempered(f64::NAN)
        }
    }

    #[test]
    fn standard_normal_energy_at_zero() {
        let h = energy(&StdNormal, &0.0).unwrap();
        assert!((h - 0.918_938_533_204_672_8).abs() < 1e-12);
    }

    #[test]
    fn off_support_energy_is_infinite() {
        assert_eq!(energy(&Exponential, &-1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn nan_density_is_an_error() {
        let err = energy(&NanModel, &3.5).unwrap_err();
        assert!(matches!(err, ModelError::NonFinite(ref s) if s.contains("3.5")));
    }

    #[test]
    fn temperature_below_one_rejected() {
        assert_eq!(TemperedDensity::new(0.5), Err(ConfigError::Temperature(0.5)));
        assert!(TemperedDensity::new(f64::NAN).is_err());
    }

    #[test]
    fn truncation_examples() {
        // h = 5
        let parts = LogDensity::tempered(-5.0);
        let td = TemperedDensity::truncated(2.0, 10.0).unwrap();
        assert_eq!(td.log_density(&parts), -5.0);
        // h = 20
        let parts = LogDensity::tempered(-20.0);
        assert_eq!(td.log_density(&parts), -10.0);
    }

    #[test]
    fn split_density_tempers_only_tempered_part() {
        let parts = LogDensity {
            tempered: -8.0,
            fixed: -3.0,
        };
        assert_eq!(parts.at(1.0), -11.0);
        assert_eq!(parts.at(2.0), -7.0);
        assert_eq!(parts.energy(), 11.0);
    }

    proptest! {
        #[test]
        fn identity_temperature_is_exact(x in -50.0f64..50.0) {
            let td = TemperedDensity::untempered();
            prop_assert_eq!(tempered_log_density(&StdNormal, &td, &x), StdNormal.log_density(&x));
        }

        #[test]
        fn energy_plus_log_density_is_zero(x in -50.0f64..50.0) {
            prop_assert_eq!(energy(&StdNormal, &x).unwrap() + StdNormal.log_density(&x), 0.0);
        }

        #[test]
        fn truncated_density_flat_below_level(a in -3.0f64..3.0, b in -3.0f64..3.0, t in 1.0f64..10.0) {
            // both energies are <= 0.92 + 4.5 < 6
            let td = TemperedDensity::truncated(t, 6.0).unwrap();
            let la = tempered_log_density(&StdNormal, &td, &a);
            let lb = tempered_log_density(&StdNormal, &td, &b);
            prop_assert_eq!(la, lb);
            prop_assert!(la <= -energy(&StdNormal, &a).unwrap() / t + 1e-12);
        }

        #[test]
        fn heating_never_lowers_negative_log_density(x in 0.0f64..50.0, t1 in 1.0f64..20.0, dt in 0.0f64..20.0) {
            // log density of the exponential is -x <= 0
            let lo = tempered_log_density(&Exponential, &TemperedDensity::new(t1).unwrap(), &x);
            let hi = tempered_log_density(&Exponential, &TemperedDensity::new(t1 + dt).unwrap(), &x);
            prop_assert!(hi >= lo);
        }
    }
}
