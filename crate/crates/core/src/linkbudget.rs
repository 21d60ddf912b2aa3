//! How far the pairs can be sent through multi-core fiber before the
//! coincidence rate drops below a detectable threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::{DEFAULT_BANDWIDTH, DEFAULT_PAIR_RATE, DEFAULT_PUMP_POWER_PER_CORE};

/// Typical multi-core fiber loss at 1550 nm, dB/km.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudget {
    /// Pairs per (s mW nm).
    pub brightness: f64,
    /// mW.
    pub pump_power: f64,
    /// nm.
    pub bandwidth: f64,
    /// dB/km in each fiber arm.
    pub attenuation: f64,
    /// 2 when both photons travel through fiber, 1 when the source sits with
    /// one of the parties.
    pub arms: u8,
    pub coincidence_efficiency: f64,
    /// Pairs per second needed at the receivers.
    pub min_rate: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            brightness: DEFAULT_PAIR_RATE,
            pump_power: DEFAULT_PUMP_POWER_PER_CORE,
            bandwidth: DEFAULT_BANDWIDTH,
            attenuation: DEFAULT_ATTENUATION_DB_PER_KM,
            arms: 2,
            coincidence_efficiency: 1.0,
            min_rate: 0.35,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxDistance {
    pub km: f64,
    /// Set when the source itself is below `min_rate`; `km` is then 0.
    pub below_threshold_at_source: bool,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("brightness", self.brightness),
            ("pump_power", self.pump_power),
            ("bandwidth", self.bandwidth),
            ("attenuation", self.attenuation),
            ("coincidence_efficiency", self.coincidence_efficiency),
            ("min_rate", self.min_rate),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("{v} must be finite and >= 0")));
            }
        }
        if !(self.arms == 1 || self.arms == 2) {
            return Err(Error::param("arms", format!("{} must be 1 or 2", self.arms)));
        }
        Ok(())
    }

    /// Detected pair rate with no fiber.
    pub fn source_rate(&self) -> f64 {
        self.brightness * self.pump_power * self.bandwidth * self.coincidence_efficiency
    }

    fn total_loss_db(&self, km: f64) -> f64 {
        self.arms as f64 * self.attenuation * km
    }

    /// Pairs per second after `km` of fiber in each arm.
    pub fn rate_at_distance(&self, km: f64) -> Result<f64> {
        self.validate()?;
        if !(km.is_finite() && km >= 0.0) {
            return Err(Error::param("distance", format!("{km} must be >= 0")));
        }
        Ok(self.source_rate() * 10f64.powf(-self.total_loss_db(km) / 10.0))
    }

    /// Largest fiber length at which the rate still reaches `min_rate`.
    pub fn max_distance(&self) -> Result<MaxDistance> {
        self.validate()?;
        if self.attenuation <= 0.0 {
            return Err(Error::param("attenuation", "must be > 0 for a distance limit"));
        }
        if self.min_rate <= 0.0 {
            return Err(Error::param("min_rate", "must be > 0 for a distance limit"));
        }
        let source = self.source_rate();
        if source <= self.min_rate {
            return Ok(MaxDistance {
                km: 0.0,
                below_threshold_at_source: source < self.min_rate,
            });
        }
        let budget_db = 10.0 * (source / self.min_rate).log10();
        Ok(MaxDistance {
            km: budget_db / (self.arms as f64 * self.attenuation),
            below_threshold_at_source: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_budget() -> LinkBudget {
        LinkBudget::default()
    }

    #[test]
    fn rate_examples() {
        let b = reference_budget();
        assert_eq!(b.rate_at_distance(0.0).unwrap(), 350_000.0);
        // 60 dB over 75 km of both arms
        let r = b.rate_at_distance(75.0).unwrap();
        assert!((r / 0.35 - 1.0).abs() < 1e-12, "{r}");
        let lossless = LinkBudget {
            attenuation: 0.0,
            ..reference_budget()
        };
        assert_eq!(lossless.rate_at_distance(500.0).unwrap(), 350_000.0);
        assert!(b.rate_at_distance(-1.0).is_err());
    }

    #[test]
    fn max_distance_examples() {
        let b = reference_budget();
        let d = b.max_distance().unwrap();
        assert!((d.km - 75.0).abs() < 1e-9);
        assert!(!d.below_threshold_at_source);

        let at_source = LinkBudget {
            min_rate: 350_000.0,
            ..reference_budget()
        };
        assert_eq!(at_source.max_distance().unwrap().km, 0.0);

        let too_demanding = LinkBudget {
            min_rate: 1e9,
            ..reference_budget()
        };
        let d = too_demanding.max_distance().unwrap();
        assert_eq!(d.km, 0.0);
        assert!(d.below_threshold_at_source);

        let one_arm = LinkBudget { arms: 1, ..reference_budget() };
        assert!((one_arm.max_distance().unwrap().km - 150.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid() {
        assert!(LinkBudget { arms: 3, ..reference_budget() }.rate_at_distance(1.0).is_err());
        assert!(LinkBudget { attenuation: 0.0, ..reference_budget() }.max_distance().is_err());
        assert!(LinkBudget { min_rate: 0.0, ..reference_budget() }.max_distance().is_err());
        assert!(LinkBudget { brightness: -1.0, ..reference_budget() }.rate_at_distance(1.0).is_err());
    }
}
