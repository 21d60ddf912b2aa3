//! Two-photon states emitted by the four-region down-conversion source.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::PhaseVector;
use crate::error::{Error, Result};
use crate::qcore::{pair_index, PairMatrix, PairVector, TwoPhotonState, CORES, PAIR_DIM};

/// Spectral brightness, pairs per (s mW nm).
pub const DEFAULT_PAIR_RATE: f64 = 350_000.0;
/// Pump power delivered to each crystal region, mW.
pub const DEFAULT_PUMP_POWER_PER_CORE: f64 = 1.0;
/// Filter bandwidth, nm.
pub const DEFAULT_BANDWIDTH: f64 = 1.0;

/// Measured split ratios of the pump splitter.
pub const MEASURED_PUMP_SPLIT: [f64; CORES] = [0.2379, 0.2488, 0.2719, 0.2414];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    /// Pump power fraction reaching each crystal region; normalized on use.
    pub pump_weights: [f64; CORES],
    /// Pair-generation phase of each region, radians.
    pub core_phases: [f64; CORES],
    /// Weight of the pure state against white noise.
    pub visibility: f64,
    pub pair_rate: f64,
    pub pump_power_per_core: f64,
    pub bandwidth: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pump_weights: [0.25; CORES],
            core_phases: [0.0; CORES],
            visibility: 1.0,
            pair_rate: DEFAULT_PAIR_RATE,
            pump_power_per_core: DEFAULT_PUMP_POWER_PER_CORE,
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pump_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("pump_weights", "weights must be finite and >= 0"));
        }
        if self.pump_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::param("pump_weights", "at least one weight must be positive"));
        }
        PhaseVector::new(self.core_phases)?;
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::param("visibility", format!("{} outside [0, 1]", self.visibility)));
        }
        for (name, v) in [
            ("pair_rate", self.pair_rate),
            ("pump_power_per_core", self.pump_power_per_core),
            ("bandwidth", self.bandwidth),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn normalized_weights(&self) -> Result<[f64; CORES]> {
        self.validate()?;
        let total: f64 = self.pump_weights.iter().sum();
        Ok(self.pump_weights.map(|w| w / total))
    }

    /// Pairs per second leaving the crystal, before any detection loss.
    pub fn emitted_pair_rate(&self) -> f64 {
        self.pair_rate * self.pump_power_per_core * CORES as f64 * self.bandwidth
    }

    /// Full source state: pure weighted state mixed with white noise.
    pub fn state(&self) -> Result<TwoPhotonState> {
        let pure = weighted_state(self)?;
        if self.visibility == 1.0 {
            Ok(pure)
        } else {
            with_white_noise(&pure, self.visibility)
        }
    }
}

/// `(|00> + |11> + |22> + |33>) / 2`.
pub fn ideal_state() -> TwoPhotonState {
    let mut amps = PairVector::zeros();
    for j in 0..CORES {
        amps[pair_index(j, j)] = Complex64::new(0.5, 0.0);
    }
    TwoPhotonState::pure(amps).expect("ideal state is normalized")
}

/// `sum_j sqrt(w_j) e^{i theta_j} |j j>` with normalized pump weights.
pub fn weighted_state(config: &SourceConfig) -> Result<TwoPhotonState> {
    let weights = config.normalized_weights()?;
    let mut amps = PairVector::zeros();
    for j in 0..CORES {
        amps[pair_index(j, j)] = Complex64::from_polar(weights[j].sqrt(), config.core_phases[j]);
    }
    // renormalize away the rounding of the square roots
    let norm = amps.norm();
    TwoPhotonState::pure(amps / Complex64::new(norm, 0.0))
}

/// `v |psi><psi| + (1 - v) I / 16`.
pub fn with_white_noise(pure: &TwoPhotonState, v: f64) -> Result<TwoPhotonState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param("visibility", format!("{v} outside [0, 1]")));
    }
    let noise = PairMatrix::identity() * Complex64::new((1.0 - v) / PAIR_DIM as f64, 0.0);
    TwoPhotonState::mixed(pure.density() * Complex64::new(v, 0.0) + noise)
}

/// Isotropic mixture of the ideal state with white noise.
pub fn werner_state(v: f64) -> Result<TwoPhotonState> {
    with_white_noise(&ideal_state(), v)
}
