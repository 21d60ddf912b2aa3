//! Slow interferometric phase drift in the fiber and the spectrum of the
//! coincidence rates it modulates.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::devices::PhaseVector;
use crate::error::{Error, Result};
use crate::measure::{physical_distribution, stream_rng};
use crate::qcore::CORES;

/// Minimum series length accepted by [`spectrum`].
pub const MIN_SPECTRUM_SAMPLES: usize = 16;
/// Sampling interval matching a 5 s coincidence integration window.
pub const DEFAULT_DT: f64 = 5.0;
/// Six hours of record, long enough to resolve minute-scale drift.
pub const DEFAULT_DURATION: f64 = 21_600.0;
/// Range of drive periods used by [`DriftModel::lab_default`], seconds.
pub const DEFAULT_PERIOD_RANGE: (f64, f64) = (180.0, 390.0);
pub const DEFAULT_AMPLITUDE_RANGE: (f64, f64) = (0.05, 0.2);
/// Random-walk diffusion of the drifting core, rad^2 / s.
pub const DEFAULT_WALK_RATE: f64 = 1e-7;
/// Core whose phase drifts in the default model.
pub const DEFAULT_DRIFT_CORE: usize = 2;
/// Generator stream reserved for drift sampling.
pub const DRIFT_STREAM: u64 = 1 << 40;

/// `amplitude * sin(2 pi t / period + offset)` added to one core's phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSinusoid {
    pub core: usize,
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftModel {
    /// Phases around which the drift happens.
    pub base: [f64; CORES],
    #[serde(default)]
    pub sinusoids: Vec<PhaseSinusoid>,
    /// Random-walk diffusion per core, rad^2 / s.
    #[serde(default)]
    pub walk_rates: [f64; CORES],
}

impl DriftModel {
    pub fn constant(base: PhaseVector) -> Self {
        DriftModel {
            base: base.values(),
            sinusoids: Vec::new(),
            walk_rates: [0.0; CORES],
        }
    }

    /// One to three slow sinusoids plus a weak random walk on a single core.
    ///
    /// The base phases put detector pair `(0, 0)` at quarter fringe
    /// (`phi_2 = pi/4`), where the coincidence rate responds linearly to the
    /// drifting phase, so the series carries the drive periods themselves.
    pub fn lab_default(seed: u64) -> Self {
        let mut rng = stream_rng(seed, DRIFT_STREAM + 1);
        let count = rng.random_range(1..=3);
        let sinusoids = (0..count)
            .map(|_| PhaseSinusoid {
                core: DEFAULT_DRIFT_CORE,
                amplitude: rng.random_range(DEFAULT_AMPLITUDE_RANGE.0..=DEFAULT_AMPLITUDE_RANGE.1),
                period: rng.random_range(DEFAULT_PERIOD_RANGE.0..=DEFAULT_PERIOD_RANGE.1),
                offset: rng.random_range(0.0..TAU),
            })
            .collect();
        let mut walk_rates = [0.0; CORES];
        walk_rates[DEFAULT_DRIFT_CORE] = DEFAULT_WALK_RATE;
        let mut base = [0.0; CORES];
        base[DEFAULT_DRIFT_CORE] = FRAC_PI_4;
        DriftModel {
            base,
            sinusoids,
            walk_rates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PhaseVector::new(self.base)?;
        for s in &self.sinusoids {
            if s.core >= CORES {
                return Err(Error::param("sinusoids.core", format!("{} outside 0..=3", s.core)));
            }
            if !(s.period.is_finite() && s.period > 0.0) {
                return Err(Error::param("sinusoids.period", format!("{} must be > 0", s.period)));
            }
            if !s.amplitude.is_finite() || !s.offset.is_finite() {
                return Err(Error::param("sinusoids", "amplitude and offset must be finite"));
            }
        }
        if self.walk_rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::param("walk_rates", "rates must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftTrace {
    pub dt: f64,
    pub phases: Vec<PhaseVector>,
    pub model: DriftModel,
}

impl DriftTrace {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.phases.len()).map(move |i| i as f64 * self.dt)
    }
}

/// Samples the drifting phases at `t = 0, dt, 2 dt, ...` for
/// `round(duration / dt)` samples.
pub fn simulate_drift(model: &DriftModel, duration: f64, dt: f64, seed: u64) -> Result<DriftTrace> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("{dt} must be > 0")));
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(Error::param("duration", format!("{duration} must be >= dt = {dt}")));
    }
    model.validate()?;
    let n = (duration / dt).round() as usize;
    let mut rng = stream_rng(seed, DRIFT_STREAM);
    let steps: Vec<Option<Normal<f64>>> = model
        .walk_rates
        .iter()
        .map(|r| (*r > 0.0).then(|| Normal::new(0.0, (r * dt).sqrt()).expect("finite sigma")))
        .collect();

    let mut walk = [0.0; CORES];
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        if i > 0 {
            for (w, step) in walk.iter_mut().zip(&steps) {
                if let Some(d) = step {
                    *w += d.sample(&mut rng);
                }
            }
        }
        let mut phi = model.base;
        for (p, w) in phi.iter_mut().zip(walk) {
            *p += w;
        }
        for s in &model.sinusoids {
            phi[s.core] += s.amplitude * (TAU * t / s.period + s.offset).sin();
        }
        phases.push(PhaseVector::new(phi)?);
    }
    Ok(DriftTrace {
        dt,
        phases,
        model: model.clone(),
    })
}

/// Coincidence probability of detectors `(j, k)` along the trace.
pub fn coincidence_series(trace: &DriftTrace, pair: (usize, usize)) -> Result<Vec<f64>> {
    let (j, k) = pair;
    if j >= CORES || k >= CORES {
        return Err(Error::param("pair", format!("({j}, {k}) outside 0..=3")));
    }
    Ok(trace.phases.iter().map(|phi| physical_distribution(phi).get(j, k)).collect())
}

/// One-sided magnitude spectrum of a real series.
///
/// Magnitudes are `|X_k| / N` (arbitrary units) for `k = 1..=N/2` at
/// frequencies `k / (N dt)`; the mean is reported separately as `dc`. With
/// this normalization the non-DC power equals the population variance of the
/// series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub samples: usize,
    pub dt: f64,
    pub dc: f64,
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl SpectrumResult {
    fn bin_weight(&self, index: usize) -> f64 {
        // every bin except Nyquist stands for itself and its mirror image
        if self.samples.is_multiple_of(2) && index + 1 == self.magnitudes.len() {
            1.0
        } else {
            2.0
        }
    }

    /// Sum of `|X_k|^2 / N^2` over all non-DC bins.
    pub fn total_power(&self) -> f64 {
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(i, m)| self.bin_weight(i) * m * m)
            .sum()
    }

    /// Fraction of the non-DC power at frequencies `<= cutoff`.
    pub fn power_fraction_below(&self, cutoff: f64) -> f64 {
        let total = self.total_power();
        if total == 0.0 {
            return 1.0;
        }
        let below: f64 = self
            .magnitudes
            .iter()
            .zip(&self.frequencies)
            .enumerate()
            .filter(|(_, (_, f))| **f <= cutoff)
            .map(|(i, (m, _))| self.bin_weight(i) * m * m)
            .sum();
        below / total
    }

    /// Frequency and magnitude of the largest non-DC bin.
    pub fn dominant(&self) -> Option<(f64, f64)> {
        self.magnitudes
            .iter()
            .zip(&self.frequencies)
            .max_by(|a, b| a.0.total_cmp(b.0))
            .map(|(m, f)| (*f, *m))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frequency_hz,magnitude\n");
        writeln!(out, "0,{}", self.dc).unwrap();
        for (f, m) in self.frequencies.iter().zip(&self.magnitudes) {
            writeln!(out, "{f},{m}").unwrap();
        }
        out
    }
}

pub fn spectrum(series: &[f64], dt: f64) -> Result<SpectrumResult> {
    if series.len() < MIN_SPECTRUM_SAMPLES {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: MIN_SPECTRUM_SAMPLES,
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("{dt} must be > 0")));
    }
    let n = series.len();
    let mut buffer: Vec<Complex<f64>> = series.iter().map(|x| Complex::new(*x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let scale = 1.0 / n as f64;
    let half = n / 2;
    Ok(SpectrumResult {
        samples: n,
        dt,
        dc: buffer[0].re * scale,
        frequencies: (1..=half).map(|k| k as f64 / (n as f64 * dt)).collect(),
        magnitudes: (1..=half).map(|k| buffer[k].norm() * scale).collect(),
    })
}

/// `t,P` rows of a coincidence series.
pub fn series_csv(series: &[f64], dt: f64) -> String {
    let mut out = String::from("time_s,probability\n");
    for (i, v) in series.iter().enumerate() {
        writeln!(out, "{},{v}", i as f64 * dt).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct O(N^2) transform, independent of the FFT path.
    fn naive_magnitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let a = -TAU * (k * t) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                (re * re + im * im).sqrt() / n as f64
            })
            .collect()
    }

    #[test]
    fn constant_model_gives_constant_phases() {
        let base = PhaseVector::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        let trace = simulate_drift(&DriftModel::constant(base), 100.0, 5.0, 1).unwrap();
        assert_eq!(trace.len(), 20);
        assert!(trace.phases.iter().all(|p| *p == base));
    }

    #[test]
    fn single_sinusoid_trace() {
        let mut model = DriftModel::constant(PhaseVector::zero());
        model.sinusoids.push(PhaseSinusoid {
            core: 2,
            amplitude: 0.5,
            period: 240.0,
            offset: 0.0,
        });
        let trace = simulate_drift(&model, 4800.0, 5.0, 3).unwrap();
        for (t, phi) in trace.times().zip(&trace.phases) {
            assert!((phi.get(2) - 0.5 * (TAU * t / 240.0).sin()).abs() < 1e-12);
            assert_eq!(phi.get(0), 0.0);
        }
    }

    #[test]
    fn random_walk_increment_variance() {
        let rate = 2e-4;
        let dt = 5.0;
        let mut model = DriftModel::constant(PhaseVector::zero());
        model.walk_rates = [0.0, rate, 0.0, 0.0];
        let trace = simulate_drift(&model, 100_001.0 * dt, dt, 11).unwrap();
        let inc: Vec<f64> = trace.phases.windows(2).map(|w| w[1].get(1) - w[0].get(1)).collect();
        assert_eq!(inc.len(), 100_000);
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        // sample variance of 1e5 Gaussian draws: relative sd sqrt(2/1e5) ~ 0.45%
        assert!((var / (rate * dt) - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn drift_is_seed_deterministic() {
        let model = DriftModel::lab_default(5);
        let a = simulate_drift(&model, 3600.0, 5.0, 9).unwrap();
        let b = simulate_drift(&model, 3600.0, 5.0, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(DriftModel::lab_default(5), model);
    }

    #[test]
    fn rejects_bad_sampling() {
        let model = DriftModel::constant(PhaseVector::zero());
        assert!(simulate_drift(&model, 100.0, 0.0, 0).is_err());
        assert!(simulate_drift(&model, 100.0, -1.0, 0).is_err());
        assert!(simulate_drift(&model, 1.0, 5.0, 0).is_err());
    }

    #[test]
    fn series_selection_rules() {
        let trace = simulate_drift(&DriftModel::constant(PhaseVector::zero()), 50.0, 5.0, 0).unwrap();
        let s00 = coincidence_series(&trace, (0, 0)).unwrap();
        let s01 = coincidence_series(&trace, (0, 1)).unwrap();
        assert!(s00.iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert!(s01.iter().all(|v| v.abs() < 1e-15));
        assert!(coincidence_series(&trace, (0, 4)).is_err());
    }

    #[test]
    fn series_bounded_and_pi_periodic() {
        let model = DriftModel::lab_default(21);
        let trace = simulate_drift(&model, 2000.0, 5.0, 4).unwrap();
        let mut shifted = trace.clone();
        for p in shifted.phases.iter_mut() {
            *p = p.with(1, p.get(1) + PI);
        }
        for j in 0..4 {
            for k in 0..4 {
                let a = coincidence_series(&trace, (j, k)).unwrap();
                let b = coincidence_series(&shifted, (j, k)).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((-1e-15..=0.25 + 1e-12).contains(x));
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectrum_matches_naive_transform() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.1 + (i as f64 * 0.3).sin()).collect();
        let s = spectrum(&x, 2.0).unwrap();
        let naive = naive_magnitudes(&x);
        for (a, b) in s.magnitudes.iter().zip(&naive) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.dc - x.iter().sum::<f64>() / 100.0).abs() < 1e-12);
        assert!((s.frequencies[0] - 1.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_constant_and_short() {
        let s = spectrum(&[0.3; 64], 5.0).unwrap();
        assert!(s.magnitudes.iter().all(|m| *m < 1e-15));
        assert!((s.dc - 0.3).abs() < 1e-15);
        assert!(matches!(spectrum(&[0.0; 15], 5.0), Err(Error::SeriesTooShort { len: 15, .. })));
    }

    #[test]
    fn parseval_for_odd_and_even_lengths() {
        for n in [127usize, 128] {
            let x: Vec<f64> = (0..n).map(|i| ((i * i) % 7) as f64 - (i as f64 * 0.05).cos()).collect();
            let mean = x.iter().sum::<f64>() / n as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let s = spectrum(&x, 1.0).unwrap();
            assert!((s.total_power() / var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fringe_peak_location() {
        let x: Vec<f64> = (0..960).map(|i| (TAU * i as f64 * 5.0 / 240.0).cos()).collect();
        let s = spectrum(&x, 5.0).unwrap();
        let (f, _) = s.dominant().unwrap();
        assert!((f - 1.0 / 240.0).abs() < 1e-12);
    }
}
