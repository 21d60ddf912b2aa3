//! Experiment configuration read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::devices::{ideal_4cfbs, demux_loss, BasisName, MeasurementBasis, PhaseVector, SplitterMatrix};
use crate::drift::{DriftModel, DEFAULT_DT, DEFAULT_DURATION};
use crate::error::{Error, Result};
use crate::linkbudget::LinkBudget;
use crate::measure::{CountModel, Table};
use crate::qcore::CORES;
use crate::source::SourceConfig;

pub const DEFAULT_INTEGRATION_TIME: f64 = 5.0;
pub const DEFAULT_COINCIDENCE_EFFICIENCY: f64 = 0.04;
pub const STANDARD_BASES: [&str; 5] = ["Z", "X0", "X1", "X2", "X3"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub measurement: MeasurementConfig,
    pub drift: DriftConfig,
    pub linkbudget: LinkBudgetConfig,
    pub output: OutputConfig,
}

/// Either one rate for every detector pair or a full 4 x 4 table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccidentalRate {
    Uniform(f64),
    PerPair(Table),
}

impl AccidentalRate {
    pub fn table(&self) -> Table {
        match self {
            AccidentalRate::Uniform(r) => [[*r; CORES]; CORES],
            AccidentalRate::PerPair(t) => *t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementConfig {
    /// Bases to simulate, by name; custom names refer to `custom_bases`.
    pub bases: Vec<String>,
    /// Seconds per basis.
    pub integration_time: f64,
    /// Fraction of emitted pairs registered as coincidences.
    pub coincidence_efficiency: f64,
    /// Accidental coincidences per second.
    pub accidental_rate: AccidentalRate,
    pub demux_transmittance: [f64; CORES],
    /// Real 4 x 4 splitter matrix replacing the ideal one.
    pub splitter: Option<[[f64; CORES]; CORES]>,
    /// Extra bases given by their core phases in radians.
    pub custom_bases: BTreeMap<String, [f64; CORES]>,
    pub seed: u64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            bases: STANDARD_BASES.iter().map(|s| s.to_string()).collect(),
            integration_time: DEFAULT_INTEGRATION_TIME,
            coincidence_efficiency: DEFAULT_COINCIDENCE_EFFICIENCY,
            accidental_rate: AccidentalRate::Uniform(0.0),
            demux_transmittance: [1.0; CORES],
            splitter: None,
            custom_bases: BTreeMap::new(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftConfig {
    /// Seconds.
    pub duration: f64,
    pub dt: f64,
    /// Detector pair whose coincidence rate is analysed.
    pub pair: [usize; 2],
    /// Explicit model; when absent a random default model is drawn from the seed.
    pub model: Option<DriftModel>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
            pair: [0, 0],
            model: None,
        }
    }
}

impl DriftConfig {
    pub fn model(&self, seed: u64) -> DriftModel {
        self.model.clone().unwrap_or_else(|| DriftModel::lab_default(seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudgetConfig {
    #[serde(flatten)]
    pub budget: LinkBudget,
    /// Distances, km, at which the rate is tabulated.
    pub distances: Vec<f64>,
}

impl Default for LinkBudgetConfig {
    fn default() -> Self {
        LinkBudgetConfig {
            budget: LinkBudget::default(),
            distances: (0..=20).map(|i| i as f64 * 5.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        let m = &self.measurement;
        if m.bases.is_empty() {
            return Err(Error::param("measurement.bases", "at least one basis is required"));
        }
        for name in m.custom_bases.keys() {
            if STANDARD_BASES.contains(&name.as_str()) {
                return Err(Error::param("measurement.custom_bases", format!("`{name}` shadows a standard basis")));
            }
        }
        for (i, name) in m.bases.iter().enumerate() {
            if m.bases[..i].contains(name) {
                return Err(Error::param("measurement.bases", format!("`{name}` listed twice")));
            }
        }
        if !(m.coincidence_efficiency.is_finite() && (0.0..=1.0).contains(&m.coincidence_efficiency)) {
            return Err(Error::param("measurement.coincidence_efficiency", "must lie in [0, 1]"));
        }
        self.count_model()?.validate()?;
        self.measurement_bases()?;
        if let Some(model) = &self.drift.model {
            model.validate()?;
        }
        if self.drift.pair.iter().any(|c| *c >= CORES) {
            return Err(Error::param("drift.pair", format!("{:?} outside 0..=3", self.drift.pair)));
        }
        if !(self.drift.dt.is_finite() && self.drift.dt > 0.0) {
            return Err(Error::param("drift.dt", "must be > 0"));
        }
        if !(self.drift.duration.is_finite() && self.drift.duration >= self.drift.dt) {
            return Err(Error::param("drift.duration", "must be >= drift.dt"));
        }
        self.linkbudget.budget.validate()?;
        if self.linkbudget.distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::param("linkbudget.distances", "distances must be >= 0"));
        }
        Ok(())
    }

    pub fn splitter(&self) -> Result<SplitterMatrix> {
        match &self.measurement.splitter {
            Some(rows) => SplitterMatrix::from_real(rows),
            None => Ok(ideal_4cfbs()),
        }
    }

    /// Resolves the configured basis names in order.
    pub fn measurement_bases(&self) -> Result<Vec<MeasurementBasis>> {
        let splitter = self.splitter()?;
        self.measurement
            .bases
            .iter()
            .map(|name| {
                if let Some(phases) = self.measurement.custom_bases.get(name) {
                    let phases = PhaseVector::new(*phases)?;
                    return Ok(MeasurementBasis::interferometric(
                        BasisName::Custom(name.clone()),
                        &splitter,
                        phases,
                    ));
                }
                match name.parse::<BasisName>()? {
                    BasisName::Z => Ok(MeasurementBasis::z()),
                    BasisName::X(j) => MeasurementBasis::x_with_splitter(j as usize, &splitter),
                    BasisName::Custom(other) => Err(Error::UnknownBasis(other)),
                }
            })
            .collect()
    }

    /// Detected pair rate: emitted pairs times the coincidence efficiency.
    pub fn detected_pair_rate(&self) -> f64 {
        self.source.emitted_pair_rate() * self.measurement.coincidence_efficiency
    }

    pub fn count_model(&self) -> Result<CountModel> {
        let m = &self.measurement;
        let mut model = CountModel::new(self.detected_pair_rate(), m.integration_time);
        model.accidental_rate = m.accidental_rate.table();
        model.attenuation = demux_loss(m.demux_transmittance)?;
        model.validate()?;
        Ok(model)
    }
}
