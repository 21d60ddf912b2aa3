//! Optical elements: the four-core fiber beam splitter, per-core phase
//! plates, demultiplexer losses and the measurement bases built from them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{CoreMatrix, LocalUnitary, CORES};

/// Sign pattern `u_kj` of the ideal four-core splitter.
pub const SPLITTER_SIGNS: [[f64; CORES]; CORES] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Core phases that select the bases `X0`..`X3` behind the ideal splitter.
pub const X_BASIS_PHASES: [[f64; CORES]; 4] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.0, PI, FRAC_PI_2, FRAC_PI_2],
    [0.0, FRAC_PI_2, PI, FRAC_PI_2],
    [0.0, FRAC_PI_2, FRAC_PI_2, PI],
];

/// Transfer matrix of a 4x4 multi-core fiber beam splitter.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitterMatrix {
    unitary: LocalUnitary,
}

impl SplitterMatrix {
    /// Wraps a measured or hypothetical transfer matrix; it must be unitary.
    pub fn new(matrix: CoreMatrix) -> Result<Self> {
        Ok(SplitterMatrix {
            unitary: LocalUnitary::new(matrix)?,
        })
    }

    pub fn from_real(rows: &[[f64; CORES]; CORES]) -> Result<Self> {
        Ok(SplitterMatrix {
            unitary: LocalUnitary::from_real(rows)?,
        })
    }

    pub fn unitary(&self) -> &LocalUnitary {
        &self.unitary
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.unitary.matrix()[(row, col)]
    }
}

/// The balanced splitter `(1/2) u` with `u` the sign pattern above.
pub fn ideal_4cfbs() -> SplitterMatrix {
    let m = CoreMatrix::from_fn(|r, c| Complex64::new(SPLITTER_SIGNS[r][c] / 2.0, 0.0));
    SplitterMatrix {
        unitary: LocalUnitary::new(m).expect("ideal splitter is unitary"),
    }
}

/// Relative phase acquired in each core, in radians.
///
/// Values are stored as given; comparisons that matter physically are
/// made modulo 2 pi.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseVector([f64; CORES]);

impl PhaseVector {
    pub fn new(phases: [f64; CORES]) -> Result<Self> {
        if phases.iter().all(|p| p.is_finite()) {
            Ok(PhaseVector(phases))
        } else {
            Err(Error::param("phases", "phases must be finite"))
        }
    }

    pub fn zero() -> Self {
        PhaseVector([0.0; CORES])
    }

    /// Phase table of basis `X{index}`.
    pub fn x_basis(index: usize) -> Result<Self> {
        X_BASIS_PHASES
            .get(index)
            .map(|p| PhaseVector(*p))
            .ok_or_else(|| Error::UnknownBasis(format!("X{index}")))
    }

    pub fn values(&self) -> [f64; CORES] {
        self.0
    }

    pub fn get(&self, core: usize) -> f64 {
        self.0[core]
    }

    /// Each phase reduced to `[0, 2 pi)`.
    pub fn wrapped(&self) -> [f64; CORES] {
        self.0.map(|p| p.rem_euclid(TAU))
    }

    pub fn approx_eq_mod_2pi(&self, other: &PhaseVector, tol: f64) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| {
            let d = (a - b).rem_euclid(TAU);
            d.min(TAU - d) <= tol
        })
    }

    /// Every phase offset by the same constant.
    pub fn shifted(&self, global: f64) -> PhaseVector {
        PhaseVector(self.0.map(|p| p + global))
    }

    pub fn with(&self, core: usize, phase: f64) -> PhaseVector {
        let mut p = self.0;
        p[core] = phase;
        PhaseVector(p)
    }

    /// `diag(e^{i phi_0}, ..., e^{i phi_3})`.
    pub fn plate(&self) -> LocalUnitary {
        let m = CoreMatrix::from_fn(|r, c| {
            if r == c {
                Complex64::from_polar(1.0, self.0[r])
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        LocalUnitary::new(m).expect("phase plate is unitary")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasisName {
    Z,
    X(u8),
    Custom(String),
}

impl fmt::Display for BasisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisName::Z => write!(f, "Z"),
            BasisName::X(j) => write!(f, "X{j}"),
            BasisName::Custom(name) => write!(f, "{name}"),
        }
    }
}

impl std::str::FromStr for BasisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" => Ok(BasisName::Z),
            "X0" => Ok(BasisName::X(0)),
            "X1" => Ok(BasisName::X(1)),
            "X2" => Ok(BasisName::X(2)),
            "X3" => Ok(BasisName::X(3)),
            other => Err(Error::UnknownBasis(other.to_string())),
        }
    }
}

/// A local measurement: the unitary mapping the measured basis onto the
/// four detector outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    pub name: BasisName,
    /// Core phases in front of the splitter; `None` for the path basis.
    pub phases: Option<PhaseVector>,
    unitary: LocalUnitary,
}

impl MeasurementBasis {
    /// Path basis: each core goes straight to its own detector.
    pub fn z() -> Self {
        MeasurementBasis {
            name: BasisName::Z,
            phases: None,
            unitary: LocalUnitary::identity(),
        }
    }

    /// Phases `phases` applied in the cores, followed by `splitter`.
    pub fn interferometric(name: BasisName, splitter: &SplitterMatrix, phases: PhaseVector) -> Self {
        MeasurementBasis {
            name,
            phases: Some(phases),
            unitary: splitter.unitary().compose(&phases.plate()),
        }
    }

    pub fn x(index: usize) -> Result<Self> {
        Self::x_with_splitter(index, &ideal_4cfbs())
    }

    pub fn x_with_splitter(index: usize, splitter: &SplitterMatrix) -> Result<Self> {
        let phases = PhaseVector::x_basis(index)?;
        Ok(Self::interferometric(BasisName::X(index as u8), splitter, phases))
    }

    /// `Z, X0, X1, X2, X3` with the ideal splitter.
    pub fn standard() -> [MeasurementBasis; 5] {
        [
            Self::z(),
            Self::x(0).unwrap(),
            Self::x(1).unwrap(),
            Self::x(2).unwrap(),
            Self::x(3).unwrap(),
        ]
    }

    pub fn unitary(&self) -> &LocalUnitary {
        &self.unitary
    }

    /// Measured basis vector that lands on detector `outcome`.
    pub fn vector(&self, outcome: usize) -> [Complex64; CORES] {
        let m = self.unitary.matrix();
        std::array::from_fn(|core| m[(outcome, core)].conj())
    }
}

/// Looks up one of the five named bases with the ideal splitter.
pub fn basis(name: &str) -> Result<MeasurementBasis> {
    match name.parse::<BasisName>()? {
        BasisName::Z => Ok(MeasurementBasis::z()),
        BasisName::X(j) => MeasurementBasis::x(j as usize),
        BasisName::Custom(other) => Err(Error::UnknownBasis(other)),
    }
}

/// Per-core transmittance between the splitter outputs and the detectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttenuationMap {
    transmittance: [f64; CORES],
}

impl Default for AttenuationMap {
    fn default() -> Self {
        AttenuationMap {
            transmittance: [1.0; CORES],
        }
    }
}

impl AttenuationMap {
    pub fn transmittance(&self) -> [f64; CORES] {
        self.transmittance
    }

    /// Coincidence transmission for detectors `(j, k)`.
    pub fn factor(&self, j: usize, k: usize) -> f64 {
        self.transmittance[j] * self.transmittance[k]
    }

    pub fn apply(&self, rates: &[[f64; CORES]; CORES]) -> [[f64; CORES]; CORES] {
        std::array::from_fn(|j| std::array::from_fn(|k| rates[j][k] * self.factor(j, k)))
    }
}

/// Demultiplexer loss model from per-core transmittances in `[0, 1]`.
pub fn demux_loss(per_core_transmittance: [f64; CORES]) -> Result<AttenuationMap> {
    if let Some(bad) = per_core_transmittance
        .iter()
        .find(|t| !(0.0..=1.0).contains(*t))
    {
        return Err(Error::param(
            "demux_transmittance",
            format!("{bad} outside [0, 1]"),
        ));
    }
    Ok(AttenuationMap {
        transmittance: per_core_transmittance,
    })
}
