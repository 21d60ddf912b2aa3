//! Dense linear algebra over the four core states `|0>..|3>` and the
//! sixteen-dimensional two-photon space `|j>_A (x) |k>_B`.
//!
//! Two-photon amplitudes are indexed row-major over `(j, k)`, so the pair
//! `|j k>` lives at index `4 * j + k`. This matches the Kronecker product
//! `U_A (x) U_B` with photon A as the slow index.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::JointDistribution;

/// Number of fiber cores (local dimension of each photon).
pub const CORES: usize = 4;
/// Dimension of the two-photon space.
pub const PAIR_DIM: usize = CORES * CORES;

pub const UNITARITY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

pub type CoreMatrix = SMatrix<Complex64, CORES, CORES>;
pub type PairMatrix = SMatrix<Complex64, PAIR_DIM, PAIR_DIM>;
pub type PairVector = SVector<Complex64, PAIR_DIM>;

#[inline]
pub fn pair_index(j: usize, k: usize) -> usize {
    CORES * j + k
}

/// Label of one fiber core, and of the logical basis state `|j>` it encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoreLabel(u8);

impl CoreLabel {
    pub fn new(index: usize) -> Result<Self> {
        if index < CORES {
            Ok(CoreLabel(index as u8))
        } else {
            Err(Error::param("core", format!("index {index} outside 0..=3")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = CoreLabel> {
        (0..CORES as u8).map(CoreLabel)
    }
}

impl TryFrom<usize> for CoreLabel {
    type Error = Error;

    fn try_from(index: usize) -> Result<Self> {
        CoreLabel::new(index)
    }
}

/// Largest entrywise deviation of `m^dagger m` from the identity.
pub fn unitarity_deviation(m: &CoreMatrix) -> f64 {
    let product = m.adjoint() * m;
    let mut worst = 0.0_f64;
    for r in 0..CORES {
        for c in 0..CORES {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((product[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A single-photon unitary acting on the four core modes.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    matrix: CoreMatrix,
}

impl LocalUnitary {
    pub fn new(matrix: CoreMatrix) -> Result<Self> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonUnitary {
                deviation: f64::INFINITY,
            });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(LocalUnitary { matrix })
    }

    pub fn from_real(rows: &[[f64; CORES]; CORES]) -> Result<Self> {
        Self::new(CoreMatrix::from_fn(|r, c| Complex64::new(rows[r][c], 0.0)))
    }

    pub fn identity() -> Self {
        LocalUnitary {
            matrix: CoreMatrix::identity(),
        }
    }

    pub fn matrix(&self) -> &CoreMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> LocalUnitary {
        LocalUnitary {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self * other`, i.e. `other` is applied first.
    pub fn compose(&self, other: &LocalUnitary) -> LocalUnitary {
        LocalUnitary {
            matrix: self.matrix * other.matrix,
        }
    }

    /// Two-photon operator `self (x) other`.
    pub fn kron(&self, other: &LocalUnitary) -> PairMatrix {
        PairMatrix::from_fn(|r, c| {
            let (ja, kb) = (r / CORES, r % CORES);
            let (jc, kc) = (c / CORES, c % CORES);
            self.matrix[(ja, jc)] * other.matrix[(kb, kc)]
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Pure(PairVector),
    Mixed(PairMatrix),
}

/// State of the photon pair over the sixteen two-core basis states.
///
/// Constructors check the physical invariants: unit norm for pure states;
/// Hermiticity, unit trace and a non-negative spectrum (down to
/// [`EIGENVALUE_FLOOR`]) for density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonState {
    repr: Repr,
}

impl TwoPhotonState {
    pub fn pure(amplitudes: PairVector) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "amplitudes have squared norm {norm_sq}, expected 1"
            )));
        }
        Ok(TwoPhotonState {
            repr: Repr::Pure(amplitudes),
        })
    }

    /// Pure state from a `c[j][k]` table of amplitudes.
    pub fn from_amplitudes(c: &[[Complex64; CORES]; CORES]) -> Result<Self> {
        Self::pure(PairVector::from_fn(|i, _| c[i / CORES][i % CORES]))
    }

    pub fn mixed(rho: PairMatrix) -> Result<Self> {
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite density matrix entry".into()));
        }
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {trace}")));
        }
        let lowest = SymmetricEigen::new(rho)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if lowest < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {lowest:.3e}"
            )));
        }
        Ok(TwoPhotonState {
            repr: Repr::Mixed(rho),
        })
    }

    pub fn maximally_mixed() -> Self {
        TwoPhotonState {
            repr: Repr::Mixed(PairMatrix::identity() / Complex64::new(PAIR_DIM as f64, 0.0)),
        }
    }

    /// Product basis state `|j k>`.
    pub fn basis(j: CoreLabel, k: CoreLabel) -> Self {
        let mut amps = PairVector::zeros();
        amps[pair_index(j.index(), k.index())] = Complex64::new(1.0, 0.0);
        TwoPhotonState {
            repr: Repr::Pure(amps),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&PairVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    /// Density operator; for a pure state this is `|psi><psi|`.
    pub fn density(&self) -> PairMatrix {
        match &self.repr {
            Repr::Pure(v) => v * v.adjoint(),
            Repr::Mixed(rho) => *rho,
        }
    }

    /// Matrix element `<j k| rho |l m>`.
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        let (r, c) = (pair_index(bra.0, bra.1), pair_index(ket.0, ket.1));
        match &self.repr {
            Repr::Pure(v) => v[r] * v[c].conj(),
            Repr::Mixed(rho) => rho[(r, c)],
        }
    }

    /// Probability weight of each pair basis state in the computational basis.
    fn diagonal(&self) -> [f64; PAIR_DIM] {
        let mut out = [0.0; PAIR_DIM];
        match &self.repr {
            Repr::Pure(v) => {
                for (o, z) in out.iter_mut().zip(v.iter()) {
                    *o = z.norm_sqr();
                }
            }
            Repr::Mixed(rho) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = rho[(i, i)].re;
                }
            }
        }
        out
    }
}

/// Applies `U_A (x) U_B` to the pair. Pure states stay pure.
pub fn tensor_apply(
    a: &LocalUnitary,
    b: &LocalUnitary,
    state: &TwoPhotonState,
) -> TwoPhotonState {
    let u = a.kron(b);
    let repr = match &state.repr {
        Repr::Pure(v) => Repr::Pure(u * v),
        Repr::Mixed(rho) => Repr::Mixed(u * rho * u.adjoint()),
    };
    TwoPhotonState { repr }
}

/// Joint outcome distribution when photon A is measured in `basis_a` and
/// photon B in `basis_b`.
///
/// A basis is given as the unitary that maps the measured basis onto the
/// detector outcomes, so `P_jk = |<j k| (U_A (x) U_B) |psi>|^2`.
pub fn born_joint_distribution(
    state: &TwoPhotonState,
    basis_a: &LocalUnitary,
    basis_b: &LocalUnitary,
) -> JointDistribution {
    let rotated = tensor_apply(basis_a, basis_b, state);
    let diag = rotated.diagonal();
    let mut p = [[0.0; CORES]; CORES];
    for (i, w) in diag.iter().enumerate() {
        // rounding can leave -1e-17 on an exactly dark outcome
        p[i / CORES][i % CORES] = w.max(0.0);
    }
    JointDistribution::exact_unchecked(p)
}

/// Fidelity `<psi| rho |psi>` of `state` with the pure `target`.
pub fn fidelity_direct(state: &TwoPhotonState, target: &TwoPhotonState) -> Result<f64> {
    let psi = target
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("fidelity target must be a pure state".into()))?;
    let value = match &state.repr {
        Repr::Pure(v) => psi.dotc(v).norm_sqr(),
        Repr::Mixed(rho) => psi.dotc(&(rho * psi)).re,
    };
    Ok(value.clamp(0.0, 1.0))
}
