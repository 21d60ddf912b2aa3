//! Coincidence probabilities, photon-count sampling and estimation of joint
//! distributions from accidental-corrected counts.
//!
//! Estimated distributions carry the full 16x16 covariance of the normalized
//! probabilities, obtained by first-order propagation of Poisson errors on
//! the raw counts. Downstream quantities that are linear (fidelity) or smooth
//! (entropies, Bhattacharyya) in the probabilities propagate through it.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::devices::{ideal_4cfbs, AttenuationMap, PhaseVector, SplitterMatrix};
use crate::error::{Error, Result};
use crate::qcore::{pair_index, CORES, PAIR_DIM};

pub type Table = [[f64; CORES]; CORES];
pub type Covariance = [[f64; PAIR_DIM]; PAIR_DIM];

/// Tolerance on the total probability of an exact distribution.
pub const EXACT_SUM_TOL: f64 = 1e-9;

/// 4x4 table of coincidence probabilities `P_jk` (photon A at `j`, photon B
/// at `k`) with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    p: Table,
    sigma: Table,
    covariance: Option<Box<Covariance>>,
    sample_size: Option<f64>,
}

impl JointDistribution {
    /// Exact distribution with zero error bars.
    pub fn exact(p: Table) -> Result<Self> {
        let mut total = 0.0;
        for (j, row) in p.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidState(format!("P[{j}][{k}] = {v} is not a probability")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > EXACT_SUM_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Self::exact_unchecked(p))
    }

    pub(crate) fn exact_unchecked(p: Table) -> Self {
        JointDistribution {
            p,
            sigma: [[0.0; CORES]; CORES],
            covariance: None,
            sample_size: None,
        }
    }

    fn estimated(p: Table, covariance: Box<Covariance>, sample_size: f64) -> Self {
        let sigma = std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let i = pair_index(j, k);
                covariance[i][i].max(0.0).sqrt()
            })
        });
        JointDistribution {
            p,
            sigma,
            covariance: Some(covariance),
            sample_size: Some(sample_size),
        }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.p[j][k]
    }

    pub fn probabilities(&self) -> &Table {
        &self.p
    }

    pub fn sigma(&self) -> &Table {
        &self.sigma
    }

    pub fn covariance(&self) -> Option<&Covariance> {
        self.covariance.as_deref()
    }

    /// Total corrected counts behind an estimated table.
    pub fn sample_size(&self) -> Option<f64> {
        self.sample_size
    }

    pub fn is_exact(&self) -> bool {
        self.covariance.is_none()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Outcome distribution of photon A (row sums).
    pub fn marginal_a(&self) -> [f64; CORES] {
        self.p.map(|row| row.iter().sum())
    }

    /// Outcome distribution of photon B (column sums).
    pub fn marginal_b(&self) -> [f64; CORES] {
        std::array::from_fn(|k| self.p.iter().map(|row| row[k]).sum())
    }

    /// Same table with the roles of the two photons exchanged.
    pub fn transposed(&self) -> JointDistribution {
        let p = std::array::from_fn(|j| std::array::from_fn(|k| self.p[k][j]));
        match &self.covariance {
            None => Self::exact_unchecked(p),
            Some(cov) => {
                let swap = |i: usize| pair_index(i % CORES, i / CORES);
                let mut t = Box::new([[0.0; PAIR_DIM]; PAIR_DIM]);
                for a in 0..PAIR_DIM {
                    for b in 0..PAIR_DIM {
                        t[a][b] = cov[swap(a)][swap(b)];
                    }
                }
                Self::estimated(p, t, self.sample_size.unwrap_or(0.0))
            }
        }
    }

    pub fn flat(&self) -> [f64; PAIR_DIM] {
        std::array::from_fn(|i| self.p[i / CORES][i % CORES])
    }

    /// Variance of `sum_jk g_jk P_jk` under the table's covariance.
    pub fn variance_of(&self, gradient: &Table) -> f64 {
        let Some(cov) = &self.covariance else {
            return 0.0;
        };
        let g: [f64; PAIR_DIM] = std::array::from_fn(|i| gradient[i / CORES][i % CORES]);
        let mut var = 0.0;
        for a in 0..PAIR_DIM {
            if g[a] == 0.0 {
                continue;
            }
            for b in 0..PAIR_DIM {
                var += g[a] * cov[a][b] * g[b];
            }
        }
        var.max(0.0)
    }

    /// `j,k,P,sigma` rows for plotting and inspection.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("j,k,P,sigma\n");
        for j in 0..CORES {
            for k in 0..CORES {
                writeln!(out, "{j},{k},{},{}", self.p[j][k], self.sigma[j][k]).unwrap();
            }
        }
        out
    }
}

/// Coincidence probabilities of the ideal source state behind the balanced
/// splitter, with both photons of a pair sharing core `m` and therefore
/// picking up the phase `2 phi_m`.
pub fn physical_distribution(phases: &PhaseVector) -> JointDistribution {
    physical_distribution_with(&ideal_4cfbs(), phases)
}

/// Co-propagation model for an arbitrary (unitary) splitter `S`:
/// `P_jk = |sum_m (1/2) S_jm S_km e^{2 i phi_m}|^2`.
pub fn physical_distribution_with(splitter: &SplitterMatrix, phases: &PhaseVector) -> JointDistribution {
    let pair_phase: [Complex64; CORES] =
        std::array::from_fn(|m| Complex64::from_polar(1.0, 2.0 * phases.get(m)));
    let p = std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let amp: Complex64 = (0..CORES)
                .map(|m| splitter.entry(j, m) * splitter.entry(k, m) * pair_phase[m] * 0.5)
                .sum();
            amp.norm_sqr()
        })
    });
    JointDistribution::exact_unchecked(p)
}

/// Parameters of one counting run.
#[derive(Clone, Debug, PartialEq)]
pub struct CountModel {
    /// Detected pair rate, pairs per second, before demultiplexer loss.
    pub pair_rate: f64,
    /// Seconds.
    pub integration_time: f64,
    /// Accidental coincidence rate for each detector pair, counts per second.
    pub accidental_rate: Table,
    pub attenuation: AttenuationMap,
}

impl CountModel {
    pub fn new(pair_rate: f64, integration_time: f64) -> Self {
        CountModel {
            pair_rate,
            integration_time,
            accidental_rate: [[0.0; CORES]; CORES],
            attenuation: AttenuationMap::default(),
        }
    }

    pub fn with_uniform_accidentals(mut self, rate: f64) -> Self {
        self.accidental_rate = [[rate; CORES]; CORES];
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pair_rate", self.pair_rate), ("integration_time", self.integration_time)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("{v} must be finite and >= 0")));
            }
        }
        if self.accidental_rate.iter().flatten().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::param("accidental_rate", "rates must be finite and >= 0"));
        }
        Ok(())
    }

    /// Expected raw coincidences for each detector pair.
    pub fn expected_counts(&self, p: &JointDistribution) -> Table {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let signal = p.get(j, k) * self.pair_rate * self.integration_time * self.attenuation.factor(j, k);
                signal + self.accidental_rate[j][k] * self.integration_time
            })
        })
    }
}

/// Deterministic generator for stream `stream` of seed `seed`.
///
/// Different streams of one seed are independent, so replicates and bases can
/// be sampled in any order or concurrently with reproducible results.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Raw coincidence counts `C_jk` with their accidental estimates `a_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountRecord {
    pub counts: [[u64; CORES]; CORES],
    pub accidentals: Table,
    /// Seconds; unknown for tables read from disk.
    pub integration_time: Option<f64>,
}

/// Accidental-corrected counts `C - a`, clamped at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectedCounts {
    pub values: Table,
    pub clamped: [[bool; CORES]; CORES],
}

impl CorrectedCounts {
    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().flatten().any(|c| *c)
    }
}

impl CountRecord {
    pub fn new(counts: [[u64; CORES]; CORES], accidentals: Table) -> Self {
        CountRecord {
            counts,
            accidentals,
            integration_time: None,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn corrected(&self) -> CorrectedCounts {
        let mut values = [[0.0; CORES]; CORES];
        let mut clamped = [[false; CORES]; CORES];
        for j in 0..CORES {
            for k in 0..CORES {
                let c = self.counts[j][k] as f64 - self.accidentals[j][k];
                if c < 0.0 {
                    clamped[j][k] = true;
                } else {
                    values[j][k] = c;
                }
            }
        }
        CorrectedCounts { values, clamped }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("j,k,C,a\n");
        for j in 0..CORES {
            for k in 0..CORES {
                writeln!(out, "{j},{k},{},{}", self.counts[j][k], self.accidentals[j][k]).unwrap();
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    /// Parses the `j,k,C,a` table: one header line, then exactly one row for
    /// each of the sixteen detector pairs, in any order.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let table_err = |line: u64, message: String| Error::Table {
            path: origin.to_string(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| table_err(1, format!("unreadable header: {e}")))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["j", "k", "C", "a"] {
            return Err(table_err(1, format!("expected header `j,k,C,a`, found `{}`", names.join(","))));
        }

        let mut counts = [[0u64; CORES]; CORES];
        let mut accidentals = [[0.0; CORES]; CORES];
        let mut seen = [[false; CORES]; CORES];
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                table_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |idx: usize| record.get(idx).unwrap_or("");
            let index = |idx: usize, name: &str| -> Result<usize> {
                field(idx)
                    .parse::<usize>()
                    .ok()
                    .filter(|v| *v < CORES)
                    .ok_or_else(|| table_err(line, format!("column `{name}`: expected 0..=3, found `{}`", field(idx))))
            };
            let j = index(0, "j")?;
            let k = index(1, "k")?;
            let c = field(2)
                .parse::<u64>()
                .map_err(|_| table_err(line, format!("column `C`: expected a nonnegative integer, found `{}`", field(2))))?;
            let a = field(3)
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite() && *a >= 0.0)
                .ok_or_else(|| table_err(line, format!("column `a`: expected a nonnegative number, found `{}`", field(3))))?;
            if seen[j][k] {
                return Err(table_err(line, format!("duplicate row for j={j}, k={k}")));
            }
            seen[j][k] = true;
            counts[j][k] = c;
            accidentals[j][k] = a;
        }
        for j in 0..CORES {
            for k in 0..CORES {
                if !seen[j][k] {
                    return Err(table_err(0, format!("missing row for j={j}, k={k}")));
                }
            }
        }
        Ok(CountRecord::new(counts, accidentals))
    }
}

/// Draws `C_jk ~ Poisson(expected_jk)` for every detector pair.
pub fn sample_counts<R: Rng + ?Sized>(p: &JointDistribution, model: &CountModel, rng: &mut R) -> CountRecord {
    let expected = model.expected_counts(p);
    let mut counts = [[0u64; CORES]; CORES];
    for j in 0..CORES {
        for k in 0..CORES {
            let mean = expected[j][k];
            counts[j][k] = if mean > 0.0 {
                let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
                draw as u64
            } else {
                0
            };
        }
    }
    let accidentals = std::array::from_fn(|j| std::array::from_fn(|k| model.accidental_rate[j][k] * model.integration_time));
    CountRecord {
        counts,
        accidentals,
        integration_time: Some(model.integration_time),
    }
}

/// Normalized distribution of the accidental-corrected counts.
///
/// Each raw count carries Poisson variance `C_jk`; accidentals are taken as
/// known. Clamped entries contribute neither probability nor variance.
pub fn estimate_distribution(counts: &CountRecord) -> Result<JointDistribution> {
    let corrected = counts.corrected();
    let total: f64 = corrected.values.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::Estimation(format!(
            "corrected coincidence counts sum to {total} (raw total {})",
            counts.total()
        )));
    }
    let p: Table = corrected.values.map(|row| row.map(|c| c / total));
    let variance: [f64; PAIR_DIM] = std::array::from_fn(|i| {
        let (j, k) = (i / CORES, i % CORES);
        if corrected.clamped[j][k] {
            0.0
        } else {
            counts.counts[j][k] as f64
        }
    });
    let flat: [f64; PAIR_DIM] = std::array::from_fn(|i| p[i / CORES][i % CORES]);

    // dP_a/dc_c = (delta_ac - P_a) / T
    let mut cov = Box::new([[0.0; PAIR_DIM]; PAIR_DIM]);
    let t2 = total * total;
    for a in 0..PAIR_DIM {
        for b in a..PAIR_DIM {
            let mut s = 0.0;
            for (c, var) in variance.iter().enumerate() {
                if *var == 0.0 {
                    continue;
                }
                let da = if a == c { 1.0 - flat[a] } else { -flat[a] };
                let db = if b == c { 1.0 - flat[b] } else { -flat[b] };
                s += da * db * var;
            }
            cov[a][b] = s / t2;
            cov[b][a] = s / t2;
        }
    }
    Ok(JointDistribution::estimated(p, cov, total))
}
