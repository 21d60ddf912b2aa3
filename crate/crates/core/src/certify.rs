//! Entanglement certification from the five joint distributions measured in
//! `Z` and `X0`..`X3`.
//!
//! All figures of merit are either linear in the table entries (fidelity) or
//! smooth functions of them (entropies, Bhattacharyya coefficient); their
//! errors come from the gradient contracted with each table's covariance.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::devices::PhaseVector;
use crate::error::{Error, Result};
use crate::measure::{physical_distribution, JointDistribution, Table};
use crate::qcore::CORES;

/// `log2 D` for four-dimensional subsystems.
pub const LOG2_DIM: f64 = 2.0;
/// Fidelity above which the Schmidt number must be 4.
pub const SCHMIDT_THRESHOLD: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, sigma: 0.0 }
    }
}

/// An ordering `(alpha, beta, gamma, delta)` of the four detectors; the
/// correlation function treats `{alpha, beta}` and `{gamma, delta}` as the
/// two outcome groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grouping([usize; CORES]);

impl Grouping {
    pub fn new(order: [usize; CORES]) -> Result<Self> {
        let mut seen = [false; CORES];
        for &i in &order {
            if i >= CORES || seen[i] {
                return Err(Error::BadGrouping(order));
            }
            seen[i] = true;
        }
        Ok(Grouping(order))
    }

    pub fn order(&self) -> [usize; CORES] {
        self.0
    }

    fn group_sign(&self, detector: usize) -> f64 {
        if self.0[0] == detector || self.0[1] == detector {
            1.0
        } else {
            -1.0
        }
    }
}

/// Groupings that isolate the coherences `(00,11)+(22,33)`, `(00,22)+(11,33)`
/// and `(00,33)+(11,22)`.
pub const COHERENCE_GROUPINGS: [[usize; CORES]; 3] = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];

/// Which variant of the correlation sum to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationForm {
    /// Within-group probabilities minus all eight distinct cross-group
    /// probabilities.
    Symmetric,
    /// The cross terms `P_ag, P_ad, P_gb, P_db` counted twice each. Equal to
    /// the symmetric form on symmetric tables only.
    Printed,
}

/// Weights `w_jk` with `C = sum_jk w_jk P_jk`.
pub fn correlation_weights(grouping: &Grouping, form: CorrelationForm) -> Table {
    let [a, b, g, d] = grouping.0;
    match form {
        CorrelationForm::Symmetric => {
            std::array::from_fn(|j| std::array::from_fn(|k| grouping.group_sign(j) * grouping.group_sign(k)))
        }
        CorrelationForm::Printed => {
            let mut w = [[0.0; CORES]; CORES];
            for (x, y) in [(a, a), (a, b), (b, a), (b, b), (g, g), (g, d), (d, g), (d, d)] {
                w[x][y] += 1.0;
            }
            for (x, y) in [(a, g), (a, d), (g, b), (d, b)] {
                w[x][y] -= 2.0;
            }
            w
        }
    }
}

fn contract(w: &Table, p: &JointDistribution) -> f64 {
    let mut s = 0.0;
    for j in 0..CORES {
        for k in 0..CORES {
            s += w[j][k] * p.get(j, k);
        }
    }
    s
}

/// Correlation of the two-outcome-group observable on both photons.
pub fn correlation(p: &JointDistribution, grouping: &Grouping) -> f64 {
    correlation_with_form(p, grouping, CorrelationForm::Symmetric)
}

pub fn correlation_with_form(p: &JointDistribution, grouping: &Grouping, form: CorrelationForm) -> f64 {
    contract(&correlation_weights(grouping, form), p)
}

/// Sign of basis `X{basis}` in the combination for coherence pair `pair`.
///
/// For `pair = g` (grouping `COHERENCE_GROUPINGS[g]`, partner core `g + 1` of
/// core 0) the bases `X0` and `X{g+1}` measure `sigma_x (x) sigma_x` on both
/// sub-pairs and the other two measure `sigma_y (x) sigma_y`.
fn coherence_sign(basis: usize, pair: usize) -> f64 {
    if basis == 0 || basis == pair + 1 {
        1.0
    } else {
        -1.0
    }
}

/// `2 Re<00|rho|11> + 2 Re<22|rho|33>`, `2 Re<00|rho|22> + 2 Re<11|rho|33>` and
/// `2 Re<00|rho|33> + 2 Re<11|rho|22>` from the four `X` tables.
pub fn coherence_sums(x: [&JointDistribution; 4]) -> [f64; 3] {
    std::array::from_fn(|pair| {
        let grouping = Grouping(COHERENCE_GROUPINGS[pair]);
        (0..4)
            .map(|basis| coherence_sign(basis, pair) * correlation(x[basis], &grouping))
            .sum::<f64>()
            / 4.0
    })
}

/// Fidelity-functional weights for table `X{basis}`.
fn fidelity_x_weights(basis: usize) -> Table {
    let mut w = [[0.0; CORES]; CORES];
    for (pair, order) in COHERENCE_GROUPINGS.iter().enumerate() {
        let cw = correlation_weights(&Grouping(*order), CorrelationForm::Symmetric);
        let s = coherence_sign(basis, pair) / 16.0;
        for j in 0..CORES {
            for k in 0..CORES {
                w[j][k] += s * cw[j][k];
            }
        }
    }
    w
}

/// Fidelity with `(|00> + |11> + |22> + |33>)/2` from the five measured tables.
///
/// `F = (1/4) [sum_j P^Z_jj + sum of the three coherence sums]`.
pub fn fidelity_mub(z: &JointDistribution, x: [&JointDistribution; 4]) -> Estimate {
    let z_weights: Table = std::array::from_fn(|j| std::array::from_fn(|k| if j == k { 0.25 } else { 0.0 }));
    let mut value = contract(&z_weights, z);
    let mut var = z.variance_of(&z_weights);
    for (basis, table) in x.iter().enumerate() {
        let w = fidelity_x_weights(basis);
        value += contract(&w, table);
        var += table.variance_of(&w);
    }
    Estimate {
        value,
        sigma: var.sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchmidtCertificate {
    pub fidelity: f64,
    pub threshold: f64,
    /// `F - 3/4`.
    pub margin: f64,
    pub certified: bool,
    /// Schmidt number implied by the witness, when it fires.
    pub certified_dimension: Option<u8>,
}

/// `F > 3/4` rules out every state of Schmidt number 3 or less.
pub fn schmidt_witness(fidelity: f64) -> SchmidtCertificate {
    let certified = fidelity > SCHMIDT_THRESHOLD;
    SchmidtCertificate {
        fidelity,
        threshold: SCHMIDT_THRESHOLD,
        margin: fidelity - SCHMIDT_THRESHOLD,
        certified,
        certified_dimension: certified.then_some(CORES as u8),
    }
}

/// Which party's outcome is conditioned on the other's.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SteeringDirection {
    /// `S_BA`: entropies of B given A, certifying steering from A to B.
    #[serde(rename = "B|A")]
    BGivenA,
    /// `S_AB`: entropies of A given B, certifying steering from B to A.
    #[serde(rename = "A|B")]
    AGivenB,
}

impl SteeringDirection {
    pub fn label(self) -> &'static str {
        match self {
            SteeringDirection::BGivenA => "B|A",
            SteeringDirection::AGivenB => "A|B",
        }
    }
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|x| xlog2x(*x)).sum::<f64>()
}

fn conditioning_marginal(p: &JointDistribution, direction: SteeringDirection) -> [f64; CORES] {
    match direction {
        SteeringDirection::BGivenA => p.marginal_a(),
        SteeringDirection::AGivenB => p.marginal_b(),
    }
}

/// `H(J|K) = H(J, K) - H(K)`, with K the conditioning party.
pub fn conditional_entropy(p: &JointDistribution, direction: SteeringDirection) -> f64 {
    shannon_entropy(&p.flat()) - shannon_entropy(&conditioning_marginal(p, direction))
}

fn conditional_entropy_gradient(p: &JointDistribution, direction: SteeringDirection) -> Table {
    let m = conditioning_marginal(p, direction);
    std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let pjk = p.get(j, k);
            let mk = match direction {
                SteeringDirection::BGivenA => m[j],
                SteeringDirection::AGivenB => m[k],
            };
            if pjk > 0.0 {
                (mk / pjk).log2()
            } else {
                0.0
            }
        })
    })
}

/// First-order downward bias of the plug-in conditional entropy,
/// `(m_JK - m_K) / (2 N ln 2)` with `m` the occupied bins. Zero for exact tables.
pub fn conditional_entropy_bias(p: &JointDistribution, direction: SteeringDirection) -> f64 {
    let Some(n) = p.sample_size() else {
        return 0.0;
    };
    let joint_bins = p.flat().iter().filter(|v| **v > 0.0).count();
    let marginal_bins = conditioning_marginal(p, direction).iter().filter(|v| **v > 0.0).count();
    (joint_bins.saturating_sub(marginal_bins)) as f64 / (2.0 * n * LN_2)
}

/// Entropic steering value `H(P_J|P_K) + H(Q_J|Q_K) - log2 D` for a pair of
/// mutually unbiased bases `P` and `Q`. Negative values certify steering.
pub fn steering_s(p: &JointDistribution, q: &JointDistribution, direction: SteeringDirection) -> Estimate {
    let value = conditional_entropy(p, direction) + conditional_entropy(q, direction) - LOG2_DIM;
    let var = p.variance_of(&conditional_entropy_gradient(p, direction))
        + q.variance_of(&conditional_entropy_gradient(q, direction));
    Estimate {
        value,
        sigma: var.sqrt(),
    }
}

/// `sum_i sqrt(p_i q_i)`.
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different outcome sets");
    p.iter().zip(q).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum::<f64>().min(1.0)
}

/// Bhattacharyya coefficient of a measured table against a theoretical one;
/// the error comes from the measured table only.
pub fn bhattacharyya_tables(measured: &JointDistribution, theory: &JointDistribution) -> Estimate {
    let value = bhattacharyya(&measured.flat(), &theory.flat());
    let gradient: Table = std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let (p, q) = (measured.get(j, k), theory.get(j, k));
            if p > 0.0 {
                (q / p).sqrt() / 2.0
            } else {
                0.0
            }
        })
    });
    Estimate {
        value,
        sigma: measured.variance_of(&gradient).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginalEntropies {
    pub a: Estimate,
    pub b: Estimate,
}

fn marginal_entropy(p: &JointDistribution, marginal: [f64; CORES], by_row: bool) -> Estimate {
    let value = shannon_entropy(&marginal);
    let gradient: Table = std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let m = if by_row { marginal[j] } else { marginal[k] };
            if m > 0.0 {
                -m.log2()
            } else {
                0.0
            }
        })
    });
    Estimate {
        value,
        sigma: p.variance_of(&gradient).sqrt(),
    }
}

/// Entropies, in bits, of each photon's outcome distribution.
pub fn marginal_entropies(p: &JointDistribution) -> MarginalEntropies {
    MarginalEntropies {
        a: marginal_entropy(p, p.marginal_a(), true),
        b: marginal_entropy(p, p.marginal_b(), false),
    }
}

/// The five tables entering a certification, with a note on how each was
/// produced.
#[derive(Clone, Debug)]
pub struct BasisTables {
    pub z: JointDistribution,
    pub x: [JointDistribution; 4],
    pub sources: [String; 5],
}

pub const BASIS_LABELS: [&str; 5] = ["Z", "X0", "X1", "X2", "X3"];

impl BasisTables {
    pub fn table(&self, index: usize) -> &JointDistribution {
        if index == 0 {
            &self.z
        } else {
            &self.x[index - 1]
        }
    }

    fn x_refs(&self) -> [&JointDistribution; 4] {
        [&self.x[0], &self.x[1], &self.x[2], &self.x[3]]
    }
}

/// Ideal tables of the target state: `Z` diagonal and the four `X`
/// selection-rule patterns.
pub fn ideal_tables() -> [JointDistribution; 5] {
    let z: Table = std::array::from_fn(|j| std::array::from_fn(|k| if j == k { 0.25 } else { 0.0 }));
    [
        JointDistribution::exact(z).expect("ideal Z table"),
        physical_distribution(&PhaseVector::x_basis(0).unwrap()),
        physical_distribution(&PhaseVector::x_basis(1).unwrap()),
        physical_distribution(&PhaseVector::x_basis(2).unwrap()),
        physical_distribution(&PhaseVector::x_basis(3).unwrap()),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteeringEntry {
    pub bases: String,
    pub direction: SteeringDirection,
    pub value: f64,
    pub sigma: f64,
    /// Plug-in entropy bias of both tables, bits.
    pub bias_bound: f64,
    /// `S + 3 sigma + 3 bias_bound < 0`.
    pub steering: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteeringMeans {
    #[serde(rename = "B|A")]
    pub b_given_a: Estimate,
    #[serde(rename = "A|B")]
    pub a_given_b: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisScore {
    pub basis: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BhattacharyyaSummary {
    pub per_basis: Vec<BasisScore>,
    pub aggregate: Estimate,
    pub aggregation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalEntry {
    pub basis: String,
    pub a: Estimate,
    pub b: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableInfo {
    pub basis: String,
    pub source: String,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    /// Fidelity with the target state, clamped to `[0, 1]`.
    pub fidelity: Estimate,
    pub schmidt: SchmidtCertificate,
    pub z_diagonal_weight: f64,
    pub coherence_sums: [f64; 3],
    pub steering: Vec<SteeringEntry>,
    pub steering_mean: SteeringMeans,
    pub bhattacharyya: BhattacharyyaSummary,
    pub marginal_entropies: Vec<MarginalEntry>,
    /// Mean of the ten marginal entropies and their standard deviation.
    pub marginal_entropy_mean: Estimate,
    pub tables: Vec<TableInfo>,
}

fn mean_steering(tables: &BasisTables, direction: SteeringDirection) -> Estimate {
    // the Z table is shared by all four (Z, Xj) pairs
    let z = &tables.z;
    let mut value = conditional_entropy(z, direction) - LOG2_DIM;
    let mut var = z.variance_of(&conditional_entropy_gradient(z, direction));
    for x in &tables.x {
        value += conditional_entropy(x, direction) / 4.0;
        let g = conditional_entropy_gradient(x, direction).map(|r| r.map(|v| v / 4.0));
        var += x.variance_of(&g);
    }
    Estimate {
        value,
        sigma: var.sqrt(),
    }
}

/// Runs every certification step on the five tables.
pub fn certify(tables: &BasisTables) -> CertificationReport {
    let raw = fidelity_mub(&tables.z, tables.x_refs());
    let fidelity = Estimate {
        value: raw.value.clamp(0.0, 1.0),
        sigma: raw.sigma,
    };
    let schmidt = schmidt_witness(fidelity.value);

    let mut steering = Vec::new();
    for direction in [SteeringDirection::BGivenA, SteeringDirection::AGivenB] {
        for (j, x) in tables.x.iter().enumerate() {
            let s = steering_s(&tables.z, x, direction);
            let bias = conditional_entropy_bias(&tables.z, direction) + conditional_entropy_bias(x, direction);
            steering.push(SteeringEntry {
                bases: format!("Z,X{j}"),
                direction,
                value: s.value,
                sigma: s.sigma,
                bias_bound: bias,
                steering: s.value + 3.0 * s.sigma + 3.0 * bias < 0.0,
            });
        }
    }
    let steering_mean = SteeringMeans {
        b_given_a: mean_steering(tables, SteeringDirection::BGivenA),
        a_given_b: mean_steering(tables, SteeringDirection::AGivenB),
    };

    let ideal = ideal_tables();
    let per_basis: Vec<BasisScore> = (0..5)
        .map(|i| {
            let e = bhattacharyya_tables(tables.table(i), &ideal[i]);
            BasisScore {
                basis: BASIS_LABELS[i].to_string(),
                value: e.value,
                sigma: e.sigma,
            }
        })
        .collect();
    let aggregate = Estimate {
        value: per_basis.iter().map(|s| s.value).sum::<f64>() / 5.0,
        sigma: per_basis.iter().map(|s| s.sigma * s.sigma).sum::<f64>().sqrt() / 5.0,
    };

    let marginal_entropies: Vec<MarginalEntry> = (0..5)
        .map(|i| {
            let m = marginal_entropies(tables.table(i));
            MarginalEntry {
                basis: BASIS_LABELS[i].to_string(),
                a: m.a,
                b: m.b,
            }
        })
        .collect();
    let all: Vec<f64> = marginal_entropies.iter().flat_map(|m| [m.a.value, m.b.value]).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let spread = (all.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (all.len() - 1) as f64).sqrt();

    CertificationReport {
        fidelity,
        schmidt,
        z_diagonal_weight: (0..CORES).map(|j| tables.z.get(j, j)).sum(),
        coherence_sums: coherence_sums(tables.x_refs()),
        steering,
        steering_mean,
        bhattacharyya: BhattacharyyaSummary {
            per_basis,
            aggregate,
            aggregation: "mean of the per-basis coefficients against the ideal tables over Z, X0, X1, X2, X3".into(),
        },
        marginal_entropies,
        marginal_entropy_mean: Estimate { value: mean, sigma: spread },
        tables: (0..5)
            .map(|i| TableInfo {
                basis: BASIS_LABELS[i].to_string(),
                source: tables.sources[i].clone(),
                exact: tables.table(i).is_exact(),
            })
            .collect(),
    }
}

/// Human-readable summary of a report.
pub fn summary_text(report: &CertificationReport) -> String {
    let mut out = String::new();
    let f = &report.fidelity;
    writeln!(out, "Fidelity with target state: F = {:.4} +/- {:.4}", f.value, f.sigma).unwrap();
    let s = &report.schmidt;
    if s.certified {
        writeln!(
            out,
            "Schmidt witness: F > 3/4 by {:.4}; Schmidt number 4 certified",
            s.margin
        )
        .unwrap();
    } else {
        writeln!(out, "Schmidt witness: not certified (F - 3/4 = {:.4})", s.margin).unwrap();
    }
    writeln!(out, "Entropic steering (bits):").unwrap();
    for e in &report.steering {
        writeln!(
            out,
            "  S({}) [{}] = {:+.4} +/- {:.4}{}",
            e.direction.label(),
            e.bases,
            e.value,
            e.sigma,
            if e.steering { "  steering" } else { "" }
        )
        .unwrap();
    }
    let m = &report.steering_mean;
    writeln!(
        out,
        "  mean S(B|A) = {:+.4} +/- {:.4}, mean S(A|B) = {:+.4} +/- {:.4}",
        m.b_given_a.value, m.b_given_a.sigma, m.a_given_b.value, m.a_given_b.sigma
    )
    .unwrap();
    let b = &report.bhattacharyya.aggregate;
    writeln!(out, "Bhattacharyya similarity: C_B = {:.4} +/- {:.4} ({})", b.value, b.sigma, report.bhattacharyya.aggregation).unwrap();
    let h = &report.marginal_entropy_mean;
    writeln!(out, "Marginal entropies: mean {:.4} bits (spread {:.4})", h.value, h.sigma).unwrap();
    for t in &report.tables {
        writeln!(out, "  table {}: {}", t.basis, t.source).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::MeasurementBasis;
    use crate::qcore::{born_joint_distribution, TwoPhotonState};
    use crate::source::{ideal_state, werner_state};

    fn born_tables(state: &TwoPhotonState) -> [JointDistribution; 5] {
        MeasurementBasis::standard().map(|b| born_joint_distribution(state, b.unitary(), b.unitary()))
    }

    fn uniform() -> JointDistribution {
        JointDistribution::exact([[1.0 / 16.0; 4]; 4]).unwrap()
    }

    /// Werner tables written out by hand: `v * ideal + (1 - v) / 16`.
    fn werner_tables_analytic(v: f64) -> [JointDistribution; 5] {
        ideal_tables().map(|t| {
            let p = t.probabilities().map(|r| r.map(|x| v * x + (1.0 - v) / 16.0));
            JointDistribution::exact(p).unwrap()
        })
    }

    #[test]
    fn grouping_validation() {
        assert!(Grouping::new([0, 1, 2, 3]).is_ok());
        assert!(matches!(Grouping::new([0, 1, 1, 3]), Err(Error::BadGrouping(_))));
        assert!(Grouping::new([0, 1, 2, 4]).is_err());
    }

    #[test]
    fn correlation_examples() {
        let ideal = ideal_tables();
        let g = Grouping::new([0, 1, 2, 3]).unwrap();
        assert!((correlation(&ideal[1], &g) - 1.0).abs() < 1e-15);
        assert!((correlation(&ideal[2], &g) - 1.0).abs() < 1e-15);
        for order in COHERENCE_GROUPINGS {
            let g = Grouping::new(order).unwrap();
            assert!(correlation(&uniform(), &g).abs() < 1e-15);
        }
    }

    #[test]
    fn printed_form_matches_symmetric_on_symmetric_tables_only() {
        let g = Grouping::new([0, 1, 2, 3]).unwrap();
        for t in werner_tables_analytic(0.6) {
            let a = correlation_with_form(&t, &g, CorrelationForm::Symmetric);
            let b = correlation_with_form(&t, &g, CorrelationForm::Printed);
            assert!((a - b).abs() < 1e-15);
        }
        let mut p = [[0.0; 4]; 4];
        p[0][2] = 1.0;
        let skew = JointDistribution::exact(p).unwrap();
        assert_eq!(correlation_with_form(&skew, &g, CorrelationForm::Symmetric), -1.0);
        assert_eq!(correlation_with_form(&skew, &g, CorrelationForm::Printed), -2.0);
    }

    #[test]
    fn coherence_sums_against_density_matrix() {
        let pairs = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
        for v in [1.0, 0.775, 0.3, 0.0] {
            let rho = werner_state(v).unwrap();
            let t = born_tables(&rho);
            let sums = coherence_sums([&t[1], &t[2], &t[3], &t[4]]);
            for (sum, pair) in sums.iter().zip(pairs) {
                let direct: f64 = pair
                    .iter()
                    .map(|&(j, k)| 2.0 * rho.element((j, j), (k, k)).re)
                    .sum();
                assert!((sum - direct).abs() < 1e-12, "v={v}: {sum} vs {direct}");
                assert!((sum - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_exact_cases() {
        let t = ideal_tables();
        let f = fidelity_mub(&t[0], [&t[1], &t[2], &t[3], &t[4]]);
        assert!((f.value - 1.0).abs() < 1e-15);
        assert_eq!(f.sigma, 0.0);
        let w = werner_tables_analytic(0.775);
        let f = fidelity_mub(&w[0], [&w[1], &w[2], &w[3], &w[4]]);
        assert!((f.value - 0.7890625).abs() < 1e-12);
    }

    #[test]
    fn witness_boundaries() {
        assert!(schmidt_witness(0.789).certified);
        assert_eq!(schmidt_witness(0.789).certified_dimension, Some(4));
        assert!(!schmidt_witness(0.75).certified);
        assert!(!schmidt_witness(1.0 / 16.0).certified);
        assert!((schmidt_witness(0.8).margin - 0.05).abs() < 1e-15);
    }

    #[test]
    fn steering_examples() {
        let t = ideal_tables();
        for dir in [SteeringDirection::BGivenA, SteeringDirection::AGivenB] {
            assert!((steering_s(&t[0], &t[1], dir).value + 2.0).abs() < 1e-12);
            assert!((steering_s(&uniform(), &uniform(), dir).value - 2.0).abs() < 1e-12);
        }
        // oracle: conditional distribution (0.83125, 0.05625 x3)
        let w = werner_tables_analytic(0.775);
        let row = [0.83125, 0.05625, 0.05625, 0.05625];
        let h: f64 = -row.iter().map(|p: &f64| p * p.log2()).sum::<f64>();
        let s = steering_s(&w[0], &w[2], SteeringDirection::AGivenB).value;
        assert!((s - (2.0 * h - 2.0)).abs() < 1e-12);
        assert!((s + 0.155).abs() < 0.005, "{s}");
    }

    #[test]
    fn entropy_conventions() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0, 0.0]), 0.0);
        assert!((shannon_entropy(&[0.25; 4]) - 2.0).abs() < 1e-15);
        let mut p = [[0.0; 4]; 4];
        p[0][0] = 1.0;
        let m = marginal_entropies(&JointDistribution::exact(p).unwrap());
        assert_eq!((m.a.value, m.b.value), (0.0, 0.0));
        let m = marginal_entropies(&ideal_tables()[0]);
        assert_eq!((m.a.value, m.b.value), (2.0, 2.0));
    }

    #[test]
    fn bhattacharyya_examples() {
        let p = [0.1, 0.2, 0.3, 0.4];
        assert!((bhattacharyya(&p, &p) - 1.0).abs() < 1e-15);
        assert_eq!(bhattacharyya(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.5]), 0.0);
        let w = werner_tables_analytic(0.775);
        let cb = bhattacharyya_tables(&w[0], &ideal_tables()[0]).value;
        assert!((cb - 4.0 * (0.25_f64 * 0.2078125).sqrt()).abs() < 1e-15);
        assert!((cb - 0.9118).abs() < 5e-4);
    }

    #[test]
    fn report_on_ideal_state() {
        let t = born_tables(&ideal_state());
        let [z, x0, x1, x2, x3] = t;
        let tables = BasisTables {
            z,
            x: [x0, x1, x2, x3],
            sources: std::array::from_fn(|_| "exact".to_string()),
        };
        let r = certify(&tables);
        assert!((r.fidelity.value - 1.0).abs() < 1e-12);
        assert!(r.schmidt.certified);
        assert_eq!(r.steering.len(), 8);
        assert!(r.steering.iter().all(|e| (e.value + 2.0).abs() < 1e-9 && e.steering));
        assert!((r.bhattacharyya.aggregate.value - 1.0).abs() < 1e-12);
        assert!((r.marginal_entropy_mean.value - 2.0).abs() < 1e-12);
        let text = summary_text(&r);
        assert!(text.contains("Schmidt number 4 certified"));
    }
}
