//! End-to-end runs behind the command-line subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{certify, fidelity_mub, summary_text, BasisTables, CertificationReport, Estimate, BASIS_LABELS};
use crate::config::ExperimentConfig;
use crate::devices::MeasurementBasis;
use crate::drift::{coincidence_series, series_csv, simulate_drift, spectrum, DriftModel};
use crate::error::{Error, Result};
use crate::linkbudget::{LinkBudget, MaxDistance};
use crate::measure::{estimate_distribution, sample_counts, stream_rng, CountModel, CountRecord, JointDistribution};
use crate::qcore::{born_joint_distribution, TwoPhotonState};

/// Streams per replicate; basis `i` of replicate `r` draws from stream `r * STREAMS_PER_REPLICATE + i`.
pub const STREAMS_PER_REPLICATE: u64 = 64;
/// Frequency below which slow drift is expected to live, Hz.
pub const DRIFT_CUTOFF_HZ: f64 = 0.008;

pub fn counts_file(basis: &str) -> String {
    format!("counts_{basis}.csv")
}

pub fn exact_file(basis: &str) -> String {
    format!("exact_{basis}.csv")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Clone, Debug)]
pub struct SimulatedBasis {
    pub name: String,
    pub exact: JointDistribution,
    pub counts: CountRecord,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub seed: u64,
    pub bases: Vec<SimulatedBasis>,
}

impl Simulation {
    pub fn basis(&self, name: &str) -> Option<&SimulatedBasis> {
        self.bases.iter().find(|b| b.name == name)
    }

    /// Estimated tables of the five standard bases.
    pub fn tables(&self) -> Result<BasisTables> {
        let records: Vec<(CountRecord, String)> = BASIS_LABELS
            .iter()
            .map(|name| {
                let b = self
                    .basis(name)
                    .ok_or_else(|| Error::Estimation(format!("basis {name} was not simulated")))?;
                let source = format!(
                    "simulated with the tensor-product Born model, seed {}, {} raw coincidences in {} s",
                    self.seed,
                    b.counts.total(),
                    b.counts.integration_time.unwrap_or(0.0)
                );
                Ok((b.counts.clone(), source))
            })
            .collect::<Result<_>>()?;
        tables_from_records(records)
    }
}

/// Exact joint distribution of `state` when both photons are measured in `basis`.
pub fn exact_distribution(state: &TwoPhotonState, basis: &MeasurementBasis) -> JointDistribution {
    born_joint_distribution(state, basis.unitary(), basis.unitary())
}

/// Samples one replicate of counts for each exact table.
pub fn sample_replicate(exact: &[JointDistribution], model: &CountModel, seed: u64, replicate: u64) -> Vec<CountRecord> {
    exact
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = stream_rng(seed, replicate * STREAMS_PER_REPLICATE + i as u64);
            sample_counts(p, model, &mut rng)
        })
        .collect()
}

pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    config.validate()?;
    let state = config.source.state()?;
    let model = config.count_model()?;
    let bases = config.measurement_bases()?;
    let exact: Vec<JointDistribution> = bases.iter().map(|b| exact_distribution(&state, b)).collect();
    let seed = config.measurement.seed;
    let counts = sample_replicate(&exact, &model, seed, 0);
    Ok(Simulation {
        seed,
        bases: bases
            .iter()
            .zip(exact)
            .zip(counts)
            .map(|((b, exact), counts)| SimulatedBasis {
                name: b.name.to_string(),
                exact,
                counts,
            })
            .collect(),
    })
}

/// Simulates every configured basis and writes `counts_<basis>.csv` and
/// `exact_<basis>.csv` into `out`.
pub fn run_simulate(config: &ExperimentConfig, out: &Path) -> Result<Simulation> {
    let sim = simulate(config)?;
    ensure_dir(out)?;
    for b in &sim.bases {
        b.counts.write_csv(&out.join(counts_file(&b.name)))?;
        write_file(&out.join(exact_file(&b.name)), &b.exact.to_csv_string())?;
    }
    Ok(sim)
}

fn tables_from_records(records: Vec<(CountRecord, String)>) -> Result<BasisTables> {
    let mut estimated = Vec::with_capacity(5);
    let mut sources = Vec::with_capacity(5);
    for (label, (record, source)) in BASIS_LABELS.iter().zip(records) {
        let p = estimate_distribution(&record).map_err(|e| Error::Estimation(format!("basis {label}: {e}")))?;
        estimated.push(p);
        sources.push(source);
    }
    let mut it = estimated.into_iter();
    let z = it.next().expect("five tables");
    let x = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    Ok(BasisTables {
        z,
        x,
        sources: sources.try_into().expect("five source notes"),
    })
}

/// Reads `counts_Z.csv`, `counts_X0.csv`, ... `counts_X3.csv` from `dir`.
pub fn load_tables(dir: &Path) -> Result<BasisTables> {
    let records = BASIS_LABELS
        .iter()
        .map(|name| {
            let path = dir.join(counts_file(name));
            let record = CountRecord::read_csv(&path)?;
            let source = format!("{}, {} raw coincidences", path.display(), record.total());
            Ok((record, source))
        })
        .collect::<Result<Vec<_>>>()?;
    tables_from_records(records)
}

fn write_certification(report: &CertificationReport, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    write_json(&out.join("certification.json"), report)?;
    write_file(&out.join("certification.txt"), &summary_text(report))
}

/// Certifies the count tables in `tables_dir`, writing `certification.json`
/// and `certification.txt` into `out`.
pub fn run_certify(tables_dir: &Path, out: &Path) -> Result<CertificationReport> {
    let report = certify(&load_tables(tables_dir)?);
    write_certification(&report, out)?;
    Ok(report)
}

/// Fidelity estimate of each of `replicates` independent count sets drawn
/// from the same exact tables (Z, X0..X3). Replicates run concurrently; the
/// result depends only on `seed`.
pub fn replicate_fidelities(
    exact: &[JointDistribution; 5],
    model: &CountModel,
    seed: u64,
    replicates: u64,
) -> Result<Vec<Estimate>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let counts = sample_replicate(exact, model, seed, r);
            let p = counts.iter().map(estimate_distribution).collect::<Result<Vec<_>>>()?;
            Ok(fidelity_mub(&p[0], [&p[1], &p[2], &p[3], &p[4]]))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftOutcome {
    pub model: DriftModel,
    pub samples: usize,
    pub dt: f64,
    pub pair: [usize; 2],
    pub mean_probability: f64,
    pub dominant_frequency_hz: f64,
    pub dominant_magnitude: f64,
    pub cutoff_hz: f64,
    pub power_fraction_below_cutoff: f64,
}

/// Simulates phase drift, writes the phase trace, coincidence series and
/// spectrum as CSV plus a `drift.json` summary.
pub fn run_drift(config: &ExperimentConfig, out: &Path) -> Result<DriftOutcome> {
    let d = &config.drift;
    let seed = config.measurement.seed;
    let model = d.model(seed);
    let trace = simulate_drift(&model, d.duration, d.dt, seed)?;
    let series = coincidence_series(&trace, (d.pair[0], d.pair[1]))?;
    let spec = spectrum(&series, d.dt)?;
    let (dominant_frequency_hz, dominant_magnitude) = spec.dominant().unwrap_or((0.0, 0.0));
    let outcome = DriftOutcome {
        model,
        samples: series.len(),
        dt: d.dt,
        pair: d.pair,
        mean_probability: spec.dc,
        dominant_frequency_hz,
        dominant_magnitude,
        cutoff_hz: DRIFT_CUTOFF_HZ,
        power_fraction_below_cutoff: spec.power_fraction_below(DRIFT_CUTOFF_HZ),
    };

    ensure_dir(out)?;
    let mut phases = String::from("time_s,phi0,phi1,phi2,phi3\n");
    for (t, phi) in trace.times().zip(&trace.phases) {
        let v = phi.values();
        writeln!(phases, "{t},{},{},{},{}", v[0], v[1], v[2], v[3]).unwrap();
    }
    write_file(&out.join("drift_phases.csv"), &phases)?;
    write_file(&out.join("drift_series.csv"), &series_csv(&series, d.dt))?;
    write_file(&out.join("drift_spectrum.csv"), &spec.to_csv_string())?;
    write_json(&out.join("drift.json"), &outcome)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    pub distance_km: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkBudgetOutcome {
    pub budget: LinkBudget,
    pub source_rate: f64,
    /// Limit for the configured number of fiber arms; absent when either the
    /// attenuation or the threshold is zero.
    pub max_distance: Option<MaxDistance>,
    pub max_distance_one_arm: Option<MaxDistance>,
    pub max_distance_two_arms: Option<MaxDistance>,
    pub rates: Vec<RatePoint>,
}

pub fn link_budget(budget: &LinkBudget, distances: &[f64]) -> Result<LinkBudgetOutcome> {
    budget.validate()?;
    let limit = |arms: u8| LinkBudget { arms, ..budget.clone() }.max_distance().ok();
    let rates = distances
        .iter()
        .map(|d| {
            Ok(RatePoint {
                distance_km: *d,
                rate: budget.rate_at_distance(*d)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LinkBudgetOutcome {
        budget: budget.clone(),
        source_rate: budget.source_rate(),
        max_distance: limit(budget.arms),
        max_distance_one_arm: limit(1),
        max_distance_two_arms: limit(2),
        rates,
    })
}

/// Writes `linkbudget.csv` (distance, rate) and `linkbudget.json`.
pub fn run_linkbudget(budget: &LinkBudget, distances: &[f64], out: &Path) -> Result<LinkBudgetOutcome> {
    let outcome = link_budget(budget, distances)?;
    ensure_dir(out)?;
    let mut csv = String::from("distance_km,rate_pairs_per_s\n");
    for p in &outcome.rates {
        writeln!(csv, "{},{}", p.distance_km, p.rate).unwrap();
    }
    write_file(&out.join("linkbudget.csv"), &csv)?;
    write_json(&out.join("linkbudget.json"), &outcome)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct FullReport {
    pub config: ExperimentConfig,
    pub certification: CertificationReport,
    pub drift: DriftOutcome,
    pub linkbudget: LinkBudgetOutcome,
}

/// Simulation, certification, drift and link budget in one run; everything
/// lands in `out`, with `report.json` and `report.txt` bundling the results.
pub fn run_report(config: &ExperimentConfig, out: &Path) -> Result<FullReport> {
    let sim = run_simulate(config, out)?;
    let certification = certify(&sim.tables()?);
    write_certification(&certification, out)?;
    let drift = run_drift(config, out)?;
    let linkbudget = run_linkbudget(&config.linkbudget.budget, &config.linkbudget.distances, out)?;
    let report = FullReport {
        config: config.clone(),
        certification,
        drift,
        linkbudget,
    };
    write_json(&out.join("report.json"), &report)?;
    write_file(&out.join("report.txt"), &report_text(&report))?;
    Ok(report)
}

pub fn report_text(report: &FullReport) -> String {
    let mut out = summary_text(&report.certification);
    let d = &report.drift;
    writeln!(
        out,
        "Phase drift: dominant component at {:.5} Hz, {:.1}% of fluctuation power below {} Hz",
        d.dominant_frequency_hz,
        100.0 * d.power_fraction_below_cutoff,
        d.cutoff_hz
    )
    .unwrap();
    let l = &report.linkbudget;
    match l.max_distance {
        Some(m) if m.below_threshold_at_source => {
            writeln!(out, "Link budget: source rate {:.4e} pairs/s is below the threshold", l.source_rate).unwrap()
        }
        Some(m) => writeln!(
            out,
            "Link budget: {:.1} km reachable with {} fiber arm(s) at >= {} pairs/s",
            m.km, l.budget.arms, l.budget.min_rate
        )
        .unwrap(),
        None => writeln!(out, "Link budget: no distance limit (zero attenuation or threshold)").unwrap(),
    }
    out
}

/// Default output location: `--out` if given, otherwise the configured directory.
pub fn output_dir(config: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| config.output.dir.clone())
}
