use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use mcf_entangle::certify::{bhattacharyya, fidelity_mub, steering_s, SteeringDirection};
use mcf_entangle::devices::{ideal_4cfbs, BasisName, MeasurementBasis, PhaseVector};
use mcf_entangle::drift::spectrum;
use mcf_entangle::linkbudget::LinkBudget;
use mcf_entangle::measure::{
    estimate_distribution, physical_distribution, sample_counts, stream_rng, CountModel, CountRecord, JointDistribution,
};
use mcf_entangle::pipeline::exact_distribution;
use mcf_entangle::qcore::{
    born_joint_distribution, fidelity_direct, pair_index, unitarity_deviation, PairMatrix, TwoPhotonState,
};
use mcf_entangle::source::{ideal_state, werner_state, SourceConfig};

fn source() -> impl Strategy<Value = SourceConfig> {
    (
        prop::array::uniform4(0.001f64..1.0),
        prop::array::uniform4(0.0f64..TAU),
        0.0f64..=1.0,
    )
        .prop_map(|(pump_weights, core_phases, visibility)| SourceConfig {
            pump_weights,
            core_phases,
            visibility,
            ..Default::default()
        })
}

fn phases() -> impl Strategy<Value = PhaseVector> {
    prop::array::uniform4(-10.0f64..10.0).prop_map(|p| PhaseVector::new(p).unwrap())
}

fn custom(phi: PhaseVector) -> MeasurementBasis {
    MeasurementBasis::interferometric(BasisName::Custom("custom".into()), &ideal_4cfbs(), phi)
}

fn tables(state: &TwoPhotonState) -> [JointDistribution; 5] {
    MeasurementBasis::standard().map(|b| exact_distribution(state, &b))
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn born_tables_are_normalized(cfg in source(), phi in phases()) {
        let state = cfg.state().unwrap();
        let custom = custom(phi);
        for t in tables(&state).iter().chain(std::iter::once(&exact_distribution(&state, &custom))) {
            prop_assert!((t.total() - 1.0).abs() < 1e-12);
            prop_assert!(t.flat().iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
        }
    }

    #[test]
    fn symmetric_states_give_symmetric_tables(cfg in source(), phi in phases()) {
        // the source state is invariant under exchanging the photons
        let state = cfg.state().unwrap();
        let b = custom(phi);
        let t = exact_distribution(&state, &b);
        for j in 0..4 {
            for k in 0..4 {
                prop_assert!((t.get(j, k) - t.get(k, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn physical_model_matches_born_rule(phi in phases()) {
        let b = custom(phi);
        let born = born_joint_distribution(&ideal_state(), b.unitary(), b.unitary());
        let phys = physical_distribution(&phi);
        for j in 0..4 {
            for k in 0..4 {
                prop_assert!((born.get(j, k) - phys.get(j, k)).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn interferometric_bases_are_unitary(phi in phases()) {
        let b = custom(phi);
        prop_assert!(unitarity_deviation(b.unitary().matrix()) < 1e-10);
    }

    #[test]
    fn fidelities_agree_and_are_bounded(cfg in source()) {
        let state = cfg.state().unwrap();
        let t = tables(&state);
        let direct = fidelity_direct(&state, &ideal_state()).unwrap();
        let mub = fidelity_mub(&t[0], [&t[1], &t[2], &t[3], &t[4]]).value;
        prop_assert!((0.0..=1.0).contains(&direct));
        prop_assert!((mub - direct).abs() < 1e-9);
    }

    #[test]
    fn pi_shift_leaves_distribution_unchanged(phi in phases(), core in 0usize..4) {
        let a = physical_distribution(&phi);
        let b = physical_distribution(&phi.with(core, phi.get(core) + std::f64::consts::PI));
        for j in 0..4 {
            for k in 0..4 {
                prop_assert!((a.get(j, k) - b.get(j, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn werner_fidelity_increases_with_visibility(v1 in 0.0f64..=1.0, v2 in 0.0f64..=1.0) {
        let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        let f = |v| fidelity_direct(&werner_state(v).unwrap(), &ideal_state()).unwrap();
        prop_assert!(f(lo) <= f(hi) + 1e-15);
    }

    #[test]
    fn diagonal_separable_states_never_steer(q in prop::array::uniform16(0.0f64..1.0)) {
        let total: f64 = q.iter().sum();
        prop_assume!(total > 1e-6);
        let mut rho = PairMatrix::zeros();
        for j in 0..4 {
            for k in 0..4 {
                rho[(pair_index(j, k), pair_index(j, k))] = Complex64::new(q[pair_index(j, k)] / total, 0.0);
            }
        }
        let t = tables(&TwoPhotonState::mixed(rho).unwrap());
        for d in [SteeringDirection::BGivenA, SteeringDirection::AGivenB] {
            for x in &t[1..] {
                prop_assert!(steering_s(&t[0], x, d).value >= -1e-12);
            }
        }
    }

    #[test]
    fn estimates_track_the_truth(cfg in source(), seed in any::<u64>()) {
        let model = CountModel::new(2e6, 1.0);
        for (i, p) in tables(&cfg.state().unwrap()).iter().enumerate() {
            let counts = sample_counts(p, &model, &mut stream_rng(seed, i as u64));
            let est = estimate_distribution(&counts).unwrap();
            let expected = model.expected_counts(p);
            for j in 0..4 {
                for k in 0..4 {
                    // Gaussian error bars only hold once counts are sizeable
                    if expected[j][k] < 100.0 {
                        continue;
                    }
                    let dev = (est.get(j, k) - p.get(j, k)).abs();
                    prop_assert!(dev <= 6.0 * est.sigma()[j][k] + 1e-12, "({j},{k}) {dev}");
                }
            }
        }
    }

    #[test]
    fn count_tables_survive_csv(counts in prop::array::uniform4(prop::array::uniform4(0u64..1_000_000)), acc in 0.0f64..100.0) {
        let record = CountRecord::new(counts, [[acc; 4]; 4]);
        let back = CountRecord::from_csv_str(&record.to_csv_string(), "mem").unwrap();
        prop_assert_eq!(back.counts, record.counts);
        prop_assert_eq!(back.accidentals, record.accidentals);
    }

    #[test]
    fn bhattacharyya_is_symmetric_and_bounded(p in distribution(16), q in distribution(16)) {
        let a = bhattacharyya(&p, &q);
        prop_assert!((a - bhattacharyya(&q, &p)).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((bhattacharyya(&p, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn link_rate_decreases_and_inverts(atten in 0.01f64..1.0, arms in 1u8..=2, l1 in 0.0f64..300.0, l2 in 0.0f64..300.0) {
        let b = LinkBudget { attenuation: atten, arms, ..Default::default() };
        let (near, far) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        prop_assume!(far - near > 1e-6);
        prop_assert!(b.rate_at_distance(far).unwrap() < b.rate_at_distance(near).unwrap());
        let rate = b.rate_at_distance(far).unwrap();
        let d = LinkBudget { min_rate: rate, ..b }.max_distance().unwrap();
        prop_assert!((d.km - far).abs() < 1e-9);
    }

    #[test]
    fn spectrum_obeys_parseval(x in prop::collection::vec(-1.0f64..1.0, 16..400), dt in 0.1f64..10.0) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let s = spectrum(&x, dt).unwrap();
        prop_assert!((s.total_power() - var).abs() <= 1e-9 * var.max(1e-300));
        prop_assert!((s.dc - mean).abs() < 1e-12);
    }
}
