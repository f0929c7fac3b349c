use proptest::prelude::*;
use rentlearn::config::{self, ExperimentConfig};
use rentlearn_core::analysis::training_draws;
use rentlearn_core::dist::{Atom, CoreGrid, Family, JointDistribution};
use rentlearn_core::learn::{FeatureMap, Hypothesis, LearnerConfig};
use rentlearn_core::policy::{fit_grid_lipschitz, fit_margin, GridFitConfig, TwoValuePolicy};
use rentlearn_core::{ThresholdDensity, ThresholdPolicy};

fn families() -> Vec<Family> {
    vec![
        Family::DeterministicLinear { weights: vec![0.3, -1.25], bias: 0.1 },
        Family::LipschitzShift { weights: vec![0.6, 0.8], bias: 0.5, spread: 0.3 },
        Family::CoreGrid(CoreGrid { cores_per_axis: 10, dim: 2 }),
        Family::NoiseLowerBound { p: 0.25, long_y: 10.0, dim: 1 },
        Family::PointMass { y0: 2.0, dim: 0 },
        Family::FiniteMixture {
            atoms: vec![Atom { value: 0.4, weight: 0.25 }, Atom { value: 3.0, weight: 0.75 }],
            dim: 3,
        },
        Family::NoisyChannel {
            base: Box::new(Family::DeterministicLinear { weights: vec![1.0, 1.0], bias: 0.0 }),
            p: 0.02,
            flip_targets: vec![0.2, 10.0],
        },
    ]
}

#[test]
fn families_round_trip_through_json_and_toml() {
    for (i, f) in families().into_iter().enumerate() {
        let d = JointDistribution::new(f, 100 + i as u64).unwrap();
        let back: JointDistribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let back: JointDistribution = toml::from_str(&toml::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        // Same draws after the trip.
        assert_eq!(back.sample_range(0, 20), d.sample_range(0, 20));
    }
}

#[test]
fn unknown_family_fields_are_rejected() {
    let bad = r#"{"family":{"name":"point-mass","y0":1.0,"typo":2},"seed":0}"#;
    assert!(serde_json::from_str::<JointDistribution>(bad).is_err());
}

fn policies() -> Vec<ThresholdPolicy> {
    let h = Hypothesis::linear(vec![1.0, -2.0], 0.25).unwrap();
    let lin = JointDistribution::new(Family::DeterministicLinear { weights: vec![1.0, 1.0], bias: 0.0 }, 0).unwrap();
    let train = training_draws(&lin, 2000, 4);
    let grid = fit_grid_lipschitz(
        &train,
        &GridFitConfig { epsilon: 0.1, lipschitz: 2.0, dim: 2, cubes_per_axis: Some(4), min_count: Some(50) },
    )
    .unwrap();
    let margin = fit_margin(&train, 2f64.sqrt(), 0.1, &LearnerConfig::default()).unwrap();
    vec![
        ThresholdPolicy::constant(0.7).unwrap(),
        ThresholdPolicy::randomized(ThresholdDensity::WorstCase).unwrap(),
        ThresholdPolicy::randomized(ThresholdDensity::Uniform { lo: 0.2, hi: 0.9 }).unwrap(),
        ThresholdPolicy::two_value(TwoValuePolicy::new(h, 0.2, 1.0).unwrap()),
        ThresholdPolicy::two_value(margin.policy),
        grid.into(),
    ]
}

#[test]
fn policies_round_trip_and_behave_the_same() {
    let probes: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64 / 7.0, (i % 11) as f64 / 11.0]).collect();
    for p in policies() {
        let json = serde_json::to_string(&p).unwrap();
        let back: ThresholdPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        assert_eq!(back.theta_min(), p.theta_min());
        assert_eq!(back.theta_max(), p.theta_max());
        for x in &probes {
            for y in [0.0, 0.3, 1.0, 2.5] {
                assert_eq!(back.ratio(x, y), p.ratio(x, y), "{json}");
            }
        }
    }
}

#[test]
fn invalid_policies_are_rejected_on_load() {
    let bad = r#"{"kind":"constant","theta":-1.0}"#;
    assert!(serde_json::from_str::<ThresholdPolicy>(bad).is_err());
    let bad = r#"{"kind":"randomized","density":{"name":"uniform","lo":0.9,"hi":0.2}}"#;
    assert!(serde_json::from_str::<ThresholdPolicy>(bad).is_err());
}

#[test]
fn hypothesis_round_trip() {
    let h = Hypothesis::new(vec![0.1, 0.2, 0.3, 0.4, 0.5], -0.7, FeatureMap::Poly2).unwrap();
    let back: Hypothesis = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
    assert_eq!(back.weights, h.weights);
    assert_eq!(back.bias, h.bias);
    assert_eq!(back.score(&[0.3, 0.9]), h.score(&[0.3, 0.9]));
}

#[test]
fn example_config_round_trips_and_validates() {
    let text = toml::to_string(&config::example()).unwrap();
    let loaded = config::parse(std::path::Path::new("example.toml"), text.clone()).unwrap();
    let again = toml::to_string(&loaded.config).unwrap();
    assert_eq!(again, text);
    for needs in [
        config::Needs::Evaluate,
        config::Needs::Sweep,
        config::Needs::LowerBound,
        config::Needs::Scan,
        config::Needs::Pdim,
    ] {
        loaded.validate(needs).unwrap();
    }
    let empty: ExperimentConfig = toml::from_str("").unwrap();
    assert!(empty.distribution.is_none());
}

proptest! {
    #[test]
    fn linear_families_round_trip_exactly(
        w in prop::collection::vec(-1e3f64..1e3, 0..6),
        b in -1e3f64..1e3,
        seed in any::<u64>(),
    ) {
        let d = JointDistribution::new(Family::DeterministicLinear { weights: w, bias: b }, seed).unwrap();
        let back: JointDistribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        prop_assert_eq!(&back, &d);
    }

    #[test]
    fn mixtures_round_trip_exactly(atoms in prop::collection::vec((0.0f64..50.0, 0.01f64..1.0), 1..6)) {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms = atoms.into_iter().map(|(v, w)| Atom { value: v, weight: w / total }).collect();
        let f = Family::FiniteMixture { atoms, dim: 1 };
        if f.validate().is_ok() {
            let back: Family = toml::from_str(&toml::to_string(&f).unwrap()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
