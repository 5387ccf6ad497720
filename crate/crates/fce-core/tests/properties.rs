//! Property-based tests over the physics, data, and model-serialization
//! invariants that should hold for arbitrary valid inputs.

use proptest::prelude::*;

use fce_core::datagen::{
    balanced_sample, split, AxisRange, Dataset, Provenance,
};
use fce_core::mlp::{self, MlpModel};
use fce_core::physics::initial_velocity;
use fce_core::trajectory::{self, Outcome, SimOptions};
use fce_core::{CoefficientPair, FlywheelGeometry, LaunchConfig, SimConfig};

fn arb_config() -> impl Strategy<Value = LaunchConfig> {
    (1.0..16.0f64, 0.05..1.0f64, 15.0..75.0f64)
        .prop_map(|(d, m, a)| LaunchConfig::new(d, m, a).unwrap())
}

fn arb_outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![
        Just(Outcome::MISS),
        Just(Outcome::TWO_POINT),
        Just(Outcome::THREE_POINT),
    ]
}

fn arb_dataset(max_rows: usize) -> impl Strategy<Value = Dataset> {
    proptest::collection::vec((arb_config(), arb_outcome()), 1..max_rows)
        .prop_map(|rows| Dataset::new(rows, Provenance::Simulated))
}

fn key(c: &LaunchConfig) -> (u64, u64, u64) {
    (c.distance.to_bits(), c.motor_ratio.to_bits(), c.angle.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Simulation always produces a well-formed trajectory: the initial
    /// state at the origin, strictly increasing time, finite states.
    #[test]
    fn simulate_is_well_formed(
        config in arb_config(),
        cl in 0.0..1.0f64,
        cd in 0.0..2.0f64,
    ) {
        let sim = SimConfig::default();
        let pair = CoefficientPair::new(cl, cd).unwrap();
        let traj = trajectory::simulate(&config, &pair, &sim, &SimOptions::default()).unwrap();
        let first = &traj.states[0];
        prop_assert_eq!((first.t, first.x, first.y), (0.0, 0.0, 0.0));
        for w in traj.states.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].x.is_finite() && w[1].y.is_finite());
        }
    }

    /// Scoring is consistent with deviation: inside the narrow band is a
    /// three-pointer, inside the wide band at least a two-pointer, and the
    /// containment hit3 => hit2 always holds.
    #[test]
    fn score_matches_deviation(config in arb_config(), cl in 0.0..0.5f64, cd in 0.0..1.5f64) {
        let sim = SimConfig::default();
        let target = sim.target();
        let pair = CoefficientPair::new(cl, cd).unwrap();
        let traj = trajectory::simulate(&config, &pair, &sim, &SimOptions::default()).unwrap();
        let outcome = trajectory::score(&traj, &config, &target);
        let dev = trajectory::deviation(&traj, &config, &target);
        prop_assert!(!outcome.hit3 || outcome.hit2);
        prop_assert_eq!(outcome.hit3, dev <= target.three_pt_halfwidth);
        prop_assert_eq!(outcome.hit2, dev <= target.two_pt_halfwidth);
    }

    /// Launch speed is linear in the motor ratio.
    #[test]
    fn initial_velocity_is_linear_in_motor(ratio in 0.0..1.0f64, scale in 0.1..1.0f64) {
        let geom = FlywheelGeometry::default();
        let v = initial_velocity(&geom, ratio);
        let v_scaled = initial_velocity(&geom, ratio * scale);
        prop_assert!((v_scaled - v * scale).abs() < 1e-12 * v.abs().max(1.0));
    }

    /// AxisRange::values always has count() elements, ordered, within bounds.
    #[test]
    fn axis_range_is_consistent(
        min in -10.0..10.0f64,
        span in 0.1..20.0f64,
        step in 0.01..1.0f64,
    ) {
        let range = AxisRange::new(min, min + span, step).unwrap();
        let values = range.values();
        prop_assert_eq!(values.len(), range.count());
        prop_assert_eq!(values[0], min);
        for w in values.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        prop_assert!(*values.last().unwrap() <= min + span + step * 1e-6);
    }

    /// Splitting partitions the dataset exactly, for any fraction and seed.
    #[test]
    fn split_partitions_exactly(
        data in arb_dataset(40),
        frac in 0.0..1.0f64,
        seed in any::<u64>(),
        stratify in any::<bool>(),
    ) {
        let (train, test) = split(&data, frac, seed, stratify).unwrap();
        prop_assert_eq!(train.len() + test.len(), data.len());
        let mut merged: Vec<_> = train.rows.iter().chain(test.rows.iter())
            .map(|(c, o)| (key(c), *o)).collect();
        let mut original: Vec<_> = data.rows.iter().map(|(c, o)| (key(c), *o)).collect();
        merged.sort();
        original.sort();
        prop_assert_eq!(merged, original);
    }

    /// Balanced samples have class skew at most one and never draw from the
    /// exclusion set, whenever the pool can satisfy the request.
    #[test]
    fn balanced_sample_is_balanced(seed in any::<u64>(), n in 3..30usize) {
        // Pool with plenty of every class at distinct configurations.
        let mut rows = Vec::new();
        for i in 0..60 {
            let config = LaunchConfig::new(1.0 + 0.1 * i as f64, 0.5, 45.0).unwrap();
            rows.push((config, fce_core::datagen::CLASSES[i % 3]));
        }
        let exclude = Dataset::new(rows[..6].to_vec(), Provenance::Experimental);
        let pool = Dataset::new(rows, Provenance::Simulated);
        let sample = balanced_sample(&pool, n, &exclude, seed).unwrap();
        prop_assert_eq!(sample.len(), n);
        let counts = sample.class_counts();
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        let banned: std::collections::HashSet<_> =
            exclude.rows.iter().map(|(c, _)| key(c)).collect();
        prop_assert!(sample.rows.iter().all(|(c, _)| !banned.contains(&key(c))));
    }

    /// Dataset CSV roundtrips bit-exactly.
    #[test]
    fn dataset_csv_roundtrips(data in arb_dataset(30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        fce_core::datagen::write_dataset(&data, &path).unwrap();
        let back = fce_core::datagen::read_dataset(&path, Provenance::Simulated).unwrap();
        prop_assert_eq!(back, data);
    }

    /// Model files roundtrip bit-exactly for arbitrary finite weights.
    #[test]
    fn model_file_roundtrips(seed in any::<u64>(), scale in 0.1..100.0f64) {
        let mut model = MlpModel::init(seed);
        for row in model.w1.iter_mut() {
            for w in row.iter_mut() {
                *w *= scale;
            }
        }
        model.b2[0] = -scale;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        mlp::write_model(&model, &path).unwrap();
        let back = mlp::read_model(&path).unwrap();
        prop_assert_eq!(back, model);
    }

    /// Forward outputs are always strictly inside (0, 1).
    #[test]
    fn forward_stays_in_unit_interval(seed in any::<u64>(), x in proptest::array::uniform3(-2.0..2.0f64)) {
        let model = MlpModel::init(seed);
        let out = mlp::forward(&model, &x);
        prop_assert!(out.iter().all(|p| *p > 0.0 && *p < 1.0));
    }
}
