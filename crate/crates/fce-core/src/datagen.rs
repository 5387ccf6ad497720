//! Synthetic dataset generation, balanced sampling, splits, and CSV I/O.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::physics::{CoefficientPair, LaunchConfig};
use crate::trajectory::{self, Outcome, SimOptions};

/// Where a dataset's labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Experimental,
    Simulated,
}

/// Ordered rows of (configuration, outcome).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<(LaunchConfig, Outcome)>,
    pub provenance: Provenance,
}

/// The three possible outcome classes.
pub const CLASSES: [Outcome; 3] = [Outcome::MISS, Outcome::TWO_POINT, Outcome::THREE_POINT];

impl Dataset {
    pub fn new(rows: Vec<(LaunchConfig, Outcome)>, provenance: Provenance) -> Self {
        Self { rows, provenance }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row count per class, in [miss, 2pt, 3pt] order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for (_, outcome) in &self.rows {
            counts[class_index(outcome)] += 1;
        }
        counts
    }
}

pub fn class_index(outcome: &Outcome) -> usize {
    match (outcome.hit2, outcome.hit3) {
        (false, _) => 0,
        (true, false) => 1,
        (true, true) => 2,
    }
}

/// One inclusive lattice `min, min+step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::validation(format!("step must be > 0, got {step}")));
        }
        if !(max >= min) {
            return Err(Error::validation(format!(
                "range max ({max}) must be >= min ({min})"
            )));
        }
        Ok(Self { min, max, step })
    }

    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    /// Lattice values as `min + k*step`; no cumulative summation drift.
    pub fn values(&self) -> Vec<f64> {
        (0..self.count()).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Per-axis generation lattices for the synthetic configuration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationRanges {
    pub motor: AxisRange,
    pub angle_deg: AxisRange,
    pub distance_m: AxisRange,
}

impl Default for GenerationRanges {
    fn default() -> Self {
        Self {
            motor: AxisRange::new(0.0, 1.0, 0.01).unwrap(),
            angle_deg: AxisRange::new(15.0, 75.0, 1.0).unwrap(),
            distance_m: AxisRange::new(1.0, 16.0, 0.2).unwrap(),
        }
    }
}

/// Full Cartesian product of the generation lattices, ordered
/// lexicographically by (distance, angle, motor).
pub fn generate_grid(ranges: &GenerationRanges) -> Vec<LaunchConfig> {
    let distances = ranges.distance_m.values();
    let angles = ranges.angle_deg.values();
    let motors = ranges.motor.values();
    let mut out = Vec::with_capacity(distances.len() * angles.len() * motors.len());
    for &d in &distances {
        for &a in &angles {
            for &m in &motors {
                out.push(LaunchConfig {
                    distance: d,
                    motor_ratio: m,
                    angle: a,
                });
            }
        }
    }
    out
}

/// Label every configuration with the simulator. Parallel over rows; output
/// order matches input order.
pub fn label_grid(
    configs: &[LaunchConfig],
    pair: &CoefficientPair,
    sim: &SimConfig,
    opts: &SimOptions,
) -> Result<Dataset> {
    if configs.is_empty() {
        return Err(Error::validation("cannot label an empty configuration list"));
    }
    let target = sim.target();
    let rows: Result<Vec<_>> = configs
        .par_iter()
        .map(|config| {
            let traj = trajectory::simulate(config, pair, sim, opts)?;
            Ok((*config, trajectory::score(&traj, config, &target)))
        })
        .collect();
    Ok(Dataset::new(rows?, Provenance::Simulated))
}

fn config_key(config: &LaunchConfig) -> (u64, u64, u64) {
    (
        config.distance.to_bits(),
        config.motor_ratio.to_bits(),
        config.angle.to_bits(),
    )
}

/// Draw `n` rows from `pool`, approximately class-balanced (per-class counts
/// differ by at most 1), without replacement, never reusing a configuration
/// present in `exclude`. Deterministic for a given seed.
pub fn balanced_sample(pool: &Dataset, n: usize, exclude: &Dataset, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excluded: HashSet<_> = exclude.rows.iter().map(|(c, _)| config_key(c)).collect();

    let mut per_class: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, (config, outcome)) in pool.rows.iter().enumerate() {
        if !excluded.contains(&config_key(config)) {
            per_class[class_index(outcome)].push(i);
        }
    }

    // n = 3*base + extra; the classes receiving one extra row are seed-chosen.
    let base = n / 3;
    let extra = n % 3;
    let mut class_order = [0usize, 1, 2];
    class_order.shuffle(&mut rng);
    let mut want = [base; 3];
    for &c in class_order.iter().take(extra) {
        want[c] += 1;
    }

    const CLASS_NAMES: [&str; 3] = ["(0,0)", "(1,0)", "(1,1)"];
    let mut rows = Vec::with_capacity(n);
    for c in 0..3 {
        let available = &mut per_class[c];
        if available.len() < want[c] {
            return Err(Error::validation(format!(
                "class {} has only {} available rows after exclusion, need {}",
                CLASS_NAMES[c],
                available.len(),
                want[c]
            )));
        }
        available.shuffle(&mut rng);
        let mut picked: Vec<usize> = available[..want[c]].to_vec();
        picked.sort_unstable();
        rows.extend(picked.into_iter().map(|i| pool.rows[i]));
    }
    Ok(Dataset::new(rows, Provenance::Simulated))
}

/// Partition into train/test. Test size is `round(test_fraction * n)`.
/// Stratified by class when `stratify` is set and every class is populous
/// enough (count >= 1/test_fraction); falls back to a plain shuffle split
/// otherwise. Deterministic for a given seed.
pub fn split(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::validation(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = data.len();
    let test_size = (test_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let counts = data.class_counts();
    let can_stratify =
        stratify && counts.iter().all(|&c| c as f64 >= 1.0 / test_fraction);

    let mut test_idx: Vec<usize> = Vec::with_capacity(test_size);
    if can_stratify {
        // Largest-remainder allocation of the test quota across classes.
        let mut quota: Vec<(usize, usize, f64)> = counts
            .iter()
            .enumerate()
            .map(|(c, &cnt)| {
                let exact = test_fraction * cnt as f64;
                (c, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let mut assigned: usize = quota.iter().map(|q| q.1).sum();
        quota.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
        let mut i = 0;
        while assigned < test_size {
            quota[i % 3].1 += 1;
            assigned += 1;
            i += 1;
        }
        while assigned > test_size {
            let j = quota.iter().position(|q| q.1 > 0).unwrap();
            quota[j].1 -= 1;
            assigned -= 1;
        }
        quota.sort_by_key(|q| q.0);
        for (c, take, _) in quota {
            let mut idx: Vec<usize> = data
                .rows
                .iter()
                .enumerate()
                .filter(|(_, (_, o))| class_index(o) == c)
                .map(|(i, _)| i)
                .collect();
            idx.shuffle(&mut rng);
            test_idx.extend(idx.into_iter().take(take));
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        test_idx.extend(idx.into_iter().take(test_size));
    }

    let test_set: HashSet<usize> = test_idx.iter().copied().collect();
    let mut train_rows = Vec::with_capacity(n - test_size);
    let mut test_rows = Vec::with_capacity(test_size);
    for (i, row) in data.rows.iter().enumerate() {
        if test_set.contains(&i) {
            test_rows.push(*row);
        } else {
            train_rows.push(*row);
        }
    }
    Ok((
        Dataset::new(train_rows, data.provenance),
        Dataset::new(test_rows, data.provenance),
    ))
}

/// Stand-in for a robot-measured dataset: `n` random off-lattice
/// configurations labeled by the simulator with `pair`, then corrupted with
/// probability `noise` per row (the label flips to a different class).
///
/// Configurations are rejection-sampled toward equal class counts, the way a
/// deliberate experiment would aim a share of its shots at the target rather
/// than spray uniformly (uniform configurations miss over 90% of the time).
/// If a class is unreachable for `pair`, sampling falls back to accepting any
/// outcome after a fixed attempt budget instead of looping forever.
pub fn make_pseudo_experimental(
    n: usize,
    pair: &CoefficientPair,
    noise: f64,
    seed: u64,
    ranges: &GenerationRanges,
    sim: &SimConfig,
    opts: &SimOptions,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::validation("need n > 0 pseudo-experimental rows"));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::validation(format!(
            "noise probability must be in [0, 1], got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = sim.target();

    // Per-class quotas, largest-remainder: extras go to the lower indices.
    let mut quota = [n / 3; 3];
    for q in quota.iter_mut().take(n % 3) {
        *q += 1;
    }
    let attempt_budget = 2_000 * n.max(100);

    let mut rows = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while rows.len() < n {
        attempts += 1;
        let config = LaunchConfig {
            distance: rng.gen_range(ranges.distance_m.min..=ranges.distance_m.max),
            motor_ratio: rng.gen_range(ranges.motor.min..=ranges.motor.max),
            angle: rng.gen_range(ranges.angle_deg.min..=ranges.angle_deg.max),
        };
        let traj = trajectory::simulate(&config, pair, sim, opts)?;
        let mut outcome = trajectory::score(&traj, &config, &target);
        let class = class_index(&outcome);
        if quota[class] > 0 {
            quota[class] -= 1;
        } else if attempts <= attempt_budget {
            continue;
        }
        if noise > 0.0 && rng.gen::<f64>() < noise {
            let flipped = (class + 1 + rng.gen_range(0..2usize)) % 3;
            outcome = CLASSES[flipped];
        }
        rows.push((config, outcome));
    }
    Ok(Dataset::new(rows, Provenance::Experimental))
}

const CSV_HEADER: &str = "distance_m,motor_ratio,angle_deg,hit2,hit3";

pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(32 * (data.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (config, outcome) in &data.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            config.distance,
            config.motor_ratio,
            config.angle,
            outcome.hit2 as u8,
            outcome.hit3 as u8
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>, provenance: Provenance) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{CSV_HEADER}`"),
            ))
        }
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i].trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("invalid number in field `{name}`"))
            })
        };
        let flag = |i: usize, name: &str| -> Result<bool> {
            match fields[i].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(
                    path,
                    line_no,
                    format!("field `{name}` must be 0 or 1, got `{other}`"),
                )),
            }
        };
        let config = LaunchConfig::new(
            num(0, "distance_m")?,
            num(1, "motor_ratio")?,
            num(2, "angle_deg")?,
        )
        .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let outcome = Outcome::new(flag(3, "hit2")?, flag(4, "hit3")?)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        rows.push((config, outcome));
    }
    Ok(Dataset::new(rows, provenance))
}
