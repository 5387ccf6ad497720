//! Brute-force grid search over coefficient pairs against a labeled dataset.

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::physics::CoefficientPair;
use crate::trajectory::{self, SimOptions};

/// Inclusive coefficient lattice, applied identically to both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min >= 0.0 && min.is_finite()) {
            return Err(Error::validation(format!("grid min must be >= 0, got {min}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::validation(format!("grid step must be > 0, got {step}")));
        }
        if !(max > min) {
            return Err(Error::validation(format!(
                "grid max ({max}) must be > min ({min})"
            )));
        }
        Ok(Self { min, max, step })
    }

    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count()).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// How one coefficient pair fits the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub pair: CoefficientPair,
    /// Fraction of rows whose simulated hit3 matches the label.
    pub acc3: f64,
    /// Fraction of rows whose simulated hit2 matches the label.
    pub acc2: f64,
    /// Mean deviation over rows labeled (1,1), finite values only.
    pub mean_dev: f64,
    /// Median deviation over rows labeled (1,1), finite values only.
    pub median_dev: f64,
}

/// Simulate every row of `data` with `pair` and compare against its labels.
///
/// Deviation statistics are computed over the rows labeled (1,1) only (those
/// are the shots aimed at the target center, so deviation is meaningful);
/// rows whose simulated trajectory never reaches the target plane are
/// excluded, and a pair with no finite deviation at all gets +infinity.
pub fn evaluate_pair(
    pair: &CoefficientPair,
    data: &Dataset,
    sim: &SimConfig,
    opts: &SimOptions,
) -> Result<PairScore> {
    if data.is_empty() {
        return Err(Error::validation("cannot evaluate a pair on an empty dataset"));
    }
    let target = sim.target();
    let mut match3 = 0usize;
    let mut match2 = 0usize;
    let mut devs: Vec<f64> = Vec::new();
    for (config, label) in &data.rows {
        let traj = trajectory::simulate(config, pair, sim, opts)?;
        let predicted = trajectory::score(&traj, config, &target);
        if predicted.hit3 == label.hit3 {
            match3 += 1;
        }
        if predicted.hit2 == label.hit2 {
            match2 += 1;
        }
        if label.hit3 {
            let dev = trajectory::deviation(&traj, config, &target);
            if dev.is_finite() {
                devs.push(dev);
            }
        }
    }
    let n = data.len() as f64;
    let (mean_dev, median_dev) = if devs.is_empty() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = devs.iter().sum::<f64>() / devs.len() as f64;
        let mid = devs.len() / 2;
        let median = if devs.len() % 2 == 0 {
            (devs[mid - 1] + devs[mid]) / 2.0
        } else {
            devs[mid]
        };
        (mean, median)
    };
    Ok(PairScore {
        pair: *pair,
        acc3: match3 as f64 / n,
        acc2: match2 as f64 / n,
        mean_dev,
        median_dev,
    })
}

/// Evaluate every (C_l, C_d) pair on the Cartesian grid.
///
/// Fans out across the rayon thread pool; the result order is always
/// lexicographic by (C_l, C_d), independent of parallelism.
pub fn grid_search(
    data: &Dataset,
    grid: &GridSpec,
    sim: &SimConfig,
    opts: &SimOptions,
) -> Result<Vec<PairScore>> {
    let values = grid.values();
    let pairs: Vec<CoefficientPair> = values
        .iter()
        .flat_map(|&lift| values.iter().map(move |&drag| CoefficientPair { lift, drag }))
        .collect();
    pairs
        .par_iter()
        .map(|pair| evaluate_pair(pair, data, sim, opts))
        .collect()
}

/// Total selection order: maximize acc3, then acc2, then minimize mean
/// deviation, then median deviation; residual ties go to the smallest C_l,
/// then smallest C_d.
pub fn selection_cmp(a: &PairScore, b: &PairScore) -> std::cmp::Ordering {
    b.acc3
        .partial_cmp(&a.acc3)
        .unwrap()
        .then(b.acc2.partial_cmp(&a.acc2).unwrap())
        .then(a.mean_dev.partial_cmp(&b.mean_dev).unwrap())
        .then(a.median_dev.partial_cmp(&b.median_dev).unwrap())
        .then(a.pair.lift.partial_cmp(&b.pair.lift).unwrap())
        .then(a.pair.drag.partial_cmp(&b.pair.drag).unwrap())
}

/// Pick the best-fitting pair under [`selection_cmp`].
pub fn select_pair(scores: &[PairScore]) -> Result<CoefficientPair> {
    scores
        .iter()
        .min_by(|a, b| selection_cmp(a, b))
        .map(|s| s.pair)
        .ok_or_else(|| Error::validation("cannot select a pair from an empty score list"))
}

/// Scores CSV with header `cl,cd,acc3,acc2,mean_dev,median_dev`, rows sorted
/// by selection order. `top` limits the row count.
pub fn scores_to_csv(scores: &[PairScore], top: Option<usize>) -> String {
    let mut sorted: Vec<&PairScore> = scores.iter().collect();
    sorted.sort_by(|a, b| selection_cmp(a, b));
    if let Some(k) = top {
        sorted.truncate(k);
    }
    let mut out = String::from("cl,cd,acc3,acc2,mean_dev,median_dev\n");
    for s in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.pair.lift, s.pair.drag, s.acc3, s.acc2, s.mean_dev, s.median_dev
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{self, Provenance};
    use crate::physics::LaunchConfig;
    use crate::trajectory::Outcome;

    fn sim() -> SimConfig {
        SimConfig::default()
    }

    fn small_configs() -> Vec<LaunchConfig> {
        vec![
            LaunchConfig::new(2.0, 0.3, 55.0).unwrap(),
            LaunchConfig::new(3.0, 0.4, 50.0).unwrap(),
            LaunchConfig::new(4.0, 0.5, 45.0).unwrap(),
            LaunchConfig::new(5.0, 0.6, 40.0).unwrap(),
            LaunchConfig::new(6.0, 0.2, 60.0).unwrap(),
            LaunchConfig::new(2.5, 0.8, 35.0).unwrap(),
        ]
    }

    #[test]
    fn grid_counts() {
        assert_eq!(GridSpec::new(0.0, 5.0, 0.005).unwrap().count(), 1001);
        assert_eq!(GridSpec::new(0.0, 0.01, 0.005).unwrap().count(), 3);
    }

    #[test]
    fn self_labeled_data_scores_perfectly() {
        let sim = sim();
        let opts = SimOptions::default();
        let pair = CoefficientPair::new(0.06, 0.91).unwrap();
        let data = datagen::label_grid(&small_configs(), &pair, &sim, &opts).unwrap();
        let score = evaluate_pair(&pair, &data, &sim, &opts).unwrap();
        assert_eq!(score.acc3, 1.0);
        assert_eq!(score.acc2, 1.0);
    }

    #[test]
    fn accuracy_counts_disagreements() {
        let sim = sim();
        let opts = SimOptions::default();
        let pair = CoefficientPair::vacuum();
        let configs = &small_configs()[..4];
        let mut data = datagen::label_grid(configs, &pair, &sim, &opts).unwrap();
        // Flip exactly one hit3 label (keeping containment).
        let (_, outcome) = &mut data.rows[0];
        *outcome = if outcome.hit3 {
            Outcome::TWO_POINT
        } else {
            Outcome::new(true, true).unwrap()
        };
        let score = evaluate_pair(&pair, &data, &sim, &opts).unwrap();
        assert_eq!(score.acc3, 0.75);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let data = Dataset::new(Vec::new(), Provenance::Experimental);
        let pair = CoefficientPair::vacuum();
        assert!(evaluate_pair(&pair, &data, &sim(), &SimOptions::default()).is_err());
    }

    #[test]
    fn tiny_grid_search_evaluates_all_pairs() {
        let sim = sim();
        let opts = SimOptions::default();
        let pair = CoefficientPair::new(0.0, 0.005).unwrap();
        let data = datagen::label_grid(&small_configs(), &pair, &sim, &opts).unwrap();
        let grid = GridSpec::new(0.0, 0.01, 0.005).unwrap();
        let scores = grid_search(&data, &grid, &sim, &opts).unwrap();
        assert_eq!(scores.len(), 9);
        // Lexicographic (cl, cd) order.
        for w in scores.windows(2) {
            let (a, b) = (w[0].pair, w[1].pair);
            assert!(a.lift < b.lift || (a.lift == b.lift && a.drag < b.drag));
        }
    }

    #[test]
    fn select_pair_single_candidate() {
        let score = PairScore {
            pair: CoefficientPair::new(0.1, 0.2).unwrap(),
            acc3: 0.5,
            acc2: 0.5,
            mean_dev: 0.1,
            median_dev: 0.1,
        };
        assert_eq!(select_pair(&[score]).unwrap(), score.pair);
    }

    #[test]
    fn select_pair_prefers_lower_mean_dev() {
        let mk = |cl: f64, mean: f64| PairScore {
            pair: CoefficientPair::new(cl, 1.0).unwrap(),
            acc3: 0.9,
            acc2: 1.0,
            mean_dev: mean,
            median_dev: 0.05,
        };
        let a = mk(0.3, 0.06);
        let b = mk(0.4, 0.05);
        assert_eq!(select_pair(&[a, b]).unwrap(), b.pair);
        // Permutation invariance.
        assert_eq!(select_pair(&[b, a]).unwrap(), b.pair);
    }

    #[test]
    fn select_pair_infinite_dev_ranks_last() {
        let mk = |cl: f64, mean: f64, median: f64| PairScore {
            pair: CoefficientPair::new(cl, 1.0).unwrap(),
            acc3: 0.9,
            acc2: 1.0,
            mean_dev: mean,
            median_dev: median,
        };
        let finite = mk(0.5, 0.2, 0.2);
        let infinite = mk(0.1, f64::INFINITY, f64::INFINITY);
        assert_eq!(select_pair(&[infinite, finite]).unwrap(), finite.pair);
    }

    #[test]
    fn superset_grid_never_hurts_selected_acc3() {
        let sim = sim();
        let opts = SimOptions::default();
        let truth = CoefficientPair::new(0.1, 0.5).unwrap();
        let data = datagen::label_grid(&small_configs(), &truth, &sim, &opts).unwrap();
        let small = GridSpec::new(0.0, 0.2, 0.1).unwrap();
        let big = GridSpec::new(0.0, 0.6, 0.1).unwrap();
        let best = |g: &GridSpec| {
            let scores = grid_search(&data, g, &sim, &opts).unwrap();
            let pair = select_pair(&scores).unwrap();
            scores
                .iter()
                .find(|s| s.pair == pair)
                .map(|s| s.acc3)
                .unwrap()
        };
        assert!(best(&big) >= best(&small));
    }
}
