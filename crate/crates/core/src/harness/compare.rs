//! Trains several algorithms over the same seeds and compares their late
//! returns.

use super::stats::{mean, paired_bootstrap_ci};
use super::train::{train, HarnessError, LearningCurve, TrainConfig};
use crate::agents::Algorithm;
use crate::scenario::ScenarioConfig;
use crate::sensing::SensorConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Episodes at the end of each curve that the comparison scores.
pub const SCORED_TAIL: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub episodes: u32,
    pub seeds: Vec<u64>,
    /// One curve per seed, in `seeds` order.
    pub curves: BTreeMap<Algorithm, Vec<LearningCurve>>,
}

/// Runs every (algorithm, seed) pair; runs are independent and go in
/// parallel.
pub fn compare(
    scenario: &ScenarioConfig,
    sensor: &SensorConfig,
    algorithms: &[Algorithm],
    episodes: u32,
    seeds: &[u64],
) -> Result<Comparison, HarnessError> {
    let jobs: Vec<(Algorithm, u64)> =
        algorithms.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let results: Vec<(Algorithm, LearningCurve)> = jobs
        .par_iter()
        .map(|&(algorithm, seed)| {
            let mut cfg = TrainConfig::new(algorithm, episodes, seed);
            cfg.sensor = sensor.clone();
            Ok((algorithm, train(&cfg, scenario)?.curve))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut curves: BTreeMap<Algorithm, Vec<LearningCurve>> = BTreeMap::new();
    for (algorithm, curve) in results {
        curves.entry(algorithm).or_default().push(curve);
    }
    Ok(Comparison { episodes, seeds: seeds.to_vec(), curves })
}

impl Comparison {
    /// Mean of the last `SCORED_TAIL` returns, per seed.
    pub fn tail_means(&self, algorithm: Algorithm) -> Vec<f64> {
        self.curves.get(&algorithm).map_or_else(Vec::new, |cs| cs.iter().map(|c| c.mean_last(SCORED_TAIL)).collect())
    }

    pub fn score(&self, algorithm: Algorithm) -> f64 {
        mean(&self.tail_means(algorithm))
    }

    /// 95% paired-bootstrap interval of `score(a) - score(b)` over seeds.
    pub fn gap_ci(&self, a: Algorithm, b: Algorithm, resamples: usize, seed: u64) -> (f64, f64) {
        paired_bootstrap_ci(&self.tail_means(a), &self.tail_means(b), resamples, seed)
    }

    /// `algorithm,seed,tail_mean` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["algorithm", "seed", "tail_mean"])?;
        for (algorithm, _) in &self.curves {
            for (seed, m) in self.seeds.iter().zip(self.tail_means(*algorithm)) {
                w.write_record([algorithm.as_str().to_string(), seed.to_string(), m.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
