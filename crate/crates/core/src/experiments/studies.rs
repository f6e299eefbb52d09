//! Dedicated studies: convergence of mean-based learners into the
//! rationalizable set, and staggered market entry.

use serde::{Deserialize, Serialize};

use super::presets::{compute_references, PresetId};
use crate::agents::AgentConfig;
use crate::error::{Error, Result};
use crate::game::build_game;
use crate::metrics::{ci_price, BlockMeans, FrequencyTracker, TailStats, ViolationTracker};
use crate::sim::{run_with_observer, RunConfig};
use crate::solvers::cr_set;

use super::cells::TAIL_WINDOW;

/// Per-seed outcome of a convergence run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub preset: PresetId,
    pub agent: String,
    pub seed: u64,
    pub horizon: u64,
    /// Share of the last `tail_fraction` of steps with every action in the CR set.
    pub tail_frequency: f64,
    /// Mean-based violation rate over the second half of the run, pooled over players.
    pub violation_rate: f64,
    /// Final running-median price index per player.
    pub ci_prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceStudy {
    pub preset: PresetId,
    pub agent: AgentConfig,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "tail_fraction_default")]
    pub tail_fraction: f64,
}

fn tail_fraction_default() -> f64 {
    0.1
}

impl ConvergenceStudy {
    pub fn cr_target(&self) -> Result<crate::solvers::ActionSubsets> {
        cr_set(&build_game(&self.preset.spec())?)
    }

    /// Runs one seed in self-play against the CR set `target`.
    pub fn run_seed(&self, seed: u64, target: &crate::solvers::ActionSubsets) -> Result<ConvergenceRow> {
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::InvalidArgument("tail fraction must lie in (0, 1]".into()));
        }
        let spec = self.preset.spec();
        let refs = compute_references(&spec)?;
        let mut config = RunConfig::new(spec.clone(), vec![self.agent.clone(); 2], self.horizon, seed);
        config.record_stride = Some(0);
        let tail_steps = ((self.horizon as f64 * self.tail_fraction).ceil() as u64).max(1);
        let mut observers = (
            (FrequencyTracker::new(target.clone(), self.horizon - tail_steps + 1), ViolationTracker::new(2, self.horizon / 2 + 1)),
            TailStats::new(&spec, TAIL_WINDOW),
        );
        run_with_observer(&config, &mut observers)?;
        let ((freq, viol), tail) = observers;
        let rates: Vec<f64> = viol.rates().into_iter().flatten().collect();
        let violation_rate = if rates.is_empty() { f64::NAN } else { rates.iter().sum::<f64>() / rates.len() as f64 };
        let ci_prices = tail
            .median_prices()
            .iter()
            .enumerate()
            .map(|(i, &p)| ci_price(p, &refs.prices, i))
            .collect::<Result<_>>()?;
        Ok(ConvergenceRow {
            preset: self.preset,
            agent: self.agent.label().to_string(),
            seed,
            horizon: self.horizon,
            tail_frequency: freq.frequency(),
            violation_rate,
            ci_prices,
        })
    }
}

/// Outcome of one staggered-entry run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaggeredRow {
    pub preset: PresetId,
    pub agent: String,
    pub seed: u64,
    pub horizon: u64,
    /// First step of the entrant; `1` for the simultaneous reference run.
    pub entry_step: u64,
    pub nash_price: f64,
    /// Incumbent mean price over the last block before entry.
    pub pre_entry_mean: f64,
    /// Incumbent mean price over the first block after entry.
    pub post_entry_mean: f64,
    /// Incumbent mean price over the final block.
    pub final_mean: f64,
    /// `(last step of block, incumbent mean, entrant mean)` for every block.
    pub blocks: Vec<(u64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaggeredStudy {
    pub preset: PresetId,
    pub agent: AgentConfig,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Fraction of the horizon the incumbent plays alone.
    #[serde(default = "entry_fraction_default")]
    pub entry_fraction: f64,
    #[serde(default = "block_default")]
    pub block: u64,
}

fn entry_fraction_default() -> f64 {
    0.2
}
fn block_default() -> u64 {
    10_000
}

impl StaggeredStudy {
    pub fn entry_step(&self) -> u64 {
        (self.horizon as f64 * self.entry_fraction).round() as u64 + 1
    }

    /// Runs one seed; `simultaneous` gives the reference run without delay.
    pub fn run_seed(&self, seed: u64, simultaneous: bool) -> Result<StaggeredRow> {
        let spec = self.preset.spec();
        let refs = compute_references(&spec)?;
        let entry = if simultaneous { 1 } else { self.entry_step() };
        if entry > self.horizon {
            return Err(Error::InvalidArgument("entry falls after the horizon".into()));
        }
        let mut config = RunConfig::new(spec, vec![self.agent.clone(); 2], self.horizon, seed);
        config.entry = Some(vec![1, entry]);
        config.record_stride = Some(0);
        let mut blocks = BlockMeans::new(2, self.block);
        run_with_observer(&config, &mut blocks)?;
        let rows: Vec<(u64, f64, f64)> = blocks.blocks.iter().map(|(t, m)| (*t, m[0], m[1])).collect();
        let incumbent_at = |end: u64| rows.iter().find(|(t, _, _)| *t == end).map_or(f64::NAN, |r| r.1);
        let pre_end = (entry - 1) / self.block * self.block;
        Ok(StaggeredRow {
            preset: self.preset,
            agent: self.agent.label().to_string(),
            seed,
            horizon: self.horizon,
            entry_step: entry,
            nash_price: refs.prices.nash[0],
            pre_entry_mean: if simultaneous { f64::NAN } else { incumbent_at(pre_end) },
            post_entry_mean: incumbent_at(pre_end + self.block),
            final_mean: rows.last().map_or(f64::NAN, |r| r.1),
            blocks: rows,
        })
    }
}
