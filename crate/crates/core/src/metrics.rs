//! Outcome statistics: collusion indices, running medians, time-average
//! frequencies and the mean-based violation rate, plus streaming observers
//! that compute them from the unthinned step stream.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BertrandSpec, NormalFormGame, RewardNormalizer};
use crate::sim::{StepObserver, StepView};
use crate::solvers::ActionSubsets;

/// Slack on the distribution mass in the mean-based violation test.
pub const VIOLATION_SLACK: f64 = 0.05;

/// Competitive and collusive anchors of the collusion indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePrices {
    pub nash: Vec<f64>,
    pub monopoly: Vec<f64>,
    pub u_nash: Vec<f64>,
    pub u_monopoly: Vec<f64>,
}

impl ReferencePrices {
    /// Evaluates the anchor profits with every player active.
    pub fn new(spec: &BertrandSpec, nash: Vec<f64>, monopoly: Vec<f64>) -> Result<Self> {
        let active = vec![true; spec.players()];
        let u_nash = spec.utility(&nash, &active)?;
        let u_monopoly = spec.utility(&monopoly, &active)?;
        Ok(Self { nash, monopoly, u_nash, u_monopoly })
    }
}

/// `(a_i - nash_i) / (monopoly_i - nash_i)`, unclamped.
pub fn ci_price(price: f64, refs: &ReferencePrices, player: usize) -> Result<f64> {
    let span = refs.monopoly[player] - refs.nash[player];
    if span == 0.0 {
        return Err(Error::Undefined(format!("player {player} has equal competitive and collusive prices")));
    }
    Ok((price - refs.nash[player]) / span)
}

/// Share of the collusive profit surplus realized by `profits`, unclamped.
pub fn ci_profit(profits: &[f64], refs: &ReferencePrices) -> Result<f64> {
    let base: f64 = refs.u_nash.iter().sum();
    let span = refs.u_monopoly.iter().sum::<f64>() - base;
    if span == 0.0 {
        return Err(Error::Undefined("collusive and competitive profits coincide".into()));
    }
    Ok((profits.iter().sum::<f64>() - base) / span)
}

/// Median of a nonempty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Trailing-window median; the first `window - 1` entries use the available prefix.
pub fn running_median(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut sorted: Vec<f64> = Vec::with_capacity(window);
    let mut out = Vec::with_capacity(series.len());
    for (t, &x) in series.iter().enumerate() {
        if t >= window {
            let old = series[t - window];
            let pos = sorted.partition_point(|v| v.total_cmp(&old).is_lt());
            sorted.remove(pos);
        }
        let pos = sorted.partition_point(|v| v.total_cmp(&x).is_lt());
        sorted.insert(pos, x);
        let m = sorted.len() / 2;
        out.push(if sorted.len() % 2 == 1 { sorted[m] } else { 0.5 * (sorted[m - 1] + sorted[m]) });
    }
    out
}

/// Number of tail rows for a fraction of `len`, at least one.
pub fn tail_len(len: usize, fraction: f64) -> usize {
    ((len as f64 * fraction).ceil() as usize).clamp(1, len.max(1))
}

/// Fraction of the last `tail_fraction` of the profiles in which every
/// player's action lies in its target subset.
pub fn time_average_frequency(profiles: &[Vec<usize>], target: &ActionSubsets, tail_fraction: f64) -> Result<f64> {
    if profiles.is_empty() || !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument("frequency needs a nonempty tail".into()));
    }
    let tail = tail_len(profiles.len(), tail_fraction);
    let inside = profiles[profiles.len() - tail..].iter().filter(|p| target.contains_profile(p)).count();
    Ok(inside as f64 / tail as f64)
}

/// Counts steps where an action trailing the best historical mean by more
/// than `gamma_t` still gets more than `gamma_t + slack` probability.
#[derive(Debug, Clone)]
pub struct ViolationCounter {
    sums: Vec<f64>,
    steps: u64,
    pub violations: u64,
    pub checks: u64,
}

impl ViolationCounter {
    pub fn new(actions: usize) -> Self {
        Self { sums: vec![0.0; actions], steps: 0, violations: 0, checks: 0 }
    }

    /// Scores the distribution of step `t` against means of earlier steps
    /// (when `count` is set), then adds this step's counterfactual rewards.
    pub fn step(&mut self, t: u64, dist: &[f64], counterfactual: &[f64], count: bool, schedule: impl Fn(u64) -> f64) {
        if count && self.steps > 0 && dist.len() > 1 {
            let gamma = schedule(t);
            let n = self.steps as f64;
            let best = self.sums.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s / n));
            for (a, &p) in dist.iter().enumerate() {
                if best - self.sums[a] / n > gamma && p > gamma + VIOLATION_SLACK {
                    self.violations += 1;
                }
            }
            self.checks += dist.len() as u64;
        }
        for (s, &r) in self.sums.iter_mut().zip(counterfactual) {
            *s += r;
        }
        self.steps += 1;
    }

    pub fn rate(&self) -> f64 {
        if self.checks == 0 {
            0.0
        } else {
            self.violations as f64 / self.checks as f64
        }
    }
}

/// Violation rate of `player` from a complete step sequence: joint actions,
/// the player's per-step distributions, and a game giving counterfactual
/// rewards (normalized with `normalizer`). Only steps at index `>= from`
/// are scored.
pub fn mean_based_violation_rate(
    profiles: &[Vec<usize>],
    distributions: &[Vec<f64>],
    game: &NormalFormGame,
    normalizer: &RewardNormalizer,
    player: usize,
    from: usize,
    schedule: impl Fn(u64) -> f64,
) -> Result<f64> {
    if profiles.len() != distributions.len() {
        return Err(Error::InvalidArgument("one distribution per step is required".into()));
    }
    let k = game.actions(player);
    let mut counter = ViolationCounter::new(k);
    let mut cf = vec![0.0; k];
    for (s, (profile, dist)) in profiles.iter().zip(distributions).enumerate() {
        if dist.len() != k {
            return Err(Error::InvalidArgument("distribution length differs from the action count".into()));
        }
        let j = game.joint_index(profile);
        for (b, c) in cf.iter_mut().enumerate() {
            *c = normalizer.apply(player, game.payoff(player, game.deviate(j, player, b)));
        }
        counter.step(s as u64 + 1, dist, &cf, s >= from, &schedule);
    }
    Ok(counter.rate())
}

/// Online violation tracking for distribution-based agents in a simulation.
/// Steps are counted by each agent's own clock; scoring starts at global step `from`.
#[derive(Debug, Clone)]
pub struct ViolationTracker {
    counters: Vec<Option<ViolationCounter>>,
    from: u64,
    scratch: Vec<f64>,
}

impl ViolationTracker {
    pub fn new(players: usize, from: u64) -> Self {
        Self { counters: vec![None; players], from, scratch: Vec::new() }
    }

    /// Rate per player, `None` for agents without a distribution view.
    pub fn rates(&self) -> Vec<Option<f64>> {
        self.counters.iter().map(|c| c.as_ref().map(ViolationCounter::rate)).collect()
    }
}

impl StepObserver for ViolationTracker {
    fn on_step(&mut self, v: &StepView<'_>) {
        for (i, slot) in v.agents.iter().enumerate() {
            let Some(agent) = slot else { continue };
            if !agent.config().has_distribution() {
                continue;
            }
            let k = agent.actions();
            self.scratch.resize(k, 0.0);
            v.sim.counterfactual(i, v.actions, v.prices, v.active, &mut self.scratch);
            let norm = v.sim.normalizer();
            for c in self.scratch.iter_mut() {
                *c = norm.apply(i, *c);
            }
            let counter = self.counters[i].get_or_insert_with(|| ViolationCounter::new(k));
            counter.step(agent.steps(), agent.last_distribution(), &self.scratch, v.t >= self.from, crate::agents::mean_based_schedule);
        }
    }
}

/// Trailing window over grid indices with O(K) median queries.
#[derive(Debug, Clone)]
pub struct IndexWindow {
    counts: Vec<u32>,
    queue: VecDeque<usize>,
    window: usize,
}

impl IndexWindow {
    pub fn new(actions: usize, window: usize) -> Self {
        Self { counts: vec![0; actions], queue: VecDeque::with_capacity(window + 1), window: window.max(1) }
    }

    pub fn push(&mut self, a: usize) {
        self.queue.push_back(a);
        self.counts[a] += 1;
        if self.queue.len() > self.window {
            let old = self.queue.pop_front().unwrap();
            self.counts[old] -= 1;
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    fn kth(&self, k: usize) -> usize {
        let mut seen = 0usize;
        for (a, &c) in self.counts.iter().enumerate() {
            seen += c as usize;
            if seen > k {
                return a;
            }
        }
        self.counts.len() - 1
    }

    /// Median of the window's values under `value(index)`.
    pub fn median(&self, value: impl Fn(usize) -> f64) -> f64 {
        let n = self.queue.len();
        if n % 2 == 1 {
            value(self.kth(n / 2))
        } else {
            0.5 * (value(self.kth(n / 2 - 1)) + value(self.kth(n / 2)))
        }
    }
}

/// Final-window statistics: per-player median price and mean profit over
/// the last `window` active steps.
#[derive(Debug, Clone)]
pub struct TailStats {
    window: usize,
    prices: Vec<Option<IndexWindow>>,
    profits: Vec<VecDeque<f64>>,
    grid: Vec<Vec<f64>>,
}

impl TailStats {
    pub fn new(spec: &BertrandSpec, window: usize) -> Self {
        let n = spec.players();
        Self {
            window,
            prices: vec![None; n],
            profits: vec![VecDeque::with_capacity(window + 1); n],
            grid: spec.grid.all().to_vec(),
        }
    }

    pub fn median_prices(&self) -> Vec<f64> {
        self.prices
            .iter()
            .enumerate()
            .map(|(i, w)| match w {
                Some(w) if !w.is_empty() => w.median(|a| self.grid[i][a]),
                _ => f64::NAN,
            })
            .collect()
    }

    pub fn mean_profits(&self) -> Vec<f64> {
        self.profits
            .iter()
            .map(|q| if q.is_empty() { f64::NAN } else { q.iter().sum::<f64>() / q.len() as f64 })
            .collect()
    }
}

impl StepObserver for TailStats {
    fn on_step(&mut self, v: &StepView<'_>) {
        for i in 0..v.actions.len() {
            if !v.active[i] {
                continue;
            }
            let k = self.grid[i].len();
            let window = self.window;
            self.prices[i].get_or_insert_with(|| IndexWindow::new(k, window)).push(v.actions[i]);
            let q = &mut self.profits[i];
            q.push_back(v.utilities[i]);
            if q.len() > self.window {
                q.pop_front();
            }
        }
    }
}

/// Thinned running-median price curves, one point every `every` steps.
#[derive(Debug, Clone)]
pub struct PriceCurves {
    every: u64,
    windows: Vec<Option<IndexWindow>>,
    grid: Vec<Vec<f64>>,
    window: usize,
    /// `(t, per-player running median price, NaN while inactive)`.
    pub points: Vec<(u64, Vec<f64>)>,
}

impl PriceCurves {
    pub fn new(spec: &BertrandSpec, window: usize, every: u64) -> Self {
        Self {
            every: every.max(1),
            windows: vec![None; spec.players()],
            grid: spec.grid.all().to_vec(),
            window,
            points: Vec::new(),
        }
    }
}

impl StepObserver for PriceCurves {
    fn on_step(&mut self, v: &StepView<'_>) {
        for i in 0..v.actions.len() {
            if v.active[i] {
                let (k, window) = (self.grid[i].len(), self.window);
                self.windows[i].get_or_insert_with(|| IndexWindow::new(k, window)).push(v.actions[i]);
            }
        }
        if v.t % self.every == 0 {
            let row = self
                .windows
                .iter()
                .enumerate()
                .map(|(i, w)| match w {
                    Some(w) => w.median(|a| self.grid[i][a]),
                    None => f64::NAN,
                })
                .collect();
            self.points.push((v.t, row));
        }
    }
}

/// Share of steps from `from` on where every player's action is in `target`.
#[derive(Debug, Clone)]
pub struct FrequencyTracker {
    target: ActionSubsets,
    from: u64,
    pub inside: u64,
    pub total: u64,
}

impl FrequencyTracker {
    pub fn new(target: ActionSubsets, from: u64) -> Self {
        Self { target, from, inside: 0, total: 0 }
    }

    pub fn frequency(&self) -> f64 {
        if self.total == 0 {
            f64::NAN
        } else {
            self.inside as f64 / self.total as f64
        }
    }
}

impl StepObserver for FrequencyTracker {
    fn on_step(&mut self, v: &StepView<'_>) {
        if v.t >= self.from {
            self.total += 1;
            if self.target.contains_profile(v.actions) {
                self.inside += 1;
            }
        }
    }
}

/// Mean price of each player over consecutive blocks of `block` steps,
/// inactive steps excluded (NaN when a player was never active in a block).
#[derive(Debug, Clone)]
pub struct BlockMeans {
    block: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
    /// `(last step of block, per-player mean price)`.
    pub blocks: Vec<(u64, Vec<f64>)>,
}

impl BlockMeans {
    pub fn new(players: usize, block: u64) -> Self {
        Self { block: block.max(1), sums: vec![0.0; players], counts: vec![0; players], blocks: Vec::new() }
    }
}

impl StepObserver for BlockMeans {
    fn on_step(&mut self, v: &StepView<'_>) {
        for i in 0..v.prices.len() {
            if v.active[i] {
                self.sums[i] += v.prices[i];
                self.counts[i] += 1;
            }
        }
        if v.t % self.block == 0 {
            let means = self
                .sums
                .iter()
                .zip(&self.counts)
                .map(|(&s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
                .collect();
            self.blocks.push((v.t, means));
            self.sums.iter_mut().for_each(|s| *s = 0.0);
            self.counts.iter_mut().for_each(|c| *c = 0);
        }
    }
}
