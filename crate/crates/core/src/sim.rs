//! The repeated pricing game: simultaneous moves, bandit or full feedback,
//! optional bounded payoff noise and staggered market entry.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{agent_rng, make_agent, Agent, AgentConfig, FeedbackKind};
use crate::error::{Error, Result};
use crate::game::{build_game_with_budget, cell_count, BertrandSpec, NormalFormGame, RewardNormalizer};

/// Largest tensor (in payoff cells) a run materializes for fast lookups.
pub const TENSOR_BUDGET: u128 = 4_000_000;
const NOISE_STREAM: usize = usize::MAX;

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: BertrandSpec,
    pub agents: Vec<AgentConfig>,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    /// Half-width of the uniform noise added to raw profits; 0 disables it.
    #[serde(default)]
    pub noise: f64,
    /// First active step per player (1-based); everyone starts at step 1 if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<Vec<u64>>,
    /// Keep every `k`-th step in the history; 0 keeps nothing. Defaults to 1
    /// up to 100,000 steps and 10 beyond.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
}

impl RunConfig {
    pub fn new(spec: BertrandSpec, agents: Vec<AgentConfig>, horizon: u64, seed: u64) -> Self {
        Self { spec, agents, horizon, seed, noise: 0.0, entry: None, record_stride: None }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.spec.players();
        if self.agents.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} agents for {n} players",
                self.agents.len()
            )));
        }
        for a in &self.agents {
            a.validate()?;
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidArgument("noise half-width must be finite and nonnegative".into()));
        }
        if let Some(entry) = &self.entry {
            if entry.len() != n {
                return Err(Error::InvalidArgument(format!("{} entry steps for {n} players", entry.len())));
            }
            if entry.iter().any(|&e| e < 1 || e > self.horizon) {
                return Err(Error::InvalidArgument("entry steps must lie in [1, horizon]".into()));
            }
            if !entry.contains(&1) {
                return Err(Error::InvalidArgument("no player is active at step 1".into()));
            }
        }
        Ok(())
    }

    pub fn entry_steps(&self) -> Vec<u64> {
        self.entry.clone().unwrap_or_else(|| vec![1; self.spec.players()])
    }

    pub fn stride(&self) -> u64 {
        self.record_stride.unwrap_or(if self.horizon <= 100_000 { 1 } else { 10 })
    }

    /// Distinct active sets that occur during the run, in order of appearance.
    pub fn active_sets(&self) -> Vec<Vec<bool>> {
        let entry = self.entry_steps();
        let mut steps = entry.clone();
        steps.sort_unstable();
        steps.dedup();
        steps.iter().map(|&s| entry.iter().map(|&e| e <= s).collect()).collect()
    }
}

/// `u + Uniform(-half_width, half_width)`.
pub fn apply_noise<R: Rng + ?Sized>(u: f64, half_width: f64, rng: &mut R) -> f64 {
    if half_width == 0.0 {
        u
    } else {
        u + rng.random_range(-half_width..=half_width)
    }
}

/// Recorded steps of a run, stored row-major with one entry per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub players: usize,
    pub stride: u64,
    pub steps: Vec<u64>,
    /// Action index, or `usize::MAX` while inactive.
    pub actions: Vec<usize>,
    /// Posted price, or NaN while inactive.
    pub prices: Vec<f64>,
    /// Realized raw profit including noise; 0 while inactive.
    pub rewards: Vec<f64>,
    pub active: Vec<bool>,
    pub clamp_events: Vec<u64>,
}

impl RunHistory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn row<'a, T>(&self, data: &'a [T], r: usize) -> &'a [T] {
        &data[r * self.players..(r + 1) * self.players]
    }

    pub fn actions_at(&self, r: usize) -> &[usize] {
        self.row(&self.actions, r)
    }
}

/// One synchronized step, as seen by observers.
pub struct StepView<'a> {
    pub t: u64,
    /// Action index per player, `usize::MAX` while inactive.
    pub actions: &'a [usize],
    pub prices: &'a [f64],
    /// Noise-free profits.
    pub utilities: &'a [f64],
    /// Realized profits including noise.
    pub rewards: &'a [f64],
    pub normalized: &'a [f64],
    pub active: &'a [bool],
    pub agents: &'a [Option<Agent>],
    pub sim: &'a Simulation,
}

/// Consumes the full, unthinned step stream of a run.
pub trait StepObserver {
    fn on_step(&mut self, _view: &StepView<'_>) {}
}

impl StepObserver for () {}

impl<A: StepObserver, B: StepObserver> StepObserver for (A, B) {
    fn on_step(&mut self, view: &StepView<'_>) {
        self.0.on_step(view);
        self.1.on_step(view);
    }
}

impl<T: StepObserver> StepObserver for Vec<T> {
    fn on_step(&mut self, view: &StepView<'_>) {
        for o in self.iter_mut() {
            o.on_step(view);
        }
    }
}

impl<T: StepObserver + ?Sized> StepObserver for &mut T {
    fn on_step(&mut self, view: &StepView<'_>) {
        (**self).on_step(view);
    }
}

/// Static context of a run: the instance, an optional payoff tensor and the
/// reward normalization.
#[derive(Debug, Clone)]
pub struct Simulation {
    spec: BertrandSpec,
    tensor: Option<NormalFormGame>,
    normalizer: RewardNormalizer,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.spec.clone();
        let tensor = if cell_count(&spec.grid.counts()) <= TENSOR_BUDGET {
            Some(build_game_with_budget(&spec, TENSOR_BUDGET)?)
        } else {
            None
        };
        let normalizer = RewardNormalizer::from_spec(&spec, &config.active_sets());
        Ok(Self { spec, tensor, normalizer })
    }

    pub fn spec(&self) -> &BertrandSpec {
        &self.spec
    }

    pub fn tensor(&self) -> Option<&NormalFormGame> {
        self.tensor.as_ref()
    }

    pub fn normalizer(&self) -> &RewardNormalizer {
        &self.normalizer
    }

    /// Noise-free profit of `player` for every own action against the other
    /// entries of `actions`/`prices`. Bit-identical to tensor lookups.
    pub fn counterfactual(&self, player: usize, actions: &[usize], prices: &[f64], active: &[bool], out: &mut [f64]) {
        let all_active = active.iter().all(|&a| a);
        match &self.tensor {
            Some(g) if all_active => {
                let j = g.joint_index(actions);
                for (b, o) in out.iter_mut().enumerate() {
                    *o = g.payoff(player, g.deviate(j, player, b));
                }
            }
            _ => {
                let mut p = prices.to_vec();
                for (b, o) in out.iter_mut().enumerate() {
                    p[player] = self.spec.grid.price(player, b);
                    *o = self.spec.player_utility(player, &p, active);
                }
            }
        }
    }
}

/// Q-learning state: the joint action with an extra digit for inactivity.
fn joint_state(actions: &[usize], counts: &[usize]) -> u64 {
    actions.iter().zip(counts).fold(0u64, |acc, (&a, &k)| {
        let digit = if a == usize::MAX { 0 } else { a as u64 + 1 };
        acc.wrapping_mul(k as u64 + 1).wrapping_add(digit)
    })
}

pub fn run(config: &RunConfig) -> Result<RunHistory> {
    run_with_observer(config, &mut ())
}

/// Runs the repeated game, handing every step to `observer`.
pub fn run_with_observer<O: StepObserver + ?Sized>(config: &RunConfig, observer: &mut O) -> Result<RunHistory> {
    let sim = Simulation::new(config)?;
    let n = config.spec.players();
    let counts = config.spec.grid.counts();
    let entry = config.entry_steps();
    let stride = config.stride();
    let mut noise_rng: ChaCha8Rng = agent_rng(config.seed, NOISE_STREAM);

    let mut agents: Vec<Option<Agent>> = vec![None; n];
    let mut actions = vec![usize::MAX; n];
    let mut prices = vec![f64::NAN; n];
    let mut utilities = vec![0.0; n];
    let mut rewards = vec![0.0; n];
    let mut normalized = vec![0.0; n];
    let mut active = vec![false; n];
    let mut full: Vec<Vec<f64>> = counts.iter().map(|&k| vec![0.0; k]).collect();

    let capacity = if stride == 0 { 0 } else { (config.horizon / stride) as usize };
    let mut history = RunHistory {
        players: n,
        stride,
        steps: Vec::with_capacity(capacity),
        actions: Vec::with_capacity(capacity * n),
        prices: Vec::with_capacity(capacity * n),
        rewards: Vec::with_capacity(capacity * n),
        active: Vec::with_capacity(capacity * n),
        clamp_events: vec![0; n],
    };

    for t in 1..=config.horizon {
        for i in 0..n {
            if entry[i] == t {
                agents[i] = Some(make_agent(&config.agents[i], counts[i], config.seed, i, config.horizon - t + 1)?);
                active[i] = true;
            }
        }
        for i in 0..n {
            match agents[i].as_mut() {
                Some(agent) => {
                    actions[i] = agent.act();
                    prices[i] = config.spec.grid.price(i, actions[i]);
                }
                None => {
                    actions[i] = usize::MAX;
                    prices[i] = f64::NAN;
                }
            }
        }
        let all_active = active.iter().all(|&a| a);
        match sim.tensor() {
            Some(g) if all_active => {
                let j = g.joint_index(&actions);
                for (i, u) in utilities.iter_mut().enumerate() {
                    *u = g.payoff(i, j);
                }
            }
            _ => config.spec.utility_into(&prices, &active, &mut utilities),
        }
        let state = joint_state(&actions, &counts);
        for i in 0..n {
            let Some(agent) = agents[i].as_mut() else {
                rewards[i] = 0.0;
                normalized[i] = 0.0;
                continue;
            };
            let shift = apply_noise(0.0, config.noise, &mut noise_rng);
            rewards[i] = utilities[i] + shift;
            normalized[i] = sim.normalizer.apply(i, rewards[i]);
            let feedback = match agent.feedback() {
                FeedbackKind::Bandit => None,
                FeedbackKind::Full => {
                    sim.counterfactual(i, &actions, &prices, &active, &mut full[i]);
                    for (b, v) in full[i].iter_mut().enumerate() {
                        *v = if b == actions[i] { normalized[i] } else { sim.normalizer.apply(i, *v + shift) };
                    }
                    Some(full[i].as_slice())
                }
            };
            agent.observe(actions[i], normalized[i], feedback, state)?;
        }
        observer.on_step(&StepView {
            t,
            actions: &actions,
            prices: &prices,
            utilities: &utilities,
            rewards: &rewards,
            normalized: &normalized,
            active: &active,
            agents: &agents,
            sim: &sim,
        });
        if stride != 0 && t % stride == 0 {
            history.steps.push(t);
            history.actions.extend_from_slice(&actions);
            history.prices.extend_from_slice(&prices);
            history.rewards.extend_from_slice(&rewards);
            history.active.extend_from_slice(&active);
        }
    }
    for (i, agent) in agents.iter().enumerate() {
        if let Some(a) = agent {
            history.clamp_events[i] = a.clamp_events();
        }
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DemandModel, PriceGrid};
    use rand::SeedableRng;

    fn o2() -> BertrandSpec {
        BertrandSpec::new(
            vec![0.0, 0.0],
            DemandModel::Linear { alpha: vec![0.48; 2], beta: vec![0.9; 2], gamma: 0.6 },
            PriceGrid::uniform(2, 0.0, 1.0, 21).unwrap(),
        )
        .unwrap()
    }

    fn o3() -> BertrandSpec {
        BertrandSpec::new(
            vec![1.0, 1.0],
            DemandModel::Logit { quality: vec![2.0, 2.0], outside: 0.0, mu: 0.25 },
            PriceGrid::uniform(2, 1.0, 2.0, 21).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_and_exact() {
        let config = RunConfig::new(o2(), vec![AgentConfig::exp3(), AgentConfig::exp3()], 10, 0);
        let a = run(&config).unwrap();
        assert_eq!(a, run(&config).unwrap());
        assert_eq!(a.len(), 10);
        for r in 0..a.len() {
            let u = config.spec.utility(a.row(&a.prices, r), &[true, true]).unwrap();
            assert_eq!(a.row(&a.rewards, r), u.as_slice());
        }
    }

    #[test]
    fn stride_defaults() {
        let mut c = RunConfig::new(o2(), vec![AgentConfig::Uniform; 2], 100_000, 0);
        assert_eq!(c.stride(), 1);
        c.horizon = 100_001;
        assert_eq!(c.stride(), 10);
        c.horizon = 50;
        c.record_stride = Some(0);
        assert!(run(&c).unwrap().is_empty());
    }

    #[test]
    fn staggered_entry() {
        let mut c = RunConfig::new(o3(), vec![AgentConfig::exp3(), AgentConfig::exp3()], 50, 3);
        c.entry = Some(vec![1, 11]);
        let h = run(&c).unwrap();
        for r in 0..h.len() {
            let t = h.steps[r];
            let acts = h.actions_at(r);
            assert_eq!(acts[1] == usize::MAX, t < 11);
            if t < 11 {
                let p = h.row(&h.prices, r)[0];
                let single = (8.0 - 4.0 * p).exp() / (1.0 + (8.0 - 4.0 * p).exp()) * (p - 1.0);
                assert!((h.row(&h.rewards, r)[0] - single).abs() < 1e-12);
                assert_eq!(h.row(&h.rewards, r)[1], 0.0);
            }
        }
    }

    #[test]
    fn config_errors() {
        let mut c = RunConfig::new(o2(), vec![AgentConfig::Uniform], 10, 0);
        assert!(run(&c).is_err());
        c.agents.push(AgentConfig::Uniform);
        c.entry = Some(vec![2, 3]);
        assert!(run(&c).is_err());
        c.entry = Some(vec![1, 11]);
        assert!(run(&c).is_err());
        c.entry = None;
        c.horizon = 0;
        assert!(run(&c).is_err());
    }

    #[test]
    fn noise_bounds_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(apply_noise(0.3, 0.0, &mut rng), 0.3);
        let draws: Vec<f64> = (0..1_000_000).map(|_| apply_noise(0.3, 0.1, &mut rng)).collect();
        assert!(draws.iter().all(|&d| (0.2..=0.4).contains(&d)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sigma = 0.1 / 3f64.sqrt() / 1000.0;
        assert!((mean - 0.3).abs() < 3.0 * sigma);
    }

    struct FullCheck(usize);
    impl StepObserver for FullCheck {
        fn on_step(&mut self, v: &StepView<'_>) {
            let mut out = vec![0.0; 21];
            v.sim.counterfactual(0, v.actions, v.prices, v.active, &mut out);
            assert_eq!(out[v.actions[0]], v.utilities[0]);
            self.0 += 1;
        }
    }

    #[test]
    fn observer_sees_every_step() {
        let mut c = RunConfig::new(o2(), vec![AgentConfig::mwu(), AgentConfig::thompson()], 500, 1);
        c.record_stride = Some(100);
        let mut check = FullCheck(0);
        let h = run_with_observer(&c, &mut check).unwrap();
        assert_eq!(check.0, 500);
        assert_eq!(h.steps, vec![100, 200, 300, 400, 500]);
    }
}
