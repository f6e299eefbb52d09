//! Learning algorithms behind one act / observe interface.
//!
//! Every agent owns its random stream, derived from the run seed and the
//! agent's position, so runs are reproducible bit for bit.

mod config;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use config::{AgentConfig, FeedbackKind, DEFAULT_MB_EXP3_ETA_SCALE, DEFAULT_MWU_ETA_SCALE};

const SEED_SALT: u64 = 0x6265_7274_7261_6e64;
const CLAMP_SLACK: f64 = 1e-9;
/// Q-learning state before any joint action has been played.
pub const INITIAL_STATE: u64 = u64::MAX;

/// Independent stream for agent `index` of a run.
pub fn agent_rng(run_seed: u64, index: usize) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&run_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(index as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&SEED_SALT.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Default mean-based tolerance `t^(-1/4)`.
pub fn mean_based_schedule(t: u64) -> f64 {
    (t.max(1) as f64).powf(-0.25)
}

/// UCB-Tuned exploration bonus for an action with `count` plays out of `n`.
pub fn ucb_tuned_bonus(count: u64, n: u64, mean: f64, mean_sq: f64) -> f64 {
    let (c, ln) = (count as f64, (n as f64).ln());
    let v = mean_sq - mean * mean + (2.0 * ln / c).sqrt();
    (ln / c * v.min(0.25)).sqrt()
}

/// `(1 - mix) softmax(scale * scores) + mix / K`, written into `out`.
pub fn softmax_mixture(scores: &[f64], scale: f64, mix: f64, out: &mut [f64]) {
    let top = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(scale * s));
    let mut total = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (scale * s - top).exp();
        total += *o;
    }
    let uniform = mix / out.len() as f64;
    for o in out.iter_mut() {
        *o = (1.0 - mix) * *o / total + uniform;
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    k: usize,
    steps: u64,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
    means: Vec<f64>,
    mean_sq: Vec<f64>,
    scores: Vec<f64>,
    post_mean: Vec<f64>,
    post_var: Vec<f64>,
    q: HashMap<u64, Vec<f64>>,
    state: u64,
    q_beta: f64,
    dist: Vec<f64>,
    clamp_events: u64,
}

/// Builds an agent with `actions` arms for a run of `horizon` steps.
pub fn make_agent(
    config: &AgentConfig,
    actions: usize,
    run_seed: u64,
    index: usize,
    horizon: u64,
) -> Result<Agent> {
    Agent::new(config.clone(), actions, agent_rng(run_seed, index), horizon)
}

impl Agent {
    pub fn new(config: AgentConfig, actions: usize, rng: ChaCha8Rng, horizon: u64) -> Result<Self> {
        config.validate()?;
        if actions == 0 {
            return Err(Error::InvalidArgument("agent needs at least one action".into()));
        }
        let q_beta = match config {
            AgentConfig::QLearning { final_epsilon, decay_point, .. } => {
                -final_epsilon.ln() / (decay_point * horizon.max(1) as f64)
            }
            _ => 0.0,
        };
        let mut agent = Self {
            config,
            k: actions,
            steps: 0,
            rng,
            counts: Vec::new(),
            means: Vec::new(),
            mean_sq: Vec::new(),
            scores: Vec::new(),
            post_mean: Vec::new(),
            post_var: Vec::new(),
            q: HashMap::new(),
            state: INITIAL_STATE,
            q_beta,
            dist: vec![1.0 / actions as f64; actions],
            clamp_events: 0,
        };
        agent.reset();
        Ok(agent)
    }

    /// Clears all learned statistics. The random stream continues.
    pub fn reset(&mut self) {
        let k = self.k;
        self.steps = 0;
        self.counts = vec![0; k];
        self.means = vec![0.0; k];
        self.mean_sq = vec![0.0; k];
        self.scores = vec![0.0; k];
        let (m, v) = match self.config {
            AgentConfig::Thompson { prior_mean, prior_var, .. } => (prior_mean, prior_var),
            _ => (0.0, 0.0),
        };
        self.post_mean = vec![m; k];
        self.post_var = vec![v; k];
        self.q.clear();
        self.state = INITIAL_STATE;
        self.dist = vec![1.0 / k as f64; k];
        self.clamp_events = 0;
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn actions(&self) -> usize {
        self.k
    }

    pub fn feedback(&self) -> FeedbackKind {
        self.config.feedback()
    }

    /// Number of observed steps.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn posterior(&self) -> (&[f64], &[f64]) {
        (&self.post_mean, &self.post_var)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn q_values(&self, state: u64) -> Option<&[f64]> {
        self.q.get(&state).map(Vec::as_slice)
    }

    /// Rewards that fell outside `[0, 1]` and were clamped.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// Distribution the last action was drawn from. Index and posterior
    /// sampling rules report the realized choice as a point mass.
    pub fn last_distribution(&self) -> &[f64] {
        &self.dist
    }

    /// Uniform choice among the exact maximizers.
    fn argmax_random(values: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let mut best = 0;
        let mut ties = 0u32;
        let mut top = f64::NEG_INFINITY;
        for (a, &v) in values.iter().enumerate() {
            if v > top {
                top = v;
                best = a;
                ties = 1;
            } else if v == top {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = a;
                }
            }
        }
        best
    }

    fn sample(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (a, &p) in self.dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        self.dist.iter().rposition(|&p| p > 0.0).unwrap_or(self.k - 1)
    }

    fn point_mass(&mut self, a: usize) -> usize {
        self.dist.iter_mut().for_each(|p| *p = 0.0);
        self.dist[a] = 1.0;
        a
    }

    /// Chooses the action for the next step.
    pub fn act(&mut self) -> usize {
        let k = self.k;
        let t = self.steps + 1;
        let bootstrap = self.steps < k as u64;
        match self.config {
            AgentConfig::EpsilonGreedy { epsilon } => {
                if bootstrap {
                    return self.point_mass(self.steps as usize);
                }
                let best = Self::argmax_random(&self.means, &mut self.rng);
                self.dist.iter_mut().for_each(|p| *p = epsilon / k as f64);
                self.dist[best] += 1.0 - epsilon;
                self.sample()
            }
            AgentConfig::Ucb1 | AgentConfig::UcbTuned => {
                if bootstrap {
                    return self.point_mass(self.steps as usize);
                }
                let n = self.steps;
                let tuned = matches!(self.config, AgentConfig::UcbTuned);
                let index: Vec<f64> = (0..k)
                    .map(|a| {
                        let bonus = if tuned {
                            ucb_tuned_bonus(self.counts[a], n, self.means[a], self.mean_sq[a])
                        } else {
                            (2.0 * (n as f64).ln() / self.counts[a] as f64).sqrt()
                        };
                        self.means[a] + bonus
                    })
                    .collect();
                let a = Self::argmax_random(&index, &mut self.rng);
                self.point_mass(a)
            }
            AgentConfig::Exp3 { eta, epsilon } => {
                softmax_mixture(&self.scores, eta, epsilon, &mut self.dist);
                self.sample()
            }
            AgentConfig::Mwu { eta_scale } => {
                softmax_mixture(&self.scores, eta_scale / (t as f64).sqrt(), 0.0, &mut self.dist);
                self.sample()
            }
            AgentConfig::MeanBasedExp3 { eta_scale } => {
                let gamma = mean_based_schedule(t);
                softmax_mixture(&self.scores, eta_scale / (t as f64).sqrt(), gamma, &mut self.dist);
                self.sample()
            }
            AgentConfig::Thompson { .. } => {
                let draws: Vec<f64> = (0..k)
                    .map(|a| {
                        let z: f64 = self.rng.sample(StandardNormal);
                        self.post_mean[a] + self.post_var[a].sqrt() * z
                    })
                    .collect();
                let a = Self::argmax_random(&draws, &mut self.rng);
                self.point_mass(a)
            }
            AgentConfig::QLearning { .. } => {
                let eps = (-self.q_beta * t as f64).exp();
                let greedy = match self.q.get(&self.state) {
                    Some(row) => Self::argmax_random(row, &mut self.rng),
                    None => self.rng.random_range(0..k),
                };
                self.dist.iter_mut().for_each(|p| *p = eps / k as f64);
                self.dist[greedy] += 1.0 - eps;
                self.sample()
            }
            AgentConfig::Uniform => {
                self.dist.iter_mut().for_each(|p| *p = 1.0 / k as f64);
                self.rng.random_range(0..k)
            }
        }
    }

    fn clamp(&mut self, r: f64) -> f64 {
        if !self.config.clamps_rewards() {
            return r;
        }
        if r < -CLAMP_SLACK || r > 1.0 + CLAMP_SLACK {
            self.clamp_events += 1;
        }
        r.clamp(0.0, 1.0)
    }

    /// Feeds back the outcome of the last step.
    ///
    /// `reward` is the agent's normalized reward. Full-feedback agents also
    /// need `full`, the normalized reward of every own action against the
    /// realized opponent profile. `next_state` identifies the joint action just
    /// played and is only read by Q-learning.
    pub fn observe(&mut self, action: usize, reward: f64, full: Option<&[f64]>, next_state: u64) -> Result<()> {
        if action >= self.k {
            return Err(Error::InvalidArgument(format!("action {action} out of range")));
        }
        if !reward.is_finite() {
            return Err(Error::InvalidArgument("non-finite reward".into()));
        }
        match (self.feedback(), full) {
            (FeedbackKind::Bandit, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "{} is a bandit agent and cannot take full feedback",
                    self.config.label()
                )))
            }
            (FeedbackKind::Full, None) => {
                return Err(Error::InvalidArgument(format!("{} needs full feedback", self.config.label())))
            }
            (FeedbackKind::Full, Some(v)) if v.len() != self.k => {
                return Err(Error::InvalidArgument("full feedback vector has the wrong length".into()))
            }
            _ => {}
        }
        let r = self.clamp(reward);
        self.counts[action] += 1;
        self.steps += 1;
        match self.config {
            AgentConfig::EpsilonGreedy { .. } | AgentConfig::Ucb1 | AgentConfig::UcbTuned => {
                let n = self.counts[action] as f64;
                self.means[action] += (r - self.means[action]) / n;
                self.mean_sq[action] += (r * r - self.mean_sq[action]) / n;
            }
            AgentConfig::Exp3 { .. } | AgentConfig::MeanBasedExp3 { .. } => {
                let p = self.dist[action];
                for (b, s) in self.scores.iter_mut().enumerate() {
                    *s += if b == action { 1.0 - (1.0 - r) / p } else { 1.0 };
                }
            }
            AgentConfig::Mwu { .. } => {
                let v = full.expect("checked above");
                for b in 0..self.k {
                    let x = self.clamp(v[b]);
                    self.scores[b] += x;
                }
            }
            AgentConfig::Thompson { obs_var, .. } => {
                let prec = 1.0 / self.post_var[action] + 1.0 / obs_var;
                let var = 1.0 / prec;
                self.post_mean[action] = var * (self.post_mean[action] / self.post_var[action] + r / obs_var);
                self.post_var[action] = var;
            }
            AgentConfig::QLearning { learning_rate, discount, .. } => {
                let k = self.k;
                let future = self.q.get(&next_state).map_or(0.0, |row| row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
                let row = self.q.entry(self.state).or_insert_with(|| vec![0.0; k]);
                row[action] += learning_rate * (r + discount * future - row[action]);
                self.state = next_state;
            }
            AgentConfig::Uniform => {}
        }
        Ok(())
    }
}
