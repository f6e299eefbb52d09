use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn eps_greedy_default() -> f64 {
    0.1
}
fn exp3_eta() -> f64 {
    0.05
}
fn exp3_epsilon() -> f64 {
    0.01
}
fn prior_mean() -> f64 {
    0.5
}
fn prior_var() -> f64 {
    1.0
}
fn obs_var() -> f64 {
    0.25
}
fn mwu_eta_scale() -> f64 {
    DEFAULT_MWU_ETA_SCALE
}
fn mb_exp3_eta_scale() -> f64 {
    DEFAULT_MB_EXP3_ETA_SCALE
}
fn ql_rate() -> f64 {
    0.15
}
fn ql_discount() -> f64 {
    0.95
}
fn ql_final_epsilon() -> f64 {
    1e-3
}
fn ql_decay_point() -> f64 {
    0.8
}

/// Multiplier `c` in the learning rate `c / sqrt(t)` of full-information MWU.
pub const DEFAULT_MWU_ETA_SCALE: f64 = 40.0;
/// Multiplier `c` in the learning rate `c / sqrt(t)` of mean-based Exp3.
pub const DEFAULT_MB_EXP3_ETA_SCALE: f64 = 5.0;

/// Learning algorithm and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentConfig {
    EpsilonGreedy {
        #[serde(default = "eps_greedy_default")]
        epsilon: f64,
    },
    Ucb1,
    UcbTuned,
    Exp3 {
        #[serde(default = "exp3_eta")]
        eta: f64,
        #[serde(default = "exp3_epsilon")]
        epsilon: f64,
    },
    Thompson {
        #[serde(default = "prior_mean")]
        prior_mean: f64,
        #[serde(default = "prior_var")]
        prior_var: f64,
        #[serde(default = "obs_var")]
        obs_var: f64,
    },
    /// Full-feedback multiplicative weights with rate `eta_scale / sqrt(t)`.
    Mwu {
        #[serde(default = "mwu_eta_scale")]
        eta_scale: f64,
    },
    /// Exp3 with exploration `t^(-1/4)` and rate `eta_scale / sqrt(t)`.
    MeanBasedExp3 {
        #[serde(default = "mb_exp3_eta_scale")]
        eta_scale: f64,
    },
    /// Tabular Q-learning on the previous joint action, with exploration
    /// `exp(-beta t)` where `beta` puts `final_epsilon` at `decay_point * horizon`.
    QLearning {
        #[serde(default = "ql_rate")]
        learning_rate: f64,
        #[serde(default = "ql_discount")]
        discount: f64,
        #[serde(default = "ql_final_epsilon")]
        final_epsilon: f64,
        #[serde(default = "ql_decay_point")]
        decay_point: f64,
    },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackKind {
    Bandit,
    Full,
}

impl AgentConfig {
    pub fn epsilon_greedy() -> Self {
        Self::EpsilonGreedy { epsilon: eps_greedy_default() }
    }
    pub fn exp3() -> Self {
        Self::Exp3 { eta: exp3_eta(), epsilon: exp3_epsilon() }
    }
    pub fn thompson() -> Self {
        Self::Thompson { prior_mean: prior_mean(), prior_var: prior_var(), obs_var: obs_var() }
    }
    pub fn mwu() -> Self {
        Self::Mwu { eta_scale: mwu_eta_scale() }
    }
    pub fn mean_based_exp3() -> Self {
        Self::MeanBasedExp3 { eta_scale: mb_exp3_eta_scale() }
    }
    pub fn q_learning() -> Self {
        Self::QLearning {
            learning_rate: ql_rate(),
            discount: ql_discount(),
            final_epsilon: ql_final_epsilon(),
            decay_point: ql_decay_point(),
        }
    }

    /// Short display label used in tables and file names.
    pub fn label(&self) -> &'static str {
        match self {
            Self::EpsilonGreedy { .. } => "eGreedy",
            Self::Ucb1 => "UCB1",
            Self::UcbTuned => "UCB-T",
            Self::Exp3 { .. } => "Exp3",
            Self::Thompson { .. } => "TS",
            Self::Mwu { .. } => "MWU",
            Self::MeanBasedExp3 { .. } => "MB-Exp3",
            Self::QLearning { .. } => "QL",
            Self::Uniform => "Uniform",
        }
    }

    /// Parses a label or a snake_case kind name with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "egreedy" | "epsilon_greedy" | "eps_greedy" => Self::epsilon_greedy(),
            "ucb1" => Self::Ucb1,
            "ucb_t" | "ucb_tuned" => Self::UcbTuned,
            "exp3" | "exp3_eps" => Self::exp3(),
            "ts" | "thompson" => Self::thompson(),
            "mwu" => Self::mwu(),
            "mb_exp3" | "mean_based_exp3" => Self::mean_based_exp3(),
            "ql" | "q_learning" => Self::q_learning(),
            "uniform" => Self::Uniform,
            _ => return Err(Error::InvalidArgument(format!("unknown agent kind {name:?}"))),
        })
    }

    pub fn feedback(&self) -> FeedbackKind {
        match self {
            Self::Mwu { .. } => FeedbackKind::Full,
            _ => FeedbackKind::Bandit,
        }
    }

    /// Whether the agent samples from an explicit distribution that can be
    /// inspected every step.
    pub fn has_distribution(&self) -> bool {
        matches!(
            self,
            Self::EpsilonGreedy { .. } | Self::Exp3 { .. } | Self::Mwu { .. } | Self::MeanBasedExp3 { .. } | Self::Uniform
        )
    }

    /// Exp3-family agents need rewards in `[0, 1]` and clamp stray values.
    pub fn clamps_rewards(&self) -> bool {
        matches!(self, Self::Exp3 { .. } | Self::Mwu { .. } | Self::MeanBasedExp3 { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{}: invalid {what}", self.label())));
        match *self {
            Self::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => bad("epsilon"),
            Self::Exp3 { eta, epsilon } if !(eta >= 0.0 && eta.is_finite()) || !(0.0..=1.0).contains(&epsilon) => {
                bad("eta or epsilon")
            }
            Self::Thompson { prior_mean, prior_var, obs_var }
                if !prior_mean.is_finite() || !(prior_var > 0.0) || !(obs_var > 0.0) =>
            {
                bad("prior")
            }
            Self::Mwu { eta_scale } | Self::MeanBasedExp3 { eta_scale } if !(eta_scale > 0.0 && eta_scale.is_finite()) => {
                bad("eta_scale")
            }
            Self::QLearning { learning_rate, discount, final_epsilon, decay_point }
                if !(learning_rate > 0.0 && learning_rate <= 1.0)
                    || !(0.0..1.0).contains(&discount)
                    || !(final_epsilon > 0.0 && final_epsilon < 1.0)
                    || !(decay_point > 0.0) =>
            {
                bad("Q-learning parameters")
            }
            _ => Ok(()),
        }
    }
}
