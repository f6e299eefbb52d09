use serde::{Deserialize, Serialize};

use super::grid::PriceGrid;
use crate::error::{Error, Result};

/// Demand side of a Bertrand market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DemandModel {
    /// All-or-nothing demand: the cheapest firms split `D (1 - a)`.
    Standard {
        #[serde(rename = "D", alias = "total")]
        total: f64,
    },
    /// `alpha_i - beta_i a_i + gamma / (n - 1) * sum_{j != i} a_j`.
    Linear {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: f64,
    },
    /// Multinomial logit shares with an outside good.
    Logit {
        quality: Vec<f64>,
        #[serde(rename = "quality_0", alias = "outside")]
        outside: f64,
        mu: f64,
    },
}

impl DemandModel {
    pub fn name(&self) -> &'static str {
        match self {
            DemandModel::Standard { .. } => "standard",
            DemandModel::Linear { .. } => "linear",
            DemandModel::Logit { .. } => "logit",
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            DemandModel::Standard { total } => {
                if !(*total > 0.0) || !total.is_finite() {
                    return Err(Error::InvalidSpec(format!("standard demand needs D > 0, got {total}")));
                }
            }
            DemandModel::Linear { alpha, beta, gamma } => {
                if alpha.len() != n || beta.len() != n {
                    return Err(Error::InvalidSpec(format!(
                        "linear demand needs {n} alpha and beta values, got {} and {}",
                        alpha.len(),
                        beta.len()
                    )));
                }
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidSpec(format!("linear demand needs gamma > 0, got {gamma}")));
                }
                if let Some(b) = beta.iter().find(|&&b| !(b > *gamma)) {
                    return Err(Error::InvalidSpec(format!(
                        "linear demand needs beta_i > gamma, got beta = {b}, gamma = {gamma}"
                    )));
                }
                if alpha.iter().chain(beta).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("linear demand parameters must be finite".into()));
                }
            }
            DemandModel::Logit { quality, outside, mu } => {
                if quality.len() != n {
                    return Err(Error::InvalidSpec(format!(
                        "logit demand needs {n} quality indices, got {}",
                        quality.len()
                    )));
                }
                if !(*mu > 0.0) {
                    return Err(Error::InvalidSpec(format!("logit demand needs mu > 0, got {mu}")));
                }
                if quality.iter().any(|q| !q.is_finite()) || !outside.is_finite() {
                    return Err(Error::InvalidSpec("logit demand parameters must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// A fully parameterized oligopoly instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BertrandSpec {
    pub costs: Vec<f64>,
    pub demand: DemandModel,
    pub grid: PriceGrid,
}

impl BertrandSpec {
    pub fn new(costs: Vec<f64>, demand: DemandModel, grid: PriceGrid) -> Result<Self> {
        let spec = Self { costs, demand, grid };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.costs.len();
        if n == 0 {
            return Err(Error::InvalidSpec("at least one player is required".into()));
        }
        if self.grid.players() != n {
            return Err(Error::InvalidSpec(format!(
                "{n} costs but the price grid has {} players",
                self.grid.players()
            )));
        }
        if self.costs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("costs must be finite".into()));
        }
        self.demand.validate(n)
    }

    pub fn players(&self) -> usize {
        self.costs.len()
    }

    /// True when every player has the same cost, demand parameters and grid.
    pub fn is_symmetric(&self) -> bool {
        let same = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
        let demand_ok = match &self.demand {
            DemandModel::Standard { .. } => true,
            DemandModel::Linear { alpha, beta, .. } => same(alpha) && same(beta),
            DemandModel::Logit { quality, .. } => same(quality),
        };
        demand_ok && same(&self.costs) && self.grid.is_symmetric()
    }

    fn check_profile(&self, prices: &[f64], active: &[bool]) -> Result<()> {
        let n = self.players();
        if prices.len() != n || active.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} prices and activity flags, got {} and {}",
                prices.len(),
                active.len()
            )));
        }
        if !active.iter().any(|&a| a) {
            return Err(Error::InvalidArgument("active player set is empty".into()));
        }
        Ok(())
    }

    /// Per-player demand at a price profile; inactive players get zero demand
    /// and are ignored by the argmin, the cross-price sum and the logit denominator.
    pub fn demand(&self, prices: &[f64], active: &[bool]) -> Result<Vec<f64>> {
        self.check_profile(prices, active)?;
        let mut out = vec![0.0; prices.len()];
        self.demand_into(prices, active, &mut out);
        Ok(out)
    }

    /// Per-player profit `d_i(a) (a_i - c_i)`; zero for inactive players.
    pub fn utility(&self, prices: &[f64], active: &[bool]) -> Result<Vec<f64>> {
        self.check_profile(prices, active)?;
        let mut out = vec![0.0; prices.len()];
        self.utility_into(prices, active, &mut out);
        Ok(out)
    }

    /// Unchecked demand evaluation for hot loops. Requires a nonempty active set.
    pub fn demand_into(&self, prices: &[f64], active: &[bool], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if active[i] { self.player_demand(i, prices, active) } else { 0.0 };
        }
    }

    pub fn utility_into(&self, prices: &[f64], active: &[bool], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if active[i] { self.player_utility(i, prices, active) } else { 0.0 };
        }
    }

    /// Profit of one player, without allocating. Requires `active[player]`.
    ///
    /// Every profit in the crate (tensors, simulations, counterfactuals) goes
    /// through this function, so values agree bit for bit.
    pub fn player_utility(&self, player: usize, prices: &[f64], active: &[bool]) -> f64 {
        self.player_demand(player, prices, active) * (prices[player] - self.costs[player])
    }

    /// Demand of one player. Requires `active[player]`.
    pub fn player_demand(&self, player: usize, prices: &[f64], active: &[bool]) -> f64 {
        let p = prices[player];
        match &self.demand {
            DemandModel::Standard { total } => {
                let mut winners = 1.0;
                for j in 0..prices.len() {
                    if j == player || !active[j] {
                        continue;
                    }
                    if prices[j] < p {
                        return 0.0;
                    }
                    if prices[j] == p {
                        winners += 1.0;
                    }
                }
                total * (1.0 - p) / winners
            }
            DemandModel::Linear { alpha, beta, gamma } => {
                let mut others = 0.0;
                let mut count = 0usize;
                for j in 0..prices.len() {
                    if j != player && active[j] {
                        others += prices[j];
                        count += 1;
                    }
                }
                let cross = if count > 0 { gamma / count as f64 * others } else { 0.0 };
                alpha[player] - beta[player] * p + cross
            }
            DemandModel::Logit { quality, outside, mu } => {
                // Shares relative to the player's own exponent.
                let own = (quality[player] - p) / mu;
                let mut denom = (outside / mu - own).exp() + 1.0;
                for j in 0..prices.len() {
                    if j != player && active[j] {
                        denom += ((quality[j] - prices[j]) / mu - own).exp();
                    }
                }
                1.0 / denom
            }
        }
    }

    /// Exact minimum and maximum of `player`'s profit over all grid profiles
    /// with the given active set.
    ///
    /// Linear and logit profits are monotone in every opponent price, so the
    /// extremes sit at opponents all-lowest or all-highest. Standard demand
    /// takes one of the values `0` or `D (1 - a)(a - c) / k` for achievable tie counts `k`.
    pub fn utility_bounds(&self, player: usize, active: &[bool]) -> (f64, f64) {
        let n = self.players();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut take = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        match &self.demand {
            DemandModel::Standard { total } => {
                for &p in self.grid.prices(player) {
                    let margin = p - self.costs[player];
                    let mut any_below = false;
                    let mut all_can_tie_or_exceed = true;
                    let (mut must_tie, mut can_tie) = (0usize, 0usize);
                    for j in (0..n).filter(|&j| j != player && active[j]) {
                        let prices = self.grid.prices(j);
                        let below = prices[0] < p;
                        let equal = prices.contains(&p);
                        let above = *prices.last().unwrap() > p;
                        any_below |= below;
                        if !(equal || above) {
                            all_can_tie_or_exceed = false;
                        }
                        if equal {
                            can_tie += 1;
                            if !above {
                                must_tie += 1;
                            }
                        }
                    }
                    if any_below {
                        take(0.0);
                    }
                    if all_can_tie_or_exceed {
                        for k in (1 + must_tie)..=(1 + can_tie) {
                            take(total * (1.0 - p) / k as f64 * margin);
                        }
                    }
                }
            }
            DemandModel::Linear { .. } | DemandModel::Logit { .. } => {
                let mut prices = vec![0.0; n];
                for &p in self.grid.prices(player) {
                    for extreme in [true, false] {
                        for j in 0..n {
                            prices[j] = if j == player {
                                p
                            } else if extreme {
                                self.grid.lo(j)
                            } else {
                                self.grid.hi(j)
                            };
                        }
                        take(self.player_utility(player, &prices, active));
                    }
                }
            }
        }
        (lo, hi)
    }
}
