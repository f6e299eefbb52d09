use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    build_game_with_budget, cell_count, BertrandSpec, DemandModel, PriceGrid, DEFAULT_CELL_BUDGET,
};
use crate::metrics::ReferencePrices;
use crate::solvers::{enumerate_pure_nash, joint_profit_max, joint_profit_search, search_symmetric_nash};

pub const DEFAULT_HORIZON: u64 = 250_000;
pub const DEFAULT_SEEDS: std::ops::Range<u64> = 0..10;
pub const GRID_POINTS: usize = 21;

/// The five benchmark markets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PresetId {
    #[serde(rename = "O1")]
    O1,
    #[serde(rename = "O2")]
    O2,
    #[serde(rename = "O3")]
    O3,
    #[serde(rename = "O2'")]
    O2Asym,
    #[serde(rename = "O3'")]
    O3Asym,
}

impl PresetId {
    pub const ALL: [PresetId; 5] = [PresetId::O1, PresetId::O2, PresetId::O3, PresetId::O2Asym, PresetId::O3Asym];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::O1 => "O1",
            PresetId::O2 => "O2",
            PresetId::O3 => "O3",
            PresetId::O2Asym => "O2'",
            PresetId::O3Asym => "O3'",
        }
    }

    /// Whether the market can be extended to any number of identical firms.
    pub fn is_symmetric(self) -> bool {
        matches!(self, PresetId::O1 | PresetId::O2 | PresetId::O3)
    }

    /// The two-firm market.
    pub fn spec(self) -> BertrandSpec {
        self.spec_with_players(2).expect("two-firm presets are valid")
    }

    /// The market with `players` firms; only symmetric presets scale.
    pub fn spec_with_players(self, players: usize) -> Result<BertrandSpec> {
        if players == 0 || (players != 2 && !self.is_symmetric()) {
            return Err(Error::InvalidArgument(format!("{} is defined for two firms only", self.as_str())));
        }
        let n = players;
        let (costs, demand, lo, hi) = match self {
            PresetId::O1 => (vec![0.0; n], DemandModel::Standard { total: 1.0 }, 0.05, 1.0),
            PresetId::O2 => (vec![0.0; n], linear(n), 0.0, 1.0),
            PresetId::O3 => (vec![1.0; n], logit(vec![2.0; n]), 1.0, 2.0),
            PresetId::O2Asym => (vec![0.0, 0.2], linear(2), 0.0, 1.0),
            PresetId::O3Asym => (vec![0.5, 1.0], logit(vec![1.5, 2.0]), 1.0, 2.0),
        };
        BertrandSpec::new(costs, demand, PriceGrid::uniform(n, lo, hi, GRID_POINTS)?)
    }
}

fn linear(n: usize) -> DemandModel {
    DemandModel::Linear { alpha: vec![0.48; n], beta: vec![0.9; n], gamma: 0.6 }
}

fn logit(quality: Vec<f64>) -> DemandModel {
    DemandModel::Logit { quality, outside: 0.0, mu: 0.25 }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "O1" | "o1" => Ok(PresetId::O1),
            "O2" | "o2" => Ok(PresetId::O2),
            "O3" | "o3" => Ok(PresetId::O3),
            "O2'" | "o2'" | "O2p" | "o2p" => Ok(PresetId::O2Asym),
            "O3'" | "o3'" | "O3p" | "o3p" => Ok(PresetId::O3Asym),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }
}

/// Equilibrium and collusive anchors of an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct References {
    /// Pure equilibria as grid indices; symmetric ones only when the tensor
    /// is too large to enumerate.
    pub equilibria: Vec<Vec<usize>>,
    pub symmetric_only: bool,
    pub monopoly: Vec<usize>,
    pub prices: ReferencePrices,
}

/// Equilibria, joint-profit profile and index anchors of `spec`.
pub fn compute_references(spec: &BertrandSpec) -> Result<References> {
    let counts = spec.grid.counts();
    let (equilibria, symmetric_only, monopoly) = if cell_count(&counts) <= DEFAULT_CELL_BUDGET {
        let game = build_game_with_budget(spec, DEFAULT_CELL_BUDGET)?;
        (enumerate_pure_nash(&game), false, joint_profit_max(&game))
    } else {
        (search_symmetric_nash(spec)?, true, joint_profit_search(spec, 0)?)
    };
    let values: Vec<Vec<f64>> = spec.grid.all().to_vec();
    let component_max = |eq: &[Vec<usize>]| -> Result<Vec<f64>> {
        if eq.is_empty() {
            return Err(Error::Undefined("no pure Nash equilibrium to anchor prices".into()));
        }
        Ok((0..spec.players()).map(|i| eq.iter().map(|p| values[i][p[i]]).fold(f64::NEG_INFINITY, f64::max)).collect())
    };
    let nash_prices = component_max(&equilibria)?;
    let monopoly_prices = (0..spec.players()).map(|i| values[i][monopoly[i]]).collect();
    let prices = ReferencePrices::new(spec, nash_prices, monopoly_prices)?;
    Ok(References { equilibria, symmetric_only, monopoly, prices })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PresetId::ALL {
            assert_eq!(p.as_str().parse::<PresetId>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<PresetId>(&json).unwrap(), p);
        }
        assert!("O4".parse::<PresetId>().is_err());
    }

    #[test]
    fn only_symmetric_presets_scale() {
        assert_eq!(PresetId::O2.spec_with_players(7).unwrap().players(), 7);
        assert!(PresetId::O3Asym.spec_with_players(3).is_err());
    }

    #[test]
    fn pinned_constants() {
        let pinned = [
            (PresetId::O1, r#"{"costs":[0.0,0.0],"demand":{"D":1.0,"model":"standard"},"hi":1.0,"lo":0.05}"#),
            (PresetId::O2, r#"{"costs":[0.0,0.0],"demand":{"alpha":[0.48,0.48],"beta":[0.9,0.9],"gamma":0.6,"model":"linear"},"hi":1.0,"lo":0.0}"#),
            (PresetId::O3, r#"{"costs":[1.0,1.0],"demand":{"model":"logit","mu":0.25,"quality":[2.0,2.0],"quality_0":0.0},"hi":2.0,"lo":1.0}"#),
            (PresetId::O2Asym, r#"{"costs":[0.0,0.2],"demand":{"alpha":[0.48,0.48],"beta":[0.9,0.9],"gamma":0.6,"model":"linear"},"hi":1.0,"lo":0.0}"#),
            (PresetId::O3Asym, r#"{"costs":[0.5,1.0],"demand":{"model":"logit","mu":0.25,"quality":[1.5,2.0],"quality_0":0.0},"hi":2.0,"lo":1.0}"#),
        ];
        for (id, text) in pinned {
            let spec = id.spec();
            let summary = serde_json::json!({
                "costs": spec.costs,
                "demand": spec.demand,
                "lo": spec.grid.lo(0),
                "hi": spec.grid.hi(0),
            });
            assert_eq!(summary.to_string(), text, "{id}");
            assert_eq!(spec.grid.counts(), vec![21, 21]);
            assert!(spec.grid.is_symmetric());
        }
    }
}
