//! TOML documents for markets, hand-written games and single runs.
//!
//! A market is either a preset or an explicit table:
//!
//! ```toml
//! preset = "O2"
//! players = 4          # symmetric presets only
//! ```
//!
//! ```toml
//! [market]
//! costs = [0.0, 0.2]
//! [market.demand]
//! model = "linear"
//! alpha = [0.48, 0.48]
//! beta = [0.9, 0.9]
//! gamma = 0.6
//! [market.grid]
//! low = 0.0
//! high = 1.0
//! points = 21
//! ```
//!
//! A two-player game is given by its payoff matrices:
//!
//! ```toml
//! [game]
//! row = [[0, 2], [2, 1]]
//! col = [[2, 0], [0, 0]]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::AgentConfig;
use crate::error::{Error, Result};
use crate::experiments::{AgentEntry, PresetId};
use crate::game::{build_game, BertrandSpec, DemandModel, NormalFormGame, PriceGrid};
use crate::sim::RunConfig;

/// Price grid given as explicit lists or as an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Lists { prices: Vec<Vec<f64>> },
    Range { low: Bound, high: Bound, points: usize },
}

/// A scalar shared by all players or one value per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    All(f64),
    Each(Vec<f64>),
}

impl Bound {
    fn at(&self, i: usize, n: usize) -> Result<f64> {
        match self {
            Bound::All(x) => Ok(*x),
            Bound::Each(v) if v.len() == n => Ok(v[i]),
            Bound::Each(v) => Err(Error::Config(format!("grid bound has {} entries for {n} players", v.len()))),
        }
    }
}

impl GridConfig {
    pub fn build(&self, players: usize) -> Result<PriceGrid> {
        match self {
            GridConfig::Lists { prices } => PriceGrid::new(prices.clone()),
            GridConfig::Range { low, high, points } => {
                let lists = (0..players)
                    .map(|i| PriceGrid::evenly_spaced(low.at(i, players)?, high.at(i, players)?, *points))
                    .collect::<Result<Vec<_>>>()?;
                PriceGrid::new(lists)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub costs: Vec<f64>,
    pub demand: DemandModel,
    pub grid: GridConfig,
}

impl MarketConfig {
    pub fn build(&self) -> Result<BertrandSpec> {
        BertrandSpec::new(self.costs.clone(), self.demand.clone(), self.grid.build(self.costs.len())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixGame {
    pub row: Vec<Vec<f64>>,
    pub col: Vec<Vec<f64>>,
}

/// Input of the solver command: a preset, an explicit market, or a matrix game.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub preset: Option<PresetId>,
    #[serde(default)]
    pub players: Option<usize>,
    #[serde(default)]
    pub market: Option<MarketConfig>,
    #[serde(default)]
    pub game: Option<MatrixGame>,
}

/// What a solver config resolves to.
#[derive(Debug, Clone)]
pub enum Instance {
    Market(BertrandSpec),
    Game(NormalFormGame),
}

impl Instance {
    pub fn spec(&self) -> Option<&BertrandSpec> {
        match self {
            Instance::Market(s) => Some(s),
            Instance::Game(_) => None,
        }
    }

    pub fn game(&self) -> Result<NormalFormGame> {
        match self {
            Instance::Market(s) => build_game(s),
            Instance::Game(g) => Ok(g.clone()),
        }
    }
}

fn market_of(preset: Option<PresetId>, players: Option<usize>, market: &Option<MarketConfig>) -> Result<Option<BertrandSpec>> {
    match (preset, market) {
        (Some(_), Some(_)) => Err(Error::Config("give either `preset` or a [market] table, not both".into())),
        (Some(p), None) => Ok(Some(p.spec_with_players(players.unwrap_or(2)).map_err(|e| Error::Config(e.to_string()))?)),
        (None, Some(m)) => {
            if players.is_some() {
                return Err(Error::Config("`players` applies to presets only".into()));
            }
            Ok(Some(m.build().map_err(|e| Error::Config(e.to_string()))?))
        }
        (None, None) => Ok(None),
    }
}

impl SolveConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn instance(&self) -> Result<Instance> {
        let spec = market_of(self.preset, self.players, &self.market)?;
        match (spec, &self.game) {
            (Some(_), Some(_)) => Err(Error::Config("a config holds either a market or a [game], not both".into())),
            (Some(s), None) => Ok(Instance::Market(s)),
            (None, Some(g)) => Ok(Instance::Game(NormalFormGame::bimatrix(&g.row, &g.col).map_err(|e| Error::Config(e.to_string()))?)),
            (None, None) => Err(Error::Config("config needs `preset`, a [market] table or a [game] table".into())),
        }
    }
}

/// Input of the simulate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub preset: Option<PresetId>,
    #[serde(default)]
    pub players: Option<usize>,
    #[serde(default)]
    pub market: Option<MarketConfig>,
    pub agents: Vec<AgentEntry>,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub entry: Option<Vec<u64>>,
    #[serde(default)]
    pub record_stride: Option<u64>,
}

impl RunFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let players = self.players.or(if self.preset.is_some() { Some(self.agents.len()) } else { None });
        let spec = market_of(self.preset, players, &self.market)?
            .ok_or_else(|| Error::Config("run config needs `preset` or a [market] table".into()))?;
        let agents: Vec<AgentConfig> = self.agents.iter().map(AgentEntry::resolve).collect::<Result<_>>().map_err(|e| Error::Config(e.to_string()))?;
        let config = RunConfig {
            spec,
            agents,
            horizon: self.horizon,
            seed: self.seed,
            noise: self.noise,
            entry: self.entry.clone(),
            record_stride: self.record_stride,
        };
        config.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }
}

/// Reads a file and prefixes parse errors with its path.
pub fn read_document<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}


#[cfg(test)]
mod example_files {
    use std::path::{Path, PathBuf};

    use super::{read_document, Instance, RunFile, SolveConfig};
    use crate::experiments::{Manifest, PresetId};

    fn configs() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
    }

    #[test]
    fn market_files_equal_presets() {
        for (file, preset) in [
            ("o1", PresetId::O1),
            ("o2", PresetId::O2),
            ("o3", PresetId::O3),
            ("o2p", PresetId::O2Asym),
            ("o3p", PresetId::O3Asym),
        ] {
            let path = configs().join(format!("markets/{file}.toml"));
            let cfg = read_document(&path, SolveConfig::from_toml).unwrap();
            match cfg.instance().unwrap() {
                Instance::Market(spec) => assert_eq!(spec, preset.spec(), "{file}"),
                Instance::Game(_) => panic!("{file} should describe a market"),
            }
        }
    }

    #[test]
    fn counterexample_file_is_a_game() {
        let cfg = read_document(&configs().join("markets/counterexample.toml"), SolveConfig::from_toml).unwrap();
        let g = cfg.instance().unwrap().game().unwrap();
        assert_eq!(g.payoff_at(0, &[1, 0]), 2.0);
        assert_eq!(g.payoff_at(1, &[0, 0]), 2.0);
    }

    #[test]
    fn run_files_validate() {
        for f in ["smoke", "staggered"] {
            let cfg = read_document(&configs().join(format!("runs/{f}.toml")), RunFile::from_toml).unwrap();
            cfg.run_config().unwrap();
        }
    }

    #[test]
    fn manifests_expand() {
        let load = |f: &str| Manifest::load(&configs().join(format!("manifests/{f}.toml"))).unwrap();
        assert_eq!(load("duopoly-matrix").cells().unwrap().len(), 50);
        // 9 sizes x 4 identical, 9 sizes x 3 mixed, and 11 fractions of which
        // k = 0, 9, 10 repeat earlier cells.
        assert_eq!(load("player-sweep").cells().unwrap().len(), 36 + 27 + 8);
        assert_eq!(load("staggered-entry").staggered.len(), 2);
        assert_eq!(load("mean-based").convergence.len(), 2);
    }
}
