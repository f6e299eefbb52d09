use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::presets::{compute_references, PresetId, References};
use crate::agents::AgentConfig;
use crate::error::{Error, Result};
use crate::metrics::{ci_price, ci_profit, PriceCurves, TailStats};
use crate::sim::{run_with_observer, RunConfig};

/// Final-window length for median prices and mean profits.
pub const TAIL_WINDOW: usize = 1000;

/// One configuration of the experiment grid, run once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: String,
    pub preset: PresetId,
    pub players: usize,
    pub agents: Vec<AgentConfig>,
    pub horizon: u64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub entry: Option<Vec<u64>>,
}

impl CellSpec {
    pub fn new(preset: PresetId, agents: Vec<AgentConfig>, horizon: u64) -> Self {
        let players = agents.len();
        let id = default_id(preset, &agents);
        Self { id, preset, players, agents, horizon, noise: 0.0, entry: None }
    }

    pub fn agent_labels(&self) -> String {
        self.agents.iter().map(AgentConfig::label).collect::<Vec<_>>().join("+")
    }

    pub fn run_config(&self, seed: u64) -> Result<RunConfig> {
        let spec = self.preset.spec_with_players(self.players)?;
        let mut config = RunConfig::new(spec, self.agents.clone(), self.horizon, seed);
        config.noise = self.noise;
        config.entry = self.entry.clone();
        config.record_stride = Some(0);
        config.validate()?;
        Ok(config)
    }
}

/// `preset/n=players/labels`.
pub fn default_id(preset: PresetId, agents: &[AgentConfig]) -> String {
    let labels: Vec<&str> = agents.iter().map(AgentConfig::label).collect();
    format!("{}/n={}/{}", preset, agents.len(), labels.join("+"))
}

/// Outcome of one cell and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub cell: String,
    pub preset: PresetId,
    pub players: usize,
    pub agents: String,
    pub seed: u64,
    pub horizon: u64,
    pub status: String,
    pub median_prices: Vec<f64>,
    pub ci_prices: Vec<f64>,
    pub mean_ci_price: f64,
    pub ci_profit: f64,
    pub nash_prices: Vec<f64>,
    pub monopoly_prices: Vec<f64>,
    pub clamp_events: u64,
}

impl CellRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Running-median price index averaged over active players.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub cell: String,
    pub seed: u64,
    pub t: u64,
    pub ci_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOptions {
    pub tail_window: usize,
    /// Number of curve samples per run; 0 disables curves.
    pub curve_points: usize,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self { tail_window: TAIL_WINDOW, curve_points: 0 }
    }
}

/// Cache of anchors per `(preset, players)`.
#[derive(Debug, Default, Clone)]
pub struct ReferenceCache(HashMap<(PresetId, usize), References>);

impl ReferenceCache {
    pub fn prepare(&mut self, cells: &[CellSpec]) -> Result<()> {
        for c in cells {
            let key = (c.preset, c.players);
            if !self.0.contains_key(&key) {
                let refs = compute_references(&c.preset.spec_with_players(c.players)?)?;
                self.0.insert(key, refs);
            }
        }
        Ok(())
    }

    pub fn get(&self, preset: PresetId, players: usize) -> Option<&References> {
        self.0.get(&(preset, players))
    }
}

/// Runs one cell with one seed and scores its final window.
pub fn run_cell(cell: &CellSpec, seed: u64, refs: &References, options: CellOptions) -> (CellRow, Vec<CurvePoint>) {
    let mut row = CellRow {
        cell: cell.id.clone(),
        preset: cell.preset,
        players: cell.players,
        agents: cell.agent_labels(),
        seed,
        horizon: cell.horizon,
        status: "ok".into(),
        median_prices: Vec::new(),
        ci_prices: Vec::new(),
        mean_ci_price: f64::NAN,
        ci_profit: f64::NAN,
        nash_prices: refs.prices.nash.clone(),
        monopoly_prices: refs.prices.monopoly.clone(),
        clamp_events: 0,
    };
    let mut curves = Vec::new();
    match score(cell, seed, refs, options, &mut row, &mut curves) {
        Ok(()) => (row, curves),
        Err(e) => {
            row.status = format!("failed: {e}");
            (row, Vec::new())
        }
    }
}

fn score(
    cell: &CellSpec,
    seed: u64,
    refs: &References,
    options: CellOptions,
    row: &mut CellRow,
    curves: &mut Vec<CurvePoint>,
) -> Result<()> {
    let config = cell.run_config(seed)?;
    let every = if options.curve_points == 0 { u64::MAX } else { (cell.horizon / options.curve_points as u64).max(1) };
    let mut observers = (TailStats::new(&config.spec, options.tail_window), PriceCurves::new(&config.spec, options.tail_window, every));
    let history = run_with_observer(&config, &mut observers)?;
    let (tail, curve) = observers;
    row.clamp_events = history.clamp_events.iter().sum();
    row.median_prices = tail.median_prices();
    row.ci_prices = row
        .median_prices
        .iter()
        .enumerate()
        .map(|(i, &p)| ci_price(p, &refs.prices, i))
        .collect::<Result<_>>()?;
    row.mean_ci_price = row.ci_prices.iter().sum::<f64>() / row.ci_prices.len() as f64;
    row.ci_profit = ci_profit(&tail.mean_profits(), &refs.prices)?;
    if options.curve_points > 0 {
        for (t, prices) in curve.points {
            let idx: Vec<f64> = prices
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_nan())
                .map(|(i, &p)| ci_price(p, &refs.prices, i))
                .collect::<Result<_>>()?;
            if !idx.is_empty() {
                curves.push(CurvePoint { cell: cell.id.clone(), seed, t, ci_price: idx.iter().sum::<f64>() / idx.len() as f64 });
            }
        }
    }
    if !row.mean_ci_price.is_finite() || !row.ci_profit.is_finite() {
        return Err(Error::Numerical("non-finite collusion index".into()));
    }
    Ok(())
}

/// Population mean and standard deviation.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate an empty set of rows".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Mean and spread of a cell across its seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub cell: String,
    pub preset: PresetId,
    pub players: usize,
    pub agents: String,
    pub runs: usize,
    pub failed: usize,
    pub ci_price_mean: f64,
    pub ci_price_std: f64,
    pub ci_profit_mean: f64,
    pub ci_profit_std: f64,
}

/// Groups rows by cell in order of first appearance. Failed rows are counted
/// but excluded from the statistics; a cell with no successful row gets NaN.
pub fn aggregate_rows(rows: &[CellRow]) -> Vec<AggregateRow> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&CellRow>> = HashMap::new();
    for r in rows {
        groups.entry(&r.cell).or_insert_with(|| {
            order.push(&r.cell);
            Vec::new()
        });
        groups.get_mut(r.cell.as_str()).unwrap().push(r);
    }
    order
        .into_iter()
        .map(|cell| {
            let g = &groups[cell];
            let ok: Vec<&&CellRow> = g.iter().filter(|r| r.ok()).collect();
            let price: Vec<f64> = ok.iter().map(|r| r.mean_ci_price).collect();
            let profit: Vec<f64> = ok.iter().map(|r| r.ci_profit).collect();
            let (pm, ps) = aggregate(&price).unwrap_or((f64::NAN, f64::NAN));
            let (fm, fs) = aggregate(&profit).unwrap_or((f64::NAN, f64::NAN));
            AggregateRow {
                cell: cell.to_string(),
                preset: g[0].preset,
                players: g[0].players,
                agents: g[0].agents.clone(),
                runs: ok.len(),
                failed: g.len() - ok.len(),
                ci_price_mean: pm,
                ci_price_std: ps,
                ci_profit_mean: fm,
                ci_profit_std: fs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_cases() {
        assert_eq!(aggregate(&[0.3]).unwrap(), (0.3, 0.0));
        assert_eq!(aggregate(&[0.0, 1.0]).unwrap(), (0.5, 0.5));
        let a = aggregate(&[0.1, 0.7, 0.4, 0.9]).unwrap();
        let b = aggregate(&[0.9, 0.4, 0.1, 0.7]).unwrap();
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn short_cell_runs() {
        let cell = CellSpec::new(PresetId::O2, vec![AgentConfig::exp3(), AgentConfig::thompson()], 3000);
        let mut cache = ReferenceCache::default();
        cache.prepare(std::slice::from_ref(&cell)).unwrap();
        let refs = cache.get(PresetId::O2, 2).unwrap();
        let options = CellOptions { tail_window: 1000, curve_points: 10 };
        let (row, curves) = run_cell(&cell, 4, refs, options);
        assert!(row.ok(), "{}", row.status);
        assert_eq!(row.agents, "Exp3+TS");
        assert_eq!(curves.len(), 10);
        assert_eq!(run_cell(&cell, 4, refs, options), (row, curves));
    }
}
