//! TOML experiment manifests and their expansion into cells.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cells::{aggregate_rows, run_cell, AggregateRow, CellOptions, CellRow, CellSpec, CurvePoint, ReferenceCache, TAIL_WINDOW};
use super::presets::{PresetId, DEFAULT_HORIZON, DEFAULT_SEEDS};
use super::runner::run_jobs;
use super::studies::{ConvergenceRow, ConvergenceStudy, StaggeredRow, StaggeredStudy};
use crate::agents::AgentConfig;
use crate::error::{Error, Result};

/// Horizon of cells that contain a Q-learning agent.
pub const Q_LEARNING_HORIZON: u64 = 3_000_000;

/// Default duopoly roster.
pub const DEFAULT_ROSTER: [&str; 4] = ["UCB-T", "Exp3", "eGreedy", "TS"];

/// An agent given either by label (`"UCB-T"`) or as a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentEntry {
    Name(String),
    Config(AgentConfig),
}

impl AgentEntry {
    pub fn resolve(&self) -> Result<AgentConfig> {
        match self {
            AgentEntry::Name(n) => AgentConfig::from_name(n),
            AgentEntry::Config(c) => {
                c.validate()?;
                Ok(c.clone())
            }
        }
    }
}

impl From<&str> for AgentEntry {
    fn from(s: &str) -> Self {
        AgentEntry::Name(s.to_string())
    }
}

/// A single explicit cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellTemplate {
    #[serde(default)]
    pub id: Option<String>,
    pub preset: PresetId,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub entry: Option<Vec<u64>>,
}

/// All unordered pairs (with self-play) of a roster on a list of presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    #[serde(default = "all_presets")]
    pub presets: Vec<PresetId>,
    #[serde(default = "default_roster")]
    pub roster: Vec<AgentEntry>,
    #[serde(default = "yes")]
    pub self_play: bool,
    /// Adds Q-learning to the roster; its cells run for [`Q_LEARNING_HORIZON`] steps.
    #[serde(default)]
    pub q_learning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// `n` copies of each roster agent.
    Identical,
    /// `n - 1` UCB-T agents and one roster agent.
    UcbMajority,
    /// `k` UCB-T agents and `n - k` copies of a roster agent, for `k = 0..=n`.
    UcbFraction,
}

/// Oligopolies of growing size on one symmetric preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "o2")]
    pub preset: PresetId,
    #[serde(default = "sweep_players")]
    pub players: Vec<usize>,
    #[serde(default = "identical")]
    pub composition: Composition,
    #[serde(default = "default_roster")]
    pub roster: Vec<AgentEntry>,
}

fn all_presets() -> Vec<PresetId> {
    PresetId::ALL.to_vec()
}
fn default_roster() -> Vec<AgentEntry> {
    DEFAULT_ROSTER.iter().map(|&s| s.into()).collect()
}
fn yes() -> bool {
    true
}
fn o2() -> PresetId {
    PresetId::O2
}
fn sweep_players() -> Vec<usize> {
    (2..=10).collect()
}
fn identical() -> Composition {
    Composition::Identical
}
fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.collect()
}
fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}
fn default_tail() -> usize {
    TAIL_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_tail")]
    pub tail_window: usize,
    /// Samples per run for price-index curves; 0 disables curves.
    #[serde(default)]
    pub curve_points: usize,
    #[serde(default)]
    pub cell: Vec<CellTemplate>,
    #[serde(default)]
    pub matrix: Vec<MatrixBlock>,
    #[serde(default)]
    pub sweep: Vec<SweepBlock>,
    #[serde(default)]
    pub convergence: Vec<ConvergenceStudy>,
    #[serde(default)]
    pub staggered: Vec<StaggeredStudy>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            name: String::new(),
            horizon: DEFAULT_HORIZON,
            seeds: default_seeds(),
            tail_window: TAIL_WINDOW,
            curve_points: 0,
            cell: Vec::new(),
            matrix: Vec::new(),
            sweep: Vec::new(),
            convergence: Vec::new(),
            staggered: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.cell.is_empty() && self.matrix.is_empty() && self.sweep.is_empty() && self.convergence.is_empty() && self.staggered.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("manifest defines no cells or studies".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("manifest needs at least one seed".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.tail_window == 0 {
            return Err(Error::Config("tail_window must be positive".into()));
        }
        for s in &self.sweep {
            if !s.preset.is_symmetric() {
                return Err(Error::Config(format!("sweep preset {} is not symmetric", s.preset)));
            }
            if s.players.iter().any(|&n| n < 2) {
                return Err(Error::Config("sweeps need at least two players".into()));
            }
        }
        for c in &self.convergence {
            c.agent.validate().map_err(|e| Error::Config(e.to_string()))?;
            if c.horizon == 0 || c.seeds.is_empty() {
                return Err(Error::Config("convergence study needs a horizon and seeds".into()));
            }
        }
        for s in &self.staggered {
            s.agent.validate().map_err(|e| Error::Config(e.to_string()))?;
            if s.horizon == 0 || s.seeds.is_empty() || s.block == 0 {
                return Err(Error::Config("staggered study needs a horizon, seeds and a block length".into()));
            }
            if !(0.0..1.0).contains(&s.entry_fraction) {
                return Err(Error::Config("entry_fraction must lie in [0, 1)".into()));
            }
        }
        self.cells().map_err(|e| if e.is_config() { e } else { Error::Config(e.to_string()) })?;
        Ok(())
    }

    /// Expands every block into cells, in declaration order.
    pub fn cells(&self) -> Result<Vec<CellSpec>> {
        let mut out = Vec::new();
        for t in &self.cell {
            let agents = resolve_all(&t.agents)?;
            if agents.is_empty() {
                return Err(Error::Config("cell without agents".into()));
            }
            let mut c = CellSpec::new(t.preset, agents, t.horizon.unwrap_or(self.horizon));
            if let Some(id) = &t.id {
                c.id = id.clone();
            }
            c.noise = t.noise;
            c.entry = t.entry.clone();
            out.push(c);
        }
        for m in &self.matrix {
            let mut roster = resolve_all(&m.roster)?;
            if m.q_learning {
                roster.push(AgentConfig::q_learning());
            }
            for &preset in &m.presets {
                for i in 0..roster.len() {
                    for j in i..roster.len() {
                        if i == j && !m.self_play {
                            continue;
                        }
                        out.push(self.sized(preset, vec![roster[i].clone(), roster[j].clone()]));
                    }
                }
            }
        }
        for s in &self.sweep {
            let roster = resolve_all(&s.roster)?;
            let ucb = AgentConfig::UcbTuned;
            for &n in &s.players {
                for other in &roster {
                    match s.composition {
                        Composition::Identical => out.push(self.sized(s.preset, vec![other.clone(); n])),
                        Composition::UcbMajority => {
                            if *other == ucb {
                                continue;
                            }
                            let mut agents = vec![ucb.clone(); n - 1];
                            agents.push(other.clone());
                            out.push(self.sized(s.preset, agents));
                        }
                        Composition::UcbFraction => {
                            if *other == ucb {
                                continue;
                            }
                            for k in 0..=n {
                                let mut agents = vec![ucb.clone(); k];
                                agents.extend(std::iter::repeat_n(other.clone(), n - k));
                                out.push(self.sized(s.preset, agents));
                            }
                        }
                    }
                }
            }
        }
        // Blocks may overlap (a sweep's k = 0 cell is an identical oligopoly);
        // repeated cells run once, but one id must not name two different cells.
        let mut unique: Vec<CellSpec> = Vec::with_capacity(out.len());
        let mut seen = std::collections::HashMap::new();
        for c in out {
            match seen.get(&c.id) {
                Some(&k) if unique[k] == c => {}
                Some(_) => return Err(Error::Config(format!("cell id {} names two different cells", c.id))),
                None => {
                    seen.insert(c.id.clone(), unique.len());
                    unique.push(c);
                }
            }
        }
        Ok(unique)
    }

    fn sized(&self, preset: PresetId, agents: Vec<AgentConfig>) -> CellSpec {
        let ql = agents.iter().any(|a| matches!(a, AgentConfig::QLearning { .. }));
        CellSpec::new(preset, agents, if ql { Q_LEARNING_HORIZON.max(self.horizon) } else { self.horizon })
    }
}

fn resolve_all(entries: &[AgentEntry]) -> Result<Vec<AgentConfig>> {
    entries.iter().map(AgentEntry::resolve).collect()
}

/// Everything a manifest produces.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<CellRow>,
    pub curves: Vec<CurvePoint>,
    pub aggregate: Vec<AggregateRow>,
    pub convergence: Vec<ConvergenceRow>,
    pub staggered: Vec<StaggeredRow>,
    /// Study runs that returned an error, as `(study, seed, message)`.
    pub study_failures: Vec<(String, u64, String)>,
}

impl ExperimentResult {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count() + self.study_failures.len()
    }
}

enum Job<'a> {
    Cell(&'a CellSpec, u64),
    Convergence(usize, u64),
    Staggered(usize, u64, bool),
}

enum Outcome {
    Cell(CellRow, Vec<CurvePoint>),
    Convergence(Result<ConvergenceRow>),
    Staggered(Result<StaggeredRow>),
}

/// Runs every cell, seed and study of `manifest`. Results are in job order
/// whatever the worker count.
pub fn run_manifest(manifest: &Manifest, workers: Option<usize>) -> Result<ExperimentResult> {
    manifest.validate()?;
    let cells = manifest.cells()?;
    let mut cache = ReferenceCache::default();
    cache.prepare(&cells)?;
    let targets = manifest.convergence.iter().map(ConvergenceStudy::cr_target).collect::<Result<Vec<_>>>()?;
    let options = CellOptions { tail_window: manifest.tail_window, curve_points: manifest.curve_points };

    let mut jobs = Vec::new();
    for c in &cells {
        for &s in &manifest.seeds {
            jobs.push(Job::Cell(c, s));
        }
    }
    for (i, study) in manifest.convergence.iter().enumerate() {
        jobs.extend(study.seeds.iter().map(|&s| Job::Convergence(i, s)));
    }
    for (i, study) in manifest.staggered.iter().enumerate() {
        for &s in &study.seeds {
            jobs.push(Job::Staggered(i, s, false));
            jobs.push(Job::Staggered(i, s, true));
        }
    }

    let outcomes = run_jobs(&jobs, workers, |_, job| match *job {
        Job::Cell(c, s) => {
            let refs = cache.get(c.preset, c.players).expect("references prepared for every cell");
            let (row, curve) = run_cell(c, s, refs, options);
            Outcome::Cell(row, curve)
        }
        Job::Convergence(i, s) => Outcome::Convergence(manifest.convergence[i].run_seed(s, &targets[i])),
        Job::Staggered(i, s, sim) => Outcome::Staggered(manifest.staggered[i].run_seed(s, sim)),
    });

    let mut result = ExperimentResult::default();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Outcome::Cell(row, curve) => {
                result.rows.push(row);
                result.curves.extend(curve);
            }
            Outcome::Convergence(r) => match r {
                Ok(row) => result.convergence.push(row),
                Err(e) => result.study_failures.push(study_failure(job, manifest, e)),
            },
            Outcome::Staggered(r) => match r {
                Ok(row) => result.staggered.push(row),
                Err(e) => result.study_failures.push(study_failure(job, manifest, e)),
            },
        }
    }
    result.aggregate = aggregate_rows(&result.rows);
    Ok(result)
}

fn study_failure(job: &Job<'_>, manifest: &Manifest, e: Error) -> (String, u64, String) {
    match *job {
        Job::Convergence(i, s) => {
            let st = &manifest.convergence[i];
            (format!("convergence/{}/{}", st.preset, st.agent.label()), s, e.to_string())
        }
        Job::Staggered(i, s, _) => {
            let st = &manifest.staggered[i];
            (format!("staggered/{}/{}", st.preset, st.agent.label()), s, e.to_string())
        }
        Job::Cell(c, s) => (c.id.clone(), s, e.to_string()),
    }
}

/// Every unordered pair of `roster` (self-play included) on every preset.
pub fn duopoly_matrix(presets: &[PresetId], roster: &[AgentConfig], seeds: &[u64], horizon: u64, workers: Option<usize>) -> Result<ExperimentResult> {
    let manifest = Manifest {
        name: "duopoly-matrix".into(),
        horizon,
        seeds: seeds.to_vec(),
        matrix: vec![MatrixBlock {
            presets: presets.to_vec(),
            roster: roster.iter().cloned().map(AgentEntry::Config).collect(),
            self_play: true,
            q_learning: false,
        }],
        ..Manifest::default()
    };
    run_manifest(&manifest, workers)
}

/// Oligopolies of each size in `players` on a symmetric preset.
pub fn player_sweep(
    preset: PresetId,
    players: &[usize],
    composition: Composition,
    roster: &[AgentConfig],
    seeds: &[u64],
    horizon: u64,
    workers: Option<usize>,
) -> Result<ExperimentResult> {
    let manifest = Manifest {
        name: "player-sweep".into(),
        horizon,
        seeds: seeds.to_vec(),
        sweep: vec![SweepBlock {
            preset,
            players: players.to_vec(),
            composition,
            roster: roster.iter().cloned().map(AgentEntry::Config).collect(),
        }],
        ..Manifest::default()
    };
    run_manifest(&manifest, workers)
}

/// Delayed entry of the second firm for each agent in `agents`.
pub fn staggered_entry_experiment(preset: PresetId, agents: &[AgentConfig], seeds: &[u64], horizon: u64, workers: Option<usize>) -> Result<ExperimentResult> {
    let manifest = Manifest {
        name: "staggered-entry".into(),
        horizon,
        seeds: seeds.to_vec(),
        staggered: agents
            .iter()
            .map(|a| StaggeredStudy {
                preset,
                agent: a.clone(),
                horizon,
                seeds: seeds.to_vec(),
                entry_fraction: 0.2,
                block: 10_000,
            })
            .collect(),
        ..Manifest::default()
    };
    run_manifest(&manifest, workers)
}

/// Self-play of a mean-based learner, scored against the CR set.
pub fn mean_based_convergence_experiment(preset: PresetId, agent: AgentConfig, seeds: &[u64], horizon: u64, workers: Option<usize>) -> Result<ExperimentResult> {
    let manifest = Manifest {
        name: "mean-based-convergence".into(),
        horizon,
        seeds: seeds.to_vec(),
        convergence: vec![ConvergenceStudy { preset, agent, horizon, seeds: seeds.to_vec(), tail_fraction: 0.1 }],
        ..Manifest::default()
    };
    run_manifest(&manifest, workers)
}
