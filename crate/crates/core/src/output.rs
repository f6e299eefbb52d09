//! Versioned CSV tables. Every file starts with a `#schema=<name>/v<N>` line,
//! followed by a header row. Floats use Rust's shortest round-trip formatting,
//! so identical results give identical bytes.

use std::io::Write;

use crate::error::Result;
use crate::experiments::{AggregateRow, CellRow, ConvergenceRow, CurvePoint, ExperimentResult, StaggeredRow};
use crate::sim::RunHistory;

pub const ROWS_SCHEMA: &str = "bertrand-lab.rows/v1";
pub const AGGREGATE_SCHEMA: &str = "bertrand-lab.aggregate/v1";
pub const CURVES_SCHEMA: &str = "bertrand-lab.curves/v1";
pub const CONVERGENCE_SCHEMA: &str = "bertrand-lab.convergence/v1";
pub const STAGGERED_SCHEMA: &str = "bertrand-lab.staggered/v1";
pub const HISTORY_SCHEMA: &str = "bertrand-lab.history/v1";

fn num(x: f64) -> String {
    format!("{x}")
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// Parses a `;`-separated list written by this module.
pub fn parse_list(s: &str) -> Vec<f64> {
    if s.is_empty() {
        return Vec::new();
    }
    s.split(';').map(|v| v.parse().unwrap_or(f64::NAN)).collect()
}

fn table<W: Write>(mut out: W, schema: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    writeln!(out, "#schema={schema}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows<W: Write>(out: W, rows: &[CellRow]) -> Result<()> {
    let header = [
        "cell", "preset", "players", "agents", "seed", "horizon", "status", "median_prices", "ci_prices", "mean_ci_price", "ci_profit",
        "nash_prices", "monopoly_prices", "clamp_events",
    ];
    table(
        out,
        ROWS_SCHEMA,
        &header,
        rows.iter().map(|r| {
            vec![
                r.cell.clone(),
                r.preset.to_string(),
                r.players.to_string(),
                r.agents.clone(),
                r.seed.to_string(),
                r.horizon.to_string(),
                r.status.clone(),
                list(&r.median_prices),
                list(&r.ci_prices),
                num(r.mean_ci_price),
                num(r.ci_profit),
                list(&r.nash_prices),
                list(&r.monopoly_prices),
                r.clamp_events.to_string(),
            ]
        }),
    )
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let header = [
        "cell", "preset", "players", "agents", "runs", "failed", "ci_price_mean", "ci_price_std", "ci_profit_mean", "ci_profit_std",
    ];
    table(
        out,
        AGGREGATE_SCHEMA,
        &header,
        rows.iter().map(|r| {
            vec![
                r.cell.clone(),
                r.preset.to_string(),
                r.players.to_string(),
                r.agents.clone(),
                r.runs.to_string(),
                r.failed.to_string(),
                num(r.ci_price_mean),
                num(r.ci_price_std),
                num(r.ci_profit_mean),
                num(r.ci_profit_std),
            ]
        }),
    )
}

pub fn write_curves<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    table(
        out,
        CURVES_SCHEMA,
        &["cell", "seed", "t", "ci_price"],
        points.iter().map(|p| vec![p.cell.clone(), p.seed.to_string(), p.t.to_string(), num(p.ci_price)]),
    )
}

pub fn write_convergence<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    table(
        out,
        CONVERGENCE_SCHEMA,
        &["preset", "agent", "seed", "horizon", "tail_frequency", "violation_rate", "ci_prices"],
        rows.iter().map(|r| {
            vec![
                r.preset.to_string(),
                r.agent.clone(),
                r.seed.to_string(),
                r.horizon.to_string(),
                num(r.tail_frequency),
                num(r.violation_rate),
                list(&r.ci_prices),
            ]
        }),
    )
}

/// One line per block: `(run, t, incumbent, entrant)` plus the run summary.
pub fn write_staggered<W: Write>(out: W, rows: &[StaggeredRow]) -> Result<()> {
    let header = [
        "preset", "agent", "seed", "entry_step", "nash_price", "pre_entry_mean", "post_entry_mean", "final_mean", "t", "incumbent_mean",
        "entrant_mean",
    ];
    table(
        out,
        STAGGERED_SCHEMA,
        &header,
        rows.iter().flat_map(|r| {
            r.blocks.iter().map(move |&(t, inc, ent)| {
                vec![
                    r.preset.to_string(),
                    r.agent.clone(),
                    r.seed.to_string(),
                    r.entry_step.to_string(),
                    num(r.nash_price),
                    num(r.pre_entry_mean),
                    num(r.post_entry_mean),
                    num(r.final_mean),
                    t.to_string(),
                    num(inc),
                    num(ent),
                ]
            })
        }),
    )
}

/// One line per recorded step with `action_i`, `price_i`, `reward_i`, `active_i`
/// for every player; inactive players leave action and price empty.
pub fn write_history<W: Write>(out: W, h: &RunHistory) -> Result<()> {
    let n = h.players;
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.extend([format!("action_{i}"), format!("price_{i}"), format!("reward_{i}"), format!("active_{i}")]);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(
        out,
        HISTORY_SCHEMA,
        &header,
        h.steps.iter().enumerate().map(|(r, &t)| {
            let mut line = vec![t.to_string()];
            for k in r * n..(r + 1) * n {
                if h.active[k] {
                    line.extend([h.actions[k].to_string(), num(h.prices[k]), num(h.rewards[k]), "1".into()]);
                } else {
                    line.extend([String::new(), String::new(), num(h.rewards[k]), "0".into()]);
                }
            }
            line
        }),
    )
}

/// File names used by [`write_result`].
pub const RESULT_FILES: [&str; 5] = ["rows.csv", "aggregate.csv", "curves.csv", "convergence.csv", "staggered.csv"];

/// Writes every table of `result` into `dir`. Empty study tables are skipped.
pub fn write_result(dir: &std::path::Path, result: &ExperimentResult) -> Result<()> {
    use std::fs::File;
    use std::io::BufWriter;
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_rows(open(RESULT_FILES[0])?, &result.rows)?;
    write_aggregate(open(RESULT_FILES[1])?, &result.aggregate)?;
    if !result.curves.is_empty() {
        write_curves(open(RESULT_FILES[2])?, &result.curves)?;
    }
    if !result.convergence.is_empty() {
        write_convergence(open(RESULT_FILES[3])?, &result.convergence)?;
    }
    if !result.staggered.is_empty() {
        write_staggered(open(RESULT_FILES[4])?, &result.staggered)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{aggregate_rows, PresetId};

    fn row(cell: &str, seed: u64, v: f64) -> CellRow {
        CellRow {
            cell: cell.into(),
            preset: PresetId::O2Asym,
            players: 2,
            agents: "TS+TS".into(),
            seed,
            horizon: 10,
            status: "ok".into(),
            median_prices: vec![0.45, 0.5],
            ci_prices: vec![v, v],
            mean_ci_price: v,
            ci_profit: 0.1,
            nash_prices: vec![0.45, 0.5],
            monopoly_prices: vec![0.8, 0.9],
            clamp_events: 0,
        }
    }

    #[test]
    fn schema_line_and_header() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row("a", 0, 0.25)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("#schema=bertrand-lab.rows/v1"));
        assert!(lines.next().unwrap().starts_with("cell,preset,players"));
        assert_eq!(lines.next(), Some("a,O2',2,TS+TS,0,10,ok,0.45;0.5,0.25;0.25,0.25,0.1,0.45;0.5,0.8;0.9,0"));
    }

    #[test]
    fn empty_tables_keep_headers() {
        let mut buf = Vec::new();
        write_aggregate(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn aggregate_readable_back() {
        let rows = vec![row("a", 0, 0.0), row("a", 1, 1.0)];
        let mut buf = Vec::new();
        write_aggregate(&mut buf, &aggregate_rows(&rows)).unwrap();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(buf.as_slice());
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(&rec[6], "0.5");
        assert_eq!(&rec[7], "0.5");
    }

    #[test]
    fn history_one_line_per_step() {
        use crate::agents::AgentConfig;
        use crate::sim::{run, RunConfig};
        let mut cfg = RunConfig::new(PresetId::O1.spec(), vec![AgentConfig::Ucb1, AgentConfig::Uniform], 10, 0);
        cfg.entry = Some(vec![1, 4]);
        let h = run(&cfg).unwrap();
        let mut buf = Vec::new();
        write_history(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[1], "t,action_0,price_0,reward_0,active_0,action_1,price_1,reward_1,active_1");
        assert!(lines[2].starts_with("1,0,0.05,"));
        assert!(lines[2].ends_with(",1,,,0,0"));
        assert!(lines[5].ends_with(",1"));
    }

    #[test]
    fn list_round_trip() {
        assert_eq!(parse_list(&list(&[0.1, -2.0, 1e-300])), vec![0.1, -2.0, 1e-300]);
        assert!(parse_list("").is_empty());
    }
}
