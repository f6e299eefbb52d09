//! Charts drawn from the CSV files of a results directory.

use std::collections::BTreeMap;
use std::path::Path;

use bertrand_lab::{Error, Result};

use crate::svg::{heat, Frame, Svg, HEIGHT, PALETTE, WIDTH};

fn read_table(path: &Path) -> Result<Option<(Vec<String>, Vec<Vec<String>>)>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
    Ok(Some((header, rows)))
}

fn col(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

/// File-system friendly version of a cell id.
pub fn slug(s: &str) -> String {
    s.replace('\'', "p").chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '=' { c } else { '_' }).collect()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

/// Writes every chart the directory's CSVs support; returns how many.
pub fn plot_dir(dir: &Path) -> Result<usize> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let plots = dir.join("plots");
    let mut written = Vec::new();
    written.extend(curve_plots(dir)?);
    written.extend(heatmaps(dir)?);
    written.extend(player_bars(dir)?);
    written.extend(staggered_plots(dir)?);
    if !written.is_empty() {
        std::fs::create_dir_all(&plots)?;
    }
    for (name, svg) in &written {
        std::fs::write(plots.join(name), svg)?;
    }
    Ok(written.len())
}

/// Index against time: one thin line per seed and a thick mean.
fn curve_plots(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join("curves.csv");
    let Some((h, rows)) = read_table(&path)? else { return Ok(Vec::new()) };
    let (c, s, t, v) = (col(&h, "cell", &path)?, col(&h, "seed", &path)?, col(&h, "t", &path)?, col(&h, "ci_price", &path)?);
    let mut cells: BTreeMap<&str, BTreeMap<&str, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in &rows {
        cells.entry(&r[c]).or_default().entry(&r[s]).or_default().push((num(&r[t]), num(&r[v])));
    }
    let mut out = Vec::new();
    for (cell, seeds) in cells {
        let xs = range(seeds.values().flatten().map(|p| p.0));
        let ys = range(seeds.values().flatten().map(|p| p.1));
        let frame = Frame::new(xs, (ys.0.min(0.0), ys.1.max(1.0)));
        let mut svg = Svg::new(WIDTH, HEIGHT);
        frame.draw_axes(&mut svg, cell, "step", "price index");
        let mut by_t: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for pts in seeds.values() {
            svg.polyline(&pts.iter().map(|&(x, y)| (frame.px(x), frame.py(y))).collect::<Vec<_>>(), PALETTE[0], 0.8, 0.35);
            for &(x, y) in pts {
                let e = by_t.entry(x as u64).or_insert((0.0, 0));
                e.0 += y;
                e.1 += 1;
            }
        }
        let mean: Vec<(f64, f64)> = by_t.iter().map(|(&x, &(sum, n))| (frame.px(x as f64), frame.py(sum / n as f64))).collect();
        svg.polyline(&mean, PALETTE[1], 2.5, 1.0);
        out.push((format!("curve_{}.svg", slug(cell)), svg.finish()));
    }
    Ok(out)
}

/// Mean price index of every duopoly pair, one grid per preset.
fn heatmaps(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join("aggregate.csv");
    let Some((h, rows)) = read_table(&path)? else { return Ok(Vec::new()) };
    let (p, n, a, m, sd) = (
        col(&h, "preset", &path)?,
        col(&h, "players", &path)?,
        col(&h, "agents", &path)?,
        col(&h, "ci_price_mean", &path)?,
        col(&h, "ci_price_std", &path)?,
    );
    let mut presets: BTreeMap<&str, (Vec<String>, BTreeMap<(String, String), (f64, f64)>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r[n] == "2") {
        let Some((x, y)) = r[a].split_once('+') else { continue };
        let entry = presets.entry(&r[p]).or_default();
        for l in [x, y] {
            if !entry.0.iter().any(|k| k == l) {
                entry.0.push(l.to_string());
            }
        }
        entry.1.insert((x.to_string(), y.to_string()), (num(&r[m]), num(&r[sd])));
        entry.1.insert((y.to_string(), x.to_string()), (num(&r[m]), num(&r[sd])));
    }
    let mut out = Vec::new();
    for (preset, (labels, cells)) in presets {
        if labels.len() < 2 && cells.len() < 2 {
            continue;
        }
        let k = labels.len() as f64;
        let (left, top) = (90.0, 50.0);
        let size = ((WIDTH - left - 20.0) / k).min((HEIGHT - top - 20.0) / k);
        let mut svg = Svg::new(WIDTH, HEIGHT);
        svg.text(WIDTH / 2.0, 24.0, &format!("{preset}: mean price index"), 14.0, "middle");
        for (i, row) in labels.iter().enumerate() {
            svg.text(left - 6.0, top + (i as f64 + 0.55) * size, row, 11.0, "end");
            svg.text(left + (i as f64 + 0.5) * size, top - 6.0, row, 11.0, "middle");
            for (j, column) in labels.iter().enumerate() {
                let (x, y) = (left + j as f64 * size, top + i as f64 * size);
                match cells.get(&(row.clone(), column.clone())) {
                    Some(&(mean, std)) => {
                        svg.rect(x, y, size - 1.0, size - 1.0, &heat(mean));
                        svg.text(x + size / 2.0, y + size / 2.0, &format!("{mean:.2}"), 12.0, "middle");
                        svg.text(x + size / 2.0, y + size / 2.0 + 14.0, &format!("({std:.2})"), 10.0, "middle");
                    }
                    None => svg.rect(x, y, size - 1.0, size - 1.0, "#eeeeee"),
                }
            }
        }
        out.push((format!("heatmap_{}.svg", slug(preset)), svg.finish()));
    }
    Ok(out)
}

/// Mean price index against the number of firms for identical oligopolies.
fn player_bars(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join("aggregate.csv");
    let Some((h, rows)) = read_table(&path)? else { return Ok(Vec::new()) };
    let (p, n, a, m) = (col(&h, "preset", &path)?, col(&h, "players", &path)?, col(&h, "agents", &path)?, col(&h, "ci_price_mean", &path)?);
    let mut groups: BTreeMap<&str, BTreeMap<String, Vec<(usize, f64)>>> = BTreeMap::new();
    for r in &rows {
        let labels: Vec<&str> = r[a].split('+').collect();
        if labels.windows(2).all(|w| w[0] == w[1]) {
            let players: usize = r[n].parse().unwrap_or(0);
            groups.entry(&r[p]).or_default().entry(labels[0].to_string()).or_default().push((players, num(&r[m])));
        }
    }
    let mut out = Vec::new();
    for (preset, algos) in groups {
        let ns: Vec<usize> = {
            let mut v: Vec<usize> = algos.values().flatten().map(|x| x.0).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        if ns.len() < 2 {
            continue;
        }
        let ys = range(algos.values().flatten().map(|x| x.1));
        let frame = Frame::new((ns[0] as f64 - 0.5, *ns.last().unwrap() as f64 + 0.5), (ys.0.min(0.0), ys.1.max(0.5)));
        let mut svg = Svg::new(WIDTH, HEIGHT);
        frame.draw_axes(&mut svg, &format!("{preset}: identical oligopolies"), "number of firms", "price index");
        let k = algos.len() as f64;
        let slot = (frame.px(1.0) - frame.px(0.0)) * 0.8 / k;
        for (g, (label, points)) in algos.iter().enumerate() {
            let colour = PALETTE[g % PALETTE.len()];
            for &(players, v) in points {
                if !v.is_finite() {
                    continue;
                }
                let x = frame.px(players as f64) - 0.4 * (frame.px(1.0) - frame.px(0.0)) + g as f64 * slot;
                let (y0, y1) = (frame.py(0.0), frame.py(v));
                svg.rect(x, y0.min(y1), slot * 0.9, (y0 - y1).abs(), colour);
            }
            let ly = 48.0 + 16.0 * g as f64;
            svg.rect(WIDTH - 130.0, ly - 9.0, 10.0, 10.0, colour);
            svg.text(WIDTH - 115.0, ly, label, 11.0, "start");
        }
        out.push((format!("players_{}.svg", slug(preset)), svg.finish()));
    }
    Ok(out)
}

/// Incumbent and entrant block means, averaged over seeds.
fn staggered_plots(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join("staggered.csv");
    let Some((h, rows)) = read_table(&path)? else { return Ok(Vec::new()) };
    let (p, a, e, t, inc, ent, nash) = (
        col(&h, "preset", &path)?,
        col(&h, "agent", &path)?,
        col(&h, "entry_step", &path)?,
        col(&h, "t", &path)?,
        col(&h, "incumbent_mean", &path)?,
        col(&h, "entrant_mean", &path)?,
        col(&h, "nash_price", &path)?,
    );
    // (preset, agent) -> simultaneous? -> t -> sums
    type Sums = BTreeMap<u64, [(f64, usize); 2]>;
    let mut groups: BTreeMap<(String, String), (f64, BTreeMap<bool, Sums>)> = BTreeMap::new();
    for r in &rows {
        let g = groups.entry((r[p].clone(), r[a].clone())).or_insert((num(&r[nash]), BTreeMap::new()));
        let sums = g.1.entry(r[e] == "1").or_default().entry(r[t].parse().unwrap_or(0)).or_insert([(0.0, 0); 2]);
        for (k, v) in [num(&r[inc]), num(&r[ent])].into_iter().enumerate() {
            if v.is_finite() {
                sums[k].0 += v;
                sums[k].1 += 1;
            }
        }
    }
    let mut out = Vec::new();
    for ((preset, agent), (nash_price, runs)) in groups {
        let mut lines: Vec<(String, &str, f64, Vec<(f64, f64)>)> = Vec::new();
        for (simultaneous, sums) in &runs {
            for (k, name) in ["incumbent", "entrant"].iter().enumerate() {
                let pts: Vec<(f64, f64)> = sums.iter().filter(|(_, s)| s[k].1 > 0).map(|(&x, s)| (x as f64, s[k].0 / s[k].1 as f64)).collect();
                let label = if *simultaneous { format!("{name} (simultaneous)") } else { name.to_string() };
                let colour = PALETTE[k + if *simultaneous { 2 } else { 0 }];
                lines.push((label, colour, if *simultaneous { 1.2 } else { 2.2 }, pts));
            }
        }
        let xs = range(lines.iter().flat_map(|l| l.3.iter().map(|p| p.0)));
        let ys = range(lines.iter().flat_map(|l| l.3.iter().map(|p| p.1)).chain([nash_price]));
        let frame = Frame::new((0.0, xs.1), (ys.0 - 0.05, ys.1 + 0.05));
        let mut svg = Svg::new(WIDTH, HEIGHT);
        frame.draw_axes(&mut svg, &format!("{preset} staggered entry: {agent}"), "step", "mean price");
        svg.line(frame.px(0.0), frame.py(nash_price), frame.px(xs.1), frame.py(nash_price), "#888888", 1.0);
        for (g, (label, colour, w, pts)) in lines.iter().enumerate() {
            svg.polyline(&pts.iter().map(|&(x, y)| (frame.px(x), frame.py(y))).collect::<Vec<_>>(), colour, *w, 1.0);
            let ly = 48.0 + 16.0 * g as f64;
            svg.rect(WIDTH - 190.0, ly - 9.0, 10.0, 10.0, colour);
            svg.text(WIDTH - 175.0, ly, label, 11.0, "start");
        }
        out.push((format!("staggered_{}_{}.svg", slug(&preset), slug(&agent)), svg.finish()));
    }
    Ok(out)
}
