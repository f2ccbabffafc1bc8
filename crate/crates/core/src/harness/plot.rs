//! Standalone SVG plots from episode-log CSVs.
//!
//! The input needs `episode`, `method`, and a `reward` (or `episode_reward`)
//! column; a `success` column adds the success-rate bar panel. One SVG comes
//! out: a reward-vs-episode polyline per method (y axis inverted so larger
//! rewards sit higher) next to a per-method success-rate bar chart. All
//! numeric content comes from the CSV alone. Rows sharing (method, episode),
//! as multi-seed comparison logs do, are averaged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const LINE_PANEL: Panel = Panel { x: 70.0, y: 50.0, w: 520.0, h: 370.0 };
const BAR_PANEL: Panel = Panel { x: 680.0, y: 50.0, w: 240.0, h: 370.0 };
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

struct Row {
    episode: f64,
    method: String,
    reward: f64,
    success: Option<bool>,
}

/// Renders `log_csv` to a single SVG document at `out_svg`.
pub fn emit_plots(log_csv: &Path, out_svg: &Path) -> Result<()> {
    let rows = read_rows(log_csv)?;
    let svg = render(&rows);
    if let Some(parent) = out_svg.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out_svg, svg)?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Format(format!("cannot read log {}", path.display())),
        _ => Error::Csv(e),
    })?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(episode_col), Some(method_col)) = (col("episode"), col("method")) else {
        return Err(Error::Format(
            "log needs `episode` and `method` columns".into(),
        ));
    };
    let Some(reward_col) = col("reward").or_else(|| col("episode_reward")) else {
        return Err(Error::Format(
            "log needs a `reward` or `episode_reward` column".into(),
        ));
    };
    let success_col = col("success");

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> Result<&str> {
            record
                .get(c)
                .ok_or_else(|| Error::Format(format!("row {}: short record", idx + 2)))
        };
        let episode: f64 = field(episode_col)?.parse().map_err(|_| {
            Error::Format(format!("row {}: bad episode {:?}", idx + 2, &record[episode_col]))
        })?;
        let reward: f64 = field(reward_col)?.parse().map_err(|_| {
            Error::Format(format!("row {}: bad reward {:?}", idx + 2, &record[reward_col]))
        })?;
        let success = match success_col {
            None => None,
            Some(c) => Some(match field(c)? {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(Error::Format(format!(
                        "row {}: bad success flag {other:?}",
                        idx + 2
                    )))
                }
            }),
        };
        rows.push(Row {
            episode,
            method: field(method_col)?.to_string(),
            reward,
            success,
        });
    }
    Ok(rows)
}

fn render(rows: &[Row]) -> String {
    // method -> sorted (episode, mean reward) series.
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut success: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut grouped: BTreeMap<(&str, u64), (f64, f64, u32)> = BTreeMap::new();
    for row in rows {
        let key = (row.method.as_str(), row.episode.to_bits());
        let slot = grouped.entry(key).or_insert((row.episode, 0.0, 0));
        slot.1 += row.reward;
        slot.2 += 1;
        if let Some(s) = row.success {
            let counter = success.entry(row.method.as_str()).or_insert((0, 0));
            counter.0 += u64::from(s);
            counter.1 += 1;
        }
    }
    for ((method, _), (episode, sum, n)) in grouped {
        series.entry(method).or_default().push((episode, sum / n as f64));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    render_line_panel(&mut svg, &series);
    render_bar_panel(&mut svg, &success);

    svg.push_str("</svg>\n");
    svg
}

fn axis(svg: &mut String, p: &Panel, title: &str) {
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        p.x,
        p.y + p.h,
        p.x + p.w,
        p.y + p.h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        p.x, p.y, p.x, p.y + p.h
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{title}</text>",
        p.x + p.w / 2.0,
        p.y - 18.0
    );
}

fn map_range(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn render_line_panel(svg: &mut String, series: &BTreeMap<&str, Vec<(f64, f64)>>) {
    let p = &LINE_PANEL;
    axis(svg, p, "reward per episode");

    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    if all.is_empty() {
        return;
    }
    let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut r_min, mut r_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(e, r) in &all {
        e_min = e_min.min(e);
        e_max = e_max.max(e);
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }

    for (label, (e, anchor)) in [("x-min", (e_min, "start")), ("x-max", (e_max, "end"))] {
        let _ = label;
        let x = p.x + map_range(e, e_min, e_max) * p.w;
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\">{e}</text>",
            p.y + p.h + 16.0
        );
    }
    for (r, dy) in [(r_min, 0.0), (r_max, 1.0)] {
        let y = p.y + (1.0 - map_range(r, r_min, r_max).min(1.0)) * p.h + 4.0 - dy;
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{y:.2}\" text-anchor=\"end\">{r:.3}</text>",
            p.x - 6.0
        );
    }

    for (i, (method, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut attr = String::new();
        for &(e, r) in points {
            let x = p.x + map_range(e, e_min, e_max) * p.w;
            let y = p.y + (1.0 - map_range(r, r_min, r_max)) * p.h;
            let _ = write!(attr, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            attr.trim_end()
        );
        // Legend swatch and label.
        let ly = p.y + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            p.x + p.w - 70.0,
            ly
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\">{method}</text>",
            p.x + p.w - 56.0,
            ly + 9.0
        );
    }
}

fn render_bar_panel(svg: &mut String, success: &BTreeMap<&str, (u64, u64)>) {
    let p = &BAR_PANEL;
    axis(svg, p, "success rate");
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1.0</text>",
        p.x - 6.0,
        p.y + 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">0.0</text>",
        p.x - 6.0,
        p.y + p.h
    );
    if success.is_empty() {
        return;
    }
    let n = success.len() as f64;
    let slot = p.w / n;
    let bar_w = (slot * 0.6).min(60.0);
    for (i, (method, &(wins, total))) in success.iter().enumerate() {
        let rate = wins as f64 / total as f64;
        let color = PALETTE[i % PALETTE.len()];
        let x = p.x + slot * i as f64 + (slot - bar_w) / 2.0;
        let h = rate * p.h;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>",
            p.y + p.h - h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{method}</text>",
            x + bar_w / 2.0,
            p.y + p.h + 16.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.2}</text>",
            x + bar_w / 2.0,
            p.y + p.h - h - 4.0,
            rate
        );
    }
}
