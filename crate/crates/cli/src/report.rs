use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::Value;

use crate::{ensure_dir, usage};

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// metrics.json files written by train-target or train-teacher.
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw MRR against alignment ratio, one line per mode.
    #[arg(long)]
    pub plot: bool,
}

const METRIC_KEYS: [&str; 5] = ["mr", "mrr", "hits1", "hits3", "hits10"];

struct Row {
    run: String,
    mode: String,
    seed: Option<u64>,
    ratio: Option<f64>,
    values: [f64; 5],
}

fn read_row(path: &Path) -> anyhow::Result<Row> {
    let text = std::fs::read_to_string(path).map_err(|e| atransn::Error::io(path, e))?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: not JSON: {e}", path.display())))?;
    let mut values = [0.0; 5];
    for (slot, key) in values.iter_mut().zip(METRIC_KEYS) {
        *slot = json
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| usage(format!("{}: missing numeric key '{key}'", path.display())))?;
    }
    Ok(Row {
        run: path.display().to_string(),
        mode: json
            .get("mode")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_owned(),
        seed: json.get("seed").and_then(Value::as_u64),
        ratio: json.get("ratio").and_then(Value::as_f64),
        values,
    })
}

pub fn report(args: ReportArgs) -> anyhow::Result<()> {
    let rows: Vec<Row> = args
        .metrics
        .iter()
        .map(|p| read_row(p))
        .collect::<anyhow::Result<_>>()?;
    ensure_dir(&args.out)?;
    let csv_path = args.out.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", csv_path.display()))?;
    w.write_record([
        "run", "mode", "seed", "ratio", "mr", "mrr", "hits1", "hits3", "hits10",
    ])?;
    for row in &rows {
        let mut record = vec![
            row.run.clone(),
            row.mode.clone(),
            row.seed.map_or(String::new(), |s| s.to_string()),
            row.ratio.map_or(String::new(), |r| r.to_string()),
        ];
        record.extend(row.values.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| atransn::Error::io(&csv_path, e))?;
    if args.plot {
        let svg_path = args.out.join("report.svg");
        std::fs::write(&svg_path, plot(&rows)).map_err(|e| atransn::Error::io(&svg_path, e))?;
    }
    Ok(())
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Mean MRR per (mode, ratio); runs without a ratio sit at 0.
fn plot(rows: &[Row]) -> String {
    let mut series: BTreeMap<&str, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for row in rows {
        let x = row.ratio.unwrap_or(0.0);
        let cell = series
            .entry(&row.mode)
            .or_default()
            .entry(x.to_bits())
            .or_insert((0.0, 0));
        cell.0 += row.values[1];
        cell.1 += 1;
    }
    let (w, h, pad) = (480.0, 320.0, 48.0);
    let y_max = rows
        .iter()
        .map(|r| r.values[1])
        .fold(0.0_f64, f64::max)
        .max(1e-3)
        * 1.1;
    let sx = |x: f64| pad + x * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / y_max * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y0} H{x1} M{x0},{y0} V{y1}" stroke="black" fill="none"/>"#,
        x0 = pad,
        y0 = h - pad,
        x1 = w - pad,
        y1 = pad
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{tick}</text>"#,
            sx(tick),
            h - pad + 16.0
        );
        let y = tick * y_max;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.3}</text>"#,
            pad - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">alignment ratio</text>"#,
        w / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">MRR</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (mode, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|(x, (sum, n))| {
                format!("{:.1},{:.1}", sx(f64::from_bits(*x)), sy(sum / *n as f64))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let label = if mode.is_empty() { "run" } else { mode };
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{label}</text>"#,
            w - pad + 4.0 - 40.0,
            pad + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
