use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use plotters::prelude::*;
use serde::Serialize;

use polytrans_core::orchestrator::{DirectionStats, ExportSink, StepMetrics};

pub const PLOTS: [&str; 4] = ["direction_matrix.svg", "reward_curves.svg", "pool_sizes.svg", "skip_rate.svg"];

#[derive(Debug, Serialize)]
struct DirectionSummary {
    /// Mean over steps of the per-step reward rate, counting only steps
    /// where the direction was rolled out.
    mean_reward_rate: f64,
    /// Total passes over total candidates.
    pooled_reward_rate: f64,
    steps_present: usize,
    candidates: u64,
    passes: u64,
}

#[derive(Debug, Serialize)]
struct Summary {
    steps: usize,
    directions: BTreeMap<String, DirectionSummary>,
    /// Mean over steps of skipped / batch_size.
    mean_skip_rate: f64,
    mean_explore_size: f64,
    final_explore_size: usize,
    explore_capacity: usize,
    total_enqueued: usize,
    total_items_defined: usize,
    total_items_skipped: usize,
    first_explored_step: Option<u64>,
}

fn read_metrics(dir: &Path) -> Result<Vec<StepMetrics>> {
    let path = dir.join(ExportSink::METRICS_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("no metrics in {}", dir.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    if out.is_empty() {
        bail!("{} is empty", path.display());
    }
    Ok(out)
}

fn skip_rate(m: &StepMetrics) -> f64 {
    if m.batch_size == 0 {
        0.0
    } else {
        m.items_skipped as f64 / m.batch_size as f64
    }
}

fn summarize(metrics: &[StepMetrics]) -> Summary {
    let mut directions = BTreeMap::new();
    let keys: BTreeSet<&String> = metrics.iter().flat_map(|m| m.directions.keys()).collect();
    for key in keys {
        let present: Vec<&DirectionStats> =
            metrics.iter().filter_map(|m| m.directions.get(key)).filter(|d| d.candidates > 0).collect();
        let mut total = DirectionStats::default();
        for d in &present {
            total.merge(d);
        }
        let mean = if present.is_empty() {
            0.0
        } else {
            present.iter().map(|d| d.reward_rate()).sum::<f64>() / present.len() as f64
        };
        directions.insert(
            key.clone(),
            DirectionSummary {
                mean_reward_rate: mean,
                pooled_reward_rate: total.reward_rate(),
                steps_present: present.len(),
                candidates: total.candidates,
                passes: total.passes,
            },
        );
    }
    let n = metrics.len() as f64;
    let last = metrics.last().expect("non-empty");
    Summary {
        steps: metrics.len(),
        directions,
        mean_skip_rate: metrics.iter().map(skip_rate).sum::<f64>() / n,
        mean_explore_size: metrics.iter().map(|m| m.explore_size as f64).sum::<f64>() / n,
        final_explore_size: last.explore_size,
        explore_capacity: last.explore_capacity,
        total_enqueued: metrics.iter().map(|m| m.enqueued).sum(),
        total_items_defined: metrics.iter().map(|m| m.items_defined).sum(),
        total_items_skipped: metrics.iter().map(|m| m.items_skipped).sum(),
        first_explored_step: metrics.iter().find(|m| m.explore_sourced > 0).map(|m| m.step),
    }
}

fn languages(summary: &Summary) -> Vec<String> {
    let mut set = BTreeSet::new();
    for k in summary.directions.keys() {
        if let Some((s, t)) = k.split_once("->") {
            set.insert(s.to_string());
            set.insert(t.to_string());
        }
    }
    set.into_iter().collect()
}

fn matrix_text(summary: &Summary) -> String {
    let langs = languages(summary);
    let mut out = format!("{:<10}", "src\\tgt");
    for t in &langs {
        out.push_str(&format!("{t:>10}"));
    }
    out.push('\n');
    for s in &langs {
        out.push_str(&format!("{s:<10}"));
        for t in &langs {
            let cell = summary
                .directions
                .get(&format!("{s}->{t}"))
                .map_or_else(|| "-".to_string(), |d| format!("{:.4}", d.pooled_reward_rate));
            out.push_str(&format!("{cell:>10}"));
        }
        out.push('\n');
    }
    out
}

type DrawResult = std::result::Result<(), Box<dyn std::error::Error>>;

fn line_chart(path: &Path, title: &str, y_max: f64, series: &[(String, Vec<(f64, f64)>)], x_max: f64) -> DrawResult {
    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(48)
        .build_cartesian_2d(0.0..x_max.max(1.0), 0.0..y_max.max(1e-9))?;
    chart.configure_mesh().x_desc("step").draw()?;
    for (i, (name, points)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    if series.len() > 1 {
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    }
    root.present()?;
    Ok(())
}

fn matrix_chart(path: &Path, summary: &Summary) -> DrawResult {
    let langs = languages(summary);
    let n = langs.len().max(1) as i32;
    let root = SVGBackend::new(path, (560, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("pooled reward rate (row: source, column: target)", ("sans-serif", 16))
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(64)
        .build_cartesian_2d(0..n, 0..n)?;
    let label = |i: &i32| langs.get(*i as usize).cloned().unwrap_or_default();
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(n as usize)
        .y_labels(n as usize)
        .x_label_formatter(&label)
        .y_label_formatter(&label)
        .draw()?;
    for (si, s) in langs.iter().enumerate() {
        for (ti, t) in langs.iter().enumerate() {
            let rate = summary.directions.get(&format!("{s}->{t}")).map(|d| d.pooled_reward_rate);
            let color = match rate {
                Some(r) => RGBColor(255 - (r * 200.0) as u8, 255 - (r * 80.0) as u8, 255 - (r * 200.0) as u8),
                None => RGBColor(220, 220, 220),
            };
            let (x, y) = (ti as i32, si as i32);
            chart.draw_series(std::iter::once(Rectangle::new([(x, y), (x + 1, y + 1)], color.filled())))?;
            if let Some(r) = rate {
                chart.draw_series(std::iter::once(Text::new(format!("{r:.2}"), (x, y), ("sans-serif", 16))))?;
            }
        }
    }
    root.present()?;
    Ok(())
}

pub fn report(dir: &Path) -> Result<()> {
    let metrics = read_metrics(dir)?;
    let summary = summarize(&metrics);
    let out = dir.join("report");
    fs::create_dir_all(&out)?;
    let x_max = metrics.last().map_or(1.0, |m| m.step as f64);
    let draw = |r: DrawResult, name: &str| r.map_err(|e| anyhow!("drawing {name}: {e}"));

    draw(matrix_chart(&out.join(PLOTS[0]), &summary), PLOTS[0])?;

    let curves: Vec<(String, Vec<(f64, f64)>)> = summary
        .directions
        .keys()
        .map(|k| {
            let pts = metrics
                .iter()
                .filter_map(|m| m.directions.get(k).filter(|d| d.candidates > 0).map(|d| (m.step as f64, d.reward_rate())))
                .collect();
            (k.clone(), pts)
        })
        .collect();
    draw(line_chart(&out.join(PLOTS[1]), "reward rate per direction", 1.0, &curves, x_max), PLOTS[1])?;

    let cap = summary.explore_capacity as f64;
    let pool = vec![
        ("exploration pool".to_string(), metrics.iter().map(|m| (m.step as f64, m.explore_size as f64)).collect()),
        ("explore-sourced items".to_string(), metrics.iter().map(|m| (m.step as f64, m.explore_sourced as f64)).collect()),
    ];
    draw(line_chart(&out.join(PLOTS[2]), "pool sizes", cap.max(1.0), &pool, x_max), PLOTS[2])?;

    let skips = vec![("skip rate".to_string(), metrics.iter().map(|m| (m.step as f64, skip_rate(m))).collect())];
    draw(line_chart(&out.join(PLOTS[3]), "skipped items per batch", 1.0, &skips, x_max), PLOTS[3])?;

    let table = matrix_text(&summary);
    fs::write(out.join("direction_matrix.txt"), &table)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    print!("{table}");
    println!("report written to {}", out.display());
    Ok(())
}
