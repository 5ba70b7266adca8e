//! Cross-product experiment sweeps: mismatch table and noise ablation, with
//! text-table and SVG learning-curve emission.

use std::fs;
use std::path::Path;

use super::imitate::run_imitation;
use super::svg::{write_band_plot, Series};
use super::ExperimentConfig;
use crate::ail_engine::ObsMode;
use crate::error::{Error, Result};
use crate::toy_world::DomainPreset;

#[derive(Debug, Clone, serde::Serialize)]
pub struct ResultRow {
    /// Preset name, or "sigma=x" for ablation rows.
    pub label: String,
    pub obs_mode: String,
    pub mean_final: f64,
    pub std_final: f64,
    pub steps: u32,
    pub seeds_ok: usize,
    pub seeds_failed: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // Population std across seeds.
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn obs_name(mode: ObsMode) -> &'static str {
    match mode {
        ObsMode::Events => "events",
        ObsMode::RawRgb => "raw-rgb",
    }
}

const MODE_COLORS: [(&str, &str); 2] = [("events", "#1f77b4"), ("raw-rgb", "#d62728")];

/// Per-seed learning curves for one sweep cell.
struct CellRuns {
    finals: Vec<f64>,
    /// eval curves per seed: (step, return).
    curves: Vec<Vec<(u32, f64)>>,
    failures: usize,
}

fn run_cell(cfg: &ExperimentConfig, demos_dir: &Path, out_dir: &Path, tag: &str) -> CellRuns {
    let mut cell = CellRuns {
        finals: Vec::new(),
        curves: Vec::new(),
        failures: 0,
    };
    for &seed in &cfg.seeds {
        let run_dir = out_dir.join(format!("{tag}_seed{seed}"));
        match run_imitation(cfg, seed, demos_dir, &run_dir) {
            Ok(outcome) => {
                cell.finals.push(outcome.final_return);
                cell.curves.push(outcome.evals);
            }
            Err(e) => {
                eprintln!("run {tag} seed {seed} failed: {e}");
                cell.failures += 1;
            }
        }
    }
    cell
}

/// Mean±std band across seeds at each evaluation step.
fn band(curves: &[Vec<(u32, f64)>]) -> Vec<(f64, f64, f64, f64)> {
    let Some(first) = curves.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|i| {
            let vals: Vec<f64> = curves
                .iter()
                .filter_map(|c| c.get(i).map(|(_, r)| *r))
                .collect();
            let (m, s) = mean_std(&vals);
            (first[i].0 as f64, m, m - s, m + s)
        })
        .collect()
}

/// Run presets × observation modes × seeds, aggregate final returns, and
/// emit `table.txt`, `results.json`, and one learning-curve SVG per preset.
/// Individual run failures are recorded and the sweep continues.
pub fn run_table(
    cfg: &ExperimentConfig,
    presets: &[DomainPreset],
    modes: &[ObsMode],
    demos_dir: &Path,
    out_dir: &Path,
) -> Result<Vec<ResultRow>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e.to_string()))?;
    let mut rows = Vec::new();
    for &preset in presets {
        let mut series = Vec::new();
        for &mode in modes {
            let cell_cfg = ExperimentConfig {
                target_preset: preset,
                obs_mode: mode,
                ..cfg.clone()
            };
            let tag = format!("{}_{}", preset.name(), obs_name(mode));
            let cell = run_cell(&cell_cfg, demos_dir, out_dir, &tag);
            let (mean, std) = if cell.finals.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_std(&cell.finals)
            };
            rows.push(ResultRow {
                label: preset.name().to_string(),
                obs_mode: obs_name(mode).to_string(),
                mean_final: mean,
                std_final: std,
                steps: cfg.total_steps,
                seeds_ok: cell.finals.len(),
                seeds_failed: cell.failures,
            });
            let color = MODE_COLORS
                .iter()
                .find(|(n, _)| *n == obs_name(mode))
                .map(|(_, c)| *c)
                .unwrap_or("#2ca02c");
            series.push(Series {
                name: obs_name(mode).to_string(),
                color: color.to_string(),
                points: band(&cell.curves),
            });
        }
        series.retain(|s| !s.points.is_empty());
        if !series.is_empty() {
            write_band_plot(
                &out_dir.join(format!("curves_{}.svg", preset.name())),
                &format!("preset: {}", preset.name()),
                "environment steps",
                "evaluation return",
                &series,
            )?;
        }
    }
    let text = format_table(&rows);
    fs::write(out_dir.join("table.txt"), &text)
        .map_err(|e| Error::file(out_dir, e.to_string()))?;
    println!("{text}");
    let json = serde_json::to_string_pretty(&rows)?;
    fs::write(out_dir.join("results.json"), json)
        .map_err(|e| Error::file(out_dir, e.to_string()))?;
    Ok(rows)
}

/// Re-run the events-mode experiment across event-noise sigmas. Rows follow
/// the input sigma order.
pub fn ablate_noise(
    cfg: &ExperimentConfig,
    sigmas: &[f64],
    demos_dir: &Path,
    out_dir: &Path,
) -> Result<Vec<ResultRow>> {
    if cfg.obs_mode != ObsMode::Events {
        return Err(Error::validation("noise ablation requires events mode"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e.to_string()))?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];
    for (i, &sigma) in sigmas.iter().enumerate() {
        let mut cell_cfg = cfg.clone();
        cell_cfg.codec.noise_sigma = sigma;
        let tag = format!("sigma{sigma}");
        let cell = run_cell(&cell_cfg, demos_dir, out_dir, &tag);
        let (mean, std) = if cell.finals.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            mean_std(&cell.finals)
        };
        rows.push(ResultRow {
            label: format!("sigma={sigma}"),
            obs_mode: "events".to_string(),
            mean_final: mean,
            std_final: std,
            steps: cfg.total_steps,
            seeds_ok: cell.finals.len(),
            seeds_failed: cell.failures,
        });
        let points = band(&cell.curves);
        if !points.is_empty() {
            series.push(Series {
                name: format!("sigma={sigma}"),
                color: palette[i % palette.len()].to_string(),
                points,
            });
        }
    }
    if !series.is_empty() {
        write_band_plot(
            &out_dir.join("curves_noise.svg"),
            "event-noise ablation",
            "environment steps",
            "evaluation return",
            &series,
        )?;
    }
    let text = format_table(&rows);
    fs::write(out_dir.join("table.txt"), &text)
        .map_err(|e| Error::file(out_dir, e.to_string()))?;
    println!("{text}");
    Ok(rows)
}

/// Aligned text table. The best observation mode per label is marked `*`.
pub fn format_table(rows: &[ResultRow]) -> String {
    // Best mode per label by mean final return.
    let mut best: Vec<(String, f64)> = Vec::new();
    for r in rows {
        match best.iter_mut().find(|(l, _)| *l == r.label) {
            Some((_, m)) => {
                if r.mean_final > *m {
                    *m = r.mean_final;
                }
            }
            None => best.push((r.label.clone(), r.mean_final)),
        }
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:<9} {:>12} {:>10} {:>8} {:>6}\n",
        "preset", "obs", "mean_final", "std", "steps", "seeds"
    ));
    for r in rows {
        let is_best = best
            .iter()
            .any(|(l, m)| *l == r.label && r.mean_final == *m && r.mean_final.is_finite());
        out.push_str(&format!(
            "{:<12} {:<9} {:>11.3}{} {:>10.3} {:>8} {:>4}/{}\n",
            r.label,
            r.obs_mode,
            r.mean_final,
            if is_best { "*" } else { " " },
            r.std_final,
            r.steps,
            r.seeds_ok,
            r.seeds_ok + r.seeds_failed,
        ));
    }
    out
}
