//! Result emission: per-series CSV files, a plain-text certificate report,
//! and optional SVG line plots.
//!
//! CSVs are RFC-4180 style with `.` decimals; floats are written with
//! Rust's shortest round-trip formatting, so identical results produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{self};
use crate::model::PlantModel;

use super::config::{ControllerKind, SimConfig};
use super::sim::{AveragedSeries, MonteCarloResults};
use super::HarnessError;

/// Steady-state window used in the summary report (trailing steps).
pub const STEADY_STATE_WINDOW: usize = 100;

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sanitize_number(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

/// `<controller>_wm<value>.csv`
pub fn csv_file_name(controller: ControllerKind, w_m: f64) -> String {
    format!("{}_wm{}.csv", controller.label(), sanitize_number(w_m))
}

/// Render one series as CSV text (header always present).
pub fn series_to_csv(series: &AveragedSeries) -> String {
    let mut out = String::from("k,mean_state_norm,mean_packet_l0\n");
    for (k, (norm, l0)) in series
        .mean_state_norm
        .iter()
        .zip(&series.mean_packet_l0)
        .enumerate()
    {
        let _ = writeln!(out, "{k},{norm},{l0}");
    }
    out
}

/// Parse a series CSV back into (k, mean_state_norm, mean_packet_l0) rows.
pub fn parse_series_csv(text: &str) -> Result<Vec<(usize, f64, f64)>, HarnessError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "k,mean_state_norm,mean_packet_l0" {
                return Err(HarnessError::Config(format!(
                    "unexpected CSV header {line:?}"
                )));
            }
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = || HarnessError::Config(format!("bad CSV row {line:?}"));
        let k = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(parse_err)?;
        let norm = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(parse_err)?;
        let l0 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(parse_err)?;
        if fields.next().is_some() {
            return Err(parse_err());
        }
        rows.push((k, norm, l0));
    }
    Ok(rows)
}

fn certificate_section(
    results: &MonteCarloResults,
    config: &SimConfig,
    plant: &PlantModel,
    w_m: f64,
) -> Result<String, HarnessError> {
    let mut out = String::new();
    let effective = plant.effective_l2_bound();
    if let Some(design) = &results.l0_design {
        let cert = analysis::l0_certificate(design, plant, effective)?;
        let _ = writeln!(
            out,
            "[certificate l0_omp w_m={w_m} effective_l2_bound={effective}]"
        );
        let _ = writeln!(out, "{cert}");
    }
    if let Some(design) = &results.l1l2_design {
        let cert = analysis::l1l2_certificate(design, plant, effective)?;
        let _ = writeln!(
            out,
            "[certificate l1l2_fista w_m={w_m} effective_l2_bound={effective}]"
        );
        let _ = writeln!(out, "zeta = {}", design.zeta());
        let _ = writeln!(out, "{cert}");
    }
    let _ = config;
    Ok(out)
}

/// Build the plain-text summary report: configuration echo, per-series
/// steady-state statistics over the labeled trailing window, and the
/// stability certificates evaluated at each disturbance amplitude.
pub fn render_report(
    results: &MonteCarloResults,
    config: &SimConfig,
) -> Result<String, HarnessError> {
    let window = STEADY_STATE_WINDOW.min(config.horizon);
    let mut out = String::new();
    let _ = writeln!(out, "sparse-ppc simulation report");
    let _ = writeln!(out, "runs = {}", config.runs);
    let _ = writeln!(out, "horizon = {}", config.horizon);
    let _ = writeln!(out, "prediction_horizon = {}", config.prediction_horizon);
    let _ = writeln!(out, "master_seed = {}", config.master_seed);
    let _ = writeln!(out, "disturbance_mode = {:?}", config.disturbance_mode);
    let _ = writeln!(
        out,
        "steady_state_window = trailing {window} steps (steps {}..{})",
        config.horizon - window,
        config.horizon - 1
    );
    let _ = writeln!(out);

    for series in &results.series {
        let _ = writeln!(
            out,
            "[series controller={} w_m={}]",
            series.controller.label(),
            series.w_m
        );
        let _ = writeln!(out, "completed_runs = {}", series.completed_runs);
        let _ = writeln!(out, "aborted_runs = {}", series.aborted.len());
        let _ = writeln!(
            out,
            "steady_state_mean_norm = {}",
            series.steady_state_norm(window)
        );
        let _ = writeln!(
            out,
            "mean_packet_l0 = {}",
            series.mean_packet_l0_overall()
        );
        let _ = writeln!(out, "max_state_norm = {}", series.max_state_norm);
        let _ = writeln!(out);
    }

    for &w_m in &config.w_m {
        let plant = config.build_plant(w_m)?;
        out.push_str(&certificate_section(results, config, &plant, w_m)?);
        let _ = writeln!(out);
    }
    Ok(out)
}

const SVG_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal line plot: one polyline per series, linear axes, legend.
fn render_svg(title: &str, ylabel: &str, series: &[(String, &[f64])]) -> String {
    let width = 860.0;
    let height = 520.0;
    let ml = 70.0;
    let mr = 170.0;
    let mt = 50.0;
    let mb = 55.0;
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let max_len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(2);
    let mut ymax = f64::MIN_POSITIVE;
    for (_, values) in series {
        for v in *values {
            if v.is_finite() {
                ymax = ymax.max(*v);
            }
        }
    }
    ymax *= 1.05;

    let x_of = |k: usize| ml + pw * k as f64 / (max_len - 1) as f64;
    let y_of = |v: f64| mt + ph * (1.0 - (v / ymax).clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"17\" \
         text-anchor=\"middle\">{title}</text>",
        ml + pw / 2.0
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    // Tick labels.
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let v = ymax * frac;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{v:.3}</text>",
            ml - 6.0,
            y + 4.0
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>",
            ml - 4.0
        );
    }
    for frac in [0.0, 0.5, 1.0] {
        let k = ((max_len - 1) as f64 * frac).round() as usize;
        let x = x_of(k);
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{k}</text>",
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">k</text>",
        ml + pw / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{ylabel}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    for (idx, (label, values)) in series.iter().enumerate() {
        let color = SVG_COLORS[idx % SVG_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(k, v)| format!("{:.2},{:.2}", x_of(k), y_of(*v)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.3\" points=\"{}\"/>",
            points.join(" ")
        );
        let ly = mt + 14.0 + idx as f64 * 18.0;
        let lx = ml + pw + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
            lx + 28.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write every output file into `config.out_dir`; returns the paths written.
pub fn emit_outputs(
    results: &MonteCarloResults,
    config: &SimConfig,
) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();

    for series in &results.series {
        let path = dir.join(csv_file_name(series.controller, series.w_m));
        write_file(&path, &series_to_csv(series))?;
        written.push(path);
    }

    let report_path = dir.join("report.txt");
    write_file(&report_path, &render_report(results, config)?)?;
    written.push(report_path);

    if config.emit_plots {
        for kind in config.controller.kinds() {
            let norm_series: Vec<(String, &[f64])> = results
                .series
                .iter()
                .filter(|s| s.controller == kind)
                .map(|s| (format!("W_m = {}", s.w_m), s.mean_state_norm.as_slice()))
                .collect();
            if norm_series.is_empty() {
                continue;
            }
            let path = dir.join(format!("state_norm_{}.svg", kind.label()));
            write_file(
                &path,
                &render_svg(
                    &format!("Average state norm per step ({})", kind.label()),
                    "mean ||x(k)||",
                    &norm_series,
                ),
            )?;
            written.push(path);

            let l0_series: Vec<(String, &[f64])> = results
                .series
                .iter()
                .filter(|s| s.controller == kind)
                .map(|s| (format!("W_m = {}", s.w_m), s.mean_packet_l0.as_slice()))
                .collect();
            let path = dir.join(format!("packet_l0_{}.svg", kind.label()));
            write_file(
                &path,
                &render_svg(
                    &format!("Average packet l0 norm per step ({})", kind.label()),
                    "mean ||U(k)||_0",
                    &l0_series,
                ),
            )?;
            written.push(path);
        }
    }

    Ok(written)
}
