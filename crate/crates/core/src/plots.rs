//! SVG figures with CSV mirrors of every plotted number.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::analysis::{EffectiveModel, GridPoint, PowerLawFit};
use crate::error::{Error, Result};
use crate::experiment::{ResultRow, RESULTS_HEADER};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Plot(format!("{e:?}"))
}

fn distinct_c(rows: &[ResultRow]) -> Vec<f64> {
    let mut cs: Vec<f64> = rows.iter().map(|r| r.c).collect();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    cs
}

/// Log-log `p_L` vs `p`, one series per c, with `A(Bp)^ξ` overlays.
pub fn plot_pl_vs_p(path: &Path, rows: &[ResultRow], fit: Option<&PowerLawFit>, model: Option<&EffectiveModel>) -> Result<()> {
    let pos: Vec<&ResultRow> = rows.iter().filter(|r| r.p > 0.0 && r.p_l > 0.0).collect();
    if pos.is_empty() {
        return Err(Error::Plot("no points with p, p_L > 0".into()));
    }
    let (pmin, pmax) = pos.iter().fold((f64::MAX, f64::MIN), |(a, b), r| (a.min(r.p), b.max(r.p)));
    let (lmin, lmax) = pos.iter().fold((f64::MAX, f64::MIN), |(a, b), r| (a.min(r.p_l), b.max(r.p_l)));
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("logical error probability", ("sans-serif", 24))
        .margin(20)
        .x_label_area_size(50)
        .y_label_area_size(70)
        .build_cartesian_2d((pmin / 1.5..pmax * 1.5).log_scale(), (lmin / 3.0..(lmax * 3.0).min(1.0)).log_scale())
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("p").y_desc("p_L").draw().map_err(plot_err)?;
    for (i, c) in distinct_c(rows).into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series: Vec<(f64, f64)> = pos.iter().filter(|r| r.c == c).map(|r| (r.p, r.p_l)).collect();
        chart
            .draw_series(series.iter().map(|&pt| Circle::new(pt, 4, color.filled())))
            .map_err(plot_err)?
            .label(format!("c = {c}"))
            .legend(move |(x, y)| Circle::new((x + 10, y), 4, color.filled()));
        if let Some(f) = fit {
            let b = model.and_then(|m| m.b_values.iter().find(|v| v.0 == c).map(|v| v.1)).unwrap_or(if c == 0.0 { 1.0 } else { f64::NAN });
            if b.is_finite() {
                let line = (0..=50).map(|k| {
                    let p = (f.fit_range.0.ln() + (f.fit_range.1.ln() - f.fit_range.0.ln()) * k as f64 / 50.0).exp();
                    (p, f.a * (b * p).powf(f.xi))
                });
                chart.draw_series(LineSeries::new(line, color.stroke_width(2))).map_err(plot_err)?;
            }
        }
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Fitted `B(c)` with the `1 + αc²` curve.
pub fn plot_b_vs_c(path: &Path, model: &EffectiveModel) -> Result<()> {
    let cmax = model.b_values.iter().map(|v| v.0).fold(0.0, f64::max).max(1e-9);
    let bmax = model.b_values.iter().map(|v| v.1).fold(model.b(cmax), f64::max);
    let bmin = model.b_values.iter().map(|v| v.1).fold(1.0, f64::min);
    let root = SVGBackend::new(path, (700, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("B(c), alpha = {:.4}", model.alpha), ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..cmax * 1.05, (bmin - 0.05 * bmax)..bmax * 1.05)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("c").y_desc("B").draw().map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new((0..=100).map(|k| (cmax * k as f64 / 100.0, model.b(cmax * k as f64 / 100.0))), PALETTE[0].stroke_width(2)))
        .map_err(plot_err)?;
    chart.draw_series(model.b_values.iter().map(|&(c, b)| Circle::new((c, b), 5, PALETTE[3].filled()))).map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// `log10(t_L/t_c)` over `(t_g/t_c, c)`; cells with `t_L < t_c` are hatched
/// grey and the break-even curve is drawn in black.
pub fn plot_lifetime_heatmap(path: &Path, grid: &[GridPoint], contour: &[(f64, f64)]) -> Result<()> {
    let mut xs: Vec<f64> = grid.iter().map(|g| g.t_g_over_t_c).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut cs: Vec<f64> = grid.iter().map(|g| g.c).collect();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    if xs.len() < 2 || cs.len() < 2 {
        return Err(Error::Plot("lifetime grid needs at least 2 × 2 points".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let dx = (lx[lx.len() - 1] - lx[0]) / (lx.len() - 1) as f64;
    let dc = (cs[cs.len() - 1] - cs[0]) / (cs.len() - 1) as f64;
    let vmax = grid.iter().filter(|g| g.ratio >= 1.0).map(|g| g.ratio.log10()).fold(0.0, f64::max).max(1e-9);

    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("log10(t_L / t_c)", ("sans-serif", 22))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(55)
        .build_cartesian_2d((lx[0] - dx / 2.0)..(lx[lx.len() - 1] + dx / 2.0), (cs[0] - dc / 2.0)..(cs[cs.len() - 1] + dc / 2.0))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("log10(t_g / t_c)")
        .y_desc("c")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(grid.iter().map(|g| {
            let x = g.t_g_over_t_c.log10();
            let corners = [(x - dx / 2.0, g.c - dc / 2.0), (x + dx / 2.0, g.c + dc / 2.0)];
            let style = if g.ratio < 1.0 {
                RGBColor(190, 190, 190).filled()
            } else {
                let t = (g.ratio.log10() / vmax).clamp(0.0, 1.0);
                HSLColor(0.66 * (1.0 - t), 0.75, 0.5).filled()
            };
            Rectangle::new(corners, style)
        }))
        .map_err(plot_err)?;
    // hatch the region below break-even
    chart
        .draw_series(grid.iter().filter(|g| g.ratio < 1.0).map(|g| {
            let x = g.t_g_over_t_c.log10();
            PathElement::new(vec![(x - dx / 2.0, g.c - dc / 2.0), (x + dx / 2.0, g.c + dc / 2.0)], RGBColor(120, 120, 120))
        }))
        .map_err(plot_err)?;
    if !contour.is_empty() {
        chart
            .draw_series(LineSeries::new(contour.iter().map(|&(x, c)| (x.log10(), c)), BLACK.stroke_width(3)))
            .map_err(plot_err)?
            .label("t_L = t_c")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.stroke_width(3)));
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw().map_err(plot_err)?;
    }
    root.present().map_err(plot_err)
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything `emit_outputs` can draw; absent parts are skipped.
#[derive(Debug, Clone, Default)]
pub struct Outputs<'a> {
    pub results: &'a [ResultRow],
    pub fit: Option<&'a PowerLawFit>,
    pub model: Option<&'a EffectiveModel>,
    pub lifetime: &'a [GridPoint],
    /// Break-even `(t_g/t_c, c)` pairs.
    pub contour: &'a [(f64, f64)],
}

/// Write figures and their CSV mirrors into `dir`; returns the paths.
pub fn emit_outputs(dir: &Path, out: &Outputs) -> Result<Vec<PathBuf>> {
    if out.results.is_empty() && out.lifetime.is_empty() && out.model.is_none() {
        return Err(Error::Plot("nothing to emit".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if !out.results.is_empty() {
        let csv = dir.join("pl_vs_p.csv");
        write_csv(
            &csv,
            RESULTS_HEADER,
            out.results.iter().map(|r| {
                [
                    r.d.to_string(),
                    r.p.to_string(),
                    r.c.to_string(),
                    r.rounds.to_string(),
                    r.shots.to_string(),
                    r.p_l.to_string(),
                    r.stderr.to_string(),
                    format!("{:.3}", r.wall_time_s),
                    r.master_seed.to_string(),
                ]
            }),
        )?;
        let svg = dir.join("pl_vs_p.svg");
        plot_pl_vs_p(&svg, out.results, out.fit, out.model)?;
        written.extend([csv, svg]);
    }
    if let Some(m) = out.model {
        let csv = dir.join("b_vs_c.csv");
        write_csv(&csv, ["c", "B", "model_B"], m.b_values.iter().map(|&(c, b)| [c.to_string(), b.to_string(), m.b(c).to_string()]))?;
        let svg = dir.join("b_vs_c.svg");
        plot_b_vs_c(&svg, m)?;
        written.extend([csv, svg]);
    }
    if !out.lifetime.is_empty() {
        let csv = dir.join("lifetime_grid.csv");
        write_csv(
            &csv,
            ["t_g_over_t_c", "c", "t_L_over_t_c", "saturated"],
            out.lifetime.iter().map(|g| [g.t_g_over_t_c.to_string(), g.c.to_string(), g.ratio.to_string(), g.saturated.to_string()]),
        )?;
        let contour = dir.join("break_even.csv");
        write_csv(&contour, ["c", "t_g_over_t_c"], out.contour.iter().map(|&(x, c)| [c.to_string(), x.to_string()]))?;
        let svg = dir.join("lifetime.svg");
        plot_lifetime_heatmap(&svg, out.lifetime, out.contour)?;
        written.extend([csv, contour, svg]);
    }
    Ok(written)
}
