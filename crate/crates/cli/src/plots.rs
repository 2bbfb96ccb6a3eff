//! SVG figures for a simulation run.

use std::path::Path;

use l1rg_core::l1rg::L1RGController;
use l1rg_core::simkit::SimTrace;
use plotters::prelude::*;

use crate::error::CliError;

const MAX_POINTS: usize = 3000;
const PANEL_H: u32 = 260;
const WIDTH: u32 = 900;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    color: RGBColor,
}

struct Panel {
    title: String,
    series: Vec<Series>,
    /// Horizontal guide lines (constraints or bounds).
    guides: Vec<f64>,
}

fn thin(t: &[f64], y: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let step = t.len().div_ceil(MAX_POINTS).max(1);
    let mut pts: Vec<(f64, f64)> = (0..t.len()).step_by(step).map(|k| (t[k], y(k))).collect();
    if let Some(&last) = t.last() {
        if pts.last().map(|p| p.0) != Some(last) {
            pts.push((last, y(t.len() - 1)));
        }
    }
    pts
}

fn series(label: impl Into<String>, tr: &SimTrace, color: RGBColor, y: impl Fn(usize) -> f64) -> Series {
    Series { label: label.into(), points: thin(&tr.t, y), color }
}

fn draw(path: &Path, panels: &[Panel]) -> Result<(), CliError> {
    let err = |e: String| CliError::Other(format!("{}: {e}", path.display()));
    let root = SVGBackend::new(path, (WIDTH, PANEL_H * panels.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let areas = root.split_evenly((panels.len(), 1));
    for (area, p) in areas.iter().zip(panels) {
        let pts = p.series.iter().flat_map(|s| s.points.iter());
        let (mut t1, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for &(t, y) in pts {
            if y.is_finite() {
                t1 = t1.max(t);
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        for g in &p.guides {
            lo = lo.min(*g);
            hi = hi.max(*g);
        }
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-9);
        let mut chart = ChartBuilder::on(area)
            .caption(&p.title, ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(28)
            .y_label_area_size(60)
            .build_cartesian_2d(0.0..t1.max(1e-9), (lo - pad)..(hi + pad))
            .map_err(|e| err(e.to_string()))?;
        chart.configure_mesh().x_desc("t [s]").draw().map_err(|e| err(e.to_string()))?;
        for g in &p.guides {
            chart
                .draw_series(DashedLineSeries::new([(0.0, *g), (t1, *g)], 6, 4, GREEN.stroke_width(1)))
                .map_err(|e| err(e.to_string()))?;
        }
        for s in &p.series {
            let c = s.color;
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), c.stroke_width(1)))
                .map_err(|e| err(e.to_string()))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], c));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| err(e.to_string()))?;
    }
    root.present().map_err(|e| err(e.to_string()))
}

const L1RG: RGBColor = RGBColor(200, 30, 30);
const BASE: RGBColor = RGBColor(40, 80, 200);
const REF: RGBColor = RGBColor(0, 0, 0);

fn outputs(c: &L1RGController, tr: &SimTrace, k: usize, j: usize) -> f64 {
    c.spec.c.row(j).iter().zip(tr.x.row(k)).map(|(a, b)| a * b).sum()
}

/// Writes `tracking`, `constrained`, `uncertainty`, `adaptive_inputs` and
/// `state_error` SVGs into `dir`.
pub fn write_all(
    dir: &Path,
    c: &L1RGController,
    l1rg: &SimTrace,
    base: &SimTrace,
    nominal: &SimTrace,
) -> Result<(), CliError> {
    let (n, m) = (c.n(), c.m());
    let cy = c.spec.c.rows();

    let tracking: Vec<Panel> = (0..cy.min(m))
        .map(|j| Panel {
            title: format!("output y{}", j + 1),
            series: vec![
                series("r", l1rg, REF, |k| l1rg.r.row(k)[j]),
                series("L1-RG", l1rg, L1RG, |k| outputs(c, l1rg, k, j)),
                series("plain RG", base, BASE, |k| outputs(c, base, k, j)),
            ],
            guides: vec![],
        })
        .collect();
    draw(&dir.join("tracking.svg"), &tracking)?;

    // only the variables whose constraints can bind
    let mut constrained = Vec::new();
    let span = |lo: f64, hi: f64| hi - lo < 1e2;
    for i in 0..n {
        let (lo, hi) = (c.spec.x.lower[i], c.spec.x.upper[i]);
        if span(lo, hi) {
            constrained.push(Panel {
                title: format!("state x{}", i + 1),
                series: vec![
                    series("L1-RG", l1rg, L1RG, |k| l1rg.x.row(k)[i]),
                    series("plain RG", base, BASE, |k| base.x.row(k)[i]),
                ],
                guides: vec![lo, hi],
            });
        }
    }
    for j in 0..m {
        constrained.push(Panel {
            title: format!("input u{}", j + 1),
            series: vec![
                series("L1-RG", l1rg, L1RG, |k| l1rg.u.row(k)[j]),
                series("plain RG", base, BASE, |k| base.u.row(k)[j]),
            ],
            guides: vec![c.spec.u.lower[j], c.spec.u.upper[j]],
        });
    }
    draw(&dir.join("constrained.svg"), &constrained)?;

    let unc: Vec<Panel> = (0..m)
        .map(|j| Panel {
            title: format!("uncertainty channel {}", j + 1),
            series: vec![
                series("f", l1rg, REF, |k| l1rg.f.row(k)[j]),
                series("estimate", l1rg, L1RG, |k| l1rg.sigma1.row(k)[j]),
            ],
            guides: vec![],
        })
        .collect();
    draw(&dir.join("uncertainty.svg"), &unc)?;

    let b = &c.l1.bounds;
    let ua: Vec<Panel> = (0..m)
        .map(|j| Panel {
            title: format!("adaptive input ua{}", j + 1),
            series: vec![series("ua", l1rg, L1RG, |k| l1rg.ua.row(k)[j])],
            guides: vec![-b.rho_ua_j[j], b.rho_ua_j[j]],
        })
        .collect();
    draw(&dir.join("adaptive_inputs.svg"), &ua)?;

    let err: Vec<Panel> = (0..n)
        .map(|i| Panel {
            title: format!("x{0} - xn{0}", i + 1),
            series: vec![series("error", l1rg, L1RG, |k| l1rg.x.row(k)[i] - nominal.x.row(k)[i])],
            guides: vec![-b.tilde_rho_i[i], b.tilde_rho_i[i]],
        })
        .collect();
    draw(&dir.join("state_error.svg"), &err)
}
