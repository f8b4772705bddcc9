//! Static SVG figures for the experiment: a log-log scatter of iteration
//! totals with the fitted curve, stacked per-regime bars, and displacement
//! histograms per regime.

use std::fmt::Write;

use newton_atlas_core::experiment::{ExperimentReport, ScalingFit};
use newton_atlas_core::orbit::{DisplacementStats, HIST_BINS, HIST_LOG10_LO, HIST_LOG10_WIDTH};
use newton_atlas_core::Regime;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

const REGIME_COLORS: [(&str, &str); 4] = [
    ("far", "#4e79a7"),
    ("intermediate", "#f28e2b"),
    ("near", "#59a14f"),
    ("outside", "#b07aa1"),
];

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut c = Canvas { body: String::new(), width, height };
        c.text(width / 2.0, 24.0, title, "middle", 16.0);
        c
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" fill-opacity="{opacity:.2}"/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let escaped = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="{size}">{escaped}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Linear map from `[lo, hi]` onto `[a, b]`.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi == lo {
        return (a + b) / 2.0;
    }
    a + (v - lo) / (hi - lo) * (b - a)
}

fn fitted_total(fit: &ScalingFit, d: f64) -> f64 {
    let ln = d.ln();
    (fit.log_c + fit.beta * ln).exp() * ln.powi(4)
}

/// Every trial total as a faint dot, per-degree medians as solid dots, and
/// the fitted `c d^beta ln^4 d` curve.
pub fn scaling_svg(report: &ExperimentReport) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT, "chosen-orbit iterations vs degree");
    let totals: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.total_iterations_chosen > 0)
        .map(|r| (r.degree as f64, r.total_iterations_chosen as f64))
        .collect();
    if totals.is_empty() {
        c.text(WIDTH / 2.0, HEIGHT / 2.0, "no data", "middle", 14.0);
        return c.finish();
    }
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &totals {
        x_lo = x_lo.min(x.log10());
        x_hi = x_hi.max(x.log10());
        y_lo = y_lo.min(y.log10());
        y_hi = y_hi.max(y.log10());
    }
    let (x_lo, x_hi) = (x_lo.floor(), x_hi.ceil().max(x_lo.floor() + 1.0));
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    let px = |x: f64| scale(x.log10(), x_lo, x_hi, MARGIN, WIDTH - MARGIN);
    let py = |y: f64| scale(y.log10(), y_lo, y_hi, HEIGHT - MARGIN, MARGIN);

    c.line(MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, "black");
    c.line(MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN, "black");
    for e in x_lo as i32..=x_hi as i32 {
        let x = px(10f64.powi(e));
        c.line(x, HEIGHT - MARGIN, x, HEIGHT - MARGIN + 5.0, "black");
        c.text(x, HEIGHT - MARGIN + 20.0, &format!("1e{e}"), "middle", 11.0);
    }
    for e in y_lo as i32..=y_hi as i32 {
        let y = py(10f64.powi(e));
        c.line(MARGIN - 5.0, y, MARGIN, y, "black");
        c.text(MARGIN - 8.0, y + 4.0, &format!("1e{e}"), "end", 11.0);
    }
    c.text(WIDTH / 2.0, HEIGHT - 15.0, "degree d", "middle", 12.0);
    c.text(15.0, MARGIN - 15.0, "total iterations", "start", 12.0);

    for &(x, y) in &totals {
        c.circle(px(x), py(y), 2.5, "#4e79a7", 0.35);
    }
    for s in report.per_degree.iter().filter(|s| s.median_total > 0.0) {
        c.circle(px(s.degree as f64), py(s.median_total), 4.5, "#e15759", 1.0);
    }
    if let Some(fit) = &report.fit {
        let d_lo = 10f64.powf(x_lo).max(2.0);
        let d_hi = 10f64.powf(x_hi);
        let pts: Vec<(f64, f64)> = (0..=100)
            .map(|i| d_lo * (d_hi / d_lo).powf(i as f64 / 100.0))
            .map(|d| (d, fitted_total(fit, d)))
            .filter(|&(_, t)| t.log10() >= y_lo && t.log10() <= y_hi)
            .map(|(d, t)| (px(d), py(t)))
            .collect();
        if pts.len() > 1 {
            c.polyline(&pts, "#e15759");
        }
        c.text(
            WIDTH - MARGIN,
            MARGIN,
            &format!("beta = {:.3} (R^2 = {:.3})", fit.beta, fit.r_squared),
            "end",
            12.0,
        );
    }
    c.finish()
}

/// One bar per degree, stacked by regime, heights from per-regime means.
pub fn regimes_svg(report: &ExperimentReport) -> String {
    let mut c = Canvas::new(WIDTH, HEIGHT, "mean chosen-orbit steps by regime");
    let mut degrees: Vec<usize> = report.rows.iter().map(|r| r.degree).collect();
    degrees.dedup();
    if degrees.is_empty() {
        c.text(WIDTH / 2.0, HEIGHT / 2.0, "no data", "middle", 14.0);
        return c.finish();
    }
    let stacks: Vec<(usize, [f64; 4])> = degrees
        .iter()
        .map(|&d| {
            let rows: Vec<_> = report.rows.iter().filter(|r| r.degree == d).collect();
            let n = rows.len() as f64;
            let mean = |f: fn(&newton_atlas_core::experiment::ExperimentRow) -> u64| rows.iter().map(|r| f(r) as f64).sum::<f64>() / n;
            (d, [mean(|r| r.far_steps), mean(|r| r.intermediate_steps), mean(|r| r.near_steps), mean(|r| r.outside_steps)])
        })
        .collect();
    let top = stacks.iter().map(|(_, s)| s.iter().sum::<f64>()).fold(0.0, f64::max).max(1.0);
    let slot = (WIDTH - 2.0 * MARGIN) / stacks.len() as f64;
    c.line(MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, "black");
    c.line(MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN, "black");
    c.text(MARGIN - 8.0, MARGIN + 4.0, &format!("{top:.0}"), "end", 11.0);
    c.text(MARGIN - 8.0, HEIGHT - MARGIN + 4.0, "0", "end", 11.0);
    for (i, (d, parts)) in stacks.iter().enumerate() {
        let x = MARGIN + slot * (i as f64 + 0.2);
        let mut base = HEIGHT - MARGIN;
        for (value, (_, color)) in parts.iter().zip(REGIME_COLORS) {
            let h = value / top * (HEIGHT - 2.0 * MARGIN);
            c.rect(x, base - h, slot * 0.6, h, color);
            base -= h;
        }
        c.text(x + slot * 0.3, HEIGHT - MARGIN + 18.0, &format!("d={d}"), "middle", 11.0);
    }
    for (i, (name, color)) in REGIME_COLORS.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        c.rect(MARGIN + 12.0, y - 9.0, 10.0, 10.0, color);
        c.text(MARGIN + 28.0, y, name, "start", 11.0);
    }
    c.finish()
}

/// Four panels of log10-displacement counts, stats merged over degrees.
pub fn displacement_svg(stats: &[DisplacementStats]) -> String {
    let width = WIDTH;
    let height = 2.0 * HEIGHT;
    let mut c = Canvas::new(width, height, "step displacement histograms (log10)");
    let mut totals = [[0u64; HIST_BINS]; 4];
    for s in stats {
        for (t, h) in totals.iter_mut().zip(&s.histograms) {
            for (a, b) in t.iter_mut().zip(h) {
                *a += b;
            }
        }
    }
    let panel_h = (height - 60.0) / 4.0;
    for (slot, regime) in Regime::ALL.iter().enumerate() {
        let top = 50.0 + panel_h * slot as f64;
        let bottom = top + panel_h - 40.0;
        let counts = &totals[slot];
        let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar = (width - 2.0 * MARGIN) / HIST_BINS as f64;
        c.text(MARGIN, top - 4.0, &format!("{} ({} steps)", regime.name(), counts.iter().sum::<u64>()), "start", 12.0);
        c.line(MARGIN, bottom, width - MARGIN, bottom, "black");
        for (i, &n) in counts.iter().enumerate() {
            if n > 0 {
                let h = n as f64 / peak * (bottom - top - 8.0);
                c.rect(MARGIN + bar * i as f64, bottom - h, bar * 0.9, h, REGIME_COLORS[slot].1);
            }
        }
        for i in (0..=HIST_BINS).step_by(4) {
            let x = MARGIN + bar * i as f64;
            let label = HIST_LOG10_LO + HIST_LOG10_WIDTH * i as f64;
            c.text(x, bottom + 14.0, &format!("{label}"), "middle", 10.0);
        }
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use newton_atlas_core::experiment::{run_experiment, ExperimentConfig, SerialSolver};

    #[test]
    fn figures_are_well_formed() {
        let cfg = ExperimentConfig::new(vec![5, 8], 2, 1e-10, 3);
        let report = run_experiment(&cfg, &SerialSolver, &[]).unwrap();
        for svg in [scaling_svg(&report), regimes_svg(&report)] {
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert_eq!(svg.matches("<svg").count(), 1);
        }
        assert!(scaling_svg(&report).contains("beta ="));
        let mut stats = DisplacementStats::new(5, 0.25);
        stats.record(newton_atlas_core::ComplexPoint::new(3.0, 0.0), Some(-2), 0.5);
        let hist = displacement_svg(&[stats]);
        assert!(hist.contains("outside (1 steps)"));
    }

    #[test]
    fn empty_report_still_draws() {
        let report = ExperimentReport { rows: vec![], per_degree: vec![], fit: None, raw_fit: None, epsilon_sweep: vec![], audit: vec![] };
        assert!(scaling_svg(&report).contains("no data"));
        assert!(regimes_svg(&report).contains("no data"));
    }
}
