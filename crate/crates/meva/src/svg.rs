//! Static SVG plots of result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{io_err, CliError, Result};
use crate::table::read_table;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Per-sample log10 MSE of every solver, samples sorted by the
    /// aggregate's error.
    Sorted,
    /// Mean test MSE per method and scope.
    Bars,
    /// Log-log excess loss against sample size.
    Rate,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Sorted => "sorted",
            PlotKind::Bars => "bars",
            PlotKind::Rate => "rate",
        }
    }
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sorted" => Ok(PlotKind::Sorted),
            "bars" => Ok(PlotKind::Bars),
            "rate" => Ok(PlotKind::Rate),
            _ => Err(CliError::InvalidConfig(format!("unknown plot kind `{s}`"))),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    s
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in it.filter(|v| v.is_finite()) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Axes { x: range(&mut xs.clone()), y: range(&mut ys.clone()) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn draw(&self, s: &mut String, xlabel: &str, ylabel: &str, xticks: bool) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let yp = self.py(yv);
            let _ = writeln!(s, r#"<line x1="{}" y1="{yp:.2}" x2="{x0}" y2="{yp:.2}" stroke="black"/>"#, x0 - 4.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, yp + 4.0, tick(yv));
            if xticks {
                let xv = self.x.0 + t * (self.x.1 - self.x.0);
                let xp = self.px(xv);
                let _ = writeln!(s, r#"<line x1="{xp:.2}" y1="{y1}" x2="{xp:.2}" y2="{}" stroke="black"/>"#, y1 + 4.0);
                let _ = writeln!(s, r#"<text x="{xp:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, tick(xv));
            }
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 12.0;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/>"#, x + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(n));
    }
}

/// Polyline plot. Non-finite points are skipped.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter().copied());
    let ax = Axes::new(pts.clone().map(|p| p.0), pts.map(|p| p.1));
    let mut s = header(title);
    ax.draw(&mut s, xlabel, ylabel, true);
    for (i, (_, p)) in series.iter().enumerate() {
        let coords: Vec<String> = p
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", ax.px(x), ax.py(y)))
            .collect();
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, coords.join(" "));
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

/// Vertical bars starting at zero.
pub fn bar_chart(title: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let ax = Axes::new(
        [0.0, bars.len().max(1) as f64].into_iter(),
        bars.iter().map(|b| b.1).chain(std::iter::once(0.0)),
    );
    let mut s = header(title);
    ax.draw(&mut s, "", ylabel, false);
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64 + 0.15 * slot;
        let (top, base) = (ax.py(v.max(0.0)), ax.py(0.0));
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
            0.7 * slot,
            (base - top).max(0.0)
        );
        let lx = x + 0.35 * slot;
        let ly = H - BOTTOM + 14.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly}" text-anchor="end" font-size="10" transform="rotate(-30 {lx:.2} {ly})">{}</text>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn columns(header: &[String], want: &[&str], kind: PlotKind) -> Result<Vec<usize>> {
    want.iter()
        .map(|w| {
            header.iter().position(|h| h == w).ok_or_else(|| CliError::SchemaMismatch {
                kind: kind.name().into(),
                msg: format!("missing column `{w}`"),
            })
        })
        .collect()
}

fn num(cell: &str, kind: PlotKind) -> Result<f64> {
    cell.parse().map_err(|_| CliError::SchemaMismatch { kind: kind.name().into(), msg: format!("`{cell}` is not a number") })
}

/// Sample ids ordered by the aggregate's MSE, ascending, and each solver's
/// log10 MSE in that order.
pub fn sorted_series(rows: &[(usize, String, f64)]) -> Result<(Vec<usize>, Vec<(String, Vec<f64>)>)> {
    let mut by_solver: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut order_names: Vec<&str> = Vec::new();
    for (id, solver, v) in rows {
        if !order_names.contains(&solver.as_str()) {
            order_names.push(solver);
        }
        by_solver.entry(solver).or_default().insert(*id, *v);
    }
    let agg = by_solver.get("aggregate").ok_or_else(|| CliError::SchemaMismatch {
        kind: "sorted".into(),
        msg: "no rows for `aggregate`".into(),
    })?;
    let mut order: Vec<usize> = agg.keys().copied().collect();
    order.sort_by(|a, b| agg[a].total_cmp(&agg[b]).then(a.cmp(b)));
    let series = order_names
        .iter()
        .map(|n| {
            let m = &by_solver[n];
            (n.to_string(), order.iter().map(|id| m.get(id).copied().unwrap_or(f64::NAN)).collect())
        })
        .collect();
    Ok((order, series))
}

/// Renders `csv` as a plot of `kind`.
pub fn render(csv: &Path, kind: PlotKind) -> Result<String> {
    let (header, rows) = read_table(csv)?;
    match kind {
        PlotKind::Sorted => {
            let c = columns(&header, &["sample_id", "solver_id", "log10_mse"], kind)?;
            let mut recs = Vec::with_capacity(rows.len());
            for r in &rows {
                let id = r[c[0]].parse().map_err(|_| CliError::SchemaMismatch {
                    kind: kind.name().into(),
                    msg: format!("bad sample id `{}`", r[c[0]]),
                })?;
                recs.push((id, r[c[1]].clone(), num(&r[c[2]], kind)?));
            }
            let (_, series) = sorted_series(&recs)?;
            let pts: Vec<(String, Vec<(f64, f64)>)> = series
                .into_iter()
                .map(|(n, v)| (n, v.into_iter().enumerate().map(|(i, y)| (i as f64, y)).collect()))
                .collect();
            Ok(line_plot("Test samples sorted by aggregate error", "rank", "log10 MSE", &pts))
        }
        PlotKind::Bars => {
            let c = columns(&header, &["method", "scope", "mean_mse"], kind)?;
            let mut bars = Vec::with_capacity(rows.len());
            for r in &rows {
                bars.push((format!("{} ({})", r[c[0]], r[c[1]]), num(&r[c[2]], kind)?));
            }
            Ok(bar_chart("Mean test MSE", "MSE", &bars))
        }
        PlotKind::Rate => {
            let c = columns(&header, &["n", "excess_v_mean", "excess_e_mean"], kind)?;
            let mut v = Vec::new();
            let mut e = Vec::new();
            for r in &rows {
                let n = num(&r[c[0]], kind)?.log10();
                v.push((n, num(&r[c[1]], kind)?.log10()));
                e.push((n, num(&r[c[2]], kind)?.log10()));
            }
            Ok(line_plot("Excess loss", "log10 N", "log10 excess loss", &[("MEVA".into(), v), ("MEEA".into(), e)]))
        }
    }
}

pub fn emit(csv: &Path, kind: PlotKind, out: &Path) -> Result<()> {
    let svg = render(csv, kind)?;
    std::fs::write(out, svg).map_err(io_err(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot("a < b & c", "x", "y", &[("one".into(), vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)])]);
        roxmltree::Document::parse(&s).unwrap();
    }

    #[test]
    fn bars_are_well_formed() {
        let s = bar_chart("t", "mse", &[("meva (aggregate)".into(), 4.3), ("uniform".into(), 4.4)]);
        let doc = roxmltree::Document::parse(&s).unwrap();
        let rects = doc.descendants().filter(|n| n.has_tag_name("rect")).count();
        assert_eq!(rects, 4);
    }

    #[test]
    fn sorted_order_matches_a_resort() {
        let mut rows = Vec::new();
        let agg = [3.0, -1.0, 2.0, -5.0, 0.5];
        for (i, &a) in agg.iter().enumerate() {
            rows.push((i, "aggregate".to_string(), a));
            rows.push((i, "fdm".to_string(), -a));
        }
        let (order, series) = sorted_series(&rows).unwrap();
        let mut idx: Vec<usize> = (0..agg.len()).collect();
        idx.sort_by(|a, b| agg[*a].partial_cmp(&agg[*b]).unwrap());
        assert_eq!(order, idx);
        let a = &series.iter().find(|s| s.0 == "aggregate").unwrap().1;
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn schema_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(render(&p, PlotKind::Rate), Err(CliError::SchemaMismatch { .. })));
    }
}
