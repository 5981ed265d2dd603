//! Self-rendered SVG plots. Every plot is a function of the CSV text alone,
//! so re-rendering a saved CSV reproduces the SVG byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{bail, Context, Result};

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Curve,
    Variance,
    Debias,
}

pub fn detect_kind(header: &csv::StringRecord) -> Result<PlotKind> {
    let has = |c: &str| header.iter().any(|h| h == c);
    if has("ratio_R") {
        Ok(PlotKind::Curve)
    } else if has("second_moment") {
        Ok(PlotKind::Variance)
    } else if has("method") && has("abs_bias") {
        Ok(PlotKind::Debias)
    } else {
        bail!("unrecognised CSV header: {}", header.iter().collect::<Vec<_>>().join(","))
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
}

struct Table {
    header: csv::StringRecord,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers()?.clone();
        let rows = rd.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| format!("CSV has no `{name}` column"))
    }

    fn num(&self, row: &csv::StringRecord, col: usize) -> f64 {
        row.get(col).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
    }

    /// Groups `(x, y)` by the integer column `key`, keyed numerically.
    fn by_n(&self, x: &str, y: &str, filter: impl Fn(&csv::StringRecord) -> bool) -> Result<BTreeMap<u64, Vec<(f64, f64)>>> {
        let (xc, yc, nc) = (self.col(x)?, self.col(y)?, self.col("n")?);
        let mut out: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
        for row in self.rows.iter().filter(|r| filter(r)) {
            let n = row.get(nc).and_then(|s| s.parse().ok()).context("bad `n` value")?;
            out.entry(n).or_default().push((self.num(row, xc), self.num(row, yc)));
        }
        Ok(out)
    }
}

pub fn render(csv_text: &str) -> Result<String> {
    let table = Table::parse(csv_text)?;
    let panels = match detect_kind(&table.header)? {
        PlotKind::Curve => curve_panels(&table)?,
        PlotKind::Variance => variance_panels(&table)?,
        PlotKind::Debias => debias_panels(&table)?,
    };
    Ok(draw(&panels, 2))
}

fn first_value(table: &Table, col: &str) -> String {
    table.col(col).ok().and_then(|c| table.rows.first().and_then(|r| r.get(c))).unwrap_or("").to_string()
}

fn curve_panels(table: &Table) -> Result<Vec<Panel>> {
    let family = first_value(table, "family");
    let stat = first_value(table, "stat");
    let expected = table.by_n("param", "expected_value", |_| true)?;
    let ratio = table.by_n("param", "ratio_R", |_| true)?;
    let mut values: Vec<Series> = Vec::new();
    if let Some((_, pts)) = table.by_n("param", "population_value", |_| true)?.into_iter().next() {
        values.push(Series { label: "population".into(), points: pts, dashed: true });
    }
    values.extend(expected.into_iter().map(|(n, points)| Series { label: format!("E, n={n}"), points, dashed: false }));
    let ratios = ratio.into_iter().map(|(n, points)| Series { label: format!("n={n}"), points, dashed: false }).collect();
    Ok(vec![
        Panel {
            title: format!("{stat}: population and expected value, {family}"),
            x_label: "parameter".into(),
            y_label: "value".into(),
            series: values,
        },
        Panel { title: format!("{stat}: ratio R, {family}"), x_label: "parameter".into(), y_label: "R".into(), series: ratios },
    ])
}

fn variance_panels(table: &Table) -> Result<Vec<Panel>> {
    let family = first_value(table, "family");
    let mean = table.by_n("param", "expected_value", |_| true)?;
    let var = table.by_n("param", "variance", |_| true)?;
    let to_series = |m: BTreeMap<u64, Vec<(f64, f64)>>| {
        m.into_iter().map(|(n, points)| Series { label: format!("n={n}"), points, dashed: false }).collect()
    };
    Ok(vec![
        Panel {
            title: format!("expected sample Gini, {family}"),
            x_label: "parameter".into(),
            y_label: "E".into(),
            series: to_series(mean),
        },
        Panel {
            title: format!("variance of the sample Gini, {family}"),
            x_label: "parameter".into(),
            y_label: "Var".into(),
            series: to_series(var),
        },
    ])
}

fn debias_panels(table: &Table) -> Result<Vec<Panel>> {
    let (mc, nc) = (table.col("method")?, table.col("n")?);
    let mut methods: Vec<String> = Vec::new();
    let mut ns: Vec<u64> = Vec::new();
    for row in &table.rows {
        let m = row.get(mc).unwrap_or("").to_string();
        if !methods.contains(&m) {
            methods.push(m);
        }
        let n: u64 = row.get(nc).and_then(|s| s.parse().ok()).context("bad `n` value")?;
        if !ns.contains(&n) {
            ns.push(n);
        }
    }
    ns.sort_unstable();
    let mut panels = Vec::new();
    for &n in &ns {
        for col in ["bias", "abs_bias"] {
            let series = methods
                .iter()
                .map(|m| {
                    let pts = table.by_n("alpha", col, |r| r.get(mc) == Some(m.as_str()))?;
                    Ok(Series { label: m.clone(), points: pts.get(&n).cloned().unwrap_or_default(), dashed: false })
                })
                .collect::<Result<Vec<_>>>()?;
            panels.push(Panel { title: format!("{col}, n={n}"), x_label: "alpha".into(), y_label: col.into(), series });
        }
    }
    Ok(panels)
}

fn range(panel: &Panel, pick: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let (lo, hi) = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(&pick))
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Step of about `span / 5` drawn from {1, 2, 5} x 10^k.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 20 {
        out.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn draw(panels: &[Panel], columns: usize) -> String {
    let rows = panels.len().div_ceil(columns).max(1);
    let (w, h) = (PANEL_W * columns as f64, PANEL_H * rows as f64);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = PANEL_W * (i % columns) as f64;
        let oy = PANEL_H * (i / columns) as f64;
        draw_panel(&mut svg, panel, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}

fn draw_panel(svg: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (x0, x1) = range(panel, |p| p.0);
    let (y0, y1) = range(panel, |p| p.1);
    let (left, top) = (ox + MARGIN_L, oy + MARGIN_T);
    let (pw, ph) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let _ = writeln!(svg, r#"<g class="panel">"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        left + pw / 2.0,
        oy + 20.0,
        escape(&panel.title)
    );
    let _ = writeln!(svg, r#"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, top + ph, top + ph + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 16.0, label(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/>"#, left - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, label(t));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        top + ph + 34.0,
        escape(&panel.x_label)
    );
    let (lx, ly) = (ox + 16.0, top + ph / 2.0);
    let _ = writeln!(
        svg,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(&panel.y_label)
    );

    for (k, s) in panel.series.iter().enumerate() {
        let color = if s.dashed { "black" } else { PALETTE[k % PALETTE.len()] };
        let dash = if s.dashed { r#" stroke-dasharray="5 3""# } else { "" };
        // NaN points split the curve into separate polylines
        for segment in s.points.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
            if segment.is_empty() {
                continue;
            }
            let pts: Vec<String> = segment.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            );
        }
        let y = top + 12.0 + 14.0 * k as f64;
        let x = left + pw - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 22.0, escape(&s.label));
    }
    let _ = writeln!(svg, "</g>");
}

#[cfg(test)]
mod tests {
    use super::*;

    const CURVE: &str = "family,param,n,stat,population_value,expected_value,ratio_R,quad_error,converged,std_error,note\n\
        pareto,1.5,3,gini,0.5,0.3,0.6,1e-12,true,0,\n\
        pareto,2,3,gini,0.3333333333333333,0.25,0.75,1e-12,true,0,\n\
        pareto,1.5,5,gini,0.5,0.35,0.7,1e-12,true,0,\n\
        pareto,2,5,gini,0.3333333333333333,NaN,NaN,NaN,false,NaN,failed\n";

    #[test]
    fn detects_each_kind() {
        let kind = |h: &str| detect_kind(&csv::StringRecord::from(h.split(',').collect::<Vec<_>>()));
        assert_eq!(kind("family,param,n,ratio_R").unwrap(), PlotKind::Curve);
        assert_eq!(kind("family,param,n,second_moment,variance").unwrap(), PlotKind::Variance);
        assert_eq!(kind("alpha,n,method,bias,abs_bias").unwrap(), PlotKind::Debias);
        assert!(kind("a,b").is_err());
    }

    #[test]
    fn curve_plot_structure() {
        let svg = render(CURVE).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches(r#"<g class="panel">"#).count(), 2);
        assert!(svg.contains(">n=3<") && svg.contains(">n=5<") && svg.contains(">population<"));
        // population + 2 expected curves + 2 ratio curves
        assert_eq!(svg.matches("<polyline").count(), 5);
        assert_eq!(render(CURVE).unwrap(), svg);
    }

    #[test]
    fn debias_plot_has_two_panels_per_n() {
        let mut text = String::from("alpha,n,method,bias,abs_bias,std_error,replications,clamped,failures\n");
        for n in [20, 50] {
            for m in ["plain", "mle_plugin"] {
                for a in [1.5, 2.0, 2.5] {
                    text.push_str(&format!("{a},{n},{m},-0.01,0.01,0.001,1000,0,0\n"));
                }
            }
        }
        let svg = render(&text).unwrap();
        assert_eq!(svg.matches(r#"<g class="panel">"#).count(), 4);
        assert!(svg.contains("abs_bias, n=50"));
        assert_eq!(svg.matches("<polyline").count(), 8);
    }

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(label(0.6000000000000001), "0.6");
        assert_eq!(tick_step(19.0), 5.0);
    }
}
