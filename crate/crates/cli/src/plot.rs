//! Static SVG plots rendered from CSV files already on disk.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{config, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// Shell means against the sup-norm shell; columns `shell,mean[,stderr]`.
    Profile,
    /// Decay data with its fit on log-log axes; columns `n,value[,fit]`.
    LoglogFit,
    /// Torus susceptibility against the period; columns `period,chi[,stderr]`.
    WindowScaling,
}

impl PlotKind {
    fn columns(self) -> (&'static str, &'static str, Option<&'static str>) {
        match self {
            PlotKind::Profile => ("shell", "mean", Some("stderr")),
            PlotKind::LoglogFit => ("n", "value", None),
            PlotKind::WindowScaling => ("period", "chi", Some("stderr")),
        }
    }

    fn log_x(self) -> bool {
        !matches!(self, PlotKind::Profile)
    }
}

/// Extra annotations.
#[derive(Clone, Debug, Default)]
pub struct Annotations {
    pub title: Option<String>,
    /// Printed on loglog-fit plots.
    pub residual: Option<f64>,
    /// Dashed reference slope on window-scaling plots.
    pub reference_slope: Option<f64>,
}

struct Data {
    x: Vec<f64>,
    y: Vec<f64>,
    err: Option<Vec<f64>>,
    fit: Option<Vec<f64>>,
}

fn read(kind: PlotKind, input: impl Read) -> CliResult<Data> {
    let mut rd = csv::Reader::from_reader(input);
    let headers: HashMap<String, usize> =
        rd.headers()?.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
    let (xc, yc, ec) = kind.columns();
    let col = |name: &str| headers.get(name).copied();
    let xi = col(xc).ok_or_else(|| config(format!("missing column {xc:?}")))?;
    let yi = col(yc).ok_or_else(|| config(format!("missing column {yc:?}")))?;
    let ei = ec.and_then(col);
    let fi = if kind == PlotKind::LoglogFit { col("fit") } else { None };
    let mut d = Data { x: vec![], y: vec![], err: ei.map(|_| vec![]), fit: fi.map(|_| vec![]) };
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| config(format!("non-numeric entry {:?}", rec.get(i).unwrap_or(""))))
        };
        d.x.push(num(xi)?);
        d.y.push(num(yi)?);
        if let (Some(i), Some(v)) = (ei, d.err.as_mut()) {
            v.push(num(i)?);
        }
        if let (Some(i), Some(v)) = (fi, d.fit.as_mut()) {
            v.push(num(i)?);
        }
    }
    if d.x.is_empty() {
        return Err(config("no data rows"));
    }
    Ok(d)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const L: f64 = 70.0;
const R: f64 = 20.0;
const T: f64 = 40.0;
const B: f64 = 50.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        let t = |v: f64| if log { v.log10() } else { v };
        let mut lo = vals.iter().copied().map(t).fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().copied().map(t).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Axis { lo: lo - pad, hi: hi + pad, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let t = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b).step_by(step as usize).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            let span = self.hi - self.lo;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-12 * span {
                out.push((v, format!("{}", (v / step).round() * step)));
                v += step;
            }
            out
        }
    }
}

fn px(ax: &Axis, v: f64) -> Option<f64> {
    ax.frac(v).map(|f| L + f * (W - L - R))
}

fn py(ay: &Axis, v: f64) -> Option<f64> {
    ay.frac(v).map(|f| H - B - f * (H - T - B))
}

fn slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let s = sxy / sxx;
    Some((s, my - s * mx))
}

/// Render one plot. The output is a self-contained SVG document.
pub fn render(kind: PlotKind, input: impl Read, ann: &Annotations) -> CliResult<String> {
    let d = read(kind, input)?;
    let log_y = d.y.iter().all(|v| *v > 0.0);
    let ax = Axis::new(d.x.iter().copied(), kind.log_x());
    let mut ys: Vec<f64> = d.y.clone();
    if let Some(e) = &d.err {
        ys.extend(d.y.iter().zip(e).map(|(y, e)| y + e));
    }
    if let Some(f) = &d.fit {
        ys.extend(f.iter().copied());
    }
    let ay = Axis::new(ys.into_iter(), log_y);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let title = ann.title.clone().unwrap_or_else(|| format!("{kind:?}"));
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&title));
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{L}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{L}" y1="{T}" x2="{L}" y2="{y0}"/></g>"#,
        y0 = H - B,
        x1 = W - R
    );
    let _ = writeln!(s, r#"<g class="xticks">"#);
    for (v, label) in ax.ticks() {
        if let Some(x) = px(&ax, v) {
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="black"/><text x="{x:.2}" y="{yt}" text-anchor="middle">{label}</text>"#,
                y0 = H - B,
                y1 = H - B + 5.0,
                yt = H - B + 18.0
            );
        }
    }
    let _ = writeln!(s, "</g>\n<g class=\"yticks\">");
    for (v, label) in ay.ticks() {
        if let Some(y) = py(&ay, v) {
            let _ = writeln!(
                s,
                r#"<line x1="{x0}" y1="{y:.2}" x2="{L}" y2="{y:.2}" stroke="black"/><text x="{xt}" y="{yt:.2}" text-anchor="end">{label}</text>"#,
                x0 = L - 5.0,
                xt = L - 8.0,
                yt = y + 4.0
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let (xl, yl) = match kind {
        PlotKind::Profile => ("shell |x|_inf", "mean two-point function"),
        PlotKind::LoglogFit => ("n", "value"),
        PlotKind::WindowScaling => ("period r", "torus susceptibility"),
    };
    let _ = writeln!(s, r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">{xl}</text>"#, (L + W - R) / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{yl}</text>"#,
        y = (T + H - B) / 2.0
    );
    if let Some(e) = &d.err {
        let _ = writeln!(s, r#"<g class="errorbars" stroke="gray">"#);
        for ((x, y), e) in d.x.iter().zip(&d.y).zip(e) {
            let lo = (y - e).max(if log_y { y * 1e-3 } else { f64::MIN });
            if let (Some(cx), Some(a), Some(b)) = (px(&ax, *x), py(&ay, lo), py(&ay, y + e)) {
                let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{a:.2}" x2="{cx:.2}" y2="{b:.2}"/>"#);
            }
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(f) = &d.fit {
        let pts: Vec<String> = d
            .x
            .iter()
            .zip(f)
            .filter_map(|(x, y)| Some(format!("{:.2},{:.2}", px(&ax, *x)?, py(&ay, *y)?)))
            .collect();
        let _ = writeln!(s, r#"<polyline class="fit" fill="none" stroke="crimson" points="{}"/>"#, pts.join(" "));
    }
    if kind == PlotKind::WindowScaling {
        if let Some((sl, ic)) = slope(&d.x, &d.y) {
            let ends = [d.x[0], *d.x.last().unwrap()];
            let line = |sl: f64, ic: f64| -> Vec<String> {
                ends.iter()
                    .filter_map(|x| Some(format!("{:.2},{:.2}", px(&ax, *x)?, py(&ay, (ic + sl * x.ln()).exp())?)))
                    .collect()
            };
            let _ = writeln!(s, r#"<polyline class="fit" fill="none" stroke="crimson" points="{}"/>"#, line(sl, ic).join(" "));
            let mut note = format!("slope {sl:.3}");
            if let Some(r) = ann.reference_slope {
                let mx = d.x.iter().map(|v| v.ln()).sum::<f64>() / d.x.len() as f64;
                let my = d.y.iter().map(|v| v.ln()).sum::<f64>() / d.y.len() as f64;
                let _ = writeln!(
                    s,
                    r#"<polyline class="reference" fill="none" stroke="gray" stroke-dasharray="6,4" points="{}"/>"#,
                    line(r, my - r * mx).join(" ")
                );
                note.push_str(&format!(" (reference d/2 = {r})"));
            }
            let _ = writeln!(s, r#"<text class="annotation" x="{}" y="{}">{note}</text>"#, L + 10.0, T + 14.0);
        }
    }
    if let Some(r) = ann.residual {
        let _ = writeln!(s, r#"<text class="annotation" x="{}" y="{}">max log residual {r:.3e}</text>"#, L + 10.0, T + 14.0);
    }
    let _ = writeln!(s, r#"<g class="points" fill="steelblue">"#);
    for (x, y) in d.x.iter().zip(&d.y) {
        if let (Some(cx), Some(cy)) = (px(&ax, *x), py(&ay, *y)) {
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3"/>"#);
        }
    }
    let _ = writeln!(s, "</g>\n</svg>");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_counts_points() {
        let csv = "shell,mean,stderr\n0,2.0,0.1\n1,0.5,0.05\n2,0.3,0.02\n";
        let svg = render(PlotKind::Profile, csv.as_bytes(), &Annotations::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("class=\"errorbars\""));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn missing_columns_are_config_errors() {
        let e = render(PlotKind::LoglogFit, "a,b\n1,2\n".as_bytes(), &Annotations::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn window_slope_annotation() {
        let csv = "period,chi\n4,16\n8,64\n16,256\n";
        let ann = Annotations { reference_slope: Some(2.5), ..Default::default() };
        let svg = render(PlotKind::WindowScaling, csv.as_bytes(), &ann).unwrap();
        assert!(svg.contains("slope 2.000"));
        assert!(svg.contains("class=\"reference\""));
    }

    #[test]
    fn loglog_fit_line_and_residual() {
        let csv = "n,value,fit\n1,1,1\n2,0.5,0.5\n4,0.25,0.25\n";
        let ann = Annotations { residual: Some(1e-3), ..Default::default() };
        let svg = render(PlotKind::LoglogFit, csv.as_bytes(), &ann).unwrap();
        assert!(svg.contains("<polyline class=\"fit\""));
        assert!(svg.contains("max log residual"));
    }
}
