//! Static SVG figures: stacked line panels and heatmaps.
//!
//! Output is a pure function of the inputs (fixed formatting, no
//! timestamps), so identical results give identical bytes.

use std::fmt::Write;

const WIDTH: f64 = 680.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const PANEL_H: f64 = 190.0;
const PANEL_GAP: f64 = 60.0;
const BACKGROUND: &str = "#d9d9d9";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    None,
    /// At the last point, pointing along the traversal.
    End,
    /// At both ends (branch traversed either way).
    Both,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// CSS class, e.g. `branch up`.
    pub class: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    pub arrow: Arrow,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub id: String,
    pub ylabel: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub xlabel: String,
    pub panels: Vec<Panel>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data range padded by 5%, widened when degenerate.
fn padded(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - d, hi + d);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if step < 1e-3 || v.abs() >= 1e4 {
        return format!("{v:.1e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, xlabel: Option<&str>, ylabel: &str) {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000" stroke-width="1"/>"##,
            self.x0, self.y0, self.w, self.h
        );
        let (xt, xs) = ticks(self.xr.0, self.xr.1);
        for t in xt {
            let x = self.px(t);
            let yb = self.y0 + self.h;
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
                yb + 5.0,
                yb + 18.0,
                tick_label(t, xs)
            );
        }
        let (yt, ys) = ticks(self.yr.0, self.yr.1);
        for t in yt {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
                self.x0 - 5.0,
                self.x0,
                self.x0 - 8.0,
                y + 4.0,
                tick_label(t, ys)
            );
        }
        if let Some(l) = xlabel {
            let _ = writeln!(
                out,
                r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"##,
                self.x0 + self.w / 2.0,
                self.y0 + self.h + 38.0,
                esc(l)
            );
        }
        let (lx, ly) = (self.x0 - 62.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            out,
            r##"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"##,
            esc(ylabel)
        );
    }
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="Helvetica, Arial, sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"##,
        w / 2.0,
        esc(title)
    );
}

/// Stacked panels sharing the x axis. Each series becomes one `<polyline>`.
pub fn line_plot(plot: &LinePlot) -> String {
    let n = plot.panels.len().max(1) as f64;
    let height = TOP + n * PANEL_H + (n - 1.0) * PANEL_GAP + 60.0;
    let mut out = String::new();
    header(&mut out, WIDTH, height, &plot.title);
    let colors: Vec<&str> = plot.panels.iter().flat_map(|p| p.series.iter().map(|s| s.color)).collect();
    let _ = writeln!(out, "<defs>");
    let mut seen: Vec<&str> = Vec::new();
    for c in colors {
        if seen.contains(&c) {
            continue;
        }
        seen.push(c);
        let _ = writeln!(
            out,
            r##"<marker id="arrow-{}" viewBox="0 0 10 10" refX="8" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="{c}"/></marker>"##,
            c.trim_start_matches('#')
        );
    }
    let _ = writeln!(out, "</defs>");

    let xr = padded(plot.panels.iter().flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0))));
    for (k, panel) in plot.panels.iter().enumerate() {
        let frame = Frame {
            x0: LEFT,
            y0: TOP + k as f64 * (PANEL_H + PANEL_GAP),
            w: WIDTH - LEFT - RIGHT,
            h: PANEL_H,
            xr,
            yr: padded(panel.series.iter().flat_map(|s| s.points.iter().map(|q| q.1))),
        };
        let _ = writeln!(out, r##"<g id="{}">"##, esc(&panel.id));
        frame.axes(&mut out, Some(&plot.xlabel), &panel.ylabel);
        for (j, s) in panel.series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|q| q.0.is_finite() && q.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let id = s.color.trim_start_matches('#');
            let markers = match s.arrow {
                Arrow::None => String::new(),
                Arrow::End => format!(r##" marker-end="url(#arrow-{id})""##),
                Arrow::Both => format!(r##" marker-start="url(#arrow-{id})" marker-end="url(#arrow-{id})""##),
            };
            let _ = writeln!(
                out,
                r##"<polyline class="{}" points="{}" fill="none" stroke="{}" stroke-width="1.6"{markers}/>"##,
                esc(&s.class),
                pts.join(" "),
                s.color
            );
            let (lx, ly) = (frame.x0 + frame.w - 150.0, frame.y0 + 16.0 + 16.0 * j as f64);
            let _ = writeln!(
                out,
                r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
                lx + 20.0,
                s.color,
                lx + 26.0,
                ly + 4.0,
                esc(&s.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub cbar_label: String,
    /// Column centres (horizontal axis).
    pub x: Vec<f64>,
    /// Row centres (vertical axis).
    pub y: Vec<f64>,
    pub x_log: bool,
    pub y_log: bool,
    /// `values[ix * y.len() + iy]`; `None` is drawn in the background colour.
    pub values: Vec<Option<f64>>,
    /// Colour by `log10` of the value (non-positive values count as missing).
    pub log_color: bool,
    /// Bold curve in data coordinates.
    pub contour: Vec<(f64, f64)>,
    /// Bold boundary drawn along cell edges where the mask changes.
    pub contour_mask: Option<Vec<bool>>,
    /// Dashed boundary of a second region.
    pub region_mask: Option<Vec<bool>>,
}

const VIRIDIS: [(f64, f64, f64); 9] = [
    (68.0, 1.0, 84.0),
    (71.0, 44.0, 122.0),
    (59.0, 81.0, 139.0),
    (44.0, 113.0, 142.0),
    (33.0, 144.0, 141.0),
    (39.0, 173.0, 129.0),
    (92.0, 200.0, 99.0),
    (170.0, 220.0, 50.0),
    (253.0, 231.0, 37.0),
];

const LEVELS: usize = 64;
const SEAM: f64 = 0.4;

fn color(level: usize) -> String {
    let t = level as f64 / (LEVELS - 1) as f64 * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Cell edges around the centres, in (possibly log) axis coordinates.
fn edges(c: &[f64], log: bool) -> Vec<f64> {
    let v: Vec<f64> = c.iter().map(|&x| if log { x.ln() } else { x }).collect();
    let n = v.len();
    if n == 1 {
        let d = if v[0] == 0.0 { 0.5 } else { 0.5 * v[0].abs() };
        return vec![v[0] - d, v[0] + d];
    }
    let mut e = Vec::with_capacity(n + 1);
    e.push(v[0] - 0.5 * (v[1] - v[0]));
    for k in 0..n - 1 {
        e.push(0.5 * (v[k] + v[k + 1]));
    }
    e.push(v[n - 1] + 0.5 * (v[n - 1] - v[n - 2]));
    e
}

/// Heatmap with run-length merged cells along the vertical axis.
pub fn heatmap(h: &Heatmap) -> String {
    let (nx, ny) = (h.x.len(), h.y.len());
    assert_eq!(h.values.len(), nx * ny, "heatmap values do not match the axes");
    let plot_w = WIDTH - LEFT - RIGHT - 90.0;
    let plot_h = 420.0;
    let height = TOP + plot_h + 70.0;
    let mut out = String::new();
    header(&mut out, WIDTH, height, &h.title);

    let ex = edges(&h.x, h.x_log);
    let ey = edges(&h.y, h.y_log);
    let frame = Frame {
        x0: LEFT,
        y0: TOP,
        w: plot_w,
        h: plot_h,
        xr: (ex[0], ex[nx]),
        yr: (ey[0], ey[ny]),
    };

    let scaled: Vec<Option<f64>> = h
        .values
        .iter()
        .map(|v| match *v {
            Some(x) if x.is_finite() && (!h.log_color || x > 0.0) => Some(if h.log_color { x.log10() } else { x }),
            _ => None,
        })
        .collect();
    let mut hi = scaled.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = scaled.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    if h.log_color && hi - lo > 6.0 {
        lo = hi - 6.0;
    }
    if !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    } else if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        lo -= 0.5;
        hi += 0.5;
    }
    let level = |v: f64| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * (LEVELS - 1) as f64).round() as usize;

    let _ = writeln!(out, r##"<g id="cells" shape-rendering="crispEdges">"##);
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{BACKGROUND}"/>"##,
        frame.x0, frame.y0, frame.w, frame.h
    );
    for ix in 0..nx {
        let (xa, xb) = (frame.px(ex[ix]), frame.px(ex[ix + 1]));
        let mut iy = 0;
        while iy < ny {
            let lv = scaled[ix * ny + iy].map(level);
            let mut end = iy + 1;
            while end < ny && scaled[ix * ny + end].map(level) == lv {
                end += 1;
            }
            if let Some(l) = lv {
                let (ya, yb) = (frame.py(ey[end]), frame.py(ey[iy]));
                // slight overlap hides anti-aliasing seams between cells
                let _ = writeln!(
                    out,
                    r##"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"##,
                    (xb - xa + SEAM).min(frame.x0 + frame.w - xa),
                    (yb - ya + SEAM).min(frame.y0 + frame.h - ya),
                    color(l)
                );
            }
            iy = end;
        }
    }
    let _ = writeln!(out, "</g>");

    let mask_path = |mask: &[bool]| -> String {
        let mut d = String::new();
        let at = |ix: usize, iy: usize| mask[ix * ny + iy];
        for ix in 0..nx {
            for iy in 0..ny {
                if ix + 1 < nx && at(ix, iy) != at(ix + 1, iy) {
                    let x = frame.px(ex[ix + 1]);
                    let _ = write!(d, "M{x:.2},{:.2}V{:.2}", frame.py(ey[iy]), frame.py(ey[iy + 1]));
                }
                if iy + 1 < ny && at(ix, iy) != at(ix, iy + 1) {
                    let y = frame.py(ey[iy + 1]);
                    let _ = write!(d, "M{:.2},{y:.2}H{:.2}", frame.px(ex[ix]), frame.px(ex[ix + 1]));
                }
            }
        }
        d
    };
    if let Some(m) = &h.contour_mask {
        let _ = writeln!(
            out,
            r##"<path class="threshold" d="{}" fill="none" stroke="#000" stroke-width="2.5"/>"##,
            mask_path(m)
        );
    }
    if let Some(m) = &h.region_mask {
        let _ = writeln!(
            out,
            r##"<path class="bistable" d="{}" fill="none" stroke="#fff" stroke-width="1.5" stroke-dasharray="4 3"/>"##,
            mask_path(m)
        );
    }
    if !h.contour.is_empty() {
        let tx = |x: f64| if h.x_log { x.ln() } else { x };
        let ty = |y: f64| if h.y_log { y.ln() } else { y };
        let pts: Vec<String> = h
            .contour
            .iter()
            .filter(|q| q.0.is_finite() && q.1.is_finite())
            .map(|&(x, y)| {
                let yy = ty(y).clamp(frame.yr.0, frame.yr.1);
                format!("{:.2},{:.2}", frame.px(tx(x)), frame.py(yy))
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline class="threshold" points="{}" fill="none" stroke="#000" stroke-width="2.5"/>"##,
            pts.join(" ")
        );
    }

    // axes; log axes get ticks in the original values
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        frame.x0, frame.y0, frame.w, frame.h
    );
    let axis_ticks = |log: bool, r: (f64, f64)| -> Vec<(f64, String)> {
        if log {
            let (a, b) = (r.0 / std::f64::consts::LN_10, r.1 / std::f64::consts::LN_10);
            (a.ceil() as i64..=b.floor() as i64)
                .map(|k| (k as f64 * std::f64::consts::LN_10, format!("1e{k}")))
                .collect()
        } else {
            let (t, s) = ticks(r.0, r.1);
            t.into_iter().map(|v| (v, tick_label(v, s))).collect()
        }
    };
    for (v, label) in axis_ticks(h.x_log, frame.xr) {
        let x = frame.px(v);
        let yb = frame.y0 + frame.h;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"##,
            yb + 5.0,
            yb + 18.0
        );
    }
    for (v, label) in axis_ticks(h.y_log, frame.yr) {
        let y = frame.py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"##,
            frame.x0 - 5.0,
            frame.x0,
            frame.x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"##,
        frame.x0 + frame.w / 2.0,
        frame.y0 + frame.h + 40.0,
        esc(&h.xlabel)
    );
    let (lx, ly) = (frame.x0 - 62.0, frame.y0 + frame.h / 2.0);
    let _ = writeln!(
        out,
        r##"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"##,
        esc(&h.ylabel)
    );

    // colour bar
    let (cx, cw) = (frame.x0 + frame.w + 20.0, 16.0);
    let _ = writeln!(out, r##"<g id="colorbar">"##);
    for l in 0..LEVELS {
        let y1 = frame.y0 + frame.h * (1.0 - (l + 1) as f64 / LEVELS as f64);
        let _ = writeln!(
            out,
            r##"<rect x="{cx:.2}" y="{y1:.2}" width="{cw:.2}" height="{:.2}" fill="{}"/>"##,
            frame.h / LEVELS as f64 + 0.5,
            color(l)
        );
    }
    let (tv, ts) = ticks(lo, hi);
    for v in tv {
        let y = frame.y0 + frame.h * (1.0 - (v - lo) / (hi - lo));
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"##,
            cx + cw,
            cx + cw + 4.0,
            cx + cw + 6.0,
            y + 3.5,
            tick_label(v, ts)
        );
    }
    let (bx, by) = (cx + cw + 52.0, frame.y0 + frame.h / 2.0);
    let _ = writeln!(
        out,
        r##"<text x="{bx:.2}" y="{by:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {bx:.2} {by:.2})">{}</text>"##,
        esc(&h.cbar_label)
    );
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}
