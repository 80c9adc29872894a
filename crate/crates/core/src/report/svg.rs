use std::fmt::Write;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    top: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn new(top: f64, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Frame {
            top,
            y_lo: lo - pad,
            y_hi: hi + pad,
        }
    }

    fn x(&self, t: f64) -> f64 {
        MARGIN_LEFT + t * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let inner = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        self.top + MARGIN_TOP + (self.y_hi - v) / (self.y_hi - self.y_lo) * inner
    }

    fn axes(&self, svg: &mut String, title: &str, y_label: &str) {
        let (x0, x1) = (self.x(0.0), self.x(1.0));
        let (yb, yt) = (self.y(self.y_lo), self.y(self.y_hi));
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{yt:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            yb - yt
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t}</text>"##,
                self.x(t),
                yb + 16.0
            );
            let v = self.y_lo + t * (self.y_hi - self.y_lo);
            let _ = writeln!(
                svg,
                r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v:.3}</text>"##,
                x0 - 6.0,
                self.y(v) + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"##,
            (x0 + x1) / 2.0,
            self.top + 20.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">normalized auction time</text>"##,
            (x0 + x1) / 2.0,
            yb + 32.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"##,
            (yb + yt) / 2.0,
            (yb + yt) / 2.0,
            escape(y_label)
        );
    }

    fn points(&self, ts: &[f64], vs: &[f64]) -> String {
        ts.iter()
            .zip(vs)
            .filter(|(_, v)| v.is_finite())
            .map(|(t, v)| format!("{:.2},{:.2}", self.x(*t), self.y(*v)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn open_svg(height: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"##
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);
    s
}

/// Overlay of many curves, one `<polyline>` each.
pub fn curves_svg(title: &str, y_label: &str, ts: &[f64], series: &[(&str, &[f64])]) -> String {
    let frame = Frame::new(0.0, series.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut svg = open_svg(PANEL_HEIGHT);
    frame.axes(&mut svg, title, y_label);
    for (k, (id, values)) in series.iter().enumerate() {
        let _ = writeln!(
            svg,
            r##"<polyline data-lot="{}" fill="none" stroke="{}" stroke-width="1" stroke-opacity="0.7" points="{}"/>"##,
            escape(id),
            PALETTE[k % PALETTE.len()],
            frame.points(ts, values)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// One stacked panel of a coefficient figure.
#[derive(Debug, Clone, Copy)]
pub struct SvgPanel<'a> {
    pub title: &'a str,
    pub beta: &'a [f64],
    pub ci_lo: &'a [f64],
    pub ci_hi: &'a [f64],
}

/// Coefficient curves with shaded confidence bands and a dashed zero line;
/// one `<polyline>` per panel.
pub fn coefficient_svg(covariate: &str, ts: &[f64], panels: &[SvgPanel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut svg = open_svg(height);
    for (k, p) in panels.iter().enumerate() {
        let values = p
            .beta
            .iter()
            .chain(p.ci_lo)
            .chain(p.ci_hi)
            .copied()
            .chain(std::iter::once(0.0));
        let frame = Frame::new(PANEL_HEIGHT * k as f64, values);
        frame.axes(&mut svg, p.title, covariate);

        let upper = frame.points(ts, p.ci_hi);
        let lower: Vec<String> = ts
            .iter()
            .zip(p.ci_lo)
            .rev()
            .filter(|(_, v)| v.is_finite())
            .map(|(t, v)| format!("{:.2},{:.2}", frame.x(*t), frame.y(*v)))
            .collect();
        if !upper.is_empty() && !lower.is_empty() {
            let _ = writeln!(
                svg,
                r##"<polygon class="band" fill="#999" fill-opacity="0.35" stroke="none" points="{upper} {}"/>"##,
                lower.join(" ")
            );
        }
        let _ = writeln!(
            svg,
            r##"<line class="zero" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="4 3"/>"##,
            frame.x(0.0),
            frame.y(0.0),
            frame.x(1.0),
            frame.y(0.0)
        );
        let _ = writeln!(
            svg,
            r##"<polyline class="beta" fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
            frame.points(ts, p.beta)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
