//! Minimal self-contained SVG plots: axes, ticks, polylines and per-segment
//! coloring. No external resources are referenced.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

pub struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(1e-12);
            (lo - 0.03 * span, hi + 0.03 * span)
        };
        Self {
            title: title.to_string(),
            xlabel: xlabel.to_string(),
            ylabel: ylabel.to_string(),
            x_range: pad(x_range.0, x_range.1),
            y_range: pad(y_range.0, y_range.1),
            body: String::new(),
        }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0)
                * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0)
                * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    /// One polyline with a single stroke.
    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, width: f64, dash: Option<&str>) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(self.sx(x)), fmt(self.sy(y))))
            .collect();
        let dash_attr = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        self.body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash_attr} points=\"{}\"/>\n",
            coords.join(" ")
        ));
    }

    /// A curve drawn as individually colored segments (one color per gap).
    pub fn colored_segments(&mut self, points: &[(f64, f64)], colors: &[String], width: f64) {
        assert!(points.len() >= 2 && colors.len() + 1 == points.len());
        for (i, color) in colors.iter().enumerate() {
            let (x1, y1) = points[i];
            let (x2, y2) = points[i + 1];
            self.body.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{width}\" stroke-linecap=\"round\"/>\n",
                fmt(self.sx(x1)),
                fmt(self.sy(y1)),
                fmt(self.sx(x2)),
                fmt(self.sy(y2))
            ));
        }
    }

    pub fn marker(&mut self, x: f64, y: f64, color: &str, radius: f64) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{radius}\" fill=\"{color}\"/>\n",
            fmt(self.sx(x)),
            fmt(self.sy(y))
        ));
    }

    fn ticks(lo: f64, hi: f64) -> Vec<f64> {
        let span = hi - lo;
        let raw = span / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|&s| span / s <= 7.0)
            .unwrap_or(mag * 10.0);
        let mut t = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= hi + 1e-12 * span.abs() {
            out.push(t);
            t += step;
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        // frame
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
            x1 - x0,
            y0 - y1
        ));
        for tx in Self::ticks(self.x_range.0, self.x_range.1) {
            let px = self.sx(tx);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                fmt(px),
                fmt(px),
                y0 + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
                fmt(px),
                y0 + 20.0,
                tick_label(tx)
            ));
        }
        for ty in Self::ticks(self.y_range.0, self.y_range.1) {
            let py = self.sy(ty);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                x0 - 5.0,
                fmt(py),
                fmt(py)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">{}</text>\n",
                x0 - 8.0,
                fmt(py + 4.0),
                tick_label(ty)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            (x0 + x1) / 2.0,
            xml_escape(&self.title)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>\n",
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            xml_escape(&self.xlabel)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            xml_escape(&self.ylabel)
        ));
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Cyclic hue for a phase in (−π, π]; undefined phases render neutral gray.
pub fn phase_color(arg: Option<f64>) -> String {
    match arg {
        None => "rgb(128,128,128)".to_string(),
        Some(a) => {
            let hue = (a + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 360.0;
            format!("hsl({hue:.1},85%,45%)")
        }
    }
}

/// Fixed palette keyed by branch id.
pub fn branch_color(id: usize) -> String {
    const PALETTE: [&str; 8] = [
        "rgb(31,119,180)",
        "rgb(214,39,40)",
        "rgb(44,160,44)",
        "rgb(255,127,14)",
        "rgb(148,103,189)",
        "rgb(140,86,75)",
        "rgb(227,119,194)",
        "rgb(23,190,207)",
    ];
    PALETTE[id % PALETTE.len()].to_string()
}
