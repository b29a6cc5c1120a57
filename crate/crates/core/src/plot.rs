//! Minimal static SVG renderings: path plot, dot plot, dual-axis plot.

use std::fmt::Write;

use chrono::{Datelike, NaiveDate, NaiveDateTime};

use crate::vintage::{DotSeries, Path};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        let pad = ((y1 - y0) * 0.05).max(1e-9);
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0).max(1e-12) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0).max(1e-12) * (HEIGHT - 2.0 * MARGIN)
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
        let coords: Vec<String> = pts
            .map(|(x, y)| format!("{:.1},{:.1}", self.px(x), self.py(y)))
            .collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", coords.join(" "))
    }

    fn zero_line(&self) -> String {
        if self.y0 < 0.0 && self.y1 > 0.0 {
            let y = self.py(0.0);
            format!(
                "<line x1=\"{MARGIN}\" x2=\"{}\" y1=\"{y:.1}\" y2=\"{y:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                WIDTH - MARGIN
            )
        } else {
            String::new()
        }
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn day_number(d: NaiveDate) -> f64 {
    d.num_days_from_ce() as f64
}

fn ts_number(t: NaiveDateTime) -> f64 {
    t.and_utc().timestamp() as f64 / 86_400.0
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn axes(f: &Frame, left: &str, bottom_left: &str, bottom_right: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2}</text>\n\
         <text x=\"{MARGIN}\" y=\"{}\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n\
         <text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN,
        MARGIN - 4.0,
        MARGIN + 4.0,
        f.y1,
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        f.y0,
        HEIGHT - MARGIN + 18.0,
        escape(bottom_left),
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 18.0,
        escape(bottom_right),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(left)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// All paths on one axis, with an optional comparison path in red. Points
/// before `from` are dropped.
pub fn path_plot_svg(paths: &[Path<f64>], comparison: Option<&Path<f64>>, from: Option<NaiveDate>) -> String {
    let keep = |p: &&crate::vintage::PathPoint<f64>| from.is_none_or(|f| p.date >= f);
    let all = paths.iter().chain(comparison);
    let xs = all.clone().flat_map(|p| p.points.iter().filter(keep).map(|q| day_number(q.date)));
    let ys = all.clone().flat_map(|p| p.points.iter().filter(keep).map(|q| q.ads));
    let frame = Frame::new(xs.clone(), ys);
    let (lo, hi) = bounds(xs);
    let label = |x: f64| NaiveDate::from_num_days_from_ce_opt(x as i32).map_or(String::new(), |d| d.to_string());
    let mut s = header("Path plot");
    s += &axes(&frame, "index", &label(lo), &label(hi));
    s += &frame.zero_line();
    for p in paths {
        s += &frame.polyline(
            p.points.iter().filter(keep).map(|q| (day_number(q.date), q.ads)),
            "stroke=\"black\" stroke-opacity=\"0.5\" stroke-width=\"1\"",
        );
    }
    if let Some(c) = comparison {
        s += &frame.polyline(
            c.points.iter().filter(keep).map(|q| (day_number(q.date), q.ads)),
            "stroke=\"#c00\" stroke-width=\"2\"",
        );
    }
    s + "</svg>\n"
}

/// One dot per vintage; recorded outputs, when given, as hollow red dots.
pub fn dot_plot_svg(dots: &DotSeries<f64>, recorded: Option<&DotSeries<f64>>) -> String {
    let all: Vec<&(NaiveDateTime, f64)> = dots.dots.iter().chain(recorded.iter().flat_map(|r| &r.dots)).collect();
    let frame = Frame::new(all.iter().map(|d| ts_number(d.0)), all.iter().map(|d| d.1));
    let first = all.iter().map(|d| d.0).min();
    let last = all.iter().map(|d| d.0).max();
    let fmt = |t: Option<NaiveDateTime>| t.map_or(String::new(), |t| t.date().to_string());
    let mut s = header("Dot plot");
    s += &axes(&frame, "final value of path", &fmt(first), &fmt(last));
    s += &frame.zero_line();
    s += &frame.polyline(
        dots.dots.iter().map(|d| (ts_number(d.0), d.1)),
        "stroke=\"#888\" stroke-width=\"0.8\"",
    );
    for d in &dots.dots {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"black\"/>",
            frame.px(ts_number(d.0)),
            frame.py(d.1)
        );
    }
    for d in recorded.iter().flat_map(|r| &r.dots) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"none\" stroke=\"#c00\"/>",
            frame.px(ts_number(d.0)),
            frame.py(d.1)
        );
    }
    s + "</svg>\n"
}

/// Two series on separate vertical scales (left black, right red).
pub fn dual_axis_svg(aligned: &[(NaiveDate, f64, f64)], left: &str, right: &str) -> String {
    let xs = aligned.iter().map(|p| day_number(p.0));
    let fl = Frame::new(xs.clone(), aligned.iter().map(|p| p.1));
    let fr = Frame::new(xs, aligned.iter().map(|p| p.2));
    let first = aligned.first().map_or(String::new(), |p| p.0.to_string());
    let last = aligned.last().map_or(String::new(), |p| p.0.to_string());
    let mut s = header(&format!("{left} vs {right}"));
    s += &axes(&fl, left, &first, &last);
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\">{:.2}</text>\n<text x=\"{}\" y=\"{}\">{:.2}</text>\n\
         <text x=\"{}\" y=\"{}\" transform=\"rotate(90 {} {})\" text-anchor=\"middle\" fill=\"#c00\">{}</text>\n",
        WIDTH - MARGIN + 4.0,
        MARGIN + 4.0,
        fr.y1,
        WIDTH - MARGIN + 4.0,
        HEIGHT - MARGIN,
        fr.y0,
        WIDTH - 14.0,
        HEIGHT / 2.0,
        WIDTH - 14.0,
        HEIGHT / 2.0,
        escape(right)
    );
    s += &fl.polyline(
        aligned.iter().map(|p| (day_number(p.0), p.1)),
        "stroke=\"black\" stroke-width=\"1.5\"",
    );
    s += &fr.polyline(
        aligned.iter().map(|p| (day_number(p.0), p.2)),
        "stroke=\"#c00\" stroke-width=\"1.5\"",
    );
    s + "</svg>\n"
}
