//! Minimal SVG scatter plot: color by class, marker shape by split.

use std::fmt::Write;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Val,
    Test,
    Other,
}

pub struct Point {
    pub x: f64,
    pub y: f64,
    pub class: usize,
    pub role: Role,
}

/// One marker per point, drawn in input order. Train nodes are squares,
/// validation nodes triangles, test nodes circles, the rest small dots.
pub fn scatter(title: &str, points: &[Point]) -> String {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        lo_x = lo_x.min(p.x);
        hi_x = hi_x.max(p.x);
        lo_y = lo_y.min(p.y);
        hi_y = hi_y.max(p.y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(lo_x, hi_x), span(lo_y, hi_y));
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - lo_x) / sx * inner;
    // SVG y grows downward.
    let py = |y: f64| SIZE - MARGIN - (y - lo_y) / sy * inner;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for p in points {
        let (x, y) = (px(p.x), py(p.y));
        let color = PALETTE[p.class % PALETTE.len()];
        let _ = match p.role {
            Role::Train => writeln!(
                out,
                "<rect class=\"train\" x=\"{:.2}\" y=\"{:.2}\" width=\"7\" height=\"7\" fill=\"{color}\" stroke=\"black\" stroke-width=\"0.6\"/>",
                x - 3.5,
                y - 3.5
            ),
            Role::Val => writeln!(
                out,
                "<polygon class=\"val\" points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{color}\"/>",
                x,
                y - 4.0,
                x - 3.5,
                y + 3.0,
                x + 3.5,
                y + 3.0
            ),
            Role::Test => writeln!(
                out,
                "<circle class=\"test\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>"
            ),
            Role::Other => writeln!(
                out,
                "<circle class=\"other\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.2\" fill=\"{color}\" fill-opacity=\"0.5\"/>"
            ),
        };
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_marker_per_point() {
        let roles = [Role::Train, Role::Val, Role::Test, Role::Other, Role::Test];
        let points: Vec<Point> = roles
            .iter()
            .enumerate()
            .map(|(i, &role)| Point {
                x: i as f64,
                y: -(i as f64),
                class: i,
                role,
            })
            .collect();
        let svg = scatter("a < b", &points);
        assert_eq!(svg.matches("class=\"train\"").count(), 1);
        assert_eq!(svg.matches("class=\"test\"").count(), 2);
        assert_eq!(svg.matches("<circle").count() + svg.matches("<polygon").count(), 4);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_extent_stays_finite() {
        let p = [Point {
            x: 3.0,
            y: 3.0,
            class: 0,
            role: Role::Test,
        }];
        assert!(!scatter("", &p).contains("NaN"));
    }
}
