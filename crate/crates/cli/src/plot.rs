//! Self-contained SVG plots.

use std::fmt::Write as _;

use flatlab_core::Objective;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;
/// Nodes per side of the level-curve grid.
pub const CONTOUR_GRID: usize = 256;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Affine map from data coordinates to the plot box.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Frame {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn header(title: &str, timestamp: Option<&str>) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    if let Some(t) = timestamp {
        let _ = writeln!(s, "<!-- generated {t} -->");
    }
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, fr: &Frame, xlabel: &str, ylabel: &str, log: bool) {
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let fmt = |v: f64| if log { format!("1e{}", v.round() as i64) } else { format!("{v:.3}") };
    let ticks = |a: f64, b: f64| -> Vec<f64> {
        if log {
            (a.ceil() as i64..=b.floor() as i64).map(|k| k as f64).collect()
        } else {
            (0..=4).map(|k| a + (b - a) * k as f64 / 4.0).collect()
        }
    };
    for t in ticks(fr.x0, fr.x1) {
        let x = fr.px(t);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            H - MARGIN,
            H - MARGIN + 5.0,
            H - MARGIN + 18.0,
            fmt(t)
        );
    }
    for t in ticks(fr.y0, fr.y1) {
        let y = fr.py(t);
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN - 5.0,
            MARGIN - 8.0,
            y + 4.0,
            fmt(t)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn polyline(s: &mut String, fr: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, width: f64) {
    let mut d = String::new();
    for (x, y) in pts {
        let _ = write!(d, "{:.2},{:.2} ", fr.px(x), fr.py(y));
    }
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
        d.trim_end()
    );
}

fn legend(s: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * i as f64;
        let x = W - MARGIN - 150.0;
        let _ = writeln!(
            s,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{}</text>",
            x + 20.0,
            COLORS[i % COLORS.len()],
            x + 26.0,
            y + 4.0,
            escape(l)
        );
    }
}

/// Log-log plot of profiles `(label, r, f̊)`; nonpositive values are skipped.
pub fn profile_plot(title: &str, series: &[(&str, &[f64], &[f64])], timestamp: Option<&str>) -> String {
    let logs: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, r, v)| {
            r.iter()
                .zip(v.iter())
                .filter(|(a, b)| **a > 0.0 && **b > 0.0)
                .map(|(a, b)| (a.log10(), b.log10()))
                .collect()
        })
        .collect();
    let all = logs.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-3.0, -1.0, -1.0, 0.0);
    }
    let fr = Frame::new(x0.floor(), x1.ceil(), y0.floor(), y1.ceil());
    let mut s = header(title, timestamp);
    axes(&mut s, &fr, "r", "max variation over the ball", true);
    for (i, pts) in logs.iter().enumerate() {
        polyline(&mut s, &fr, pts.iter().copied(), COLORS[i % COLORS.len()], 2.0);
    }
    let labels: Vec<&str> = series.iter().map(|(l, _, _)| *l).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    s
}

/// Segments of the `level` set of node values `z[j·nx + i]`, in grid units.
pub fn marching_squares(z: &[f64], nx: usize, ny: usize, level: f64) -> Vec<[(f64, f64); 2]> {
    let at = |i: usize, j: usize| z[j * nx + i];
    let mut out = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corners counterclockwise from the lower left
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = c.map(|(a, b)| at(a, b));
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let inside = v.map(|x| x >= level);
            // edge e joins corner e and corner e+1
            let cross = |e: usize| -> Option<(f64, f64)> {
                let (a, b) = (e, (e + 1) % 4);
                if inside[a] == inside[b] {
                    return None;
                }
                let t = (level - v[a]) / (v[b] - v[a]);
                let (pa, pb) = (c[a], c[b]);
                Some((
                    pa.0 as f64 + t * (pb.0 as f64 - pa.0 as f64),
                    pa.1 as f64 + t * (pb.1 as f64 - pa.1 as f64),
                ))
            };
            let e: Vec<Option<(f64, f64)>> = (0..4).map(cross).collect();
            let hits = e.iter().filter(|p| p.is_some()).count();
            if hits == 2 {
                let p: Vec<(f64, f64)> = e.iter().flatten().copied().collect();
                out.push([p[0], p[1]]);
            } else if hits == 4 {
                let center = v.iter().sum::<f64>() / 4.0;
                let pairs = if (center >= level) == inside[0] {
                    [(0, 1), (2, 3)]
                } else {
                    [(3, 0), (1, 2)]
                };
                for (a, b) in pairs {
                    out.push([e[a].unwrap(), e[b].unwrap()]);
                }
            }
        }
    }
    out
}

/// Log-spaced levels between `hi·1e-6` (or the smallest positive value) and `hi`.
fn contour_levels(z: &[f64], hi: f64, count: usize) -> Vec<f64> {
    let lo_pos = z.iter().copied().filter(|v| *v > 0.0 && v.is_finite()).fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || !lo_pos.is_finite() {
        return vec![];
    }
    let lo = lo_pos.max(hi * 1e-6);
    if lo >= hi {
        return vec![hi];
    }
    (0..count)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * (k as f64 + 0.5) / count as f64).exp())
        .collect()
}

/// Trajectory of a 2D objective over its level curves.
pub fn trajectory_plot(title: &str, f: &Objective, states: &[Vec<f64>], timestamp: Option<&str>) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in states {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = |a: f64, b: f64| {
        let d = ((b - a) * 0.15).max(0.1);
        (a - d, b + d)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let fr = Frame::new(x0, x1, y0, y1);
    let n = CONTOUR_GRID;
    let gx = |i: f64| fr.x0 + (fr.x1 - fr.x0) * i / (n - 1) as f64;
    let gy = |j: f64| fr.y0 + (fr.y1 - fr.y0) * j / (n - 1) as f64;
    let mut z = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            z.push(f.eval(&[gx(i as f64), gy(j as f64)]));
        }
    }
    let f_top = states.iter().map(|p| f.eval(p)).fold(0.0f64, f64::max);
    let grid_top = z.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let hi = if f_top > 0.0 { f_top.min(grid_top) } else { grid_top };

    let mut s = header(title, timestamp);
    let _ = writeln!(s, "<g stroke=\"#999999\" stroke-width=\"0.7\" fill=\"none\">");
    for level in contour_levels(&z, hi, 14) {
        let mut d = String::new();
        for [a, b] in marching_squares(&z, n, n, level) {
            let _ = write!(
                d,
                "M{:.2} {:.2}L{:.2} {:.2}",
                fr.px(gx(a.0)),
                fr.py(gy(a.1)),
                fr.px(gx(b.0)),
                fr.py(gy(b.1))
            );
        }
        if !d.is_empty() {
            let _ = writeln!(s, "<path d=\"{d}\"/>");
        }
    }
    s.push_str("</g>\n");
    axes(&mut s, &fr, "x1", "x2", false);
    polyline(&mut s, &fr, states.iter().map(|p| (p[0], p[1])), COLORS[1], 1.5);
    if let (Some(a), Some(b)) = (states.first(), states.last()) {
        for (p, c) in [(a, COLORS[0]), (b, COLORS[2])] {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{c}\"/>", fr.px(p[0]), fr.py(p[1]));
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Coordinates against time, for dimensions other than two.
pub fn series_plot(title: &str, times: &[f64], states: &[Vec<f64>], timestamp: Option<&str>) -> String {
    let n = states.first().map_or(0, Vec::len);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in states {
        for v in p {
            y0 = y0.min(*v);
            y1 = y1.max(*v);
        }
    }
    let t0 = times.first().copied().unwrap_or(0.0);
    let t1 = times.last().copied().unwrap_or(1.0);
    let fr = Frame::new(t0, t1, y0, y1);
    let mut s = header(title, timestamp);
    axes(&mut s, &fr, "t", "x", false);
    let labels: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    for i in 0..n {
        polyline(&mut s, &fr, times.iter().zip(states).map(|(t, p)| (*t, p[i])), COLORS[i % COLORS.len()], 1.5);
    }
    legend(&mut s, &labels.iter().map(String::as_str).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour() {
        let n = 65;
        let c = (n - 1) as f64 / 2.0;
        let z: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = ((k % n) as f64 - c, (k / n) as f64 - c);
                i * i + j * j
            })
            .collect();
        let segs = marching_squares(&z, n, n, 400.0);
        assert!(!segs.is_empty());
        for s in &segs {
            for p in s {
                let r = ((p.0 - c).powi(2) + (p.1 - c).powi(2)).sqrt();
                assert!((r - 20.0).abs() < 0.05, "{r}");
            }
        }
    }

    #[test]
    fn saddle_cell_gives_two_segments() {
        let z = [1.0, 0.0, 1.0, 0.0];
        // corners: (0,0)=1, (1,0)=0, (0,1)=1, (1,1)=0 is not a saddle; use a checkerboard
        let checker = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(marching_squares(&z, 2, 2, 0.5).len(), 1);
        assert_eq!(marching_squares(&checker, 2, 2, 0.5).len(), 2);
    }

    #[test]
    fn plots_are_deterministic() {
        let f = flatlab_core::build_catalog_objective("4th", &[]).unwrap();
        let states = vec![vec![3.2, 0.6], vec![1.0, 0.1], vec![0.5, 0.0]];
        let a = trajectory_plot("t", &f, &states, None);
        assert_eq!(a, trajectory_plot("t", &f, &states, None));
        assert!(a.contains("<path d=\"M") && !a.contains("generated"));
        let r = [1e-3, 1e-2, 1e-1];
        let v = [1e-6, 1e-4, 1e-2];
        let p = profile_plot("p", &[("x", &r, &v)], Some("now"));
        assert!(p.contains("<!-- generated now -->") && p.contains("1e-2"));
    }
}
