//! Minimal SVG line plots of `t` against a value. Presentational only.

use std::fmt::Write as _;

use soliton_core::GridFunction;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const PAD: f64 = 50.0;

/// Renders `u` as a polyline. With `log` the vertical axis is `log10|u|` and
/// zero values are dropped.
pub fn line_plot(u: &GridFunction, title: &str, log: bool) -> String {
    let pts: Vec<(f64, f64)> = u
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| !log || **v != 0.0)
        .map(|(i, &v)| (u.t(i), if log { v.abs().log10() } else { v }))
        .collect();
    let (t0, t1) = (u.grid().t_min(), u.grid().t_max());
    let (mut lo, mut hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    if pts.is_empty() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x = |t: f64| PAD + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * PAD);
    let y = |v: f64| HEIGHT - PAD - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (xl, xr, yb, yt) = (PAD, WIDTH - PAD, HEIGHT - PAD, PAD);
    let _ = writeln!(
        s,
        r#"<path d="M{xl},{yt} L{xl},{yb} L{xr},{yb}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let label = |s: &mut String, px: f64, py: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{py:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{text}</text>"#
        );
    };
    label(&mut s, xl, yb + 16.0, "middle", format!("{t0}"));
    label(&mut s, xr, yb + 16.0, "middle", format!("{t1}"));
    label(&mut s, WIDTH / 2.0, yb + 32.0, "middle", "t".into());
    let unit = if log { "log10 |value|" } else { "value" };
    label(&mut s, xl - 4.0, yb, "end", format!("{lo:.3e}"));
    label(&mut s, xl - 4.0, yt + 4.0, "end", format!("{hi:.3e}"));
    label(&mut s, xl, yt - 8.0, "start", unit.into());

    let mut d = String::new();
    for (k, &(t, v)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x(t), y(v));
    }
    let _ = writeln!(
        s,
        r#"<path d="{d}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
