use super::EquityCurve;
use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of one or more equity curves on a log10 y-axis.
pub fn equity_svg(title: &str, series: &[(&str, &EquityCurve)]) -> String {
    let paths: Vec<Vec<f64>> = series.iter().map(|(_, c)| c.path()).collect();
    let len = paths.iter().map(|p| p.len()).max().unwrap_or(0).max(2);
    let logs = paths.iter().flatten().filter(|v| **v > 0.0).map(|v| v.log10());
    let (mut lo, mut hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-9 {
        lo -= 0.005;
        hi += 0.005;
    }
    let x = |t: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * t as f64 / (len - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v.log10() - lo) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{m} {m} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (label, value) in [(hi, HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN)), (lo, HEIGHT - MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{:.4e}</text>"#,
            MARGIN - 4.0,
            value + 3.0,
            10f64.powf(label)
        );
    }
    for (k, ((name, _), path)) in series.iter().zip(&paths).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut points = String::new();
        for (t, v) in path.iter().enumerate().filter(|(_, v)| **v > 0.0) {
            let _ = write!(points, "{:.2},{:.2} ", x(t), y(*v));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            points.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::hourly_timestamps;
    use chrono::DateTime;

    #[test]
    fn one_polyline_per_series() {
        let ts = hourly_timestamps(DateTime::UNIX_EPOCH, 3);
        let a = EquityCurve::from_equity(100.0, 0.0, ts.clone(), vec![110.0, 121.0, 100.0], vec![0.0; 3]).unwrap();
        let b = EquityCurve::from_equity(100.0, 0.0, ts, vec![100.0; 3], vec![0.0; 3]).unwrap();
        let svg = equity_svg("a < b", &[("up", &a), ("flat", &b)]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        // log axis: 100 and 121 at the extremes
        assert!(svg.contains("50.00,350.00"));
    }
}
