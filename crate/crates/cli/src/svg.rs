//! Log-error plot written by hand.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `log10 ‖θ_n − θ⋆‖` against `n`, with the reference line
/// `log10 e_0 + n log10 ρ̄` when `ρ̄ > 0`. Zero errors are dropped.
pub fn error_plot(title: &str, errors: &[f64], rho_sup: f64) -> String {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(n, e)| (n as f64, e.log10()))
        .collect();
    let n_max = (errors.len().max(2) - 1) as f64;
    let (mut lo, mut hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !lo.is_finite() {
        lo = -1.0;
        hi = 0.0;
    }
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let x = |n: f64| LEFT + (W - LEFT - RIGHT) * n / n_max;
    let y = |v: f64| TOP + (H - TOP - BOTTOM) * (hi - v) / (hi - lo);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    // Axes and decade ticks.
    writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{}" stroke="black" fill="none"/>"#,
        H - BOTTOM,
        W - RIGHT
    )
    .unwrap();
    let mut d = lo as i64;
    while d as f64 <= hi {
        let yy = y(d as f64);
        writeln!(
            s,
            r#"<line x1="{}" y1="{yy:.2}" x2="{LEFT}" y2="{yy:.2}" stroke="black"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{d}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yy + 4.0
        )
        .unwrap();
        d += 1;
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">n</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 8.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{LEFT}" y="{}" font-family="sans-serif" font-size="11">0</text><text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        H - BOTTOM + 15.0,
        W - RIGHT,
        H - BOTTOM + 15.0,
        n_max as usize
    )
    .unwrap();

    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|&(n, v)| format!("{:.2},{:.2}", x(n), y(v))).collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
            path.join(" ")
        )
        .unwrap();
    }
    if rho_sup > 0.0 && rho_sup.is_finite() {
        if let Some(&(n0, v0)) = pts.first() {
            // Clip the reference line where it leaves the plotted range.
            let slope = rho_sup.log10();
            let n_end = if slope < 0.0 {
                (n0 + (lo - v0) / slope).min(n_max)
            } else {
                n_max
            };
            let v_end = (v0 + slope * (n_end - n0)).min(hi);
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
                x(n0),
                y(v0),
                x(n_end),
                y(v_end)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end" fill="firebrick">reference rate {rho_sup:.4}</text>"#,
            W - RIGHT,
            TOP + 12.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_has_polyline_reference_and_decades() {
        let errors: Vec<f64> = (0..40).map(|n| 0.6f64.powi(n)).collect();
        let s = error_plot("gd <diag>", &errors, 0.6);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("<polyline"));
        assert!(s.contains("stroke-dasharray"));
        assert!(s.contains(">1e-9<") && s.contains(">1e0<"));
        assert!(s.contains("gd &lt;diag&gt;"));
    }

    #[test]
    fn degenerate_inputs_do_not_panic() {
        let s = error_plot("x", &[0.0], 0.0);
        assert!(s.contains("</svg>"));
        let s = error_plot("x", &[], 0.5);
        assert!(!s.contains("<polyline"));
    }
}
