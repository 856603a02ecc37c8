//! Hand-rolled SVG 1.1 output. No plotting dependency: every byte of the
//! file is a deterministic function of the data, which makes the plots
//! diffable and usable in golden tests.

use crate::sensitivity::IndexEstimate;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

/// At most this many polyline vertices per curve; longer fields are
/// strided deterministically.
const MAX_POINTS: usize = 2000;

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn header(title: &str, meta: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <!-- {meta} -->\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{x}\" y=\"28\" font-family=\"sans-serif\" font-size=\"17\" \
         text-anchor=\"middle\">{title}</text>\n",
        x = MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
    )
}

fn axes(x_label: &str, y_label: &str) -> String {
    let x1 = MARGIN_L;
    let x2 = WIDTH - MARGIN_R;
    let y1 = MARGIN_T;
    let y2 = HEIGHT - MARGIN_B;
    format!(
        "<line x1=\"{x1}\" y1=\"{y2}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"black\"/>\n\
         <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y2}\" stroke=\"black\"/>\n\
         <text x=\"{xm}\" y=\"{yb}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"18\" y=\"{ym}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {ym})\">{y_label}</text>\n",
        xm = x1 + (x2 - x1) / 2.0,
        yb = HEIGHT - 12.0,
        ym = y1 + (y2 - y1) / 2.0,
    )
}

fn x_ticks(lo: f64, hi: f64) -> String {
    let mut out = String::new();
    let y2 = HEIGHT - MARGIN_B;
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let v = lo + f * (hi - lo);
        let x = MARGIN_L + f * (WIDTH - MARGIN_L - MARGIN_R);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y2}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            y2 + 5.0,
            y2 + 18.0,
            fmt(v)
        ));
    }
    out
}

/// One snapshot of the five fields over space. Each curve is normalized
/// by its own maximum so very differently scaled fields share one frame;
/// the legend carries the true maxima.
pub fn snapshot_chart(
    t: f64,
    length: f64,
    fields: &[(&str, &[f64])],
    meta: &str,
) -> String {
    let mut svg = header(&format!("Field snapshot at t = {} days", fmt(t)), meta);
    svg.push_str(&axes("x (m)", "field / field max"));
    svg.push_str(&x_ticks(0.0, length));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    // y ticks 0..1 after normalization
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let y = HEIGHT - MARGIN_B - f * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L,
            MARGIN_L - 9.0,
            y + 4.0,
            fmt(f)
        ));
    }
    for (idx, (name, values)) in fields.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let n = values.len();
        let max = values.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        let stride = n.div_ceil(MAX_POINTS);
        let mut points = String::new();
        let mut j = 0;
        while j < n {
            let x = MARGIN_L + (j as f64 + 0.5) / n as f64 * plot_w;
            let y = HEIGHT - MARGIN_B - (values[j] * scale).clamp(0.0, 1.0) * plot_h;
            points.push_str(&format!("{},{} ", fmt_coord(x), fmt_coord(y)));
            j += stride;
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        let ly = MARGIN_T + 18.0 + 20.0 * idx as f64;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{name} (max {})</text>\n",
            WIDTH - MARGIN_R + 40.0,
            WIDTH - MARGIN_R + 46.0,
            ly + 4.0,
            fmt(max),
            lx = WIDTH - MARGIN_R + 12.0,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Grouped bars of first-order and total-order indices per factor, with
/// bootstrap confidence whiskers.
pub fn sobol_bar_chart(
    factors: &[&str],
    first: &[IndexEstimate],
    total: &[IndexEstimate],
    meta: &str,
) -> String {
    let mut svg = header("First-order and total-order sensitivity indices", meta);
    svg.push_str(&axes("factor", "index"));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let y_min: f64 = first
        .iter()
        .chain(total)
        .map(|e| e.ci_low)
        .fold(0.0, f64::min)
        .min(0.0);
    let y_max: f64 = first
        .iter()
        .chain(total)
        .map(|e| e.ci_high)
        .fold(1.0, f64::max);
    let to_y = |v: f64| HEIGHT - MARGIN_B - (v - y_min) / (y_max - y_min) * plot_h;
    for k in 0..=5 {
        let v = y_min + k as f64 / 5.0 * (y_max - y_min);
        let y = to_y(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_L,
            WIDTH - MARGIN_R,
            MARGIN_L - 7.0,
            y + 4.0,
            fmt(v)
        ));
    }
    let zero_y = to_y(0.0);
    let group_w = plot_w / factors.len() as f64;
    let bar_w = group_w * 0.28;
    for (g, name) in factors.iter().enumerate() {
        let cx = MARGIN_L + (g as f64 + 0.5) * group_w;
        for (which, (est, color)) in [(&first[g], PALETTE[0]), (&total[g], PALETTE[1])]
            .into_iter()
            .enumerate()
        {
            let x = cx - bar_w - 3.0 + which as f64 * (bar_w + 6.0);
            let top = to_y(est.value.max(0.0));
            let bottom = to_y(est.value.min(0.0));
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>\n",
                fmt_coord(x),
                fmt_coord(top),
                fmt_coord(bar_w),
                fmt_coord((bottom - top).abs().max(0.5)),
            ));
            let wx = x + bar_w / 2.0;
            svg.push_str(&format!(
                "<line x1=\"{wx}\" y1=\"{}\" x2=\"{wx}\" y2=\"{}\" stroke=\"black\"/>\n",
                fmt_coord(to_y(est.ci_low)),
                fmt_coord(to_y(est.ci_high)),
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
             text-anchor=\"middle\">{name}</text>\n",
            HEIGHT - MARGIN_B + 20.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{zero_y}\" x2=\"{}\" y2=\"{zero_y}\" stroke=\"black\"/>\n",
        MARGIN_L,
        WIDTH - MARGIN_R
    ));
    for (idx, label) in ["first-order", "total-order"].into_iter().enumerate() {
        let ly = MARGIN_T + 18.0 + 20.0 * idx as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            WIDTH - MARGIN_R + 12.0,
            ly - 10.0,
            PALETTE[idx],
            WIDTH - MARGIN_R + 32.0,
            ly + 2.0,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_chart_is_deterministic_and_wellformed() {
        let b: Vec<f64> = (0..100).map(|j| (j as f64 / 10.0).sin().abs() * 1e6).collect();
        let s: Vec<f64> = (0..100).map(|_| 5.0).collect();
        let a = snapshot_chart(4.0, 1000.0, &[("B", &b), ("S", &s)], "seed=1");
        let b2 = snapshot_chart(4.0, 1000.0, &[("B", &b), ("S", &s)], "seed=1");
        assert_eq!(a, b2);
        assert!(a.starts_with("<?xml"));
        assert!(a.contains("seed=1"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn bar_chart_handles_negative_estimates() {
        let est = |v: f64| IndexEstimate {
            value: v,
            ci_low: v - 0.05,
            ci_high: v + 0.05,
            std_err: 0.02,
        };
        let svg = sobol_bar_chart(
            &["d2", "mu", "n", "r"],
            &[est(0.05), est(0.2), est(0.7), est(-0.01)],
            &[est(0.06), est(0.25), est(0.72), est(0.02)],
            "seed=0",
        );
        assert!(svg.contains("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1 + 8 + 2); // background + bars + legend
    }
}
