//! Minimal SVG line plot: fixed 800×600 viewBox, linear axes, one polyline
//! per state variable, text legend. No dependencies, deterministic output.

use fracvar::numfrac::Trajectory;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 40.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub fn render(traj: &Trajectory) -> String {
    let n = traj.states.len();
    let t_min = traj.grid.t0;
    let t_max = traj.grid.node(n.saturating_sub(1));
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for row in &traj.states {
        for x in row {
            y_min = y_min.min(*x);
            y_max = y_max.max(*x);
        }
    }
    if !y_min.is_finite() || y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let x_of = |t: f64| MARGIN_L + (t - t_min) / (t_max - t_min).max(1e-300) * (WIDTH - MARGIN_L - MARGIN_R);
    let y_of = |y: f64| HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // axis labels
    out.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"{:.2}\" font-size=\"12\">{t_min}</text>\n",
        HEIGHT - MARGIN_B + 16.0
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{t_max}</text>\n",
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B + 16.0
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{y_min:.4}</text>\n",
        MARGIN_L - 6.0,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{y_max:.4}</text>\n",
        MARGIN_L - 6.0,
        MARGIN_T + 10.0
    ));

    for (m, var) in traj.state_vars.iter().enumerate() {
        let color = PALETTE[m % PALETTE.len()];
        let mut points = String::new();
        for (k, row) in traj.states.iter().enumerate() {
            let t = traj.grid.node(k);
            points.push_str(&format!("{:.2},{:.2} ", x_of(t), y_of(row[m])));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"{color}\">{var}</text>\n",
            WIDTH - MARGIN_R - 60.0,
            MARGIN_T + 16.0 * (m as f64 + 1.0)
        ));
    }
    out.push_str("</svg>\n");
    out
}
