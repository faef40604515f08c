//! Self-contained SVG emitters for design grids.

use std::fmt::Write;

use twolevel_core::design::{Bins, DesignGrid, Surface};
use twolevel_core::risk::{Axis, Target};

const CELL: f64 = 36.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_B: f64 = 56.0;
const MARGIN_T: f64 = 40.0;
const LEGEND_W: f64 = 190.0;

const COLOR_N: &str = "#d95f02";
const COLOR_M: &str = "#1b9e77";

/// Nine-step sequential palette, light to dark.
const PALETTE: [&str; 9] = [
    "#fff7ec", "#fee8c8", "#fdd49e", "#fdbb84", "#fc8d59", "#ef6548", "#d7301f", "#b30000", "#7f0000",
];

struct Frame {
    cols: usize,
    rows: usize,
}

impl Frame {
    fn width(&self) -> f64 {
        MARGIN_L + self.cols as f64 * CELL + LEGEND_W
    }

    fn height(&self) -> f64 {
        MARGIN_T + self.rows as f64 * CELL + MARGIN_B
    }

    /// Top-left corner of cell `(col, row)`; row 0 is the bottom.
    fn corner(&self, col: usize, row: usize) -> (f64, f64) {
        (MARGIN_L + col as f64 * CELL, MARGIN_T + (self.rows - 1 - row) as f64 * CELL)
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">",
            w = self.width(),
            h = self.height()
        );
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
        let _ = writeln!(s, "<text x=\"{MARGIN_L}\" y=\"22\" font-size=\"14\">{}</text>", escape(title));
        s
    }

    fn axes(&self, s: &mut String, n_axis: &[u64], m_axis: &[u64]) {
        let base = MARGIN_T + self.rows as f64 * CELL;
        for (i, n) in n_axis.iter().enumerate() {
            let x = MARGIN_L + (i as f64 + 0.5) * CELL;
            let _ = writeln!(s, "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{n}</text>", base + 14.0);
        }
        for (j, m) in m_axis.iter().enumerate() {
            let y = MARGIN_T + (self.rows - 1 - j) as f64 * CELL + CELL * 0.5 + 4.0;
            let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\">{m}</text>", MARGIN_L - 6.0);
        }
        let mid_x = MARGIN_L + self.cols as f64 * CELL * 0.5;
        let _ = writeln!(s, "<text x=\"{mid_x}\" y=\"{}\" text-anchor=\"middle\">n (points per subject)</text>", base + 36.0);
        let mid_y = MARGIN_T + self.rows as f64 * CELL * 0.5;
        let _ = writeln!(
            s,
            "<text x=\"16\" y=\"{mid_y}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {mid_y})\">m (subjects)</text>"
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Quiver plot: one unit arrow per design along the negative cost-weighted
/// gradient, colored by the steeper axis.
pub fn gradient_map_svg(grid: &DesignGrid, target: Target) -> String {
    let frame = Frame { cols: grid.n_axis.len(), rows: grid.m_axis.len() };
    let name = match target {
        Target::G => "g",
        Target::F => "f",
    };
    let mut s = frame.open(&format!(
        "Negative rate gradient for {name} (alpha={}, alpha_tilde={})",
        grid.alpha, grid.alpha_tilde
    ));
    frame.axes(&mut s, &grid.n_axis, &grid.m_axis);
    let half = CELL * 0.38;
    for p in &grid.points {
        let col = grid.n_axis.binary_search(&p.n).expect("point on axis");
        let row = grid.m_axis.binary_search(&p.m).expect("point on axis");
        let gr = match target {
            Target::G => p.grad_g,
            Target::F => p.grad_f,
        };
        let (dx, dy) = (-gr.d_n, -gr.d_m);
        let norm = dx.hypot(dy);
        if !(norm > 0.0 && norm.is_finite()) {
            continue;
        }
        let (ux, uy) = (dx / norm, -dy / norm);
        let (x0, y0) = frame.corner(col, row);
        let (cx, cy) = (x0 + CELL * 0.5, y0 + CELL * 0.5);
        let (tx, ty) = (cx - ux * half, cy - uy * half);
        let (hx, hy) = (cx + ux * half, cy + uy * half);
        let color = match gr.steeper {
            Axis::N => COLOR_N,
            Axis::M => COLOR_M,
        };
        let head = 6.0;
        let (px, py) = (-uy, ux);
        let (bx, by) = (hx - ux * head, hy - uy * head);
        let _ = writeln!(
            s,
            "<g stroke=\"{color}\" fill=\"{color}\"><line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke-width=\"1.6\"/><polygon points=\"{},{} {},{} {},{}\"/></g>",
            fmt(tx), fmt(ty), fmt(bx), fmt(by),
            fmt(hx), fmt(hy),
            fmt(bx + px * head * 0.5), fmt(by + py * head * 0.5),
            fmt(bx - px * head * 0.5), fmt(by - py * head * 0.5),
        );
    }
    let lx = MARGIN_L + frame.cols as f64 * CELL + 16.0;
    for (i, (color, label)) in [(COLOR_N, "steeper in n (below 45°)"), (COLOR_M, "steeper in m (above 45°)")]
        .iter()
        .enumerate()
    {
        let y = MARGIN_T + 10.0 + i as f64 * 20.0;
        let _ = writeln!(s, "<rect x=\"{lx}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>", y - 10.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\">{label}</text>", lx + 18.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Binned heatmap of a surface; blank cells are left unpainted.
pub fn heatmap_svg(surface: &Surface, bins: &Bins, title: &str) -> String {
    let frame = Frame { cols: surface.n_axis.len(), rows: surface.m_axis.len() };
    let mut s = frame.open(title);
    frame.axes(&mut s, &surface.n_axis, &surface.m_axis);
    let classes = bins.classes();
    let color_of = |c: usize| {
        let idx = if classes <= 1 { 0 } else { c * (PALETTE.len() - 1) / (classes - 1) };
        PALETTE[idx]
    };
    for row in 0..frame.rows {
        for col in 0..frame.cols {
            if let Some(v) = surface.get(col, row) {
                let (x, y) = frame.corner(col, row);
                let _ = writeln!(
                    s,
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"0.5\"><title>{}</title></rect>",
                    color_of(bins.class_of(v)),
                    fmt(v)
                );
            }
        }
    }
    let lx = MARGIN_L + frame.cols as f64 * CELL + 16.0;
    for c in 0..classes {
        let y = MARGIN_T + 10.0 + c as f64 * 18.0;
        let _ = writeln!(
            s,
            "<rect x=\"{lx}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\" stroke=\"#999999\" stroke-width=\"0.5\"/>",
            y - 10.0,
            color_of(c)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{y}\">[{}, {}]</text>",
            lx + 18.0,
            fmt(bins.edges[c]),
            fmt(bins.edges[c + 1])
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use twolevel_core::design::{enumerate_designs, Budget, Lattice};

    #[test]
    fn arrows_have_equal_length() {
        let grid = enumerate_designs(Budget::Product { budget: 5000.0 }, 0.5, 0.5, Lattice::LogSpaced { per_decade: 3 })
            .unwrap();
        let svg = gradient_map_svg(&grid, Target::F);
        let mut lengths = Vec::new();
        for line in svg.lines().filter(|l| l.contains("<line")) {
            let num = |key: &str| -> f64 {
                let start = line.find(&format!("{key}=\"")).unwrap() + key.len() + 2;
                line[start..].split('"').next().unwrap().parse().unwrap()
            };
            let (x1, y1) = (num("x1"), num("y1"));
            let tip = line.split("points=\"").nth(1).unwrap().split(' ').next().unwrap();
            let (hx, hy) = tip.split_once(',').unwrap();
            let (hx, hy): (f64, f64) = (hx.parse().unwrap(), hy.parse().unwrap());
            lengths.push((hx - x1).hypot(hy - y1));
        }
        assert_eq!(lengths.len(), grid.points.len());
        for l in &lengths {
            assert!((l - lengths[0]).abs() < 5e-3, "{l} vs {}", lengths[0]);
        }
    }

    #[test]
    fn constant_surface_single_color() {
        let grid = enumerate_designs(Budget::Product { budget: 100.0 }, 1.0, 1.0, Lattice::LogSpaced { per_decade: 2 })
            .unwrap();
        let mut surface = Surface::log_rate(&grid, Target::G);
        surface.cells.iter_mut().flatten().for_each(|v| *v = 1.5);
        let bins = Bins::quantile(&surface.present().map(|c| c.2).collect::<Vec<_>>(), 9).unwrap();
        let svg = heatmap_svg(&surface, &bins, "flat");
        let fills: std::collections::BTreeSet<&str> = svg
            .lines()
            .filter(|l| l.contains("<title>"))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(fills.len(), 1);
    }
}
