//! Self-contained SVG heatmaps of one cell statistic over the (n, k) grid.

use std::fmt::Write as _;
use std::str::FromStr;

use super::csv_io::CellRow;
use super::CliError;

const CELL: f64 = 18.0;
const LEFT: f64 = 56.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 44.0;
const LEGEND_WIDTH: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    TdWinRatio,
    BoundPredictionRatio,
    MeanTdOverBr,
    MeanRelTd,
    MeanRelBr,
}

impl Stat {
    pub const ALL: [Stat; 5] = [
        Stat::TdWinRatio,
        Stat::BoundPredictionRatio,
        Stat::MeanTdOverBr,
        Stat::MeanRelTd,
        Stat::MeanRelBr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stat::TdWinRatio => "td_win_ratio",
            Stat::BoundPredictionRatio => "bound_prediction_ratio",
            Stat::MeanTdOverBr => "mean_td_over_br",
            Stat::MeanRelTd => "mean_rel_td",
            Stat::MeanRelBr => "mean_rel_br",
        }
    }

    pub fn value(self, row: &CellRow) -> f64 {
        match self {
            Stat::TdWinRatio => row.td_win_ratio,
            Stat::BoundPredictionRatio => row.bound_prediction_ratio,
            Stat::MeanTdOverBr => row.mean_td_over_br,
            Stat::MeanRelTd => row.mean_rel_td,
            Stat::MeanRelBr => row.mean_rel_br,
        }
    }

    /// Indicator means live in [0, 1] and use a fixed color domain.
    fn fixed_domain(self) -> Option<(f64, f64)> {
        matches!(self, Stat::TdWinRatio | Stat::BoundPredictionRatio).then_some((0.0, 1.0))
    }
}

impl FromStr for Stat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Stat::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Stat::ALL.iter().map(|s| s.name()).collect();
            CliError::Input(format!("unknown stat {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

// viridis, sampled at five stops
const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (t.floor() as usize).min(PALETTE.len() - 2);
    let f = t - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn transform(&self, x: f64) -> Option<f64> {
        if !x.is_finite() || (self.log && x <= 0.0) {
            None
        } else if self.log {
            Some(x.log10())
        } else {
            Some(x)
        }
    }

    fn position(&self, x: f64) -> Option<f64> {
        let t = self.transform(x)?;
        let (lo, hi) = (self.transform(self.lo)?, self.transform(self.hi)?);
        Some(if hi > lo { (t - lo) / (hi - lo) } else { 0.5 })
    }
}

/// γ values present in a cell table, sorted.
pub fn available_gammas(rows: &[CellRow]) -> Vec<f64> {
    let mut g: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Renders `stat` for the cells at discount `gamma` (matched within 1e-9).
///
/// Cells whose statistic is undefined (every trial excluded) are hatched.
pub fn render(rows: &[CellRow], stat: Stat, gamma: f64, log: bool) -> Result<String, CliError> {
    let cells: Vec<&CellRow> = rows.iter().filter(|r| (r.gamma - gamma).abs() <= 1e-9).collect();
    if cells.is_empty() {
        let avail: Vec<String> = available_gammas(rows).iter().map(|g| g.to_string()).collect();
        return Err(CliError::Input(format!(
            "no cells for gamma {gamma}; available: {}",
            avail.join(", ")
        )));
    }
    let n_min = cells.iter().map(|c| c.n).min().unwrap_or(0);
    let n_max = cells.iter().map(|c| c.n).max().unwrap_or(0);
    let k_max = cells.iter().map(|c| c.k).max().unwrap_or(0);

    let finite: Vec<f64> = cells
        .iter()
        .map(|c| stat.value(c))
        .filter(|x| x.is_finite() && (!log || *x > 0.0))
        .collect();
    let (lo, hi) = stat.fixed_domain().unwrap_or_else(|| {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) }
    });
    let scale = Scale { lo, hi, log };

    let cols = (n_max - n_min + 1) as f64;
    let width = LEFT + cols * CELL + LEGEND_WIDTH;
    let height = TOP + k_max as f64 * CELL + BOTTOM;
    let grid_bottom = TOP + k_max as f64 * CELL;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><path d="M0,6 L6,0" stroke="#888888" stroke-width="1"/></pattern>"##
    );
    let _ = writeln!(svg, r#"<linearGradient id="legend" x1="0" y1="1" x2="0" y2="0">"#);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let _ = writeln!(svg, r#"<stop offset="{t}" stop-color="{}"/>"#, color(t));
    }
    let _ = writeln!(svg, "</linearGradient></defs>");
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="20" font-family="sans-serif" font-size="13">{} (gamma = {gamma}{})</text>"#,
        stat.name(),
        if log { ", log scale" } else { "" }
    );

    for c in &cells {
        let x = LEFT + (c.n - n_min) as f64 * CELL;
        let y = grid_bottom - c.k as f64 * CELL;
        let value = stat.value(c);
        let fill = match scale.position(value) {
            Some(t) => color(t),
            None => "url(#hatch)".to_string(),
        };
        let _ = writeln!(
            svg,
            r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"><title>n={} k={} {}={}</title></rect>"##,
            c.n,
            c.k,
            stat.name(),
            value
        );
    }

    for n in n_min..=n_max {
        if (n - n_min) % 5 == 0 || n == n_max {
            let x = LEFT + (n - n_min) as f64 * CELL + CELL / 2.0;
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{n}</text>"#,
                grid_bottom + 14.0
            );
        }
    }
    for k in 1..=k_max {
        if (k - 1) % 5 == 0 || k == k_max {
            let y = grid_bottom - k as f64 * CELL + CELL / 2.0 + 3.0;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="10" text-anchor="end">{k}</text>"#,
                LEFT - 6.0
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">n (states)</text>"#,
        LEFT + cols * CELL / 2.0,
        grid_bottom + 32.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle" transform="rotate(-90 14 {})">k (features)</text>"#,
        TOP + k_max as f64 * CELL / 2.0,
        TOP + k_max as f64 * CELL / 2.0
    );

    let lx = LEFT + cols * CELL + 16.0;
    let lh = (k_max as f64 * CELL).max(60.0);
    let _ = writeln!(
        svg,
        r##"<path d="M{lx},{TOP} h14 v{lh} h-14 z" fill="url(#legend)" stroke="#444444" stroke-width="0.5"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10">{}</text>"#,
        lx + 18.0,
        TOP + 8.0,
        super::csv_io::fmt_sig(hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10">{}</text>"#,
        lx + 18.0,
        TOP + lh,
        super::csv_io::fmt_sig(lo)
    );
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
