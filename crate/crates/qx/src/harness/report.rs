//! Report emission: the sweep table as CSV, the decile table when the
//! analysis ran, and one self-contained SVG chart of tau against K per
//! fraction. Identical results produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expansion::write_decile_csv;
use crate::harness::sweep::{SweepResult, SweepRow};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 640.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 470.0;

pub fn write_sweep_csv(w: &mut impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record([
        "seed",
        "fraction",
        "K",
        "tau_baseline",
        "tau_expanded",
        "n_pseudo",
        "n_zero_queries",
    ])?;
    for row in rows {
        out.write_record([
            row.seed.to_string(),
            format!("{:.9}", row.fraction),
            format!("{:.9}", row.k),
            format!("{:.9}", row.tau_baseline),
            format!("{:.9}", row.tau_expanded),
            row.n_pseudo.to_string(),
            row.n_zero_queries.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Chart one fraction's rows: a polyline of tau_expanded over K per seed,
/// a dashed line per seed at its tau_baseline, axes, and a legend.
fn render_tau_svg(fraction: f64, rows: &[SweepRow]) -> String {
    let mut by_seed: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        by_seed.entry(row.seed).or_default().push(row);
    }
    for series in by_seed.values_mut() {
        series.sort_by(|a, b| a.k.total_cmp(&b.k));
    }

    let ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
    let (k_min, k_max) = bounds(&ks);
    let taus: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.tau_baseline, r.tau_expanded])
        .collect();
    let (t_lo, t_hi) = bounds(&taus);
    let pad = ((t_hi - t_lo) * 0.05).max(0.02);
    let (t_lo, t_hi) = (t_lo - pad, t_hi + pad);

    let x = |k: f64| -> f64 {
        if k_max == k_min {
            (LEFT + RIGHT) / 2.0
        } else {
            LEFT + (k - k_min) / (k_max - k_min) * (RIGHT - LEFT)
        }
    };
    let y = |t: f64| -> f64 { BOTTOM - (t - t_lo) / (t_hi - t_lo) * (BOTTOM - TOP) };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-family="monospace" font-size="14">Kendall tau vs K, qrel fraction {}</text>"#,
        LEFT, fraction
    );

    for i in 0..=4 {
        let t = t_lo + (t_hi - t_lo) * f64::from(i) / 4.0;
        let gy = y(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{gy:.2}" x2="{RIGHT:.2}" y2="{gy:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="end">{t:.3}</text>"#,
            LEFT - 6.0,
            gy + 4.0
        );
    }
    let mut k_ticks: Vec<f64> = ks.clone();
    k_ticks.sort_by(f64::total_cmp);
    k_ticks.dedup();
    for &k in &k_ticks {
        let gx = x(k);
        let _ = writeln!(
            svg,
            r##"<line x1="{gx:.2}" y1="{BOTTOM:.2}" x2="{gx:.2}" y2="{:.2}" stroke="#999999"/>"##,
            BOTTOM + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{gx:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="middle">{k}</text>"#,
            BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{BOTTOM:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT:.2}" y1="{BOTTOM:.2}" x2="{RIGHT:.2}" y2="{BOTTOM:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12" text-anchor="middle">K (top percent)</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 38.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-family="monospace" font-size="12" transform="rotate(-90 18 {:.2})" text-anchor="middle">Kendall tau</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    for (i, (seed, series)) in by_seed.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let baseline = series[0].tau_baseline;
        let by = y(baseline);
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT:.2}" y1="{by:.2}" x2="{RIGHT:.2}" y2="{by:.2}" stroke="{color}" stroke-dasharray="6 4" stroke-width="1"/>"#
        );
        let points: Vec<String> = series
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.k), y(r.tau_expanded)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for r in series {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x(r.k),
                y(r.tau_expanded)
            );
        }
        let ly = TOP + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            RIGHT + 14.0,
            ly,
            RIGHT + 34.0,
            ly
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11">seed {seed}</text>"#,
            RIGHT + 40.0,
            ly + 4.0
        );
    }
    let ly = TOP + 14.0 * by_seed.len() as f64;
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
        RIGHT + 14.0,
        ly,
        RIGHT + 34.0,
        ly
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11">baseline</text>"#,
        RIGHT + 40.0,
        ly + 4.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Shortest exact decimal form, for filenames ("0.05", not "0.050000000").
fn fraction_label(fraction: f64) -> String {
    format!("{fraction}")
}

/// Write sweep.csv, deciles.csv when present, and one SVG per fraction.
/// Returns the written paths in emission order.
pub fn emit_report(result: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() {
        return Err(Error::InvalidParameter(
            "no completed sweep rows to report".to_string(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).with_path(out_dir))?;
    let mut written = Vec::new();

    let sweep_path = out_dir.join("sweep.csv");
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &result.rows)?;
    std::fs::write(&sweep_path, buf).map_err(|e| Error::from(e).with_path(&sweep_path))?;
    written.push(sweep_path);

    if let Some(deciles) = &result.deciles {
        let path = out_dir.join("deciles.csv");
        let mut buf = Vec::new();
        write_decile_csv(&mut buf, deciles)?;
        std::fs::write(&path, buf).map_err(|e| Error::from(e).with_path(&path))?;
        written.push(path);
    }

    let mut by_fraction: BTreeMap<u64, (f64, Vec<SweepRow>)> = BTreeMap::new();
    for row in &result.rows {
        by_fraction
            .entry(row.fraction.to_bits())
            .or_insert_with(|| (row.fraction, Vec::new()))
            .1
            .push(row.clone());
    }
    for (fraction, rows) in by_fraction.values() {
        let path = out_dir.join(format!("tau_vs_k_f{}.svg", fraction_label(*fraction)));
        let svg = render_tau_svg(*fraction, rows);
        std::fs::write(&path, svg).map_err(|e| Error::from(e).with_path(&path))?;
        written.push(path);
    }
    Ok(written)
}
