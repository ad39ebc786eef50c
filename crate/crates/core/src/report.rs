//! CSV, JSON and SVG exports. Files always carry natural units; percent
//! scaling is a display option only.

use std::fmt::Write as _;

use crate::coordination::{GroupProfile, Metric};
use crate::error::Result;
use crate::prediction::PredictionGrid;
use crate::stats::{ComparisonReport, TimelineSeries};

pub const UNITS_HEADER: &str = "# units: natural\n";

/// Empty for undefined values; shortest round-tripping form otherwise.
pub fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_doc(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| crate::Error::InvalidDataset(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::InvalidDataset(format!("csv: {e}")))?;
    Ok(format!("{UNITS_HEADER}{}", String::from_utf8_lossy(&bytes)))
}

/// Eight marker rows then three aggregate rows.
pub fn profile_csv(p: &GroupProfile) -> Result<String> {
    let rows = Metric::all()
        .map(|m| {
            let v = p.value(m);
            vec![
                p.speaker_group.clone(),
                p.target_group.clone(),
                m.name().to_string(),
                num(v.mean),
                v.population.to_string(),
                v.n_exchanges.to_string(),
            ]
        })
        .collect();
    csv_doc(
        &["speaker_group", "target_group", "marker_or_aggregate", "mean", "population", "n_exchanges"],
        rows,
    )
}

pub fn comparison_csv(r: &ComparisonReport) -> Result<String> {
    let rows = r
        .entries
        .iter()
        .map(|e| {
            vec![
                r.group_a.clone(),
                r.group_b.clone(),
                e.metric.name().to_string(),
                num(e.mean_a),
                num(e.mean_b),
                num(e.test.as_ref().map(|t| t.t_stat)),
                num(e.test.as_ref().map(|t| t.p_value)),
                e.test.as_ref().map_or(String::new(), |t| t.stars.to_string()),
                num(e.boot_std_a),
                num(e.boot_std_b),
            ]
        })
        .collect();
    csv_doc(
        &["group_a", "group_b", "metric", "mean_a", "mean_b", "t", "p", "stars", "boot_std_a", "boot_std_b"],
        rows,
    )
}

pub fn timeline_csv(s: &TimelineSeries) -> Result<String> {
    let rows = s
        .buckets
        .iter()
        .map(|b| {
            vec![
                b.bucket.to_string(),
                num(b.as_speaker),
                b.speaker_population.to_string(),
                num(b.as_target),
                b.target_population.to_string(),
                num(b.as_speaker_smoothed3),
                num(b.as_target_smoothed3),
            ]
        })
        .collect();
    csv_doc(
        &[
            "bucket",
            "as_speaker",
            "speaker_population",
            "as_target",
            "target_population",
            "as_speaker_smoothed3",
            "as_target_smoothed3",
        ],
        rows,
    )
}

pub fn grid_csv(g: &PredictionGrid) -> Result<String> {
    let rows = g
        .cells
        .iter()
        .map(|c| {
            vec![
                c.train.clone(),
                c.test.clone().unwrap_or_default(),
                c.kind.name().to_string(),
                serde_json::to_value(c.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
                num(c.accuracy),
                c.n.to_string(),
                num(c.p_value),
                c.stars.to_string(),
            ]
        })
        .collect();
    csv_doc(&["train", "test", "kind", "status", "accuracy", "n", "p_value", "stars"], rows)
}

/// One named series of values over shared x positions, with optional error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub errors: Vec<Option<f64>>,
}

/// Generic plot data: one row per x, one column per series (plus `<name>_err`).
pub fn plot_data_csv(x_label: &str, xs: &[String], series: &[Series]) -> Result<String> {
    let mut header = vec![x_label.to_string()];
    for s in series {
        header.push(s.name.clone());
        header.push(format!("{}_err", s.name));
    }
    let rows = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut row = vec![x.clone()];
            for s in series {
                row.push(num(s.values.get(i).copied().flatten()));
                row.push(num(s.errors.get(i).copied().flatten()));
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_doc(&header, rows)
}

/// Series for a pair of profiles over all 11 metrics, with bootstrap errors
/// when a comparison is given.
pub fn comparison_series(r: &ComparisonReport) -> (Vec<String>, Vec<Series>) {
    let xs = r.entries.iter().map(|e| e.metric.name().to_string()).collect();
    let a = Series {
        name: r.group_a.clone(),
        values: r.entries.iter().map(|e| e.mean_a).collect(),
        errors: r.entries.iter().map(|e| e.boot_std_a).collect(),
    };
    let b = Series {
        name: r.group_b.clone(),
        values: r.entries.iter().map(|e| e.mean_b).collect(),
        errors: r.entries.iter().map(|e| e.boot_std_b).collect(),
    };
    (xs, vec![a, b])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

/// Grouped bar chart with error bars and optional star annotations per x.
pub fn bar_chart_svg(title: &str, xs: &[String], series: &[Series], stars: &[u8], percent: bool) -> String {
    let scale = if percent { 100.0 } else { 1.0 };
    let (w, h, left, top, bottom) = (80.0 + 70.0 * xs.len() as f64, 360.0, 60.0, 40.0, 90.0);
    let plot_h = h - top - bottom;
    let all = series.iter().flat_map(|s| {
        s.values
            .iter()
            .zip(s.errors.iter().chain(std::iter::repeat(&None)))
            .filter_map(|(v, e)| v.map(|v| (v, e.unwrap_or(0.0))))
    });
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (v, e) in all {
        lo = lo.min(v - e);
        hi = hi.max(v + e);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let y = |v: f64| top + plot_h * (hi - v) / (hi - lo);
    let group_w = 70.0;
    let bar_w = (group_w - 14.0) / series.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{left}" x2="{}" y1="{}" y2="{}" stroke="black"/>"#, w - 10.0, y(0.0), y(0.0));
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            left - 4.0,
            y(v) + 4.0,
            v * scale
        );
    }
    for (i, x) in xs.iter().enumerate() {
        let gx = left + 10.0 + group_w * i as f64;
        for (j, ser) in series.iter().enumerate() {
            let Some(v) = ser.values.get(i).copied().flatten() else { continue };
            let bx = gx + bar_w * j as f64;
            let (y0, y1) = (y(v.max(0.0)), y(v.min(0.0)));
            let _ = writeln!(
                s,
                r#"<rect x="{bx:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                bar_w - 2.0,
                (y1 - y0).max(0.5),
                PALETTE[j % PALETTE.len()]
            );
            if let Some(e) = ser.errors.get(i).copied().flatten() {
                let cx = bx + (bar_w - 2.0) / 2.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                    y(v + e),
                    y(v - e)
                );
            }
        }
        if let Some(&n) = stars.get(i).filter(|&&n| n > 0) {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                gx + group_w / 2.0 - 7.0,
                top - 4.0,
                "*".repeat(n as usize)
            );
        }
        let _ = writeln!(
            s,
            r#"<text transform="translate({:.1},{}) rotate(45)">{}</text>"#,
            gx + 10.0,
            h - bottom + 14.0,
            escape(x)
        );
    }
    for (j, ser) in series.iter().enumerate() {
        let ly = h - 14.0 - 14.0 * (series.len() - 1 - j) as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, left, ly - 9.0, PALETTE[j % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, left + 14.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

/// Plain-text table for terminals, optionally in percent.
pub fn display_profile(p: &GroupProfile, percent: bool) -> String {
    let scale = if percent { 100.0 } else { 1.0 };
    let unit = if percent { " (%)" } else { "" };
    let mut s = format!("{} -> {}{unit}\n", p.speaker_group, p.target_group);
    for m in Metric::all() {
        let v = p.value(m);
        let shown = v.mean.map_or("undefined".to_string(), |x| format!("{:.4}", x * scale));
        let _ = writeln!(s, "  {:<22} {:>10}  n={}", m.name(), shown, v.population);
    }
    s
}

pub fn display_comparison(r: &ComparisonReport, percent: bool) -> String {
    let scale = if percent { 100.0 } else { 1.0 };
    let unit = if percent { " (%)" } else { "" };
    let mut s = format!("{} vs {}{unit}\n", r.group_a, r.group_b);
    for e in &r.entries {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.4}", x * scale));
        let test = e.test.as_ref().map_or("untestable".to_string(), |t| {
            format!("t={:.3} p={:.2e} {}", t.t_stat, t.p_value, "*".repeat(t.stars as usize))
        });
        let _ = writeln!(s, "  {:<22} {:>10} {:>10}  {test}", e.metric.name(), f(e.mean_a), f(e.mean_b));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::GroupValue;

    #[test]
    fn profile_csv_has_eleven_rows_and_units_flag() {
        let gv = GroupValue {
            mean: Some(0.01),
            population: 3,
            n_exchanges: 9,
        };
        let p = GroupProfile {
            speaker_group: "a,b".into(),
            target_group: "c".into(),
            exchanges_description: String::new(),
            n_exchanges: 9,
            markers: [gv; 8],
            agg1: gv,
            agg2: GroupValue { mean: None, ..gv },
            agg3: gv,
            speakers: vec![],
        };
        let text = profile_csv(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# units: natural");
        assert_eq!(lines.len(), 13);
        assert!(lines[2].starts_with("\"a,b\",c,articles,0.01,3,9"));
        assert!(lines[11].contains("aggregated_2,,3"));
        assert!(display_profile(&p, true).contains("1.0000"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = bar_chart_svg(
            "t <x>",
            &["a".into(), "b".into()],
            &[Series {
                name: "g".into(),
                values: vec![Some(0.1), None],
                errors: vec![Some(0.01), None],
            }],
            &[2, 0],
            false,
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("t &lt;x&gt;"));
        assert!(s.contains(">**<"));
    }
}
