//! Minimal self-contained SVG emitters for profile line charts and stacked
//! probability bars. No plotting dependency; output is deterministic.

use std::fmt::Write as _;

use crate::entrain::{Measure, ProfileCondition, ProfileTable};
use crate::features::{FeatureSet, FEATURES};
use crate::ingest::{Gender, Role};
use crate::stats::CondenseRow;

const PANEL_W: f64 = 360.0;
const ROW_H: f64 = 18.0;
const MARGIN_L: f64 = 110.0;
const MARGIN_T: f64 = 40.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct ConditionStyle {
    cond: ProfileCondition,
    label: &'static str,
    stroke: &'static str,
    width: f64,
    dash: &'static str,
}

fn condition_styles() -> [ConditionStyle; 6] {
    [
        ConditionStyle {
            cond: ProfileCondition::AdjacentBy(Role::Describer, Gender::Female),
            label: "a d_f",
            stroke: "#1b6ca8",
            width: 2.4,
            dash: "",
        },
        ConditionStyle {
            cond: ProfileCondition::AdjacentBy(Role::Describer, Gender::Male),
            label: "a d_m",
            stroke: "#1b6ca8",
            width: 2.4,
            dash: "6 3",
        },
        ConditionStyle {
            cond: ProfileCondition::AdjacentBy(Role::Follower, Gender::Female),
            label: "a f_f",
            stroke: "#5aa453",
            width: 1.2,
            dash: "",
        },
        ConditionStyle {
            cond: ProfileCondition::AdjacentBy(Role::Follower, Gender::Male),
            label: "a f_m",
            stroke: "#5aa453",
            width: 1.2,
            dash: "6 3",
        },
        ConditionStyle {
            cond: ProfileCondition::NonAdjacent,
            label: "na",
            stroke: "#444444",
            width: 1.2,
            dash: "8 3 2 3",
        },
        ConditionStyle {
            cond: ProfileCondition::Unrelated,
            label: "u",
            stroke: "#444444",
            width: 1.2,
            dash: "2 3",
        },
    ]
}

/// Profile chart of one feature set: features on the y axis, mean distance
/// on the x axis, one polyline per condition, proximity and synchrony side
/// by side.
pub fn profile_svg(table: &ProfileTable, set: FeatureSet) -> String {
    let features: Vec<usize> = FEATURES
        .iter()
        .enumerate()
        .filter(|(_, f)| f.set == set)
        .map(|(i, _)| i)
        .collect();
    let panel_h = ROW_H * features.len() as f64;
    let width = MARGIN_L + 2.0 * (PANEL_W + 60.0);
    let height = MARGIN_T + panel_h + 50.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"16\" font-size=\"14\">{} distance profile</text>",
        MARGIN_L,
        esc(set.name())
    );

    for (panel, measure) in [Measure::Proximity, Measure::Synchrony].iter().enumerate() {
        let x0 = MARGIN_L + panel as f64 * (PANEL_W + 60.0);
        // Scale: maximum mean across drawn cells.
        let mut max_v = 0.0f64;
        for &f in &features {
            for style in condition_styles() {
                if let Some(m) = table.cell(f, *measure, style.cond).mean {
                    max_v = max_v.max(m);
                }
            }
        }
        if max_v <= 0.0 {
            max_v = 1.0;
        }
        let _ = writeln!(
            out,
            "<text x=\"{x0}\" y=\"{}\" font-size=\"12\">{}</text>",
            MARGIN_T - 10.0,
            measure.code()
        );
        let _ = writeln!(
            out,
            "<rect x=\"{x0}\" y=\"{MARGIN_T}\" width=\"{PANEL_W}\" height=\"{panel_h}\" \
             fill=\"none\" stroke=\"#999\"/>"
        );
        for (row, &f) in features.iter().enumerate() {
            let y = MARGIN_T + (row as f64 + 0.5) * ROW_H;
            if panel == 0 {
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
                    MARGIN_L - 6.0,
                    y,
                    esc(FEATURES[f].name)
                );
            }
        }
        for style in condition_styles() {
            let mut points = Vec::new();
            for (row, &f) in features.iter().enumerate() {
                if let Some(m) = table.cell(f, *measure, style.cond).mean {
                    let x = x0 + m / max_v * (PANEL_W - 10.0);
                    let y = MARGIN_T + (row as f64 + 0.5) * ROW_H;
                    points.push(format!("{x:.1},{y:.1}"));
                }
            }
            if points.len() >= 2 {
                let dash = if style.dash.is_empty() {
                    String::new()
                } else {
                    format!(" stroke-dasharray=\"{}\"", style.dash)
                };
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"{} points=\"{}\"/>",
                    style.stroke,
                    style.width,
                    dash,
                    points.join(" ")
                );
            }
        }
        // Axis caption.
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">mean distance (0..{max_v:.3})</text>",
            x0 + PANEL_W / 2.0,
            MARGIN_T + panel_h + 16.0
        );
    }

    // Legend.
    let mut lx = MARGIN_L;
    let ly = MARGIN_T + panel_h + 34.0;
    for style in condition_styles() {
        let dash = if style.dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{}\"", style.dash)
        };
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"{}\"{}/>",
            lx + 28.0,
            style.stroke,
            style.width,
            dash
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            lx + 33.0,
            ly + 4.0,
            style.label
        );
        lx += 100.0;
    }
    out.push_str("</svg>\n");
    out
}

/// Stacked probability bars of one condensation table: per group four bars
/// (entrain/disentrain by proximity/synchrony) with height = probability.
pub fn condense_svg(rows: &[CondenseRow], title: &str) -> String {
    let bar_w = 18.0;
    let group_w = 4.0 * bar_w + 30.0;
    let chart_h = 160.0;
    let width = 60.0 + rows.len() as f64 * group_w;
    let height = chart_h + 90.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(out, "<text x=\"10\" y=\"16\" font-size=\"14\">{}</text>", esc(title));
    let y0 = 30.0;
    let colors = ["#1b6ca8", "#5aa453", "#c0504d", "#e8a33d"];
    let labels = ["prox", "sync", "-prox", "-sync"];
    for (g, row) in rows.iter().enumerate() {
        let gx = 40.0 + g as f64 * group_w;
        let values = [
            row.entrain_prox,
            row.entrain_sync,
            row.disentrain_prox,
            row.disentrain_sync,
        ];
        for (b, v) in values.iter().enumerate() {
            let x = gx + b as f64 * bar_w;
            if let Some(v) = v {
                let h = v.clamp(0.0, 1.0) * chart_h;
                let _ = writeln!(
                    out,
                    "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"/>",
                    y0 + chart_h - h,
                    bar_w - 3.0,
                    colors[b]
                );
            } else {
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">-</text>",
                    x + bar_w / 2.0,
                    y0 + chart_h - 4.0
                );
            }
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            gx + 2.0 * bar_w,
            y0 + chart_h + 14.0,
            esc(&row.group)
        );
    }
    let _ = writeln!(
        out,
        "<line x1=\"40\" y1=\"{y0}\" x2=\"40\" y2=\"{:.1}\" stroke=\"#444\"/>",
        y0 + chart_h
    );
    let _ = writeln!(out, "<text x=\"10\" y=\"{:.1}\">1.0</text>", y0 + 4.0);
    let _ = writeln!(out, "<text x=\"10\" y=\"{:.1}\">0.0</text>", y0 + chart_h + 4.0);
    let mut lx = 40.0;
    for (b, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "<rect x=\"{lx}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            y0 + chart_h + 26.0,
            colors[b]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\">{}</text>",
            lx + 14.0,
            y0 + chart_h + 35.0,
            label
        );
        lx += 70.0;
    }
    out.push_str("</svg>\n");
    out
}
