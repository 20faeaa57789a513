//! CSV and SVG output.

use std::fmt::Write as _;

use super::{bin_edges, BinnedRmse, EvalError, TTest, TileMap, N_FA_BINS};
use crate::linalg::{self, Vec3};

/// `bin_lo,bin_hi,count,rmse`; empty bins print `nan`.
pub fn binned_csv(r: &BinnedRmse) -> String {
    let mut s = String::from("bin_lo,bin_hi,count,rmse\n");
    for b in 0..N_FA_BINS {
        let (lo, hi) = bin_edges(b);
        writeln!(s, "{lo},{hi},{},{}", r.count[b], fmt_f(r.rmse[b])).unwrap();
    }
    s
}

/// `subject,bin_lo,bin_hi,count,rmse`, one row per subject and bin.
pub fn subject_binned_csv(per_subject: &[(usize, BinnedRmse)]) -> String {
    let mut s = String::from("subject,bin_lo,bin_hi,count,rmse\n");
    for (subj, r) in per_subject {
        for b in 0..N_FA_BINS {
            let (lo, hi) = bin_edges(b);
            writeln!(s, "{subj},{lo},{hi},{},{}", r.count[b], fmt_f(r.rmse[b])).unwrap();
        }
    }
    s
}

/// `tile_id,cx,cy,cz,count,mean_abs_err`.
pub fn tile_map_csv(map: &TileMap) -> String {
    let mut s = String::from("tile_id,cx,cy,cz,count,mean_abs_err\n");
    for (i, t) in map.tiles.iter().enumerate() {
        let [x, y, z] = t.centroid;
        writeln!(s, "{i},{x:.6},{y:.6},{z:.6},{},{}", map.counts[i], fmt_f(map.mean_abs_err[i])).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTestRow {
    pub model_a: String,
    pub model_b: String,
    pub bin: usize,
    pub test: Option<TTest>,
}

/// `model_a,model_b,bin,t,p`; bins without enough pairs print `nan`.
pub fn ttest_csv(rows: &[TTestRow]) -> String {
    let mut s = String::from("model_a,model_b,bin,t,p\n");
    for r in rows {
        let (t, p) = r.test.map_or((f64::NAN, f64::NAN), |t| (t.t, t.p));
        writeln!(s, "{},{},{},{},{}", r.model_a, r.model_b, r.bin, fmt_f(t), fmt_f(p)).unwrap();
    }
    s
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

/// `voxel,fa_pred`, in dataset order.
pub fn predictions_csv(pred: &[f64]) -> String {
    let mut s = String::from("voxel,fa_pred\n");
    for (i, p) in pred.iter().enumerate() {
        writeln!(s, "{i},{p:e}").unwrap();
    }
    s
}

pub fn parse_predictions(text: &str) -> Result<Vec<f64>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "voxel,fa_pred" => {}
        _ => return Err(EvalError::Parse { line: 1, msg: "expected header voxel,fa_pred".into() }),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| EvalError::Parse { line: n + 1, msg: msg.into() };
        let (idx, val) = line.split_once(',').ok_or_else(|| err("expected two fields"))?;
        if idx.trim().parse::<usize>().ok() != Some(out.len()) {
            return Err(err("voxel indices must count up from 0"));
        }
        out.push(val.trim().parse::<f64>().map_err(|e| err(&e.to_string()))?);
    }
    Ok(out)
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 400.0;
const DISC_R: f64 = 160.0;
const RAMP_LO: [f64; 3] = [33.0, 102.0, 172.0];
const RAMP_HI: [f64; 3] = [178.0, 24.0, 43.0];
const EMPTY: &str = "#d9d9d9";
const EDGE_STEPS: usize = 6;

fn ramp(v: f64, lo: f64, hi: f64) -> String {
    if v.is_nan() {
        return EMPTY.into();
    }
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let c: Vec<u8> = (0..3).map(|k| (RAMP_LO[k] + t * (RAMP_HI[k] - RAMP_LO[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn arc_points(a: Vec3, b: Vec3) -> impl Iterator<Item = Vec3> {
    (0..EDGE_STEPS).map(move |k| {
        let t = k as f64 / EDGE_STEPS as f64;
        let p = linalg::add(&linalg::scale(&a, 1.0 - t), &linalg::scale(&b, t));
        linalg::scale(&p, 1.0 / linalg::norm(&p))
    })
}

/// Two orthographic discs, seen from `+z` and from `+y`. Every face is
/// coloured by the tile holding its folded centroid, so antipodal faces
/// share a colour.
pub fn tile_map_svg(map: &TileMap, title: &str) -> String {
    let (lo, hi) = map.value_range();
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#)
        .unwrap();
    writeln!(
        s,
        "<!-- mean |pred-gt| per tile for voxels with gt FA > {}. Linear RGB ramp from rgb({},{},{}) at {lo:.4} to \
         rgb({},{},{}) at {hi:.4}; empty tiles {EMPTY}. Left: view from +z (x right, y up). Right: view from +y \
         (-x right, z up). -->",
        map.fa_threshold, RAMP_LO[0], RAMP_LO[1], RAMP_LO[2], RAMP_HI[0], RAMP_HI[1], RAMP_HI[2]
    )
    .unwrap();
    writeln!(s, r#"<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, SVG_W / 2.0, xml_escape(title))
        .unwrap();
    let views: [(f64, Vec3, Vec3, Vec3, &str); 2] = [
        (200.0, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], "+z (superior)"),
        (600.0, [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], "+y (anterior)"),
    ];
    let face_value: Vec<f64> =
        map.tiles.iter().map(|t| map.mean_abs_err[super::tile_index(&map.tiles, &t.centroid)]).collect();
    for (cx, view, right, up, label) in views {
        let cy = 210.0;
        writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="{DISC_R}" fill="{EMPTY}" stroke="black"/>"#).unwrap();
        for (tile, v) in map.tiles.iter().zip(&face_value) {
            if linalg::dot(&tile.centroid, &view) <= 0.0 {
                continue;
            }
            let [a, b, c] = &tile.vertices;
            let pts: Vec<String> = arc_points(*a, *b)
                .chain(arc_points(*b, *c))
                .chain(arc_points(*c, *a))
                .map(|p| format!("{:.2},{:.2}", cx + DISC_R * linalg::dot(&p, &right), cy - DISC_R * linalg::dot(&p, &up)))
                .collect();
            writeln!(s, r#"<polygon points="{}" fill="{}" stroke="white" stroke-width="0.5"/>"#, pts.join(" "), ramp(*v, lo, hi))
                .unwrap();
        }
        writeln!(s, r#"<text x="{cx}" y="392" font-family="sans-serif" font-size="13" text-anchor="middle">{label}</text>"#)
            .unwrap();
    }
    writeln!(s, r#"<text x="8" y="392" font-family="sans-serif" font-size="11">min {lo:.4}</text>"#).unwrap();
    writeln!(s, r#"<text x="792" y="392" font-family="sans-serif" font-size="11" text-anchor="end">max {hi:.4}</text>"#)
        .unwrap();
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
