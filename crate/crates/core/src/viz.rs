//! Plot data: classical MDS, simplex densities, CSV and SVG output.
//!
//! MDS coordinates are only defined up to rigid motion; each axis is flipped
//! so that its first nonzero loading is positive.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::clustering::DistanceMatrix;
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::slates::{simplex_map, SimplexPoint, SlatePartition};

const SIGN_EPS: f64 = 1e-9;

/// Planar classical MDS of a symmetric distance matrix.
pub fn classical_mds(d: &DistanceMatrix) -> Result<Vec<[f64; 2]>> {
    let n = d.rows();
    if d.cols() != n {
        return Err(Error::param("MDS needs a square matrix"));
    }
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if v != d.get(j, i) || v < 0.0 || (i == j && v != 0.0) {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // B = -1/2 J D^2 J
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eigen = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let mut axes = [vec![0.0; n], vec![0.0; n]];
    for (axis, &col) in axes.iter_mut().zip(&order) {
        let scale = eigen.eigenvalues[col].max(0.0).sqrt();
        let v = eigen.eigenvectors.column(col);
        let sign = v.iter().find(|x| x.abs() > SIGN_EPS).map_or(1.0, |x| x.signum());
        for i in 0..n {
            axis[i] = sign * v[i] * scale;
        }
    }
    Ok((0..n).map(|i| [axes[0][i], axes[1][i]]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub weight: u64,
    pub color_key: Option<String>,
}

/// One point per ballot type of `p`, weighted by multiplicity.
pub fn profile_points(p: &Profile, coords: &[[f64; 2]], color_keys: Option<&[String]>) -> Result<Vec<PlotPoint>> {
    if coords.len() != p.num_types() {
        return Err(Error::param("one coordinate pair per ballot type is required"));
    }
    Ok(p.iter()
        .zip(coords)
        .enumerate()
        .map(|(i, ((b, w), c))| PlotPoint {
            id: b.to_index_string(),
            x: c[0],
            y: c[1],
            weight: w,
            color_key: color_keys.map(|k| k[i].clone()),
        })
        .collect())
}

/// `id,x,y,weight,color_key`
pub fn points_csv(points: &[PlotPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::param(e.to_string());
    w.write_record(["id", "x", "y", "weight", "color_key"]).map_err(io)?;
    for p in points {
        w.write_record([
            p.id.clone(),
            p.x.to_string(),
            p.y.to_string(),
            p.weight.to_string(),
            p.color_key.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::param(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// Voter-weighted simplex points of the profile, merged when equal and
/// sorted by coordinates.
pub fn simplex_density(p: &Profile, s: &SlatePartition) -> Vec<(SimplexPoint, u64)> {
    let mut merged: BTreeMap<Vec<u64>, (SimplexPoint, u64)> = BTreeMap::new();
    for (b, w) in p.iter() {
        let pt = simplex_map(b, s);
        let key = pt.coords.iter().map(|x| x.to_bits()).collect();
        merged.entry(key).or_insert((pt, 0)).1 += w;
    }
    let mut out: Vec<(SimplexPoint, u64)> = merged.into_values().collect();
    out.sort_by(|a, b| {
        a.0.coords
            .iter()
            .zip(&b.0.coords)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// `v1,…,vk,weight`
pub fn simplex_csv(density: &[(SimplexPoint, u64)], k: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::param(e.to_string());
    let mut header: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
    header.push("weight".into());
    w.write_record(&header).map_err(io)?;
    for (pt, weight) in density {
        let mut rec: Vec<String> = pt.coords.iter().map(|x| x.to_string()).collect();
        rec.push(weight.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    into_string(w)
}

/// Places simplex points in the plane: a unit segment for two slates, an
/// equilateral triangle for three.
pub fn simplex_plane_points(density: &[(SimplexPoint, u64)]) -> Result<Vec<PlotPoint>> {
    let h = 3f64.sqrt() / 2.0;
    density
        .iter()
        .enumerate()
        .map(|(i, (pt, w))| {
            let (x, y) = match pt.coords.as_slice() {
                [_, b] => (*b, 0.0),
                [_, b, c] => (b + 0.5 * c, h * c),
                _ => return Err(Error::param("simplex plots need two or three slates")),
            };
            Ok(PlotPoint { id: i.to_string(), x, y, weight: *w, color_key: Some((pt.nearest_vertex() + 1).to_string()) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Radius of the heaviest marker.
    pub max_radius: f64,
    pub palette: Vec<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 640.0,
            height: 640.0,
            margin: 40.0,
            max_radius: 24.0,
            palette: ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
                .map(String::from)
                .to_vec(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG scatter plot; marker area is proportional to weight.
pub fn render_svg(points: &[PlotPoint], style: &SvgStyle) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = style.height
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if !points.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        // equal scale on both axes keeps distances honest
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let inner = (style.width.min(style.height) - 2.0 * style.margin).max(1.0);
        let scale = inner / span;
        let max_w = points.iter().map(|p| p.weight).max().unwrap_or(1).max(1) as f64;
        let mut keys: Vec<&str> = points.iter().filter_map(|p| p.color_key.as_deref()).collect();
        keys.sort_unstable();
        keys.dedup();
        for p in points {
            let cx = style.margin + (p.x - x0) * scale;
            let cy = style.height - style.margin - (p.y - y0) * scale;
            let r = style.max_radius * (p.weight as f64 / max_w).sqrt();
            let color = match &p.color_key {
                Some(k) if !style.palette.is_empty() => {
                    let idx = keys.binary_search(&k.as_str()).unwrap_or(0);
                    style.palette[idx % style.palette.len()].as_str()
                }
                _ => "#333333",
            };
            writeln!(
                out,
                r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="{color}" fill-opacity="0.6"><title>{} ({})</title></circle>"#,
                escape(&p.id),
                p.weight
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballot::{enumerate_ballots, Ballot};
    use crate::clustering::{distance_matrix, DistanceSpec};
    use crate::exec::Exec;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn planar_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    #[test]
    fn equilateral_triangle() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let pts = classical_mds(&d).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((planar_dist(pts[i], pts[j]) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_points() {
        let n = 6;
        let d = DistanceMatrix::from_rows((0..n).map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect()).collect());
        let pts = classical_mds(&d).unwrap();
        assert!(pts.iter().all(|p| p[1].abs() < 1e-6));
        assert!(pts[0][0] > 0.0, "first loading is positive");
        assert!((pts[0][0] - pts[5][0]).abs() - 5.0 < 1e-9);
    }

    #[test]
    fn rejects_asymmetric() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(classical_mds(&d).is_err());
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    fn mds_correlation(p: &Profile) -> f64 {
        let d = distance_matrix(p, DistanceSpec::BordaPessimistic, Exec::Serial).unwrap();
        let pts = classical_mds(&d).unwrap();
        let (mut input, mut output) = (Vec::new(), Vec::new());
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                input.push(d.get(i, j));
                output.push(planar_dist(pts[i], pts[j]));
            }
        }
        pearson(&input, &output)
    }

    #[test]
    fn borda_distances_survive_projection() {
        let all = enumerate_ballots(4).unwrap();
        let mut rs = Vec::new();
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut sample = all.clone();
            sample.shuffle(&mut rng);
            sample.truncate(10);
            rs.push(mds_correlation(&Profile::from_ballots(4, sample.into_iter().map(|b| (1, b))).unwrap()));
        }
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        assert!(mean >= 0.8, "{rs:?}");
        assert!(rs.iter().all(|&r| r >= 0.75), "{rs:?}");
        // the whole of Ω₄ is harder to flatten
        let whole = mds_correlation(&Profile::from_ballots(4, all.into_iter().map(|b| (1, b))).unwrap());
        assert!(whole >= 0.7, "{whole}");
    }

    #[test]
    fn permutation_equivariance() {
        let rows = vec![vec![0.0, 3.0, 4.0, 5.0], vec![3.0, 0.0, 5.0, 4.0], vec![4.0, 5.0, 0.0, 3.0], vec![5.0, 4.0, 3.0, 0.0]];
        let base = classical_mds(&DistanceMatrix::from_rows(rows.clone())).unwrap();
        let perm = [2, 0, 3, 1];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| rows[i][j]).collect()).collect();
        let moved = classical_mds(&DistanceMatrix::from_rows(permuted)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let d0 = planar_dist(base[perm[a]], base[perm[b]]);
                let d1 = planar_dist(moved[a], moved[b]);
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
        assert_eq!(classical_mds(&DistanceMatrix::from_rows(rows.clone())).unwrap(), base);
    }

    #[test]
    fn density_examples() {
        let s = SlatePartition::new(
            vec![vec![crate::ballot::CandidateId(0)], vec![crate::ballot::CandidateId(1), crate::ballot::CandidateId(2)]],
            3,
            crate::slates::SlateMethod::SimplexOptimal,
        )
        .unwrap();
        let unanimous = Profile::from_ballots(3, [(7, Ballot::from_letters("A", 3).unwrap())]).unwrap();
        let d = simplex_density(&unanimous, &s);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].0.coords.clone(), d[0].1), (vec![1.0, 0.0], 7));
        let mixed = Profile::from_ballots(
            3,
            [(2, Ballot::from_letters("A", 3).unwrap()), (3, Ballot::from_letters("B", 3).unwrap()), (1, Ballot::from_letters("CBA", 3).unwrap())],
        )
        .unwrap();
        let d = simplex_density(&mixed, &s);
        assert_eq!(d.iter().map(|x| x.1).sum::<u64>(), 6);
        let csv = simplex_csv(&d, 2).unwrap();
        assert!(csv.starts_with("v1,v2,weight\n"));
        assert_eq!(simplex_plane_points(&d).unwrap().len(), d.len());
    }

    #[test]
    fn svg_output() {
        let empty = render_svg(&[], &SvgStyle::default());
        assert!(empty.starts_with("<svg") && empty.trim_end().ends_with("</svg>"));
        assert!(!empty.contains("<circle"));
        let one = PlotPoint { id: "0>1".into(), x: 1.0, y: 2.0, weight: 9, color_key: None };
        let svg = render_svg(std::slice::from_ref(&one), &SvgStyle::default());
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(r#"r="24.000""#));
        assert!(svg.contains("0&gt;1"));
        let light = PlotPoint { weight: 1, x: 0.0, ..one.clone() };
        let svg = render_svg(&[one, light], &SvgStyle::default());
        assert!(svg.contains(r#"r="8.000""#));
        assert_well_formed(&svg);
    }

    /// Minimal tag-balance check: every element closes in order.
    fn assert_well_formed(xml: &str) {
        let mut stack = Vec::new();
        let mut rest = xml;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unterminated tag") + start;
            let tag = &rest[start + 1..end];
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop(), Some(name.to_string()));
            } else if !tag.ends_with('/') {
                stack.push(tag.split_whitespace().next().unwrap().to_string());
            }
            rest = &rest[end + 1..];
        }
        assert!(stack.is_empty());
    }

    #[test]
    fn csv_quoting() {
        let pts = vec![PlotPoint { id: "a,b".into(), x: 0.5, y: -1.0, weight: 3, color_key: Some("Red".into()) }];
        assert_eq!(points_csv(&pts).unwrap(), "id,x,y,weight,color_key\n\"a,b\",0.5,-1,3,Red\n");
    }
}
